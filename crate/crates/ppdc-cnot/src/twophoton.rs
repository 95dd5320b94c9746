//! Two-photon evolution through a 4-mode transfer matrix.
//!
//! One photon enters on each rail. For indistinguishable photons the two
//! ways of routing the pair to a given output interfere at the amplitude
//! level (the Hong-Ou-Mandel effect); for distinguishable photons — e.g.
//! arriving with a temporal mismatch — the two routings add as classical
//! probabilities while each photon still propagates coherently. A partially
//! distinguishable pair is the `(1-p)/p` mixture of the two.
//!
//! Outcomes are unordered pairs of occupied output modes. The *coincidence*
//! outcomes, one photon on each rail, are what the post-selected gate keeps.

use num_complex::Complex64;

use crate::circuit::{mode_index, Pol, Rail, TransferMatrix};
use crate::linalg::{c, CMatrix};
use crate::{Error, Result};

/// A single photon's polarization state on one rail.
#[derive(Clone, Debug, PartialEq)]
pub struct PolState {
    amplitudes: [Complex64; 2],
}

impl PolState {
    /// Builds a polarization state, requiring unit norm.
    pub fn new(amplitudes: [Complex64; 2]) -> Result<Self> {
        let norm = (amplitudes[0].norm_sqr() + amplitudes[1].norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::BadNorm { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Horizontal polarization.
    pub fn h() -> Self {
        Self {
            amplitudes: [c(1.0, 0.0), c(0.0, 0.0)],
        }
    }

    /// Vertical polarization.
    pub fn v() -> Self {
        Self {
            amplitudes: [c(0.0, 0.0), c(1.0, 0.0)],
        }
    }

    /// `(H + V)/sqrt(2)`.
    pub fn plus() -> Self {
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { amplitudes: [s, s] }
    }

    /// `(H - V)/sqrt(2)`.
    pub fn minus() -> Self {
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: [s, -s],
        }
    }

    /// Amplitudes `[H, V]`.
    pub fn amplitudes(&self) -> &[Complex64; 2] {
        &self.amplitudes
    }
}

/// A photon pair entering the chip: one photon per rail, each in a definite
/// polarization state (a product input).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonInput {
    /// Photon launched into the control rail.
    pub photon_c: PolState,
    /// Photon launched into the target rail.
    pub photon_t: PolState,
}

impl TwoPhotonInput {
    pub fn new(photon_c: PolState, photon_t: PolState) -> Self {
        Self { photon_c, photon_t }
    }
}

/// Joint polarization amplitude of the photon pair: `w[i][j]` is the
/// amplitude for the control-rail photon to be in polarization `i` and the
/// target-rail photon in `j`. Allows polarization-entangled inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct JointInput {
    w: [[Complex64; 2]; 2],
}

impl JointInput {
    /// Builds a joint input, requiring unit norm.
    pub fn new(w: [[Complex64; 2]; 2]) -> Result<Self> {
        let norm: f64 = w.iter().flatten().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::BadNorm { norm });
        }
        Ok(Self { w })
    }

    /// Entry `(control polarization, target polarization)`.
    pub fn amplitude(&self, i: usize, j: usize) -> Complex64 {
        self.w[i][j]
    }
}

impl From<&TwoPhotonInput> for JointInput {
    fn from(input: &TwoPhotonInput) -> Self {
        let u = input.photon_c.amplitudes();
        let v = input.photon_t.amplitudes();
        Self {
            w: [[u[0] * v[0], u[0] * v[1]], [u[1] * v[0], u[1] * v[1]]],
        }
    }
}

/// Degree of distinguishability of the photon pair: with probability `p`
/// the pair behaves classically (no two-photon interference).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistinguishabilityModel {
    p: f64,
}

impl DistinguishabilityModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::OutOfRange {
                name: "p",
                value: p,
            });
        }
        Ok(Self { p })
    }

    /// Fully indistinguishable photons (`p = 0`).
    pub fn indistinguishable() -> Self {
        Self { p: 0.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Ordered-pair output amplitudes: `g[k][l]` is the amplitude for the
/// control-rail photon to exit in mode `k` and the target-rail photon in
/// mode `l`.
fn ordered_output(m: &TransferMatrix, input: &JointInput) -> CMatrix {
    let mm = m.matrix();
    let mut g = CMatrix::zeros(4, 4);
    // Input support: control photon on modes {0, 1}, target photon on {2, 3}.
    for (i, row) in [0usize, 1].iter().enumerate() {
        for (j, col) in [2usize, 3].iter().enumerate() {
            let w = input.amplitude(i, j);
            if w == c(0.0, 0.0) {
                continue;
            }
            for k in 0..4 {
                for l in 0..4 {
                    g[(k, l)] += mm[(k, *row)] * mm[(l, *col)] * w;
                }
            }
        }
    }
    g
}

/// Probabilities of every unordered two-photon outcome.
///
/// `pair[k][l]` (for `k < l`) is the probability of one photon in mode `k`
/// and one in mode `l`; `double[k]` the probability of both photons in `k`.
/// For passive non-unitary matrices the probabilities sum to less than one,
/// the remainder being lost to the dump ports.
#[derive(Clone, Debug)]
pub struct PairOutcomes {
    pub pair: [[f64; 4]; 4],
    pub double: [f64; 4],
}

impl PairOutcomes {
    /// Total probability over all outcomes (1 for unitary transfer).
    pub fn total(&self) -> f64 {
        let mut sum = 0.0;
        for k in 0..4 {
            sum += self.double[k];
            for l in (k + 1)..4 {
                sum += self.pair[k][l];
            }
        }
        sum
    }
}

fn outcomes_indistinguishable(g: &CMatrix) -> PairOutcomes {
    let mut out = PairOutcomes {
        pair: [[0.0; 4]; 4],
        double: [0.0; 4],
    };
    for k in 0..4 {
        // Both photons in mode k: amplitude sqrt(2) g_kk onto the
        // normalized two-photon Fock state.
        out.double[k] = 2.0 * g[(k, k)].norm_sqr();
        for l in (k + 1)..4 {
            out.pair[k][l] = (g[(k, l)] + g[(l, k)]).norm_sqr();
        }
    }
    out
}

fn outcomes_distinguishable(g: &CMatrix) -> PairOutcomes {
    let mut out = PairOutcomes {
        pair: [[0.0; 4]; 4],
        double: [0.0; 4],
    };
    for k in 0..4 {
        out.double[k] = g[(k, k)].norm_sqr();
        for l in (k + 1)..4 {
            // The two photon-to-mode assignments are distinguishable events.
            out.pair[k][l] = g[(k, l)].norm_sqr() + g[(l, k)].norm_sqr();
        }
    }
    out
}

/// Full outcome distribution for a given distinguishability.
pub fn pair_outcomes(
    m: &TransferMatrix,
    input: &JointInput,
    d: DistinguishabilityModel,
) -> PairOutcomes {
    let g = ordered_output(m, input);
    let ind = outcomes_indistinguishable(&g);
    if d.p() == 0.0 {
        return ind;
    }
    let dist = outcomes_distinguishable(&g);
    let mut out = PairOutcomes {
        pair: [[0.0; 4]; 4],
        double: [0.0; 4],
    };
    let p = d.p();
    for k in 0..4 {
        out.double[k] = (1.0 - p) * ind.double[k] + p * dist.double[k];
        for l in (k + 1)..4 {
            out.pair[k][l] = (1.0 - p) * ind.pair[k][l] + p * dist.pair[k][l];
        }
    }
    out
}

/// Post-selected coincidence statistics: exactly one photon on each rail.
///
/// `probs` are conditional probabilities of the polarization outcomes
/// `(H,H), (H,V), (V,H), (V,V)` (control-rail polarization first), summing
/// to one whenever `success_prob > 0`. A distribution with zero success
/// probability is "empty": all conditional probabilities are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceDistribution {
    pub probs: [f64; 4],
    pub success_prob: f64,
}

impl CoincidenceDistribution {
    /// True when post-selection removed every outcome.
    pub fn is_empty(&self) -> bool {
        self.success_prob == 0.0
    }

    fn from_outcomes(out: &PairOutcomes) -> Self {
        let mut weights = [0.0; 4];
        for (slot, (pc, pt)) in coincidence_order().iter().enumerate() {
            let k = mode_index(Rail::Control, *pc);
            let l = mode_index(Rail::Target, *pt);
            let (a, b) = (k.min(l), k.max(l));
            weights[slot] = out.pair[a][b];
        }
        let success: f64 = weights.iter().sum();
        if success <= 0.0 {
            return Self {
                probs: [0.0; 4],
                success_prob: 0.0,
            };
        }
        Self {
            probs: weights.map(|w| w / success),
            success_prob: success,
        }
    }
}

/// Order of the coincidence outcomes in [`CoincidenceDistribution::probs`].
pub fn coincidence_order() -> [(Pol, Pol); 4] {
    [
        (Pol::H, Pol::H),
        (Pol::H, Pol::V),
        (Pol::V, Pol::H),
        (Pol::V, Pol::V),
    ]
}

/// Evolves a fully indistinguishable photon pair.
pub fn evolve_indistinguishable(
    m: &TransferMatrix,
    input: &TwoPhotonInput,
) -> CoincidenceDistribution {
    let joint = JointInput::from(input);
    CoincidenceDistribution::from_outcomes(&pair_outcomes(
        m,
        &joint,
        DistinguishabilityModel::indistinguishable(),
    ))
}

/// Evolves a fully distinguishable photon pair (no two-photon interference).
pub fn evolve_distinguishable(
    m: &TransferMatrix,
    input: &TwoPhotonInput,
) -> CoincidenceDistribution {
    let joint = JointInput::from(input);
    let d = DistinguishabilityModel::new(1.0).expect("1 is in range");
    CoincidenceDistribution::from_outcomes(&pair_outcomes(m, &joint, d))
}

/// Evolves a partially distinguishable pair: outcome weights are
/// `(1-p) * indistinguishable + p * distinguishable`, combined before the
/// post-selection renormalization.
pub fn evolve_mixture(
    m: &TransferMatrix,
    input: &TwoPhotonInput,
    d: DistinguishabilityModel,
) -> CoincidenceDistribution {
    let joint = JointInput::from(input);
    CoincidenceDistribution::from_outcomes(&pair_outcomes(m, &joint, d))
}

/// Coincidence amplitudes of an indistinguishable pair over the outcomes of
/// [`coincidence_order`], *unnormalized*: squared magnitudes sum to the
/// success probability.
pub fn coincidence_amplitudes(m: &TransferMatrix, input: &JointInput) -> [Complex64; 4] {
    let g = ordered_output(m, input);
    let mut amps = [c(0.0, 0.0); 4];
    for (slot, (pc, pt)) in coincidence_order().iter().enumerate() {
        let k = mode_index(Rail::Control, *pc);
        let l = mode_index(Rail::Target, *pt);
        amps[slot] = g[(k, l)] + g[(l, k)];
    }
    amps
}

/// The two classical routing branches of a distinguishable pair, as
/// unnormalized coincidence amplitude vectors over [`coincidence_order`]:
/// first the branch where the control-rail photon stays on the control rail,
/// then the branch where the photons swap rails.
pub fn distinguishable_branches(
    m: &TransferMatrix,
    input: &JointInput,
) -> ([Complex64; 4], [Complex64; 4]) {
    let g = ordered_output(m, input);
    let mut stay = [c(0.0, 0.0); 4];
    let mut swap = [c(0.0, 0.0); 4];
    for (slot, (pc, pt)) in coincidence_order().iter().enumerate() {
        let k = mode_index(Rail::Control, *pc);
        let l = mode_index(Rail::Target, *pt);
        stay[slot] = g[(k, l)];
        swap[slot] = g[(l, k)];
    }
    (stay, swap)
}

/// Theoretical Hong-Ou-Mandel visibility of a splitter with reflectivity
/// `r`: `V = 2r(1-r) / (r^2 + (1-r)^2)`.
///
/// This is the contrast between the distinguishable coincidence rate
/// `r^2 + (1-r)^2` and the interfering rate `(1 - 2r)^2`. A splitter with
/// `r` of 0 or 1 produces no dip at all, so the degenerate endpoints are
/// rejected along with out-of-range values.
pub fn hom_visibility_theoretical(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange {
            name: "reflectivity",
            value: r,
        });
    }
    let denom = r * r + (1.0 - r) * (1.0 - r);
    Ok(2.0 * r * (1.0 - r) / denom)
}

/// Infers the distinguishable fraction `p` from a measured visibility:
/// the interference contrast scales as `V_meas = (1 - p) V_theo`.
pub fn infer_p(v_measured: f64, v_theoretical: f64) -> Result<DistinguishabilityModel> {
    if v_theoretical <= 0.0
        || v_theoretical > 1.0
        || v_measured < 0.0
        || v_measured > v_theoretical + 1e-12
    {
        return Err(Error::NonphysicalVisibility {
            measured: v_measured,
            theoretical: v_theoretical,
        });
    }
    DistinguishabilityModel::new((1.0 - v_measured / v_theoretical).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_cnot_chip, ideal_couplers, ppdc_transfer, Convention, Ppdc};
    use crate::linalg::{cr, dagger, hermitian_eigen, identity};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn balanced_splitter() -> TransferMatrix {
        ppdc_transfer(&Ppdc::new("bs", 0.5, 0.5).unwrap(), Convention::ImagCross)
    }

    fn both_h() -> TwoPhotonInput {
        TwoPhotonInput::new(PolState::h(), PolState::h())
    }

    fn random_pol(rng: &mut StdRng) -> PolState {
        let raw = [
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        ];
        let norm = (raw[0].norm_sqr() + raw[1].norm_sqr()).sqrt();
        PolState::new([raw[0] / norm, raw[1] / norm]).unwrap()
    }

    fn random_unitary_transfer(rng: &mut StdRng) -> TransferMatrix {
        let g = CMatrix::from_fn(4, 4, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = (&g + dagger(&g)).scale(0.5);
        let (_, vecs) = hermitian_eigen(&h, 1e-9).unwrap();
        TransferMatrix::new(vecs, true).unwrap()
    }

    #[test]
    fn hong_ou_mandel_dip_kills_coincidences() {
        let dist = evolve_indistinguishable(&balanced_splitter(), &both_h());
        assert!(dist.success_prob.abs() < 1e-12, "dip should be exact");
        assert!(dist.is_empty());
    }

    #[test]
    fn distinguishable_balanced_splitter_matches_routing_oracle() {
        // Oracle: enumerate the four classical routings of two photons
        // through a 50:50 splitter. Coincidences need both to stay or both
        // to cross: 1/4 + 1/4 = 1/2.
        let mut oracle = 0.0f64;
        for c_stays in [true, false] {
            for t_stays in [true, false] {
                let coincidence = c_stays == t_stays;
                if coincidence {
                    oracle += 0.25;
                }
            }
        }
        assert!((oracle - 0.5).abs() < 1e-15);

        let dist = evolve_distinguishable(&balanced_splitter(), &both_h());
        assert!((dist.success_prob - oracle).abs() < 1e-12);
        // Both photons H, so the only coincidence outcome is (H, H).
        assert!((dist.probs[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_coincidence_scales_linearly_in_p() {
        for p in [0.0, 0.01, 0.03, 0.25, 1.0] {
            let d = DistinguishabilityModel::new(p).unwrap();
            let dist = evolve_mixture(&balanced_splitter(), &both_h(), d);
            assert!(
                (dist.success_prob - p * 0.5).abs() < 1e-12,
                "coincidence weight at p = {p}"
            );
        }
    }

    #[test]
    fn identity_evolution_is_model_independent() {
        let id = TransferMatrix::new(identity(4), true).unwrap();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..20 {
            let input = TwoPhotonInput::new(random_pol(&mut rng), random_pol(&mut rng));
            let a = evolve_indistinguishable(&id, &input);
            let b = evolve_distinguishable(&id, &input);
            assert!((a.success_prob - 1.0).abs() < 1e-12);
            for i in 0..4 {
                assert!((a.probs[i] - b.probs[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_attenuation_is_model_independent() {
        // Diagonal sub-unitary transfer: no mode mixing, so no two-photon
        // interference regardless of distinguishability.
        let mut m = CMatrix::zeros(4, 4);
        for (i, a) in [0.9, 0.8, 0.7, 0.6].iter().enumerate() {
            m[(i, i)] = cr(*a);
        }
        let t = TransferMatrix::new(m, false).unwrap();
        let mut rng = StdRng::seed_from_u64(43);
        for _ in 0..20 {
            let input = TwoPhotonInput::new(random_pol(&mut rng), random_pol(&mut rng));
            let a = evolve_indistinguishable(&t, &input);
            let b = evolve_distinguishable(&t, &input);
            assert!((a.success_prob - b.success_prob).abs() < 1e-12);
            for i in 0..4 {
                assert!((a.probs[i] - b.probs[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_evolution_conserves_total_probability() {
        let mut rng = StdRng::seed_from_u64(47);
        for _ in 0..200 {
            let m = random_unitary_transfer(&mut rng);
            let input = TwoPhotonInput::new(random_pol(&mut rng), random_pol(&mut rng));
            let joint = JointInput::from(&input);
            for p in [0.0, 0.37, 1.0] {
                let d = DistinguishabilityModel::new(p).unwrap();
                let total = pair_outcomes(&m, &joint, d).total();
                assert!(
                    (total - 1.0).abs() < 1e-10,
                    "total probability {total} at p = {p}"
                );
            }
        }
    }

    #[test]
    fn mixture_weights_interpolate_endpoints() {
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..50 {
            let m = random_unitary_transfer(&mut rng);
            let input = TwoPhotonInput::new(random_pol(&mut rng), random_pol(&mut rng));
            let joint = JointInput::from(&input);
            let p = rng.random_range(0.0..1.0);
            let d = DistinguishabilityModel::new(p).unwrap();
            let ind = pair_outcomes(&m, &joint, DistinguishabilityModel::indistinguishable());
            let dst = pair_outcomes(&m, &joint, DistinguishabilityModel::new(1.0).unwrap());
            let mix = pair_outcomes(&m, &joint, d);
            for k in 0..4 {
                for l in (k + 1)..4 {
                    let expected = (1.0 - p) * ind.pair[k][l] + p * dst.pair[k][l];
                    assert!((mix.pair[k][l] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rail_relabeling_permutes_the_distribution() {
        // Swap the two rails in both the transfer matrix and the input; the
        // coincidence outcomes must swap their polarization pair order.
        let mut rng = StdRng::seed_from_u64(59);
        let perm = {
            let mut s = CMatrix::zeros(4, 4);
            s[(0, 2)] = cr(1.0);
            s[(1, 3)] = cr(1.0);
            s[(2, 0)] = cr(1.0);
            s[(3, 1)] = cr(1.0);
            s
        };
        for _ in 0..50 {
            let m = random_unitary_transfer(&mut rng);
            let swapped = TransferMatrix::new(&perm * m.matrix() * &perm, true).unwrap();
            let pc = random_pol(&mut rng);
            let pt = random_pol(&mut rng);
            let orig = evolve_indistinguishable(&m, &TwoPhotonInput::new(pc.clone(), pt.clone()));
            let swap = evolve_indistinguishable(&swapped, &TwoPhotonInput::new(pt, pc));
            assert!((orig.success_prob - swap.success_prob).abs() < 1e-10);
            // (H,V) <-> (V,H); (H,H) and (V,V) are symmetric.
            assert!((orig.probs[0] - swap.probs[0]).abs() < 1e-10);
            assert!((orig.probs[1] - swap.probs[2]).abs() < 1e-10);
            assert!((orig.probs[2] - swap.probs[1]).abs() < 1e-10);
            assert!((orig.probs[3] - swap.probs[3]).abs() < 1e-10);
        }
    }

    #[test]
    fn conditional_probabilities_sum_to_one() {
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..200 {
            let m = random_unitary_transfer(&mut rng);
            let input = TwoPhotonInput::new(random_pol(&mut rng), random_pol(&mut rng));
            let p = rng.random_range(0.0..1.0);
            let dist = evolve_mixture(&m, &input, DistinguishabilityModel::new(p).unwrap());
            if !dist.is_empty() {
                let sum: f64 = dist.probs.iter().sum();
                assert!((sum - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ideal_chip_computational_inputs_succeed_one_in_nine() {
        let (p1, p2, p3) = ideal_couplers();
        let chip = build_cnot_chip(&p1, &p2, &p3, Convention::ImagCross);
        let cases = [
            (PolState::h(), PolState::h()),
            (PolState::h(), PolState::v()),
            (PolState::v(), PolState::h()),
            (PolState::v(), PolState::v()),
            (PolState::h(), PolState::plus()),
            (PolState::v(), PolState::minus()),
        ];
        for (pc, pt) in cases {
            let dist = evolve_indistinguishable(&chip, &TwoPhotonInput::new(pc, pt));
            assert!(
                (dist.success_prob - 1.0 / 9.0).abs() < 1e-12,
                "success probability {}",
                dist.success_prob
            );
        }
    }

    #[test]
    fn ideal_chip_conserves_polarization_pairs() {
        let (p1, p2, p3) = ideal_couplers();
        let chip = build_cnot_chip(&p1, &p2, &p3, Convention::ImagCross);
        // Both photons vertical: polarization conservation leaves (V, V) as
        // the only coincidence outcome.
        let dist =
            evolve_indistinguishable(&chip, &TwoPhotonInput::new(PolState::v(), PolState::v()));
        assert!((dist.probs[3] - 1.0).abs() < 1e-12);
        assert!((dist.success_prob - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn blocked_chip_yields_empty_distribution() {
        // A compensator with T = 0 on the cross port transmits nothing.
        let p1 = Ppdc::new("p1", 0.0, 2.0 / 3.0).unwrap();
        let blocked = Ppdc::new("blocked", 0.0, 0.0).unwrap();
        let chip = build_cnot_chip(&p1, &blocked, &blocked, Convention::ImagCross);
        let dist = evolve_indistinguishable(&chip, &both_h());
        assert!(dist.is_empty());
        assert_eq!(dist.probs, [0.0; 4]);
    }

    #[test]
    fn visibility_formula_matches_reference_points() {
        assert!((hom_visibility_theoretical(0.5).unwrap() - 1.0).abs() < 1e-15);
        // r = 1/3: V = 2*(1/3)*(2/3) / ((1/9) + (4/9)) = (4/9)/(5/9) = 0.8.
        assert!((hom_visibility_theoretical(1.0 / 3.0).unwrap() - 0.8).abs() < 1e-12);
        // Degenerate splitters have no dip and are rejected.
        assert!(hom_visibility_theoretical(0.0).is_err());
        assert!(hom_visibility_theoretical(1.0).is_err());
        assert!(hom_visibility_theoretical(-0.1).is_err());
        assert!(hom_visibility_theoretical(1.1).is_err());
        assert!(hom_visibility_theoretical(f64::NAN).is_err());
    }

    #[test]
    fn visibility_is_symmetric_under_r_reflection() {
        let mut rng = StdRng::seed_from_u64(67);
        for _ in 0..200 {
            let r = rng.random_range(0.01..0.99);
            let a = hom_visibility_theoretical(r).unwrap();
            let b = hom_visibility_theoretical(1.0 - r).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn visibility_of_simulated_dip_matches_formula() {
        // Scan couplers: the engine's own mixture reproduces
        // V = (C_dist - C_mix) / C_dist = (1 - p) V_theo.
        let p = 0.12;
        let d = DistinguishabilityModel::new(p).unwrap();
        for t in [0.2, 1.0 / 3.0, 0.5, 0.77] {
            let splitter = ppdc_transfer(&Ppdc::new("bs", t, t).unwrap(), Convention::ImagCross);
            let c_dist = evolve_distinguishable(&splitter, &both_h()).success_prob;
            let c_mix = evolve_mixture(&splitter, &both_h(), d).success_prob;
            let v_sim = (c_dist - c_mix) / c_dist;
            let v_theo = hom_visibility_theoretical(t).unwrap();
            assert!(
                (v_sim - (1.0 - p) * v_theo).abs() < 1e-12,
                "simulated visibility at t = {t}"
            );
        }
    }

    #[test]
    fn inferred_p_matches_visibility_ratio() {
        let v_theo = 0.8;
        let d = infer_p(0.97 * v_theo, v_theo).unwrap();
        assert!((d.p() - 0.03).abs() < 1e-12);
        assert!((infer_p(v_theo, v_theo).unwrap().p()).abs() < 1e-15);
        assert!((infer_p(0.0, v_theo).unwrap().p() - 1.0).abs() < 1e-15);
        assert!(infer_p(0.9, 0.8).is_err());
        assert!(infer_p(-0.1, 0.8).is_err());
        assert!(infer_p(0.5, 0.0).is_err());
        assert!(infer_p(1.1, 1.2).is_err());
    }

    #[test]
    fn distinguishability_model_validates_range() {
        assert!(DistinguishabilityModel::new(-0.01).is_err());
        assert!(DistinguishabilityModel::new(1.01).is_err());
        assert!(DistinguishabilityModel::new(f64::NAN).is_err());
        assert!((DistinguishabilityModel::new(0.03).unwrap().p() - 0.03).abs() < 1e-15);
    }

    #[test]
    fn entangled_joint_input_evolves_linearly() {
        // The joint evolution of an entangled input must equal the coherent
        // superposition of the corresponding product evolutions.
        let mut rng = StdRng::seed_from_u64(71);
        for _ in 0..50 {
            let m = random_unitary_transfer(&mut rng);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            // (|HH> + |VV>)/sqrt(2) as a joint input.
            let joint =
                JointInput::new([[c(s, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(s, 0.0)]]).unwrap();
            let amps = coincidence_amplitudes(&m, &joint);
            let hh = JointInput::from(&TwoPhotonInput::new(PolState::h(), PolState::h()));
            let vv = JointInput::from(&TwoPhotonInput::new(PolState::v(), PolState::v()));
            let a_hh = coincidence_amplitudes(&m, &hh);
            let a_vv = coincidence_amplitudes(&m, &vv);
            for i in 0..4 {
                let expected = (a_hh[i] + a_vv[i]) * cr(s);
                assert!((amps[i] - expected).norm() < 1e-12);
            }
        }
    }
}
