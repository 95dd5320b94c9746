//! State and process tomography of the post-selected gate.
//!
//! State tomography measures the 36 projector settings built from the
//! single-qubit bases `H, V, D, A, R, L` and reconstructs the logical
//! density matrix by linear inversion of Pauli expectation values. Process
//! tomography sends the 16 informationally complete preparations
//! `{H, V, D, R} x {H, V, D, R}` through the device, reconstructs each
//! output, and solves for the 16x16 chi matrix expressing the channel as
//! `E(rho) = sum_{m,n} chi_mn G_m rho G_n` over the Pauli tensor basis.
//! Counts are simulated with a per-(preparation, setting) seeded binomial
//! draw so every run is reproducible.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analysis::{logical_output, PhaseCompensation};
use crate::circuit::TransferMatrix;
use crate::linalg::{c, cr, dagger, hermitian_deviation, hermitian_eigen, solve, CMatrix};
use crate::quantum::{pauli_basis, DensityMatrix, PureState2Q};
use crate::twophoton::DistinguishabilityModel;
use crate::{Error, Result};

/// A single-qubit analysis basis vector in the logical space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TomoBasis {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl TomoBasis {
    /// All six analysis vectors, pairing into the Z, X and Y eigenbases.
    pub fn all() -> [TomoBasis; 6] {
        [
            TomoBasis::H,
            TomoBasis::V,
            TomoBasis::D,
            TomoBasis::A,
            TomoBasis::R,
            TomoBasis::L,
        ]
    }

    /// The logical amplitudes of the basis vector.
    pub fn vector(&self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            TomoBasis::H => [c(1.0, 0.0), c(0.0, 0.0)],
            TomoBasis::V => [c(0.0, 0.0), c(1.0, 0.0)],
            TomoBasis::D => [cr(s), cr(s)],
            TomoBasis::A => [cr(s), cr(-s)],
            TomoBasis::R => [cr(s), c(0.0, -s)],
            TomoBasis::L => [cr(s), c(0.0, s)],
        }
    }

    /// Which Pauli axis (1 = X, 2 = Y, 3 = Z) the vector diagonalizes, and
    /// its eigenvalue sign.
    pub fn axis(&self) -> (usize, f64) {
        match self {
            TomoBasis::H => (3, 1.0),
            TomoBasis::V => (3, -1.0),
            TomoBasis::D => (1, 1.0),
            TomoBasis::A => (1, -1.0),
            TomoBasis::R => (2, -1.0),
            TomoBasis::L => (2, 1.0),
        }
    }
}

/// One of the 36 two-qubit projective measurement settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasSetting {
    pub first: TomoBasis,
    pub second: TomoBasis,
}

impl MeasSetting {
    /// The fixed enumeration of all 36 settings.
    pub fn all() -> Vec<MeasSetting> {
        let mut out = Vec::with_capacity(36);
        for first in TomoBasis::all() {
            for second in TomoBasis::all() {
                out.push(MeasSetting { first, second });
            }
        }
        out
    }

    /// Position of this setting in [`MeasSetting::all`].
    pub fn index(&self) -> usize {
        let pos = |b: TomoBasis| TomoBasis::all().iter().position(|&x| x == b).unwrap();
        pos(self.first) * 6 + pos(self.second)
    }

    /// The projected two-qubit state `|first> (x) |second>`.
    pub fn state(&self) -> PureState2Q {
        PureState2Q::product(self.first.vector(), self.second.vector()).expect("unit basis")
    }
}

/// One of the 16 informationally complete input product states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputPreparation {
    pub first: TomoBasis,
    pub second: TomoBasis,
}

impl InputPreparation {
    const CHOICES: [TomoBasis; 4] = [TomoBasis::H, TomoBasis::V, TomoBasis::D, TomoBasis::R];

    /// Builds a preparation, restricted to the `{H, V, D, R}` set.
    pub fn new(first: TomoBasis, second: TomoBasis) -> Result<Self> {
        if !Self::CHOICES.contains(&first) || !Self::CHOICES.contains(&second) {
            return Err(Error::DegenerateData {
                reason: format!("preparation ({first:?}, {second:?}) outside the H/V/D/R set"),
            });
        }
        Ok(Self { first, second })
    }

    /// The fixed enumeration of all 16 preparations.
    pub fn all() -> Vec<InputPreparation> {
        let mut out = Vec::with_capacity(16);
        for first in Self::CHOICES {
            for second in Self::CHOICES {
                out.push(InputPreparation { first, second });
            }
        }
        out
    }

    /// Position of this preparation in [`InputPreparation::all`].
    pub fn index(&self) -> usize {
        let pos = |b: TomoBasis| Self::CHOICES.iter().position(|&x| x == b).unwrap();
        pos(self.first) * 4 + pos(self.second)
    }

    /// The prepared logical state.
    pub fn state(&self) -> PureState2Q {
        PureState2Q::product(self.first.vector(), self.second.vector()).expect("unit basis")
    }
}

/// Coincidence counts accumulated for one measurement setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub setting: MeasSetting,
    pub shots: u64,
    pub successes: u64,
}

impl CountsRecord {
    pub fn new(setting: MeasSetting, shots: u64, successes: u64) -> Result<Self> {
        if successes > shots {
            return Err(Error::BadCountsRecord {
                setting: format!("{:?}/{:?}", setting.first, setting.second),
                reason: format!("{successes} successes out of {shots} shots"),
            });
        }
        Ok(Self {
            setting,
            shots,
            successes,
        })
    }

    pub fn frequency(&self) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.successes as f64 / self.shots as f64
        }
    }
}

/// The process matrix of a channel over the two-qubit Pauli tensor basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    matrix: CMatrix,
}

impl ChiMatrix {
    /// Wraps a 16x16 Hermitian matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (16, 16) {
            return Err(Error::BadShape {
                expected: "16x16",
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > 1e-9 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// The exact post-selected probability of one projective setting for one
/// preparation sent through the device.
pub fn setting_probability(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
    prep: InputPreparation,
    setting: MeasSetting,
) -> Result<f64> {
    let out = logical_output(m, &prep.state(), d, comp)?;
    Ok(out.density.projection(&setting.state()))
}

/// Draws a binomial coincidence count for one (preparation, setting) pair.
///
/// The RNG stream is derived from the pair's indices, so a single run seed
/// yields independent, reproducible streams for all 576 pairs.
pub fn simulate_counts(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
    prep: InputPreparation,
    setting: MeasSetting,
    shots: u64,
    seed: u64,
) -> Result<CountsRecord> {
    let prob = setting_probability(m, d, comp, prep, setting)?.clamp(0.0, 1.0);
    if shots == 0 {
        return CountsRecord::new(setting, 0, 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((prep.index() * 36 + setting.index()) as u64);
    let successes = Binomial::new(shots, prob)
        .expect("probability clamped to [0,1]")
        .sample(&mut rng);
    CountsRecord::new(setting, shots, successes)
}

/// Reconstructs a Hermitian trace-one matrix from the 36 measured
/// frequencies, indexed by [`MeasSetting::index`].
///
/// Single-qubit Pauli expectations are averaged over the three partner
/// bases; with exact probabilities as input the true state is reproduced
/// exactly.
pub fn linear_inversion_from_frequencies(freqs: &[f64; 36]) -> CMatrix {
    let paulis = crate::quantum::pauli_1q();
    let mut t = [[0.0f64; 4]; 4];
    t[0][0] = 1.0;
    let settings = MeasSetting::all();
    // Two-qubit correlators: the four settings of each axis pair.
    for s in &settings {
        let (ai, si) = s.first.axis();
        let (aj, sj) = s.second.axis();
        t[ai][aj] += si * sj * freqs[s.index()];
    }
    // Single-qubit terms, averaged over the partner's three bases.
    for s in &settings {
        let (ai, si) = s.first.axis();
        let (aj, sj) = s.second.axis();
        t[ai][0] += si * freqs[s.index()] / 3.0;
        t[0][aj] += sj * freqs[s.index()] / 3.0;
    }
    let mut rho = CMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in 0..4 {
            rho += paulis[a].kronecker(&paulis[b]).scale(t[a][b] / 4.0);
        }
    }
    rho
}

/// Reconstructs a state from a complete set of 36 counts records.
pub fn linear_inversion_state(records: &[CountsRecord]) -> Result<CMatrix> {
    let mut freqs = [f64::NAN; 36];
    for r in records {
        if r.shots == 0 {
            return Err(Error::BadCountsRecord {
                setting: format!("{:?}/{:?}", r.setting.first, r.setting.second),
                reason: "zero shots".to_string(),
            });
        }
        freqs[r.setting.index()] = r.frequency();
    }
    let missing: Vec<String> = MeasSetting::all()
        .iter()
        .filter(|s| freqs[s.index()].is_nan())
        .map(|s| format!("{:?}/{:?}", s.first, s.second))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSettings { missing });
    }
    Ok(linear_inversion_from_frequencies(&freqs))
}

/// Clips negative eigenvalues of a Hermitian matrix to zero and
/// renormalizes the trace to one. Works for any dimension.
pub fn project_psd_trace_one(h: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h, 1e-8)?;
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateData {
            reason: "projection of a non-positive matrix".to_string(),
        });
    }
    let mut rho = CMatrix::zeros(h.nrows(), h.ncols());
    for (i, &v) in clipped.iter().enumerate() {
        let col = vectors.column(i);
        for r in 0..h.nrows() {
            for s in 0..h.ncols() {
                rho[(r, s)] += col[r] * col[s].conj() * (v / total);
            }
        }
    }
    Ok(rho)
}

/// Projects a Hermitian matrix onto the physical states: negative
/// eigenvalues are clipped to zero and the trace renormalized to one.
pub fn project_to_physical(h: &CMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(project_psd_trace_one(h)?)
}

/// The chi matrix of a unitary gate: rank one over its Pauli expansion.
pub fn chi_from_unitary(u: &CMatrix) -> Result<ChiMatrix> {
    let coeffs = crate::quantum::pauli_expansion(u)?;
    let mut chi = CMatrix::zeros(16, 16);
    for m in 0..16 {
        for n in 0..16 {
            chi[(m, n)] = coeffs[m] * coeffs[n].conj();
        }
    }
    ChiMatrix::new(chi)
}

/// The chi matrix of the identity channel.
pub fn chi_identity() -> ChiMatrix {
    chi_from_unitary(&crate::linalg::identity(4)).expect("identity is unitary")
}

/// The analytic chi matrix of the CNOT gate.
pub fn chi_cnot() -> ChiMatrix {
    chi_from_unitary(&crate::quantum::cnot_unitary()).expect("CNOT is unitary")
}

/// Applies a channel in chi form: `E(rho) = sum chi_mn G_m rho G_n`.
pub fn apply_chi(chi: &ChiMatrix, rho: &CMatrix) -> CMatrix {
    let paulis = pauli_basis();
    let mut out = CMatrix::zeros(4, 4);
    for m in 0..16 {
        for n in 0..16 {
            let w = chi.matrix()[(m, n)];
            if w.norm_sqr() < 1e-300 {
                continue;
            }
            out += (&paulis[m] * rho * &paulis[n]).map(|x| x * w);
        }
    }
    out
}

/// Solves for the chi matrix mapping the 16 preparations to the given
/// output matrices, then Hermitizes the result.
///
/// The solution reproduces the supplied outputs exactly (the 256x256
/// system is square and the preparation set informationally complete), so
/// re-simulating any projective statistics from it returns the input data.
pub fn reconstruct_chi(outputs: &[CMatrix]) -> Result<CMatrix> {
    let preps = InputPreparation::all();
    if outputs.len() != preps.len() {
        return Err(Error::DegenerateData {
            reason: format!("expected 16 output states, got {}", outputs.len()),
        });
    }
    let paulis = pauli_basis();
    let rhos: Vec<CMatrix> = preps
        .iter()
        .map(|p| {
            let v = p.state().vector();
            &v * dagger_row(&v)
        })
        .collect();
    // B[(k,q),(m,n)] = Tr[G_m rho_k G_n G_q]; data d[(k,q)] = Tr[out_k G_q].
    let mut b = CMatrix::zeros(256, 256);
    let mut d = nalgebra::DVector::<Complex64>::zeros(256);
    // Precompute G_m rho_k and G_n G_q to turn each entry into a trace of
    // a pairwise product.
    let mut m_rho: Vec<Vec<CMatrix>> = Vec::with_capacity(16);
    for rho in &rhos {
        m_rho.push(paulis.iter().map(|g| g * rho).collect());
    }
    let mut n_q: Vec<Vec<CMatrix>> = Vec::with_capacity(16);
    for n in 0..16 {
        n_q.push((0..16).map(|q| &paulis[n] * &paulis[q]).collect());
    }
    for k in 0..16 {
        for q in 0..16 {
            let row = k * 16 + q;
            for m in 0..16 {
                for n in 0..16 {
                    b[(row, m * 16 + n)] = trace_product(&m_rho[k][m], &n_q[n][q]);
                }
            }
            d[row] = trace_product(&outputs[k], &paulis[q]);
        }
    }
    let x = solve(&b, &d, "process tomography inversion")?;
    let mut chi = CMatrix::zeros(16, 16);
    for m in 0..16 {
        for n in 0..16 {
            chi[(m, n)] = x[m * 16 + n];
        }
    }
    let chi = (&chi + dagger(&chi)).scale(0.5);
    Ok(chi)
}

fn dagger_row(v: &crate::linalg::CVector) -> CMatrix {
    let mut row = CMatrix::zeros(1, v.len());
    for i in 0..v.len() {
        row[(0, i)] = v[i].conj();
    }
    row
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut t = c(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

/// Full process tomography of a device.
///
/// With `shots = 0` the exact post-selected output states are used; with
/// `shots > 0` every (preparation, setting) pair is sampled binomially and
/// each output state reconstructed by linear inversion. The solved chi is
/// projected to positive semidefinite and trace-normalized.
pub fn process_tomography(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
    shots: u64,
    seed: u64,
) -> Result<ChiMatrix> {
    let outputs = output_states(m, d, comp, shots, seed)?;
    let raw = reconstruct_chi(&outputs)?;
    ChiMatrix::new(project_psd_trace_one(&raw)?)
}

/// The per-preparation output matrices feeding [`reconstruct_chi`]:
/// exact post-selected states at `shots = 0`, linear-inversion estimates
/// otherwise.
pub fn output_states(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
    shots: u64,
    seed: u64,
) -> Result<Vec<CMatrix>> {
    let mut outputs = Vec::with_capacity(16);
    for prep in InputPreparation::all() {
        if shots == 0 {
            let out = logical_output(m, &prep.state(), d, comp)?;
            outputs.push(out.density.matrix().clone());
        } else {
            let mut records = Vec::with_capacity(36);
            for setting in MeasSetting::all() {
                records.push(simulate_counts(m, d, comp, prep, setting, shots, seed)?);
            }
            outputs.push(linear_inversion_state(&records)?);
        }
    }
    Ok(outputs)
}

/// Generates the full 16x36 counts data set of a process tomography run.
pub fn simulate_process_counts(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
    shots: u64,
    seed: u64,
) -> Result<Vec<(InputPreparation, CountsRecord)>> {
    let mut out = Vec::with_capacity(16 * 36);
    for prep in InputPreparation::all() {
        for setting in MeasSetting::all() {
            out.push((
                prep,
                simulate_counts(m, d, comp, prep, setting, shots, seed)?,
            ));
        }
    }
    Ok(out)
}

/// Overlap of two process matrices, normalized by their traces:
/// `F = Tr[sqrt(sqrt(a) b sqrt(a))]^2 / (Tr[a] Tr[b])`.
///
/// Small negative eigenvalues from numerical reconstruction are clipped.
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    let ta = trace_product(a.matrix(), &crate::linalg::identity(16)).re;
    let tb = trace_product(b.matrix(), &crate::linalg::identity(16)).re;
    if ta <= 1e-12 || tb <= 1e-12 {
        return Err(Error::BadTrace {
            trace: if ta <= 1e-12 { ta } else { tb },
        });
    }
    let sqrt_a = psd_sqrt(a.matrix())?;
    let inner = &sqrt_a * b.matrix() * &sqrt_a;
    let (values, _) = hermitian_eigen(&inner, 1e-7)?;
    let root_sum = crate::linalg::sqrt_eigenvalue_sum(&values);
    Ok(((root_sum * root_sum) / (ta * tb)).clamp(0.0, 1.0))
}

fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m, 1e-7)?;
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for (i, &v) in values.iter().enumerate() {
        let r = if v > scale * 1e-13 { v.sqrt() } else { 0.0 };
        if r == 0.0 {
            continue;
        }
        let col = vectors.column(i);
        for a in 0..m.nrows() {
            for bcol in 0..m.ncols() {
                out[(a, bcol)] += col[a] * col[bcol].conj() * r;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::cnot_output;
    use crate::circuit::{build_cnot_chip, ideal_chip, Convention, Ppdc};
    use crate::linalg::{identity, max_abs_diff};
    use crate::quantum::{bell_states, cnot_unitary, pauli_labels, DensityMatrix};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn no_comp() -> PhaseCompensation {
        PhaseCompensation::identity()
    }

    fn p0() -> DistinguishabilityModel {
        DistinguishabilityModel::indistinguishable()
    }

    fn random_device(rng: &mut StdRng) -> TransferMatrix {
        let p1 = Ppdc::new("r1", rng.random_range(0.0..1.0), rng.random_range(0.1..1.0)).unwrap();
        let p2 = Ppdc::new("r2", rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)).unwrap();
        let p3 = Ppdc::new("r3", rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)).unwrap();
        build_cnot_chip(&p1, &p2, &p3, Convention::ImagCross)
    }

    #[test]
    fn enumerations_have_the_documented_sizes() {
        let settings = MeasSetting::all();
        assert_eq!(settings.len(), 36);
        for (i, s) in settings.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        let preps = InputPreparation::all();
        assert_eq!(preps.len(), 16);
        for (i, p) in preps.iter().enumerate() {
            assert_eq!(p.index(), i);
        }
        assert!(InputPreparation::new(TomoBasis::A, TomoBasis::H).is_err());
        assert!(InputPreparation::new(TomoBasis::H, TomoBasis::L).is_err());
    }

    #[test]
    fn basis_pairs_are_orthonormal() {
        for pair in [
            (TomoBasis::H, TomoBasis::V),
            (TomoBasis::D, TomoBasis::A),
            (TomoBasis::R, TomoBasis::L),
        ] {
            let u = pair.0.vector();
            let v = pair.1.vector();
            let nu: f64 = u.iter().map(|x| x.norm_sqr()).sum();
            let dot: Complex64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            assert!((nu - 1.0).abs() < 1e-15);
            assert!(dot.norm() < 1e-15);
        }
    }

    /// Hand-derived projection table of the first Bell state: 1/2 on the
    /// correlated same-axis settings, 0 on the anticorrelated ones, 1/4 on
    /// every mixed-axis setting. (The Y axis anticorrelates.)
    fn phi_plus_frequencies() -> [f64; 36] {
        let mut freqs = [0.25; 36];
        let set = |freqs: &mut [f64; 36], a: TomoBasis, b: TomoBasis, v: f64| {
            freqs[MeasSetting {
                first: a,
                second: b,
            }
            .index()] = v;
        };
        use TomoBasis::*;
        for (a, b, v) in [
            (H, H, 0.5),
            (V, V, 0.5),
            (H, V, 0.0),
            (V, H, 0.0),
            (D, D, 0.5),
            (A, A, 0.5),
            (D, A, 0.0),
            (A, D, 0.0),
            (R, L, 0.5),
            (L, R, 0.5),
            (R, R, 0.0),
            (L, L, 0.0),
        ] {
            set(&mut freqs, a, b, v);
        }
        freqs
    }

    #[test]
    fn exact_bell_frequencies_reconstruct_the_projector() {
        let rho = linear_inversion_from_frequencies(&phi_plus_frequencies());
        let expected = DensityMatrix::from_pure(&bell_states()[0]);
        assert!(max_abs_diff(&rho, expected.matrix()) < 1e-12);
    }

    #[test]
    fn uniform_frequencies_reconstruct_the_maximally_mixed_state() {
        let rho = linear_inversion_from_frequencies(&[0.25; 36]);
        assert!(max_abs_diff(&rho, &identity(4).scale(0.25)) < 1e-12);
    }

    #[test]
    fn exact_device_probabilities_reconstruct_each_output_state() {
        let mut rng = StdRng::seed_from_u64(101);
        for _ in 0..10 {
            let m = random_device(&mut rng);
            let p = rng.random_range(0.0..0.2);
            let d = DistinguishabilityModel::new(p).unwrap();
            for prep in [InputPreparation::all()[0], InputPreparation::all()[7]] {
                let Ok(out) = logical_output(&m, &prep.state(), d, &no_comp()) else {
                    continue;
                };
                let mut freqs = [0.0; 36];
                for s in MeasSetting::all() {
                    freqs[s.index()] = setting_probability(&m, d, &no_comp(), prep, s).unwrap();
                }
                let rho = linear_inversion_from_frequencies(&freqs);
                assert!(max_abs_diff(&rho, out.density.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn counts_reconstruction_is_hermitian_with_unit_trace() {
        let m = ideal_chip(Convention::ImagCross);
        let prep = InputPreparation::all()[6];
        let mut records = Vec::new();
        for setting in MeasSetting::all() {
            records.push(simulate_counts(&m, p0(), &no_comp(), prep, setting, 2000, 99).unwrap());
        }
        let rho = linear_inversion_state(&records).unwrap();
        assert!(crate::linalg::hermitian_deviation(&rho) < 1e-12);
        let tr: Complex64 = (0..4).map(|i| rho[(i, i)]).sum();
        assert!((tr.re - 1.0).abs() < 1e-9);
        assert!(tr.im.abs() < 1e-12);
    }

    #[test]
    fn missing_settings_are_listed() {
        let m = ideal_chip(Convention::ImagCross);
        let prep = InputPreparation::all()[0];
        let mut records = Vec::new();
        for setting in MeasSetting::all().into_iter().skip(2) {
            records.push(simulate_counts(&m, p0(), &no_comp(), prep, setting, 100, 7).unwrap());
        }
        let err = linear_inversion_state(&records).unwrap_err();
        match err {
            Error::MissingSettings { missing } => {
                assert_eq!(missing, vec!["H/H".to_string(), "H/V".to_string()]);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn simulated_counts_are_deterministic_and_bounded() {
        let m = ideal_chip(Convention::ImagCross);
        let prep = InputPreparation::all()[5];
        let setting = MeasSetting::all()[14];
        let a = simulate_counts(&m, p0(), &no_comp(), prep, setting, 10_000, 42).unwrap();
        let b = simulate_counts(&m, p0(), &no_comp(), prep, setting, 10_000, 42).unwrap();
        assert_eq!(a, b, "fixed seed must reproduce counts");
        let c = simulate_counts(&m, p0(), &no_comp(), prep, setting, 10_000, 43).unwrap();
        assert!(a.successes <= a.shots);
        // Different seeds almost surely differ for a non-deterministic setting.
        let p = setting_probability(&m, p0(), &no_comp(), prep, setting).unwrap();
        if p > 0.01 && p < 0.99 {
            assert_ne!(a.successes, c.successes);
        }
        let zero = simulate_counts(&m, p0(), &no_comp(), prep, setting, 0, 42).unwrap();
        assert_eq!(zero.successes, 0);
    }

    #[test]
    fn impossible_outcomes_never_fire() {
        // CNOT sends |00> to |00>; the projector onto V on the control
        // qubit has probability zero there.
        let m = ideal_chip(Convention::ImagCross);
        let prep = InputPreparation::new(TomoBasis::H, TomoBasis::H).unwrap();
        let setting = MeasSetting {
            first: TomoBasis::V,
            second: TomoBasis::H,
        };
        let r = simulate_counts(&m, p0(), &no_comp(), prep, setting, 100_000, 5).unwrap();
        assert_eq!(r.successes, 0);
    }

    #[test]
    fn partner_bases_partition_probability_identically() {
        use TomoBasis::*;
        let mut rng = StdRng::seed_from_u64(103);
        for _ in 0..20 {
            let m = random_device(&mut rng);
            let p = rng.random_range(0.0..1.0);
            let d = DistinguishabilityModel::new(p).unwrap();
            let prep = InputPreparation::all()[rng.random_range(0..16)];
            if logical_output(&m, &prep.state(), d, &no_comp()).is_err() {
                continue;
            }
            for first in TomoBasis::all() {
                let total = |pair: [TomoBasis; 2]| -> f64 {
                    pair.iter()
                        .map(|&second| {
                            setting_probability(
                                &m,
                                d,
                                &no_comp(),
                                prep,
                                MeasSetting { first, second },
                            )
                            .unwrap()
                        })
                        .sum()
                };
                let z = total([H, V]);
                let x = total([D, A]);
                let y = total([R, L]);
                assert!((z - x).abs() < 1e-10 && (x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_keeps_physical_states_and_fixes_nonphysical_ones() {
        // Already physical: unchanged.
        let rho = DensityMatrix::from_pure(&bell_states()[2]);
        let back = project_to_physical(rho.matrix()).unwrap();
        assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-12);
        // diag(1.1, -0.1, 0, 0): clip then renormalize.
        let mut h = CMatrix::zeros(4, 4);
        h[(0, 0)] = cr(1.1);
        h[(1, 1)] = cr(-0.1);
        let fixed = project_to_physical(&h).unwrap();
        assert!((fixed.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(fixed.matrix()[(1, 1)].norm() < 1e-12);
        // Zero matrix rejected.
        assert!(project_to_physical(&CMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn projection_is_idempotent_on_random_hermitian_matrices() {
        let mut rng = StdRng::seed_from_u64(107);
        for _ in 0..200 {
            let g = CMatrix::from_fn(4, 4, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = (&g + dagger(&g)).scale(0.5);
            let Ok(once) = project_to_physical(&h) else {
                continue;
            };
            let twice = project_to_physical(once.matrix()).unwrap();
            assert!(max_abs_diff(once.matrix(), twice.matrix()) < 1e-10);
        }
    }

    #[test]
    fn cnot_chi_is_supported_on_the_four_expected_paulis() {
        let chi = chi_cnot();
        let labels = pauli_labels();
        let support = ["II", "IX", "ZI", "ZX"];
        let mut trace = 0.0;
        for m in 0..16 {
            for n in 0..16 {
                let mag = chi.matrix()[(m, n)].norm();
                let on =
                    support.contains(&labels[m].as_str()) && support.contains(&labels[n].as_str());
                if on {
                    assert!((mag - 0.25).abs() < 1e-12, "({m},{n}) magnitude {mag}");
                } else {
                    assert!(mag < 1e-12, "unexpected weight at ({m},{n})");
                }
            }
            trace += chi.matrix()[(m, m)].re;
        }
        assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_chi_is_a_single_entry() {
        let chi = chi_identity();
        for m in 0..16 {
            for n in 0..16 {
                let expected = if m == 0 && n == 0 { 1.0 } else { 0.0 };
                assert!((chi.matrix()[(m, n)].norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn applying_the_cnot_chi_conjugates_by_the_unitary() {
        let chi = chi_cnot();
        let u = cnot_unitary();
        let mut rng = StdRng::seed_from_u64(109);
        for _ in 0..50 {
            let rho = crate::quantum::tests::random_density(&mut rng);
            let via_chi = apply_chi(&chi, rho.matrix());
            let direct = &u * rho.matrix() * dagger(&u);
            assert!(max_abs_diff(&via_chi, &direct) < 1e-10);
        }
    }

    #[test]
    fn exact_process_tomography_of_the_ideal_device_returns_cnot_chi() {
        let m = ideal_chip(Convention::ImagCross);
        let chi = process_tomography(&m, p0(), &no_comp(), 0, 0).unwrap();
        let target = chi_cnot();
        assert!(max_abs_diff(chi.matrix(), target.matrix()) < 1e-9);
        // The imaginary part of the reconstruction is negligible.
        let max_im = chi
            .matrix()
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.im.abs()));
        assert!(max_im < 1e-9);
        let f = process_fidelity(&chi, &target).unwrap();
        assert!(f >= 0.999, "noiseless process fidelity {f}");
    }

    #[test]
    fn exact_process_tomography_of_the_identity_device_returns_identity_chi() {
        let id = TransferMatrix::new(identity(4), true).unwrap();
        let chi = process_tomography(&id, p0(), &no_comp(), 0, 0).unwrap();
        assert!(max_abs_diff(chi.matrix(), chi_identity().matrix()) < 1e-9);
    }

    #[test]
    fn sampled_process_tomography_converges_at_a_million_shots() {
        let m = ideal_chip(Convention::ImagCross);
        let chi = process_tomography(&m, p0(), &no_comp(), 1_000_000, 20260814).unwrap();
        let f = process_fidelity(&chi, &chi_cnot()).unwrap();
        assert!(f >= 0.99, "sampled process fidelity {f}");
    }

    #[test]
    fn process_fidelity_reference_values() {
        let cnot = chi_cnot();
        let id = chi_identity();
        assert!((process_fidelity(&cnot, &cnot).unwrap() - 1.0).abs() < 1e-12);
        assert!((process_fidelity(&id, &id).unwrap() - 1.0).abs() < 1e-12);
        // Rank-one overlap: |<c_CNOT, c_I>|^2 = (1/2)^2.
        let f = process_fidelity(&cnot, &id).unwrap();
        assert!((f - 0.25).abs() < 1e-9, "cross fidelity {f}");
    }

    #[test]
    fn process_fidelity_is_symmetric_and_scale_invariant() {
        let mut rng = StdRng::seed_from_u64(113);
        for _ in 0..200 {
            // Random PSD chi matrices from random channels' unitary parts.
            let u = crate::quantum::tests::random_unitary(&mut rng);
            let v = crate::quantum::tests::random_unitary(&mut rng);
            let a = chi_from_unitary(&u).unwrap();
            let b = chi_from_unitary(&v).unwrap();
            let fab = process_fidelity(&a, &b).unwrap();
            let fba = process_fidelity(&b, &a).unwrap();
            assert!((fab - fba).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&fab));
            let alpha = rng.random_range(0.1..5.0);
            let beta = rng.random_range(0.1..5.0);
            let a_scaled = ChiMatrix::new(a.matrix().scale(alpha)).unwrap();
            let b_scaled = ChiMatrix::new(b.matrix().scale(beta)).unwrap();
            let f_scaled = process_fidelity(&a_scaled, &b_scaled).unwrap();
            assert!((fab - f_scaled).abs() < 1e-9);
        }
        let zero = ChiMatrix::new(CMatrix::zeros(16, 16)).unwrap();
        assert!(process_fidelity(&zero, &chi_cnot()).is_err());
    }

    #[test]
    fn raw_reconstruction_reproduces_all_statistics() {
        let mut rng = StdRng::seed_from_u64(127);
        for _ in 0..5 {
            let m = random_device(&mut rng);
            let p = rng.random_range(0.0..0.5);
            let d = DistinguishabilityModel::new(p).unwrap();
            let Ok(outputs) = output_states(&m, d, &no_comp(), 0, 0) else {
                continue;
            };
            let chi = reconstruct_chi(&outputs).unwrap();
            assert!(crate::linalg::hermitian_deviation(&chi) < 1e-9);
            for prep in InputPreparation::all() {
                let v = prep.state().vector();
                let rho_in = &v * dagger_row(&v);
                let out = apply_chi(&ChiMatrix::new(chi.clone()).unwrap(), &rho_in);
                for setting in MeasSetting::all() {
                    let predicted =
                        trace_product(&out, DensityMatrix::from_pure(&setting.state()).matrix()).re;
                    let actual = setting_probability(&m, d, &no_comp(), prep, setting).unwrap();
                    assert!(
                        (predicted - actual).abs() < 1e-8,
                        "prep {:?} setting {:?}: {predicted} vs {actual}",
                        prep,
                        setting
                    );
                }
            }
        }
    }

    #[test]
    fn sampled_state_tomography_approaches_the_true_output() {
        let m = ideal_chip(Convention::ImagCross);
        // |10> maps to |11>.
        let prep = InputPreparation::new(TomoBasis::V, TomoBasis::H).unwrap();
        let mut records = Vec::new();
        for setting in MeasSetting::all() {
            records
                .push(simulate_counts(&m, p0(), &no_comp(), prep, setting, 1_000_000, 11).unwrap());
        }
        let rho = linear_inversion_state(&records).unwrap();
        let physical = project_to_physical(&rho).unwrap();
        let expected = PureState2Q::basis(1, cnot_output(2) as u8 & 1);
        assert!(physical.projection(&expected) > 0.99);
    }
}
