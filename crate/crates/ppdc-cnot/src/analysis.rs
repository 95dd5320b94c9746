//! Logical-level analysis of the chip: the qubit encoding, truth tables,
//! distinguishability correction, phase calibration, and Bell-state
//! generation and discrimination.
//!
//! The physical gate flips the diagonal-basis target polarization exactly
//! when the control photon is vertical, so the encoding maps control
//! `1` to `V`; the target qubit lives in the diagonal basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_cnot_chip, Convention, Ppdc, TransferMatrix};
use crate::linalg::{c, cr, dagger, trace, CMatrix, CVector};
use crate::quantum::{bell_states, cnot_unitary, DensityMatrix, PureState2Q};
use crate::twophoton::{
    coincidence_amplitudes, distinguishable_branches, DistinguishabilityModel, JointInput,
    PolState, TwoPhotonInput,
};
use crate::{Error, Result};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Map between logical qubits and physical polarizations.
///
/// The control qubit is carried by the rectilinear basis (`0 -> H`,
/// `1 -> V`); the target by the diagonal basis (`0 -> (H+V)/sqrt(2)`,
/// `1 -> (H-V)/sqrt(2)`). Two-photon interference on the central coupler
/// flips the diagonal-basis target exactly when the control photon is
/// vertical, which is what makes this encoding read out as a CNOT.
#[derive(Clone, Debug)]
pub struct LogicalEncoding {
    control: CMatrix,
    target: CMatrix,
}

impl LogicalEncoding {
    /// The encoding the chip implements.
    pub fn standard() -> Self {
        let control =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let target = CMatrix::from_row_slice(
            2,
            2,
            &[cr(SQRT_HALF), cr(SQRT_HALF), cr(SQRT_HALF), cr(-SQRT_HALF)],
        );
        Self { control, target }
    }

    /// Physical polarization amplitudes `[H, V]` of a control basis state.
    pub fn control_vector(&self, bit: u8) -> [Complex64; 2] {
        [
            self.control[(0, bit as usize)],
            self.control[(1, bit as usize)],
        ]
    }

    /// Physical polarization amplitudes `[H, V]` of a target basis state.
    pub fn target_vector(&self, bit: u8) -> [Complex64; 2] {
        [
            self.target[(0, bit as usize)],
            self.target[(1, bit as usize)],
        ]
    }

    /// The 4x4 unitary taking logical amplitudes to physical polarization
    /// amplitudes over `(H,H), (H,V), (V,H), (V,V)`.
    pub fn isometry(&self) -> CMatrix {
        self.control.kronecker(&self.target)
    }

    /// Encodes a pair of logical single-qubit vectors as physical photons.
    pub fn encode_product(
        &self,
        control: [Complex64; 2],
        target: [Complex64; 2],
    ) -> Result<TwoPhotonInput> {
        let pc = [
            self.control[(0, 0)] * control[0] + self.control[(0, 1)] * control[1],
            self.control[(1, 0)] * control[0] + self.control[(1, 1)] * control[1],
        ];
        let pt = [
            self.target[(0, 0)] * target[0] + self.target[(0, 1)] * target[1],
            self.target[(1, 0)] * target[0] + self.target[(1, 1)] * target[1],
        ];
        Ok(TwoPhotonInput::new(PolState::new(pc)?, PolState::new(pt)?))
    }

    /// Encodes a (possibly entangled) logical two-qubit state as a joint
    /// photon-pair polarization amplitude.
    pub fn encode_joint(&self, psi: &PureState2Q) -> Result<JointInput> {
        let a = psi.amplitudes();
        // Joint logical amplitude matrix, control index x target index.
        let w_log = CMatrix::from_row_slice(2, 2, &[a[0], a[1], a[2], a[3]]);
        let w_phys = &self.control * w_log * self.target.transpose();
        JointInput::new([
            [w_phys[(0, 0)], w_phys[(0, 1)]],
            [w_phys[(1, 0)], w_phys[(1, 1)]],
        ])
    }
}

/// Diagonal local phase corrections `diag(1, e^{i phi})` applied per qubit
/// on the logical inputs and outputs.
///
/// These absorb the splitter phase convention; they never change
/// computational-basis probabilities, only the phases of superposed
/// outputs (and hence Bell-state fidelities).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCompensation {
    pub input_control: f64,
    pub input_target: f64,
    pub output_control: f64,
    pub output_target: f64,
}

impl PhaseCompensation {
    /// No correction.
    pub fn identity() -> Self {
        Self {
            input_control: 0.0,
            input_target: 0.0,
            output_control: 0.0,
            output_target: 0.0,
        }
    }

    fn local(phase_control: f64, phase_target: f64) -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        let ec = Complex64::from_polar(1.0, phase_control);
        let et = Complex64::from_polar(1.0, phase_target);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = et;
        m[(2, 2)] = ec;
        m[(3, 3)] = ec * et;
        m
    }

    /// The 4x4 diagonal unitary applied to logical inputs.
    pub fn input_matrix(&self) -> CMatrix {
        Self::local(self.input_control, self.input_target)
    }

    /// The 4x4 diagonal unitary applied to logical outputs.
    pub fn output_matrix(&self) -> CMatrix {
        Self::local(self.output_control, self.output_target)
    }

    /// Composes two compensations (phases add).
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            input_control: self.input_control + other.input_control,
            input_target: self.input_target + other.input_target,
            output_control: self.output_control + other.output_control,
            output_target: self.output_target + other.output_target,
        }
    }
}

/// The three unnormalized logical coincidence amplitude vectors of an
/// input: the interfering amplitude, and the two classical routing
/// branches of a distinguishable pair.
fn logical_branches(
    m: &TransferMatrix,
    comp: &PhaseCompensation,
    psi: &PureState2Q,
) -> Result<(CVector, CVector, CVector)> {
    let enc = LogicalEncoding::standard();
    let compensated = psi.vector();
    let compensated = comp.input_matrix() * compensated;
    let shifted = PureState2Q::new([
        compensated[0],
        compensated[1],
        compensated[2],
        compensated[3],
    ])?;
    let joint = enc.encode_joint(&shifted)?;
    let decode = comp.output_matrix() * dagger(&enc.isometry());
    let to_logical = |amps: [Complex64; 4]| &decode * CVector::from_column_slice(&amps);
    let ind = to_logical(coincidence_amplitudes(m, &joint));
    let (stay, swap) = distinguishable_branches(m, &joint);
    Ok((ind, to_logical(stay), to_logical(swap)))
}

/// Post-selected logical output of the gate for one input.
#[derive(Clone, Debug)]
pub struct LogicalOutput {
    /// Normalized two-qubit state conditioned on a coincidence.
    pub density: DensityMatrix,
    /// Probability that the pair survives post-selection.
    pub success_prob: f64,
}

/// Evolves a logical two-qubit input through the chip and post-selects.
///
/// The partially distinguishable pair yields the success-weighted mixture
/// of the interfering output and the two classical routing branches.
pub fn logical_output(
    m: &TransferMatrix,
    psi: &PureState2Q,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
) -> Result<LogicalOutput> {
    let (ind, stay, swap) = logical_branches(m, comp, psi)?;
    let p = d.p();
    let mut rho = CMatrix::zeros(4, 4);
    if p < 1.0 {
        rho += (&ind * dagger_vec(&ind)).scale(1.0 - p);
    }
    if p > 0.0 {
        rho += (&stay * dagger_vec(&stay)).scale(p);
        rho += (&swap * dagger_vec(&swap)).scale(p);
    }
    let success: f64 = (0..4).map(|i| rho[(i, i)].re).sum();
    if success <= 1e-300 {
        return Err(Error::EmptyDistribution {
            context: "post-selected logical output".to_string(),
        });
    }
    let density = DensityMatrix::new(rho.scale(1.0 / success))?;
    Ok(LogicalOutput {
        density,
        success_prob: success,
    })
}

fn dagger_vec(v: &CVector) -> nalgebra::DMatrix<Complex64> {
    let mut row = CMatrix::zeros(1, 4);
    for i in 0..4 {
        row[(0, i)] = v[i].conj();
    }
    row
}

/// The 4x4 logical coincidence amplitude matrix of the gate: column `k` is
/// the interfering output amplitude for computational input `k`. For the
/// ideal chip this is `-1/3` times the CNOT permutation.
pub fn logical_gate(m: &TransferMatrix, comp: &PhaseCompensation) -> Result<CMatrix> {
    let mut g = CMatrix::zeros(4, 4);
    for k in 0..4 {
        let psi = PureState2Q::basis((k >> 1) as u8, (k & 1) as u8);
        let (ind, _, _) = logical_branches(m, comp, &psi)?;
        for i in 0..4 {
            g[(i, k)] = ind[i];
        }
    }
    Ok(g)
}

/// Computational-basis transition probabilities of the gate.
///
/// Row `k` holds the post-selected probabilities of the four logical
/// outcomes for computational input `k`; `success` holds the corresponding
/// coincidence probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub probs: [[f64; 4]; 4],
    pub success: [f64; 4],
}

impl TruthTable {
    /// Builds a table, enforcing row normalization.
    pub fn new(probs: [[f64; 4]; 4], success: [f64; 4]) -> Result<Self> {
        let table = Self { probs, success };
        table.validate()?;
        Ok(table)
    }

    /// Checks entries lie in `[0,1]` and rows sum to one.
    pub fn validate(&self) -> Result<()> {
        for row in &self.probs {
            let mut sum = 0.0;
            for &x in row {
                if !(0.0..=1.0 + 1e-9).contains(&x) || !x.is_finite() {
                    return Err(Error::OutOfRange {
                        name: "truth table entry",
                        value: x,
                    });
                }
                sum += x;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::BadNorm { norm: sum });
            }
        }
        for &s in &self.success {
            if !(0.0..=1.0 + 1e-9).contains(&s) || !s.is_finite() {
                return Err(Error::OutOfRange {
                    name: "success probability",
                    value: s,
                });
            }
        }
        Ok(())
    }

    /// The table of an exact CNOT.
    pub fn ideal() -> Self {
        let mut probs = [[0.0; 4]; 4];
        for k in 0..4 {
            probs[k][cnot_output(k)] = 1.0;
        }
        Self {
            probs,
            success: [1.0; 4],
        }
    }
}

/// The computational-basis output index of a CNOT for input index `k`.
pub fn cnot_output(k: usize) -> usize {
    [0, 1, 3, 2][k]
}

/// Simulates the computational-basis truth table of a device.
///
/// The distinguishable fraction mixes at the level of per-input normalized
/// distributions — `(1-p) * interfering row + p * classical row` — so that
/// [`correct_distinguishability`] inverts the mixture exactly.
pub fn truth_table(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
) -> Result<TruthTable> {
    let p = d.p();
    let mut probs = [[0.0; 4]; 4];
    let mut success = [0.0; 4];
    for k in 0..4 {
        let (control, target) = ((k >> 1) as u8, (k & 1) as u8);
        let psi = PureState2Q::basis(control, target);
        let (ind, stay, swap) = logical_branches(m, comp, &psi)?;
        let w_ind: Vec<f64> = (0..4).map(|i| ind[i].norm_sqr()).collect();
        let w_dist: Vec<f64> = (0..4)
            .map(|i| stay[i].norm_sqr() + swap[i].norm_sqr())
            .collect();
        let n_ind: f64 = w_ind.iter().sum();
        let n_dist: f64 = w_dist.iter().sum();
        let blocked = (p < 1.0 && n_ind <= 0.0) || (p > 0.0 && n_dist <= 0.0);
        if blocked {
            return Err(Error::BlockedInput { control, target });
        }
        for i in 0..4 {
            let mut x = 0.0;
            if p < 1.0 {
                x += (1.0 - p) * w_ind[i] / n_ind;
            }
            if p > 0.0 {
                x += p * w_dist[i] / n_dist;
            }
            probs[k][i] = x;
        }
        success[k] = (1.0 - p) * n_ind + p * n_dist;
    }
    TruthTable::new(probs, success)
}

/// Mean probability of the correct CNOT outcome over the four inputs.
pub fn truth_table_fidelity(tt: &TruthTable) -> f64 {
    (0..4).map(|k| tt.probs[k][cnot_output(k)]).sum::<f64>() / 4.0
}

/// Removes the distinguishable component from a measured table:
/// `(measured - p * distinguishable) / (1 - p)` per row, clipped at zero
/// and renormalized.
pub fn correct_distinguishability(
    tt_meas: &TruthTable,
    tt_dist: &TruthTable,
    p: f64,
) -> Result<TruthTable> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
        });
    }
    tt_meas.validate()?;
    tt_dist.validate()?;
    let mut probs = [[0.0; 4]; 4];
    for (k, out_row) in probs.iter_mut().enumerate() {
        let mut row = [0.0; 4];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = ((tt_meas.probs[k][i] - p * tt_dist.probs[k][i]) / (1.0 - p)).max(0.0);
        }
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateData {
                reason: format!("corrected row {k} vanished"),
            });
        }
        *out_row = row.map(|x| x / sum);
    }
    TruthTable::new(probs, tt_meas.success)
}

/// The four separable inputs that an exact CNOT turns into the Bell states
/// `phi_plus, phi_minus, psi_plus, psi_minus`, in that order.
pub fn entangling_inputs() -> [PureState2Q; 4] {
    let plus = [cr(SQRT_HALF), cr(SQRT_HALF)];
    let minus = [cr(SQRT_HALF), cr(-SQRT_HALF)];
    let zero = [c(1.0, 0.0), c(0.0, 0.0)];
    let one = [c(0.0, 0.0), c(1.0, 0.0)];
    [
        PureState2Q::product(plus, zero).expect("unit"),
        PureState2Q::product(minus, zero).expect("unit"),
        PureState2Q::product(plus, one).expect("unit"),
        PureState2Q::product(minus, one).expect("unit"),
    ]
}

/// Normalized overlap of the compensated logical gate with the CNOT
/// unitary: exactly 1 when the gate is proportional to CNOT, which pins
/// every relative phase (a mean over output fidelities would leave
/// per-input global phases free).
fn gate_overlap(m: &TransferMatrix, comp: &PhaseCompensation) -> f64 {
    let Ok(g) = logical_gate(m, comp) else {
        return 0.0;
    };
    let denom = 4.0 * trace(&(dagger(&g) * &g)).re;
    if denom <= 1e-300 {
        return 0.0;
    }
    let overlap = trace(&(dagger(&cnot_unitary()) * &g));
    (overlap.norm_sqr() / denom).clamp(0.0, 1.0)
}

/// Optimizes the four compensation phases for a fixed chip matrix.
///
/// Returns the best compensation and the normalized CNOT overlap of the
/// compensated logical gate.
pub fn calibrate_phases_for(m: &TransferMatrix) -> (PhaseCompensation, f64) {
    use std::f64::consts::FRAC_PI_2;
    let grid = [0.0, FRAC_PI_2, 2.0 * FRAC_PI_2, 3.0 * FRAC_PI_2];
    let mut best = (PhaseCompensation::identity(), -1.0f64);
    for &ic in &grid {
        for &it in &grid {
            for &oc in &grid {
                for &ot in &grid {
                    let comp = PhaseCompensation {
                        input_control: ic,
                        input_target: it,
                        output_control: oc,
                        output_target: ot,
                    };
                    let f = gate_overlap(m, &comp);
                    if f > best.1 {
                        best = (comp, f);
                    }
                }
            }
        }
    }
    // Coordinate descent refinement around the best grid point.
    let mut step = FRAC_PI_2 / 2.0;
    while step > 1e-7 {
        let mut improved = false;
        for axis in 0..4 {
            for sign in [-1.0, 1.0] {
                let mut comp = best.0;
                let slot = match axis {
                    0 => &mut comp.input_control,
                    1 => &mut comp.input_target,
                    2 => &mut comp.output_control,
                    _ => &mut comp.output_target,
                };
                *slot += sign * step;
                let f = gate_overlap(m, &comp);
                if f > best.1 + 1e-12 {
                    best = (comp, f);
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best
}

/// Selects, once, the splitter convention and phase compensation under
/// which the chip built from these couplers reproduces the CNOT gate.
///
/// Fails loudly if no convention reaches gate overlap 0.99 — that
/// indicates a modeling inconsistency, not a noisy device.
pub fn calibrate_phases(
    p1: &Ppdc,
    p2: &Ppdc,
    p3: &Ppdc,
) -> Result<(Convention, PhaseCompensation)> {
    let mut best: Option<(f64, Convention, PhaseCompensation)> = None;
    for convention in [Convention::ImagCross, Convention::RealAsym] {
        let m = build_cnot_chip(p1, p2, p3, convention);
        let (comp, f) = calibrate_phases_for(&m);
        if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
            best = Some((f, convention, comp));
        }
    }
    let (f, convention, comp) = best.expect("two conventions evaluated");
    if f < 0.99 {
        return Err(Error::CalibrationFailed {
            best: f,
            convention: convention.to_string(),
        });
    }
    Ok((convention, comp))
}

/// Bell-state generation report: post-selected output states for the four
/// entangling inputs and their fidelities to the corresponding Bell states.
#[derive(Clone, Debug)]
pub struct BellGeneration {
    pub states: Vec<DensityMatrix>,
    pub fidelities: [f64; 4],
    pub success: [f64; 4],
}

/// Runs the four entangling inputs through the device.
pub fn bell_generation(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
) -> Result<BellGeneration> {
    let bells = bell_states();
    let mut states = Vec::with_capacity(4);
    let mut fidelities = [0.0; 4];
    let mut success = [0.0; 4];
    for (k, input) in entangling_inputs().iter().enumerate() {
        let out = logical_output(m, input, d, comp)?;
        fidelities[k] = out.density.projection(&bells[k]);
        success[k] = out.success_prob;
        states.push(out.density);
    }
    Ok(BellGeneration {
        states,
        fidelities,
        success,
    })
}

/// Bell-state discrimination report.
#[derive(Clone, Debug)]
pub struct BellDiscrimination {
    /// `confusion[i][j]`: probability of identifying input Bell state `i`
    /// as Bell state `j`.
    pub confusion: [[f64; 4]; 4],
    /// Mean diagonal of the confusion matrix (uniform prior).
    pub probability: f64,
    pub success: [f64; 4],
}

/// Sends the four Bell states through the device and reads them out as
/// product states: control in the `+/-` basis, target computational.
pub fn bell_discrimination(
    m: &TransferMatrix,
    d: DistinguishabilityModel,
    comp: &PhaseCompensation,
) -> Result<BellDiscrimination> {
    // An exact CNOT maps the Bell basis onto these product states, in the
    // same order as `bell_states()`.
    let outcomes = entangling_inputs();
    let mut confusion = [[0.0; 4]; 4];
    let mut success = [0.0; 4];
    for (i, bell) in bell_states().iter().enumerate() {
        let out = logical_output(m, bell, d, comp)?;
        success[i] = out.success_prob;
        for (j, outcome) in outcomes.iter().enumerate() {
            confusion[i][j] = out.density.projection(outcome);
        }
    }
    let probability = (0..4).map(|i| confusion[i][i]).sum::<f64>() / 4.0;
    Ok(BellDiscrimination {
        confusion,
        probability,
        success,
    })
}

/// The measured coupler set of the fabricated chip.
pub fn measured_couplers() -> (Ppdc, Ppdc, Ppdc) {
    (
        Ppdc::new("PPDC1", 0.0, 0.64).expect("valid"),
        Ppdc::new("PPDC2", 0.43, 0.98).expect("valid"),
        Ppdc::new("PPDC3", 0.27, 0.93).expect("valid"),
    )
}
