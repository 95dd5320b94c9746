//! Transfer matrices of the optical elements on the chip.
//!
//! The chip carries two waveguides ("rails"), one per qubit, and each rail
//! carries both polarizations, giving four optical modes ordered
//! `(Control,H), (Control,V), (Target,H), (Target,V)`.
//!
//! A partially polarizing directional coupler (PPDC) couples the two rails
//! independently for each polarization. Its transmissivity `T` is the
//! cross-port power fraction: light launched into one rail exits on the
//! other rail with probability `T` and stays on its own rail with
//! probability `R = 1 - T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, cr, dagger, identity, max_abs_diff, singular_values, CMatrix};
use crate::{Error, Result};

/// Tolerance on passivity (largest singular value) of transfer matrices.
pub const PASSIVITY_TOL: f64 = 1e-9;
/// Tolerance on unitarity of transfer matrices flagged as unitary.
pub const UNITARITY_TOL: f64 = 1e-9;

/// The two waveguides of the chip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rail {
    Control,
    Target,
}

/// Photon polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pol {
    H,
    V,
}

/// Amplitude convention for the coupler's 2x2 rail block.
///
/// Both choices are unitary and produce identical post-selected logical
/// probabilities for this chip; they differ in the phases attached to the
/// bar and cross paths:
///
/// * [`Convention::ImagCross`] — symmetric block with an `i` on the cross
///   path: `[[sqrt(1-T), i sqrt(T)], [i sqrt(T), sqrt(1-T)]]`.
/// * [`Convention::RealAsym`] — real block with a sign on one bar path:
///   `[[sqrt(1-T), sqrt(T)], [sqrt(T), -sqrt(1-T)]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    ImagCross,
    RealAsym,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Convention::ImagCross => write!(f, "imag_cross"),
            Convention::RealAsym => write!(f, "real_asym"),
        }
    }
}

/// Which output port of a dump coupler feeds the rest of the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplerPort {
    Bar,
    Cross,
}

/// Index of a (rail, polarization) mode in the 4-mode ordering.
pub fn mode_index(rail: Rail, pol: Pol) -> usize {
    let rail_offset = match rail {
        Rail::Control => 0,
        Rail::Target => 2,
    };
    let pol_offset = match pol {
        Pol::H => 0,
        Pol::V => 1,
    };
    rail_offset + pol_offset
}

/// Inverse of [`mode_index`].
pub fn mode_of(index: usize) -> (Rail, Pol) {
    let rail = if index < 2 {
        Rail::Control
    } else {
        Rail::Target
    };
    let pol = if index.is_multiple_of(2) {
        Pol::H
    } else {
        Pol::V
    };
    (rail, pol)
}

/// A partially polarizing directional coupler, described by its per-
/// polarization cross-port transmissivities.
#[derive(Clone, Debug, PartialEq)]
pub struct Ppdc {
    pub label: String,
    pub t_h: f64,
    pub t_v: f64,
}

impl Ppdc {
    /// Validates that both transmissivities lie in `[0, 1]`.
    pub fn new(label: impl Into<String>, t_h: f64, t_v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t_h) || !t_h.is_finite() {
            return Err(Error::OutOfRange {
                name: "t_h",
                value: t_h,
            });
        }
        if !(0.0..=1.0).contains(&t_v) || !t_v.is_finite() {
            return Err(Error::OutOfRange {
                name: "t_v",
                value: t_v,
            });
        }
        Ok(Self {
            label: label.into(),
            t_h,
            t_v,
        })
    }

    fn t(&self, pol: Pol) -> f64 {
        match pol {
            Pol::H => self.t_h,
            Pol::V => self.t_v,
        }
    }
}

/// Per-polarization amplitude factors applied to a single rail, used to fold
/// the kept port of a dump coupler into the 4-mode picture.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationAttenuator {
    pub amp_h: Complex64,
    pub amp_v: Complex64,
}

impl PolarizationAttenuator {
    fn amp(&self, pol: Pol) -> Complex64 {
        match pol {
            Pol::H => self.amp_h,
            Pol::V => self.amp_v,
        }
    }
}

/// A validated 4-mode transfer matrix.
///
/// Every transfer matrix must be passive (no singular value above 1); those
/// flagged `unitary` must additionally satisfy `U^H U = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    matrix: CMatrix,
    unitary: bool,
}

impl TransferMatrix {
    /// Validates and wraps a 4x4 transfer matrix.
    pub fn new(matrix: CMatrix, unitary: bool) -> Result<Self> {
        if matrix.shape() != (4, 4) {
            return Err(Error::BadShape {
                expected: "4x4 transfer",
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let sigma_max = singular_values(&matrix).into_iter().fold(0.0f64, f64::max);
        if sigma_max > 1.0 + PASSIVITY_TOL {
            return Err(Error::NotPassive { sigma_max });
        }
        if unitary {
            let dev = max_abs_diff(&(dagger(&matrix) * &matrix), &identity(4));
            if dev > UNITARITY_TOL {
                return Err(Error::NotUnitary { deviation: dev });
            }
        }
        Ok(Self { matrix, unitary })
    }

    /// The underlying 4x4 matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Whether the matrix was validated as unitary.
    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Largest magnitude among entries that connect different polarizations.
    /// Zero for any product of couplers and attenuators.
    pub fn polarization_mixing(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let (_, pi) = mode_of(i);
                let (_, pj) = mode_of(j);
                if pi != pj {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// 2x2 rail block of a coupler with cross-port transmissivity `t`.
fn coupler_block(t: f64, convention: Convention) -> [Complex64; 4] {
    let bar = (1.0 - t).sqrt();
    let cross = t.sqrt();
    match convention {
        Convention::ImagCross => [cr(bar), c(0.0, cross), c(0.0, cross), cr(bar)],
        Convention::RealAsym => [cr(bar), cr(cross), cr(cross), cr(-bar)],
    }
}

/// Full 4-mode transfer matrix of a PPDC coupling the two rails.
///
/// Polarization is conserved: each polarization sees an independent 2x2
/// beam-splitter block between the rails. The result is always unitary.
pub fn ppdc_transfer(ppdc: &Ppdc, convention: Convention) -> TransferMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for pol in [Pol::H, Pol::V] {
        let block = coupler_block(ppdc.t(pol), convention);
        let ctrl = mode_index(Rail::Control, pol);
        let tgt = mode_index(Rail::Target, pol);
        m[(ctrl, ctrl)] = block[0];
        m[(ctrl, tgt)] = block[1];
        m[(tgt, ctrl)] = block[2];
        m[(tgt, tgt)] = block[3];
    }
    TransferMatrix::new(m, true).expect("coupler blocks are unitary")
}

/// Folds a dump coupler into per-polarization amplitudes for its kept port.
///
/// The second input of the coupler is vacuum and the unused output is
/// discarded, so on the kept path each polarization is simply scaled:
/// the cross port keeps amplitude `i sqrt(T)` ([`Convention::ImagCross`]) or
/// `sqrt(T)` ([`Convention::RealAsym`]); the bar port keeps `sqrt(1-T)`.
pub fn attenuator_from_ppdc(
    ppdc: &Ppdc,
    used_port: CouplerPort,
    convention: Convention,
) -> PolarizationAttenuator {
    let amp = |t: f64| -> Complex64 {
        match used_port {
            CouplerPort::Cross => match convention {
                Convention::ImagCross => c(0.0, t.sqrt()),
                Convention::RealAsym => cr(t.sqrt()),
            },
            CouplerPort::Bar => cr((1.0 - t).sqrt()),
        }
    };
    PolarizationAttenuator {
        amp_h: amp(ppdc.t_h),
        amp_v: amp(ppdc.t_v),
    }
}

/// Transfer matrix applying one attenuator per rail.
fn rail_attenuators(control: &PolarizationAttenuator, target: &PolarizationAttenuator) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for pol in [Pol::H, Pol::V] {
        m[(
            mode_index(Rail::Control, pol),
            mode_index(Rail::Control, pol),
        )] = control.amp(pol);
        m[(mode_index(Rail::Target, pol), mode_index(Rail::Target, pol))] = target.amp(pol);
    }
    m
}

/// Builds the three-coupler CNOT chip.
///
/// `interference` is the coupler where the two rails meet; `comp_target` and
/// `comp_control` are the compensating dump couplers on the target and
/// control rails respectively, taken at the given port. The chip matrix is
/// `(attenuators) * (interference coupler)`, sub-unitary because the dump
/// ports discard amplitude.
pub fn build_cnot_chip_routed(
    interference: &Ppdc,
    comp_target: &Ppdc,
    comp_control: &Ppdc,
    convention: Convention,
    used_port: CouplerPort,
) -> TransferMatrix {
    let u1 = ppdc_transfer(interference, convention);
    let a_target = attenuator_from_ppdc(comp_target, used_port, convention);
    let a_control = attenuator_from_ppdc(comp_control, used_port, convention);
    let m = rail_attenuators(&a_control, &a_target) * u1.matrix();
    TransferMatrix::new(m, false).expect("attenuated chip is passive")
}

/// [`build_cnot_chip_routed`] with the cross port, the routing that balances
/// the horizontal and vertical amplitudes for the CNOT parameter set.
///
/// With the standard parameters — interference coupler `(T_H, T_V) =
/// (0, 2/3)`, both compensators `(1/3, 1)` — every polarization path carries
/// amplitude `sqrt(1/3)` and the post-selected gate succeeds with
/// probability 1/9.
pub fn build_cnot_chip(
    interference: &Ppdc,
    comp_target: &Ppdc,
    comp_control: &Ppdc,
    convention: Convention,
) -> TransferMatrix {
    build_cnot_chip_routed(
        interference,
        comp_target,
        comp_control,
        convention,
        CouplerPort::Cross,
    )
}

/// The ideal CNOT coupler parameters: interference `(0, 2/3)`,
/// compensators `(1/3, 1)`.
pub fn ideal_couplers() -> (Ppdc, Ppdc, Ppdc) {
    (
        Ppdc::new("PPDC1", 0.0, 2.0 / 3.0).expect("valid"),
        Ppdc::new("PPDC2", 1.0 / 3.0, 1.0).expect("valid"),
        Ppdc::new("PPDC3", 1.0 / 3.0, 1.0).expect("valid"),
    )
}

/// The chip built from [`ideal_couplers`] under the given convention.
pub fn ideal_chip(convention: Convention) -> TransferMatrix {
    let (p1, p2, p3) = ideal_couplers();
    build_cnot_chip(&p1, &p2, &p3, convention)
}

/// Waveplate kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveplateKind {
    Half,
    Quarter,
}

/// A waveplate inserted on one rail, with its fast axis at `angle` radians
/// from horizontal.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveplate {
    pub kind: WaveplateKind,
    pub angle: f64,
    pub rail: Rail,
}

/// Jones matrix of a waveplate with fast axis at `angle`.
///
/// Half-wave: `[[cos 2a, sin 2a], [sin 2a, -cos 2a]]`;
/// quarter-wave at `a = 0`: `diag(1, i)`, rotated for general angles.
pub fn waveplate_jones(kind: WaveplateKind, angle: f64) -> CMatrix {
    let (s, co) = angle.sin_cos();
    match kind {
        WaveplateKind::Half => {
            let (s2, c2) = (2.0 * angle).sin_cos();
            CMatrix::from_row_slice(2, 2, &[cr(c2), cr(s2), cr(s2), cr(-c2)])
        }
        WaveplateKind::Quarter => {
            let d = c(1.0, -1.0) * cr(s * co);
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    cr(co * co) + c(0.0, s * s),
                    d,
                    d,
                    cr(s * s) + c(0.0, co * co),
                ],
            )
        }
    }
}

impl Waveplate {
    /// 4-mode transfer matrix: the Jones matrix on this rail's polarization
    /// pair, identity on the other rail. Waveplates are the only elements
    /// here that mix polarizations.
    pub fn to_transfer(&self) -> TransferMatrix {
        let jones = waveplate_jones(self.kind, self.angle);
        let mut m = identity(4);
        let h = mode_index(self.rail, Pol::H);
        let v = mode_index(self.rail, Pol::V);
        m[(h, h)] = jones[(0, 0)];
        m[(h, v)] = jones[(0, 1)];
        m[(v, h)] = jones[(1, 0)];
        m[(v, v)] = jones[(1, 1)];
        TransferMatrix::new(m, true).expect("waveplates are unitary")
    }
}
