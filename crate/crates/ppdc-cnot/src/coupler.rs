//! Directional-coupler calibration and interaction-length design.
//!
//! Coupler power transfer follows `T(L) = A sin^2(pi (L + L0) / Lambda)`
//! per polarization: the offset `L0` absorbs coupling in the curved
//! approach sections and `A <= 1` permits imperfect contrast. Calibration
//! data is fit by weighted least squares (coarse grid over period and
//! offset, closed-form amplitude, then damped Gauss-Newton refinement),
//! and design searches a length window for couplers realizing target
//! `(T_H, T_V)` pairs.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::Ppdc;
use crate::{Error, Result};

/// One calibration measurement: a fabricated coupler's transmissivities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub length_mm: f64,
    pub t_h: f64,
    pub t_v: f64,
    pub sigma: f64,
}

impl CalibrationPoint {
    pub fn new(length_mm: f64, t_h: f64, t_v: f64, sigma: f64) -> Result<Self> {
        if !length_mm.is_finite() || length_mm < 0.0 {
            return Err(Error::OutOfRange {
                name: "interaction length",
                value: length_mm,
            });
        }
        for (name, value) in [("calibration t_h", t_h), ("calibration t_v", t_v)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::OutOfRange { name, value });
            }
        }
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::OutOfRange {
                name: "sigma",
                value: sigma,
            });
        }
        Ok(Self {
            length_mm,
            t_h,
            t_v,
            sigma,
        })
    }
}

/// One polarization's sinusoidal power-transfer curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationCurve {
    amplitude: f64,
    period_mm: f64,
    offset_mm: f64,
}

impl PolarizationCurve {
    /// Builds a curve with `A` in (0, 1], positive period, finite offset.
    pub fn new(amplitude: f64, period_mm: f64, offset_mm: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude <= 1.0) || !amplitude.is_finite() {
            return Err(Error::OutOfRange {
                name: "amplitude",
                value: amplitude,
            });
        }
        if period_mm <= 0.0 || !period_mm.is_finite() {
            return Err(Error::OutOfRange {
                name: "period",
                value: period_mm,
            });
        }
        if !offset_mm.is_finite() {
            return Err(Error::OutOfRange {
                name: "offset",
                value: offset_mm,
            });
        }
        Ok(Self {
            amplitude,
            period_mm,
            offset_mm,
        })
    }

    /// Transfer at interaction length `l` (extrapolates below zero).
    pub fn predict(&self, l: f64) -> f64 {
        let theta = std::f64::consts::PI * (l + self.offset_mm) / self.period_mm;
        self.amplitude * theta.sin().powi(2)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period_mm(&self) -> f64 {
        self.period_mm
    }

    pub fn offset_mm(&self) -> f64 {
        self.offset_mm
    }

    /// Parameters as `[A, Lambda, L0]`.
    pub fn params(&self) -> [f64; 3] {
        [self.amplitude, self.period_mm, self.offset_mm]
    }
}

/// The two-polarization coupler model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidalCouplerModel {
    pub h: PolarizationCurve,
    pub v: PolarizationCurve,
}

impl SinusoidalCouplerModel {
    pub fn new(h: PolarizationCurve, v: PolarizationCurve) -> Self {
        Self { h, v }
    }

    /// Both transmissivities at interaction length `l`.
    pub fn predict(&self, l: f64) -> (f64, f64) {
        (self.h.predict(l), self.v.predict(l))
    }
}

/// Goodness-of-fit summary for one polarization curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFitStats {
    pub chi_squared: f64,
    pub dof: usize,
    /// One-standard-deviation uncertainties of `[A, Lambda, L0]`.
    pub sigmas: [f64; 3],
}

/// A fitted model together with its per-polarization residual report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: SinusoidalCouplerModel,
    pub h_stats: CurveFitStats,
    pub v_stats: CurveFitStats,
}

/// A target transmissivity pair with a search window and tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignTarget {
    t_h: f64,
    t_v: f64,
    tolerance: f64,
    window: (f64, f64),
}

impl DesignTarget {
    pub fn new(t_h: f64, t_v: f64, tolerance: f64, window: (f64, f64)) -> Result<Self> {
        for (name, value) in [("target t_h", t_h), ("target t_v", t_v)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::OutOfRange { name, value });
            }
        }
        if tolerance <= 0.0 || !tolerance.is_finite() {
            return Err(Error::OutOfRange {
                name: "tolerance",
                value: tolerance,
            });
        }
        if !(window.0 >= 0.0 && window.1 > window.0) {
            return Err(Error::DegenerateData {
                reason: format!("empty search window [{}, {}] mm", window.0, window.1),
            });
        }
        Ok(Self {
            t_h,
            t_v,
            tolerance,
            window,
        })
    }

    pub fn t_h(&self) -> f64 {
        self.t_h
    }

    pub fn t_v(&self) -> f64 {
        self.t_v
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }
}

/// One feasible interaction length with its achieved transmissivities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthSolution {
    pub length_mm: f64,
    pub t_h: f64,
    pub t_v: f64,
    pub residual: f64,
}

/// Fits both polarization curves to the calibration points.
///
/// For each polarization a coarse grid over (period, offset) with the
/// closed-form weighted amplitude seeds a damped Gauss-Newton refinement;
/// the reported sigmas come from the inverse normal matrix at the optimum.
/// The fit is deterministic given the data.
pub fn fit_model(points: &[CalibrationPoint]) -> Result<FitReport> {
    if points.len() < 5 {
        return Err(Error::DegenerateData {
            reason: format!("{} calibration points; need at least 5", points.len()),
        });
    }
    let lengths: Vec<f64> = points.iter().map(|p| p.length_mm).collect();
    let sigmas: Vec<f64> = points.iter().map(|p| p.sigma).collect();
    let span = lengths.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - lengths.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if span <= 0.0 {
        return Err(Error::DegenerateData {
            reason: "all calibration points share one interaction length".to_string(),
        });
    }
    let th: Vec<f64> = points.iter().map(|p| p.t_h).collect();
    let tv: Vec<f64> = points.iter().map(|p| p.t_v).collect();
    let (h, h_stats) = fit_curve(&lengths, &th, &sigmas, span, "t_h")?;
    let (v, v_stats) = fit_curve(&lengths, &tv, &sigmas, span, "t_v")?;
    Ok(FitReport {
        model: SinusoidalCouplerModel::new(h, v),
        h_stats,
        v_stats,
    })
}

fn fit_curve(
    lengths: &[f64],
    values: &[f64],
    sigmas: &[f64],
    span: f64,
    which: &str,
) -> Result<(PolarizationCurve, CurveFitStats)> {
    let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread < 1e-6 {
        return Err(Error::DegenerateData {
            reason: format!("{which} shows no oscillation (constant data)"),
        });
    }
    let weights: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();

    // Coarse grid over (period, offset) with the closed-form amplitude.
    let mut best = (f64::INFINITY, 1.0, 1.0, 0.0); // (chi2, A, period, offset)
    let lambda_lo = (span / 30.0).max(0.05);
    let lambda_hi = 4.0 * span;
    let mut lambda = lambda_lo;
    while lambda <= lambda_hi {
        for k in 0..96 {
            let offset = lambda * k as f64 / 96.0;
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..lengths.len() {
                let f = basis(lengths[i], lambda, offset);
                num += weights[i] * values[i] * f;
                den += weights[i] * f * f;
            }
            if den < 1e-12 {
                continue;
            }
            let a = (num / den).clamp(1e-6, 1.0);
            let mut chi2 = 0.0;
            for i in 0..lengths.len() {
                let r = values[i] - a * basis(lengths[i], lambda, offset);
                chi2 += weights[i] * r * r;
            }
            if chi2 < best.0 {
                best = (chi2, a, lambda, offset);
            }
        }
        lambda *= 1.015;
    }

    // Damped Gauss-Newton refinement with the analytic Jacobian.
    let (mut a, mut lambda, mut offset) = (best.1, best.2, best.3);
    let mut chi2 = weighted_chi2(lengths, values, &weights, a, lambda, offset);
    let mut damping = 1e-3;
    for _ in 0..300 {
        let (jtj, jtr) = normal_equations(lengths, values, &weights, a, lambda, offset);
        let mut damped = jtj.clone();
        for i in 0..3 {
            damped[(i, i)] *= 1.0 + damping;
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            damping *= 10.0;
            continue;
        };
        let trial_a = (a + step[0]).clamp(1e-9, 1.5);
        let trial_lambda = (lambda + step[1]).max(1e-6);
        let trial_offset = offset + step[2];
        let trial_chi2 = weighted_chi2(
            lengths,
            values,
            &weights,
            trial_a,
            trial_lambda,
            trial_offset,
        );
        if trial_chi2 <= chi2 {
            let gain = chi2 - trial_chi2;
            a = trial_a;
            lambda = trial_lambda;
            offset = trial_offset;
            chi2 = trial_chi2;
            damping = (damping * 0.3).max(1e-12);
            if gain < 1e-16 * (1.0 + chi2) {
                break;
            }
        } else {
            damping *= 10.0;
            if damping > 1e12 {
                break;
            }
        }
    }

    // Canonical parameterization: offset reduced into [0, period).
    offset = offset.rem_euclid(lambda);
    a = a.min(1.0);
    let (jtj, _) = normal_equations(lengths, values, &weights, a, lambda, offset);
    let cov = jtj.lu().try_inverse().ok_or(Error::SingularSystem {
        context: "coupler fit covariance",
    })?;
    let param_sigmas = [0, 1, 2].map(|i| cov[(i, i)].max(0.0).sqrt());
    let dof = lengths.len().saturating_sub(3);
    let curve = PolarizationCurve::new(a, lambda, offset)?;
    Ok((
        curve,
        CurveFitStats {
            chi_squared: chi2,
            dof,
            sigmas: param_sigmas,
        },
    ))
}

fn basis(l: f64, lambda: f64, offset: f64) -> f64 {
    let theta = std::f64::consts::PI * (l + offset) / lambda;
    theta.sin().powi(2)
}

fn weighted_chi2(
    lengths: &[f64],
    values: &[f64],
    weights: &[f64],
    a: f64,
    lambda: f64,
    offset: f64,
) -> f64 {
    let mut chi2 = 0.0;
    for i in 0..lengths.len() {
        let r = values[i] - a * basis(lengths[i], lambda, offset);
        chi2 += weights[i] * r * r;
    }
    chi2
}

/// Normal equations of the weighted residuals: returns (J^T J, J^T r)
/// with the gradient of the model folded in analytically.
fn normal_equations(
    lengths: &[f64],
    values: &[f64],
    weights: &[f64],
    a: f64,
    lambda: f64,
    offset: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let pi = std::f64::consts::PI;
    let mut jtj = DMatrix::<f64>::zeros(3, 3);
    let mut jtr = DVector::<f64>::zeros(3);
    for i in 0..lengths.len() {
        let theta = pi * (lengths[i] + offset) / lambda;
        let f = theta.sin().powi(2);
        let slope = a * (2.0 * theta).sin();
        let grad = [
            f,
            -slope * pi * (lengths[i] + offset) / (lambda * lambda),
            slope * pi / lambda,
        ];
        let r = values[i] - a * f;
        for p in 0..3 {
            jtr[p] += weights[i] * grad[p] * r;
            for q in 0..3 {
                jtj[(p, q)] += weights[i] * grad[p] * grad[q];
            }
        }
    }
    (jtj, jtr)
}

/// Scans the target's window for interaction lengths whose worst-case
/// transmissivity error is below the tolerance.
///
/// Every local minimum of `max(|t_h - target|, |t_v - target|)` is refined
/// and kept if it meets the tolerance; solutions are sorted by residual
/// with the smallest length winning ties.
pub fn solve_length(model: &SinusoidalCouplerModel, target: &DesignTarget) -> Vec<LengthSolution> {
    let (lo, hi) = target.window();
    let residual = |l: f64| -> f64 {
        let (t_h, t_v) = model.predict(l);
        (t_h - target.t_h()).abs().max((t_v - target.t_v()).abs())
    };
    let fine = model.h.period_mm().min(model.v.period_mm()) / 1000.0;
    let n = (((hi - lo) / fine).ceil() as usize).clamp(2000, 200_000);
    let grid: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&l| residual(l)).collect();

    let mut solutions: Vec<LengthSolution> = Vec::new();
    for i in 0..=n {
        let left_up = i == 0 || vals[i] <= vals[i - 1];
        let right_up = i == n || vals[i] <= vals[i + 1];
        if !(left_up && right_up) {
            continue;
        }
        // Shrink the bracket around the local minimum.
        let mut a = if i == 0 { grid[0] } else { grid[i - 1] };
        let mut b = if i == n { grid[n] } else { grid[i + 1] };
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if residual(m1) < residual(m2) {
                b = m2;
            } else {
                a = m1;
            }
            if b - a < 1e-12 {
                break;
            }
        }
        let l = 0.5 * (a + b);
        let r = residual(l);
        if r > target.tolerance() {
            continue;
        }
        if let Some(prev) = solutions.last() {
            if (prev.length_mm - l).abs() < 1e-6 {
                continue;
            }
        }
        let (t_h, t_v) = model.predict(l);
        solutions.push(LengthSolution {
            length_mm: l,
            t_h,
            t_v,
            residual: r,
        });
    }
    solutions.sort_by(|x, y| {
        (x.residual, x.length_mm)
            .partial_cmp(&(y.residual, y.length_mm))
            .expect("finite residuals")
    });
    solutions
}

/// The designed pair of couplers realizing the gate's two target splits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnotDesign {
    /// Length realizing the interference target (0, 2/3).
    pub interference: LengthSolution,
    /// Length realizing the compensation target (1/3, 1).
    pub compensator: LengthSolution,
}

impl CnotDesign {
    /// The interference coupler at the achieved transmissivities.
    pub fn interference_ppdc(&self) -> Result<Ppdc> {
        Ppdc::new(
            "interference",
            self.interference.t_h.clamp(0.0, 1.0),
            self.interference.t_v.clamp(0.0, 1.0),
        )
    }

    /// A compensation coupler at the achieved transmissivities.
    pub fn compensator_ppdc(&self, label: &str) -> Result<Ppdc> {
        Ppdc::new(
            label,
            self.compensator.t_h.clamp(0.0, 1.0),
            self.compensator.t_v.clamp(0.0, 1.0),
        )
    }
}

/// The gate's interference target `(T_H, T_V) = (0, 2/3)`.
pub fn interference_target() -> (f64, f64) {
    (0.0, 2.0 / 3.0)
}

/// The gate's compensation target `(T_H, T_V) = (1/3, 1)`.
pub fn compensation_target() -> (f64, f64) {
    (1.0 / 3.0, 1.0)
}

/// Solves both gate targets in one window, taking the best length each.
pub fn design_cnot_couplers(
    model: &SinusoidalCouplerModel,
    window: (f64, f64),
    tolerance: f64,
) -> Result<CnotDesign> {
    let mut picks = Vec::with_capacity(2);
    for (t_h, t_v) in [interference_target(), compensation_target()] {
        let target = DesignTarget::new(t_h, t_v, tolerance, window)?;
        let solutions = solve_length(model, &target);
        let Some(best) = solutions.first() else {
            return Err(Error::InfeasibleDesign {
                lo: window.0,
                hi: window.1,
                t_h,
                t_v,
                tol: tolerance,
            });
        };
        picks.push(*best);
    }
    Ok(CnotDesign {
        interference: picks[0],
        compensator: picks[1],
    })
}

/// The synthetic calibration model anchored to the published design
/// lengths: 7.4 mm realizes (0, 2/3) and 7.0 mm realizes (1/3, 1).
pub fn reference_model() -> SinusoidalCouplerModel {
    // H: zero at 7.4 mm (fourth node) and 1/3 at 7.0 mm.
    let period_h = 0.4 * std::f64::consts::PI / (1.0f64 / 2.7).sqrt().asin();
    let offset_h = 4.0 * period_h - 7.4;
    // V: unit transfer at 7.0 mm (antinode) and 2/3 at 7.4 mm.
    let period_v = 0.4 * std::f64::consts::PI / (2.0f64 / 3.0).sqrt().acos();
    let offset_v = 3.5 * period_v - 7.0;
    SinusoidalCouplerModel::new(
        PolarizationCurve::new(0.9, period_h, offset_h).expect("valid reference curve"),
        PolarizationCurve::new(1.0, period_v, offset_v).expect("valid reference curve"),
    )
}

/// The two sampling windows used for calibration: a short-length sweep
/// plus the design window.
pub fn reference_lengths() -> Vec<f64> {
    let mut lengths: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
    lengths.extend((0..=13).map(|i| 5.6 + 0.2 * i as f64));
    lengths
}

/// Noiseless synthetic calibration data from a model.
pub fn synthetic_calibration(
    model: &SinusoidalCouplerModel,
    lengths: &[f64],
    sigma: f64,
) -> Result<Vec<CalibrationPoint>> {
    lengths
        .iter()
        .map(|&l| {
            let (t_h, t_v) = model.predict(l);
            CalibrationPoint::new(l, t_h, t_v, sigma)
        })
        .collect()
}

/// Synthetic calibration data with seeded Gaussian noise, clipped to the
/// physical range.
pub fn noisy_calibration(
    model: &SinusoidalCouplerModel,
    lengths: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<Vec<CalibrationPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::OutOfRange {
        name: "sigma",
        value: sigma,
    })?;
    lengths
        .iter()
        .map(|&l| {
            let (t_h, t_v) = model.predict(l);
            CalibrationPoint::new(
                l,
                (t_h + normal.sample(&mut rng)).clamp(0.0, 1.0),
                (t_v + normal.sample(&mut rng)).clamp(0.0, 1.0),
                sigma,
            )
        })
        .collect()
}
