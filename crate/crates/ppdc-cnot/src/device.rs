//! Device description files, calibration tables, counts files and reports.
//!
//! A device description is a JSON document naming the three couplers of
//! the chip by role — the interference coupler where the rails meet and
//! the two compensating dump couplers — together with the amplitude
//! convention and the dump-coupler port feeding the circuit. Calibration
//! data is a delimited text table `length_mm, t_h, t_v, sigma`; tomography
//! counts are one JSON record per line. All formats round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_cnot_chip_routed, Convention, CouplerPort, Ppdc, TransferMatrix};
use crate::coupler::{CalibrationPoint, CnotDesign, FitReport};
use crate::linalg::CMatrix;
use crate::tomography::{CountsRecord, InputPreparation, MeasSetting};
use crate::{Error, Result};

/// The role a coupler plays in the chip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRole {
    /// The coupler joining both rails, where the photons interfere.
    Interference,
    /// The dump coupler balancing amplitudes on the target rail.
    TargetCompensator,
    /// The dump coupler balancing amplitudes on the control rail.
    ControlCompensator,
}

/// One coupler entry of a device description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceElement {
    pub label: String,
    pub role: ElementRole,
    pub t_h: f64,
    pub t_v: f64,
}

/// A complete, buildable description of the three-coupler chip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub convention: Convention,
    pub port: CouplerPort,
    pub elements: Vec<DeviceElement>,
}

impl DeviceSpec {
    /// The ideal gate parameters: interference (0, 2/3), compensators (1/3, 1).
    pub fn ideal(convention: Convention) -> Self {
        Self::from_couplers(
            convention,
            (0.0, 2.0 / 3.0),
            (1.0 / 3.0, 1.0),
            (1.0 / 3.0, 1.0),
        )
    }

    /// The fabricated device's measured mean transmissivities.
    pub fn measured(convention: Convention) -> Self {
        Self::from_couplers(convention, (0.0, 0.64), (0.43, 0.98), (0.27, 0.93))
    }

    fn from_couplers(
        convention: Convention,
        interference: (f64, f64),
        target_comp: (f64, f64),
        control_comp: (f64, f64),
    ) -> Self {
        Self {
            convention,
            port: CouplerPort::Cross,
            elements: vec![
                DeviceElement {
                    label: "PPDC1".to_string(),
                    role: ElementRole::Interference,
                    t_h: interference.0,
                    t_v: interference.1,
                },
                DeviceElement {
                    label: "PPDC2".to_string(),
                    role: ElementRole::TargetCompensator,
                    t_h: target_comp.0,
                    t_v: target_comp.1,
                },
                DeviceElement {
                    label: "PPDC3".to_string(),
                    role: ElementRole::ControlCompensator,
                    t_h: control_comp.0,
                    t_v: control_comp.1,
                },
            ],
        }
    }

    /// A device realized at a design's achieved transmissivities.
    pub fn from_design(design: &CnotDesign, convention: Convention) -> Result<Self> {
        let spec = Self::from_couplers(
            convention,
            (
                design.interference.t_h.clamp(0.0, 1.0),
                design.interference.t_v.clamp(0.0, 1.0),
            ),
            (
                design.compensator.t_h.clamp(0.0, 1.0),
                design.compensator.t_v.clamp(0.0, 1.0),
            ),
            (
                design.compensator.t_h.clamp(0.0, 1.0),
                design.compensator.t_v.clamp(0.0, 1.0),
            ),
        );
        spec.to_ppdcs()?;
        Ok(spec)
    }

    fn element(&self, role: ElementRole) -> Result<&DeviceElement> {
        let mut found = None;
        for e in &self.elements {
            if e.role == role {
                if found.is_some() {
                    return Err(Error::BadDevice {
                        reason: format!("duplicate role {role:?}"),
                    });
                }
                found = Some(e);
            }
        }
        found.ok_or_else(|| Error::BadDevice {
            reason: format!("missing role {role:?}"),
        })
    }

    /// Validates the description and returns the three couplers in the
    /// order (interference, target compensator, control compensator).
    pub fn to_ppdcs(&self) -> Result<(Ppdc, Ppdc, Ppdc)> {
        if self.elements.len() != 3 {
            return Err(Error::BadDevice {
                reason: format!("expected 3 elements, found {}", self.elements.len()),
            });
        }
        let make = |role: ElementRole| -> Result<Ppdc> {
            let e = self.element(role)?;
            Ppdc::new(e.label.clone(), e.t_h, e.t_v)
        };
        Ok((
            make(ElementRole::Interference)?,
            make(ElementRole::TargetCompensator)?,
            make(ElementRole::ControlCompensator)?,
        ))
    }

    /// Builds the chip transfer matrix this description denotes.
    pub fn build(&self) -> Result<TransferMatrix> {
        let (interference, target_comp, control_comp) = self.to_ppdcs()?;
        Ok(build_cnot_chip_routed(
            &interference,
            &target_comp,
            &control_comp,
            self.convention,
            self.port,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.to_ppdcs()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Parses a calibration table: `length_mm, t_h, t_v, sigma` per row.
///
/// Blank lines and `#` comments are skipped, and a single leading header
/// row is tolerated; any other malformed row fails with its line number.
pub fn parse_calibration(text: &str) -> Result<Vec<CalibrationPoint>> {
    let mut points = Vec::new();
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(&[',', '\t', ';'][..])
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .collect();
        let values: Vec<std::result::Result<f64, _>> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        if !saw_data && values.iter().any(|v| v.is_err()) {
            // Header row.
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut nums = [0.0; 4];
        for (i, v) in values.into_iter().enumerate() {
            nums[i] = v.map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("field {} is not a number: {e}", i + 1),
            })?;
        }
        let point = CalibrationPoint::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| {
            Error::Parse {
                line: line_no,
                reason: e.to_string(),
            }
        })?;
        points.push(point);
        saw_data = true;
    }
    if points.is_empty() {
        return Err(Error::DegenerateData {
            reason: "calibration table contains no data rows".to_string(),
        });
    }
    Ok(points)
}

/// Serializes calibration points in the format [`parse_calibration`] reads.
pub fn format_calibration(points: &[CalibrationPoint]) -> String {
    let mut out = String::from("length_mm,t_h,t_v,sigma\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.length_mm, p.t_h, p.t_v, p.sigma
        ));
    }
    out
}

/// One line of a tomography counts file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsLine {
    pub prep: InputPreparation,
    pub setting: MeasSetting,
    pub shots: u64,
    pub successes: u64,
}

/// Parses a counts file: one JSON record per line.
pub fn parse_counts(text: &str) -> Result<Vec<(InputPreparation, CountsRecord)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: CountsLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        let prep = InputPreparation::new(parsed.prep.first, parsed.prep.second).map_err(|e| {
            Error::Parse {
                line: line_no,
                reason: e.to_string(),
            }
        })?;
        let record =
            CountsRecord::new(parsed.setting, parsed.shots, parsed.successes).map_err(|e| {
                Error::Parse {
                    line: line_no,
                    reason: e.to_string(),
                }
            })?;
        out.push((prep, record));
    }
    Ok(out)
}

/// Serializes counts in the format [`parse_counts`] reads.
pub fn format_counts(records: &[(InputPreparation, CountsRecord)]) -> Result<String> {
    let mut out = String::new();
    for (prep, r) in records {
        let line = CountsLine {
            prep: *prep,
            setting: r.setting,
            shots: r.shots,
            successes: r.successes,
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    Ok(out)
}

/// A complex matrix split into real and imaginary parts for JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = m.nrows();
        let cols = m.ncols();
        let mut re = vec![vec![0.0; cols]; rows];
        let mut im = vec![vec![0.0; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                re[i][j] = m[(i, j)].re;
                im[i][j] = m[(i, j)].im;
            }
        }
        Self { re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        if rows == 0 || self.im.len() != rows {
            return Err(Error::BadDevice {
                reason: "matrix re/im blocks disagree in shape".to_string(),
            });
        }
        let cols = self.re[0].len();
        if self
            .re
            .iter()
            .chain(self.im.iter())
            .any(|row| row.len() != cols)
        {
            return Err(Error::BadDevice {
                reason: "matrix re/im blocks disagree in shape".to_string(),
            });
        }
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = num_complex::Complex64::new(self.re[i][j], self.im[i][j]);
            }
        }
        Ok(m)
    }
}

/// Truth-table run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTableReport {
    pub convention: String,
    pub p: f64,
    pub table: [[f64; 4]; 4],
    pub success: [f64; 4],
    pub fidelity: f64,
    /// The fully distinguishable limit, the reference for correction.
    pub distinguishable_table: [[f64; 4]; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected_table: Option<[[f64; 4]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected_fidelity: Option<f64>,
}

/// Bell generation and discrimination report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    pub convention: String,
    pub p: f64,
    /// Compensation phases (input control, input target, output control,
    /// output target) in radians.
    pub compensation: [f64; 4],
    pub state_labels: [String; 4],
    pub states: Vec<MatrixJson>,
    pub fidelities: [f64; 4],
    pub success: [f64; 4],
    pub discrimination: [[f64; 4]; 4],
    pub discrimination_probability: f64,
}

/// State-tomography run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateTomoReport {
    pub convention: String,
    pub p: f64,
    pub prep: InputPreparation,
    pub shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub density: MatrixJson,
    pub fidelity_to_ideal: f64,
}

/// Process-tomography run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessTomoReport {
    pub convention: String,
    pub p: f64,
    pub shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub chi: MatrixJson,
    pub fidelity_to_cnot: f64,
}

/// Two-photon interference report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomReport {
    pub reflectivity: f64,
    pub visibility_theoretical: f64,
    pub p: f64,
    pub visibility_simulated: f64,
    /// Coincidence probability at zero delay for this reflectivity.
    pub coincidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inferred_p: Option<f64>,
}

/// Coupler design run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub fit: FitReport,
    pub design: CnotDesign,
    pub device: DeviceSpec,
}
