//! Simulation and analysis of a polarization-encoded photonic CNOT gate.
//!
//! The device under study is a two-waveguide chip built from three partially
//! polarizing directional couplers (PPDCs): one coupler where the two photons
//! interfere, followed by one compensating coupler per rail that balances the
//! horizontal and vertical amplitudes. Post-selection on one photon per
//! output rail yields a probabilistic CNOT with success probability 1/9.
//!
//! The crate is organized bottom-up:
//!
//! * [`quantum`] — two-qubit states, density matrices, Pauli algebra and
//!   fidelity measures.
//! * [`circuit`] — transfer matrices of couplers, attenuators and waveplates
//!   on the four optical modes (rail x polarization).
//! * [`twophoton`] — two-photon evolution with full, partial or no
//!   indistinguishability, and Hong-Ou-Mandel visibility.
//! * [`analysis`] — logical encoding, truth tables, Bell-state generation and
//!   discrimination, and the distinguishability correction.
//! * [`tomography`] — quantum state and process tomography with optional
//!   shot noise.
//! * [`coupler`] — sinusoidal coupled-mode model, calibration fits and
//!   interaction-length design.
//! * [`device`] — file formats: device descriptions, calibration tables,
//!   count records and reports.
//! * [`cli`] — the command-line interface used by the `ppdc-cnot` binary.
//!
//! Most users should start from a [`device::DeviceSpec`] (either
//! [`device::DeviceSpec::ideal`] or one loaded from JSON), build the chip
//! transfer matrix, and feed it to the functions in [`analysis`] or
//! [`tomography`]. The `examples/` directory contains one runnable example
//! per capability.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod coupler;
pub mod device;
pub mod linalg;
pub mod quantum;
pub mod tomography;
pub mod twophoton;

use thiserror::Error;

/// Errors reported by this crate.
#[derive(Error, Debug)]
pub enum Error {
    /// A matrix had the wrong shape for the requested operation.
    #[error("expected a {expected} matrix, got {rows}x{cols}")]
    BadShape {
        expected: &'static str,
        rows: usize,
        cols: usize,
    },
    /// A matrix that must be Hermitian was not, within tolerance.
    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    /// A matrix that must be positive semidefinite had a significantly
    /// negative eigenvalue.
    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    /// A density matrix had a trace too far from one.
    #[error("density matrix trace is {trace:.12}, expected 1")]
    BadTrace { trace: f64 },
    /// A state vector was not normalized.
    #[error("state vector norm is {norm:.12}, expected 1")]
    BadNorm { norm: f64 },
    /// A transfer matrix amplified some input (largest singular value > 1).
    #[error("transfer matrix is not passive (largest singular value = {sigma_max:.12})")]
    NotPassive { sigma_max: f64 },
    /// A transfer matrix flagged unitary failed the unitarity check.
    #[error("transfer matrix is not unitary (max |U^H U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    /// A transmissivity or probability was outside [0, 1].
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    /// Post-selection removed every outcome, so no distribution exists.
    #[error("zero post-selection success probability: {context}")]
    EmptyDistribution { context: String },
    /// A truth-table input row had no coincidences (the device blocks it).
    #[error("device blocks logical input ({control}, {target}): all-zero row")]
    BlockedInput { control: u8, target: u8 },
    /// Phase calibration could not reach an exact CNOT on the ideal device.
    #[error("phase calibration failed: best CNOT overlap {best:.6} (convention {convention})")]
    CalibrationFailed { best: f64, convention: String },
    /// A measured Hong-Ou-Mandel visibility was nonphysical.
    #[error("nonphysical visibility: measured {measured} vs theoretical {theoretical}")]
    NonphysicalVisibility { measured: f64, theoretical: f64 },
    /// A tomography record set was incomplete.
    #[error("missing tomography settings: {missing:?}")]
    MissingSettings { missing: Vec<String> },
    /// A tomography record was invalid (zero shots, successes > shots, ...).
    #[error("invalid counts record for setting {setting}: {reason}")]
    BadCountsRecord { setting: String, reason: String },
    /// The linear system for a reconstruction was singular.
    #[error("singular linear system in {context}")]
    SingularSystem { context: &'static str },
    /// Calibration data unusable for fitting.
    #[error("degenerate calibration data: {reason}")]
    DegenerateData { reason: String },
    /// No interaction length meets the requested targets.
    #[error("no feasible length in [{lo}, {hi}] mm for targets ({t_h}, {t_v}) at tolerance {tol}")]
    InfeasibleDesign {
        lo: f64,
        hi: f64,
        t_h: f64,
        t_v: f64,
        tol: f64,
    },
    /// A device description file failed validation.
    #[error("invalid device description: {reason}")]
    BadDevice { reason: String },
    /// A text input (calibration table, counts file, ...) failed to parse.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    /// Command-line usage error.
    #[error("usage error: {0}")]
    Usage(String),
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Underlying JSON failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 data, 4 infeasibility.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::InfeasibleDesign { .. }
            | Error::CalibrationFailed { .. }
            | Error::NonphysicalVisibility { .. }
            | Error::EmptyDistribution { .. }
            | Error::BlockedInput { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
