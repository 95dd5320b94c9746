//! Command-line front end: deterministic experiment orchestration.
//!
//! Every subcommand resolves a device (a JSON description file or the
//! built-in `ideal` / `measured` parameter sets), freezes the phase
//! compensation calibrated once against the ideal device of the same
//! convention, and emits a JSON report plus a human-readable summary.
//! Runs are deterministic given their inputs and seed; sampled modes
//! (`--shots > 0`) require `--seed`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::analysis::{
    bell_discrimination, bell_generation, calibrate_phases_for, correct_distinguishability,
    logical_output, truth_table, truth_table_fidelity, PhaseCompensation, TruthTable,
};
use crate::circuit::{ideal_chip, Convention, TransferMatrix};
use crate::coupler::design_cnot_couplers;
use crate::device::{
    format_counts, parse_calibration, BellReport, DesignReport, DeviceSpec, HomReport, MatrixJson,
    ProcessTomoReport, StateTomoReport, TruthTableReport,
};
use crate::quantum::{cnot_unitary, BELL_NAMES};
use crate::tomography::{
    chi_cnot, linear_inversion_state, process_fidelity, process_tomography, project_to_physical,
    simulate_counts, simulate_process_counts, InputPreparation, MeasSetting, TomoBasis,
};
use crate::twophoton::{hom_visibility_theoretical, infer_p, DistinguishabilityModel};
use crate::{Error, Result};

/// Coupler amplitude convention, as a command-line value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ConventionArg {
    ImagCross,
    RealAsym,
}

impl From<ConventionArg> for Convention {
    fn from(value: ConventionArg) -> Self {
        match value {
            ConventionArg::ImagCross => Convention::ImagCross,
            ConventionArg::RealAsym => Convention::RealAsym,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ppdc-cnot",
    version,
    about = "Simulate, analyze and design a polarization-encoded photonic CNOT gate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by device-driven subcommands.
#[derive(Args, Debug)]
pub struct DeviceArgs {
    /// Device description JSON, or the built-ins `ideal` / `measured`.
    #[arg(long, default_value = "ideal")]
    pub device: String,
    /// Photon-pair distinguishability weight in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// Override the device's amplitude convention.
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Sampling flags for subcommands with a shot-noise mode.
#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Coincidences per measurement setting; 0 selects exact mode.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    /// RNG seed; required whenever --shots > 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a calibration table and design the gate couplers.
    Design {
        /// Calibration table (rows: length_mm, t_h, t_v, sigma).
        #[arg(long)]
        calibration: PathBuf,
        /// Search window lower edge, mm.
        #[arg(long, default_value_t = 5.6)]
        window_min: f64,
        /// Search window upper edge, mm.
        #[arg(long, default_value_t = 8.2)]
        window_max: f64,
        /// Worst-case transmissivity error allowed at a solution.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        /// Amplitude convention recorded in the device file.
        #[arg(long, value_enum, default_value_t = ConventionArg::ImagCross)]
        convention: ConventionArg,
        /// Write the device description JSON here.
        #[arg(long)]
        device_out: Option<PathBuf>,
        /// Write the full design report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the logical truth table and its fidelity.
    TruthTable {
        #[command(flatten)]
        device: DeviceArgs,
        #[command(flatten)]
        sample: SampleArgs,
        /// Also emit the distinguishability-corrected table.
        #[arg(long)]
        correct: bool,
    },
    /// Generate the four Bell states and discriminate them (exact mode).
    Bell {
        #[command(flatten)]
        device: DeviceArgs,
    },
    /// State tomography of one prepared input (two letters from H, V, D, R).
    TomoState {
        #[command(flatten)]
        device: DeviceArgs,
        #[command(flatten)]
        sample: SampleArgs,
        /// Input preparation, e.g. `VH`.
        #[arg(default_value = "HH")]
        prep: String,
        /// Write the simulated counts here (sampled mode only).
        #[arg(long)]
        counts_out: Option<PathBuf>,
    },
    /// Process tomography over the 16 informationally complete inputs.
    TomoProcess {
        #[command(flatten)]
        device: DeviceArgs,
        #[command(flatten)]
        sample: SampleArgs,
        /// Write the simulated counts here (sampled mode only).
        #[arg(long)]
        counts_out: Option<PathBuf>,
    },
    /// Two-photon interference visibility at a splitter reflectivity.
    Hom {
        /// Splitter reflectivity, strictly between 0 and 1.
        reflectivity: f64,
        /// Distinguishability weight for the simulated visibility.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Measured visibility; infers the distinguishability weight.
        #[arg(long)]
        v_meas: Option<f64>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the distinguishability correction to a truth-table report.
    Correct {
        /// A truth-table report produced by this tool.
        #[arg(long)]
        input: PathBuf,
        /// Override the report's distinguishability weight.
        #[arg(long)]
        p: Option<f64>,
        /// Write the corrected report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses the process arguments and runs the selected subcommand.
pub fn run() -> Result<()> {
    dispatch(Cli::parse())
}

/// Runs one parsed command.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design {
            calibration,
            window_min,
            window_max,
            tolerance,
            convention,
            device_out,
            out,
        } => cmd_design(
            &calibration,
            (window_min, window_max),
            tolerance,
            convention.into(),
            device_out.as_deref(),
            out.as_deref(),
        ),
        Command::TruthTable {
            device,
            sample,
            correct,
        } => cmd_truth_table(&device, &sample, correct),
        Command::Bell { device } => cmd_bell(&device),
        Command::TomoState {
            device,
            sample,
            prep,
            counts_out,
        } => cmd_tomo_state(&device, &sample, &prep, counts_out.as_deref()),
        Command::TomoProcess {
            device,
            sample,
            counts_out,
        } => cmd_tomo_process(&device, &sample, counts_out.as_deref()),
        Command::Hom {
            reflectivity,
            p,
            v_meas,
            out,
        } => cmd_hom(reflectivity, p, v_meas, out.as_deref()),
        Command::Correct { input, p, out } => cmd_correct(&input, p, out.as_deref()),
    }
}

fn resolve_device(args: &DeviceArgs) -> Result<(DeviceSpec, TransferMatrix)> {
    let override_convention = args.convention.map(Convention::from);
    let mut spec = match args.device.as_str() {
        "ideal" => DeviceSpec::ideal(override_convention.unwrap_or_default()),
        "measured" => DeviceSpec::measured(override_convention.unwrap_or_default()),
        path => DeviceSpec::load(Path::new(path))?,
    };
    if let Some(c) = override_convention {
        spec.convention = c;
    }
    let matrix = spec.build()?;
    Ok((spec, matrix))
}

fn distinguishability(p: f64) -> Result<DistinguishabilityModel> {
    DistinguishabilityModel::new(p)
        .map_err(|_| Error::Usage(format!("--p must lie in [0, 1], got {p}")))
}

fn require_seed(sample: &SampleArgs) -> Result<u64> {
    match (sample.shots, sample.seed) {
        (0, _) => Ok(0),
        (_, Some(seed)) => Ok(seed),
        (_, None) => Err(Error::Usage(
            "--seed is required when --shots > 0".to_string(),
        )),
    }
}

/// The phase compensation calibrated once against the ideal device of the
/// given convention, then reused unchanged for every real device.
fn frozen_compensation(convention: Convention) -> PhaseCompensation {
    calibrate_phases_for(&ideal_chip(convention)).0
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    }
    Ok(())
}

fn cmd_design(
    calibration: &Path,
    window: (f64, f64),
    tolerance: f64,
    convention: Convention,
    device_out: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let text = std::fs::read_to_string(calibration).map_err(|e| {
        Error::Usage(format!(
            "cannot read calibration table {}: {e}",
            calibration.display()
        ))
    })?;
    let points = parse_calibration(&text)?;
    let fit = crate::coupler::fit_model(&points)?;
    let design = design_cnot_couplers(&fit.model, window, tolerance)?;
    let device = DeviceSpec::from_design(&design, convention)?;
    if let Some(path) = device_out {
        device.save(path)?;
    }
    let report = DesignReport {
        fit,
        design,
        device,
    };
    write_json(&report, out)?;
    println!(
        "interference coupler: L = {:.4} mm -> (t_h, t_v) = ({:.6}, {:.6}), residual {:.2e}",
        design.interference.length_mm,
        design.interference.t_h,
        design.interference.t_v,
        design.interference.residual
    );
    println!(
        "compensation coupler: L = {:.4} mm -> (t_h, t_v) = ({:.6}, {:.6}), residual {:.2e}",
        design.compensator.length_mm,
        design.compensator.t_h,
        design.compensator.t_v,
        design.compensator.residual
    );
    Ok(())
}

/// Draws one multinomial truth-table row by conditional binomials.
fn sample_table(exact: &TruthTable, shots: u64, seed: u64) -> Result<TruthTable> {
    let mut probs = [[0.0; 4]; 4];
    for (k, row) in probs.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Streams disjoint from the tomography range (16 * 36).
        rng.set_stream(1000 + k as u64);
        let mut remaining = shots;
        let mut tail = 1.0f64;
        for (j, slot) in row.iter_mut().enumerate() {
            let n = if j == 3 {
                remaining
            } else {
                let conditional = (exact.probs[k][j] / tail.max(1e-300)).clamp(0.0, 1.0);
                let draw = Binomial::new(remaining, conditional)
                    .expect("clamped probability")
                    .sample(&mut rng);
                tail -= exact.probs[k][j];
                remaining -= draw;
                draw
            };
            *slot = n as f64 / shots as f64;
        }
    }
    TruthTable::new(probs, exact.success)
}

fn cmd_truth_table(device: &DeviceArgs, sample: &SampleArgs, correct: bool) -> Result<()> {
    let (spec, m) = resolve_device(device)?;
    let d = distinguishability(device.p)?;
    let seed = require_seed(sample)?;
    let comp = frozen_compensation(spec.convention);
    let exact = truth_table(&m, d, &comp)?;
    let table = if sample.shots > 0 {
        sample_table(&exact, sample.shots, seed)?
    } else {
        exact.clone()
    };
    let dist = truth_table(&m, DistinguishabilityModel::new(1.0)?, &comp)?;
    let (corrected_table, corrected_fidelity) = if correct {
        let fixed = correct_distinguishability(&table, &dist, device.p)?;
        (Some(fixed.probs), Some(truth_table_fidelity(&fixed)))
    } else {
        (None, None)
    };
    let report = TruthTableReport {
        convention: spec.convention.to_string(),
        p: device.p,
        table: table.probs,
        success: table.success,
        fidelity: truth_table_fidelity(&table),
        distinguishable_table: dist.probs,
        corrected_table,
        corrected_fidelity,
    };
    write_json(&report, device.out.as_deref())?;
    print_table("truth table", &report.table, &report.success);
    println!("fidelity {:.9}", report.fidelity);
    if let Some(f) = report.corrected_fidelity {
        println!("corrected fidelity {f:.9}");
    }
    Ok(())
}

fn print_table(title: &str, probs: &[[f64; 4]; 4], success: &[f64; 4]) {
    println!("{title} (rows: input 00, 01, 10, 11):");
    for k in 0..4 {
        let row: Vec<String> = probs[k].iter().map(|v| format!("{v:.6}")).collect();
        println!("  {}   success {:.6}", row.join(" "), success[k]);
    }
}

fn cmd_bell(device: &DeviceArgs) -> Result<()> {
    let (spec, m) = resolve_device(device)?;
    let d = distinguishability(device.p)?;
    let comp = frozen_compensation(spec.convention);
    let gen = bell_generation(&m, d, &comp)?;
    let disc = bell_discrimination(&m, d, &comp)?;
    let report = BellReport {
        convention: spec.convention.to_string(),
        p: device.p,
        compensation: [
            comp.input_control,
            comp.input_target,
            comp.output_control,
            comp.output_target,
        ],
        state_labels: BELL_NAMES.map(String::from),
        states: gen
            .states
            .iter()
            .map(|s| MatrixJson::from_matrix(s.matrix()))
            .collect(),
        fidelities: gen.fidelities,
        success: gen.success,
        discrimination: disc.confusion,
        discrimination_probability: disc.probability,
    };
    write_json(&report, device.out.as_deref())?;
    for (name, f) in BELL_NAMES.iter().zip(report.fidelities.iter()) {
        println!("{name}: fidelity {f:.9}");
    }
    println!(
        "discrimination probability {:.9}",
        report.discrimination_probability
    );
    Ok(())
}

fn parse_prep(text: &str) -> Result<InputPreparation> {
    let basis = |ch: char| -> Result<TomoBasis> {
        match ch {
            'H' => Ok(TomoBasis::H),
            'V' => Ok(TomoBasis::V),
            'D' => Ok(TomoBasis::D),
            'R' => Ok(TomoBasis::R),
            other => Err(Error::Usage(format!(
                "preparation letter {other:?} is not one of H, V, D, R"
            ))),
        }
    };
    let chars: Vec<char> = text.chars().collect();
    if chars.len() != 2 {
        return Err(Error::Usage(format!(
            "preparation must be two letters from H, V, D, R, got {text:?}"
        )));
    }
    InputPreparation::new(basis(chars[0])?, basis(chars[1])?)
}

fn cmd_tomo_state(
    device: &DeviceArgs,
    sample: &SampleArgs,
    prep_text: &str,
    counts_out: Option<&Path>,
) -> Result<()> {
    let (spec, m) = resolve_device(device)?;
    let d = distinguishability(device.p)?;
    let seed = require_seed(sample)?;
    let comp = frozen_compensation(spec.convention);
    let prep = parse_prep(prep_text)?;
    let density = if sample.shots == 0 {
        logical_output(&m, &prep.state(), d, &comp)?.density
    } else {
        let mut records = Vec::with_capacity(36);
        for setting in MeasSetting::all() {
            records.push(simulate_counts(
                &m,
                d,
                &comp,
                prep,
                setting,
                sample.shots,
                seed,
            )?);
        }
        if let Some(path) = counts_out {
            let lines: Vec<_> = records.iter().map(|r| (prep, *r)).collect();
            std::fs::write(path, format_counts(&lines)?)?;
        }
        project_to_physical(&linear_inversion_state(&records)?)?
    };
    let ideal = prep.state().apply(&cnot_unitary())?;
    let report = StateTomoReport {
        convention: spec.convention.to_string(),
        p: device.p,
        prep,
        shots: sample.shots,
        seed: sample.seed,
        density: MatrixJson::from_matrix(density.matrix()),
        fidelity_to_ideal: density.projection(&ideal),
    };
    write_json(&report, device.out.as_deref())?;
    println!(
        "prepared {:?}/{:?}: fidelity to the ideal gate output {:.9}",
        prep.first, prep.second, report.fidelity_to_ideal
    );
    Ok(())
}

fn cmd_tomo_process(
    device: &DeviceArgs,
    sample: &SampleArgs,
    counts_out: Option<&Path>,
) -> Result<()> {
    let (spec, m) = resolve_device(device)?;
    let d = distinguishability(device.p)?;
    let seed = require_seed(sample)?;
    let comp = frozen_compensation(spec.convention);
    if sample.shots > 0 {
        if let Some(path) = counts_out {
            let records = simulate_process_counts(&m, d, &comp, sample.shots, seed)?;
            std::fs::write(path, format_counts(&records)?)?;
        }
    }
    let chi = process_tomography(&m, d, &comp, sample.shots, seed)?;
    let fidelity = process_fidelity(&chi, &chi_cnot())?;
    let report = ProcessTomoReport {
        convention: spec.convention.to_string(),
        p: device.p,
        shots: sample.shots,
        seed: sample.seed,
        chi: MatrixJson::from_matrix(chi.matrix()),
        fidelity_to_cnot: fidelity,
    };
    write_json(&report, device.out.as_deref())?;
    println!("process fidelity to CNOT {fidelity:.9}");
    Ok(())
}

fn cmd_hom(reflectivity: f64, p: f64, v_meas: Option<f64>, out: Option<&Path>) -> Result<()> {
    let v_theo = hom_visibility_theoretical(reflectivity)?;
    distinguishability(p)?;
    let t = 1.0 - reflectivity;
    let quantum = (t - reflectivity).powi(2);
    let classical = t * t + reflectivity * reflectivity;
    let report = HomReport {
        reflectivity,
        visibility_theoretical: v_theo,
        p,
        visibility_simulated: (1.0 - p) * v_theo,
        coincidence: (1.0 - p) * quantum + p * classical,
        inferred_p: match v_meas {
            Some(v) => Some(infer_p(v, v_theo)?.p()),
            None => None,
        },
    };
    write_json(&report, out)?;
    println!(
        "theoretical visibility {:.9}, simulated visibility {:.9}, zero-delay coincidence {:.9}",
        report.visibility_theoretical, report.visibility_simulated, report.coincidence
    );
    if let Some(p_hat) = report.inferred_p {
        println!("inferred distinguishability p = {p_hat:.9}");
    }
    Ok(())
}

fn cmd_correct(input: &Path, p_override: Option<f64>, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Error::Usage(format!("cannot read report {}: {e}", input.display())))?;
    let mut report: TruthTableReport = serde_json::from_str(&text)?;
    let p = p_override.unwrap_or(report.p);
    let measured = TruthTable::new(report.table, report.success)?;
    let dist = TruthTable::new(report.distinguishable_table, report.success)?;
    let fixed = correct_distinguishability(&measured, &dist, p)?;
    report.p = p;
    report.corrected_table = Some(fixed.probs);
    report.corrected_fidelity = Some(truth_table_fidelity(&fixed));
    write_json(&report, out)?;
    print_table("corrected table", &fixed.probs, &fixed.success);
    println!(
        "corrected fidelity {:.9}",
        report.corrected_fidelity.expect("just set")
    );
    Ok(())
}
