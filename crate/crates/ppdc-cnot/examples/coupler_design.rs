//! End-to-end coupler design: fit a sinusoidal coupled-mode model to
//! calibration data, solve for the interaction lengths hitting the gate's
//! two target splitting ratios, and check the designed device.

use ppdc_cnot::analysis::{truth_table, truth_table_fidelity, PhaseCompensation};
use ppdc_cnot::circuit::Convention;
use ppdc_cnot::coupler::{
    design_cnot_couplers, fit_model, reference_lengths, reference_model, synthetic_calibration,
};
use ppdc_cnot::device::DeviceSpec;
use ppdc_cnot::twophoton::DistinguishabilityModel;

fn main() -> ppdc_cnot::Result<()> {
    // Noiseless calibration points from the reference fabrication model.
    let truth = reference_model();
    let points = synthetic_calibration(&truth, &reference_lengths(), 0.01)?;
    let fit = fit_model(&points)?;

    println!("fitted sinusoidal model (A, Lambda mm, L0 mm):");
    println!(
        "  H: {:.6} {:.6} {:.6}   chi2 {:.3e} (dof {})",
        fit.model.h.amplitude(),
        fit.model.h.period_mm(),
        fit.model.h.offset_mm(),
        fit.h_stats.chi_squared,
        fit.h_stats.dof
    );
    println!(
        "  V: {:.6} {:.6} {:.6}   chi2 {:.3e} (dof {})",
        fit.model.v.amplitude(),
        fit.model.v.period_mm(),
        fit.model.v.offset_mm(),
        fit.v_stats.chi_squared,
        fit.v_stats.dof
    );

    // Two targets: interference split (0, 2/3) and compensation (1/3, 1).
    let design = design_cnot_couplers(&fit.model, (5.6, 8.2), 0.02)?;
    println!("\ndesigned interaction lengths:");
    println!(
        "  interference {:.4} mm -> (T_H, T_V) = ({:.6}, {:.6}), residual {:.3e}",
        design.interference.length_mm,
        design.interference.t_h,
        design.interference.t_v,
        design.interference.residual
    );
    println!(
        "  compensator  {:.4} mm -> (T_H, T_V) = ({:.6}, {:.6}), residual {:.3e}",
        design.compensator.length_mm,
        design.compensator.t_h,
        design.compensator.t_v,
        design.compensator.residual
    );

    // The designed chip should implement the gate almost exactly.
    let spec = DeviceSpec::from_design(&design, Convention::default())?;
    let tt = truth_table(
        &spec.build()?,
        DistinguishabilityModel::indistinguishable(),
        &PhaseCompensation::identity(),
    )?;
    println!(
        "\ndesigned device mean logical fidelity {:.6}",
        truth_table_fidelity(&tt)
    );
    Ok(())
}
