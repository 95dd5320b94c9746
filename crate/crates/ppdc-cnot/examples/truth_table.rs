//! Computes the post-selected logical truth table of the gate.
//!
//! Runs the ideal coupler set first (exact CNOT permutation, success 1/9),
//! then the measured couplers of the fabricated chip, and prints each
//! table with its mean logical fidelity.

use ppdc_cnot::analysis::{truth_table, truth_table_fidelity, PhaseCompensation};
use ppdc_cnot::circuit::Convention;
use ppdc_cnot::device::DeviceSpec;
use ppdc_cnot::twophoton::DistinguishabilityModel;

fn print_table(name: &str, spec: &DeviceSpec) -> ppdc_cnot::Result<()> {
    let m = spec.build()?;
    let d = DistinguishabilityModel::indistinguishable();
    let tt = truth_table(&m, d, &PhaseCompensation::identity())?;
    println!("{name}:");
    println!("  in   P(00)     P(01)     P(10)     P(11)     success");
    for k in 0..4 {
        let row = tt.probs[k];
        println!(
            "  {}{}   {:.6} {:.6} {:.6} {:.6}  {:.6}",
            k >> 1,
            k & 1,
            row[0],
            row[1],
            row[2],
            row[3],
            tt.success[k]
        );
    }
    println!("  mean logical fidelity {:.9}\n", truth_table_fidelity(&tt));
    Ok(())
}

fn main() -> ppdc_cnot::Result<()> {
    let convention = Convention::default();
    print_table("ideal couplers", &DeviceSpec::ideal(convention))?;
    print_table("measured couplers", &DeviceSpec::measured(convention))?;
    Ok(())
}
