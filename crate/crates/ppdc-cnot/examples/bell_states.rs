//! Bell-state generation and discrimination through the gate.
//!
//! Calibrates the four compensation phases once on the ideal couplers,
//! freezes them, then sends the entangling product inputs through the
//! device (generation) and the four Bell states back through it
//! (discrimination).

use ppdc_cnot::analysis::{bell_discrimination, bell_generation, calibrate_phases};
use ppdc_cnot::circuit::{build_cnot_chip, ideal_couplers};
use ppdc_cnot::quantum::BELL_NAMES;
use ppdc_cnot::twophoton::DistinguishabilityModel;

fn main() -> ppdc_cnot::Result<()> {
    let (p1, p2, p3) = ideal_couplers();
    let (convention, comp) = calibrate_phases(&p1, &p2, &p3)?;
    println!("frozen compensation (convention {convention}):");
    println!(
        "  input  ({:+.6}, {:+.6})   output ({:+.6}, {:+.6})\n",
        comp.input_control, comp.input_target, comp.output_control, comp.output_target
    );

    let m = build_cnot_chip(&p1, &p2, &p3, convention);
    let d = DistinguishabilityModel::indistinguishable();

    let gen = bell_generation(&m, d, &comp)?;
    println!("generation fidelities (|+/-> |0/1> inputs):");
    for (name, f) in BELL_NAMES.iter().zip(gen.fidelities.iter()) {
        println!("  {name:<9} {f:.9}");
    }

    let disc = bell_discrimination(&m, d, &comp)?;
    println!("\ndiscrimination confusion matrix (rows: input Bell state):");
    for (name, row) in BELL_NAMES.iter().zip(disc.confusion.iter()) {
        println!(
            "  {name:<9} {:.6} {:.6} {:.6} {:.6}",
            row[0], row[1], row[2], row[3]
        );
    }
    println!("mean discrimination probability {:.9}", disc.probability);
    Ok(())
}
