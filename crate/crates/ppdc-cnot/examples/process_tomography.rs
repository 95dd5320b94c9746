//! Quantum process tomography of the gate's post-selected channel.
//!
//! Reconstructs the chi matrix from 16 input preparations x 36 measurement
//! settings, first exactly (shots = 0) and then with simulated shot noise,
//! and compares both against the analytic CNOT process matrix.

use ppdc_cnot::analysis::PhaseCompensation;
use ppdc_cnot::circuit::ideal_chip;
use ppdc_cnot::circuit::Convention;
use ppdc_cnot::quantum::pauli_labels;
use ppdc_cnot::tomography::{chi_cnot, process_fidelity, process_tomography, ChiMatrix};
use ppdc_cnot::twophoton::DistinguishabilityModel;

fn print_support(name: &str, chi: &ChiMatrix) {
    let labels = pauli_labels();
    println!("{name}: entries with |chi_mn| > 0.01");
    for m in 0..16 {
        for n in 0..16 {
            let x = chi.matrix()[(m, n)];
            if x.norm() > 0.01 {
                println!(
                    "  ({:<2},{:<2})  {:+.4} {:+.4}i",
                    labels[m], labels[n], x.re, x.im
                );
            }
        }
    }
}

fn main() -> ppdc_cnot::Result<()> {
    let m = ideal_chip(Convention::default());
    let d = DistinguishabilityModel::indistinguishable();
    let comp = PhaseCompensation::identity();

    let exact = process_tomography(&m, d, &comp, 0, 0)?;
    print_support("exact reconstruction", &exact);
    println!(
        "process fidelity to CNOT: {:.9}\n",
        process_fidelity(&exact, &chi_cnot())?
    );

    let shots = 100_000;
    let sampled = process_tomography(&m, d, &comp, shots, 7)?;
    println!(
        "sampled reconstruction ({shots} shots/setting, seed 7): fidelity {:.6}",
        process_fidelity(&sampled, &chi_cnot())?
    );
    Ok(())
}
