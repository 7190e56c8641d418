//! Detection probabilities of partially distinguishable photons in a small
//! coupler mesh, with the naive and cycle-sum kernels side by side.

use num_complex::Complex64;
use purification::circuit::beamsplitter;
use purification::distinguishability::{polarization, PolarizationState};
use purification::fock::{enumerate_outputs, AssignmentList, FockState};
use purification::permanent::{multipermanent_with, output_probability, Kernel};
use purification::CMatrix;

fn main() -> purification::Result<()> {
    // a small mesh of balanced and unbalanced couplers
    let mut u = beamsplitter(0.5, (0, 1), 4)?;
    for (r, pair) in [(0.3, (1, 2)), (0.5, (2, 3)), (0.7, (0, 1)), (0.5, (1, 2))] {
        u = u.then(&beamsplitter(r, pair, 4)?);
    }
    let states: Vec<PolarizationState> = [0.0, 0.3, 0.6]
        .iter()
        .map(|&a| PolarizationState::linear(a))
        .collect();
    let s = polarization(&states)?;
    let input = FockState::new(vec![1, 1, 1, 0]);
    let labels = AssignmentList::identity(3);

    let mut total = 0.0;
    for out in enumerate_outputs(3, 4) {
        let p = output_probability(u.entries(), &input, &out, &s, &labels)?;
        total += p;
        println!("{out}: {p:.6}");
    }
    println!("sum: {total:.12}");

    let b = CMatrix::from_fn(5, 5, |j, k| {
        Complex64::from_polar(1.0 / 5f64.sqrt(), (j * k) as f64)
    });
    let s5 = polarization(
        &(0..5)
            .map(|k| PolarizationState::linear(0.2 * k as f64))
            .collect::<Vec<_>>(),
    )?;
    let naive = multipermanent_with(&b, s5.matrix(), Kernel::Naive)?;
    let cycle = multipermanent_with(&b, s5.matrix(), Kernel::CycleSum)?;
    println!("5 photons: naive {naive:.12}, cycle sum {cycle:.12}");
    Ok(())
}
