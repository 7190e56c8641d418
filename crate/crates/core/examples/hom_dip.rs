//! Two-photon interference on a balanced beamsplitter: coincidence
//! probability and visibility against the internal-state overlap.

use purification::circuit::beamsplitter;
use purification::distinguishability::constant_overlap;
use purification::fock::{AssignmentList, FockState};
use purification::permanent::{output_probability, DistinguishabilityMatrix};

fn main() -> purification::Result<()> {
    let bs = beamsplitter(0.5, (0, 1), 2)?;
    let one_each = FockState::new(vec![1, 1]);
    let labels = AssignmentList::identity(2);
    let p_dist = output_probability(
        bs.entries(),
        &one_each,
        &one_each,
        &DistinguishabilityMatrix::distinguishable(2),
        &labels,
    )?;

    println!("{:>8} {:>12} {:>10}", "overlap", "P(1,1)", "V");
    for k in 0..=10 {
        let c = k as f64 / 10.0;
        let s = constant_overlap(2, c)?;
        let p = output_probability(bs.entries(), &one_each, &one_each, &s, &labels)?;
        println!("{c:>8.2} {p:>12.6} {:>10.6}", 1.0 - p / p_dist);
    }
    Ok(())
}
