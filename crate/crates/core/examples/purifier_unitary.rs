//! The six-mode two-copy purifier: transfer matrix, the heralded
//! four-photon event and its probability for identical and distinguishable
//! photons.

use purification::circuit::purifier_pair_circuit;
use purification::fock::{AssignmentList, FockState};
use purification::permanent::{output_probability, DistinguishabilityMatrix};

fn main() -> purification::Result<()> {
    let u = purifier_pair_circuit(0.5, 0.5, 0.5)?;
    println!("transfer matrix (rows: outputs, columns: inputs), scaled by 2 sqrt(2):");
    let scale = 2.0 * 2f64.sqrt();
    for i in 0..6 {
        let row: Vec<String> = (0..6)
            .map(|j| {
                let z = u.entries()[(i, j)] * scale;
                format!("{:>6.3}{:+.3}i", z.re, z.im)
            })
            .collect();
        println!("  {}", row.join("  "));
    }

    let input = FockState::new(vec![1, 1, 0, 0, 1, 1]);
    let output = FockState::new(vec![0, 1, 1, 1, 1, 0]);
    let labels = AssignmentList::identity(4);
    for (name, s) in [
        ("identical", DistinguishabilityMatrix::indistinguishable(4)),
        (
            "distinguishable",
            DistinguishabilityMatrix::distinguishable(4),
        ),
    ] {
        let p = output_probability(u.entries(), &input, &output, &s, &labels)?;
        println!("P({input} -> {output}), {name}: {p:.6}");
    }
    Ok(())
}
