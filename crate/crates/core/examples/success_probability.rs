//! Success probability of the n-photon purification cascade.

use purification::protocol::success_probability;

fn main() -> purification::Result<()> {
    for n in 2..=8 {
        println!("n = {n}: {:.6e}", success_probability(n)?);
    }
    Ok(())
}
