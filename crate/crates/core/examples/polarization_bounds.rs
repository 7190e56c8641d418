//! Purified visibility when one photon of each copy is rotated in
//! polarization, in the same or in opposite directions.

use purification::protocol::polarization_bounds;

fn main() -> purification::Result<()> {
    let thetas: Vec<f64> = (0..=9).map(|k| (5.0 * k as f64).to_radians()).collect();
    println!(
        "{:>6} {:>8} {:>8} {:>9}",
        "theta", "V_raw", "same", "opposite"
    );
    for r in polarization_bounds(&thetas)? {
        println!(
            "{:>6.1} {:>8.4} {:>8.4} {:>9.4}",
            r.theta.to_degrees(),
            r.v_raw,
            r.v_pure_same,
            r.v_pure_opposite
        );
    }
    Ok(())
}
