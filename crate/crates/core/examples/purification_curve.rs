//! Purified against raw visibility for constant overlaps through the ideal
//! circuit and for the closed-form pure-dephasing model.

use purification::dephasing::{pd_purified, strength_for_raw};
use purification::protocol::{purified_visibility, NoiseConfig};

fn main() -> purification::Result<()> {
    println!(
        "{:>7} {:>15} {:>15}",
        "V_raw", "multipermanent", "pure dephasing"
    );
    for k in 0..=10 {
        let v_raw = 0.5 + 0.05 * k as f64;
        let mp = purified_visibility(v_raw.sqrt(), &NoiseConfig::default())?.pure;
        let pd = pd_purified(strength_for_raw(v_raw)?)?;
        println!("{v_raw:>7.3} {mp:>15.6} {pd:>15.6}");
    }
    Ok(())
}
