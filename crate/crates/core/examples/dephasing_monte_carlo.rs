//! Samples dephased wavepackets and compares the overlap moments with the
//! Wiener-process values and the closed-form purified indistinguishability.

use purification::dephasing::{estimate_moments, pd_purified, wiener_moments};
use purification::distinguishability::{sample_dephased_overlaps, DephasingParams, SamplingGrid};

fn main() -> purification::Result<()> {
    let gamma = 1.0;
    for x in [0.05, 0.2, 1.0] {
        let params = DephasingParams::new(gamma, x * gamma / 2.0)?;
        let samples =
            sample_dephased_overlaps(&params, 4, 2000, SamplingGrid::for_decay_rate(gamma), 42)?;
        let est = estimate_moments(&samples)?;
        let exact = wiener_moments(x)?;
        let purified = est.purified()?;
        println!("x = {x}");
        println!(
            "  pair   {:.5} +- {:.5} (exact {:.5})",
            est.pair.mean, est.pair.se, exact.pair
        );
        println!(
            "  triple {:.5} +- {:.5} (exact {:.5})",
            est.triple.mean, est.triple.se, exact.triple
        );
        println!(
            "  quad   {:.5} +- {:.5} (exact {:.5})",
            est.quad.mean, est.quad.se, exact.quad
        );
        println!(
            "  purified {:.5} +- {:.5}, closed form {:.5}",
            purified.mean,
            purified.se,
            pd_purified(x)?
        );
    }
    Ok(())
}
