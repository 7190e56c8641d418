//! Synthetic correlation-peak counts for the raw and purified setups,
//! inverted for efficiency and visibility with Poisson uncertainties.

use purification::histogram::{
    fit_joint, fit_with_uncertainty, pure_count_model, raw_count_model, FitTarget, PeakCounts,
    SetupGeometry,
};

fn main() -> purification::Result<()> {
    let g = SetupGeometry::default();
    let run = PeakCounts::new(0.0, 0.0, 76e6, 600.0)?;

    let (central, side) = raw_count_model(0.3, 0.83, &g, &run)?;
    let raw = PeakCounts {
        central: central.round(),
        side: side.round(),
        ..run
    };
    let f = fit_with_uncertainty(&raw, &g, FitTarget::Raw, 500, 7)?;
    println!("raw: central {:.0}, side {:.0}", raw.central, raw.side);
    print!("{}", f.to_key_value());

    let (central, side) = pure_count_model(0.3, 0.83, 0.91, &g, &run)?;
    let pure = PeakCounts {
        central: central.round(),
        side: side.round(),
        ..run
    };
    let f = fit_with_uncertainty(&pure, &g, FitTarget::Pure { v_raw: 0.83 }, 500, 7)?;
    println!(
        "purified: central {:.0}, side {:.0}",
        pure.central, pure.side
    );
    print!("{}", f.to_key_value());

    let j = fit_joint(&raw, &pure, &g)?;
    println!("joint: V_raw = {:.5}, V_pure = {:.5}", j.v_raw, j.v_pure);
    Ok(())
}
