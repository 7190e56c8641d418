//! Beamsplitter reflectivity and loss: which imperfections change the
//! purified visibility.

use purification::protocol::{bs_sweep, purified_visibility, Coupler, LossStage, NoiseConfig};

fn main() -> purification::Result<()> {
    let c = 0.8f64.sqrt();
    let grid = [0.3, 0.4, 0.5, 0.6, 0.7];
    for coupler in [Coupler::First, Coupler::Second, Coupler::Final] {
        let rows = bs_sweep(coupler, &grid, c)?;
        let pure: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.v_pure)).collect();
        println!(
            "{coupler:?} coupler r = {grid:?}: V_pure = [{}]",
            pure.join(", ")
        );
    }

    let ideal = purified_visibility(c, &NoiseConfig::default())?;
    for stage in [LossStage::Input, LossStage::AfterInput, LossStage::Output] {
        let config = NoiseConfig {
            transmissions: [0.9, 0.6, 0.8, 0.7, 0.5, 0.95],
            loss_stage: stage,
            g2: 0.02,
            ..NoiseConfig::default()
        };
        let v = purified_visibility(c, &config)?;
        println!(
            "unequal loss at {stage:?} with g2 = 0.02: V_pure = {:.4} (lossless, g2 = 0: {:.4})",
            v.pure, ideal.pure
        );
    }
    Ok(())
}
