//! Log-log exponent of the mean error for the ladder adversary against two
//! forecasters. Pass a trial count to trade speed for precision.

use calgame::engine::{AdversarySpec, ForecasterSpec};
use calgame::experiments::{scaling_experiment, ScalingOptions};

fn main() -> anyhow::Result<()> {
    let trials = std::env::args().nth(1).map_or(Ok(50), |s| s.parse())?;
    let horizons: Vec<usize> = (10..=15).map(|e| 1 << e).collect();
    let adversary: AdversarySpec = "ladder:cbrt".parse()?;
    for forecaster in ["truthful:cbrt", "coarse"] {
        let fc: ForecasterSpec = forecaster.parse()?;
        let r = scaling_experiment(&adversary, &fc, &horizons, trials, 1, ScalingOptions::default())?;
        println!("{adversary} vs {fc}");
        for p in &r.points {
            println!("  T={:>6} mean {:>9.3} +- {:.3}", p.horizon, p.mean_calerr, p.std_err);
        }
        println!(
            "  exponent {:.3}, 95% CI [{:.3}, {:.3}]",
            r.fitted_exponent, r.bootstrap_ci.0, r.bootstrap_ci.1
        );
    }
    Ok(())
}
