//! Every built-in forecaster against the same adversaries, a few trials each.

use calgame::engine::{run_trials, GameConfig};

fn main() -> anyhow::Result<()> {
    let horizon = 4096;
    let forecasters = ["const:1/2", "truthful:cbrt", "coarse", "hedging"];
    let adversaries = ["iid:0.3", "ladder:cbrt", "sidestep+earlystop"];
    println!("{:<20} {}", "", forecasters.map(|f| format!("{f:>14}")).join(""));
    for adv in adversaries {
        let mut line = format!("{adv:<20}");
        for fc in forecasters {
            let cfg = GameConfig { keep_transcript: false, ..GameConfig::new(horizon, 1, adv.parse()?, fc.parse()?) };
            let res = run_trials(&cfg, 20)?;
            let mean = res.iter().map(|r| r.final_calerr).sum::<f64>() / res.len() as f64;
            line += &format!("{mean:>14.2}");
        }
        println!("{line}");
    }
    Ok(())
}
