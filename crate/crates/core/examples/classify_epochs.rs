//! Labels each epoch of a sidestepping transcript after a CSV round trip.

use calgame::adversaries::{classify_epochs, rebuild_epoch_marks, SchemeParams};
use calgame::calibration::Transcript;
use calgame::engine::{run_game, AdversarySpec, ForecasterSpec, GameConfig, SidestepSpec};

fn main() -> anyhow::Result<()> {
    let horizon = 1 << 13;
    let adversary = AdversarySpec::Sidestep(SidestepSpec { theta: Some(2.0), ..SidestepSpec::default() });
    for forecaster in ["truthful:cbrt", "hedging", "const:1/2"] {
        let fc: ForecasterSpec = forecaster.parse()?;
        let res = run_game(&GameConfig::new(horizon, 3, adversary, fc))?;
        let mut csv = Vec::new();
        res.transcript.write_csv(&mut csv)?;
        let mut back = Transcript::read_csv(csv.as_slice())?;
        let params: SchemeParams = res.params.clone().unwrap();
        rebuild_epoch_marks(&mut back, &params)?;
        println!("{forecaster}: {} steps", back.len());
        for d in classify_epochs(&back, &params)? {
            println!(
                "  epoch {:>2} {:<11} outside {:>5} error at end {:.3}",
                d.index, d.label, d.outside_predictions, d.error_at_end
            );
        }
    }
    Ok(())
}
