//! Wrapping an adversary so a large error at any point is carried to the end.

use calgame::adversaries::{early_stopping_wrapper, iid_bernoulli};
use calgame::calibration::{prob, PredictionGrid};
use calgame::engine::{play, PlayOptions};
use calgame::forecasters::constant_forecaster;

fn main() -> anyhow::Result<()> {
    let horizon = 2000;
    let b = 12.0;
    for seed in 0..5 {
        let opts = PlayOptions { horizon, grid: PredictionGrid::new(100)?, seed, keep_transcript: false };
        let wrapped = early_stopping_wrapper(iid_bernoulli(0.5)?, b, horizon);
        let res = play(wrapped, constant_forecaster(prob(1, 2)?), opts)?;
        let rep = res.early_stop.unwrap();
        match rep.triggered_at {
            Some(t0) => println!(
                "seed {seed}: trigger after step {t0} with parts {:?}, tail bit {}, final CalErr {:.1} >= B/2 = {}",
                rep.parts_at_trigger.unwrap(),
                rep.tail_bit.unwrap() as u8,
                res.final_calerr,
                b / 2.0
            ),
            None => println!("seed {seed}: never reached B, final CalErr {:.1}", res.final_calerr),
        }
    }
    Ok(())
}
