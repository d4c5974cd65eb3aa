//! Bucket biases, the positive/negative split and rounding onto a coarse grid.

use calgame::calibration::{prob, round_transcript, transcript_error, CalibrationLedger, PredictionGrid, Step, Transcript};

fn main() -> anyhow::Result<()> {
    let grid = PredictionGrid::new(4)?;
    let mut ledger = CalibrationLedger::new(grid);
    let plays = [("1/4", false), ("1/4", true), ("3/4", true), ("1/2", false), ("3/4", true)];
    for (p, bit) in plays {
        ledger.record(&calgame::calibration::parse_prob(p)?, bit)?;
        let (pos, neg) = ledger.pos_neg_parts();
        println!(
            "t={} predict {p} bit {} -> CalErr {:.3} (+{pos:.3} / -{neg:.3}), MaxErr {:.3}",
            ledger.step(),
            bit as u8,
            ledger.calib_error(),
            ledger.max_err()
        );
    }
    for i in 0..=grid.resolution() {
        if ledger.count(i) > 0 {
            println!("  bucket {}: n={} ones={} bias {:+.3}", grid.point(i), ledger.count(i), ledger.ones(i), ledger.bias(i));
        }
    }

    // Predictions off the grid, then snapped to tenths.
    let steps = [(1, 3), (2, 7), (5, 8), (1, 3)]
        .into_iter()
        .zip([true, false, true, false])
        .map(|((n, d), bit)| Step { prediction: prob(n, d).unwrap(), bit, announced_bias: None, epoch: None })
        .collect();
    let raw = Transcript { steps, epoch_marks: vec![] };
    let rounded = round_transcript(&raw, PredictionGrid::new(10)?);
    println!(
        "raw error {:.4}, rounded to tenths {:.4} (bound {:.4})",
        transcript_error(&raw),
        transcript_error(&rounded),
        transcript_error(&raw) + raw.len() as f64 / 20.0
    );
    Ok(())
}
