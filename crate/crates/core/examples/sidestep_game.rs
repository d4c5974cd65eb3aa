//! One sidestepping game against the hedging forecaster, epoch by epoch.
//!
//! The literal threshold is tiny at this horizon, so theta is raised to make
//! epochs last long enough to see.

use calgame::engine::{run_game, AdversarySpec, ForecasterSpec, GameConfig, SidestepSpec};

fn main() -> anyhow::Result<()> {
    let horizon = 1 << 14;
    let adversary = AdversarySpec::Sidestep(SidestepSpec { theta: Some(3.0), ..SidestepSpec::default() });
    let res = run_game(&GameConfig::new(horizon, 7, adversary, ForecasterSpec::Hedging))?;
    let params = res.params.as_ref().expect("sidestepping reports its parameters");
    println!(
        "T={horizon} k={} epochs={} epoch_len={} theta={:.3} B={:.4}",
        params.k, params.num_epochs, params.epoch_len, params.theta, params.b
    );
    for e in &res.epochs {
        println!(
            "epoch {:>2} cell {:>3} steps {:>5}..{:<5} sign {:?} stop {:?}",
            e.index, e.cell, e.start_step, e.end_step, e.sign_placed, e.stop
        );
    }
    println!(
        "stopped at {} of {horizon}; CalErr {:.2}, MaxErr {:.2}, preserved signs {:?}",
        res.t_act, res.final_calerr, res.max_err, res.preserved_signs
    );
    Ok(())
}
