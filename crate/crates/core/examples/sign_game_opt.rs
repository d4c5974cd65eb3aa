//! Exact values of the sign-preservation game and a few strategies played out.

use std::sync::Arc;

use calgame::experiments::opt_table;
use calgame::sign_game::{
    binary_search_strategy, tensor_strategy, worst_case_preserved, MinimaxPlayerF, PlayerA, SolverBudget,
    StrategyFactory, StrategyProfile,
};

fn main() -> anyhow::Result<()> {
    let table = opt_table(8, 4, SolverBudget::default());
    println!("opt(k, r)       r=1 r=2 r=3 r=4");
    for k in 1..=8 {
        let row: Vec<String> = (1..=4)
            .map(|r| table.get(k, r).map_or("NA".into(), |v| v.to_string()))
            .collect();
        println!("k={k:<13} {}", row.iter().map(|v| format!("{v:>3}")).collect::<Vec<_>>().join(" "));
    }

    // Binary search against an optimal sign placer on SP(7, 3).
    let mut profile = StrategyProfile::new(
        Box::new(binary_search_strategy()),
        Box::new(MinimaxPlayerF::new(7, SolverBudget::default())?),
    );
    let end = profile.play(7, 3)?;
    println!("binary search vs minimax F on SP(7,3): {:?} -> {} preserved", end.history(), end.preserved_count());

    let base: StrategyFactory = Arc::new(|| Box::new(binary_search_strategy()) as Box<dyn PlayerA>);
    let tensor: StrategyFactory = Arc::new(move || tensor_strategy(base.clone(), 3, 2, 2));
    println!("tensor square of SP(3,2) on SP(9,4): worst case {}", worst_case_preserved(&tensor, 9, 4)?);
    Ok(())
}
