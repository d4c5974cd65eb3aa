use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use calgame::adversaries::{
    classify_epochs, rebuild_epoch_marks, AdversaryError, PlayerASpec, SchemeParams, DEFAULT_C0,
};
use calgame::calibration::{CalibrationError, PredictionGrid, Transcript};
use calgame::engine::{run_game, run_trials, AdversarySpec, EngineError, ForecasterSpec, GameConfig, GameSummary};
use calgame::experiments::{
    opt_table, output_path, scaling_experiment, write_summaries_csv, ExperimentError, LabeledScaling,
    ReportFormat, ScalingOptions,
};
use calgame::sign_game::{default_admissible_pair, SignGameError, SolverBudget};

/// Calibration game simulator.
///
/// Every flag can also be given in a `--config` file of `key = value` lines;
/// flags on the command line win.
#[derive(Parser, Debug)]
#[command(name = "calgame", version, args_override_self = true)]
struct Cli {
    /// File of `key = value` lines mirroring the long flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play one game and print its JSON summary.
    Run {
        #[command(flatten)]
        game: GameArgs,
        /// Dump the transcript as CSV.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play independent trials and write one summary per trial.
    Trials {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the scaling exponent of the mean calibration error over horizons.
    Scaling {
        #[command(flatten)]
        game: GameArgs,
        /// Comma-separated increasing horizons.
        #[arg(long, value_delimiter = ',', default_values_t = [4096usize, 8192, 16384, 32768, 65536, 131072, 262144])]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the exact game value opt(k, r).
    Opt {
        #[arg(long, default_value_t = 7)]
        k_max: usize,
        #[arg(long, default_value_t = 4)]
        r_max: usize,
        #[arg(long, default_value_t = SolverBudget::default().max_cells)]
        max_cells: usize,
        #[arg(long, default_value_t = SolverBudget::default().max_rounds)]
        max_rounds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label the epochs of a sidestepping transcript read from CSV.
    Classify {
        #[arg(long)]
        transcript: PathBuf,
        /// Horizon the scheme was configured with. The transcript may be shorter.
        #[arg(long, short = 'T')]
        horizon: usize,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        grid: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct SchemeArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Override the derived epoch threshold.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct GameArgs {
    #[arg(long, short = 'T', default_value_t = 4096)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// iid:p | ladder:k | ladder:cbrt | sidestep | sidestep+earlystop
    #[arg(long, default_value = "sidestep+earlystop")]
    adversary: String,
    /// const:p | truthful:g | truthful:cbrt | coarse | hedging | script:file
    #[arg(long, default_value = "hedging")]
    forecaster: String,
    /// Grid resolution; defaults to the horizon.
    #[arg(long)]
    grid: Option<u32>,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// binary | minimax | tensor:a,b,t
    #[arg(long = "playerA", default_value = "binary")]
    player_a: String,
}

impl GameArgs {
    fn specs(&self) -> Result<(AdversarySpec, ForecasterSpec)> {
        let mut adversary: AdversarySpec = self.adversary.parse()?;
        if let AdversarySpec::Sidestep(s) = &mut adversary {
            let (alpha, beta) = default_admissible_pair();
            s.alpha = self.scheme.alpha.unwrap_or(alpha);
            s.beta = self.scheme.beta.unwrap_or(beta);
            if let Some(c0) = self.scheme.c0 {
                s.c0 = c0;
            }
            s.theta = self.scheme.theta;
            s.player = self.player_a.parse::<PlayerASpec>()?;
        }
        Ok((adversary, self.forecaster.parse()?))
    }

    fn config(&self, horizon: usize) -> Result<GameConfig> {
        let (adversary, forecaster) = self.specs()?;
        let mut config = GameConfig::new(horizon, self.seed, adversary, forecaster);
        if let Some(n) = self.grid {
            config.grid = PredictionGrid::new(n)?;
        }
        Ok(config)
    }
}

/// Expands `--config FILE` into flags placed right after the subcommand, so
/// that later command-line flags override them.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => argv.get(pos + 1).cloned().context("--config needs a path")?,
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{path}:{}: expected key = value", n + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        if value == "true" {
            flags.push(format!("--{key}"));
        } else {
            flags.push(format!("--{key}={value}"));
        }
    }
    let end = if argv[pos].contains('=') { pos + 1 } else { pos + 2 };
    argv.drain(pos..end.min(argv.len()));
    let sub = argv
        .iter()
        .skip(1)
        .position(|a| ["run", "trials", "scaling", "opt", "classify"].contains(&a.as_str()))
        .map_or(argv.len(), |i| i + 2);
    argv.splice(sub..sub, flags);
    Ok(argv)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { game, transcript, out } => {
            let config = game.config(game.horizon)?;
            let result = run_game(&config)?;
            if let Some(path) = transcript {
                result
                    .transcript
                    .write_csv(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?)?;
            }
            let mut w = writer(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &result.summary())?;
            writeln!(w)?;
        }
        Command::Trials { game, trials, format, out } => {
            let config = GameConfig {
                keep_transcript: false,
                ..game.config(game.horizon)?
            };
            let summaries: Vec<GameSummary> = run_trials(&config, trials)?.iter().map(|r| r.summary()).collect();
            let mut w = writer(out.as_deref())?;
            match format {
                ReportFormat::Csv => write_summaries_csv(&summaries, &mut w)?,
                ReportFormat::Json => {
                    serde_json::to_writer_pretty(&mut w, &summaries)?;
                    writeln!(w)?;
                }
            }
        }
        Command::Scaling {
            game,
            horizons,
            trials,
            resamples,
            format,
            out,
        } => {
            let (adversary, forecaster) = game.specs()?;
            if game.grid.is_some() {
                bail!("scaling runs use the grid of resolution T; --grid is not supported here");
            }
            let result = scaling_experiment(
                &adversary,
                &forecaster,
                &horizons,
                trials,
                game.seed,
                ScalingOptions {
                    resamples,
                    ..Default::default()
                },
            )?;
            let labeled = vec![LabeledScaling {
                label: format!("{adversary} vs {forecaster}"),
                result,
            }];
            let ext = if format == ReportFormat::Csv { "csv" } else { "json" };
            let path = output_path(&format!("scaling.{ext}"), out.as_deref());
            format.write_scaling(&labeled, &path)?;
            let r = &labeled[0].result;
            println!(
                "exponent {:.4} (95% CI {:.4}..{:.4}) -> {}",
                r.fitted_exponent,
                r.bootstrap_ci.0,
                r.bootstrap_ci.1,
                path.display()
            );
        }
        Command::Opt {
            k_max,
            r_max,
            max_cells,
            max_rounds,
            out,
        } => {
            let budget = SolverBudget {
                max_cells,
                max_rounds,
                ..Default::default()
            };
            let table = opt_table(k_max, r_max, budget);
            table.write_csv(writer(out.as_deref())?)?;
            if let Some(row) = table.diagonal_violations().first() {
                bail!("opt({}, {}) = {:?} breaks the diagonal identity", row.k, row.r, row.opt);
            }
            if table.rows.iter().any(|r| r.opt.is_none()) {
                return Err(SignGameError::BudgetExceeded("some entries exceeded the solver budget".into()).into());
            }
        }
        Command::Classify {
            transcript,
            horizon,
            scheme,
            grid,
            out,
        } => {
            let file = File::open(&transcript).with_context(|| format!("cannot read {}", transcript.display()))?;
            let mut t = Transcript::read_csv(file)?;
            let grid = PredictionGrid::new(grid.unwrap_or(horizon.max(2) as u32))?;
            let (alpha, beta) = default_admissible_pair();
            let mut params = SchemeParams::new(
                horizon,
                scheme.alpha.unwrap_or(alpha),
                scheme.beta.unwrap_or(beta),
                scheme.c0.unwrap_or(DEFAULT_C0),
                grid,
            )?;
            if let Some(theta) = scheme.theta {
                params = params.with_threshold(theta);
            }
            rebuild_epoch_marks(&mut t, &params)?;
            let diags = classify_epochs(&t, &params)?;
            let mut w = writer(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &diags)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn is_budget(e: &SignGameError) -> bool {
    matches!(e, SignGameError::BudgetExceeded(_))
}

fn adversary_budget(e: &AdversaryError) -> bool {
    matches!(e, AdversaryError::SignGame(g) if is_budget(g))
}

fn engine_budget(e: &EngineError) -> bool {
    matches!(e, EngineError::Adversary(a) if adversary_budget(a))
}

/// 3 for solver-budget errors, 2 for configuration errors, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let mut config = false;
    for c in err.chain() {
        let budget = c.downcast_ref::<SignGameError>().is_some_and(is_budget)
            || c.downcast_ref::<AdversaryError>().is_some_and(adversary_budget)
            || c.downcast_ref::<EngineError>().is_some_and(engine_budget)
            || matches!(c.downcast_ref::<ExperimentError>(), Some(ExperimentError::Engine(e)) if engine_budget(e))
            || matches!(c.downcast_ref::<ExperimentError>(), Some(ExperimentError::SignGame(e)) if is_budget(e));
        if budget {
            return 3;
        }
        config |= c
            .downcast_ref::<EngineError>()
            .is_some_and(|e| !matches!(e, EngineError::Panic { .. }))
            || c.downcast_ref::<AdversaryError>().is_some()
            || c.downcast_ref::<CalibrationError>().is_some()
            || matches!(
                c.downcast_ref::<ExperimentError>(),
                Some(ExperimentError::Fit(_) | ExperimentError::Engine(_))
            );
    }
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
