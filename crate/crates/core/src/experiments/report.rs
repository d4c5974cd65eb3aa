use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentError, ScalingResult};
use crate::engine::GameSummary;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CALGAME_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format '{s}', expected csv or json")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledScaling {
    pub label: String,
    pub result: ScalingResult,
}

/// `explicit` if given, otherwise `name` under `$CALGAME_OUT_DIR` (or the
/// current directory).
pub fn output_path(name: &str, explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_default()
            .join(name),
    }
}

/// Formats `x` with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into a new digit (9.999995 -> 10.00000); trim the excess.
    if s.contains('.') {
        let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
        let significant = digits.trim_start_matches('0').len();
        if significant > 6 {
            return s[..s.len() - (significant - 6)].trim_end_matches('.').to_string();
        }
    }
    s
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

const SCALING_HEADER: [&str; 10] = [
    "label",
    "horizon",
    "mean_calerr",
    "std_err",
    "trials",
    "fitted_exponent",
    "intercept",
    "ci_lo",
    "ci_hi",
    "excluded",
];

/// One row per (result, horizon).
pub fn write_scaling_csv<W: Write>(results: &[LabeledScaling], writer: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCALING_HEADER)?;
    for r in results {
        let s = &r.result;
        for p in &s.points {
            w.write_record([
                r.label.clone(),
                p.horizon.to_string(),
                format_sig6(p.mean_calerr),
                format_sig6(p.std_err),
                p.trials.to_string(),
                format_sig6(s.fitted_exponent),
                format_sig6(s.intercept),
                format_sig6(s.bootstrap_ci.0),
                format_sig6(s.bootstrap_ci.1),
                (s.excluded.contains(&p.horizon) as u8).to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_scaling_json<W: Write>(results: &[LabeledScaling], mut writer: W) -> Result<(), ExperimentError> {
    serde_json::to_writer_pretty(&mut writer, results)?;
    writer.write_all(b"\n").map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_scaling_json<R: io::Read>(reader: R) -> Result<Vec<LabeledScaling>, ExperimentError> {
    Ok(serde_json::from_reader(reader)?)
}

/// `seed,t_act,calerr,maxerr,preserved_signs,epoch_labels` with labels joined by `;`.
pub fn write_summaries_csv<W: Write>(summaries: &[GameSummary], writer: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["seed", "t_act", "calerr", "maxerr", "preserved_signs", "epoch_labels"])?;
    for s in summaries {
        let labels: Vec<String> = s.epoch_labels.iter().map(|l| l.to_string()).collect();
        w.write_record([
            s.seed.to_string(),
            s.t_act.to_string(),
            format_sig6(s.calerr),
            format_sig6(s.maxerr),
            s.preserved_signs.map_or_else(String::new, |v| v.to_string()),
            labels.join(";"),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

impl ReportFormat {
    /// Writes scaling results to `path` in this format.
    pub fn write_scaling(self, results: &[LabeledScaling], path: &Path) -> Result<(), ExperimentError> {
        let mut file = create(path)?;
        match self {
            ReportFormat::Csv => write_scaling_csv(results, &mut file)?,
            ReportFormat::Json => write_scaling_json(results, &mut file)?,
        }
        file.flush().map_err(io_err(path))
    }
}
