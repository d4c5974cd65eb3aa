use serde::Serialize;

use super::{AdversaryError, SchemeParams};
use crate::calibration::{EpochMark, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochLabel {
    Untruthful,
    Negligible,
    Covered,
    Uncovered,
}

impl std::fmt::Display for EpochLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Untruthful => "untruthful",
            Self::Negligible => "negligible",
            Self::Covered => "covered",
            Self::Uncovered => "uncovered",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochDiagnostic {
    pub index: u32,
    pub label: EpochLabel,
    pub outside_predictions: usize,
    /// Error on `P cap I` when the epoch ended.
    pub error_at_end: f64,
    /// Error on `P cap I` after the last epoch ended.
    pub error_at_t_act: f64,
    /// The epoch ran for its full length.
    pub exhausted: bool,
    /// Ran its full length yet ended with error above the threshold. This should
    /// not happen; it flags a bookkeeping bug or a mis-set threshold.
    pub divergent: bool,
}

/// Labels each epoch of a transcript produced by the sidestepping scheme.
pub fn classify_epochs(
    transcript: &Transcript,
    params: &SchemeParams,
) -> Result<Vec<EpochDiagnostic>, AdversaryError> {
    let marks = &transcript.epoch_marks;
    if marks.is_empty() {
        return Err(AdversaryError::MissingEpochs);
    }
    transcript
        .validate_epoch_marks()
        .map_err(|e| AdversaryError::Config(e.to_string()))?;
    let t_act = marks.last().map(|m| m.end_step).unwrap_or(0);
    let mut ledger = crate::calibration::CalibrationLedger::new(params.grid);
    let mut at_end = Vec::with_capacity(marks.len());
    let mut next = 0;
    let record_ends = |ledger: &crate::calibration::CalibrationLedger, next: &mut usize, at: &mut Vec<f64>| {
        while *next < marks.len() && marks[*next].end_step == ledger.step() as usize {
            at.push(ledger.interval_error(&marks[*next].interval));
            *next += 1;
        }
    };
    record_ends(&ledger, &mut next, &mut at_end);
    for s in &transcript.steps[..t_act] {
        ledger
            .record(&s.prediction, s.bit)
            .map_err(|e| AdversaryError::Config(e.to_string()))?;
        record_ends(&ledger, &mut next, &mut at_end);
    }

    let untruthful = params.untruthful_threshold();
    Ok(marks
        .iter()
        .zip(at_end)
        .map(|(m, error_at_end)| {
            let outside = transcript.steps[m.start_step..m.end_step]
                .iter()
                .filter(|s| !m.interval.contains(&s.prediction))
                .count();
            let error_at_t_act = ledger.interval_error(&m.interval);
            let exhausted = m.end_step - m.start_step == params.epoch_len;
            let label = if outside as f64 >= untruthful {
                EpochLabel::Untruthful
            } else if error_at_end < params.theta {
                EpochLabel::Negligible
            } else if error_at_t_act < params.theta / 4.0 {
                EpochLabel::Covered
            } else {
                EpochLabel::Uncovered
            };
            EpochDiagnostic {
                index: m.id,
                label,
                outside_predictions: outside,
                error_at_end,
                error_at_t_act,
                exhausted,
                divergent: exhausted && error_at_end >= params.theta,
            }
        })
        .collect())
}

/// Rebuilds epoch marks from per-step epoch ids and announced biases, as read
/// back from CSV. Epochs that emitted no bit leave no trace and are not recovered.
pub fn rebuild_epoch_marks(transcript: &mut Transcript, params: &SchemeParams) -> Result<(), AdversaryError> {
    let mut marks: Vec<EpochMark> = Vec::new();
    for (i, s) in transcript.steps.iter().enumerate() {
        let Some(id) = s.epoch else {
            continue;
        };
        if let Some(last) = marks.last_mut() {
            if last.id == id && last.end_step == i {
                last.end_step = i + 1;
                continue;
            }
        }
        let bias = s
            .announced_bias
            .ok_or_else(|| AdversaryError::Config(format!("step {} has an epoch id but no bias", i + 1)))?;
        let cell = params
            .cell_of_bias(bias)
            .ok_or_else(|| AdversaryError::Config(format!("bias {bias} at step {} matches no cell", i + 1)))?;
        let start_step = marks.last().map_or(0, |m| m.end_step);
        if start_step != i {
            return Err(AdversaryError::Config(format!(
                "epoch {id} starts at step {} after a gap",
                i + 1
            )));
        }
        marks.push(EpochMark {
            id,
            start_step,
            end_step: i + 1,
            interval: params.interval(cell),
            bias: params.bias(cell),
        });
    }
    if marks.is_empty() {
        return Err(AdversaryError::MissingEpochs);
    }
    transcript.epoch_marks = marks;
    Ok(())
}
