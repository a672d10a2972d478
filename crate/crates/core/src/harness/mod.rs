//! Batch evaluation over a manifest.
//!
//! Samples are scored independently (optionally on a thread pool) and then
//! folded in `sample_id` order, so reports do not depend on the degree of
//! parallelism.

mod bias;
mod pose;
mod report;

pub use bias::{flag_bias, BiasFlag, BiasTier, BiasTiers};
pub use pose::{select_pose_sources, PoseCandidate, POSE_ACTION_THRESHOLD};
pub use report::{aggregate_report, AttributeCell, AttributeRow, BenchReport, Cell, MetricCells};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{QaKind, SampleRecord};
use crate::metrics::{
    action_score, alignment_score_scaled, combined_action, count_accuracy,
    hungarian_id_similarity, unified_score, HpsScale,
};

/// Scores of one sample, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub count: u8,
    pub s_id: f64,
    pub hps: Option<f64>,
    pub action_simple: Option<f64>,
    pub action_complex: Option<f64>,
    /// Absent when HPS or both action scores are missing.
    pub s_align: Option<f64>,
    pub s_unified: Option<f64>,
}

/// Scores plus what the report needs to attribute them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEvaluation {
    pub sample_id: String,
    pub prompt_id: String,
    pub n_refs: usize,
    pub n_gen: usize,
    #[serde(flatten)]
    pub scores: SampleScores,
    /// Clamped matched similarity of each reference, 0 when unmatched.
    pub per_reference: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalConfig {
    pub hps_scale: HpsScale,
}

pub fn evaluate_sample(record: &SampleRecord) -> Result<SampleEvaluation> {
    evaluate_sample_with(record, &EvalConfig::default())
}

pub fn evaluate_sample_with(record: &SampleRecord, config: &EvalConfig) -> Result<SampleEvaluation> {
    let context = format!("sample {}", record.sample_id());
    let n = record.n_refs();
    let m = record.gens().len();
    let count = count_accuracy(n, m);
    let id = hungarian_id_similarity(record.refs(), record.gens()).map_err(|e| e.within(&context))?;

    let kind_score = |kind| {
        let raw = record.qa_scores(kind);
        if raw.is_empty() {
            Ok(None)
        } else {
            action_score(&raw).map(Some).map_err(|e| e.within(&context))
        }
    };
    let action_simple = kind_score(QaKind::Simple)?;
    let action_complex = kind_score(QaKind::Complex)?;

    let s_align = match (record.hps(), combined_action(action_simple, action_complex)) {
        (Some(hps), Some(_)) => Some(
            alignment_score_scaled(Some(hps), action_simple, action_complex, count, config.hps_scale)
                .map_err(|e| e.within(&context))?,
        ),
        _ => None,
    };
    let s_unified = s_align
        .map(|a| unified_score(id.s_id, a))
        .transpose()
        .map_err(|e| e.within(&context))?;

    Ok(SampleEvaluation {
        sample_id: record.sample_id().to_string(),
        prompt_id: record.prompt_id().to_string(),
        n_refs: n,
        n_gen: m,
        per_reference: id.per_reference(),
        scores: SampleScores {
            count,
            s_id: id.s_id,
            hps: record.hps(),
            action_simple,
            action_complex,
            s_align,
            s_unified,
        },
    })
}

/// Outcome of a batch run.
#[derive(Debug, Default)]
pub struct BatchEvaluation {
    pub evaluated: Vec<(SampleRecord, SampleEvaluation)>,
    pub skipped: Vec<(String, Error)>,
}

/// Scores every record on `jobs` worker threads (`0` = rayon's default).
///
/// Without `skip_invalid` the first failing record, in input order, aborts
/// the batch.
pub fn evaluate_all(
    records: Vec<SampleRecord>,
    config: &EvalConfig,
    jobs: usize,
    skip_invalid: bool,
) -> Result<BatchEvaluation> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<SampleEvaluation>> =
        pool.install(|| records.par_iter().map(|r| evaluate_sample_with(r, config)).collect());

    let mut batch = BatchEvaluation::default();
    for (record, result) in records.into_iter().zip(results) {
        match result {
            Ok(eval) => batch.evaluated.push((record, eval)),
            Err(e) if skip_invalid => batch.skipped.push((record.sample_id().to_string(), e)),
            Err(e) => return Err(e),
        }
    }
    Ok(batch)
}
