//! Per-sample evaluation metrics: Hungarian ID similarity, count accuracy,
//! MLLM action scores, the alignment aggregate and the unified score.
//!
//! Every score lives in `[0, 1]`; presentation code multiplies by 100.

use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, CostMatrix};
use crate::embedding::{Embedding, EmbeddingSet};
use crate::error::{Error, Result};

/// Cosine of the angle between two embeddings.
///
/// Fails on a dimension mismatch or a zero-norm operand rather than
/// returning NaN. The result is clamped to `[-1, 1]` to absorb rounding.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 {
        return Err(Error::ZeroNorm("left operand".into()));
    }
    if nb == 0.0 {
        return Err(Error::ZeroNorm("right operand".into()));
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Dense `N x M` matrix of reference-vs-generated cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.cols + j]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Cost matrix `c_ij = -s_ij` for the minimum-cost solver.
    pub fn to_cost(&self) -> Result<CostMatrix> {
        CostMatrix::new(self.rows, self.cols, self.cells.iter().map(|s| -s).collect())
    }
}

pub fn similarity_matrix(refs: &EmbeddingSet, gens: &EmbeddingSet) -> Result<SimilarityMatrix> {
    if !gens.is_empty() && refs.dim() != gens.dim() {
        return Err(Error::DimensionMismatch {
            expected: refs.dim(),
            actual: gens.dim(),
        });
    }
    let mut cells = Vec::with_capacity(refs.len() * gens.len());
    for (i, r) in refs.items().iter().enumerate() {
        for (j, g) in gens.items().iter().enumerate() {
            let s = cosine_similarity(r, g).map_err(|e| e.within(&format!("S[{i}][{j}]")))?;
            cells.push(s);
        }
    }
    Ok(SimilarityMatrix {
        rows: refs.len(),
        cols: gens.len(),
        cells,
    })
}

/// One matched reference/generated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdMatch {
    pub ref_index: usize,
    pub gen_index: usize,
    /// Raw cosine similarity of the pair, before clamping.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdSimilarityResult {
    pub s_id: f64,
    pub matches: Vec<IdMatch>,
    pub unmatched_refs: Vec<usize>,
}

impl IdSimilarityResult {
    /// Each reference's clamped matched similarity, 0 when unmatched.
    pub fn per_reference(&self) -> Vec<f64> {
        let n = self.matches.len() + self.unmatched_refs.len();
        let mut out = vec![0.0; n];
        for m in &self.matches {
            out[m.ref_index] = m.similarity.max(0.0);
        }
        out
    }
}

/// Hungarian ID similarity.
///
/// The assignment maximizes total raw similarity; each matched similarity is
/// then clamped at 0 and the sum divided by the reference count `N`, so
/// unmatched references count as 0.
pub fn hungarian_id_similarity(
    refs: &EmbeddingSet,
    gens: &EmbeddingSet,
) -> Result<IdSimilarityResult> {
    let n = refs.len();
    if n == 0 {
        return Err(Error::Precondition("at least one reference embedding is required".into()));
    }
    let sim = similarity_matrix(refs, gens)?;
    let assignment = solve_assignment(&sim.to_cost()?)?;
    let matches: Vec<IdMatch> = assignment
        .pairs
        .iter()
        .map(|&(i, j)| IdMatch {
            ref_index: i,
            gen_index: j,
            similarity: sim.get(i, j),
        })
        .collect();
    let unmatched_refs = (0..n)
        .filter(|i| !matches.iter().any(|m| m.ref_index == *i))
        .collect();
    let total: f64 = matches.iter().map(|m| m.similarity.max(0.0)).sum();
    Ok(IdSimilarityResult {
        s_id: total / n as f64,
        matches,
        unmatched_refs,
    })
}

/// 1 if the detected face count equals the reference count, else 0.
pub fn count_accuracy(n_refs: usize, n_gen_faces: usize) -> u8 {
    u8::from(n_refs == n_gen_faces)
}

/// Mean of `raw / 10` over MLLM answers on the 1..=10 scale.
pub fn action_score(raw_scores: &[u8]) -> Result<f64> {
    if raw_scores.is_empty() {
        return Err(Error::Precondition("action score needs at least one answer".into()));
    }
    if let Some(bad) = raw_scores.iter().find(|s| !(1..=10).contains(*s)) {
        return Err(Error::Precondition(format!("answer {bad} outside 1..=10")));
    }
    let sum: f64 = raw_scores.iter().map(|&s| f64::from(s) / 10.0).sum();
    Ok(sum / raw_scores.len() as f64)
}

/// How the ingested HPS value enters the alignment aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HpsScale {
    /// Use the ingested `[0, 1]` value unchanged.
    #[default]
    Native,
    /// Affine map of `[min, max]` onto `[0, 1]`, clamped.
    Range { min: f64, max: f64 },
}

impl HpsScale {
    pub fn apply(self, hps: f64) -> f64 {
        match self {
            HpsScale::Native => hps,
            HpsScale::Range { min, max } => ((hps - min) / (max - min)).clamp(0.0, 1.0),
        }
    }
}

/// Action term: the mean of whichever action kinds are present.
pub fn combined_action(simple: Option<f64>, complex: Option<f64>) -> Option<f64> {
    match (simple, complex) {
        (Some(s), Some(c)) => Some((s + c) / 2.0),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// `(hps + action + count) / 3` with native HPS scaling.
pub fn alignment_score(
    hps: Option<f64>,
    action_simple: Option<f64>,
    action_complex: Option<f64>,
    count: u8,
) -> Result<f64> {
    alignment_score_scaled(hps, action_simple, action_complex, count, HpsScale::Native)
}

pub fn alignment_score_scaled(
    hps: Option<f64>,
    action_simple: Option<f64>,
    action_complex: Option<f64>,
    count: u8,
    scale: HpsScale,
) -> Result<f64> {
    let hps = hps.ok_or_else(|| Error::Precondition("alignment needs an hps value".into()))?;
    check_unit("hps", hps)?;
    for (what, v) in [("action_simple", action_simple), ("action_complex", action_complex)] {
        if let Some(v) = v {
            check_unit(what, v)?;
        }
    }
    if count > 1 {
        return Err(Error::Precondition(format!("count must be 0 or 1, got {count}")));
    }
    let action = combined_action(action_simple, action_complex)
        .ok_or_else(|| Error::Precondition("alignment needs at least one action score".into()))?;
    Ok((scale.apply(hps) + action + f64::from(count)) / 3.0)
}

/// `(s_id * s_align^2)^(1/3)`.
pub fn unified_score(s_id: f64, s_align: f64) -> Result<f64> {
    check_unit("s_id", s_id)?;
    check_unit("s_align", s_align)?;
    Ok((s_id * s_align * s_align).cbrt())
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange { what, value });
    }
    Ok(())
}
