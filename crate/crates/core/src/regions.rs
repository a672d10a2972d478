//! Implicit region assignment.
//!
//! Two routes produce one region map per reference image:
//!
//! * attention route: latent-to-image attention from probed layers is summed
//!   into a `D x D` similarity map per reference
//!   ([`aggregate_attention_maps`]), candidate segments are scored by their
//!   overlap with each map ([`overlap_cost`]) and matched with the Hungarian
//!   solver ([`assign_regions_by_attention`]). Unmatched references get an
//!   all-ones map.
//! * identity route: reference face embeddings are matched against the
//!   embeddings of segmented faces with cost `1 - cos`
//!   ([`assign_regions_by_identity`]). Unmatched references get an all-zeros
//!   map.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, CostMatrix};
use crate::embedding::{Embedding, EmbeddingSet};
use crate::error::{Error, Result};
use crate::layout::{validate_layout, TokenLayout};
use crate::manifest::read_f32_file;
use crate::metrics::cosine_similarity;
use crate::region_map::{RegionMap, SimilarityMap};

/// Default NMS IoU threshold.
pub const DEFAULT_NMS_THETA: f64 = 0.5;

/// Head-averaged `L x L` self-attention matrices from the probed layers.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionProbe {
    layout: TokenLayout,
    layers: Vec<Vec<f64>>,
    timestep_tag: String,
}

impl AttentionProbe {
    /// Each layer is a row-major `L x L` matrix; entry `[i * L + j]` is the
    /// attention from query `i` to key `j`.
    pub fn new(layout: TokenLayout, layers: Vec<Vec<f64>>, timestep_tag: impl Into<String>) -> Result<Self> {
        validate_layout(&layout)?;
        if layers.is_empty() {
            return Err(Error::Precondition("probe needs at least one layer".into()));
        }
        let l = layout.len();
        for (n, layer) in layers.iter().enumerate() {
            if layer.len() != l * l {
                return Err(Error::ShapeMismatch {
                    expected: format!("{l}x{l} layer"),
                    actual: format!("layer {n} with {} values", layer.len()),
                });
            }
            if let Some(i) = layer.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(
                    format!("layers[{n}][{}][{}]", i / l, i % l),
                    "attention must be finite and non-negative",
                ));
            }
        }
        Ok(AttentionProbe {
            layout,
            layers,
            timestep_tag: timestep_tag.into(),
        })
    }

    pub fn layout(&self) -> &TokenLayout {
        &self.layout
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn timestep_tag(&self) -> &str {
        &self.timestep_tag
    }

    /// Same layout with the layers of `other` appended.
    pub fn concat(&self, other: &AttentionProbe) -> Result<AttentionProbe> {
        if self.layout != other.layout {
            return Err(Error::Precondition("probes have different layouts".into()));
        }
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().cloned());
        AttentionProbe::new(self.layout.clone(), layers, self.timestep_tag.clone())
    }

    /// Loads `{"L": int, "layers": [{"file": "relpath.f32"}..], "layout": {..}}`.
    /// Layer files are resolved relative to the probe file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ProbeFile =
            serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
        let layout = file.layout.canonical();
        if file.len != layout.len() {
            return Err(Error::invalid(
                "L",
                format!("probe L = {} but layout L = {}", file.len, layout.len()),
            ));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let layers = file
            .layers
            .iter()
            .map(|layer| {
                let rel = Path::new(&layer.file);
                if rel.is_absolute() {
                    return Err(Error::invalid("layers.file", "layer path must be relative"));
                }
                Ok(read_f32_file(&base.join(rel))?
                    .into_iter()
                    .map(f64::from)
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        AttentionProbe::new(layout, layers, file.timestep.unwrap_or_default())
    }
}

#[derive(Debug, Deserialize, Serialize)]
pub struct ProbeLayerRef {
    pub file: String,
}

/// On-disk probe descriptor.
#[derive(Debug, Deserialize, Serialize)]
pub struct ProbeFile {
    #[serde(rename = "L")]
    pub len: usize,
    pub layers: Vec<ProbeLayerRef>,
    pub layout: TokenLayout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestep: Option<String>,
}

/// One `D x D` similarity map per reference image.
///
/// For image group `k`, latent token `i` (taken in ascending order) receives
/// the attention it pays to all of group `k`'s tokens, summed over layers, and
/// the latent vector is reshaped row-major onto the grid.
pub fn aggregate_attention_maps(probe: &AttentionProbe) -> Result<Vec<SimilarityMap>> {
    let layout = &probe.layout;
    if layout.image_count() == 0 {
        return Err(Error::Precondition("layout has no reference image groups".into()));
    }
    let l = layout.len();
    let d = layout.grid_side();
    let mut maps = vec![SimilarityMap::zeros(d); layout.image_count()];
    for layer in &probe.layers {
        for (k, group) in layout.images().iter().enumerate() {
            let grid = maps[k].values_mut();
            for (cell, &i) in layout.latent().iter().enumerate() {
                let row = &layer[i * l..(i + 1) * l];
                let mass: f64 = group.iter().map(|&j| row[j]).sum();
                grid[cell] += mass;
            }
        }
    }
    Ok(maps)
}

/// Indices of the candidates kept by greedy NMS, in keep order.
///
/// Candidates are visited by area, largest first (ties by original index);
/// a candidate is kept when its IoU with every mask kept so far is `<= theta`.
pub fn nms_indices(candidates: &[RegionMap], theta: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::OutOfRange {
            what: "theta",
            value: theta,
        });
    }
    if let Some(first) = candidates.first() {
        if let Some(bad) = candidates.iter().find(|c| c.shape() != first.shape()) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", first.height(), first.width()),
                actual: format!("{}x{}", bad.height(), bad.width()),
            });
        }
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(candidates[i].area()), i));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let mut keep = true;
        for &k in &kept {
            if candidates[i].iou(&candidates[k])? > theta {
                keep = false;
                break;
            }
        }
        if keep {
            kept.push(i);
        }
    }
    Ok(kept)
}

pub fn nms_masks(candidates: &[RegionMap], theta: f64) -> Result<Vec<RegionMap>> {
    Ok(nms_indices(candidates, theta)?
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect())
}

/// `C[k][q] = -sum(S_k * G_q)`.
pub fn overlap_cost(sim_maps: &[SimilarityMap], segments: &[RegionMap]) -> Result<CostMatrix> {
    let mut cells = Vec::with_capacity(sim_maps.len() * segments.len());
    for (k, s) in sim_maps.iter().enumerate() {
        for (q, g) in segments.iter().enumerate() {
            let overlap = s
                .overlap(g)
                .map_err(|e| e.within(&format!("S[{k}] vs G[{q}]")))?;
            cells.push(-overlap);
        }
    }
    CostMatrix::new(sim_maps.len(), segments.len(), cells)
}

/// Value used for references that receive no segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    Ones,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub maps: Vec<RegionMap>,
    /// `(reference k, segment q)` pairs, sorted by `k`.
    pub matched: Vec<(usize, usize)>,
    pub fill_policy: FillPolicy,
}

impl RegionAssignment {
    fn build(
        k: usize,
        shape: (usize, usize),
        fill_policy: FillPolicy,
        pairs: Vec<(usize, usize)>,
        segment: impl Fn(usize) -> RegionMap,
    ) -> Result<Self> {
        let fill = RegionMap::filled(shape.0, shape.1, fill_policy == FillPolicy::Ones)?;
        let mut maps = vec![fill; k];
        for &(kk, q) in &pairs {
            maps[kk] = segment(q);
        }
        Ok(RegionAssignment {
            maps,
            matched: pairs,
            fill_policy,
        })
    }
}

/// How candidate segments are filtered before matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentFilter {
    /// Segments were already suppressed upstream.
    AlreadyFiltered,
    /// Run [`nms_masks`] with this threshold first.
    Nms(f64),
}

/// Attention route. With no segments every reference gets the all-ones map.
pub fn assign_regions_by_attention(
    sim_maps: &[SimilarityMap],
    segments: &[RegionMap],
    filter: SegmentFilter,
) -> Result<RegionAssignment> {
    let first = sim_maps
        .first()
        .ok_or_else(|| Error::Precondition("at least one similarity map is required".into()))?;
    let d = first.side();
    if let Some(bad) = sim_maps.iter().find(|s| s.side() != d) {
        return Err(Error::ShapeMismatch {
            expected: format!("{d}x{d}"),
            actual: format!("{0}x{0}", bad.side()),
        });
    }
    let filtered;
    let segments = match filter {
        SegmentFilter::AlreadyFiltered => segments,
        SegmentFilter::Nms(theta) => {
            filtered = nms_masks(segments, theta)?;
            &filtered[..]
        }
    };
    let k = sim_maps.len();
    if segments.is_empty() {
        return RegionAssignment::build(k, (d, d), FillPolicy::Ones, Vec::new(), |_| unreachable!());
    }
    let cost = overlap_cost(sim_maps, segments)?;
    let assignment = solve_assignment(&cost)?;
    RegionAssignment::build(k, (d, d), FillPolicy::Ones, assignment.pairs, |q| {
        segments[q].clone()
    })
}

/// A segmented face: its mask in the generated image and its embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedFace {
    pub mask: RegionMap,
    pub embedding: Embedding,
}

/// `C[k][q] = 1 - cos(ref_k, face_q)`.
pub fn identity_cost(ref_embs: &EmbeddingSet, faces: &[SegmentedFace]) -> Result<CostMatrix> {
    let mut cells = Vec::with_capacity(ref_embs.len() * faces.len());
    for (k, r) in ref_embs.items().iter().enumerate() {
        for (q, f) in faces.iter().enumerate() {
            let c = cosine_similarity(r, &f.embedding)
                .map_err(|e| e.within(&format!("ref[{k}] vs face[{q}]")))?;
            cells.push(1.0 - c);
        }
    }
    CostMatrix::new(ref_embs.len(), faces.len(), cells)
}

/// Identity route. `shape` is the `H x W` of the generated image, used for
/// the all-zeros maps of unmatched references.
pub fn assign_regions_by_identity(
    ref_embs: &EmbeddingSet,
    faces: &[SegmentedFace],
    shape: (usize, usize),
) -> Result<RegionAssignment> {
    if let Some(bad) = faces.iter().find(|f| f.mask.shape() != shape) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", shape.0, shape.1),
            actual: format!("{}x{}", bad.mask.height(), bad.mask.width()),
        });
    }
    let k = ref_embs.len();
    if faces.is_empty() {
        return RegionAssignment::build(k, shape, FillPolicy::Zeros, Vec::new(), |_| unreachable!());
    }
    let cost = identity_cost(ref_embs, faces)?;
    let assignment = solve_assignment(&cost)?;
    RegionAssignment::build(k, shape, FillPolicy::Zeros, assignment.pairs, |q| {
        faces[q].mask.clone()
    })
}
