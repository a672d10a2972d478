//! Evaluation and region-isolation toolkit for multi-human image generation.
//!
//! The crate works on precomputed model artifacts (face embeddings, attention
//! maps, segmentation masks, HPS values and MLLM answers) and provides:
//!
//! * [`metrics`]: Hungarian ID similarity, count accuracy, action scores,
//!   the alignment aggregate and the unified score;
//! * [`assignment`]: an exact rectangular assignment solver with a
//!   brute-force reference;
//! * [`mask`]: causal/bidirectional base masks and regional-isolation masks
//!   for unified multimodal transformers;
//! * [`regions`]: implicit region assignment from attention maps or face
//!   embeddings, including mask NMS;
//! * [`sampler`]: stratified test-set sampling and ID-to-prompt dealing;
//! * [`harness`]: batch evaluation, reports, bias tables and pose-source
//!   selection.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod assignment;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod labels;
pub mod layout;
pub mod manifest;
pub mod mask;
pub mod metrics;
pub mod region_map;
pub mod regions;
pub mod sampler;

pub use assignment::{brute_force_assignment, solve_assignment, Assignment, CostMatrix};
pub use embedding::{Embedding, EmbeddingRole, EmbeddingSet};
pub use error::{Error, Result};
pub use labels::{AgeBucket, Attribute, AttributeLabel, DataOrigin, Ethnicity, Gender, Status};
pub use layout::{validate_layout, TokenLayout};
pub use manifest::{parse_manifest, QaItem, QaKind, SampleRecord};
pub use mask::{build_base_mask, build_isolated_mask, roi_from_region_map, AttentionMask, IsolationSpec};
pub use metrics::{
    action_score, alignment_score, count_accuracy, cosine_similarity, hungarian_id_similarity,
    similarity_matrix, unified_score, IdSimilarityResult,
};
pub use region_map::{RegionMap, SimilarityMap};
pub use regions::{
    aggregate_attention_maps, assign_regions_by_attention, assign_regions_by_identity, nms_masks,
    overlap_cost, AttentionProbe, FillPolicy, RegionAssignment, SegmentFilter, SegmentedFace,
};
