use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Minimum action score a generated pose source must reach.
pub const POSE_ACTION_THRESHOLD: f64 = 0.97;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseCandidate {
    pub image_id: String,
    pub action: f64,
    pub count: u8,
}

/// Best usable candidate per prompt, or `None` when every candidate fails
/// the action or count threshold.
pub fn select_pose_sources(
    per_prompt: &BTreeMap<String, Vec<PoseCandidate>>,
) -> BTreeMap<String, Option<String>> {
    per_prompt
        .iter()
        .map(|(prompt, candidates)| {
            let best = candidates
                .iter()
                .filter(|c| c.count == 1 && c.action >= POSE_ACTION_THRESHOLD)
                .min_by(|a, b| b.action.total_cmp(&a.action).then_with(|| a.image_id.cmp(&b.image_id)));
            (prompt.clone(), best.map(|c| c.image_id.clone()))
        })
        .collect()
}
