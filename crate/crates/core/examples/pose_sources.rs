//! Choose pose source images per prompt, falling back when none qualifies.

use std::collections::BTreeMap;

use mht::harness::{select_pose_sources, PoseCandidate};

fn cand(id: &str, action: f64, count: u8) -> PoseCandidate {
    PoseCandidate { image_id: id.into(), action, count }
}

fn main() {
    let per_prompt = BTreeMap::from([
        ("two dancers".to_string(), vec![cand("a", 0.99, 1), cand("b", 0.98, 1)]),
        ("crowd at a bus stop".to_string(), vec![cand("c", 0.99, 0)]),
        ("chess players".to_string(), vec![cand("d", 0.96, 1)]),
    ]);
    for (prompt, pick) in select_pose_sources(&per_prompt) {
        match pick {
            Some(id) => println!("{prompt}: use {id}"),
            None => println!("{prompt}: fall back to text-to-pose"),
        }
    }
}
