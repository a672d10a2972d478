//! Assign segmented people to reference images from attention similarity maps.

use mht::{assign_regions_by_attention, RegionMap, Result, SegmentFilter, SimilarityMap};

fn main() -> Result<()> {
    // Reference 0 attends to the left half, reference 1 to the right half.
    let sims = vec![
        SimilarityMap::from_rows(&[&[0.9, 0.8, 0.1, 0.0], &[0.9, 0.7, 0.1, 0.0], &[0.8, 0.8, 0.0, 0.1], &[0.9, 0.6, 0.2, 0.0]])?,
        SimilarityMap::from_rows(&[&[0.0, 0.1, 0.8, 0.9], &[0.1, 0.2, 0.9, 0.9], &[0.0, 0.1, 0.7, 0.8], &[0.1, 0.0, 0.9, 0.9]])?,
    ];
    let right = RegionMap::from_rows(&[[0, 0, 1, 1], [0, 0, 1, 1], [0, 0, 1, 1], [0, 0, 1, 1]])?;
    let left = RegionMap::from_rows(&[[1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 0, 0]])?;
    // A near-duplicate of `left` that NMS removes.
    let left_dup = RegionMap::from_rows(&[[1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 0, 0], [1, 0, 0, 0]])?;

    let out = assign_regions_by_attention(&sims, &[right, left, left_dup], SegmentFilter::Nms(0.5))?;
    println!("matched (ref, segment): {:?}", out.matched);
    for (k, map) in out.maps.iter().enumerate() {
        println!("ref {k}: cells {:?}", map.ones_indices().collect::<Vec<_>>());
    }

    // No segments at all: every reference falls back to the full canvas.
    let none = assign_regions_by_attention(&sims, &[], SegmentFilter::AlreadyFiltered)?;
    println!("no segments -> all ones: {}", none.maps.iter().all(|m| m.is_all(true)));
    Ok(())
}
