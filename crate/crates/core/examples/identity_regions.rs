//! Assign segmented faces to references by embedding similarity.

use mht::{assign_regions_by_identity, Embedding, EmbeddingRole, EmbeddingSet, RegionMap, Result, SegmentedFace};

fn main() -> Result<()> {
    let refs = EmbeddingSet::from_rows(
        EmbeddingRole::Reference,
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    )?;
    let faces = vec![
        SegmentedFace {
            mask: RegionMap::from_rows(&[[1, 0, 0], [1, 0, 0]])?,
            embedding: Embedding::new(vec![0.1, 0.95, 0.0])?,
        },
        SegmentedFace {
            mask: RegionMap::from_rows(&[[0, 0, 1], [0, 0, 1]])?,
            embedding: Embedding::new(vec![0.9, 0.1, 0.1])?,
        },
    ];

    // Three references but only two faces: the unmatched one gets an empty region.
    let out = assign_regions_by_identity(&refs, &faces, (2, 3))?;
    println!("matched (ref, face): {:?}", out.matched);
    for (k, map) in out.maps.iter().enumerate() {
        println!("ref {k}: area {}", map.area());
    }
    Ok(())
}
