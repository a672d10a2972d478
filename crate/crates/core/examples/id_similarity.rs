//! Hungarian ID similarity between reference and generated face embeddings.

use mht::{count_accuracy, hungarian_id_similarity, EmbeddingRole, EmbeddingSet, Result};

fn face(a: f64, b: f64) -> Vec<f64> {
    vec![a, b, (1.0 - a * a - b * b).sqrt()]
}

fn main() -> Result<()> {
    let refs = EmbeddingSet::from_rows(
        EmbeddingRole::Reference,
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
    )?;
    // Generated faces listed in the "wrong" order; matching fixes that.
    let gens = EmbeddingSet::from_rows(
        EmbeddingRole::Generated,
        vec![face(0.1, 0.8), face(0.9, 0.2), face(0.3, 0.3)],
    )?;

    let result = hungarian_id_similarity(&refs, &gens)?;
    for m in &result.matches {
        println!("ref {} -> gen {} (cos {:.3})", m.ref_index, m.gen_index, m.similarity);
    }
    println!("S_id  = {:.4}", result.s_id);
    println!("count = {}", count_accuracy(refs.len(), gens.len()));
    Ok(())
}
