//! Draw a demographically balanced subset from a labelled pool.

use mht::labels::*;
use mht::sampler::{stratified_sample, Feasibility, PoolEntry, TargetDistribution};
use mht::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pool: Vec<PoolEntry> = (0..1200)
        .map(|i| PoolEntry {
            id: format!("face{i:04}"),
            label: AttributeLabel {
                age: AgeBucket::ALL[rng.gen_range(0..3)],
                gender: Gender::ALL[rng.gen_range(0..2)],
                ethnicity: Ethnicity::ALL[rng.gen_range(0..6)],
                status: Status::Anonymous,
                origin: DataOrigin::Real,
            },
        })
        .collect();

    let targets: TargetDistribution = serde_json::from_str(
        r#"{"ethnicity": "uniform", "gender": "uniform",
            "age": {"young_adult": 0.425, "middle_aged": 0.425, "aged": 0.15}}"#,
    )
    .expect("valid targets");

    let sample = stratified_sample(&pool, &targets, 600, 7, Feasibility::Strict)?;
    println!("{} ids drawn with {} seed {}", sample.ids.len(), sample.rng, sample.seed);
    for q in sample.quotas.iter().take(6) {
        println!("  {:<40} target {:6.2} quota {:3} available {:3}", q.bucket, q.target, q.quota, q.available);
    }
    println!("  ... {} buckets in total", sample.quotas.len());
    Ok(())
}
