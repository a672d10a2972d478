//! Per-attribute deviation tables and bias tiers.

use mht::harness::{aggregate_report, flag_bias, BiasTier, BiasTiers, SampleEvaluation, SampleScores};
use mht::labels::*;
use mht::{EmbeddingRole, EmbeddingSet, Result, SampleRecord};

fn sample(id: &str, refs: &[(Ethnicity, Gender, f64)]) -> Result<(SampleRecord, SampleEvaluation)> {
    let n = refs.len();
    let rows = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let labels = refs
        .iter()
        .map(|&(ethnicity, gender, _)| AttributeLabel {
            age: AgeBucket::MiddleAged,
            gender,
            ethnicity,
            status: Status::Anonymous,
            origin: DataOrigin::Real,
        })
        .collect();
    let record = SampleRecord::new(
        id,
        "p",
        EmbeddingSet::from_rows(EmbeddingRole::Reference, rows)?,
        labels,
        EmbeddingSet::empty(EmbeddingRole::Generated, n)?,
        None,
        vec![],
    )?;
    // Per-reference similarities as an upstream evaluation would produce them.
    let sims: Vec<f64> = refs.iter().map(|r| r.2).collect();
    let eval = SampleEvaluation {
        sample_id: id.into(),
        prompt_id: "p".into(),
        n_refs: n,
        n_gen: n,
        scores: SampleScores {
            count: 1,
            s_id: sims.iter().sum::<f64>() / n as f64,
            hps: None,
            action_simple: None,
            action_complex: None,
            s_align: None,
            s_unified: None,
        },
        per_reference: sims,
    };
    Ok((record, eval))
}

fn main() -> Result<()> {
    use Ethnicity::*;
    use Gender::*;
    let samples = vec![
        sample("a", &[(White, Male, 0.52), (Black, Female, 0.44)])?,
        sample("b", &[(EastAsian, Female, 0.47), (SouthAsian, Male, 0.49)])?,
        sample("c", &[(Hispanic, Male, 0.50), (MiddleEastern, Female, 0.51), (White, Female, 0.55)])?,
    ];
    let report = aggregate_report(&samples)?;
    for flag in flag_bias(&report, &BiasTiers::default())? {
        if flag.tier != BiasTier::None {
            println!("{:<10} {:<15} {:+5.1} {:?}", flag.attribute, flag.bucket, flag.deviation, flag.tier);
        }
    }
    Ok(())
}
