//! Score a manifest and print the report tables.

use mht::harness::{aggregate_report, evaluate_all, EvalConfig};
use mht::manifest::parse_manifest_bytes;
use mht::Result;

const MANIFEST: &str = r#"{
  "version": 1,
  "samples": [
    {
      "sample_id": "s1", "prompt_id": "p1", "n_refs": 2,
      "ref_embeddings": {"dim": 3, "data": [1, 0, 0, 0, 1, 0]},
      "ref_attributes": [
        {"age": "young_adult", "gender": "female", "ethnicity": "east_asian", "status": "anonymous", "origin": "real"},
        {"age": "aged", "gender": "male", "ethnicity": "white", "status": "celebrity", "origin": "real"}
      ],
      "gen_embeddings": {"dim": 3, "data": [0.9, 0.2, 0.3872983346207417, 0.1, 0.8, 0.5916079783099616]},
      "hps": 0.3,
      "qa_items": [{"kind": "simple", "score": 10}, {"kind": "complex", "score": 5}]
    },
    {
      "sample_id": "s2", "prompt_id": "p2", "n_refs": 1,
      "ref_embeddings": {"dim": 3, "data": [0, 0, 1]},
      "ref_attributes": [
        {"age": "middle_aged", "gender": "male", "ethnicity": "black", "status": "anonymous", "origin": "synthetic"}
      ],
      "gen_embeddings": {"dim": 3, "data": [0, 0.6, 0.8, 0, 0, 1]},
      "qa_items": [{"kind": "simple", "score": 10}]
    }
  ]
}"#;

fn main() -> Result<()> {
    let records = parse_manifest_bytes(MANIFEST.as_bytes(), None)?;
    let batch = evaluate_all(records, &EvalConfig::default(), 2, false)?;
    for (_, e) in &batch.evaluated {
        println!("{}: count {} s_id {:.3} unified {:?}", e.sample_id, e.scores.count, e.scores.s_id, e.scores.s_unified);
    }
    let report = aggregate_report(&batch.evaluated)?;
    println!("\n{}", report.render_text());
    print!("{}", report.to_csv()?);
    Ok(())
}
