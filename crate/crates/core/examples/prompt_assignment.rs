//! Deal sampled ids to prompts so every id is used before any is reused.

use std::collections::BTreeMap;

use mht::sampler::assign_ids_to_prompts;
use mht::Result;

fn main() -> Result<()> {
    let ids: Vec<String> = (0..7).map(|i| format!("id{i}")).collect();
    let prompts = vec!["duet".to_string(), "trio".to_string(), "solo".to_string()];
    let persons = BTreeMap::from([
        ("duet".to_string(), 2),
        ("trio".to_string(), 3),
        ("solo".to_string(), 1),
    ]);

    let plan = assign_ids_to_prompts(&ids, &prompts, 2, &persons, 42)?;
    for a in &plan.assignments {
        println!("{:<5} #{}: {}", a.prompt_id, a.iteration, a.ids.join(", "));
    }
    println!("covers all ids: {}", plan.covers_all_ids);
    Ok(())
}
