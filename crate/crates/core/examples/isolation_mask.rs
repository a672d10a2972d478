//! Base and regional-isolation attention masks for a small token layout.

use mht::{build_base_mask, build_isolated_mask, AttentionMask, IsolationSpec, Result, TokenLayout};

fn show(name: &str, mask: &AttentionMask) {
    println!("{name}:");
    for row in mask.to_dense().chunks(mask.len()) {
        let line: String = row.iter().map(|&b| if b == 1 { '1' } else { '.' }).collect();
        println!("  {line}");
    }
}

fn main() -> Result<()> {
    // 2 text tokens, two reference images of 2 tokens, one timestep token, a 2x2 latent grid.
    let layout = TokenLayout::from_json(
        r#"{"L": 11, "text": [0, 1], "images": [[2, 3], [4, 5]], "timestep": [6],
            "latent": [7, 8, 9, 10], "grid_side": 2}"#,
    )?;
    show("base", &build_base_mask(&layout)?);

    // Reference 0 owns the left latent column, reference 1 the right one.
    let spec = IsolationSpec::new(layout, vec![vec![7, 9], vec![8, 10]])?;
    let iso = build_isolated_mask(&spec)?;
    show("isolated", &iso);

    println!("{}", serde_json::to_string(&iso.export()).expect("serializable"));
    Ok(())
}
