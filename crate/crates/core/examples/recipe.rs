//! A shortened fig1 recipe, run twice into the same directory to show the
//! outputs are reproducible byte for byte.

use slfv::recipes::{recipe_config, run_recipe};

fn main() -> slfv::Result<()> {
    let mut cfg = recipe_config("fig1")?.with_overrides(&["snapshots=0,100000".into(), "replicas=4".into()])?;
    cfg.out = "out/recipe".into();
    let mut digests = Vec::new();
    for _ in 0..2 {
        let res = run_recipe("fig1", &cfg)?;
        for c in &res.checks {
            println!("{c}");
        }
        digests.push(res.files.iter().map(|f| f.sha256.clone()).collect::<Vec<_>>());
    }
    println!("identical outputs: {}", digests[0] == digests[1]);
    Ok(())
}
