//! Loads a scenario file and runs one seed of its mode, as the CLI does.
//!
//! cargo run --example scenario_run -- crates/core/scenarios/nav_dyn.toml 2

use mdams::run::run;
use mdams::scenario::{bundled_dir, load_scenario};

fn main() -> mdams::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| bundled_dir().join("chair_a.toml"));
    let sc = load_scenario(&path)?;
    let seed = args
        .next()
        .map_or(sc.seeds[0], |s| s.parse().expect("seed is a u64"));
    for d in &sc.defaults {
        println!("default {d}");
    }
    let out = std::env::temp_dir().join(format!("mdams_{}_{seed}", sc.name));
    let report = run(&sc, sc.mode, seed, &out, None)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}
