//! Baseline against improved selection on paired seeds of the chair task.

use mdams::evolve::Variant;
use mdams::run::compare_evolvers;
use mdams::scenario::bundled;

fn main() -> mdams::Result<()> {
    let sc = bundled("chair_a")?;
    let out = std::env::temp_dir().join("mdams_compare");
    let seeds: Vec<u64> = (0..10).collect();
    let c = compare_evolvers(&sc, &seeds, &out, (Variant::Baseline, Variant::Improved))?;
    for r in &c.rows {
        println!(
            "seed {:>2}: baseline final {:.4}, improved final {:.4}, improved reached it at gen {}",
            r.seed, r.reference_final, r.candidate_final, r.candidate_generations_to_threshold
        );
    }
    for (k, v) in &c.summary {
        println!("{k} = {v}");
    }
    println!("histories in {}", out.display());
    Ok(())
}
