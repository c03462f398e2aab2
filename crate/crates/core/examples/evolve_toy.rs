//! The evolver on a two-objective toy problem with a known front.

use mdams::evolve::{evolve, GaConfig, Problem};
use mdams::objectives::WeightVector;

/// f1 = x^2, f2 = (x - 2)^2 on x in [-4, 4]; the front is x in [0, 2].
struct Schaffer {
    bounds: Vec<(f64, f64)>,
}

impl Problem for Schaffer {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn n_objectives(&self) -> usize {
        2
    }

    fn evaluate(&self, genes: &[f64]) -> mdams::Result<Vec<f64>> {
        let x = genes[0];
        Ok(vec![x * x, (x - 2.0) * (x - 2.0)])
    }
}

fn main() -> mdams::Result<()> {
    let problem = Schaffer {
        bounds: vec![(-4.0, 4.0)],
    };
    let cfg = GaConfig::new(40, 60, 0.9, 0.2, WeightVector::new(vec![0.5, 0.5])?, 1)?;
    let run = evolve(&problem, &cfg)?;
    let mut xs: Vec<f64> = run.pareto_set.iter().map(|i| i.chromosome[0]).collect();
    xs.sort_by(f64::total_cmp);
    println!("front x range [{:.3}, {:.3}]", xs[0], xs[xs.len() - 1]);
    println!("decision maker pick x = {:.3}", run.best.chromosome[0]);
    println!("elitism holds: {}", run.history.elitism_holds());
    Ok(())
}
