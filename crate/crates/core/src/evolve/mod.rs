//! Improved MaxiMin NSGA-II.
//!
//! Each generation merges parents and offspring, seeds the next parent set
//! with the per-objective minimizers, then fills it front by front. The
//! improved variant MaxiMin-sorts every accepted front so that adjacent
//! parents (which are paired for crossover) are both good and diverse; the
//! baseline only MaxiMin-sorts the last, partially accepted front.

mod operators;
mod sort;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use operators::{breed, polynomial_mutation, sbx_gene};
pub use sort::{
    constrained_dominates, constrained_non_dominated_sort, dominates, fast_non_dominated_sort,
    maximin_sort, seed_per_objective_minima, FrontPartition,
};

use crate::error::{Error, Result};
use crate::objectives::{combined_fitness, Normalization, WeightVector};
use crate::rng::{stream, Stream};

/// A multi-objective minimization problem over a boxed real domain.
pub trait Problem: Sync {
    fn bounds(&self) -> &[(f64, f64)];

    fn n_objectives(&self) -> usize;

    fn evaluate(&self, genes: &[f64]) -> Result<Vec<f64>>;

    /// Maps a chromosome back into the feasible region. Must be
    /// deterministic; the default does nothing.
    fn repair(&self, _genes: &mut [f64]) {}

    /// Constraint violation of an evaluated member; zero means feasible.
    /// Feasible members dominate infeasible ones during selection and in
    /// the final front. The default treats every member as feasible.
    fn violation(&self, _objectives: &[f64]) -> f64 {
        0.0
    }

    /// Chromosomes placed at the head of the initial population.
    fn initial_individuals(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// MaxiMin ordering of every selected front.
    #[default]
    Improved,
    /// MaxiMin only for the last, partial front.
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub n_pop: usize,
    pub n_gen: usize,
    pub p_c: f64,
    pub p_m: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub weights: WeightVector,
    pub seed: u64,
    pub variant: Variant,
}

impl GaConfig {
    pub fn new(
        n_pop: usize,
        n_gen: usize,
        p_c: f64,
        p_m: f64,
        weights: WeightVector,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            n_pop,
            n_gen,
            p_c,
            p_m,
            eta_c: 15.0,
            eta_m: 20.0,
            weights,
            seed,
            variant: Variant::Improved,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pop < 4 || !self.n_pop.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "n_pop must be even and >= 4, got {}",
                self.n_pop
            )));
        }
        for (name, p) in [("p_c", self.p_c), ("p_m", self.p_m)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0) {
            return Err(Error::invalid("distribution indices must be non-negative"));
        }
        Ok(())
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Vec<f64>,
    pub objectives: Vec<f64>,
    /// Front index within the population it was last ranked in.
    pub rank: usize,
    /// Weighted fitness; lower is better.
    pub fitness: f64,
}

/// One row of the convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub objective_minima: Vec<f64>,
    /// Best weighted fitness in the parent population, normalized with the
    /// bounds of the initial population so rows are comparable.
    pub best_fitness: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub rows: Vec<GenerationStats>,
}

impl History {
    /// True when every objective minimum is nonincreasing across rows.
    pub fn elitism_holds(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].objective_minima
                .iter()
                .zip(&w[0].objective_minima)
                .all(|(now, before)| now <= before)
        })
    }

    /// First generation whose best-so-far fitness is at or below `threshold`.
    pub fn generation_reaching(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.best_so_far <= threshold)
            .map(|r| r.generation)
    }

    pub fn final_best(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.best_so_far)
    }

    pub fn to_csv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.objective_minima.len());
        let mut out = String::from("generation");
        for j in 0..k {
            out.push_str(&format!(",min_f{}", j + 1));
        }
        out.push_str(",best_fitness,best_so_far\n");
        for r in &self.rows {
            out.push_str(&r.generation.to_string());
            for m in &r.objective_minima {
                out.push_str(&format!(",{m}"));
            }
            out.push_str(&format!(",{},{}\n", r.best_fitness, r.best_so_far));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResult {
    /// Non-dominated members of the final parent population.
    pub pareto_set: Vec<Individual>,
    /// Decision-maker pick from `pareto_set`.
    pub best: Individual,
    pub history: History,
}

fn evaluate_all<P: Problem + ?Sized>(
    problem: &P,
    genes: &[Vec<f64>],
    generation: usize,
) -> Result<Vec<Vec<f64>>> {
    let k = problem.n_objectives();
    genes
        .par_iter()
        .map(|g| {
            let o = problem.evaluate(g)?;
            if o.len() != k || o.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("evaluator returned {o:?}")));
            }
            Ok(o)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Evaluation {
            generation,
            message: e.to_string(),
        })
}

fn repaired<P: Problem + ?Sized>(problem: &P, mut genes: Vec<f64>) -> Vec<f64> {
    problem.repair(&mut genes);
    for (g, &(lo, hi)) in genes.iter_mut().zip(problem.bounds()) {
        *g = g.clamp(lo, hi);
    }
    genes
}

/// Offspring from parents in their given order: (0, 1), (2, 3), ... are
/// paired, crossed and mutated.
pub fn make_new_pop<R: Rng + ?Sized>(
    parents: &[Vec<f64>],
    bounds: &[(f64, f64)],
    cfg: &GaConfig,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(parents.len());
    for pair in parents.chunks(2) {
        let a = &pair[0];
        let b = pair.get(1).unwrap_or(a);
        let (c1, c2) = breed(a, b, bounds, cfg.p_c, cfg.p_m, cfg.eta_c, cfg.eta_m, rng);
        out.push(c1);
        if out.len() < parents.len() {
            out.push(c2);
        }
    }
    out
}

/// Binary tournament on `fitness` (ties to the lower index), then the usual
/// variation operators.
pub fn basic_ga<R: Rng + ?Sized>(
    population: &[Vec<f64>],
    fitness: &[f64],
    bounds: &[(f64, f64)],
    cfg: &GaConfig,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let n = population.len();
    let mating: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let win = if fitness[a] < fitness[b] || (fitness[a] == fitness[b] && a < b) {
                a
            } else {
                b
            };
            population[win].clone()
        })
        .collect();
    make_new_pop(&mating, bounds, cfg, rng)
}

fn normalized(objs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let stats =
        Normalization::from_objectives(objs.iter().map(|o| o.as_slice())).expect("non-empty");
    objs.iter().map(|o| stats.scale_all(o)).collect()
}

/// Selects `n_pop` members of the merged population, in the order in which
/// they will be paired for reproduction.
pub fn select_next(objs: &[Vec<f64>], n_pop: usize, variant: Variant) -> Result<Vec<usize>> {
    select_next_constrained(objs, &vec![0.0; objs.len()], n_pop, variant)
}

/// [`select_next`] with fronts ranked by constrained dominance.
pub fn select_next_constrained(
    objs: &[Vec<f64>],
    violations: &[f64],
    n_pop: usize,
    variant: Variant,
) -> Result<Vec<usize>> {
    if violations.len() != objs.len() {
        return Err(Error::Dimension {
            expected: objs.len(),
            actual: violations.len(),
        });
    }
    let norm = normalized(objs);
    let mut selected = seed_per_objective_minima(objs);
    selected.truncate(n_pop);
    let rest: Vec<usize> = (0..objs.len()).filter(|i| !selected.contains(i)).collect();
    let rest_objs: Vec<&[f64]> = rest.iter().map(|&i| objs[i].as_slice()).collect();
    let rest_viol: Vec<f64> = rest.iter().map(|&i| violations[i]).collect();
    let fronts = constrained_non_dominated_sort(&rest_objs, &rest_viol);
    for front in fronts.fronts {
        if selected.len() >= n_pop {
            break;
        }
        let members: Vec<usize> = front.iter().map(|&i| rest[i]).collect();
        if selected.len() + members.len() <= n_pop {
            match variant {
                Variant::Improved => {
                    let order = maximin_sort(&members, &selected, &norm, None)?;
                    selected.extend(order);
                }
                Variant::Baseline => selected.extend(members),
            }
        } else {
            let room = n_pop - selected.len();
            let order = maximin_sort(&members, &selected, &norm, Some(room))?;
            selected.extend(order);
        }
    }
    Ok(selected)
}

pub fn evolve<P: Problem + ?Sized>(problem: &P, cfg: &GaConfig) -> Result<EvolveResult> {
    cfg.validate()?;
    let bounds = problem.bounds().to_vec();
    let k = problem.n_objectives();
    if cfg.weights.len() != k {
        return Err(Error::Dimension {
            expected: k,
            actual: cfg.weights.len(),
        });
    }
    if bounds
        .iter()
        .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi >= lo))
    {
        return Err(Error::invalid(
            "search bounds must be finite with max >= min",
        ));
    }
    let mut rng: ChaCha8Rng = stream(cfg.seed, Stream::Ga);

    let mut pop: Vec<Vec<f64>> = problem
        .initial_individuals()
        .into_iter()
        .take(cfg.n_pop)
        .collect();
    while pop.len() < cfg.n_pop {
        pop.push(
            bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                .collect(),
        );
    }
    let mut pop: Vec<Vec<f64>> = pop.into_iter().map(|g| repaired(problem, g)).collect();
    let mut objs = evaluate_all(problem, &pop, 0)?;

    // Fitness scale frozen at the initial population, for the history.
    let frozen = Normalization::from_objectives(objs.iter().map(|o| o.as_slice()))?;
    let frozen_fitness =
        |o: &[f64]| combined_fitness(o, &frozen, &cfg.weights).expect("dimensions checked");

    let fit0: Vec<f64> = objs.iter().map(|o| frozen_fitness(o)).collect();
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| fit0[a].total_cmp(&fit0[b]).then(a.cmp(&b)));
    pop = order.iter().map(|&i| pop[i].clone()).collect();
    objs = order.iter().map(|&i| objs[i].clone()).collect();
    let fit_sorted: Vec<f64> = order.iter().map(|&i| fit0[i]).collect();

    let mut offspring: Vec<Vec<f64>> = basic_ga(&pop, &fit_sorted, &bounds, cfg, &mut rng)
        .into_iter()
        .map(|g| repaired(problem, g))
        .collect();

    let mut history = History::default();
    let mut best_so_far = fit_sorted.first().copied().unwrap_or(f64::INFINITY);
    for generation in 1..=cfg.n_gen {
        let off_objs = evaluate_all(problem, &offspring, generation)?;
        let merged: Vec<Vec<f64>> = pop.iter().cloned().chain(offspring).collect();
        let merged_objs: Vec<Vec<f64>> = objs.iter().cloned().chain(off_objs).collect();
        let viol: Vec<f64> = merged_objs.iter().map(|o| problem.violation(o)).collect();
        let chosen = select_next_constrained(&merged_objs, &viol, cfg.n_pop, cfg.variant)?;
        pop = chosen.iter().map(|&i| merged[i].clone()).collect();
        objs = chosen.iter().map(|&i| merged_objs[i].clone()).collect();

        let minima: Vec<f64> = (0..k)
            .map(|j| objs.iter().map(|o| o[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let best = objs
            .iter()
            .map(|o| frozen_fitness(o))
            .fold(f64::INFINITY, f64::min);
        best_so_far = best_so_far.min(best);
        history.rows.push(GenerationStats {
            generation,
            objective_minima: minima,
            best_fitness: best,
            best_so_far,
        });

        offspring = make_new_pop(&pop, &bounds, cfg, &mut rng)
            .into_iter()
            .map(|g| repaired(problem, g))
            .collect();
    }

    let viol: Vec<f64> = objs.iter().map(|o| problem.violation(o)).collect();
    let (pareto_set, best) = decide_constrained(&pop, &objs, &viol, &cfg.weights)?;
    Ok(EvolveResult {
        pareto_set,
        best,
        history,
    })
}

/// Front-1 of a population and the member of it with the lowest weighted
/// fitness, normalized over that front.
pub fn decide(
    pop: &[Vec<f64>],
    objs: &[Vec<f64>],
    weights: &WeightVector,
) -> Result<(Vec<Individual>, Individual)> {
    decide_constrained(pop, objs, &vec![0.0; objs.len()], weights)
}

/// [`decide`] with front 1 taken under constrained dominance.
pub fn decide_constrained(
    pop: &[Vec<f64>],
    objs: &[Vec<f64>],
    violations: &[f64],
    weights: &WeightVector,
) -> Result<(Vec<Individual>, Individual)> {
    if violations.len() != objs.len() {
        return Err(Error::Dimension {
            expected: objs.len(),
            actual: violations.len(),
        });
    }
    let fronts = constrained_non_dominated_sort(objs, violations);
    let first = fronts
        .fronts
        .first()
        .ok_or_else(|| Error::invalid("empty population"))?;
    let stats = Normalization::from_objectives(first.iter().map(|&i| objs[i].as_slice()))?;
    let mut set = Vec::with_capacity(first.len());
    for &i in first {
        set.push(Individual {
            chromosome: pop[i].clone(),
            objectives: objs[i].clone(),
            rank: 0,
            fitness: combined_fitness(&objs[i], &stats, weights)?,
        });
    }
    let best = set
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.fitness.total_cmp(&b.fitness).then(ia.cmp(ib)))
        .map(|(_, b)| b.clone())
        .expect("front is non-empty");
    Ok((set, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sphere {
        bounds: Vec<(f64, f64)>,
    }

    impl Problem for Sphere {
        fn bounds(&self) -> &[(f64, f64)] {
            &self.bounds
        }
        fn n_objectives(&self) -> usize {
            1
        }
        fn evaluate(&self, g: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![g.iter().map(|x| (x - 0.3) * (x - 0.3)).sum()])
        }
    }

    /// Schaffer-style convex two-objective problem.
    struct Convex;

    impl Problem for Convex {
        fn bounds(&self) -> &[(f64, f64)] {
            &[(-2.0, 2.0), (-2.0, 2.0)]
        }
        fn n_objectives(&self) -> usize {
            2
        }
        fn evaluate(&self, g: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![
                g[0] * g[0] + g[1] * g[1],
                (g[0] - 1.0).powi(2) + g[1] * g[1],
            ])
        }
    }

    struct Failing;

    impl Problem for Failing {
        fn bounds(&self) -> &[(f64, f64)] {
            &[(0.0, 1.0)]
        }
        fn n_objectives(&self) -> usize {
            1
        }
        fn evaluate(&self, g: &[f64]) -> Result<Vec<f64>> {
            if g[0] > 2.0 {
                Ok(vec![0.0])
            } else {
                Err(Error::invalid("boom"))
            }
        }
    }

    fn cfg(k: usize, seed: u64) -> GaConfig {
        GaConfig::new(
            20,
            30,
            0.7,
            0.3,
            WeightVector::new(vec![1.0 / k as f64; k]).unwrap(),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        assert!(GaConfig::new(5, 10, 0.5, 0.5, w.clone(), 0).is_err());
        assert!(GaConfig::new(2, 10, 0.5, 0.5, w.clone(), 0).is_err());
        assert!(GaConfig::new(10, 10, 1.5, 0.5, w, 0).is_err());
    }

    #[test]
    fn sphere_history_is_monotone() {
        let p = Sphere {
            bounds: vec![(-1.0, 1.0); 4],
        };
        let r = evolve(&p, &cfg(1, 5)).unwrap();
        assert_eq!(r.history.rows.len(), 30);
        assert!(r
            .history
            .rows
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert!(r.history.elitism_holds());
        assert!(r.best.objectives[0] < 0.05);
    }

    #[test]
    fn convex_front_is_mutually_non_dominated() {
        let r = evolve(&Convex, &cfg(2, 9)).unwrap();
        for a in &r.pareto_set {
            for b in &r.pareto_set {
                assert!(!dominates(&a.objectives, &b.objectives));
            }
        }
        assert!(r.history.elitism_holds());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = evolve(&Convex, &cfg(2, 11)).unwrap();
        let b = evolve(&Convex, &cfg(2, 11)).unwrap();
        assert_eq!(a, b);
        let c = evolve(&Convex, &cfg(2, 12)).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn offspring_are_bit_identical_for_a_seed() {
        let parents: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64 * 0.1, 1.0 - i as f64 * 0.1])
            .collect();
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let c = cfg(2, 0);
        let a = make_new_pop(&parents, &bounds, &c, &mut stream(3, Stream::Ga));
        let b = make_new_pop(&parents, &bounds, &c, &mut stream(3, Stream::Ga));
        assert_eq!(a, b);
        let mut frozen = c.clone();
        frozen.p_c = 0.0;
        frozen.p_m = 0.0;
        assert_eq!(
            make_new_pop(&parents, &bounds, &frozen, &mut stream(3, Stream::Ga)),
            parents
        );
    }

    #[test]
    fn selection_keeps_population_size() {
        let objs: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64, (i / 3) as f64])
            .collect();
        for variant in [Variant::Improved, Variant::Baseline] {
            let s = select_next(&objs, 20, variant).unwrap();
            assert_eq!(s.len(), 20);
            let mut u = s.clone();
            u.sort_unstable();
            u.dedup();
            assert_eq!(u.len(), 20);
        }
    }

    #[test]
    fn evaluator_failure_reports_generation() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        let c = GaConfig::new(4, 3, 0.5, 0.5, w, 0).unwrap();
        assert!(matches!(
            evolve(&Failing, &c),
            Err(Error::Evaluation { generation: 0, .. })
        ));
    }
}
