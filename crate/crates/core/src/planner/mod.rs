//! Bidirectional RRT with gradient-descent extension and direct connection,
//! plus the two-phase geometric path pruner.

mod optim;
mod space;

pub use optim::{geom_optim, node_adjustment, node_rejection};
pub use space::{distance, lerp, BaseSpace, ConfigSpace, DualEeSpace, JointSpace};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Inter-tree distance below which the closest pair is tried as a bridge.
    pub dis_max: f64,
    /// Probability of a random extension; the remainder are descent steps.
    pub p_rbm: f64,
    pub rrt_step: f64,
    pub grad_step: f64,
    /// Sliding step of node adjustment as a fraction of the segment.
    pub adjust_step: f64,
    pub max_iters: usize,
    /// Edge sampling resolution for spaces without analytic edge tests.
    pub edge_check_step: f64,
    /// Node pairs tried per direct-connect attempt.
    pub connect_budget: usize,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            dis_max: 0.4,
            p_rbm: 0.5,
            rrt_step: 0.2,
            grad_step: 0.2,
            adjust_step: 0.05,
            max_iters: 20_000,
            edge_check_step: crate::geometry::DEFAULT_EDGE_STEP,
            connect_budget: 32,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_rbm) {
            return Err(Error::invalid(format!(
                "p_rbM must lie in [0, 1], got {}",
                self.p_rbm
            )));
        }
        for (name, v) in [
            ("dis_max", self.dis_max),
            ("rrt_step", self.rrt_step),
            ("grad_step", self.grad_step),
            ("edge_check_step", self.edge_check_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.adjust_step > 0.0 && self.adjust_step <= 1.0) {
            return Err(Error::invalid(format!(
                "adjust_step must lie in (0, 1], got {}",
                self.adjust_step
            )));
        }
        if self.connect_budget == 0 {
            return Err(Error::invalid("connect_budget must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    pub nodes: Vec<Vec<f64>>,
    pub parent: Vec<Option<usize>>,
}

impl Tree {
    pub fn new(root: Vec<f64>) -> Self {
        Self {
            nodes: vec![root],
            parent: vec![None],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nearest node by linear scan; ties go to the lower index.
    pub fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = distance(n, q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Node `i` followed by its ancestors up to the root.
    pub fn chain_to_root(&self, mut i: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.nodes[i].clone()];
        while let Some(p) = self.parent[i] {
            out.push(self.nodes[p].clone());
            i = p;
        }
        out
    }
}

/// The start and goal trees plus their cached closest node pair.
#[derive(Debug, Clone, Serialize)]
pub struct Trees {
    pub start: Tree,
    pub goal: Tree,
    closest: (f64, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Start,
    Goal,
}

impl Trees {
    pub fn new(q_init: Vec<f64>, q_goal: Vec<f64>) -> Self {
        let d = distance(&q_init, &q_goal);
        Self {
            start: Tree::new(q_init),
            goal: Tree::new(q_goal),
            closest: (d, 0, 0),
        }
    }

    pub fn tree(&self, side: Side) -> &Tree {
        match side {
            Side::Start => &self.start,
            Side::Goal => &self.goal,
        }
    }

    /// Minimum distance between the trees with the pair realizing it.
    pub fn closest(&self) -> (f64, usize, usize) {
        self.closest
    }

    pub fn add(&mut self, side: Side, q: Vec<f64>, parent: usize) -> usize {
        let (own, other) = match side {
            Side::Start => (&mut self.start, &self.goal),
            Side::Goal => (&mut self.goal, &self.start),
        };
        own.nodes.push(q);
        own.parent.push(Some(parent));
        let i = own.len() - 1;
        let j = other.nearest(&own.nodes[i]);
        let d = distance(&own.nodes[i], &other.nodes[j]);
        if d < self.closest.0 {
            self.closest = match side {
                Side::Start => (d, i, j),
                Side::Goal => (d, j, i),
            };
        }
        i
    }
}

fn steer(from: &[f64], to: &[f64], step: f64) -> Option<Vec<f64>> {
    let d = distance(from, to);
    if d <= 0.0 {
        None
    } else if d <= step {
        Some(to.to_vec())
    } else {
        Some(lerp(from, to, step / d))
    }
}

fn sample<R: Rng + ?Sized>(space: &dyn ConfigSpace, rng: &mut R) -> Vec<f64> {
    space
        .bounds()
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
        .collect()
}

/// One random extension of both trees toward a common uniform sample.
/// Returns the number of nodes added.
pub fn birrt_extend<R: Rng + ?Sized>(
    trees: &mut Trees,
    space: &dyn ConfigSpace,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> usize {
    let q_rand = sample(space, rng);
    let mut added = 0;
    for side in [Side::Start, Side::Goal] {
        let tree = trees.tree(side);
        let near = tree.nearest(&q_rand);
        if let Some(q_new) = steer(&tree.nodes[near], &q_rand, cfg.rrt_step) {
            if space.edge_free(&tree.nodes[near], &q_new, cfg.edge_check_step) {
                trees.add(side, q_new, near);
                added += 1;
            }
        }
    }
    added
}

/// Advances both trees one step toward each other along the line joining
/// their closest pair. Returns the number of nodes added.
pub fn grad_dec_extend(trees: &mut Trees, space: &dyn ConfigSpace, cfg: &PlannerConfig) -> usize {
    let (d, i, j) = trees.closest();
    if d <= 0.0 {
        return 0;
    }
    let step = cfg.grad_step.min(d / 2.0);
    let a = trees.start.nodes[i].clone();
    let b = trees.goal.nodes[j].clone();
    let mut added = 0;
    for (side, from, to, parent) in [(Side::Start, &a, &b, i), (Side::Goal, &b, &a, j)] {
        let q = lerp(from, to, step / d);
        if space.edge_free(from, &q, cfg.edge_check_step) {
            trees.add(side, q, parent);
            added += 1;
        }
    }
    added
}

/// Tries the `connect_budget` closest node pairs that involve a start node
/// with index `>= since.0` or a goal node with index `>= since.1`, in order of
/// increasing distance. Passing `(0, 0)` considers every pair.
pub fn try_direct_connect(
    trees: &Trees,
    space: &dyn ConfigSpace,
    cfg: &PlannerConfig,
    since: (usize, usize),
) -> Option<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in trees.start.nodes.iter().enumerate() {
        let from = if i >= since.0 { 0 } else { since.1 };
        for (j, b) in trees.goal.nodes.iter().enumerate().skip(from) {
            pairs.push((distance(a, b), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    pairs
        .into_iter()
        .take(cfg.connect_budget)
        .find(|&(_, i, j)| {
            space.edge_free(
                &trees.start.nodes[i],
                &trees.goal.nodes[j],
                cfg.edge_check_step,
            )
        })
        .map(|(_, i, j)| (i, j))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub waypoints: Vec<Vec<f64>>,
    pub total_length: f64,
}

impl Path {
    pub fn new(waypoints: Vec<Vec<f64>>) -> Self {
        let total_length = waypoints.windows(2).map(|w| distance(&w[0], &w[1])).sum();
        Self {
            waypoints,
            total_length,
        }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn reversed(&self) -> Path {
        let mut w = self.waypoints.clone();
        w.reverse();
        Path::new(w)
    }

    pub fn is_free(&self, space: &dyn ConfigSpace, step: f64) -> bool {
        match self.waypoints.as_slice() {
            [] => false,
            [q] => space.is_free(q),
            w => w.windows(2).all(|p| space.edge_free(&p[0], &p[1], step)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlanStats {
    pub iterations: usize,
    pub birrt_calls: usize,
    pub grad_calls: usize,
    pub bridge: (usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    pub path: Path,
    pub trees: Trees,
    pub stats: PlanStats,
}

/// Grows both trees until a collision-free bridge joins them, then returns
/// the root-to-root path through the bridge. A bridge found by the closest
/// pair (within `dis_max`) is one of the direct-connect candidates, so one
/// test covers both exit conditions.
pub fn plan(
    q_init: &[f64],
    q_goal: &[f64],
    space: &dyn ConfigSpace,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    cfg.validate()?;
    for (q, what) in [(q_init, "start"), (q_goal, "goal")] {
        if q.len() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                actual: q.len(),
            });
        }
        if !space.is_free(q) {
            return Err(Error::InCollision(what));
        }
    }
    let mut rng = stream(cfg.seed, Stream::Planner);
    let mut trees = Trees::new(q_init.to_vec(), q_goal.to_vec());
    let mut stats = PlanStats {
        iterations: 0,
        birrt_calls: 0,
        grad_calls: 0,
        bridge: (0, 0),
    };
    let mut since = (0, 0);
    loop {
        if let Some(bridge) = bridge(&trees, space, cfg, since) {
            stats.bridge = bridge;
            let mut w = trees.start.chain_to_root(bridge.0);
            w.reverse();
            w.extend(trees.goal.chain_to_root(bridge.1));
            w.dedup();
            return Ok(PlanResult {
                path: Path::new(w),
                trees,
                stats,
            });
        }
        if stats.iterations >= cfg.max_iters {
            return Err(Error::NoPath {
                iterations: stats.iterations,
            });
        }
        since = (trees.start.len(), trees.goal.len());
        stats.iterations += 1;
        if rng.gen::<f64>() < cfg.p_rbm {
            stats.birrt_calls += 1;
            birrt_extend(&mut trees, space, cfg, &mut rng);
        } else {
            stats.grad_calls += 1;
            grad_dec_extend(&mut trees, space, cfg);
        }
    }
}

fn bridge(
    trees: &Trees,
    space: &dyn ConfigSpace,
    cfg: &PlannerConfig,
    since: (usize, usize),
) -> Option<(usize, usize)> {
    let (d, i, j) = trees.closest();
    if d <= cfg.dis_max
        && space.edge_free(
            &trees.start.nodes[i],
            &trees.goal.nodes[j],
            cfg.edge_check_step,
        )
    {
        return Some((i, j));
    }
    try_direct_connect(trees, space, cfg, since)
}
