//! Node rejection and forward-backward node adjustment.

use super::space::{lerp, ConfigSpace};
use super::{Path, PlannerConfig};

/// Greedy shortcutting: from each anchor keep the farthest later waypoint
/// joined to it by one free edge.
pub fn node_rejection(path: &Path, space: &dyn ConfigSpace, cfg: &PlannerConfig) -> Path {
    let w = &path.waypoints;
    if w.len() <= 2 {
        return path.clone();
    }
    let mut out = vec![w[0].clone()];
    let mut anchor = 0;
    while anchor < w.len() - 1 {
        let next = ((anchor + 1)..w.len())
            .rev()
            .find(|&j| j == anchor + 1 || space.edge_free(&w[anchor], &w[j], cfg.edge_check_step))
            .expect("range is non-empty");
        out.push(w[next].clone());
        anchor = next;
    }
    Path::new(out)
}

/// One forward sweep: for every segment after the first, slide along it in
/// `adjust_step` fractions and keep the farthest point visible from the
/// current anchor.
fn forward_pass(w: &[Vec<f64>], space: &dyn ConfigSpace, cfg: &PlannerConfig) -> Vec<Vec<f64>> {
    let n = w.len();
    if n <= 2 {
        return w.to_vec();
    }
    let steps = (1.0 / cfg.adjust_step).round().max(1.0) as usize;
    let mut out = vec![w[0].clone()];
    for k in 1..n - 1 {
        let anchor = out.last().expect("starts non-empty").clone();
        let best = (0..=steps)
            .rev()
            .map(|s| lerp(&w[k], &w[k + 1], s as f64 / steps as f64))
            .find(|p| space.edge_free(&anchor, p, cfg.edge_check_step))
            .unwrap_or_else(|| w[k].clone());
        if out.last() != Some(&best) {
            out.push(best);
        }
    }
    if out.last() != Some(&w[n - 1]) {
        out.push(w[n - 1].clone());
    }
    out
}

/// Forward pass, then the same pass on the flipped path, flipped back.
/// Falls back to the input if a sampled sub-segment check disagrees.
pub fn node_adjustment(path: &Path, space: &dyn ConfigSpace, cfg: &PlannerConfig) -> Path {
    let fwd = forward_pass(&path.waypoints, space, cfg);
    let mut rev = fwd;
    rev.reverse();
    let mut back = forward_pass(&rev, space, cfg);
    back.reverse();
    let out = Path::new(back);
    if out.is_free(space, cfg.edge_check_step) && out.total_length <= path.total_length {
        out
    } else {
        path.clone()
    }
}

/// Node rejection followed by node adjustment.
pub fn geom_optim(path: &Path, space: &dyn ConfigSpace, cfg: &PlannerConfig) -> Path {
    node_adjustment(&node_rejection(path, space, cfg), space, cfg)
}
