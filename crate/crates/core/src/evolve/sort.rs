//! Dominance, non-dominated sorting and MaxiMin ordering.

use crate::error::{Error, Result};

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Dominance with constraint violations: a feasible member beats an
/// infeasible one, the smaller violation wins between infeasible members,
/// and plain dominance decides between feasible ones.
pub fn constrained_dominates(a: &[f64], va: f64, b: &[f64], vb: f64) -> bool {
    match (va > 0.0, vb > 0.0) {
        (false, true) => true,
        (true, false) => false,
        (true, true) => va < vb,
        (false, false) => dominates(a, b),
    }
}

/// Ordered fronts of indices into the sorted list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontPartition {
    pub fronts: Vec<Vec<usize>>,
}

impl FrontPartition {
    pub fn len(&self) -> usize {
        self.fronts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fronts.is_empty()
    }

    /// Front index of every member.
    pub fn ranks(&self, n: usize) -> Vec<usize> {
        let mut r = vec![usize::MAX; n];
        for (k, f) in self.fronts.iter().enumerate() {
            for &i in f {
                r[i] = k;
            }
        }
        r
    }
}

/// Deb's fast non-dominated sort. Members of each front are listed in
/// increasing index order.
pub fn fast_non_dominated_sort<V: AsRef<[f64]>>(objs: &[V]) -> FrontPartition {
    sort_by_relation(objs.len(), |p, q| {
        dominates(objs[p].as_ref(), objs[q].as_ref())
    })
}

/// Non-dominated sort under [`constrained_dominates`].
pub fn constrained_non_dominated_sort<V: AsRef<[f64]>>(
    objs: &[V],
    violations: &[f64],
) -> FrontPartition {
    sort_by_relation(objs.len(), |p, q| {
        constrained_dominates(
            objs[p].as_ref(),
            violations[p],
            objs[q].as_ref(),
            violations[q],
        )
    })
}

fn sort_by_relation(n: usize, dominates: impl Fn(usize, usize) -> bool) -> FrontPartition {
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            if dominates(p, q) {
                dominated_by[p].push(q);
                count[q] += 1;
            } else if dominates(q, p) {
                dominated_by[q].push(p);
                count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    FrontPartition { fronts }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Greedy MaxiMin ordering of `front`: each step emits the member whose
/// smallest distance to `selected` and everything already emitted is
/// largest. Ties go to the lower index.
///
/// Stops after `limit` members (or the whole front when `None`).
pub fn maximin_sort<V: AsRef<[f64]>>(
    front: &[usize],
    selected: &[usize],
    objs: &[V],
    limit: Option<usize>,
) -> Result<Vec<usize>> {
    if selected.is_empty() {
        return Err(Error::invalid(
            "MaxiMin sorting needs a non-empty selected set",
        ));
    }
    let mut c: Vec<f64> = front
        .iter()
        .map(|&j| {
            selected
                .iter()
                .map(|&k| distance(objs[j].as_ref(), objs[k].as_ref()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let want = limit.unwrap_or(front.len()).min(front.len());
    let mut taken = vec![false; front.len()];
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        let mut best: Option<usize> = None;
        for (slot, &j) in front.iter().enumerate() {
            if taken[slot] {
                continue;
            }
            best = match best {
                None => Some(slot),
                Some(b) if c[slot] > c[b] || (c[slot] == c[b] && j < front[b]) => Some(slot),
                keep => keep,
            };
        }
        let b = best.expect("front still has members");
        taken[b] = true;
        let p = front[b];
        out.push(p);
        for (slot, &j) in front.iter().enumerate() {
            if !taken[slot] {
                c[slot] = c[slot].min(distance(objs[j].as_ref(), objs[p].as_ref()));
            }
        }
    }
    Ok(out)
}

/// For every objective the index of its minimizer, duplicates collapsed and
/// in objective order. Ties go to the lower index.
pub fn seed_per_objective_minima<V: AsRef<[f64]>>(objs: &[V]) -> Vec<usize> {
    let Some(first) = objs.first() else {
        return Vec::new();
    };
    let k = first.as_ref().len();
    let mut out: Vec<usize> = Vec::with_capacity(k);
    for j in 0..k {
        let mut best = 0;
        for (i, o) in objs.iter().enumerate().skip(1) {
            if o.as_ref()[j] < objs[best].as_ref()[j] {
                best = i;
            }
        }
        if !out.contains(&best) {
            out.push(best);
        }
    }
    out
}
