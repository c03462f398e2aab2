//! Time laws for geometric paths: linear segments with parabolic blends and
//! rotate-then-translate base motion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::wrap_angle;
use crate::planner::distance;

/// Segment durations proportional to segment length, summing to the horizon.
pub fn segment_durations(waypoints: &[Vec<f64>], t_start: f64, t_end: f64) -> Result<Vec<f64>> {
    if waypoints.len() < 2 {
        return Err(Error::invalid("a time law needs at least two waypoints"));
    }
    let horizon = t_end - t_start;
    if !(horizon > 0.0) {
        return Err(Error::invalid(format!(
            "t_end must exceed t_start ({t_start} .. {t_end})"
        )));
    }
    let lengths: Vec<f64> = waypoints
        .windows(2)
        .map(|w| distance(&w[0], &w[1]))
        .collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("path has zero total length"));
    }
    let mut out: Vec<f64> = lengths.iter().map(|l| l / total * horizon).collect();
    let head: f64 = out[..out.len() - 1].iter().sum();
    *out.last_mut().expect("non-empty") = horizon - head;
    Ok(out)
}

/// `(phi_0, phi_1, ..., phi_{n-1}, phi_d)`: the start heading, the full-quadrant
/// direction of every segment and the final heading. A zero-length segment
/// keeps the previous heading.
pub fn heading_angles(waypoints: &[Vec<f64>], phi_0: f64, phi_d: f64) -> Result<Vec<f64>> {
    if waypoints.len() < 2 {
        return Err(Error::invalid("headings need at least two waypoints"));
    }
    let mut out = vec![phi_0];
    for w in waypoints.windows(2) {
        let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
        let prev = *out.last().expect("non-empty");
        out.push(if dx == 0.0 && dy == 0.0 {
            prev
        } else {
            dy.atan2(dx)
        });
    }
    out.push(phi_d);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajSample {
    pub t: f64,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimedTrajectory {
    pub samples: Vec<TrajSample>,
    pub t_start: f64,
    pub t_end: f64,
}

/// Sample times `t_start, t_start + dt, ...` ending exactly at `t_end`.
pub fn sample_times(t_start: f64, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_end >= t_start) {
        return Err(Error::invalid(format!(
            "bad sampling: dt = {dt}, horizon {t_start} .. {t_end}"
        )));
    }
    let n = ((t_end - t_start) / dt).floor() as usize;
    let mut ts: Vec<f64> = (0..=n)
        .map(|i| t_start + i as f64 * dt)
        .filter(|&t| t < t_end - 1e-12)
        .collect();
    ts.push(t_end);
    Ok(ts)
}

/// Linear segments joined by constant-acceleration blends. Each line passes
/// through its via-points at their nominal times; the motion starts and ends
/// at rest exactly on the endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBlend {
    points: Vec<Vec<f64>>,
    /// Blend centre times.
    tau: Vec<f64>,
    /// Blend durations.
    blend: Vec<f64>,
    /// Line velocity of each segment.
    vel: Vec<Vec<f64>>,
    t_start: f64,
    t_end: f64,
}

impl PolyBlend {
    pub fn new(
        waypoints: &[Vec<f64>],
        durations: &[f64],
        t_start: f64,
        blend_fraction: f64,
    ) -> Result<Self> {
        let n = waypoints.len();
        if n < 2 || durations.len() != n - 1 {
            return Err(Error::invalid(format!(
                "{n} waypoints need {} durations, got {}",
                n.max(1) - 1,
                durations.len()
            )));
        }
        if !(blend_fraction > 0.0 && blend_fraction <= 0.5) {
            return Err(Error::invalid(format!(
                "blend fraction must lie in (0, 0.5], got {blend_fraction}"
            )));
        }
        let dim = waypoints[0].len();
        if waypoints.iter().any(|w| w.len() != dim) {
            return Err(Error::invalid("waypoints differ in dimension"));
        }
        if durations.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::invalid("segment durations must be positive"));
        }
        let mut times = vec![t_start];
        for d in durations {
            times.push(times.last().expect("non-empty") + d);
        }
        let blend: Vec<f64> = (0..n)
            .map(|k| {
                let span = match k {
                    0 => durations[0],
                    k if k == n - 1 => durations[n - 2],
                    k => durations[k - 1].min(durations[k]),
                };
                blend_fraction * span
            })
            .collect();
        let mut tau = times.clone();
        tau[0] += blend[0] / 2.0;
        tau[n - 1] -= blend[n - 1] / 2.0;
        let vel = (0..n - 1)
            .map(|k| {
                let dt = tau[k + 1] - tau[k];
                waypoints[k]
                    .iter()
                    .zip(&waypoints[k + 1])
                    .map(|(a, b)| (b - a) / dt)
                    .collect()
            })
            .collect();
        Ok(Self {
            points: waypoints.to_vec(),
            tau,
            blend,
            vel,
            t_start,
            t_end: times[n - 1],
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    fn velocity_into(&self, k: usize) -> Option<&Vec<f64>> {
        k.checked_sub(1).map(|i| &self.vel[i])
    }

    fn velocity_out_of(&self, k: usize) -> Option<&Vec<f64>> {
        self.vel.get(k)
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.points.len();
        if t <= self.t_start {
            return self.points[0].clone();
        }
        if t >= self.t_end {
            return self.points[n - 1].clone();
        }
        for k in 0..n {
            let half = self.blend[k] / 2.0;
            if t >= self.tau[k] - half && t <= self.tau[k] + half {
                let s = t - self.tau[k];
                let r = t - self.tau[k] + half;
                let dim = self.points[k].len();
                let zero = vec![0.0; dim];
                let v_in = self.velocity_into(k).unwrap_or(&zero);
                let v_out = self.velocity_out_of(k).unwrap_or(&zero);
                return (0..dim)
                    .map(|i| {
                        self.points[k][i]
                            + v_in[i] * s
                            + (v_out[i] - v_in[i]) / (2.0 * self.blend[k]) * r * r
                    })
                    .collect();
            }
            if k + 1 < n && t < self.tau[k + 1] - self.blend[k + 1] / 2.0 {
                return self.points[k]
                    .iter()
                    .zip(&self.vel[k])
                    .map(|(q, v)| q + v * (t - self.tau[k]))
                    .collect();
            }
        }
        self.points[n - 1].clone()
    }

    /// Corner-cutting distance at an interior via-point: `|v_out - v_in| t_b / 8`.
    pub fn blend_deviation(&self, k: usize) -> f64 {
        match (self.velocity_into(k), self.velocity_out_of(k)) {
            (Some(a), Some(b)) => distance(a, b) * self.blend[k] / 8.0,
            _ => 0.0,
        }
    }

    pub fn sample(&self, dt: f64) -> Result<TimedTrajectory> {
        let samples = sample_times(self.t_start, self.t_end, dt)?
            .into_iter()
            .map(|t| TrajSample { t, q: self.eval(t) })
            .collect();
        Ok(TimedTrajectory {
            samples,
            t_start: self.t_start,
            t_end: self.t_end,
        })
    }
}

/// Blended time law over `durations`, sampled every `dt`.
pub fn interp_poly_blend(
    waypoints: &[Vec<f64>],
    durations: &[f64],
    t_start: f64,
    blend_fraction: f64,
    dt: f64,
) -> Result<TimedTrajectory> {
    PolyBlend::new(waypoints, durations, t_start, blend_fraction)?.sample(dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    RotateInPlace {
        at: [f64; 2],
        phi_from: f64,
        phi_to: f64,
        t0: f64,
        duration: f64,
    },
    StraightLine {
        from: [f64; 2],
        to: [f64; 2],
        heading: f64,
        t0: f64,
        duration: f64,
    },
}

impl Primitive {
    pub fn t0(&self) -> f64 {
        match *self {
            Primitive::RotateInPlace { t0, .. } | Primitive::StraightLine { t0, .. } => t0,
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            Primitive::RotateInPlace { duration, .. }
            | Primitive::StraightLine { duration, .. } => duration,
        }
    }

    /// `(x, y, phi)` at time `t`, with a symmetric blended speed profile.
    pub fn state_at(&self, t: f64, blend_fraction: f64) -> [f64; 3] {
        let s = ramp_fraction((t - self.t0()) / self.duration(), blend_fraction);
        match *self {
            Primitive::RotateInPlace {
                at,
                phi_from,
                phi_to,
                ..
            } => [
                at[0],
                at[1],
                wrap_angle(phi_from + s * wrap_angle(phi_to - phi_from)),
            ],
            Primitive::StraightLine {
                from, to, heading, ..
            } => [
                from[0] + s * (to[0] - from[0]),
                from[1] + s * (to[1] - from[1]),
                heading,
            ],
        }
    }
}

/// Normalized progress along a rest-to-rest move with parabolic ramps of
/// length `b` at each end (fractions of the move).
fn ramp_fraction(u: f64, b: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let v = 1.0 / (1.0 - b);
    if u < b {
        v * u * u / (2.0 * b)
    } else if u <= 1.0 - b {
        v * (u - b / 2.0)
    } else {
        1.0 - v * (1.0 - u) * (1.0 - u) / (2.0 * b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseMotionConfig {
    /// rad/s; fixes every rotation's duration.
    pub max_yaw_rate: f64,
    pub blend_fraction: f64,
}

impl Default for BaseMotionConfig {
    fn default() -> Self {
        Self {
            max_yaw_rate: 1.0,
            blend_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseMotionPlan {
    pub primitives: Vec<Primitive>,
    pub headings: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub blend_fraction: f64,
}

impl BaseMotionPlan {
    /// A plan of zero duration: the base stays where it is.
    pub fn is_hold(&self) -> bool {
        self.t_end <= self.t_start
    }

    /// `(x, y, phi)` at `t`, clamped to the plan horizon.
    pub fn state_at(&self, t: f64) -> [f64; 3] {
        let idx = self
            .primitives
            .iter()
            .rposition(|p| p.t0() <= t)
            .unwrap_or(0);
        self.primitives[idx].state_at(t, self.blend_fraction)
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn sample(&self, dt: f64) -> Result<TimedTrajectory> {
        let samples = sample_times(self.t_start, self.t_end, dt)?
            .into_iter()
            .map(|t| TrajSample {
                t,
                q: self.state_at(t).to_vec(),
            })
            .collect();
        Ok(TimedTrajectory {
            samples,
            t_start: self.t_start,
            t_end: self.t_end,
        })
    }
}

/// Rotate-then-translate plan over a planar path. Rotations take
/// `|dphi| / max_yaw_rate`; translations share the remaining horizon in
/// proportion to their lengths.
pub fn base_motion_plan(
    waypoints: &[Vec<f64>],
    phi_0: f64,
    phi_d: f64,
    t_start: f64,
    t_end: f64,
    cfg: &BaseMotionConfig,
) -> Result<BaseMotionPlan> {
    if waypoints.iter().any(|w| w.len() != 2) {
        return Err(Error::invalid("base motion needs planar (x, y) waypoints"));
    }
    if !(cfg.max_yaw_rate > 0.0) || !(cfg.blend_fraction > 0.0 && cfg.blend_fraction <= 0.5) {
        return Err(Error::invalid(
            "max yaw rate must be positive and blend fraction in (0, 0.5]",
        ));
    }
    let headings = heading_angles(waypoints, phi_0, phi_d)?;
    let rot_time = |a: f64, b: f64| wrap_angle(b - a).abs() / cfg.max_yaw_rate;
    let rotations: f64 = headings.windows(2).map(|h| rot_time(h[0], h[1])).sum();
    let horizon = t_end - t_start;
    if !(rotations < horizon) {
        return Err(Error::invalid(format!(
            "horizon {horizon:.3} s cannot fit {rotations:.3} s of rotation at the yaw-rate limit"
        )));
    }
    let lengths: Vec<f64> = waypoints
        .windows(2)
        .map(|w| distance(&w[0], &w[1]))
        .collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) && rotations == 0.0 {
        return Err(Error::invalid(
            "nothing to move: zero-length path and no rotation",
        ));
    }
    let translate_budget = horizon - rotations;
    let mut prims = Vec::new();
    let mut t = t_start;
    let rotate = |prims: &mut Vec<Primitive>, t: &mut f64, at: &[f64], from: f64, to: f64| {
        let d = rot_time(from, to);
        if d > 0.0 {
            prims.push(Primitive::RotateInPlace {
                at: [at[0], at[1]],
                phi_from: from,
                phi_to: to,
                t0: *t,
                duration: d,
            });
            *t += d;
        }
    };
    for (k, w) in waypoints.windows(2).enumerate() {
        rotate(&mut prims, &mut t, &w[0], headings[k], headings[k + 1]);
        if lengths[k] > 0.0 {
            let d = lengths[k] / total * translate_budget;
            prims.push(Primitive::StraightLine {
                from: [w[0][0], w[0][1]],
                to: [w[1][0], w[1][1]],
                heading: headings[k + 1],
                t0: t,
                duration: d,
            });
            t += d;
        }
    }
    let n = waypoints.len();
    rotate(
        &mut prims,
        &mut t,
        &waypoints[n - 1],
        headings[n - 1],
        headings[n],
    );
    Ok(BaseMotionPlan {
        primitives: prims,
        headings,
        t_start,
        t_end,
        blend_fraction: cfg.blend_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pts(v: &[[f64; 2]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn durations_follow_lengths() {
        let d = segment_durations(&pts(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]), 0.0, 3.0).unwrap();
        assert_eq!(d, vec![1.0, 2.0]);
        let e = segment_durations(&pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), 2.0, 6.0).unwrap();
        assert_eq!(e[0], e[1]);
        assert!(segment_durations(&pts(&[[1.0, 1.0], [1.0, 1.0]]), 0.0, 1.0).is_err());
        assert!(segment_durations(&pts(&[[0.0, 0.0], [1.0, 1.0]]), 1.0, 1.0).is_err());
    }

    #[test]
    fn headings_use_full_quadrant() {
        let h = heading_angles(
            &pts(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 1.0]]),
            0.1,
            0.2,
        )
        .unwrap();
        assert_relative_eq!(h[1], PI / 4.0);
        assert_relative_eq!(h[2], PI);
        assert_eq!(h[3], h[2]);
        assert_eq!((h[0], h[4]), (0.1, 0.2));
        let straight = heading_angles(&pts(&[[0.0, 0.0], [2.0, 0.0]]), 0.0, 0.0).unwrap();
        assert_eq!(straight, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn blend_passes_endpoints_and_bounds_corner_cut() {
        let w = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]]);
        let d = segment_durations(&w, 0.0, 3.0).unwrap();
        let pb = PolyBlend::new(&w, &d, 0.0, 0.1).unwrap();
        assert_eq!(pb.eval(0.0), w[0]);
        assert_eq!(pb.eval(3.0), w[2]);
        let at_via = pb.eval(1.0);
        assert_relative_eq!(
            distance(&at_via, &w[1]),
            pb.blend_deviation(1),
            epsilon = 1e-12
        );
        assert!(pb.blend_deviation(1) > 0.0);
    }

    #[test]
    fn two_point_blend_is_linear_between_ramps() {
        let w = pts(&[[0.0, 0.0], [2.0, 0.0]]);
        let pb = PolyBlend::new(&w, &[2.0], 0.0, 0.1).unwrap();
        let v = 2.0 / 1.8;
        for t in [0.5, 1.0, 1.5] {
            assert_relative_eq!(pb.eval(t)[0], v * (t - 0.1), epsilon = 1e-12);
        }
    }

    #[test]
    fn blended_velocity_is_continuous() {
        let w = pts(&[[0.0, 0.0], [1.0, 0.5], [2.5, -0.5], [3.0, 1.0]]);
        let d = segment_durations(&w, 0.0, 4.0).unwrap();
        let tr = interp_poly_blend(&w, &d, 0.0, 0.2, 1e-3).unwrap();
        let s = &tr.samples;
        let vel: Vec<Vec<f64>> = s.windows(2).map(|p| lerp_vel(&p[0], &p[1])).collect();
        for v in vel.windows(2) {
            assert!(
                distance(&v[0], &v[1]) < 0.05,
                "velocity jump {:?} -> {:?}",
                v[0],
                v[1]
            );
        }
        assert!(s.windows(2).all(|p| p[1].t > p[0].t));
        assert_eq!(s.last().unwrap().t, 4.0);
    }

    fn lerp_vel(a: &TrajSample, b: &TrajSample) -> Vec<f64> {
        a.q.iter()
            .zip(&b.q)
            .map(|(x, y)| (y - x) / (b.t - a.t))
            .collect()
    }

    #[test]
    fn straight_east_path_has_no_rotation() {
        let plan = base_motion_plan(
            &pts(&[[0.0, 0.0], [2.0, 0.0]]),
            0.0,
            0.0,
            0.0,
            4.0,
            &BaseMotionConfig::default(),
        )
        .unwrap();
        assert_eq!(plan.primitives.len(), 1);
        assert!(matches!(plan.primitives[0], Primitive::StraightLine { .. }));
    }

    #[test]
    fn l_shaped_path_alternates_and_fills_horizon() {
        let w = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let plan =
            base_motion_plan(&w, PI / 2.0, PI, 1.0, 11.0, &BaseMotionConfig::default()).unwrap();
        let kinds: Vec<bool> = plan
            .primitives
            .iter()
            .map(|p| matches!(p, Primitive::RotateInPlace { .. }))
            .collect();
        assert_eq!(kinds, vec![true, false, true, false, true]);
        let last = plan.primitives.last().unwrap();
        assert_relative_eq!(last.t0() + last.duration(), 11.0, epsilon = 1e-12);
        assert_eq!(plan.state_at(11.0), [1.0, 1.0, PI]);
        assert_eq!(plan.state_at(1.0), [0.0, 0.0, PI / 2.0]);
    }

    #[test]
    fn translation_follows_heading() {
        let w = pts(&[[0.0, 0.0], [1.0, 2.0], [-1.0, 2.5], [-2.0, -1.0]]);
        let plan = base_motion_plan(&w, 0.0, 1.0, 0.0, 20.0, &BaseMotionConfig::default()).unwrap();
        for prim in &plan.primitives {
            let Primitive::StraightLine { heading, .. } = *prim else {
                continue;
            };
            let ts: Vec<f64> = (0..=100)
                .map(|i| prim.t0() + prim.duration() * i as f64 / 100.0)
                .collect();
            for t in ts.windows(2) {
                let (a, b) = (plan.state_at(t[0]), plan.state_at(t[1]));
                assert_eq!((a[2], b[2]), (heading, heading));
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                assert!(wrap_angle(dy.atan2(dx) - heading).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn horizon_too_short_for_rotation_is_rejected() {
        let w = pts(&[[0.0, 0.0], [-1.0, 0.0]]);
        assert!(base_motion_plan(&w, 0.0, 0.0, 0.0, 3.0, &BaseMotionConfig::default()).is_err());
    }
}
