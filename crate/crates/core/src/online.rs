//! Simulated-time online replanning for the mobile base: sensing, control and
//! collision-test cycles, obstacle velocity estimation and prediction.

use std::collections::VecDeque;

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Obstacle, Shape, WorldState};
use crate::planner::{geom_optim, plan, BaseSpace, Path, PlannerConfig};
use crate::rng::{stream, Stream};
use crate::trajectory::{
    base_motion_plan, heading_angles, BaseMotionConfig, BaseMotionPlan, Primitive, TimedTrajectory,
    TrajSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleConfig {
    /// Sensing cycle (s).
    pub dt_s: f64,
    /// Control cycle (s).
    pub dt_c: f64,
    /// Collision-test horizon (s).
    pub dt_col: f64,
    /// Position differences used for velocity estimation.
    pub m_o: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            dt_s: 0.5,
            dt_c: 1.0,
            dt_col: 2.0,
            m_o: 4,
        }
    }
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0 && self.dt_s <= self.dt_c && self.dt_c <= self.dt_col) {
            return Err(Error::invalid(format!(
                "cycles must satisfy 0 < dt_s <= dt_c <= dt_col, got {} / {} / {}",
                self.dt_s, self.dt_c, self.dt_col
            )));
        }
        let ratio = self.dt_c / self.dt_s;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::invalid("dt_c must be a whole multiple of dt_s"));
        }
        if self.m_o == 0 {
            return Err(Error::invalid("m_o must be at least 1"));
        }
        Ok(())
    }

    /// Sensing ticks per control cycle.
    pub fn control_ratio(&self) -> usize {
        (self.dt_c / self.dt_s).round() as usize
    }
}

/// Recent sensed positions of one obstacle, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrack {
    pub id: String,
    history: VecDeque<(f64, Vector3<f64>)>,
    capacity: usize,
}

impl ObstacleTrack {
    pub fn new(id: impl Into<String>, m_o: usize) -> Self {
        Self {
            id: id.into(),
            history: VecDeque::new(),
            capacity: m_o + 1,
        }
    }

    pub fn push(&mut self, t: f64, p: Vector3<f64>) -> Result<()> {
        if let Some(&(last, _)) = self.history.back() {
            if !(t > last) {
                return Err(Error::invalid(format!(
                    "track {}: time {t} does not follow {last}",
                    self.id
                )));
            }
        }
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back((t, p));
        Ok(())
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    pub fn latest(&self) -> Option<(f64, Vector3<f64>)> {
        self.history.back().copied()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    pub velocity: Vector3<f64>,
    /// False when fewer than two samples were available.
    pub sufficient: bool,
}

/// Of the finite differences over the track window, the one with the largest
/// norm, kept as a vector. Ties go to the older difference.
pub fn obs_estim(track: &ObstacleTrack, cfg: &CycleConfig) -> VelocityEstimate {
    if track.len() < 2 {
        return VelocityEstimate {
            velocity: Vector3::zeros(),
            sufficient: false,
        };
    }
    let mut best = Vector3::zeros();
    let mut best_norm = -1.0;
    for (a, b) in track.history.iter().zip(track.history.iter().skip(1)) {
        let v = (b.1 - a.1) / cfg.dt_s;
        if v.norm() > best_norm {
            best_norm = v.norm();
            best = v;
        }
    }
    VelocityEstimate {
        velocity: best,
        sufficient: true,
    }
}

/// Linear extrapolation from the latest sensed position.
pub fn predict_position(
    track: &ObstacleTrack,
    velocity: &Vector3<f64>,
    delta_t: f64,
    cfg: &CycleConfig,
) -> Result<Vector3<f64>> {
    if !(delta_t > 0.0 && delta_t <= cfg.dt_col) {
        return Err(Error::invalid(format!(
            "prediction offset {delta_t} outside (0, {}]",
            cfg.dt_col
        )));
    }
    let (_, p) = track
        .latest()
        .ok_or_else(|| Error::invalid(format!("track {} is empty", track.id)))?;
    Ok(p + velocity * delta_t)
}

/// A sensed obstacle moving at its estimated velocity from time `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub obstacle: Obstacle,
    pub t0: f64,
    pub velocity: Vector3<f64>,
}

impl Prediction {
    pub fn at(&self, t: f64) -> Obstacle {
        self.obstacle
            .moved_to(self.obstacle.position() + self.velocity * (t - self.t0))
    }
}

/// Earliest time in `[from, to]` (swept at `step`) at which the base point
/// given by `state` meets a static obstacle or a predicted dynamic one, both
/// grown by the static world's security hull.
pub fn collision_check(
    state: impl Fn(f64) -> [f64; 3],
    static_world: &WorldState,
    predictions: &[Prediction],
    height: f64,
    from: f64,
    to: f64,
    step: f64,
) -> Option<f64> {
    let delta = static_world.security_hull();
    let n = ((to - from) / step).ceil().max(0.0) as usize;
    (0..=n)
        .map(|k| (from + k as f64 * step).min(to))
        .find(|&t| {
            let s = state(t);
            let p = Vector3::new(s[0], s[1], height);
            static_world.point_collides(&p)
                || predictions
                    .iter()
                    .any(|pr| pr.at(t).shape.grown(delta).contains(&p))
        })
}

/// Ground-truth motion of one dynamic obstacle: a mean velocity plus a
/// bounded random deviation redrawn every control cycle, capped at `v_max`,
/// with optional scripted jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleScript {
    pub id: String,
    pub mean_velocity: [f64; 3],
    #[serde(default)]
    pub jitter: f64,
    pub v_max: f64,
    #[serde(default)]
    pub teleports: Vec<Teleport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Teleport {
    pub t: f64,
    pub to: [f64; 3],
}

#[derive(Debug, Clone)]
struct MovingBody {
    index: usize,
    script: ObstacleScript,
    anchor_t: f64,
    anchor: Vector3<f64>,
    velocity: Vector3<f64>,
    next_teleport: usize,
}

/// Obstacle ground truth on the simulated clock.
#[derive(Debug, Clone)]
struct ObstacleSim {
    world: WorldState,
    bodies: Vec<MovingBody>,
    rng: ChaCha8Rng,
}

impl ObstacleSim {
    fn new(world: &WorldState, scripts: &[ObstacleScript], seed: u64) -> Result<Self> {
        let mut bodies = Vec::new();
        for s in scripts {
            let index = world
                .obstacles
                .iter()
                .position(|o| o.id == s.id)
                .ok_or_else(|| Error::invalid(format!("script for unknown obstacle {}", s.id)))?;
            if !(s.v_max >= 0.0 && s.jitter >= 0.0) {
                return Err(Error::invalid(format!(
                    "obstacle {}: v_max and jitter must be non-negative",
                    s.id
                )));
            }
            let anchor = world.obstacles[index].position();
            bodies.push(MovingBody {
                index,
                script: s.clone(),
                anchor_t: 0.0,
                anchor,
                velocity: Vector3::zeros(),
                next_teleport: 0,
            });
        }
        let mut sim = Self {
            world: world.clone(),
            bodies,
            rng: stream(seed, Stream::Obstacles),
        };
        sim.redraw(0.0);
        Ok(sim)
    }

    fn position(b: &MovingBody, t: f64) -> Vector3<f64> {
        b.anchor + b.velocity * (t - b.anchor_t)
    }

    /// New velocities from `t` on.
    fn redraw(&mut self, t: f64) {
        for b in &mut self.bodies {
            b.anchor = Self::position(b, t);
            b.anchor_t = t;
            let m = Vector3::from(b.script.mean_velocity);
            let jitter = if b.script.jitter > 0.0 {
                let r = b.script.jitter * self.rng.gen::<f64>().sqrt();
                let a = self.rng.gen_range(0.0..std::f64::consts::TAU);
                Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            } else {
                Vector3::zeros()
            };
            let v = m + jitter;
            b.velocity = if v.norm() > b.script.v_max {
                v * (b.script.v_max / v.norm())
            } else {
                v
            };
        }
    }

    /// Applies due jumps and returns the true world at `t`.
    fn world_at(&mut self, t: f64) -> &WorldState {
        for b in &mut self.bodies {
            while let Some(tp) = b.script.teleports.get(b.next_teleport) {
                if tp.t > t {
                    break;
                }
                b.anchor = Vector3::from(tp.to);
                b.anchor_t = t;
                b.next_teleport += 1;
            }
            let p = Self::position(b, t);
            self.world.obstacles[b.index] = self.world.obstacles[b.index].moved_to(p);
        }
        &self.world
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineConfig {
    pub cycles: CycleConfig,
    pub planner: PlannerConfig,
    pub max_yaw_rate: f64,
    pub blend_fraction: f64,
    /// Mean translation speed of planned motions (m/s).
    pub nominal_speed: f64,
    /// Physical base radius used for ground-truth contact.
    pub base_radius: f64,
    /// Executed-trajectory sampling rate (Hz).
    pub samples_hz: f64,
    /// Sweep step of the collision test (s).
    pub check_step: f64,
    pub max_time: f64,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            cycles: CycleConfig::default(),
            planner: PlannerConfig::default(),
            max_yaw_rate: 1.0,
            blend_fraction: 0.1,
            nominal_speed: 0.5,
            base_radius: 0.25,
            samples_hz: 100.0,
            check_step: 0.05,
            max_time: 300.0,
        }
    }
}

impl OnlineConfig {
    fn motion(&self) -> BaseMotionConfig {
        BaseMotionConfig {
            max_yaw_rate: self.max_yaw_rate,
            blend_fraction: self.blend_fraction,
        }
    }

    /// Samples per sensing cycle.
    fn substeps(&self) -> Result<usize> {
        let n = self.cycles.dt_s * self.samples_hz;
        if !(n >= 1.0) || (n - n.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "samples_hz {} must give a whole number of samples per sensing cycle",
                self.samples_hz
            )));
        }
        Ok(n.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.cycles.validate()?;
        self.planner.validate()?;
        for (name, v) in [
            ("max_yaw_rate", self.max_yaw_rate),
            ("nominal_speed", self.nominal_speed),
            ("check_step", self.check_step),
            ("max_time", self.max_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.base_radius >= 0.0) {
            return Err(Error::invalid("base radius must be non-negative"));
        }
        self.substeps().map(|_| ())
    }
}

/// A navigation task among static and scripted obstacles. Obstacles named by
/// a script move; the world's security hull is the planning clearance.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineScenario {
    pub world: WorldState,
    pub scripts: Vec<ObstacleScript>,
    /// `(x, y, phi)`.
    pub start: [f64; 3],
    pub goal: [f64; 2],
    /// Final heading; the last segment's heading when `None`.
    pub goal_heading: Option<f64>,
    pub base_height: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanReason {
    Predicted,
    Sudden,
    /// The robot was holding still and tries to move on.
    Resume,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplanEvent {
    /// Cycle time at which the replan was triggered.
    pub t: f64,
    /// Time the new motion takes over.
    pub switch_at: f64,
    pub reason: ReplanReason,
    /// Predicted collision time of the replaced motion, if any.
    pub predicted_hit: Option<f64>,
    /// `(x, y, phi)` the new motion starts from.
    pub from: [f64; 3],
    pub waypoints: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleSample {
    pub t: f64,
    pub id: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineLog {
    pub executed: TimedTrajectory,
    pub initial_path: Vec<Vec<f64>>,
    pub replans: Vec<ReplanEvent>,
    /// Ground-truth contact episodes.
    pub collisions: usize,
    pub goal_reached: bool,
    pub finish_time: f64,
    /// Largest gap between a one-cycle-ahead prediction and the truth.
    pub max_prediction_error: f64,
    pub obstacle_trace: Vec<ObstacleSample>,
}

/// Motion currently followed and the one queued for the next control edge.
struct Schedule {
    motion: BaseMotionPlan,
    pending: Option<(f64, BaseMotionPlan)>,
}

impl Schedule {
    /// Standing still short of the goal.
    fn is_holding(&self, goal: [f64; 2]) -> bool {
        let end = self.motion.state_at(self.motion.t_end);
        self.motion.is_hold() && (end[0] - goal[0]).hypot(end[1] - goal[1]) > 1e-9
    }

    fn state_at(&self, t: f64) -> [f64; 3] {
        match &self.pending {
            Some((at, m)) if t >= *at => m.state_at(t),
            _ => self.motion.state_at(t),
        }
    }
}

/// Standing still at `at` from `t` on.
fn hold(at: [f64; 3], t: f64, blend_fraction: f64) -> BaseMotionPlan {
    let rest = Primitive::RotateInPlace {
        at: [at[0], at[1]],
        phi_from: at[2],
        phi_to: at[2],
        t0: t,
        duration: 1.0,
    };
    BaseMotionPlan {
        primitives: vec![rest],
        headings: vec![at[2]],
        t_start: t,
        t_end: t,
        blend_fraction,
    }
}

/// Paths tried per replan before settling for the least conflicting one.
const REPLAN_CANDIDATES: u64 = 6;

/// Extra extrapolation time (s) used to rank replan candidates.
const RANK_LOOKAHEAD: f64 = 5.0;

struct Planner<'a> {
    scenario: &'a OnlineScenario,
    cfg: &'a OnlineConfig,
    calls: u64,
}

impl Planner<'_> {
    /// Plans from `from` at time `t0` around the static obstacles and the
    /// predicted sweep of every dynamic one over the test horizon.
    fn replan(
        &mut self,
        from: [f64; 3],
        t0: f64,
        static_world: &WorldState,
        predictions: &[Prediction],
        t_pred: f64,
    ) -> Result<(BaseMotionPlan, Path)> {
        let c = &self.cfg.cycles;
        let h = self.scenario.base_height;
        let delta = static_world.security_hull();
        let start = Vector3::new(from[0], from[1], h);
        let goal = Vector3::new(self.scenario.goal[0], self.scenario.goal[1], h);
        let mut obstacles = static_world.obstacles.clone();
        let horizon = (t0 - t_pred).max(0.0) + c.dt_c + c.dt_col;
        let copies = (horizon / c.dt_s).ceil() as usize;
        for p in predictions {
            for k in 0..=copies {
                let o = p.at(t_pred + k as f64 * c.dt_s);
                let grown = o.shape.grown(delta);
                if !grown.contains(&start) && !grown.contains(&goal) {
                    obstacles.push(o);
                }
            }
        }
        let world = static_world.with_obstacles(obstacles);
        let space = BaseSpace::from_world(&world, h);
        let q0 = vec![from[0], from[1]];
        let q1 = self.scenario.goal.to_vec();
        if crate::planner::distance(&q0, &q1) < 1e-9 {
            let path = Path::new(vec![q0]);
            return Ok((hold(from, t0, self.cfg.blend_fraction), path));
        }

        // Each candidate is swept against the timed predictions, first over
        // the test horizon and then, for ranking only, over a longer linear
        // extrapolation. Fewer hits win, then a later first hit.
        let near = t0 + c.dt_c + c.dt_col;
        let far = near + RANK_LOOKAHEAD;
        let score = |m: &BaseMotionPlan| -> (usize, usize, f64) {
            let step = self.cfg.check_step;
            let n = ((far - t0) / step).ceil() as usize;
            let (mut near_hits, mut far_hits, mut first) = (0, 0, f64::INFINITY);
            for k in 0..=n {
                let t = (t0 + k as f64 * step).min(far);
                if collision_check(|s| m.state_at(s), static_world, predictions, h, t, t, step)
                    .is_some()
                {
                    if t <= near {
                        near_hits += 1;
                    } else {
                        far_hits += 1;
                    }
                    first = first.min(t);
                }
            }
            (near_hits, far_hits, first)
        };
        let better = |a: (usize, usize, f64), b: (usize, usize, f64)| {
            (a.0, a.1) < (b.0, b.1) || ((a.0, a.1) == (b.0, b.1) && a.2 > b.2)
        };
        let mut best: Option<((usize, usize, f64), BaseMotionPlan, Path)> = None;
        let mut last_err = None;
        for _ in 0..REPLAN_CANDIDATES {
            let pcfg = PlannerConfig {
                seed: self.cfg.planner.seed.wrapping_add(self.calls),
                ..self.cfg.planner.clone()
            };
            self.calls += 1;
            let raw = match plan(&q0, &q1, &space, &pcfg) {
                Ok(r) => r,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let path = geom_optim(&raw.path, &space, &pcfg);
            let motion = self.motion_along(&path, from[2], t0)?;
            let sc = score(&motion);
            if sc.0 == 0 && sc.1 == 0 {
                return Ok((motion, path));
            }
            if best.as_ref().is_none_or(|b| better(sc, b.0)) {
                best = Some((sc, motion, path));
            }
        }
        let Some((best_score, motion, path)) = best else {
            return Err(last_err.expect("at least one candidate was tried"));
        };
        let stay = hold(from, t0, self.cfg.blend_fraction);
        if better(score(&stay), best_score) {
            return Ok((stay, Path::new(vec![q0])));
        }
        Ok((motion, path))
    }

    fn motion_along(&self, path: &Path, phi_0: f64, t0: f64) -> Result<BaseMotionPlan> {
        let last = heading_angles(&path.waypoints, phi_0, 0.0)?;
        let phi_d = self.scenario.goal_heading.unwrap_or(last[last.len() - 2]);
        let heads = heading_angles(&path.waypoints, phi_0, phi_d)?;
        let rot: f64 = heads
            .windows(2)
            .map(|h| crate::kinematics::wrap_angle(h[1] - h[0]).abs())
            .sum::<f64>()
            / self.cfg.max_yaw_rate;
        let duration = path.total_length / self.cfg.nominal_speed + rot;
        base_motion_plan(
            &path.waypoints,
            phi_0,
            phi_d,
            t0,
            t0 + duration,
            &self.cfg.motion(),
        )
    }
}

fn sensed<'w>(
    world: &'w WorldState,
    at: [f64; 3],
    range: f64,
) -> impl Iterator<Item = &'w Obstacle> + 'w {
    let p = Vector2::new(at[0], at[1]);
    world.obstacles.iter().filter(move |o| {
        let c = o.position();
        (Vector2::new(c.x, c.y) - p).norm() <= range + footprint_radius(&o.shape)
    })
}

fn footprint_radius(s: &Shape) -> f64 {
    match *s {
        Shape::Box { half_extents, .. } => half_extents.x.hypot(half_extents.y),
        Shape::Cylinder { radius, .. } | Shape::Sphere { radius, .. } => radius,
    }
}

/// The online loop with every obstacle visible.
pub fn run_online(scenario: &OnlineScenario, cfg: &OnlineConfig) -> Result<OnlineLog> {
    run_online_local(scenario, cfg, f64::INFINITY)
}

/// The online loop when only obstacles within `sensing_range` of the base
/// are known; everything farther away is treated as free space.
pub fn run_online_local(
    scenario: &OnlineScenario,
    cfg: &OnlineConfig,
    sensing_range: f64,
) -> Result<OnlineLog> {
    cfg.validate()?;
    if !(sensing_range > 0.0) {
        return Err(Error::invalid("sensing range must be positive"));
    }
    let c = cfg.cycles;
    let sub = cfg.substeps()?;
    let ratio = c.control_ratio();
    let h = scenario.base_height;
    let dynamic: Vec<&str> = scenario.scripts.iter().map(|s| s.id.as_str()).collect();
    let is_dynamic = |o: &Obstacle| dynamic.contains(&o.id.as_str());
    let mut sim = ObstacleSim::new(&scenario.world, &scenario.scripts, scenario.seed)?;
    let truth_hull = scenario.world.with_security_hull(cfg.base_radius)?;
    let mut tracks: Vec<ObstacleTrack> = scenario
        .scripts
        .iter()
        .map(|s| ObstacleTrack::new(&s.id, c.m_o))
        .collect();
    let mut planner = Planner {
        scenario,
        cfg,
        calls: 0,
    };

    let fail = |t: f64, e: Error| Error::OnlineAbort {
        time: t,
        reason: e.to_string(),
    };
    let split = |world: &WorldState, at: [f64; 3]| -> (WorldState, Vec<Obstacle>) {
        let (dyn_o, stat): (Vec<Obstacle>, Vec<Obstacle>) = sensed(world, at, sensing_range)
            .cloned()
            .partition(|o| is_dynamic(o));
        (scenario.world.with_obstacles(stat), dyn_o)
    };

    let w0 = sim.world_at(0.0).clone();
    let (static0, dyn0) = split(&w0, scenario.start);
    let frozen: Vec<Prediction> = dyn0
        .into_iter()
        .map(|o| Prediction {
            obstacle: o,
            t0: 0.0,
            velocity: Vector3::zeros(),
        })
        .collect();
    let (motion, initial) = planner
        .replan(scenario.start, 0.0, &static0, &frozen, 0.0)
        .map_err(|e| fail(0.0, e))?;
    let mut sched = Schedule {
        motion,
        pending: None,
    };

    let mut log = OnlineLog {
        executed: TimedTrajectory {
            samples: Vec::new(),
            t_start: 0.0,
            t_end: 0.0,
        },
        initial_path: initial.waypoints,
        replans: Vec::new(),
        collisions: 0,
        goal_reached: false,
        finish_time: 0.0,
        max_prediction_error: 0.0,
        obstacle_trace: Vec::new(),
    };
    let mut in_contact = false;
    let mut open_predictions: Vec<(String, f64, Vector3<f64>)> = Vec::new();
    let mut i: usize = 0;
    loop {
        let tick = i / sub;
        let t = if i.is_multiple_of(sub) {
            tick as f64 * c.dt_s
        } else {
            tick as f64 * c.dt_s + (i % sub) as f64 * c.dt_s / sub as f64
        };
        if t > cfg.max_time {
            return Err(Error::OnlineAbort {
                time: t,
                reason: format!("goal not reached within {} s", cfg.max_time),
            });
        }
        if i.is_multiple_of(sub) && tick.is_multiple_of(ratio) && tick > 0 {
            sim.redraw(t);
        }
        let truth = sim.world_at(t).clone();
        if let Some((at, _)) = &sched.pending {
            if t >= *at {
                let (_, m) = sched.pending.take().expect("checked");
                sched.motion = m;
            }
        }
        let mut robot = sched.state_at(t);

        if i.is_multiple_of(sub) {
            let (stat, dyn_o) = split(&truth, robot);
            for tr in &mut tracks {
                match dyn_o.iter().find(|o| o.id == tr.id) {
                    Some(o) => {
                        tr.push(t, o.position())?;
                        log.obstacle_trace.push(ObstacleSample {
                            t,
                            id: tr.id.clone(),
                            position: o.position().into(),
                        });
                    }
                    None => tr.clear(),
                }
            }
            open_predictions.retain(|(id, at, p)| {
                if *at > t + 1e-12 {
                    return true;
                }
                if let Some(o) = truth.obstacles.iter().find(|o| &o.id == id) {
                    log.max_prediction_error =
                        log.max_prediction_error.max((o.position() - p).norm());
                }
                false
            });
            let predictions: Vec<Prediction> = dyn_o
                .iter()
                .map(|o| {
                    let tr = tracks
                        .iter()
                        .find(|tr| tr.id == o.id)
                        .expect("one track per script");
                    Prediction {
                        obstacle: o.clone(),
                        t0: t,
                        velocity: obs_estim(tr, &c).velocity,
                    }
                })
                .collect();
            let control = tick.is_multiple_of(ratio);
            if control {
                for o in &dyn_o {
                    let track = tracks
                        .iter()
                        .find(|x| x.id == o.id)
                        .expect("one track per script");
                    let est = obs_estim(track, &c);
                    if est.sufficient {
                        let p = predict_position(track, &est.velocity, c.dt_c, &c)?;
                        open_predictions.push((o.id.clone(), t + c.dt_c, p));
                    }
                }
            }
            let window_end = if control {
                t + c.dt_c + c.dt_col
            } else {
                t + c.dt_s
            };
            let hit = collision_check(
                |s| sched.state_at(s),
                &stat,
                &predictions,
                h,
                t,
                window_end,
                cfg.check_step,
            );
            if let Some(hit) = hit {
                let next_edge = t + c.dt_c;
                if control && hit >= next_edge {
                    let from = sched.state_at(next_edge);
                    let (m, path) = planner
                        .replan(from, next_edge, &stat, &predictions, t)
                        .map_err(|e| fail(t, e))?;
                    log.replans.push(ReplanEvent {
                        t,
                        switch_at: next_edge,
                        reason: ReplanReason::Predicted,
                        predicted_hit: Some(hit),
                        from,
                        waypoints: path.waypoints,
                    });
                    sched.pending = Some((next_edge, m));
                } else if !control || hit < next_edge {
                    let (m, path) = planner
                        .replan(robot, t, &stat, &predictions, t)
                        .map_err(|e| fail(t, e))?;
                    log.replans.push(ReplanEvent {
                        t,
                        switch_at: t,
                        reason: ReplanReason::Sudden,
                        predicted_hit: Some(hit),
                        from: robot,
                        waypoints: path.waypoints,
                    });
                    sched = Schedule {
                        motion: m,
                        pending: None,
                    };
                    robot = sched.state_at(t);
                }
            } else if control && sched.pending.is_none() && sched.is_holding(scenario.goal) {
                let (m, path) = planner
                    .replan(robot, t, &stat, &predictions, t)
                    .map_err(|e| fail(t, e))?;
                if !m.is_hold() {
                    log.replans.push(ReplanEvent {
                        t,
                        switch_at: t,
                        reason: ReplanReason::Resume,
                        predicted_hit: None,
                        from: robot,
                        waypoints: path.waypoints,
                    });
                    sched.motion = m;
                    robot = sched.state_at(t);
                }
            }
        }

        log.executed.samples.push(TrajSample {
            t,
            q: robot.to_vec(),
        });
        let contact = truth_hull
            .with_obstacles(truth.obstacles.clone())
            .point_collides(&Vector3::new(robot[0], robot[1], h));
        if contact && !in_contact {
            log.collisions += 1;
        }
        in_contact = contact;

        let at_goal = (robot[0] - scenario.goal[0]).hypot(robot[1] - scenario.goal[1]) < 1e-9;
        if sched.pending.is_none() && t >= sched.motion.t_end && at_goal {
            log.goal_reached = true;
            log.finish_time = t;
            log.executed.t_end = t;
            return Ok(log);
        }
        i += 1;
    }
}
