//! Seeded execution of a scenario in one mode, with its result files and a
//! metric report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{History, Variant};
use crate::export::{write_json, write_rows, write_trajectory, write_waypoints, TopView};
use crate::kinematics::{forward_kinematics, wrap_angle, GeneralizedPose, DOF};
use crate::online::{run_online_local, ReplanReason};
use crate::planner::{node_adjustment, node_rejection, plan, BaseSpace, Path as PlanPath};
use crate::posedesign::design_pose;
use crate::scenario::{Mode, Scenario};
use crate::trajectory::base_motion_plan;
use crate::viapose::{design_via_points, optimize_via_poses, via_path_is_free};

/// Sampling rate used when neither the caller nor the scenario sets one.
pub const DEFAULT_SAMPLES_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The run finished but its result misses a feasibility requirement.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
    /// File names written to the output directory.
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Result<f64> {
        self.metrics
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("report has no metric {name}")))
    }

    /// Bitwise equality of the metrics, ignoring timing.
    pub fn same_metrics(&self, other: &RunReport) -> bool {
        self.metrics.len() == other.metrics.len()
            && self
                .metrics
                .iter()
                .zip(&other.metrics)
                .all(|((ka, va), (kb, vb))| ka == kb && va.to_bits() == vb.to_bits())
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
    metrics: BTreeMap<String, f64>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir,
            files: Vec::new(),
            metrics: BTreeMap::new(),
        })
    }

    fn file(&mut self, name: &str) -> std::path::PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn put(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }

    fn flag(&mut self, name: &str, v: bool) {
        self.put(name, if v { 1.0 } else { 0.0 });
    }
}

/// Runs `mode` of `scenario` for `seed`, writing files and `report.json`
/// into `out`. Failures of the underlying algorithms are returned as errors.
pub fn run(
    scenario: &Scenario,
    mode: Mode,
    seed: u64,
    out: &Path,
    samples_hz: Option<f64>,
) -> Result<RunReport> {
    scenario.require(mode)?;
    if let Some(hz) = samples_hz {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(Error::invalid(format!(
                "samples_hz must be positive, got {hz}"
            )));
        }
    }
    let clock = Instant::now();
    let mut o = Outputs::new(out)?;
    let status = match mode {
        Mode::PoseOpt => pose_opt(scenario, seed, &mut o)?,
        Mode::Plan => plan_base(scenario, seed, samples_hz, &mut o)?,
        Mode::SimulateOnline => simulate_online(scenario, seed, samples_hz, &mut o)?,
        Mode::ViaPose => via_pose(scenario, seed, &mut o)?,
        Mode::CompareEvolvers => {
            let c = compare_evolvers(
                scenario,
                &[seed],
                out,
                (Variant::Baseline, Variant::Improved),
            )?;
            o.files.extend(c.artifacts.clone());
            o.metrics.extend(c.summary.clone());
            Status::Ok
        }
    };
    let report = RunReport {
        scenario: scenario.name.clone(),
        mode,
        seed,
        status,
        metrics: o.metrics,
        artifacts: o.files,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct PoseExport<'a> {
    pose: Vec<f64>,
    x_right: [f64; 3],
    x_left: [f64; 3],
    objectives: &'a [f64],
    fitness: f64,
}

fn pose_export<'a>(
    scenario: &Scenario,
    pose: &GeneralizedPose,
    objectives: &'a [f64],
    fitness: f64,
) -> PoseExport<'a> {
    let fk = forward_kinematics(&scenario.model, pose);
    PoseExport {
        pose: pose.to_array().to_vec(),
        x_right: fk.x_right().into(),
        x_left: fk.x_left().into(),
        objectives,
        fitness,
    }
}

fn write_history(path: &Path, h: &History) -> Result<()> {
    fs::write(path, h.to_csv())?;
    Ok(())
}

fn pose_opt(sc: &Scenario, seed: u64, o: &mut Outputs) -> Result<Status> {
    let spec = sc.pose.as_ref().expect("checked by require");
    let ga = sc.ga.as_ref().expect("checked by require").config(seed)?;
    let task = spec.task(&sc.model)?;
    let d = design_pose(&sc.model, &task, Some(&sc.world), spec.base_bounds(), &ga)?;
    for (k, v) in d.objectives.iter().enumerate() {
        o.put(&format!("f{}", k + 1), *v);
    }
    let b = d.pose.base;
    o.put("base_x", b.x);
    o.put("base_y", b.y);
    o.put("base_phi", b.phi);
    o.put("fitness", d.run.best.fitness);
    o.put("final_best_so_far", d.run.history.final_best());
    o.put("pareto_size", d.run.pareto_set.len() as f64);
    o.flag("elitism_holds", d.run.history.elitism_holds());
    if let Some(e) = spec.expected_base {
        o.put("base_position_error", (b.x - e[0]).hypot(b.y - e[1]));
        o.put("heading_error", wrap_angle(b.phi - e[2]).abs());
    }

    let export = pose_export(sc, &d.pose, &d.run.best.objectives, d.run.best.fitness);
    write_json(&o.file("pose.json"), &export)?;
    write_history(&o.file("history.csv"), &d.run.history)?;
    let rows: Vec<Vec<f64>> = d
        .run
        .pareto_set
        .iter()
        .map(|i| {
            let mut r = i.objectives.clone();
            r.push(i.fitness);
            r.extend(&i.chromosome);
            r
        })
        .collect();
    let mut header: Vec<String> = (1..=5).map(|k| format!("f{k}")).collect();
    header.push("fitness".into());
    header.extend((0..DOF).map(|k| format!("q{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&o.file("pareto.csv"), &header, &rows)?;

    let init = spec.initial_pose()?;
    let mut view = TopView::new(&sc.world.bounds, 600.0)
        .world(&sc.world)
        .robot([init.base.x, init.base.y, init.base.phi], 0.25, "#888")
        .robot([b.x, b.y, b.phi], 0.25, "#1f77b4")
        .marker([spec.x_rd[0], spec.x_rd[1]], "#d62728", "R target")
        .marker([spec.x_ld[0], spec.x_ld[1]], "#2ca02c", "L target")
        .marker([export.x_right[0], export.x_right[1]], "#ff9896", "R")
        .marker([export.x_left[0], export.x_left[1]], "#98df8a", "L");
    if let Some(e) = spec.expected_base {
        view = view.marker([e[0], e[1]], "#000", "expected");
    }
    view.save(&o.file("pose.svg"))?;
    Ok(Status::Ok)
}

fn points(p: &PlanPath) -> Vec<[f64; 2]> {
    p.waypoints.iter().map(|w| [w[0], w[1]]).collect()
}

fn plan_base(sc: &Scenario, seed: u64, samples_hz: Option<f64>, o: &mut Outputs) -> Result<Status> {
    let spec = sc.plan.as_ref().expect("checked by require");
    let cfg = sc.planner.clone().with_seed(seed);
    let height = spec.height.unwrap_or(sc.model.skeleton.base_com_height);
    let space = BaseSpace::from_world(&sc.world, height);
    let result = plan(&spec.start, &spec.goal, &space, &cfg)?;
    let raw = result.path;
    let pre = node_rejection(&raw, &space, &cfg);
    let opt = node_adjustment(&pre, &space, &cfg);
    let motion = base_motion_plan(
        &opt.waypoints,
        spec.phi_start,
        spec.phi_goal,
        spec.t_start,
        spec.t_end,
        &spec.motion(),
    )?;
    let hz = samples_hz.unwrap_or(DEFAULT_SAMPLES_HZ);
    let traj = motion.sample(1.0 / hz)?;

    let step = cfg.edge_check_step;
    o.put("raw_length", raw.total_length);
    o.put("pre_optimal_length", pre.total_length);
    o.put("optimal_length", opt.total_length);
    o.put("raw_waypoints", raw.len() as f64);
    o.put("pre_optimal_waypoints", pre.len() as f64);
    o.put("optimal_waypoints", opt.len() as f64);
    o.put("iterations", result.stats.iterations as f64);
    o.put("birrt_calls", result.stats.birrt_calls as f64);
    o.put("grad_calls", result.stats.grad_calls as f64);
    o.put("duration", motion.duration());
    o.put("trajectory_samples", traj.samples.len() as f64);
    o.flag(
        "collision_free",
        raw.is_free(&space, step) && pre.is_free(&space, step) && opt.is_free(&space, step),
    );

    write_waypoints(&o.file("raw_path.csv"), &["x", "y"], &raw.waypoints)?;
    write_waypoints(&o.file("pre_optimal_path.csv"), &["x", "y"], &pre.waypoints)?;
    write_waypoints(&o.file("optimal_path.csv"), &["x", "y"], &opt.waypoints)?;
    write_trajectory(&o.file("trajectory.csv"), &["x", "y", "phi"], &traj)?;
    write_json(&o.file("motion.json"), &motion.primitives)?;
    TopView::new(&sc.world.bounds, 600.0)
        .world(&sc.world)
        .polyline(&points(&raw), "#1f77b4", true)
        .polyline(&points(&pre), "#d62728", true)
        .polyline(&points(&opt), "#2ca02c", false)
        .marker(spec.start, "#000", "start")
        .marker(spec.goal, "#000", "goal")
        .save(&o.file("plan.svg"))?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct OnlineEvents<'a> {
    goal_reached: bool,
    finish_time: f64,
    collisions: usize,
    max_prediction_error: f64,
    initial_path: &'a [Vec<f64>],
    replans: &'a [crate::online::ReplanEvent],
    obstacle_trace: &'a [crate::online::ObstacleSample],
}

fn simulate_online(
    sc: &Scenario,
    seed: u64,
    samples_hz: Option<f64>,
    o: &mut Outputs,
) -> Result<Status> {
    let nav = sc.navigation.as_ref().expect("checked by require");
    let cfg = sc.online_config(seed, samples_hz);
    let scenario = sc.online_scenario(seed)?;
    let range = nav.sensing_range.unwrap_or(f64::INFINITY);
    let log = run_online_local(&scenario, &cfg, range)?;
    let count = |reason| log.replans.iter().filter(|r| r.reason == reason).count() as f64;
    o.flag("goal_reached", log.goal_reached);
    o.put("collisions", log.collisions as f64);
    o.put("replans", log.replans.len() as f64);
    o.put("predicted_replans", count(ReplanReason::Predicted));
    o.put("sudden_replans", count(ReplanReason::Sudden));
    o.put("resume_replans", count(ReplanReason::Resume));
    o.put("finish_time", log.finish_time);
    o.put("max_prediction_error", log.max_prediction_error);
    o.put("initial_path_waypoints", log.initial_path.len() as f64);
    o.put("executed_samples", log.executed.samples.len() as f64);

    write_json(
        &o.file("online_log.json"),
        &OnlineEvents {
            goal_reached: log.goal_reached,
            finish_time: log.finish_time,
            collisions: log.collisions,
            max_prediction_error: log.max_prediction_error,
            initial_path: &log.initial_path,
            replans: &log.replans,
            obstacle_trace: &log.obstacle_trace,
        },
    )?;
    write_trajectory(&o.file("trajectory.csv"), &["x", "y", "phi"], &log.executed)?;
    let executed: Vec<[f64; 2]> = log
        .executed
        .samples
        .iter()
        .map(|s| [s.q[0], s.q[1]])
        .collect();
    let initial: Vec<[f64; 2]> = log.initial_path.iter().map(|w| [w[0], w[1]]).collect();
    let mut view = TopView::new(&sc.world.bounds, 600.0)
        .world(&sc.world)
        .polyline(&initial, "#2ca02c", true)
        .polyline(&executed, "#000", false);
    let mut ids: Vec<&str> = log.obstacle_trace.iter().map(|s| s.id.as_str()).collect();
    ids.dedup();
    ids.sort_unstable();
    ids.dedup();
    for id in ids {
        let trace: Vec<[f64; 2]> = log
            .obstacle_trace
            .iter()
            .filter(|s| s.id == id)
            .map(|s| [s.position[0], s.position[1]])
            .collect();
        view = view.polyline(&trace, "#4cc3d9", true);
    }
    for r in &log.replans {
        view = view.marker([r.from[0], r.from[1]], "#1f77b4", &format!("{:.1}s", r.t));
    }
    view.marker([nav.start[0], nav.start[1]], "#000", "start")
        .marker(nav.goal, "#000", "goal")
        .save(&o.file("online.svg"))?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ViaPoseExport {
    pose: Vec<f64>,
    target_right: [f64; 3],
    target_left: [f64; 3],
    x_right: [f64; 3],
    x_left: [f64; 3],
}

fn via_pose(sc: &Scenario, seed: u64, o: &mut Outputs) -> Result<Status> {
    let spec = sc.via.as_ref().expect("checked by require");
    let ga = sc.ga.as_ref().expect("checked by require").config(seed)?;
    let cfg = sc.planner.clone().with_seed(seed);
    let via = design_via_points(&spec.start(), &spec.goal(), &sc.world, &cfg)?;
    let initial = spec.initial_pose()?;
    let d = optimize_via_poses(&sc.model, &sc.world, &via, &initial, &ga)?;
    let n_p = via.len() as f64;
    let [fa, fb, fc, fd] = d.objectives;
    o.put("n_p", n_p);
    o.put("fa", fa);
    o.put("fb", fb);
    o.put("fc", fc);
    o.put("fd", fd);
    o.put("fa_per_via", fa / n_p);
    o.flag("feasible", d.feasible);
    o.flag(
        "via_path_free",
        via_path_is_free(&via, &sc.world, cfg.edge_check_step),
    );
    o.flag("elitism_holds", d.run.history.elitism_holds());

    let stacked: Vec<Vec<f64>> = via.iter().map(|v| v.stacked().to_vec()).collect();
    write_waypoints(
        &o.file("via_points.csv"),
        &["xr", "yr", "zr", "xl", "yl", "zl"],
        &stacked,
    )?;
    let reached = d.reached(&sc.model);
    let export: Vec<ViaPoseExport> = d
        .poses
        .iter()
        .zip(&via)
        .zip(&reached)
        .map(|((p, v), (r, l))| ViaPoseExport {
            pose: p.to_array().to_vec(),
            target_right: v.right.into(),
            target_left: v.left.into(),
            x_right: (*r).into(),
            x_left: (*l).into(),
        })
        .collect();
    write_json(&o.file("via_poses.json"), &export)?;
    write_history(&o.file("history.csv"), &d.run.history)?;
    let right: Vec<[f64; 2]> = via.iter().map(|v| [v.right.x, v.right.y]).collect();
    let left: Vec<[f64; 2]> = via.iter().map(|v| [v.left.x, v.left.y]).collect();
    let mut view = TopView::new(&sc.world.bounds, 600.0)
        .world(&sc.world)
        .polyline(&right, "#d62728", false)
        .polyline(&left, "#2ca02c", false);
    for (k, p) in d.poses.iter().enumerate() {
        view = view
            .robot([p.base.x, p.base.y, p.base.phi], 0.25, "#1f77b4")
            .marker([p.base.x, p.base.y], "#1f77b4", &format!("{}", k + 1));
    }
    view.save(&o.file("via.svg"))?;
    Ok(if d.feasible {
        Status::Ok
    } else {
        Status::Infeasible
    })
}

/// Paired runs of two evolver variants on the pose-design task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub summary: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub seed: u64,
    /// Final best-so-far fitness of the first (reference) variant.
    pub reference_final: f64,
    pub candidate_final: f64,
    /// First generation at which the candidate reached the reference's
    /// final fitness, or `n_gen + 1` if it never did.
    pub candidate_generations_to_threshold: usize,
    pub reference_generations_to_threshold: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Improved => "improved",
        Variant::Baseline => "baseline",
    }
}

/// Runs `variants.0` (reference) and `variants.1` (candidate) on the same
/// seeds. The threshold of each seed is the reference's final fitness.
pub fn compare_evolvers(
    sc: &Scenario,
    seeds: &[u64],
    out: &Path,
    variants: (Variant, Variant),
) -> Result<Comparison> {
    sc.require(Mode::CompareEvolvers)?;
    if seeds.is_empty() {
        return Err(Error::invalid("comparison needs at least one seed"));
    }
    fs::create_dir_all(out)?;
    let spec = sc.pose.as_ref().expect("checked by require");
    let ga = sc.ga.as_ref().expect("checked by require");
    let task = spec.task(&sc.model)?;
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    let names = if variants.0 == variants.1 {
        ("reference", "candidate")
    } else {
        (variant_name(variants.0), variant_name(variants.1))
    };
    for &seed in seeds {
        let mut histories = Vec::new();
        for (v, name) in [(variants.0, names.0), (variants.1, names.1)] {
            let cfg = ga.config(seed)?.with_variant(v);
            let d = design_pose(&sc.model, &task, Some(&sc.world), spec.base_bounds(), &cfg)?;
            let file = format!("history_{name}_seed{seed}.csv");
            write_history(&out.join(&file), &d.run.history)?;
            artifacts.push(file);
            histories.push(d.run.history);
        }
        let n_gen = ga.n_gen;
        let threshold = histories[0].final_best();
        let reach = |h: &History| h.generation_reaching(threshold).unwrap_or(n_gen + 1);
        rows.push(ComparisonRow {
            seed,
            reference_final: threshold,
            candidate_final: histories[1].final_best(),
            candidate_generations_to_threshold: reach(&histories[1]),
            reference_generations_to_threshold: reach(&histories[0]),
        });
    }
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.seed as f64,
                r.reference_final,
                r.candidate_final,
                r.reference_generations_to_threshold as f64,
                r.candidate_generations_to_threshold as f64,
            ]
        })
        .collect();
    write_rows(
        &out.join("comparison.csv"),
        &[
            "seed",
            "reference_final",
            "candidate_final",
            "reference_generations_to_threshold",
            "candidate_generations_to_threshold",
        ],
        &table,
    )?;
    artifacts.push("comparison.csv".into());
    let mut summary = BTreeMap::new();
    summary.insert("seeds".into(), seeds.len() as f64);
    summary.insert("reference_generations".into(), ga.n_gen as f64);
    summary.insert(
        "median_candidate_generations_to_threshold".into(),
        median(
            rows.iter()
                .map(|r| r.candidate_generations_to_threshold as f64)
                .collect(),
        ),
    );
    summary.insert(
        "median_reference_final".into(),
        median(rows.iter().map(|r| r.reference_final).collect()),
    );
    summary.insert(
        "median_candidate_final".into(),
        median(rows.iter().map(|r| r.candidate_final).collect()),
    );
    let c = Comparison {
        rows,
        summary,
        artifacts,
    };
    write_json(&out.join("comparison.json"), &c)?;
    Ok(c)
}

/// Exit status the command-line tool reports for a result.
pub fn exit_code(result: &Result<RunReport>) -> i32 {
    match result {
        Ok(r) if r.status == Status::Ok => 0,
        Ok(_) => 2,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::NoPath { .. } | Error::InCollision(_) | Error::OnlineAbort { .. } => 2,
        Error::Scenario { .. }
        | Error::InvalidArgument(_)
        | Error::Model(_)
        | Error::Dimension { .. } => 3,
        _ => 1,
    }
}
