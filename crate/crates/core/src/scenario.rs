//! Experiment descriptions: strict TOML documents naming the world, the task
//! for each mode, the algorithm settings and the seeds.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{GaConfig, Variant};
use crate::geometry::{Aabb, Obstacle, Shape, WorldState};
use crate::kinematics::{GeneralizedPose, RobotModel, DOF};
use crate::objectives::{unit_quaternion, ViaPoint, WeightVector};
use crate::online::{CycleConfig, ObstacleScript, OnlineConfig, Teleport};
use crate::planner::PlannerConfig;
use crate::posedesign::BaseBounds;
use crate::trajectory::BaseMotionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    PoseOpt,
    Plan,
    SimulateOnline,
    ViaPose,
    CompareEvolvers,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::PoseOpt => "pose-opt",
            Mode::Plan => "plan",
            Mode::SimulateOnline => "simulate-online",
            Mode::ViaPose => "via-pose",
            Mode::CompareEvolvers => "compare-evolvers",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Box,
    Cylinder,
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    pub mean_velocity: [f64; 3],
    #[serde(default)]
    pub jitter: f64,
    pub v_max: f64,
    #[serde(default)]
    pub teleports: Vec<Teleport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub id: String,
    pub shape: ShapeKind,
    pub center: [f64; 3],
    pub half_extents: Option<[f64; 3]>,
    pub radius: Option<f64>,
    pub half_height: Option<f64>,
    /// Scripted ground-truth motion; the obstacle is static without it.
    pub motion: Option<MotionSpec>,
}

impl ObstacleSpec {
    pub fn to_obstacle(&self) -> Result<Obstacle> {
        let center = Vector3::from(self.center);
        let missing = |field: &str| {
            Error::invalid(format!(
                "obstacle {}: {:?} needs `{field}`",
                self.id, self.shape
            ))
        };
        let unused = |field: &str, present: bool| {
            if present {
                Err(Error::invalid(format!(
                    "obstacle {}: `{field}` does not apply to {:?}",
                    self.id, self.shape
                )))
            } else {
                Ok(())
            }
        };
        let shape = match self.shape {
            ShapeKind::Box => {
                unused("radius", self.radius.is_some())?;
                unused("half_height", self.half_height.is_some())?;
                Shape::Box {
                    center,
                    half_extents: Vector3::from(
                        self.half_extents.ok_or_else(|| missing("half_extents"))?,
                    ),
                }
            }
            ShapeKind::Cylinder => {
                unused("half_extents", self.half_extents.is_some())?;
                Shape::Cylinder {
                    center,
                    radius: self.radius.ok_or_else(|| missing("radius"))?,
                    half_height: self.half_height.ok_or_else(|| missing("half_height"))?,
                }
            }
            ShapeKind::Sphere => {
                unused("half_extents", self.half_extents.is_some())?;
                unused("half_height", self.half_height.is_some())?;
                Shape::Sphere {
                    center,
                    radius: self.radius.ok_or_else(|| missing("radius"))?,
                }
            }
        };
        match &self.motion {
            Some(m) => Obstacle::moving(&self.id, shape, Vector3::from(m.mean_velocity)),
            None => Obstacle::fixed(&self.id, shape),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub security_hull: f64,
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

impl WorldSpec {
    pub fn to_world(&self) -> Result<WorldState> {
        let obstacles = self
            .obstacles
            .iter()
            .map(ObstacleSpec::to_obstacle)
            .collect::<Result<Vec<_>>>()?;
        for (k, o) in self.obstacles.iter().enumerate() {
            if self.obstacles[..k].iter().any(|p| p.id == o.id) {
                return Err(Error::invalid(format!("duplicate obstacle id {}", o.id)));
            }
        }
        let bounds = Aabb {
            min: Vector3::from(self.bounds.min),
            max: Vector3::from(self.bounds.max),
        };
        if (0..3).any(|k| !(bounds.max[k] > bounds.min[k])) {
            return Err(Error::invalid(
                "world bounds must have max > min on every axis",
            ));
        }
        WorldState::new(obstacles, bounds, self.security_hull)
    }

    pub fn scripts(&self) -> Vec<ObstacleScript> {
        self.obstacles
            .iter()
            .filter_map(|o| {
                o.motion.as_ref().map(|m| ObstacleScript {
                    id: o.id.clone(),
                    mean_velocity: m.mean_velocity,
                    jitter: m.jitter,
                    v_max: m.v_max,
                    teleports: m.teleports.clone(),
                })
            })
            .collect()
    }
}

/// A base `(x, y, phi)` with the arms at zero, or a full 19-vector.
fn pose_from(values: &[f64], what: &str) -> Result<GeneralizedPose> {
    match values.len() {
        3 => Ok(GeneralizedPose::from_base(values[0], values[1], values[2])),
        DOF => GeneralizedPose::from_slice(values),
        n => Err(Error::invalid(format!(
            "{what} needs 3 (base) or {DOF} values, got {n}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub initial: Vec<f64>,
    pub x_rd: [f64; 3],
    pub x_ld: [f64; 3],
    /// `(w, x, y, z)`; orientation is free when absent.
    pub q_rd: Option<[f64; 4]>,
    pub q_ld: Option<[f64; 4]>,
    pub base_x: [f64; 2],
    pub base_y: [f64; 2],
    pub base_phi: Option<[f64; 2]>,
    /// Reference base position and heading the result is measured against.
    pub expected_base: Option<[f64; 3]>,
}

impl PoseSpec {
    pub fn initial_pose(&self) -> Result<GeneralizedPose> {
        pose_from(&self.initial, "pose.initial")
    }

    pub fn task(&self, model: &RobotModel) -> Result<crate::objectives::PoseTask> {
        let mut task = crate::objectives::PoseTask::from_initial_pose(
            model,
            &self.initial_pose()?,
            Vector3::from(self.x_rd),
            Vector3::from(self.x_ld),
        );
        let quat = |q: [f64; 4]| unit_quaternion(q[0], q[1], q[2], q[3]);
        task.q_rd = self.q_rd.map(quat).transpose()?;
        task.q_ld = self.q_ld.map(quat).transpose()?;
        Ok(task)
    }

    pub fn base_bounds(&self) -> BaseBounds {
        BaseBounds {
            x: (self.base_x[0], self.base_x[1]),
            y: (self.base_y[0], self.base_y[1]),
            phi: self.base_phi.map(|p| (p[0], p[1])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VariantSpec {
    #[default]
    Improved,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSpec {
    pub n_pop: usize,
    pub n_gen: usize,
    pub p_c: f64,
    pub p_m: f64,
    pub weights: Vec<f64>,
    #[serde(default = "default_eta_c")]
    pub eta_c: f64,
    #[serde(default = "default_eta_m")]
    pub eta_m: f64,
    #[serde(default)]
    pub variant: VariantSpec,
}

fn default_eta_c() -> f64 {
    15.0
}

fn default_eta_m() -> f64 {
    20.0
}

impl GaSpec {
    pub fn config(&self, seed: u64) -> Result<GaConfig> {
        let mut cfg = GaConfig::new(
            self.n_pop,
            self.n_gen,
            self.p_c,
            self.p_m,
            WeightVector::new(self.weights.clone())?,
            seed,
        )?;
        cfg.eta_c = self.eta_c;
        cfg.eta_m = self.eta_m;
        cfg.variant = match self.variant {
            VariantSpec::Improved => Variant::Improved,
            VariantSpec::Baseline => Variant::Baseline,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// Height of the base point checked against obstacles; the model's base
    /// centre-of-mass height when absent.
    pub height: Option<f64>,
    #[serde(default)]
    pub phi_start: f64,
    pub phi_goal: f64,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default = "default_yaw_rate")]
    pub max_yaw_rate: f64,
    #[serde(default = "default_blend")]
    pub blend_fraction: f64,
}

fn default_yaw_rate() -> f64 {
    BaseMotionConfig::default().max_yaw_rate
}

fn default_blend() -> f64 {
    BaseMotionConfig::default().blend_fraction
}

impl PlanSpec {
    pub fn motion(&self) -> BaseMotionConfig {
        BaseMotionConfig {
            max_yaw_rate: self.max_yaw_rate,
            blend_fraction: self.blend_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationSpec {
    /// `(x, y, phi)`.
    pub start: [f64; 3],
    pub goal: [f64; 2],
    pub goal_heading: Option<f64>,
    pub base_height: Option<f64>,
    /// Obstacles beyond this distance are unknown; everything is known when
    /// absent.
    pub sensing_range: Option<f64>,
}

/// Online-loop tuning other than the cycles and the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineSpec {
    pub max_yaw_rate: f64,
    pub blend_fraction: f64,
    pub nominal_speed: f64,
    pub base_radius: f64,
    pub samples_hz: f64,
    pub check_step: f64,
    pub max_time: f64,
}

impl Default for OnlineSpec {
    fn default() -> Self {
        let c = OnlineConfig::default();
        Self {
            max_yaw_rate: c.max_yaw_rate,
            blend_fraction: c.blend_fraction,
            nominal_speed: c.nominal_speed,
            base_radius: c.base_radius,
            samples_hz: c.samples_hz,
            check_step: c.check_step,
            max_time: c.max_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViaSpec {
    pub initial: Vec<f64>,
    pub start_right: [f64; 3],
    pub start_left: [f64; 3],
    pub goal_right: [f64; 3],
    pub goal_left: [f64; 3],
}

impl ViaSpec {
    pub fn initial_pose(&self) -> Result<GeneralizedPose> {
        pose_from(&self.initial, "via.initial")
    }

    pub fn start(&self) -> ViaPoint {
        ViaPoint {
            right: Vector3::from(self.start_right),
            left: Vector3::from(self.start_left),
        }
    }

    pub fn goal(&self) -> ViaPoint {
        ViaPoint {
            right: Vector3::from(self.goal_right),
            left: Vector3::from(self.goal_left),
        }
    }
}

/// The document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    mode: Mode,
    seeds: Vec<u64>,
    /// `"default"` or a profile path relative to the scenario file.
    #[serde(default = "default_model")]
    model: String,
    world: WorldSpec,
    pose: Option<PoseSpec>,
    ga: Option<GaSpec>,
    plan: Option<PlanSpec>,
    #[serde(default)]
    planner: PlannerConfig,
    navigation: Option<NavigationSpec>,
    #[serde(default)]
    cycles: CycleConfig,
    #[serde(default)]
    online: OnlineSpec,
    via: Option<ViaSpec>,
}

fn default_model() -> String {
    "default".into()
}

/// A loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub path: PathBuf,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub model: RobotModel,
    pub world_spec: WorldSpec,
    pub world: WorldState,
    pub pose: Option<PoseSpec>,
    pub ga: Option<GaSpec>,
    pub plan: Option<PlanSpec>,
    pub planner: PlannerConfig,
    pub navigation: Option<NavigationSpec>,
    pub cycles: CycleConfig,
    pub online: OnlineSpec,
    pub via: Option<ViaSpec>,
    /// `section.key = value` for every setting filled from a default.
    pub defaults: Vec<String>,
}

fn schema_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Scenario {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Keys of `resolved` absent from the raw `section` table.
fn record_defaults<T: Serialize>(
    raw: &toml::Table,
    section: &str,
    resolved: &T,
    out: &mut Vec<String>,
) {
    let Ok(toml::Value::Table(full)) = toml::Value::try_from(resolved) else {
        return;
    };
    let given = raw.get(section).and_then(|v| v.as_table());
    for (k, v) in full {
        if given.is_none_or(|t| !t.contains_key(&k)) {
            out.push(format!("{section}.{k} = {v}"));
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| schema_error(path, format!("cannot read: {e}")))?;
    parse_scenario(&text, path)
}

/// Parses scenario text; `path` locates relative model profiles and labels
/// diagnostics.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| schema_error(path, e.to_string()))?;
    let table: toml::Table = toml::from_str(text).map_err(|e| schema_error(path, e.to_string()))?;
    let invalid = |e: Error| schema_error(path, e.to_string());

    if raw.seeds.is_empty() {
        return Err(schema_error(path, "`seeds` must list at least one seed"));
    }
    let model = if raw.model == "default" {
        RobotModel::default_profile()
    } else {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        RobotModel::from_file(base.join(&raw.model)).map_err(invalid)?
    };
    let world = raw.world.to_world().map_err(invalid)?;
    raw.planner.validate().map_err(invalid)?;
    raw.cycles.validate().map_err(invalid)?;
    if let Some(ga) = &raw.ga {
        ga.config(0).map_err(invalid)?;
    }
    if let Some(p) = &raw.pose {
        p.task(&model).map_err(invalid)?;
    }
    if let Some(v) = &raw.via {
        v.initial_pose().map_err(invalid)?;
    }

    let mut defaults = Vec::new();
    if !table.contains_key("model") {
        defaults.push("model = \"default\"".into());
    }
    record_defaults(&table, "planner", &raw.planner, &mut defaults);
    if table.contains_key("navigation") || raw.mode == Mode::SimulateOnline {
        record_defaults(&table, "cycles", &raw.cycles, &mut defaults);
        record_defaults(&table, "online", &raw.online, &mut defaults);
    }
    if let Some(ga) = &raw.ga {
        record_defaults(&table, "ga", ga, &mut defaults);
    }
    if let Some(p) = &raw.plan {
        record_defaults(&table, "plan", p, &mut defaults);
    }

    let scenario = Scenario {
        name: raw.name,
        path: path.to_path_buf(),
        mode: raw.mode,
        seeds: raw.seeds,
        model,
        world_spec: raw.world,
        world,
        pose: raw.pose,
        ga: raw.ga,
        plan: raw.plan,
        planner: raw.planner,
        navigation: raw.navigation,
        cycles: raw.cycles,
        online: raw.online,
        via: raw.via,
        defaults,
    };
    scenario.require(scenario.mode).map_err(|e| match e {
        Error::Scenario { .. } => e,
        other => schema_error(path, other.to_string()),
    })?;
    Ok(scenario)
}

impl Scenario {
    /// Checks that the sections `mode` needs are present.
    pub fn require(&self, mode: Mode) -> Result<()> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(schema_error(
                    &self.path,
                    format!("mode {mode} needs a [{section}] section"),
                ))
            }
        };
        match mode {
            Mode::PoseOpt | Mode::CompareEvolvers => {
                need(self.pose.is_some(), "pose")?;
                need(self.ga.is_some(), "ga")?;
                if self.ga.as_ref().is_some_and(|g| g.weights.len() != 5) {
                    return Err(schema_error(&self.path, "pose design needs 5 weights"));
                }
                Ok(())
            }
            Mode::Plan => need(self.plan.is_some(), "plan"),
            Mode::SimulateOnline => need(self.navigation.is_some(), "navigation"),
            Mode::ViaPose => {
                need(self.via.is_some(), "via")?;
                need(self.ga.is_some(), "ga")?;
                if self.ga.as_ref().is_some_and(|g| g.weights.len() != 4) {
                    return Err(schema_error(&self.path, "via-pose design needs 4 weights"));
                }
                Ok(())
            }
        }
    }

    pub fn online_config(&self, seed: u64, samples_hz: Option<f64>) -> OnlineConfig {
        let o = &self.online;
        OnlineConfig {
            cycles: self.cycles,
            planner: self.planner.clone().with_seed(seed),
            max_yaw_rate: o.max_yaw_rate,
            blend_fraction: o.blend_fraction,
            nominal_speed: o.nominal_speed,
            base_radius: o.base_radius,
            samples_hz: samples_hz.unwrap_or(o.samples_hz),
            check_step: o.check_step,
            max_time: o.max_time,
        }
    }

    pub fn online_scenario(&self, seed: u64) -> Result<crate::online::OnlineScenario> {
        let nav = self
            .navigation
            .as_ref()
            .ok_or_else(|| schema_error(&self.path, "missing [navigation]"))?;
        Ok(crate::online::OnlineScenario {
            world: self.world.clone(),
            scripts: self.world_spec.scripts(),
            start: nav.start,
            goal: nav.goal,
            goal_heading: nav.goal_heading,
            base_height: nav
                .base_height
                .unwrap_or(self.model.skeleton.base_com_height),
            seed,
        })
    }
}

/// Bundled scenarios shipped with the crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn bundled(name: &str) -> Result<Scenario> {
    load_scenario(bundled_dir().join(format!("{name}.toml")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
mode = "plan"
seeds = [1]

[world]
security_hull = 0.2
bounds = { min = [0.0, 0.0, 0.0], max = [4.0, 4.0, 2.0] }

[[world.obstacles]]
id = "b"
shape = "box"
center = [2.0, 2.0, 0.5]
half_extents = [0.3, 0.3, 0.5]

[plan]
start = [0.5, 0.5]
goal = [3.5, 3.5]
phi_goal = 0.0
t_end = 10.0
"#;

    fn parse(text: &str) -> Result<Scenario> {
        parse_scenario(text, Path::new("inline.toml"))
    }

    #[test]
    fn minimal_plan_scenario_records_defaults() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.mode, Mode::Plan);
        assert_eq!(s.world.obstacles.len(), 1);
        assert!(s
            .defaults
            .iter()
            .any(|d| d.starts_with("planner.dis_max = 0.4")));
        assert!(s
            .defaults
            .iter()
            .any(|d| d.starts_with("plan.max_yaw_rate")));
        assert!(s.defaults.iter().any(|d| d == "model = \"default\""));
        assert!(!s.defaults.iter().any(|d| d.starts_with("plan.t_end")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("t_end = 10.0", "t_end = 10.0\nspeed = 2.0");
        let e = parse(&text).unwrap_err().to_string();
        assert!(e.contains("speed"), "{e}");
    }

    #[test]
    fn shape_fields_must_match_kind() {
        let text = MINIMAL.replace("half_extents = [0.3, 0.3, 0.5]", "radius = 0.3");
        assert!(parse(&text)
            .unwrap_err()
            .to_string()
            .contains("does not apply"));
        let text = text.replace("shape = \"box\"", "shape = \"cylinder\"");
        assert!(parse(&text)
            .unwrap_err()
            .to_string()
            .contains("needs `half_height`"));
    }

    #[test]
    fn missing_section_and_seeds() {
        let text = MINIMAL.replace("mode = \"plan\"", "mode = \"via-pose\"");
        assert!(parse(&text).unwrap_err().to_string().contains("[via]"));
        let text = MINIMAL.replace("seeds = [1]", "seeds = []");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            load_scenario("/nonexistent/scenario.toml"),
            Err(Error::Scenario { .. })
        ));
    }

    #[test]
    fn moving_obstacles_become_scripts() {
        let text = MINIMAL.replace(
            "half_extents = [0.3, 0.3, 0.5]",
            "half_extents = [0.3, 0.3, 0.5]\nmotion = { mean_velocity = [0.1, 0.0, 0.0], v_max = 0.2 }",
        );
        let s = parse(&text).unwrap();
        let scripts = s.world_spec.scripts();
        assert_eq!(scripts.len(), 1);
        assert_eq!(scripts[0].id, "b");
        assert!(s.world.obstacles[0].dynamic);
    }
}
