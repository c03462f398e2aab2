//! Whole-body via-poses for a sequence of dual-EE via-points.
//!
//! The palm pair is first planned as a single point in the stacked 6-D space,
//! then one 19-D pose per via-point is searched by the evolver over
//! accuracy, joint travel, collision and directional manipulability.

use nalgebra::{Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolveResult, GaConfig, Problem};
use crate::geometry::WorldState;
use crate::kinematics::{forward_kinematics, GeneralizedPose, RobotModel, DOF};
use crate::objectives::{
    fa_via_accuracy, fb_via_displacement, fc_via_collision, fd_via_directional_manip, ViaPoint,
    WeightVector,
};
use crate::planner::{distance, geom_optim, plan, ConfigSpace, DualEeSpace, Path, PlannerConfig};
use crate::posedesign::push_out_of_footprints;

/// Distance kept between the arm reach and the edge of the base search disc.
pub const REACH_MARGIN: f64 = 0.1;

/// Decision-maker weights for (fa, fb, fc, fd).
pub const VIA_WEIGHTS: [f64; 4] = [0.6, 0.1, 0.25, 0.05];

/// Accepted palm error per via-point (m).
pub const FA_TOLERANCE_PER_VIA: f64 = 0.05;

pub fn via_weights() -> WeightVector {
    WeightVector::new(VIA_WEIGHTS.to_vec()).expect("constant weights are valid")
}

/// Planar disc the base is searched in for one via-point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReachRegion {
    pub center: [f64; 2],
    pub radius: f64,
}

impl ReachRegion {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) <= self.radius + 1e-12
    }

    /// Nearest point of the disc.
    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        let c = Vector2::from(self.center);
        let d = Vector2::from(p) - c;
        if d.norm() <= self.radius {
            return p;
        }
        (c + d * (self.radius / d.norm())).into()
    }

    pub fn bounding_box(&self) -> [(f64, f64); 2] {
        [
            (self.center[0] - self.radius, self.center[0] + self.radius),
            (self.center[1] - self.radius, self.center[1] + self.radius),
        ]
    }
}

/// Disc about the ground projection of the palm midpoint, of radius arm
/// reach less [`REACH_MARGIN`].
pub fn reach_region(via: &ViaPoint, model: &RobotModel) -> ReachRegion {
    let m = via.midpoint();
    ReachRegion {
        center: [m.x, m.y],
        radius: (model.dimensions.arm_reach() - REACH_MARGIN).max(0.0),
    }
}

/// Palm via-points from `start` to `goal`, planned for the stacked pair and
/// pruned. A task that does not move yields the single start pair.
pub fn design_via_points(
    start: &ViaPoint,
    goal: &ViaPoint,
    world: &WorldState,
    cfg: &PlannerConfig,
) -> Result<Vec<ViaPoint>> {
    let space = DualEeSpace::from_world(world);
    let a = start.stacked().to_vec();
    let b = goal.stacked().to_vec();
    if distance(&a, &b) <= 1e-12 {
        if !space.is_free(&a) {
            return Err(Error::InCollision("start"));
        }
        return Ok(vec![*start]);
    }
    let raw = plan(&a, &b, &space, cfg)?;
    let path = geom_optim(&raw.path, &space, cfg);
    Ok(path
        .waypoints
        .iter()
        .map(|q| ViaPoint::from_stacked(q))
        .collect())
}

/// True when both palms move between consecutive via-points without entering
/// an inflated obstacle.
pub fn via_path_is_free(via: &[ViaPoint], world: &WorldState, step: f64) -> bool {
    let path = Path::new(via.iter().map(|v| v.stacked().to_vec()).collect());
    path.is_free(&DualEeSpace::from_world(world), step)
}

/// fa..fd over `n_p` stacked 19-gene poses.
#[derive(Debug, Clone)]
pub struct ViaPoseProblem<'a> {
    pub model: &'a RobotModel,
    pub world: &'a WorldState,
    pub via: &'a [ViaPoint],
    /// Pose the first via-pose moves from.
    pub initial: GeneralizedPose,
    regions: Vec<ReachRegion>,
    limits: Vec<(f64, f64)>,
    bounds: Vec<(f64, f64)>,
}

impl<'a> ViaPoseProblem<'a> {
    pub fn new(
        model: &'a RobotModel,
        world: &'a WorldState,
        via: &'a [ViaPoint],
        initial: GeneralizedPose,
    ) -> Result<Self> {
        if via.is_empty() {
            return Err(Error::invalid(
                "via-pose design needs at least one via-point",
            ));
        }
        let limits = model.limits();
        let regions: Vec<ReachRegion> = via.iter().map(|v| reach_region(v, model)).collect();
        let mut bounds = Vec::with_capacity(via.len() * DOF);
        for r in &regions {
            let mut b = limits.clone();
            let [bx, by] = r.bounding_box();
            b[0] = bx;
            b[1] = by;
            b[2] = (-std::f64::consts::PI, std::f64::consts::PI);
            bounds.extend(b);
        }
        Ok(Self {
            model,
            world,
            via,
            initial,
            regions,
            limits,
            bounds,
        })
    }

    pub fn regions(&self) -> &[ReachRegion] {
        &self.regions
    }

    pub fn decode(&self, genes: &[f64]) -> Result<Vec<GeneralizedPose>> {
        if genes.len() != self.via.len() * DOF {
            return Err(Error::Dimension {
                expected: self.via.len() * DOF,
                actual: genes.len(),
            });
        }
        genes.chunks(DOF).map(GeneralizedPose::from_slice).collect()
    }

    pub fn objectives(&self, poses: &[GeneralizedPose]) -> Result<[f64; 4]> {
        Ok([
            fa_via_accuracy(self.model, poses, self.via)?,
            fb_via_displacement(poses, &self.initial, &self.limits),
            fc_via_collision(self.model, poses, self.world),
            fd_via_directional_manip(self.model, poses),
        ])
    }
}

impl Problem for ViaPoseProblem<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn n_objectives(&self) -> usize {
        4
    }

    fn evaluate(&self, genes: &[f64]) -> Result<Vec<f64>> {
        Ok(self.objectives(&self.decode(genes)?)?.to_vec())
    }

    /// Collision is a constraint as well as an objective.
    fn violation(&self, objectives: &[f64]) -> f64 {
        objectives[2]
    }

    /// Moves each base out of obstacle footprints, then back into its disc.
    fn repair(&self, genes: &mut [f64]) {
        let z = self.model.skeleton.base_com_height;
        for (g, r) in genes.chunks_mut(DOF).zip(&self.regions) {
            let p = push_out_of_footprints(Vector2::new(g[0], g[1]), z, self.world);
            let [x, y] = r.clamp([p.x, p.y]);
            g[0] = x;
            g[1] = y;
        }
    }

    /// The initial pose repeated at every via-point.
    fn initial_individuals(&self) -> Vec<Vec<f64>> {
        let q = self.initial.to_array();
        vec![self.via.iter().flat_map(|_| q).collect()]
    }
}

#[derive(Debug, Clone)]
pub struct ViaPoseDesign {
    pub poses: Vec<GeneralizedPose>,
    /// (fa, fb, fc, fd) of `poses`.
    pub objectives: [f64; 4],
    /// False when no final individual met the accuracy tolerance collision
    /// free; `poses` is then the decision maker's pick.
    pub feasible: bool,
    pub run: EvolveResult,
}

impl ViaPoseDesign {
    /// Palm positions reached by each via-pose, `(right, left)`.
    pub fn reached(&self, model: &RobotModel) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        self.poses
            .iter()
            .map(|p| {
                let fk = forward_kinematics(model, p);
                (fk.x_right(), fk.x_left())
            })
            .collect()
    }
}

fn accepted(objectives: &[f64], n_p: usize) -> bool {
    objectives[0] <= FA_TOLERANCE_PER_VIA * n_p as f64 && objectives[2] == 0.0
}

/// Searches one pose per via-point. Among the final non-dominated set, the
/// members with fa within tolerance and fc = 0 are preferred; the weighted
/// fitness picks among them.
pub fn optimize_via_poses(
    model: &RobotModel,
    world: &WorldState,
    via: &[ViaPoint],
    initial: &GeneralizedPose,
    cfg: &GaConfig,
) -> Result<ViaPoseDesign> {
    let problem = ViaPoseProblem::new(model, world, via, *initial)?;
    let run = evolve(&problem, cfg)?;
    let n_p = via.len();
    let pick = run
        .pareto_set
        .iter()
        .filter(|ind| accepted(&ind.objectives, n_p))
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .cloned();
    let feasible = pick.is_some();
    let chosen = pick.unwrap_or_else(|| run.best.clone());
    let poses = problem.decode(&chosen.chromosome)?;
    let objectives = problem.objectives(&poses)?;
    Ok(ViaPoseDesign {
        poses,
        objectives,
        feasible,
        run,
    })
}
