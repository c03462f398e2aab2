//! Pose-design objectives f1..f5, via-pose objectives fa..fd and the
//! weighted decision-maker fitness.
//!
//! Every objective is minimized. Manipulability terms are negated.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{collision_fraction, WorldState};
use crate::kinematics::{
    directional_manipulability, forward_kinematics, jacobian, manipulability, orientation_error,
    GeneralizedPose, RobotModel, Side, DOF,
};

/// Target of the pose-design problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTask {
    pub x_rd: Vector3<f64>,
    pub x_ld: Vector3<f64>,
    /// Desired palm orientations; `None` leaves orientation unconstrained.
    pub q_rd: Option<UnitQuaternion<f64>>,
    pub q_ld: Option<UnitQuaternion<f64>>,
    /// Initial palm positions in the base frame.
    pub x_rbi: Vector3<f64>,
    pub x_lbi: Vector3<f64>,
}

impl PoseTask {
    /// Task whose base-frame references are taken from `initial`.
    pub fn from_initial_pose(
        model: &RobotModel,
        initial: &GeneralizedPose,
        x_rd: Vector3<f64>,
        x_ld: Vector3<f64>,
    ) -> Self {
        let fk = forward_kinematics(model, initial);
        Self {
            x_rd,
            x_ld,
            q_rd: None,
            q_ld: None,
            x_rbi: fk.t_right_base.translation,
            x_lbi: fk.t_left_base.translation,
        }
    }
}

pub fn f1_position(model: &RobotModel, pose: &GeneralizedPose, task: &PoseTask) -> f64 {
    let fk = forward_kinematics(model, pose);
    (fk.x_right() - task.x_rd).norm() + (fk.x_left() - task.x_ld).norm()
}

pub fn f2_orientation(model: &RobotModel, pose: &GeneralizedPose, task: &PoseTask) -> f64 {
    if task.q_rd.is_none() && task.q_ld.is_none() {
        return 0.0;
    }
    let fk = forward_kinematics(model, pose);
    let term = |desired: &Option<UnitQuaternion<f64>>, side: Side| -> f64 {
        desired.map_or(0.0, |q| {
            let actual = fk.ee(side).quaternion();
            orientation_error(q.quaternion(), actual.quaternion()).map_or(0.0, |e| e.norm())
        })
    };
    term(&task.q_rd, Side::Right) + term(&task.q_ld, Side::Left)
}

pub fn f3_manipulability(model: &RobotModel, pose: &GeneralizedPose) -> f64 {
    let r = manipulability(&jacobian(model, pose, Side::Right));
    let l = manipulability(&jacobian(model, pose, Side::Left));
    -(r + l)
}

pub fn f4_joint_displacement(model: &RobotModel, pose: &GeneralizedPose) -> f64 {
    let q = pose.to_array();
    let w = model.mass_weights();
    let sum: f64 = model
        .joints()
        .iter()
        .enumerate()
        .map(|(i, j)| w[i] * (q[i] - j.min) / (j.max - j.min))
        .sum();
    sum / DOF as f64
}

pub fn f5_ee_base_displacement(model: &RobotModel, pose: &GeneralizedPose, task: &PoseTask) -> f64 {
    let fk = forward_kinematics(model, pose);
    (fk.t_right_base.translation - task.x_rbi).norm()
        + (fk.t_left_base.translation - task.x_lbi).norm()
}

/// `[f1, f2, f3, f4, f5]` with a single forward-kinematics pass.
pub fn pose_objectives(model: &RobotModel, pose: &GeneralizedPose, task: &PoseTask) -> [f64; 5] {
    let fk = forward_kinematics(model, pose);
    let f1 = (fk.x_right() - task.x_rd).norm() + (fk.x_left() - task.x_ld).norm();
    let f5 = (fk.t_right_base.translation - task.x_rbi).norm()
        + (fk.t_left_base.translation - task.x_lbi).norm();
    [
        f1,
        f2_orientation(model, pose, task),
        f3_manipulability(model, pose),
        f4_joint_displacement(model, pose),
        f5,
    ]
}

/// Decision-maker weights; non-negative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights must sum to 1, got {s}")));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-objective min and max over a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn from_objectives<'a>(objs: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut it = objs.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::invalid("normalization needs at least one vector"))?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for o in it {
            if o.len() != min.len() {
                return Err(Error::Dimension {
                    expected: min.len(),
                    actual: o.len(),
                });
            }
            for (k, &v) in o.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Min-max scaled value of objective `k`; constant columns map to 0.
    pub fn scale(&self, k: usize, v: f64) -> f64 {
        let span = self.max[k] - self.min[k];
        if span > 0.0 {
            (v - self.min[k]) / span
        } else {
            0.0
        }
    }

    pub fn scale_all(&self, objs: &[f64]) -> Vec<f64> {
        objs.iter()
            .enumerate()
            .map(|(k, &v)| self.scale(k, v))
            .collect()
    }
}

/// Weighted sum of normalized objectives. Lower is better.
pub fn combined_fitness(
    objectives: &[f64],
    stats: &Normalization,
    weights: &WeightVector,
) -> Result<f64> {
    if objectives.len() != weights.len() || stats.min.len() != weights.len() {
        return Err(Error::Dimension {
            expected: weights.len(),
            actual: objectives.len(),
        });
    }
    Ok(objectives
        .iter()
        .zip(weights.as_slice())
        .enumerate()
        .map(|(k, (&v, &w))| w * stats.scale(k, v))
        .sum())
}

/// Commanded palm positions at one via-point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViaPoint {
    pub right: Vector3<f64>,
    pub left: Vector3<f64>,
}

impl ViaPoint {
    pub fn stacked(&self) -> [f64; 6] {
        [
            self.right.x,
            self.right.y,
            self.right.z,
            self.left.x,
            self.left.y,
            self.left.z,
        ]
    }

    pub fn from_stacked(v: &[f64]) -> Self {
        Self {
            right: Vector3::new(v[0], v[1], v[2]),
            left: Vector3::new(v[3], v[4], v[5]),
        }
    }

    /// Midpoint of the two palms.
    pub fn midpoint(&self) -> Vector3<f64> {
        (self.right + self.left) / 2.0
    }
}

pub fn fa_via_accuracy(
    model: &RobotModel,
    chromosome: &[GeneralizedPose],
    via: &[ViaPoint],
) -> Result<f64> {
    if chromosome.len() != via.len() {
        return Err(Error::Dimension {
            expected: via.len(),
            actual: chromosome.len(),
        });
    }
    Ok(chromosome
        .iter()
        .zip(via)
        .map(|(pose, x)| {
            let fk = forward_kinematics(model, pose);
            let dr = x.right - fk.x_right();
            let dl = x.left - fk.x_left();
            (dr.norm_squared() + dl.norm_squared()).sqrt()
        })
        .sum())
}

/// Joint travel between consecutive via-poses, `initial` taking the role of
/// the zeroth pose.
pub fn fb_via_displacement(
    chromosome: &[GeneralizedPose],
    initial: &GeneralizedPose,
    limits: &[(f64, f64)],
) -> f64 {
    let mut prev = initial.to_array();
    let mut total = 0.0;
    for pose in chromosome {
        let q = pose.to_array();
        for j in 0..DOF {
            let (lo, hi) = limits[j];
            total += ((q[j] - prev[j]) / (hi - lo)).abs();
        }
        prev = q;
    }
    total
}

pub fn fc_via_collision(
    model: &RobotModel,
    chromosome: &[GeneralizedPose],
    world: &WorldState,
) -> f64 {
    chromosome
        .iter()
        .map(|p| collision_fraction(model, p, world))
        .sum()
}

/// Negated directional manipulability along each chord between consecutive
/// via-pose palm positions, with the Jacobian taken at the chord's start.
pub fn fd_via_directional_manip(model: &RobotModel, chromosome: &[GeneralizedPose]) -> f64 {
    let mut total = 0.0;
    for pair in chromosome.windows(2) {
        let fk0 = forward_kinematics(model, &pair[0]);
        let fk1 = forward_kinematics(model, &pair[1]);
        for side in [Side::Right, Side::Left] {
            let chord = fk1.ee(side).translation - fk0.ee(side).translation;
            let len = chord.norm();
            if len <= 1e-12 {
                continue;
            }
            let j = jacobian(model, &pair[0], side);
            total += directional_manipulability(&j, &(chord / len)).unwrap_or(0.0);
        }
    }
    -total
}

/// Unit quaternion from `(w, x, y, z)`, rejecting non-unit input.
pub fn unit_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<UnitQuaternion<f64>> {
    let q = Quaternion::new(w, x, y, z);
    if (q.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "quaternion ({w}, {x}, {y}, {z}) is not unit norm"
        )));
    }
    Ok(UnitQuaternion::new_unchecked(q))
}
