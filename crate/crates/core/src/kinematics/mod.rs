//! Kinematic model of the mobile dual-arm manipulator.
//!
//! The chain has 22 frames: the world frame, 19 joint frames (base x/y/heading,
//! two waist joints, two 7-DoF arms) and one palm frame per arm. The base frame
//! (frame 3) is where the "base-frame" end-effector quantities are expressed.

mod model;

use std::f64::consts::PI;

use nalgebra::Dim;
use nalgebra::{
    Matrix, Matrix3, Quaternion, SMatrix, Storage, SymmetricEigen, UnitQuaternion, Vector3, U3,
};
use serde::{Deserialize, Serialize};

pub use model::{
    Dimensions, EeOffsets, JointKind, JointSpec, MdhRow, RobotModel, SkeletonParams, ARM_JOINTS,
    MODEL_VERSION, TRUNK_JOINTS,
};

use crate::error::{Error, Result};

/// Dimension of the generalized pose.
pub const DOF: usize = 19;

/// Linear-velocity Jacobian of one end-effector w.r.t. the full pose.
pub type LinearJacobian = SMatrix<f64, 3, DOF>;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdhParam {
    pub alpha_prev: f64,
    pub a_prev: f64,
    pub theta: f64,
    pub d: f64,
}

impl MdhParam {
    /// Builds a parameter set with both angles wrapped into `(-pi, pi]`.
    pub fn new(alpha_prev: f64, a_prev: f64, theta: f64, d: f64) -> Self {
        Self {
            alpha_prev: wrap_angle(alpha_prev),
            a_prev,
            theta: wrap_angle(theta),
            d,
        }
    }
}

/// Rigid transform: rotation block and translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// `self * other`
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    pub fn to_homogeneous(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    /// Max deviation of `R^T R` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let e = (self.rotation.transpose() * self.rotation - Matrix3::identity())
            .abs()
            .max();
        e.max((self.rotation.determinant() - 1.0).abs())
    }
}

/// `Rot(x, alpha) Trans(x, a) Rot(z, theta) Trans(z, d)` in closed form.
pub fn mdh_transform(p: &MdhParam) -> Transform {
    let (sa, ca) = p.alpha_prev.sin_cos();
    let (st, ct) = p.theta.sin_cos();
    let rotation = Matrix3::new(ct, -st, 0.0, st * ca, ct * ca, -sa, st * sa, ct * sa, ca);
    let translation = Vector3::new(p.a_prev, -sa * p.d, ca * p.d);
    Transform {
        rotation,
        translation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

/// The generalized variable: base pose, waist and both arms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneralizedPose {
    pub base: BasePose,
    pub waist: [f64; 2],
    pub right_arm: [f64; 7],
    pub left_arm: [f64; 7],
}

impl GeneralizedPose {
    pub fn from_base(x: f64, y: f64, phi: f64) -> Self {
        Self {
            base: BasePose { x, y, phi },
            ..Default::default()
        }
    }

    pub fn from_slice(q: &[f64]) -> Result<Self> {
        if q.len() != DOF {
            return Err(Error::Dimension {
                expected: DOF,
                actual: q.len(),
            });
        }
        let mut pose = Self::from_base(q[0], q[1], q[2]);
        pose.waist.copy_from_slice(&q[3..5]);
        pose.right_arm.copy_from_slice(&q[5..12]);
        pose.left_arm.copy_from_slice(&q[12..19]);
        Ok(pose)
    }

    pub fn to_array(&self) -> [f64; DOF] {
        let mut q = [0.0; DOF];
        q[0] = self.base.x;
        q[1] = self.base.y;
        q[2] = self.base.phi;
        q[3..5].copy_from_slice(&self.waist);
        q[5..12].copy_from_slice(&self.right_arm);
        q[12..19].copy_from_slice(&self.left_arm);
        q
    }

    /// True when every variable lies within the model's joint limits.
    pub fn within_limits(&self, model: &RobotModel) -> bool {
        self.to_array()
            .iter()
            .zip(model.joints())
            .all(|(q, j)| *q >= j.min && *q <= j.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// Skeleton control points, in the order base, waist, right/left shoulder,
/// right/left elbow, right/left wrist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoints(pub [Vector3<f64>; 8]);

impl ControlPoints {
    pub const BASE: usize = 0;
    pub const WAIST: usize = 1;
    pub const RIGHT_SHOULDER: usize = 2;
    pub const LEFT_SHOULDER: usize = 3;
    pub const RIGHT_ELBOW: usize = 4;
    pub const LEFT_ELBOW: usize = 5;
    pub const RIGHT_WRIST: usize = 6;
    pub const LEFT_WRIST: usize = 7;

    pub const NAMES: [&'static str; 8] = [
        "base",
        "waist",
        "right_shoulder",
        "left_shoulder",
        "right_elbow",
        "left_elbow",
        "right_wrist",
        "left_wrist",
    ];

    pub fn get(&self, i: usize) -> &Vector3<f64> {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkResult {
    pub t_right: Transform,
    pub t_left: Transform,
    pub t_right_base: Transform,
    pub t_left_base: Transform,
    /// World pose of the base frame (frame 3).
    pub base_transform: Transform,
    pub control_points: ControlPoints,
}

impl FkResult {
    pub fn x_right(&self) -> Vector3<f64> {
        self.t_right.translation
    }

    pub fn x_left(&self) -> Vector3<f64> {
        self.t_left.translation
    }

    pub fn ee(&self, side: Side) -> &Transform {
        match side {
            Side::Right => &self.t_right,
            Side::Left => &self.t_left,
        }
    }

    pub fn ee_base(&self, side: Side) -> &Transform {
        match side {
            Side::Right => &self.t_right_base,
            Side::Left => &self.t_left_base,
        }
    }
}

/// World transforms of every joint frame plus the two palm frames.
struct ChainFrames {
    trunk: [Transform; TRUNK_JOINTS],
    right: [Transform; ARM_JOINTS],
    left: [Transform; ARM_JOINTS],
    right_ee: Transform,
    left_ee: Transform,
}

fn arm_frames(
    start: &Transform,
    rows: &[MdhRow; ARM_JOINTS],
    q: &[f64; DOF],
) -> [Transform; ARM_JOINTS] {
    let mut frames = [Transform::identity(); ARM_JOINTS];
    let mut t = *start;
    for (f, row) in frames.iter_mut().zip(rows) {
        t = t.compose(&mdh_transform(&row.at(q[row.index])));
        *f = t;
    }
    frames
}

fn chain_frames(model: &RobotModel, q: &[f64; DOF]) -> ChainFrames {
    let mut trunk = [Transform::identity(); TRUNK_JOINTS];
    let mut t = Transform::identity();
    for (f, row) in trunk.iter_mut().zip(model.trunk()) {
        t = t.compose(&mdh_transform(&row.at(q[row.index])));
        *f = t;
    }
    let right = arm_frames(&trunk[TRUNK_JOINTS - 1], model.right_arm(), q);
    let left = arm_frames(&trunk[TRUNK_JOINTS - 1], model.left_arm(), q);
    let palm = |frame: &Transform, offset: f64| {
        frame.compose(&Transform::new(
            Matrix3::identity(),
            Vector3::new(0.0, 0.0, offset),
        ))
    };
    let right_ee = palm(&right[ARM_JOINTS - 1], model.ee_offsets.right_offset);
    let left_ee = palm(&left[ARM_JOINTS - 1], model.ee_offsets.left_offset);
    ChainFrames {
        trunk,
        right,
        left,
        right_ee,
        left_ee,
    }
}

const BASE_FRAME: usize = 2;
// Arm frame positions of the skeleton sites.
const SHOULDER_FRAME: usize = 0;
const ELBOW_FRAME: usize = 2;
const WRIST_FRAME: usize = 4;

pub fn forward_kinematics(model: &RobotModel, pose: &GeneralizedPose) -> FkResult {
    let q = pose.to_array();
    let frames = chain_frames(model, &q);
    let base = frames.trunk[BASE_FRAME];
    let base_inv = base.inverse();

    let mut base_com = base.translation;
    base_com.z = model.skeleton.base_com_height;
    let control_points = ControlPoints([
        base_com,
        frames.trunk[TRUNK_JOINTS - 1].translation,
        frames.right[SHOULDER_FRAME].translation,
        frames.left[SHOULDER_FRAME].translation,
        frames.right[ELBOW_FRAME].translation,
        frames.left[ELBOW_FRAME].translation,
        frames.right[WRIST_FRAME].translation,
        frames.left[WRIST_FRAME].translation,
    ]);

    FkResult {
        t_right: frames.right_ee,
        t_left: frames.left_ee,
        t_right_base: base_inv.compose(&frames.right_ee),
        t_left_base: base_inv.compose(&frames.left_ee),
        base_transform: base,
        control_points,
    }
}

/// Like [`forward_kinematics`] but checks the slice length first.
pub fn forward_kinematics_slice(model: &RobotModel, q: &[f64]) -> Result<FkResult> {
    Ok(forward_kinematics(model, &GeneralizedPose::from_slice(q)?))
}

/// Geometric linear-velocity Jacobian of one palm centre.
///
/// Each column is `z_i` for prismatic joints and `z_i x (p_ee - o_i)` for
/// revolute ones; columns of the other arm stay exactly zero.
pub fn jacobian(model: &RobotModel, pose: &GeneralizedPose, side: Side) -> LinearJacobian {
    let q = pose.to_array();
    let frames = chain_frames(model, &q);
    let (arm_rows, arm_frames, ee) = match side {
        Side::Right => (
            model.right_arm(),
            &frames.right,
            frames.right_ee.translation,
        ),
        Side::Left => (model.left_arm(), &frames.left, frames.left_ee.translation),
    };

    let mut j = LinearJacobian::zeros();
    let rows = model
        .trunk()
        .iter()
        .zip(&frames.trunk)
        .chain(arm_rows.iter().zip(arm_frames));
    for (row, frame) in rows {
        let z = frame.z_axis();
        let col = match row.joint {
            JointKind::Prismatic => z,
            JointKind::Revolute => z.cross(&(ee - frame.translation)),
        };
        j.set_column(row.index, &col);
    }
    j
}

/// Angular-velocity Jacobian of one palm frame (zero columns for prismatic
/// joints and the other arm).
pub fn angular_jacobian(model: &RobotModel, pose: &GeneralizedPose, side: Side) -> LinearJacobian {
    let q = pose.to_array();
    let frames = chain_frames(model, &q);
    let (arm_rows, arm_frames) = match side {
        Side::Right => (model.right_arm(), &frames.right),
        Side::Left => (model.left_arm(), &frames.left),
    };
    let mut j = LinearJacobian::zeros();
    let rows = model
        .trunk()
        .iter()
        .zip(&frames.trunk)
        .chain(arm_rows.iter().zip(arm_frames));
    for (row, frame) in rows {
        if row.joint == JointKind::Revolute {
            j.set_column(row.index, &frame.z_axis());
        }
    }
    j
}

fn gram<C: Dim, S: Storage<f64, U3, C>>(j: &Matrix<f64, U3, C, S>) -> Matrix3<f64> {
    j.column_iter()
        .fold(Matrix3::zeros(), |acc, c| acc + c * c.transpose())
}

/// Eigen-decomposition of `J J^T`: singular values (descending) and the
/// matching left singular vectors as columns.
fn left_singular<C: Dim, S: Storage<f64, U3, C>>(
    j: &Matrix<f64, U3, C, S>,
) -> ([f64; 3], Matrix3<f64>) {
    let jjt = gram(j);
    let eig = SymmetricEigen::new(jjt);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut sigma = [0.0; 3];
    let mut u = Matrix3::zeros();
    for (k, &i) in order.iter().enumerate() {
        sigma[k] = eig.eigenvalues[i].max(0.0).sqrt();
        u.set_column(k, &eig.eigenvectors.column(i));
    }
    (sigma, u)
}

/// `sqrt(det(J J^T))`, clamped at zero.
pub fn manipulability<C: Dim, S: Storage<f64, U3, C>>(j: &Matrix<f64, U3, C, S>) -> f64 {
    gram(j).determinant().max(0.0).sqrt()
}

/// Sum over singular directions of `|d . u_k| sigma_k`.
pub fn directional_manipulability<C: Dim, S: Storage<f64, U3, C>>(
    j: &Matrix<f64, U3, C, S>,
    d: &Vector3<f64>,
) -> Result<f64> {
    if (d.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "direction must be a unit vector, |d| = {}",
            d.norm()
        )));
    }
    let (sigma, u) = left_singular(j);
    Ok((0..3).map(|k| d.dot(&u.column(k)).abs() * sigma[k]).sum())
}

/// Vector part of `desired * actual^-1`, taken in the hemisphere with a
/// non-negative scalar part.
pub fn orientation_error(
    desired: &Quaternion<f64>,
    actual: &Quaternion<f64>,
) -> Result<Vector3<f64>> {
    for (name, q) in [("desired", desired), ("actual", actual)] {
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "{name} quaternion is not unit norm ({})",
                q.norm()
            )));
        }
    }
    let err = desired * actual.conjugate();
    let v = err.imag();
    Ok(if err.w < 0.0 { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix4;

    fn rot_x(a: f64) -> Matrix4<f64> {
        let (s, c) = a.sin_cos();
        Matrix4::new(1., 0., 0., 0., 0., c, -s, 0., 0., s, c, 0., 0., 0., 0., 1.)
    }
    fn rot_z(a: f64) -> Matrix4<f64> {
        let (s, c) = a.sin_cos();
        Matrix4::new(c, -s, 0., 0., s, c, 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.)
    }
    fn trans(x: f64, z: f64) -> Matrix4<f64> {
        Matrix4::new(1., 0., 0., x, 0., 1., 0., 0., 0., 0., 1., z, 0., 0., 0., 1.)
    }

    #[test]
    fn mdh_identity_and_single_rotation() {
        let t = mdh_transform(&MdhParam::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(t.to_homogeneous(), Matrix4::identity());

        let t = mdh_transform(&MdhParam::new(0.0, 0.0, PI / 2.0, 0.0));
        assert_relative_eq!(t.translation, Vector3::zeros());
        assert_relative_eq!(
            t.rotation,
            rot_z(PI / 2.0).fixed_view::<3, 3>(0, 0).into_owned(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn mdh_matches_product_of_elementary_matrices() {
        let p = MdhParam::new(PI / 6.0, 0.1, 0.3, 0.2);
        let oracle = rot_x(PI / 6.0) * trans(0.1, 0.0) * rot_z(0.3) * trans(0.0, 0.2);
        assert_relative_eq!(mdh_transform(&p).to_homogeneous(), oracle, epsilon = 1e-14);
    }

    #[test]
    fn mdh_param_wraps_angles() {
        let p = MdhParam::new(3.0 * PI, 0.0, -PI, 0.0);
        assert_relative_eq!(p.alpha_prev, PI, epsilon = 1e-12);
        assert_relative_eq!(p.theta, PI, epsilon = 1e-12);
    }

    #[test]
    fn initial_pose_reproduces_published_ee_positions() {
        let model = RobotModel::default_profile();
        let fk = forward_kinematics(&model, &GeneralizedPose::from_base(-0.2, 0.4, 0.0));
        assert_relative_eq!(
            fk.x_right(),
            Vector3::new(-0.2, 0.25, -0.219),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            fk.x_left(),
            Vector3::new(-0.2, 0.55, -0.219),
            epsilon = 1e-9
        );
    }

    #[test]
    fn base_only_pose_is_laterally_symmetric() {
        let model = RobotModel::default_profile();
        let fk = forward_kinematics(&model, &GeneralizedPose::from_base(1.3, -0.7, 0.0));
        assert_relative_eq!(fk.x_right().y, -0.7 - 0.15, epsilon = 1e-12);
        assert_relative_eq!(fk.x_left().y, -0.7 + 0.15, epsilon = 1e-12);
    }

    #[test]
    fn world_ee_is_base_composed_with_base_frame_ee() {
        let model = RobotModel::default_profile();
        let mut pose = GeneralizedPose::from_base(0.4, 1.1, 2.0);
        pose.waist = [0.2, -0.3];
        pose.right_arm = [-0.5, 0.2, 0.1, -1.0, 0.3, 0.2, -0.4];
        pose.left_arm = [-0.7, -0.2, 0.3, -0.6, -0.1, 0.5, 0.4];
        let fk = forward_kinematics(&model, &pose);
        let composed = fk.base_transform.compose(&fk.t_right_base);
        assert_relative_eq!(
            composed.to_homogeneous(),
            fk.t_right.to_homogeneous(),
            epsilon = 1e-12
        );
        let composed = fk.base_transform.compose(&fk.t_left_base);
        assert_relative_eq!(
            composed.to_homogeneous(),
            fk.t_left.to_homogeneous(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn base_x_column_is_unit_x() {
        let model = RobotModel::default_profile();
        let pose = GeneralizedPose::from_base(0.3, -0.2, 0.7);
        for side in [Side::Right, Side::Left] {
            let j = jacobian(&model, &pose, side);
            assert_relative_eq!(
                j.column(0).into_owned(),
                Vector3::new(1.0, 0.0, 0.0),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                j.column(1).into_owned(),
                Vector3::new(0.0, 1.0, 0.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn opposite_arm_columns_are_exactly_zero() {
        let model = RobotModel::default_profile();
        let mut pose = GeneralizedPose::from_base(0.0, 0.0, 0.3);
        pose.right_arm = [-0.4; 7];
        pose.left_arm = [0.3; 7];
        let jr = jacobian(&model, &pose, Side::Right);
        let jl = jacobian(&model, &pose, Side::Left);
        for c in 12..19 {
            assert!(jr.column(c).iter().all(|&v| v == 0.0));
        }
        for c in 5..12 {
            assert!(jl.column(c).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_pose_is_doubly_singular() {
        let model = RobotModel::default_profile();
        let pose = GeneralizedPose::from_base(-0.2, 0.4, 0.0);
        for side in [Side::Right, Side::Left] {
            assert!(manipulability(&jacobian(&model, &pose, side)) < 1e-9);
        }
    }

    #[test]
    fn manipulability_trivial_cases() {
        assert_eq!(manipulability(&LinearJacobian::zeros()), 0.0);
        let mut j = LinearJacobian::zeros();
        j.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&Matrix3::identity());
        assert_relative_eq!(manipulability(&j), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            directional_manipulability(&j, &Vector3::new(1.0, 0.0, 0.0)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let d = Vector3::new(0.3, -0.4, 0.5).normalize();
        assert_relative_eq!(
            directional_manipulability(&j, &d).unwrap(),
            d.x.abs() + d.y.abs() + d.z.abs(),
            epsilon = 1e-12
        );
        assert!(directional_manipulability(&j, &Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn orientation_error_cases() {
        let id = Quaternion::identity();
        assert_eq!(orientation_error(&id, &id).unwrap(), Vector3::zeros());
        let half_turn = *UnitQuaternion::from_axis_angle(&Vector3::z_axis(), PI).quaternion();
        assert_relative_eq!(
            orientation_error(&half_turn, &id).unwrap().norm(),
            1.0,
            epsilon = 1e-12
        );
        let bad = Quaternion::new(2.0, 0.0, 0.0, 0.0);
        assert!(orientation_error(&bad, &id).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(0.1), 0.1);
    }
    fn random_pose(model: &RobotModel, rng: &mut impl rand::Rng) -> GeneralizedPose {
        let q: Vec<f64> = model
            .limits()
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..=hi))
            .collect();
        GeneralizedPose::from_slice(&q).unwrap()
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use rand::SeedableRng;
        let model = RobotModel::default_profile();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let pose = random_pose(&model, &mut rng);
            let q = pose.to_array();
            for side in [Side::Right, Side::Left] {
                let j = jacobian(&model, &pose, side);
                for c in 0..DOF {
                    let (mut qp, mut qm) = (q, q);
                    qp[c] += h;
                    qm[c] -= h;
                    let xp = forward_kinematics_slice(&model, &qp)
                        .unwrap()
                        .ee(side)
                        .translation;
                    let xm = forward_kinematics_slice(&model, &qm)
                        .unwrap()
                        .ee(side)
                        .translation;
                    let fd = (xp - xm) / (2.0 * h);
                    worst = worst.max((fd - j.column(c)).amax());
                }
            }
        }
        assert!(worst <= 1e-5, "max-abs deviation {worst}");
    }

    #[test]
    fn manipulability_matches_svd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let j = LinearJacobian::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let sv = j.svd(true, false);
            let product: f64 = sv.singular_values.iter().product();
            assert_relative_eq!(manipulability(&j), product, max_relative = 1e-9);

            let d = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let u = sv.u.unwrap();
            let oracle: f64 = (0..3)
                .map(|k| d.dot(&u.column(k)).abs() * sv.singular_values[k])
                .sum();
            assert_relative_eq!(
                directional_manipulability(&j, &d).unwrap(),
                oracle,
                max_relative = 1e-9
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn directional_manipulability_ignores_direction_sign(
            entries in proptest::collection::vec(-2.0..2.0f64, 57),
            dx in -1.0..1.0f64, dy in -1.0..1.0f64, dz in -1.0..1.0f64,
        ) {
            let d = Vector3::new(dx, dy, dz);
            proptest::prop_assume!(d.norm() > 1e-3);
            let d = d.normalize();
            let j = LinearJacobian::from_column_slice(&entries);
            let a = directional_manipulability(&j, &d).unwrap();
            let b = directional_manipulability(&j, &-d).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn orientation_error_is_at_most_one(
            a in proptest::collection::vec(-1.0..1.0f64, 4),
            b in proptest::collection::vec(-1.0..1.0f64, 4),
        ) {
            let qa = Quaternion::new(a[0], a[1], a[2], a[3]);
            let qb = Quaternion::new(b[0], b[1], b[2], b[3]);
            proptest::prop_assume!(qa.norm() > 1e-3 && qb.norm() > 1e-3);
            let e = orientation_error(&qa.normalize(), &qb.normalize()).unwrap();
            proptest::prop_assert!(e.norm() <= 1.0 + 1e-12);
        }
    }
}
