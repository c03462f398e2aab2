//! Obstacles, segment clipping and skeleton collision tests.
//!
//! Every query works against obstacles grown by the world's security hull.
//! Links of the robot skeleton are treated as line segments.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, ControlPoints, GeneralizedPose, RobotModel, DOF};

/// Tolerance used to keep tangent contacts inside the closed shapes.
const CONTACT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Axis-aligned box.
    Box {
        center: Vector3<f64>,
        half_extents: Vector3<f64>,
    },
    /// Vertical cylinder; `center` is the middle of its axis.
    Cylinder {
        center: Vector3<f64>,
        radius: f64,
        half_height: f64,
    },
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
}

impl Shape {
    pub fn center(&self) -> Vector3<f64> {
        match *self {
            Shape::Box { center, .. }
            | Shape::Cylinder { center, .. }
            | Shape::Sphere { center, .. } => center,
        }
    }

    pub fn with_center(&self, c: Vector3<f64>) -> Shape {
        let mut s = *self;
        match &mut s {
            Shape::Box { center, .. }
            | Shape::Cylinder { center, .. }
            | Shape::Sphere { center, .. } => *center = c,
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Box {
                center,
                half_extents,
            } => finite(&center) && finite(&half_extents) && half_extents.iter().all(|&h| h > 0.0),
            Shape::Cylinder {
                center,
                radius,
                half_height,
            } => {
                finite(&center)
                    && radius > 0.0
                    && half_height > 0.0
                    && radius.is_finite()
                    && half_height.is_finite()
            }
            Shape::Sphere { center, radius } => {
                finite(&center) && radius > 0.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "obstacle shape needs finite, positive extents: {self:?}"
            )))
        }
    }

    pub fn grown(&self, delta: f64) -> Shape {
        match *self {
            Shape::Box {
                center,
                half_extents,
            } => Shape::Box {
                center,
                half_extents: half_extents.add_scalar(delta),
            },
            Shape::Cylinder {
                center,
                radius,
                half_height,
            } => Shape::Cylinder {
                center,
                radius: radius + delta,
                half_height: half_height + delta,
            },
            Shape::Sphere { center, radius } => Shape::Sphere {
                center,
                radius: radius + delta,
            },
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match *self {
            Shape::Box {
                center,
                half_extents,
            } => (p - center)
                .iter()
                .zip(half_extents.iter())
                .all(|(d, h)| d.abs() <= *h),
            Shape::Cylinder {
                center,
                radius,
                half_height,
            } => {
                let d = p - center;
                d.z.abs() <= half_height && d.x * d.x + d.y * d.y <= radius * radius
            }
            Shape::Sphere { center, radius } => (p - center).norm_squared() <= radius * radius,
        }
    }

    /// Parameter interval `[t0, t1]` of `p0 + t (p1 - p0)`, `t` in `[0, 1]`,
    /// that lies inside the closed shape.
    pub fn clip_segment(&self, p0: &Vector3<f64>, p1: &Vector3<f64>) -> Option<(f64, f64)> {
        let d = p1 - p0;
        match *self {
            Shape::Box {
                center,
                half_extents,
            } => {
                let lo = center - half_extents;
                let hi = center + half_extents;
                let mut t0: f64 = 0.0;
                let mut t1: f64 = 1.0;
                for k in 0..3 {
                    if !slab(p0[k], d[k], lo[k], hi[k], &mut t0, &mut t1) {
                        return None;
                    }
                }
                Some((t0, t1))
            }
            Shape::Sphere { center, radius } => {
                let m = p0 - center;
                let (t0, t1) = quadratic_interval(
                    d.norm_squared(),
                    2.0 * m.dot(&d),
                    m.norm_squared() - radius * radius,
                )?;
                intersect((t0, t1), (0.0, 1.0))
            }
            Shape::Cylinder {
                center,
                radius,
                half_height,
            } => {
                let mut t0: f64 = 0.0;
                let mut t1: f64 = 1.0;
                if !slab(
                    p0.z,
                    d.z,
                    center.z - half_height,
                    center.z + half_height,
                    &mut t0,
                    &mut t1,
                ) {
                    return None;
                }
                let (mx, my) = (p0.x - center.x, p0.y - center.y);
                let a = d.x * d.x + d.y * d.y;
                let disc = quadratic_interval(
                    a,
                    2.0 * (mx * d.x + my * d.y),
                    mx * mx + my * my - radius * radius,
                )?;
                intersect((t0, t1), disc)
            }
        }
    }
}

fn finite(v: &Vector3<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn slab(o: f64, d: f64, lo: f64, hi: f64, t0: &mut f64, t1: &mut f64) -> bool {
    if d.abs() < 1e-300 {
        return o >= lo && o <= hi;
    }
    let (mut a, mut b) = ((lo - o) / d, (hi - o) / d);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    *t0 = t0.max(a);
    *t1 = t1.min(b);
    *t0 <= *t1
}

/// Interval where `a t^2 + b t + c <= 0`. A degenerate `a` means the
/// segment does not move in the relevant directions.
fn quadratic_interval(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a < 1e-300 {
        return if c <= CONTACT_EPS {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        };
    }
    let disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc < -CONTACT_EPS * scale.max(1.0) {
        return None;
    }
    let s = disc.max(0.0).sqrt();
    Some(((-b - s) / (2.0 * a), (-b + s) / (2.0 * a)))
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi).then_some((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: String,
    pub shape: Shape,
    pub dynamic: bool,
    /// Simulation ground truth; planners never read it.
    pub velocity_truth: Vector3<f64>,
}

impl Obstacle {
    pub fn fixed(id: impl Into<String>, shape: Shape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            id: id.into(),
            shape,
            dynamic: false,
            velocity_truth: Vector3::zeros(),
        })
    }

    pub fn moving(id: impl Into<String>, shape: Shape, velocity: Vector3<f64>) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            id: id.into(),
            shape,
            dynamic: true,
            velocity_truth: velocity,
        })
    }

    pub fn position(&self) -> Vector3<f64> {
        self.shape.center()
    }

    pub fn moved_to(&self, center: Vector3<f64>) -> Obstacle {
        Obstacle {
            shape: self.shape.with_center(center),
            ..self.clone()
        }
    }
}

pub fn inflate(o: &Obstacle, delta: f64) -> Result<Obstacle> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!(
            "inflation must be non-negative, got {delta}"
        )));
    }
    Ok(Obstacle {
        shape: o.shape.grown(delta),
        ..o.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// An immutable snapshot of the world.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub obstacles: Vec<Obstacle>,
    pub bounds: Aabb,
    security_hull: f64,
}

impl WorldState {
    pub fn new(obstacles: Vec<Obstacle>, bounds: Aabb, security_hull: f64) -> Result<Self> {
        if !(security_hull >= 0.0) {
            return Err(Error::invalid("security hull must be non-negative"));
        }
        for o in &obstacles {
            o.shape.validate()?;
        }
        Ok(Self {
            obstacles,
            bounds,
            security_hull,
        })
    }

    pub fn empty(bounds: Aabb) -> Self {
        Self {
            obstacles: Vec::new(),
            bounds,
            security_hull: 0.0,
        }
    }

    pub fn security_hull(&self) -> f64 {
        self.security_hull
    }

    pub fn with_obstacles(&self, obstacles: Vec<Obstacle>) -> Self {
        Self {
            obstacles,
            ..self.clone()
        }
    }

    pub fn with_security_hull(&self, delta: f64) -> Result<Self> {
        Self::new(self.obstacles.clone(), self.bounds, delta)
    }

    /// Obstacle shapes as seen by the collision queries.
    pub fn inflated_shapes(&self) -> impl Iterator<Item = Shape> + '_ {
        self.obstacles
            .iter()
            .map(|o| o.shape.grown(self.security_hull))
    }

    pub fn point_collides(&self, p: &Vector3<f64>) -> bool {
        self.inflated_shapes().any(|s| s.contains(p))
    }
}

pub fn segment_collides(p0: &Vector3<f64>, p1: &Vector3<f64>, w: &WorldState) -> bool {
    w.inflated_shapes()
        .any(|s| s.clip_segment(p0, p1).is_some())
}

/// The eight skeleton links as (name, start point, end point) indices into
/// [`ControlPoints`].
pub const LINKS: [(char, usize, usize); 8] = [
    ('a', ControlPoints::BASE, ControlPoints::WAIST),
    ('b', ControlPoints::WAIST, ControlPoints::RIGHT_SHOULDER),
    ('c', ControlPoints::WAIST, ControlPoints::LEFT_SHOULDER),
    (
        'd',
        ControlPoints::RIGHT_SHOULDER,
        ControlPoints::LEFT_SHOULDER,
    ),
    (
        'e',
        ControlPoints::RIGHT_SHOULDER,
        ControlPoints::RIGHT_ELBOW,
    ),
    ('f', ControlPoints::RIGHT_ELBOW, ControlPoints::RIGHT_WRIST),
    ('g', ControlPoints::LEFT_SHOULDER, ControlPoints::LEFT_ELBOW),
    ('h', ControlPoints::LEFT_ELBOW, ControlPoints::LEFT_WRIST),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPose {
    pub points: ControlPoints,
    pub links: [(Vector3<f64>, Vector3<f64>); 8],
}

impl SkeletonPose {
    pub fn from_points(points: ControlPoints) -> Self {
        let links = LINKS.map(|(_, i, j)| (points.0[i], points.0[j]));
        Self { points, links }
    }

    pub fn link_lengths(&self) -> [f64; 8] {
        self.links.map(|(p, q)| (q - p).norm())
    }
}

pub fn skeleton(model: &RobotModel, pose: &GeneralizedPose) -> SkeletonPose {
    SkeletonPose::from_points(forward_kinematics(model, pose).control_points)
}

pub fn pose_collides(model: &RobotModel, pose: &GeneralizedPose, w: &WorldState) -> bool {
    if w.obstacles.is_empty() {
        return false;
    }
    skeleton(model, pose)
        .links
        .iter()
        .any(|(p, q)| segment_collides(p, q, w))
}

/// Colliding length of one segment: the measure of the union of its clipped
/// intervals against every inflated obstacle.
pub fn colliding_length(p0: &Vector3<f64>, p1: &Vector3<f64>, w: &WorldState) -> f64 {
    let mut spans: Vec<(f64, f64)> = w
        .inflated_shapes()
        .filter_map(|s| s.clip_segment(p0, p1))
        .collect();
    if spans.is_empty() {
        return 0.0;
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut covered = 0.0;
    let (mut lo, mut hi) = spans[0];
    for &(a, b) in &spans[1..] {
        if a > hi {
            covered += hi - lo;
            lo = a;
            hi = b;
        } else {
            hi = hi.max(b);
        }
    }
    covered += hi - lo;
    covered * (p1 - p0).norm()
}

/// Fraction of total skeleton length lying inside inflated obstacles.
pub fn collision_fraction(model: &RobotModel, pose: &GeneralizedPose, w: &WorldState) -> f64 {
    if w.obstacles.is_empty() {
        return 0.0;
    }
    let sk = skeleton(model, pose);
    let total: f64 = sk.link_lengths().iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let hit: f64 = sk
        .links
        .iter()
        .map(|(p, q)| colliding_length(p, q, w))
        .sum();
    (hit / total).clamp(0.0, 1.0)
}

/// Default edge-validation step in normalized path parameter.
pub const DEFAULT_EDGE_STEP: f64 = 0.02;

/// Number of sub-intervals used for an edge at `step`. Powers of two keep the
/// sample sets nested, so refining the step never loses a detection.
pub fn edge_subdivisions(step: f64) -> usize {
    let n = (1.0 / step).ceil().max(1.0) as usize;
    n.next_power_of_two()
}

pub fn lerp_pose(from: &GeneralizedPose, to: &GeneralizedPose, s: f64) -> GeneralizedPose {
    let a = from.to_array();
    let b = to.to_array();
    let mut q = [0.0; DOF];
    for i in 0..DOF {
        q[i] = a[i] + s * (b[i] - a[i]);
    }
    GeneralizedPose::from_slice(&q).expect("fixed length")
}

pub fn config_edge_collides(
    model: &RobotModel,
    from: &GeneralizedPose,
    to: &GeneralizedPose,
    w: &WorldState,
    step: f64,
) -> Result<bool> {
    if !(step > 0.0) {
        return Err(Error::invalid(format!(
            "edge step must be positive, got {step}"
        )));
    }
    if pose_collides(model, from, w) || pose_collides(model, to, w) {
        return Ok(true);
    }
    if from == to {
        return Ok(false);
    }
    let n = edge_subdivisions(step);
    Ok((1..n).any(|k| pose_collides(model, &lerp_pose(from, to, k as f64 / n as f64), w)))
}
