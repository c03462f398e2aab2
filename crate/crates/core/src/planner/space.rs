//! Planning state spaces: the base plane, stacked dual-EE positions and the
//! full generalized pose.

use nalgebra::Vector3;

use crate::geometry::{config_edge_collides, pose_collides, segment_collides, WorldState};
use crate::kinematics::{GeneralizedPose, RobotModel};

/// A bounded Euclidean state space with collision queries.
pub trait ConfigSpace: Sync {
    fn bounds(&self) -> &[(f64, f64)];

    fn dim(&self) -> usize {
        self.bounds().len()
    }

    fn is_free(&self, q: &[f64]) -> bool;

    /// True when the straight edge `a -> b` is collision-free. `step` is the
    /// sampling resolution for spaces that cannot test edges analytically.
    fn edge_free(&self, a: &[f64], b: &[f64], step: f64) -> bool;

    fn in_bounds(&self, q: &[f64]) -> bool {
        q.len() == self.dim()
            && q.iter()
                .zip(self.bounds())
                .all(|(v, (lo, hi))| (*lo..=*hi).contains(v))
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Base position `(x, y)`; the base is a point at fixed height tested against
/// obstacles grown by the security hull, which absorbs the base radius.
#[derive(Debug, Clone)]
pub struct BaseSpace<'a> {
    pub world: &'a WorldState,
    pub height: f64,
    bounds: [(f64, f64); 2],
}

impl<'a> BaseSpace<'a> {
    pub fn new(world: &'a WorldState, height: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            world,
            height,
            bounds: [x, y],
        }
    }

    /// Planar bounds taken from the world box.
    pub fn from_world(world: &'a WorldState, height: f64) -> Self {
        let b = &world.bounds;
        Self::new(world, height, (b.min.x, b.max.x), (b.min.y, b.max.y))
    }

    fn lift(&self, q: &[f64]) -> Vector3<f64> {
        Vector3::new(q[0], q[1], self.height)
    }
}

impl ConfigSpace for BaseSpace<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn is_free(&self, q: &[f64]) -> bool {
        self.in_bounds(q) && !self.world.point_collides(&self.lift(q))
    }

    fn edge_free(&self, a: &[f64], b: &[f64], _step: f64) -> bool {
        self.is_free(a)
            && self.is_free(b)
            && !segment_collides(&self.lift(a), &self.lift(b), self.world)
    }
}

/// Right and left EE positions stacked as `(x_R, x_L)`.
#[derive(Debug, Clone)]
pub struct DualEeSpace<'a> {
    pub world: &'a WorldState,
    bounds: [(f64, f64); 6],
}

impl<'a> DualEeSpace<'a> {
    pub fn new(world: &'a WorldState, bounds: [(f64, f64); 6]) -> Self {
        Self { world, bounds }
    }

    /// Both EEs bounded by the world box.
    pub fn from_world(world: &'a WorldState) -> Self {
        let b = &world.bounds;
        let axis = [(b.min.x, b.max.x), (b.min.y, b.max.y), (b.min.z, b.max.z)];
        let mut bounds = [(0.0, 0.0); 6];
        bounds[..3].copy_from_slice(&axis);
        bounds[3..].copy_from_slice(&axis);
        Self::new(world, bounds)
    }
}

fn point(q: &[f64], k: usize) -> Vector3<f64> {
    Vector3::new(q[3 * k], q[3 * k + 1], q[3 * k + 2])
}

impl ConfigSpace for DualEeSpace<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn is_free(&self, q: &[f64]) -> bool {
        self.in_bounds(q) && (0..2).all(|k| !self.world.point_collides(&point(q, k)))
    }

    fn edge_free(&self, a: &[f64], b: &[f64], _step: f64) -> bool {
        self.is_free(a)
            && self.is_free(b)
            && (0..2).all(|k| !segment_collides(&point(a, k), &point(b, k), self.world))
    }
}

/// The 19-D generalized pose, checked through the link skeleton.
#[derive(Debug, Clone)]
pub struct JointSpace<'a> {
    pub model: &'a RobotModel,
    pub world: &'a WorldState,
    bounds: Vec<(f64, f64)>,
}

impl<'a> JointSpace<'a> {
    pub fn new(model: &'a RobotModel, world: &'a WorldState) -> Self {
        Self {
            model,
            world,
            bounds: model.limits(),
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }
}

impl ConfigSpace for JointSpace<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn is_free(&self, q: &[f64]) -> bool {
        match GeneralizedPose::from_slice(q) {
            Ok(p) => self.in_bounds(q) && !pose_collides(self.model, &p, self.world),
            Err(_) => false,
        }
    }

    fn edge_free(&self, a: &[f64], b: &[f64], step: f64) -> bool {
        let (Ok(pa), Ok(pb)) = (
            GeneralizedPose::from_slice(a),
            GeneralizedPose::from_slice(b),
        ) else {
            return false;
        };
        self.in_bounds(a)
            && self.in_bounds(b)
            && matches!(
                config_edge_collides(self.model, &pa, &pb, self.world, step),
                Ok(false)
            )
    }
}
