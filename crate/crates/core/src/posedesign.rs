//! Whole-body goal-pose design as an evolutionary problem.

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolveResult, GaConfig, Problem};
use crate::geometry::{Shape, WorldState};
use crate::kinematics::{GeneralizedPose, RobotModel, DOF};
use crate::objectives::{pose_objectives, PoseTask};

/// Planar search box for the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
    /// Heading interval; the model's limits when `None`.
    pub phi: Option<(f64, f64)>,
}

/// Pushes a base position out of every obstacle footprint met at height `z`,
/// each grown by the world's security hull. A few sweeps settle overlaps.
pub fn push_out_of_footprints(p: Vector2<f64>, z: f64, world: &WorldState) -> Vector2<f64> {
    let mut p = p;
    for _ in 0..8 {
        let mut moved = false;
        for shape in world.inflated_shapes() {
            if let Some(q) = push_out(&shape, p, z) {
                p = q;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    p
}

const PUSH_MARGIN: f64 = 1e-6;

fn push_out(shape: &Shape, p: Vector2<f64>, z: f64) -> Option<Vector2<f64>> {
    if !shape.contains(&Vector3::new(p.x, p.y, z)) {
        return None;
    }
    match *shape {
        Shape::Box {
            center,
            half_extents,
        } => {
            let dx = p.x - center.x;
            let dy = p.y - center.y;
            let gap_x = half_extents.x - dx.abs();
            let gap_y = half_extents.y - dy.abs();
            let sign = |d: f64| if d < 0.0 { -1.0 } else { 1.0 };
            Some(if gap_x <= gap_y {
                Vector2::new(center.x + sign(dx) * (half_extents.x + PUSH_MARGIN), p.y)
            } else {
                Vector2::new(p.x, center.y + sign(dy) * (half_extents.y + PUSH_MARGIN))
            })
        }
        Shape::Cylinder { center, radius, .. } => Some(radial(p, center, radius)),
        Shape::Sphere { center, radius } => {
            let dz = z - center.z;
            let r = (radius * radius - dz * dz).max(0.0).sqrt();
            Some(radial(p, center, r))
        }
    }
}

fn radial(p: Vector2<f64>, c: Vector3<f64>, r: f64) -> Vector2<f64> {
    let c = Vector2::new(c.x, c.y);
    let d = p - c;
    let dir = if d.norm() > 1e-12 {
        d / d.norm()
    } else {
        Vector2::new(1.0, 0.0)
    };
    c + dir * (r + PUSH_MARGIN)
}

/// f1..f5 over the 19-gene pose chromosome.
#[derive(Debug, Clone)]
pub struct PoseProblem<'a> {
    pub model: &'a RobotModel,
    pub task: &'a PoseTask,
    /// When set, base positions are repaired out of obstacle footprints.
    pub world: Option<&'a WorldState>,
    bounds: Vec<(f64, f64)>,
}

impl<'a> PoseProblem<'a> {
    pub fn new(
        model: &'a RobotModel,
        task: &'a PoseTask,
        world: Option<&'a WorldState>,
        base: BaseBounds,
    ) -> Result<Self> {
        let mut bounds = model.limits();
        for (k, (lo, hi)) in [base.x, base.y].into_iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::invalid("base search box must have max > min"));
            }
            bounds[k] = (lo.max(bounds[k].0), hi.min(bounds[k].1));
        }
        if let Some((lo, hi)) = base.phi {
            if !(hi > lo) {
                return Err(Error::invalid("heading interval must have max > min"));
            }
            bounds[2] = (lo, hi);
        }
        Ok(Self {
            model,
            task,
            world,
            bounds,
        })
    }
}

impl Problem for PoseProblem<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn n_objectives(&self) -> usize {
        5
    }

    fn evaluate(&self, genes: &[f64]) -> Result<Vec<f64>> {
        let pose = GeneralizedPose::from_slice(genes)?;
        Ok(pose_objectives(self.model, &pose, self.task).to_vec())
    }

    fn repair(&self, genes: &mut [f64]) {
        if let Some(w) = self.world {
            let p = push_out_of_footprints(
                Vector2::new(genes[0], genes[1]),
                self.model.skeleton.base_com_height,
                w,
            );
            genes[0] = p.x;
            genes[1] = p.y;
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoseDesign {
    pub pose: GeneralizedPose,
    pub objectives: [f64; 5],
    pub run: EvolveResult,
}

pub fn design_pose(
    model: &RobotModel,
    task: &PoseTask,
    world: Option<&WorldState>,
    base: BaseBounds,
    cfg: &GaConfig,
) -> Result<PoseDesign> {
    let problem = PoseProblem::new(model, task, world, base)?;
    let run = evolve(&problem, cfg)?;
    let pose = GeneralizedPose::from_slice(&run.best.chromosome)?;
    let mut objectives = [0.0; 5];
    objectives.copy_from_slice(&run.best.objectives);
    debug_assert_eq!(run.best.chromosome.len(), DOF);
    Ok(PoseDesign {
        pose,
        objectives,
        run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Obstacle};

    fn world() -> WorldState {
        let b = Obstacle::fixed(
            "box",
            Shape::Box {
                center: Vector3::new(1.0, 0.0, 0.3),
                half_extents: Vector3::new(0.25, 0.25, 0.3),
            },
        )
        .unwrap();
        let c = Obstacle::fixed(
            "cyl",
            Shape::Cylinder {
                center: Vector3::new(-2.0, 0.0, 0.5),
                radius: 0.2,
                half_height: 0.5,
            },
        )
        .unwrap();
        let bounds = Aabb {
            min: Vector3::new(-5.0, -5.0, -1.0),
            max: Vector3::new(5.0, 5.0, 3.0),
        };
        WorldState::new(vec![b, c], bounds, 0.3).unwrap()
    }

    #[test]
    fn push_out_leaves_free_points_alone() {
        let w = world();
        let p = Vector2::new(3.0, 3.0);
        assert_eq!(push_out_of_footprints(p, 0.131, &w), p);
    }

    #[test]
    fn push_out_moves_to_nearest_face() {
        let w = world();
        let q = push_out_of_footprints(Vector2::new(1.5, 0.1), 0.131, &w);
        assert!((q.x - 1.55).abs() < 1e-5 && q.y == 0.1);
        let r = push_out_of_footprints(Vector2::new(-2.0, 0.2), 0.131, &w);
        assert!(((r - Vector2::new(-2.0, 0.0)).norm() - 0.5).abs() < 1e-5);
    }
}
