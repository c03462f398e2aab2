//! Offline base planning: BiRRT with gradient descent, node rejection and
//! node adjustment, then the rotate-and-translate motion.

use mdams::planner::{node_adjustment, node_rejection, plan, BaseSpace};
use mdams::scenario::bundled;
use mdams::trajectory::base_motion_plan;

fn main() -> mdams::Result<()> {
    let sc = bundled("chair_a")?;
    let spec = sc.plan.as_ref().expect("chair scene has a plan task");
    let space = BaseSpace::from_world(&sc.world, sc.model.skeleton.base_com_height);
    let cfg = sc.planner.clone().with_seed(7);

    let result = plan(&spec.start, &spec.goal, &space, &cfg)?;
    let raw = result.path;
    let pre = node_rejection(&raw, &space, &cfg);
    let opt = node_adjustment(&pre, &space, &cfg);
    println!(
        "{} iterations ({} random, {} descent)",
        result.stats.iterations, result.stats.birrt_calls, result.stats.grad_calls
    );
    for (name, p) in [("raw", &raw), ("pre-optimal", &pre), ("optimal", &opt)] {
        println!(
            "{name:>12}: {:>2} waypoints, length {:.3} m",
            p.len(),
            p.total_length
        );
    }

    let motion = base_motion_plan(
        &opt.waypoints,
        spec.phi_start,
        spec.phi_goal,
        spec.t_start,
        spec.t_end,
        &spec.motion(),
    )?;
    for p in &motion.primitives {
        println!("{p:?}");
    }
    Ok(())
}
