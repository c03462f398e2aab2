//! Whole-body pose design at the chair scene with the improved evolver.

use mdams::kinematics::forward_kinematics;
use mdams::posedesign::design_pose;
use mdams::scenario::bundled;

fn main() -> mdams::Result<()> {
    let sc = bundled("chair_a")?;
    let spec = sc.pose.as_ref().expect("chair scene has a pose task");
    let task = spec.task(&sc.model)?;
    let ga = sc
        .ga
        .as_ref()
        .expect("chair scene has GA settings")
        .config(0)?;
    let d = design_pose(&sc.model, &task, Some(&sc.world), spec.base_bounds(), &ga)?;

    let b = d.pose.base;
    println!("base ({:.3}, {:.3}) heading {:.3} rad", b.x, b.y, b.phi);
    println!("objectives f1..f5 {:.4?}", d.objectives);
    let fk = forward_kinematics(&sc.model, &d.pose);
    println!(
        "right palm {:.3?} target {:?}",
        fk.x_right().as_slice(),
        spec.x_rd
    );
    println!(
        "left palm  {:.3?} target {:?}",
        fk.x_left().as_slice(),
        spec.x_ld
    );
    println!("front size {}", d.run.pareto_set.len());
    for row in d.run.history.rows.iter().step_by(20) {
        println!(
            "gen {:>3} best so far {:.4}",
            row.generation, row.best_so_far
        );
    }
    Ok(())
}
