//! Palm via-points around the crate, then one whole-body pose per via-point.

use mdams::scenario::bundled;
use mdams::viapose::{design_via_points, optimize_via_poses};

fn main() -> mdams::Result<()> {
    let sc = bundled("table_dual")?;
    let spec = sc.via.as_ref().expect("table scene has via-point ends");
    let via = design_via_points(&spec.start(), &spec.goal(), &sc.world, &sc.planner)?;
    for (i, v) in via.iter().enumerate() {
        println!(
            "via {i}: right {:.3?} left {:.3?}",
            v.right.as_slice(),
            v.left.as_slice()
        );
    }

    let ga = sc
        .ga
        .as_ref()
        .expect("table scene has GA settings")
        .config(0)?;
    let d = optimize_via_poses(&sc.model, &sc.world, &via, &spec.initial_pose()?, &ga)?;
    println!("fa fb fc fd {:.4?}, feasible {}", d.objectives, d.feasible);
    for (p, (r, l)) in d.poses.iter().zip(d.reached(&sc.model)) {
        println!(
            "base ({:.3}, {:.3}, {:.3}) palms {:.3?} {:.3?}",
            p.base.x,
            p.base.y,
            p.base.phi,
            r.as_slice(),
            l.as_slice()
        );
    }
    Ok(())
}
