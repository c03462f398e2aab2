//! Segment timing, head-forward headings and blended interpolation.

use mdams::trajectory::{
    base_motion_plan, heading_angles, segment_durations, BaseMotionConfig, PolyBlend,
};

fn main() -> mdams::Result<()> {
    let path = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![3.0, 2.0]];
    let durations = segment_durations(&path, 0.0, 6.0)?;
    println!("durations {durations:.3?}");
    let heads = heading_angles(&path, 0.0, std::f64::consts::FRAC_PI_2)?;
    println!("headings {heads:.3?}");

    let blend = PolyBlend::new(&path, &durations, 0.0, 0.2)?;
    for t in [0.0, 1.5, 2.0, 4.0, 6.0] {
        println!("t = {t:.1}: {:.3?}", blend.eval(t));
    }

    let motion = base_motion_plan(&path, 0.0, 1.0, 0.0, 10.0, &BaseMotionConfig::default())?;
    let traj = motion.sample(0.5)?;
    for s in traj.samples.iter().step_by(4) {
        println!(
            "t = {:>4.1}: x {:.3} y {:.3} phi {:.3}",
            s.t, s.q[0], s.q[1], s.q[2]
        );
    }
    Ok(())
}
