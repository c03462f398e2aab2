//! Online navigation past a moving cuboid with sensing, control and
//! collision-test cycles.

use mdams::online::{run_online, ReplanReason};
use mdams::scenario::bundled;

fn main() -> mdams::Result<()> {
    let sc = bundled("nav_dyn")?;
    let seed = 3;
    let log = run_online(
        &sc.online_scenario(seed)?,
        &sc.online_config(seed, Some(10.0)),
    )?;
    println!("initial path {:?}", log.initial_path);
    for r in &log.replans {
        let hit = r
            .predicted_hit
            .map_or("-".to_string(), |h| format!("{h:.2} s"));
        let kind = match r.reason {
            ReplanReason::Predicted => "predicted",
            ReplanReason::Sudden => "sudden",
            ReplanReason::Resume => "resume",
        };
        println!(
            "t {:>5.1}: {kind} replan, hit at {hit}, switch at {:.1} s from ({:.2}, {:.2})",
            r.t, r.switch_at, r.from[0], r.from[1]
        );
    }
    println!(
        "goal reached {} at {:.1} s, {} contacts, prediction error up to {:.3} m",
        log.goal_reached, log.finish_time, log.collisions, log.max_prediction_error
    );
    Ok(())
}
