use mdams::geometry::{Aabb, Obstacle, Shape, WorldState};
use mdams::online::{
    obs_estim, predict_position, run_online, CycleConfig, ObstacleScript, ObstacleTrack,
    OnlineConfig, OnlineScenario, Teleport,
};
use mdams::trajectory::{heading_angles, segment_durations};
use nalgebra::Vector3;
use proptest::prelude::*;

fn dyadic() -> impl Strategy<Value = f64> {
    (-64i32..64).prop_map(|k| k as f64 / 16.0)
}

proptest! {
    #[test]
    fn durations_cover_the_horizon(
        pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..12),
        t0 in 0.0..10.0f64,
        span in 0.5..50.0f64,
    ) {
        let w: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
        prop_assume!(w.windows(2).any(|s| s[0] != s[1]));
        let d = segment_durations(&w, t0, t0 + span).unwrap();
        prop_assert_eq!(d.len(), w.len() - 1);
        prop_assert!(d.iter().all(|&x| x >= 0.0));
        prop_assert!((d.iter().sum::<f64>() - span).abs() <= 1e-12 * span.max(1.0));
        let heads = heading_angles(&w, 0.0, 1.0).unwrap();
        prop_assert_eq!(heads.len(), w.len() + 1);
    }

    #[test]
    fn steady_obstacles_are_predicted_exactly(
        p0 in (dyadic(), dyadic()),
        v in (dyadic(), dyadic()),
        samples in 2usize..8,
    ) {
        let cfg = CycleConfig::default();
        let v = Vector3::new(v.0, v.1, 0.0);
        let at = |t: f64| Vector3::new(p0.0, p0.1, 0.25) + v * t;
        let mut track = ObstacleTrack::new("o", cfg.m_o);
        for k in 0..samples {
            track.push(k as f64 * cfg.dt_s, at(k as f64 * cfg.dt_s)).unwrap();
        }
        let est = obs_estim(&track, &cfg);
        prop_assert!(est.sufficient);
        prop_assert_eq!(est.velocity, v);
        let now = (samples - 1) as f64 * cfg.dt_s;
        for dt in [0.5, 1.0, 1.5, 2.0] {
            prop_assert_eq!(predict_position(&track, &est.velocity, dt, &cfg).unwrap(), at(now + dt));
        }
    }
}

#[test]
fn a_teleport_onto_the_route_never_goes_unrecorded() {
    let bounds = Aabb {
        min: Vector3::new(0.0, 0.0, 0.0),
        max: Vector3::new(8.0, 4.0, 2.0),
    };
    let cube = Obstacle::fixed(
        "cube",
        Shape::Box {
            center: Vector3::new(7.0, 3.5, 0.25),
            half_extents: Vector3::new(0.25, 0.25, 0.25),
        },
    )
    .unwrap();
    let world = WorldState::new(vec![cube], bounds, 0.3).unwrap();
    for t_jump in [1.0, 2.5, 4.0, 5.5] {
        let scenario = OnlineScenario {
            world: world.clone(),
            scripts: vec![ObstacleScript {
                id: "cube".into(),
                mean_velocity: [0.0, 0.0, 0.0],
                jitter: 0.0,
                v_max: 0.5,
                teleports: vec![Teleport {
                    t: t_jump,
                    to: [0.5 + 0.5 * t_jump, 1.0, 0.25],
                }],
            }],
            start: [0.5, 1.0, 0.0],
            goal: [7.0, 1.0],
            goal_heading: None,
            base_height: 0.131,
            seed: 0,
        };
        match run_online(&scenario, &OnlineConfig::default()) {
            Ok(log) => assert!(
                log.goal_reached && (log.collisions > 0 || !log.replans.is_empty()),
                "jump at {t_jump}: neither avoided nor recorded"
            ),
            Err(e) => assert!(matches!(e, mdams::Error::OnlineAbort { .. }), "{e}"),
        }
    }
}
