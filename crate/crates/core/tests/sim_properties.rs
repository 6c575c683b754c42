use cablebot_core::sim::*;
use proptest::prelude::*;

fn short(n: usize, horizon: f64) -> WorldConfig {
    WorldConfig { horizon_t: horizon, ..WorldConfig::default_preset(n) }
}

/// A smooth, asymmetric feedback law with a robot-specific twist.
fn law(k: usize, g: f64) -> impl Fn(&Features) -> f64 {
    move |f: &Features| {
        g * f.rho + 0.8 * (k as f64 + 1.0) * f.phi.sin() * f.vby - 3.0 * f.vbx * f.phi.cos() + 0.5 * f.phi
    }
}

/// Same law seen from the x-mirrored world: φ and v_By flip sign.
fn mirrored_law(k: usize, g: f64) -> impl Fn(&Features) -> f64 {
    let base = law(k, g);
    move |f: &Features| base(&Features::new(f.rho, -f.phi, f.vbx, -f.vby))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reflection_across_x_axis_mirrors_the_trajectory(
        x in -0.4f64..0.4, y in -0.4f64..0.4, g in 5.0f64..25.0, n in 3usize..6,
    ) {
        let cfg = short(n, 5.0);
        let direct: Vec<_> = (0..n).map(|k| law(k, g)).collect();
        // Robot j of the mirrored world plays the part of robot (n - j) % n.
        let mirror: Vec<_> = (0..n).map(|j| mirrored_law((n - j) % n, g)).collect();
        let a = run_episode(&direct, &Scenario::new(x, y), &cfg).unwrap();
        let b = run_episode(&mirror, &Scenario::new(x, -y), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.samples.iter().zip(&b.samples) {
            prop_assert!((p.object.position.x - q.object.position.x).abs() < 1e-9);
            prop_assert!((p.object.position.y + q.object.position.y).abs() < 1e-9);
            prop_assert!((p.object.velocity.y + q.object.velocity.y).abs() < 1e-9);
        }
    }

    #[test]
    fn slack_cables_at_rest_are_passive(
        vx in -0.5f64..0.5, vy in -0.5f64..0.5, n in 2usize..6,
    ) {
        let cfg = WorldConfig::default_preset(n);
        let mut world = World::new(&cfg).unwrap();
        world.free_lengths.iter_mut().for_each(|l| *l = cfg.ell_max);
        world.object.velocity = Vec2::new(vx, vy);
        let zeros = vec![0.0; n];
        let mut energy = world.kinetic_energy(&cfg);
        for _ in 0..500 {
            world.step(&zeros, &cfg).unwrap();
            if world.cables(&cfg).unwrap().iter().any(CableReading::is_taut) {
                break;
            }
            let next = world.kinetic_energy(&cfg);
            prop_assert!(next <= energy);
            energy = next;
        }
    }

    #[test]
    fn zero_tension_whenever_slack(gains in proptest::collection::vec(-30.0f64..30.0, 3)) {
        let cfg = short(3, 10.0);
        let ctl: Vec<_> = gains.iter().map(|&g| move |f: &Features| g * f.rho + 4.0 * f.phi).collect();
        let traj = run_episode(&ctl, &Scenario::new(0.2, 0.1), &cfg).unwrap();
        for k in 0..traj.len() {
            let world = traj.world_at(k, &cfg).unwrap();
            for (i, c) in world.cables(&cfg).unwrap().iter().enumerate() {
                prop_assert_eq!(c.free_length, traj.free_lengths(k)[i]);
                if c.distance <= c.free_length {
                    prop_assert_eq!(c.tension, 0.0);
                }
            }
        }
    }

    #[test]
    fn record_count_tracks_end_time(x in -0.4f64..0.4, y in -0.4f64..0.4, g in -40.0f64..40.0) {
        let cfg = short(3, 6.0);
        let ctl: Vec<_> = (0..3).map(|k| law(k, g)).collect();
        let traj = run_episode(&ctl, &Scenario::new(x, y), &cfg).unwrap();
        prop_assert_eq!(traj.len(), (traj.t_end / cfg.dt + 1e-9).floor() as usize + 1);
    }
}

fn open_loop_final(dt: f64) -> Vec2 {
    let cfg = WorldConfig { dt, ..WorldConfig::default_preset(3) };
    let mut world = World::new(&cfg).unwrap();
    let steps = (5.0 / dt).round() as usize;
    for s in 0..steps {
        let t = s as f64 * dt;
        let v: Vec<f64> = (0..3).map(|i| 10.0 * (0.8 * t + 2.0 * i as f64).sin()).collect();
        world.step(&v, &cfg).unwrap();
    }
    world.object.position
}

#[test]
fn halving_dt_barely_moves_the_open_loop_endpoint() {
    let coarse = open_loop_final(0.01);
    let fine = open_loop_final(0.005);
    let drift = (coarse - fine).norm() / fine.norm();
    assert!(fine.norm() > 1e-2, "script should move the object, got {fine:?}");
    assert!(drift < 0.01, "relative drift {drift}");
}

#[test]
fn repeated_runs_are_bit_identical() {
    let cfg = short(4, 8.0);
    let ctl: Vec<_> = (0..4).map(|k| law(k, 15.0)).collect();
    let a = run_episode(&ctl, &Scenario::new(0.3, -0.2), &cfg).unwrap();
    let b = run_episode(&ctl, &Scenario::new(0.3, -0.2), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn symmetric_rest_is_a_fixed_point() {
    for n in 2..7 {
        let cfg = WorldConfig::default_preset(n);
        let mut world = World::new(&cfg).unwrap();
        let zeros = vec![0.0; n];
        for _ in 0..1000 {
            world.step(&zeros, &cfg).unwrap();
        }
        assert!(world.object.position.norm() < 1e-9, "n = {n}: {:?}", world.object.position);
    }
}
