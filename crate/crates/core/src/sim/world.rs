use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{SimError, Vec2, WorldConfig};

/// Closer than this to an anchor, the cable direction is undefined.
pub const GEOMETRY_EPS: f64 = 1e-9;

/// Robot anchor points on a regular polygon; vertex `k` sits at angle
/// `2πk/n` from the +x axis.
pub fn regular_polygon_anchors(n: usize, radius: f64) -> Result<Vec<Vec2>, SimError> {
    if n < 2 {
        return Err(SimError::InvalidConfig(format!("need at least 2 anchors, got {n}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(SimError::InvalidConfig(format!("anchor radius must be > 0, got {radius}")));
    }
    Ok((0..n)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect())
}

/// Tension magnitude of an elastic cable: `k (d - ℓ)` when stretched, zero
/// when slack.
pub fn cable_tension(distance_d: f64, free_length_ell: f64, stiffness_k: f64) -> f64 {
    if distance_d > free_length_ell {
        stiffness_k * (distance_d - free_length_ell)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectState {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Instantaneous geometry and load of one cable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableReading {
    pub distance: f64,
    /// Unit vector from the object toward the robot.
    pub direction: Vec2,
    pub free_length: f64,
    pub tension: f64,
}

impl CableReading {
    pub fn is_taut(&self) -> bool {
        self.tension > 0.0
    }
}

/// What a single robot can observe; nothing here depends on any other
/// robot's state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Features {
    /// Object distance from the robot minus target distance from the robot.
    pub rho: f64,
    /// Signed angle from robot→target to robot→object, in (−π, π].
    pub phi: f64,
    pub vbx: f64,
    pub vby: f64,
}

impl Features {
    pub const fn new(rho: f64, phi: f64, vbx: f64, vby: f64) -> Self {
        Self { rho, phi, vbx, vby }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.phi, self.vbx, self.vby]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Object position, velocity, and each robot's cable free length.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub anchors: Vec<Vec2>,
    pub object: ObjectState,
    pub free_lengths: Vec<f64>,
}

impl World {
    /// Object at the origin at rest, every cable at its natural length.
    pub fn new(cfg: &WorldConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        Ok(Self {
            anchors: regular_polygon_anchors(cfg.n_robots, cfg.anchor_radius)?,
            object: ObjectState::default(),
            free_lengths: vec![cfg.natural_length_l0; cfg.n_robots],
        })
    }

    pub fn cable(&self, robot: usize, stiffness_k: f64) -> Result<CableReading, SimError> {
        let to_robot = self.anchors[robot] - self.object.position;
        let distance = to_robot.norm();
        if distance < GEOMETRY_EPS {
            return Err(SimError::DegenerateGeometry { robot });
        }
        let free_length = self.free_lengths[robot];
        Ok(CableReading {
            distance,
            direction: to_robot * (1.0 / distance),
            free_length,
            tension: cable_tension(distance, free_length, stiffness_k),
        })
    }

    pub fn cables(&self, cfg: &WorldConfig) -> Result<Vec<CableReading>, SimError> {
        (0..self.anchors.len()).map(|i| self.cable(i, cfg.stiffness_k)).collect()
    }

    /// Net spring force plus viscous damping, divided by the object mass.
    pub fn object_acceleration(&self, cfg: &WorldConfig) -> Result<Vec2, SimError> {
        let mut force = self.object.velocity * -cfg.damping_c;
        for i in 0..self.anchors.len() {
            let cable = self.cable(i, cfg.stiffness_k)?;
            force += cable.direction * cable.tension;
        }
        Ok(force * (1.0 / cfg.object_mass_m))
    }

    /// Advance one `dt`. Voltages beyond `±v_max` are clamped. Forces are
    /// evaluated at the start of the step; the object moves by semi-implicit
    /// Euler and the free lengths by the reel law.
    pub fn step(&mut self, voltages: &[f64], cfg: &WorldConfig) -> Result<(), SimError> {
        assert_eq!(voltages.len(), self.free_lengths.len(), "one voltage per robot");
        let accel = self.object_acceleration(cfg)?;
        self.object.velocity += accel * cfg.dt;
        self.object.position += self.object.velocity * cfg.dt;
        for (ell, &v) in self.free_lengths.iter_mut().zip(voltages) {
            let v = v.clamp(-cfg.v_max, cfg.v_max);
            *ell = (*ell - cfg.reel_gain * v * cfg.dt).clamp(cfg.ell_min, cfg.ell_max);
        }
        Ok(())
    }

    /// Features seen by `robot` for the given target.
    pub fn perceive(&self, target: Vec2, robot: usize) -> Result<Features, SimError> {
        let anchor = self.anchors[robot];
        let to_object = self.object.position - anchor;
        let to_target = target - anchor;
        let (d_object, d_target) = (to_object.norm(), to_target.norm());
        if d_object < GEOMETRY_EPS || d_target < GEOMETRY_EPS {
            return Err(SimError::DegenerateGeometry { robot });
        }
        let mut phi = to_target.cross(to_object).atan2(to_target.dot(to_object));
        if phi <= -PI {
            phi = PI;
        }
        Ok(Features {
            rho: d_object - d_target,
            phi,
            vbx: self.object.velocity.x,
            vby: self.object.velocity.y,
        })
    }

    pub fn kinetic_energy(&self, cfg: &WorldConfig) -> f64 {
        0.5 * cfg.object_mass_m * self.object.velocity.norm_squared()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn square_anchors_on_axes() {
        let a = regular_polygon_anchors(4, 0.5).unwrap();
        let expected = [(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)];
        for (p, (x, y)) in a.iter().zip(expected) {
            assert!(close(*p, Vec2::new(x, y), TOL), "{p:?}");
        }
    }

    #[test]
    fn triangle_anchors() {
        let a = regular_polygon_anchors(3, 1.5).unwrap();
        assert!(close(a[0], Vec2::new(1.5, 0.0), TOL));
        assert!(close(a[1], Vec2::new(-0.75, 1.299_038_105_676_658), 1e-12));
        assert!(close(a[2], Vec2::new(-0.75, -1.299_038_105_676_658), 1e-12));
    }

    #[test]
    fn pentagon_vertices_are_equidistant_and_evenly_spaced() {
        let a = regular_polygon_anchors(5, 0.5).unwrap();
        for (k, p) in a.iter().enumerate() {
            assert!((p.norm() - 0.5).abs() < TOL);
            let next = a[(k + 1) % 5];
            // side of a regular pentagon with circumradius r is 2 r sin(π/5)
            assert!(((next - *p).norm() - 2.0 * 0.5 * (PI / 5.0).sin()).abs() < TOL);
        }
    }

    #[test]
    fn anchors_reject_bad_arguments() {
        assert!(matches!(regular_polygon_anchors(1, 1.0), Err(SimError::InvalidConfig(_))));
        assert!(matches!(regular_polygon_anchors(3, 0.0), Err(SimError::InvalidConfig(_))));
        assert!(matches!(regular_polygon_anchors(3, -1.0), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn tension_law() {
        assert_eq!(cable_tension(0.9, 1.0, 50.0), 0.0);
        assert!((cable_tension(1.1, 1.0, 50.0) - 5.0).abs() < 1e-12);
        assert_eq!(cable_tension(1.0, 1.0, 50.0), 0.0);
    }

    fn three_robot_cfg() -> WorldConfig {
        WorldConfig { ..WorldConfig::default_preset(3) }
    }

    #[test]
    fn symmetric_tensions_cancel() {
        let cfg = three_robot_cfg();
        let world = World::new(&cfg).unwrap();
        let a = world.object_acceleration(&cfg).unwrap();
        assert!(a.norm() < 1e-12, "{a:?}");
        for c in world.cables(&cfg).unwrap() {
            assert!((c.tension - 25.0).abs() < 1e-12);
        }
    }

    /// Only cable 0 is taut; the others are released to the clamp maximum
    /// and the object sits well inside their reach.
    fn single_cable_world(cfg: &WorldConfig) -> World {
        let mut world = World::new(cfg).unwrap();
        world.object.position = Vec2::new(0.4, 0.0);
        world.free_lengths = vec![1.0, 2.0, 2.0];
        world
    }

    #[test]
    fn single_cable_acceleration() {
        let cfg = three_robot_cfg();
        let world = single_cable_world(&cfg);
        let cables = world.cables(&cfg).unwrap();
        assert_eq!(cables[1].tension, 0.0);
        assert_eq!(cables[2].tension, 0.0);
        let a = world.object_acceleration(&cfg).unwrap();
        assert!(close(a, Vec2::new(10.0, 0.0), 1e-12), "{a:?}");
    }

    #[test]
    fn damping_only_acceleration() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        world.free_lengths = vec![2.0; 3];
        world.object.velocity = Vec2::new(0.2, 0.0);
        let a = world.object_acceleration(&cfg).unwrap();
        assert!(close(a, Vec2::new(-0.4, 0.0), 1e-12), "{a:?}");
    }

    #[test]
    fn degenerate_geometry_at_anchor() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        world.object.position = world.anchors[1];
        assert!(matches!(
            world.object_acceleration(&cfg),
            Err(SimError::DegenerateGeometry { robot: 1 })
        ));
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        let start = world.clone();
        world.step(&[0.0; 3], &cfg).unwrap();
        assert!((world.object.position - start.object.position).norm() < 1e-15);
        assert_eq!(world.free_lengths, start.free_lengths);
    }

    #[test]
    fn reel_law_and_clamp() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        world.step(&[cfg.v_max, 100.0, -cfg.v_max], &cfg).unwrap();
        let delta = cfg.reel_gain * cfg.v_max * cfg.dt;
        assert!((world.free_lengths[0] - (1.0 - delta)).abs() < 1e-15);
        // over-range voltage is clamped to v_max
        assert!((world.free_lengths[1] - (1.0 - delta)).abs() < 1e-15);
        assert!((world.free_lengths[2] - (1.0 + delta)).abs() < 1e-15);

        world.free_lengths[0] = cfg.ell_min + 1e-6;
        world.step(&[cfg.v_max, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(world.free_lengths[0], cfg.ell_min);
    }

    #[test]
    fn first_step_velocity_gain() {
        let cfg = three_robot_cfg();
        let mut world = single_cable_world(&cfg);
        world.step(&[0.0; 3], &cfg).unwrap();
        assert!(close(world.object.velocity, Vec2::new(0.1, 0.0), 1e-12));
    }

    #[test]
    fn perceive_at_target() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        world.object.position = Vec2::new(0.1, -0.2);
        for i in 0..3 {
            let f = world.perceive(Vec2::new(0.1, -0.2), i).unwrap();
            assert!(f.rho.abs() < 1e-15);
            assert_eq!(f.phi, 0.0);
        }
    }

    #[test]
    fn perceive_collinear() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        world.object.position = Vec2::new(0.2, 0.0);
        let f = world.perceive(Vec2::new(0.4, 0.0), 0).unwrap();
        assert!((f.rho - 0.2).abs() < 1e-12);
        assert_eq!(f.phi, 0.0);
    }

    #[test]
    fn perceive_mirror_case_sign() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        world.object.position = Vec2::new(0.0, 0.3);
        world.object.velocity = Vec2::new(0.05, -0.02);
        let f = world.perceive(Vec2::new(0.0, -0.3), 0).unwrap();
        assert!(f.rho.abs() < 1e-12);
        let expected = 2.0 * (0.3f64 / 1.5).atan();
        assert!((f.phi.abs() - expected).abs() < 1e-12);
        // robot→target points below robot→object, so the rotation from the
        // former to the latter is clockwise
        assert!(f.phi < 0.0);
        assert_eq!((f.vbx, f.vby), (0.05, -0.02));
    }

    #[test]
    fn perceive_phi_behind_robot_is_pi() {
        let cfg = three_robot_cfg();
        let mut world = World::new(&cfg).unwrap();
        // object and target on opposite sides of robot 0
        world.object.position = Vec2::new(1.0, 0.0);
        let f = world.perceive(Vec2::new(2.0, 0.0), 0).unwrap();
        assert_eq!(f.phi, PI);
    }
}
