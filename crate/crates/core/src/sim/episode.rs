use serde::{Deserialize, Serialize};

use super::{Features, ObjectState, SimError, Vec2, World, WorldConfig};

/// Penalty per second of horizon lost to an early stop.
pub const EARLY_STOP_PENALTY: f64 = 50.0;

/// A decentralized controller sees only its own robot's features.
pub trait Controller {
    fn voltage(&self, features: &Features) -> f64;
}

impl<F> Controller for F
where
    F: Fn(&Features) -> f64,
{
    fn voltage(&self, features: &Features) -> f64 {
        self(features)
    }
}

/// The object always starts at the origin at rest; only the target varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub target: Vec2,
}

impl Scenario {
    pub fn new(x: f64, y: f64) -> Self {
        Self { target: Vec2::new(x, y) }
    }

    pub fn validate(&self, cfg: &WorldConfig) -> Result<(), SimError> {
        if !self.target.is_finite() || self.target.norm() >= cfg.anchor_radius {
            return Err(SimError::InvalidConfig(format!(
                "target {:?} must lie strictly inside radius {}",
                self.target, cfg.anchor_radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    CableBreak,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::CableBreak => "cable_break",
        }
    }
}

/// One sample per integration step, `t = 0` included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub object: ObjectState,
    pub dist: f64,
}

/// Time-stamped episode record. Per-robot columns are stored flat, one row of
/// `n_robots` values per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_robots: usize,
    pub target: Vec2,
    pub samples: Vec<Sample>,
    voltages: Vec<f64>,
    free_lengths: Vec<f64>,
    pub t_end: f64,
    pub terminated_by: Termination,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Voltages applied during the step that starts at sample `k`. The last
    /// sample repeats what the controllers asked for at that instant.
    pub fn voltages(&self, k: usize) -> &[f64] {
        &self.voltages[k * self.n_robots..(k + 1) * self.n_robots]
    }

    pub fn free_lengths(&self, k: usize) -> &[f64] {
        &self.free_lengths[k * self.n_robots..(k + 1) * self.n_robots]
    }

    pub fn final_position(&self) -> Vec2 {
        self.samples.last().map(|s| s.object.position).unwrap_or_default()
    }

    /// Physical world at sample `k`, rebuilt from the record.
    pub fn world_at(&self, k: usize, cfg: &WorldConfig) -> Result<World, SimError> {
        let mut world = World::new(cfg)?;
        world.object = self.samples[k].object;
        world.free_lengths.copy_from_slice(self.free_lengths(k));
        Ok(world)
    }
}

fn sample(t: f64, world: &World, target: Vec2) -> Sample {
    Sample {
        t,
        object: world.object,
        dist: (world.object.position - target).norm(),
    }
}

/// Simulate from rest at the origin until the horizon or the first cable
/// break. Robot `i` is driven by `controllers[i]`, which receives only
/// robot `i`'s features.
pub fn run_episode<C: Controller>(
    controllers: &[C],
    scenario: &Scenario,
    cfg: &WorldConfig,
) -> Result<Trajectory, SimError> {
    let n = cfg.n_robots;
    if controllers.len() != n {
        return Err(SimError::InvalidConfig(format!(
            "expected {n} controllers, got {}",
            controllers.len()
        )));
    }
    let target = scenario.target;
    let mut world = World::new(cfg)?;
    let steps = cfg.horizon_steps();

    let mut samples = Vec::with_capacity(steps + 1);
    let mut voltages = Vec::with_capacity((steps + 1) * n);
    let mut free_lengths = Vec::with_capacity((steps + 1) * n);
    let mut command = vec![0.0; n];

    let decide = |world: &World, command: &mut [f64]| -> Result<(), SimError> {
        for (i, (v, controller)) in command.iter_mut().zip(controllers).enumerate() {
            let features = world.perceive(target, i)?;
            let out = controller.voltage(&features);
            if !out.is_finite() {
                return Err(SimError::ControllerFault { robot: i, value: out });
            }
            *v = out.clamp(-cfg.v_max, cfg.v_max);
        }
        Ok(())
    };

    let mut terminated_by = Termination::Horizon;
    let mut last_step = 0;
    samples.push(sample(0.0, &world, target));
    free_lengths.extend_from_slice(&world.free_lengths);
    for k in 1..=steps {
        decide(&world, &mut command)?;
        voltages.extend_from_slice(&command);
        world.step(&command, cfg)?;
        let t = k as f64 * cfg.dt;
        samples.push(sample(t, &world, target));
        free_lengths.extend_from_slice(&world.free_lengths);
        last_step = k;
        let broke = world
            .anchors
            .iter()
            .any(|a| (*a - world.object.position).norm() > cfg.break_length);
        if broke {
            terminated_by = Termination::CableBreak;
            break;
        }
    }
    // Final row: what the controllers would command at the last instant.
    // A fault here only affects the record, so fall back to zeros.
    if decide(&world, &mut command).is_err() {
        command.iter_mut().for_each(|v| *v = 0.0);
    }
    voltages.extend_from_slice(&command);

    let t_end = match terminated_by {
        Termination::Horizon => (last_step as f64 * cfg.dt).min(cfg.horizon_t),
        Termination::CableBreak => last_step as f64 * cfg.dt,
    };
    Ok(Trajectory {
        n_robots: n,
        target,
        samples,
        voltages,
        free_lengths,
        t_end,
        terminated_by,
    })
}

/// Trapezoidal integral of the distance to target, plus the early-stop
/// penalty `50 (T - t_end)`.
pub fn episode_cost(traj: &Trajectory, cfg: &WorldConfig) -> f64 {
    let integral: f64 = traj
        .samples
        .windows(2)
        .map(|w| 0.5 * (w[0].dist + w[1].dist) * (w[1].t - w[0].t))
        .sum();
    integral + EARLY_STOP_PENALTY * (cfg.horizon_t - traj.t_end).max(0.0)
}

/// Earliest time after which every recorded distance stays within
/// `success_eps`, provided that tail lasts at least `success_hold`.
/// Success additionally requires the episode to have run to the horizon.
pub fn settle_and_success(traj: &Trajectory, cfg: &WorldConfig) -> (Option<f64>, bool) {
    let tail_start = traj
        .samples
        .iter()
        .rposition(|s| s.dist > cfg.success_eps)
        .map_or(0, |k| k + 1);
    let settle_time = traj
        .samples
        .get(tail_start)
        .map(|s| s.t)
        // tolerance absorbs k·dt rounding in the hold comparison
        .filter(|&t| traj.t_end - t >= cfg.success_hold - 1e-9);
    let success = settle_time.is_some() && traj.terminated_by == Termination::Horizon;
    (settle_time, success)
}

/// Episode summary used by trainers and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub cost: f64,
    pub settle_time: Option<f64>,
    pub success: bool,
    pub t_end: f64,
    pub terminated_by: Termination,
}

impl EpisodeOutcome {
    pub fn of(traj: &Trajectory, cfg: &WorldConfig) -> Self {
        let (settle_time, success) = settle_and_success(traj, cfg);
        Self {
            cost: episode_cost(traj, cfg),
            settle_time,
            success,
            t_end: traj.t_end,
            terminated_by: traj.terminated_by,
        }
    }
}
