use serde::{Deserialize, Serialize};

use super::SimError;

/// Physical and numerical constants of the N-robot cable world.
///
/// Voltage sign convention: positive voltage reels the cable in, i.e. the
/// free length shrinks at `reel_gain * V` meters per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub n_robots: usize,
    /// Distance of each robot from the workspace center (m).
    pub anchor_radius: f64,
    /// Cable stiffness (N/m).
    pub stiffness_k: f64,
    /// Initial unstretched free length of every cable (m).
    pub natural_length_l0: f64,
    /// Object mass (kg).
    pub object_mass_m: f64,
    /// Viscous damping on the object velocity (N·s/m).
    pub damping_c: f64,
    /// Free-length rate per volt (m/(V·s)).
    pub reel_gain: f64,
    pub v_max: f64,
    pub ell_min: f64,
    pub ell_max: f64,
    /// Stretched cable length beyond which a cable breaks (m).
    pub break_length: f64,
    pub dt: f64,
    pub horizon_t: f64,
    pub success_eps: f64,
    pub success_hold: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self::default_preset(3)
    }
}

impl WorldConfig {
    /// Geometry where cables start taut with 0.5 m of stretch headroom
    /// before the 2 m break length.
    pub fn default_preset(n_robots: usize) -> Self {
        Self {
            n_robots,
            anchor_radius: 1.5,
            stiffness_k: 50.0,
            natural_length_l0: 1.0,
            object_mass_m: 0.5,
            damping_c: 1.0,
            reel_gain: 0.01,
            v_max: 12.0,
            ell_min: 0.2,
            ell_max: 2.0,
            break_length: 2.0,
            dt: 0.01,
            horizon_t: 30.0,
            success_eps: 0.05,
            success_hold: 2.0,
        }
    }

    /// Robots 0.5 m from the center. The free length is scaled down so the
    /// cables start taut; the 2 m break length is kept even though this
    /// geometry can never reach it.
    pub fn paper_text_preset(n_robots: usize) -> Self {
        Self {
            anchor_radius: 0.5,
            natural_length_l0: 0.3,
            ell_min: 0.05,
            ..Self::default_preset(n_robots)
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n_robots < 2 {
            return invalid(format!("n_robots must be >= 2, got {}", self.n_robots));
        }
        let positive = [
            ("anchor_radius", self.anchor_radius),
            ("stiffness_k", self.stiffness_k),
            ("natural_length_l0", self.natural_length_l0),
            ("object_mass_m", self.object_mass_m),
            ("reel_gain", self.reel_gain),
            ("v_max", self.v_max),
            ("ell_min", self.ell_min),
            ("ell_max", self.ell_max),
            ("break_length", self.break_length),
            ("dt", self.dt),
            ("horizon_t", self.horizon_t),
            ("success_eps", self.success_eps),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return invalid(format!("{name} must be finite and > 0, got {value}"));
            }
        }
        if !(self.damping_c.is_finite() && self.damping_c >= 0.0) {
            return invalid(format!("damping_c must be >= 0, got {}", self.damping_c));
        }
        if !(self.success_hold.is_finite() && self.success_hold >= 0.0) {
            return invalid(format!("success_hold must be >= 0, got {}", self.success_hold));
        }
        if !(self.ell_min < self.natural_length_l0 && self.natural_length_l0 <= self.ell_max) {
            return invalid(format!(
                "need ell_min < natural_length_l0 <= ell_max, got {} / {} / {}",
                self.ell_min, self.natural_length_l0, self.ell_max
            ));
        }
        if self.dt > self.horizon_t {
            return invalid(format!("dt ({}) exceeds horizon_t ({})", self.dt, self.horizon_t));
        }
        Ok(())
    }

    /// Number of integration steps that make up a full-horizon episode.
    pub fn horizon_steps(&self) -> usize {
        (self.horizon_t / self.dt + 1e-9).floor() as usize
    }
}
