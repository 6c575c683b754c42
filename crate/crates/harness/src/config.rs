use std::path::Path;

use cablebot_core::ga::GaConfig;
use cablebot_core::mlp::TrainConfig;
use cablebot_core::qlearn::QLearnConfig;
use cablebot_core::sim::WorldConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::io;

pub const DEFAULT_PRESET: &str = include_str!("../presets/default.json");
pub const PAPER_TEXT_PRESET: &str = include_str!("../presets/paper-text.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WorldPreset {
    Default,
    PaperText,
}

impl WorldPreset {
    pub fn source(self) -> &'static str {
        match self {
            WorldPreset::Default => DEFAULT_PRESET,
            WorldPreset::PaperText => PAPER_TEXT_PRESET,
        }
    }
}

/// Sizes of the generated scenario suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSizes {
    pub training: usize,
    pub validation: usize,
    pub test: usize,
    /// Target radius limit as a fraction of the anchor radius.
    pub r_max_fraction: f64,
}

impl SuiteSizes {
    pub fn for_robots(n: usize) -> Self {
        if n == 3 {
            Self { training: 8, validation: 4, test: 20, r_max_fraction: 0.3 }
        } else {
            Self { training: 12, validation: 6, test: 20, r_max_fraction: 0.3 }
        }
    }
}

/// Everything a command needs. `seed` is the master seed; it replaces the
/// `rng_seed` of every trainer section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub world: WorldConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub qlearn: QLearnConfig,
    #[serde(default)]
    pub mlp: TrainConfig,
    pub suites: SuiteSizes,
}

impl RunConfig {
    pub fn preset(preset: WorldPreset) -> Self {
        serde_json::from_str(preset.source()).expect("bundled preset parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    /// Resize the world to `n` robots, picking the matching suite sizes and
    /// episode budget.
    pub fn with_robots(mut self, n: usize) -> Self {
        if n != self.world.n_robots {
            self.world.n_robots = n;
            self.suites = SuiteSizes::for_robots(n);
            self.qlearn.episodes = if n == 3 { 5000 } else { 20000 };
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Copy the master seed into every trainer and check all sections.
    pub fn finalize(mut self) -> Result<Self> {
        self.ga.rng_seed = self.seed;
        self.qlearn.rng_seed = self.seed;
        self.mlp.rng_seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Data(format!("config: {m}")));
        if let Err(e) = self.world.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.ga.validate() {
            return bad(e);
        }
        if let Err(e) = self.qlearn.validate(self.world.v_max) {
            return bad(e.to_string());
        }
        if let Err(e) = self.mlp.validate() {
            return bad(e.to_string());
        }
        let f = self.suites.r_max_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("r_max_fraction must be in (0, 1), got {f}"));
        }
        Ok(())
    }

    pub fn r_max(&self) -> f64 {
        self.suites.r_max_fraction * self.world.anchor_radius
    }

    pub fn fingerprint(&self) -> String {
        io::fingerprint(self)
    }

    pub fn world_fingerprint(&self) -> String {
        io::fingerprint(&self.world)
    }

    /// Compact JSON, suitable for a one-line file header.
    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
