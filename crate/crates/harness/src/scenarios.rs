use std::path::Path;

use cablebot_core::sim::{Scenario, WorldConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Training,
    Validation,
    Test,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Training, Role::Validation, Role::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Training => "training",
            Role::Validation => "validation",
            Role::Test => "test",
        }
    }

    /// Each role draws from its own stream of the master seed, so the
    /// suites do not overlap and one can be resized without moving the others.
    fn stream(self) -> u64 {
        match self {
            Role::Training => 1,
            Role::Validation => 2,
            Role::Test => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSet {
    pub role: Role,
    pub seed: u64,
    pub r_max: f64,
    pub count: usize,
    pub targets: Vec<[f64; 2]>,
}

impl ScenarioSet {
    pub fn scenarios(&self) -> Vec<Scenario> {
        self.targets.iter().map(|t| Scenario::new(t[0], t[1])).collect()
    }

    pub fn validate(&self, world: &WorldConfig) -> Result<()> {
        if self.targets.len() != self.count {
            return Err(HarnessError::data(format!(
                "scenario set says count {} but lists {} targets",
                self.count,
                self.targets.len()
            )));
        }
        if self.targets.is_empty() {
            return Err(HarnessError::data("scenario set is empty"));
        }
        for (i, s) in self.scenarios().iter().enumerate() {
            s.validate(world).map_err(|e| HarnessError::data(format!("target {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn load(path: &Path, world: &WorldConfig) -> Result<Self> {
        let set: Self = io::read_json(path)?;
        set.validate(world)
            .map_err(|e| HarnessError::data(format!("{}: {e}", path.display())))?;
        Ok(set)
    }
}

/// `n` targets uniform over the disc of radius `r_max`, by polar sampling
/// with a square-root radius.
pub fn gen_scenarios(n: usize, r_max: f64, seed: u64, role: Role, world: &WorldConfig) -> Result<ScenarioSet> {
    if !(r_max > 0.0 && r_max < world.anchor_radius) {
        return Err(HarnessError::data(format!(
            "r_max must be in (0, {}), got {r_max}",
            world.anchor_radius
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role.stream());
    let targets = (0..n)
        .map(|_| {
            let r = r_max * rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * theta.cos(), r * theta.sin()]
        })
        .collect();
    Ok(ScenarioSet { role, seed, r_max, count: n, targets })
}
