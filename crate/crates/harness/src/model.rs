use std::path::Path;

use cablebot_core::fuzzy::{self, FisDomains, FleetGenome, RobotFis, INPUT_GENES, OUTPUT_GENES, N_RULES};
use cablebot_core::mlp::{MlpController, MlpParams, Standardizer, Weights, N_HIDDEN, N_IN};
use cablebot_core::qlearn::{QTable, StateId};
use cablebot_core::sim::{run_episode, Controller, Features, Scenario, SimError, Trajectory, WorldConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::io;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gfs,
    Qmlp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gfs => "gfs",
            Method::Qmlp => "qmlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub format_version: u32,
    pub method: Method,
    pub n_robots: usize,
    pub world_fingerprint: String,
    pub config_fingerprint: String,
    pub seed: u64,
    /// Method-specific training figures (costs, table occupancy, fit error).
    pub training: serde_json::Value,
    /// The full configuration the model was trained with.
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfsRobot {
    /// Points a..e of ρ, φ, v_Bx and v_By, in that order.
    pub inputs: Vec<f64>,
    /// (left, peak, right) of the five output sets.
    pub outputs: Vec<f64>,
    pub consequents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmlpRobot {
    pub mean: [f64; N_IN],
    pub scale: [f64; N_IN],
    /// 30 rows of 4.
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    /// Raw (state id, action id, q) rows, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_table: Option<Vec<(StateId, usize, f64)>>,
}

impl QmlpRobot {
    pub fn from_params(p: &MlpParams, table: Option<&QTable>) -> Self {
        let w = &p.weights;
        Self {
            mean: p.standardizer.mean,
            scale: p.standardizer.scale,
            hidden_weights: w.w1.chunks(N_IN).map(<[f64]>::to_vec).collect(),
            hidden_biases: w.b1.clone(),
            output_weights: w.w2.clone(),
            output_bias: w.b2,
            q_table: table.map(QTable::entries),
        }
    }

    pub fn params(&self) -> Result<MlpParams> {
        if self.hidden_weights.len() != N_HIDDEN || self.hidden_weights.iter().any(|r| r.len() != N_IN) {
            return Err(HarnessError::data("hidden_weights must be 30 rows of 4"));
        }
        let p = MlpParams {
            standardizer: Standardizer { mean: self.mean, scale: self.scale },
            weights: Weights {
                w1: self.hidden_weights.concat(),
                b1: self.hidden_biases.clone(),
                w2: self.output_weights.clone(),
                b2: self.output_bias,
            },
        };
        p.validate().map_err(|e| HarnessError::data(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelBody {
    Gfs { robots: Vec<GfsRobot> },
    Qmlp { robots: Vec<QmlpRobot> },
}

impl ModelBody {
    pub fn method(&self) -> Method {
        match self {
            ModelBody::Gfs { .. } => Method::Gfs,
            ModelBody::Qmlp { .. } => Method::Qmlp,
        }
    }

    pub fn n_robots(&self) -> usize {
        match self {
            ModelBody::Gfs { robots } => robots.len(),
            ModelBody::Qmlp { robots } => robots.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub header: ModelHeader,
    pub body: ModelBody,
}

fn header(cfg: &RunConfig, method: Method, training: serde_json::Value) -> ModelHeader {
    ModelHeader {
        format_version: FORMAT_VERSION,
        method,
        n_robots: cfg.world.n_robots,
        world_fingerprint: cfg.world_fingerprint(),
        config_fingerprint: cfg.fingerprint(),
        seed: cfg.seed,
        training,
        config: cfg.clone(),
    }
}

impl ModelFile {
    pub fn gfs(cfg: &RunConfig, fleet: &[RobotFis], training: serde_json::Value) -> Self {
        let genome = fuzzy::encode(fleet);
        let robots = (0..fleet.len())
            .map(|i| {
                let g = genome.robot(i);
                GfsRobot {
                    inputs: g[..INPUT_GENES].to_vec(),
                    outputs: g[INPUT_GENES..INPUT_GENES + OUTPUT_GENES].to_vec(),
                    consequents: fleet[i].rules.0.to_vec(),
                }
            })
            .collect();
        Self { header: header(cfg, Method::Gfs, training), body: ModelBody::Gfs { robots } }
    }

    pub fn qmlp(
        cfg: &RunConfig,
        nets: &[MlpParams],
        tables: Option<&[QTable]>,
        training: serde_json::Value,
    ) -> Self {
        let robots = nets
            .iter()
            .enumerate()
            .map(|(i, p)| QmlpRobot::from_params(p, tables.map(|t| &t[i])))
            .collect();
        Self { header: header(cfg, Method::Qmlp, training), body: ModelBody::Qmlp { robots } }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        io::to_json_bytes(self)
    }

    /// Serialized body alone; what the determinism contract compares.
    pub fn body_bytes(&self) -> Result<Vec<u8>> {
        io::to_json_bytes(&self.body)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, &self.to_bytes()?)
    }

    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let model: Self = serde_json::from_slice(bytes).map_err(|e| HarnessError::json(path, e))?;
        model.check().map_err(|e| HarnessError::data(format!("{}: {e}", path.display())))?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_bytes(path)?, path)
    }

    fn check(&self) -> Result<()> {
        let h = &self.header;
        if h.format_version != FORMAT_VERSION {
            return Err(HarnessError::data(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                h.format_version
            )));
        }
        if h.method != self.body.method() {
            return Err(HarnessError::data(format!(
                "header says {} but body holds a {} model",
                h.method.as_str(),
                self.body.method().as_str()
            )));
        }
        if h.n_robots != self.body.n_robots() {
            return Err(HarnessError::data(format!(
                "header says {} robots but body has {}",
                h.n_robots,
                self.body.n_robots()
            )));
        }
        Ok(())
    }

    /// Rebuild the controllers for `world`, which must have the model's
    /// robot count.
    pub fn fleet(&self, world: &WorldConfig) -> Result<Fleet> {
        if self.header.n_robots != world.n_robots {
            return Err(HarnessError::data(format!(
                "model is for {} robots but the world has {}",
                self.header.n_robots, world.n_robots
            )));
        }
        if self.header.world_fingerprint != io::fingerprint(world) {
            log::warn!(
                "model was trained in world {} but is being run in world {}",
                self.header.world_fingerprint,
                io::fingerprint(world)
            );
        }
        let controllers = match &self.body {
            ModelBody::Gfs { robots } => {
                let mut genes = Vec::new();
                for r in robots {
                    if r.inputs.len() != INPUT_GENES
                        || r.outputs.len() != OUTPUT_GENES
                        || r.consequents.len() != N_RULES
                    {
                        return Err(HarnessError::data(
                            "gfs robot needs 20 input reals, 15 output reals and 81 consequents",
                        ));
                    }
                    genes.extend_from_slice(&r.inputs);
                    genes.extend_from_slice(&r.outputs);
                    genes.extend(r.consequents.iter().map(|&c| c as f64));
                }
                let fleet = fuzzy::decode(&FleetGenome { genes }, robots.len(), &FisDomains::for_world(world))
                    .map_err(|e| HarnessError::data(e.to_string()))?;
                fleet.into_iter().map(AnyController::Fis).collect()
            }
            ModelBody::Qmlp { robots } => robots
                .iter()
                .map(|r| Ok(AnyController::Net(MlpController { params: r.params()?, v_max: world.v_max })))
                .collect::<Result<_>>()?,
        };
        Ok(Fleet { method: self.header.method, controllers })
    }
}

#[derive(Debug, Clone)]
pub enum AnyController {
    Fis(RobotFis),
    Net(MlpController),
}

impl Controller for AnyController {
    fn voltage(&self, features: &Features) -> f64 {
        match self {
            AnyController::Fis(c) => c.voltage(features),
            AnyController::Net(c) => c.voltage(features),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fleet {
    pub method: Method,
    pub controllers: Vec<AnyController>,
}

impl Fleet {
    pub fn run(&self, scenario: &Scenario, world: &WorldConfig) -> std::result::Result<Trajectory, SimError> {
        run_episode(&self.controllers, scenario, world)
    }
}
