//! Genetic fuzzy training: a GA over the concatenated fuzzy controllers of
//! the whole fleet, scored by mean episode cost.

use crate::fuzzy::{self, FisDomains, FleetGenome, RobotFis, INPUT_GENES, N_RULES, REAL_GENES};
use crate::ga::{self, GaConfig, GaResult, GeneDomain, Problem};
use crate::sim::{episode_cost, run_episode, Scenario, WorldConfig};

/// The fleet-tuning problem handed to the GA.
#[derive(Debug, Clone)]
pub struct FleetProblem {
    pub world: WorldConfig,
    pub fis_domains: FisDomains,
    gene_domains: Vec<GeneDomain>,
}

impl FleetProblem {
    pub fn new(world: WorldConfig) -> Self {
        let fis_domains = FisDomains::for_world(&world);
        let gene_domains = fleet_gene_domains(world.n_robots, &fis_domains);
        Self { world, fis_domains, gene_domains }
    }

    pub fn decode(&self, genome: &[f64]) -> Result<Vec<RobotFis>, fuzzy::FuzzyError> {
        fuzzy::decode(&FleetGenome { genes: genome.to_vec() }, self.world.n_robots, &self.fis_domains)
    }
}

/// Bounds of every gene in a fleet genome.
pub fn fleet_gene_domains(n_robots: usize, domains: &FisDomains) -> Vec<GeneDomain> {
    let mut robot = Vec::with_capacity(fuzzy::ROBOT_GENES);
    for j in 0..INPUT_GENES {
        let d = domains.inputs[j / 5];
        robot.push(GeneDomain::Real { min: d.min, max: d.max });
    }
    for _ in INPUT_GENES..REAL_GENES {
        robot.push(GeneDomain::Real { min: domains.output.min, max: domains.output.max });
    }
    robot.extend(std::iter::repeat_n(GeneDomain::Integer { min: 0, max: 4 }, N_RULES));
    robot.repeat(n_robots)
}

/// Mean episode cost of the decoded fleet over `scenarios`. Simulator or
/// decoding faults score `+∞` and are logged.
pub fn evaluate(genome: &[f64], scenarios: &[Scenario], problem: &FleetProblem) -> f64 {
    let fleet = match problem.decode(genome) {
        Ok(f) => f,
        Err(e) => {
            log::warn!("genome failed to decode: {e}");
            return f64::INFINITY;
        }
    };
    let mut total = 0.0;
    for scenario in scenarios {
        match run_episode(&fleet, scenario, &problem.world) {
            Ok(traj) => total += episode_cost(&traj, &problem.world),
            Err(e) => {
                log::warn!("episode for target {:?} failed: {e}", scenario.target);
                return f64::INFINITY;
            }
        }
    }
    total / scenarios.len() as f64
}

impl Problem for FleetProblem {
    type Case = Scenario;

    fn domains(&self) -> &[GeneDomain] {
        &self.gene_domains
    }

    fn repair(&self, genome: &mut [f64]) {
        fuzzy::repair_in_place(genome, &self.fis_domains);
    }

    fn evaluate(&self, genome: &[f64], cases: &[Scenario]) -> f64 {
        evaluate(genome, cases, self)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedFleet {
    pub fleet: Vec<RobotFis>,
    pub ga: GaResult,
}

pub fn train(
    world: &WorldConfig,
    cfg: &GaConfig,
    training: &[Scenario],
    validation: &[Scenario],
) -> Result<TrainedFleet, String> {
    world.validate().map_err(|e| e.to_string())?;
    let problem = FleetProblem::new(world.clone());
    let result = ga::run(&problem, training, validation, cfg)?;
    let fleet = problem.decode(&result.best).map_err(|e| e.to_string())?;
    Ok(TrainedFleet { fleet, ga: result })
}
