//! Generational GA over mixed real/integer genomes.
//!
//! Lower cost is better. Selection is by tournament, recombination is uniform
//! crossover, real genes take Gaussian steps and integer genes are reset at
//! random. Every child goes through the problem's repair hook before it is
//! evaluated.
//!
//! All randomness comes from per-individual ChaCha streams derived from the
//! master seed, so a run does not depend on how evaluations are scheduled.

use std::cmp::Ordering;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneDomain {
    Real { min: f64, max: f64 },
    Integer { min: i64, max: i64 },
}

impl GeneDomain {
    pub fn width(&self) -> f64 {
        match *self {
            GeneDomain::Real { min, max } => max - min,
            GeneDomain::Integer { min, max } => (max - min) as f64,
        }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        match *self {
            GeneDomain::Real { min, max } => {
                if x.is_nan() {
                    0.5 * (min + max)
                } else {
                    x.clamp(min, max)
                }
            }
            GeneDomain::Integer { min, max } => {
                if x.is_nan() {
                    min as f64
                } else {
                    x.round().clamp(min as f64, max as f64)
                }
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            GeneDomain::Real { min, max } => rng.gen_range(min..=max),
            GeneDomain::Integer { min, max } => rng.gen_range(min..=max) as f64,
        }
    }
}

/// What the GA optimizes. `Case` is whatever a cost is averaged over
/// (scenarios, for the robot fleet).
pub trait Problem: Sync {
    type Case: Sync;

    fn domains(&self) -> &[GeneDomain];

    /// Bring a genome back into the feasible set. Must be idempotent.
    fn repair(&self, genome: &mut [f64]) {
        for (g, d) in genome.iter_mut().zip(self.domains()) {
            *g = d.clamp(*g);
        }
    }

    /// Mean cost over `cases`. Must be pure.
    fn evaluate(&self, genome: &[f64], cases: &[Self::Case]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Gaussian step as a fraction of the gene's domain width.
    pub mutation_sigma: f64,
    pub integer_reset_rate: f64,
    pub elite_count: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 50,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.05,
            mutation_sigma: 0.1,
            integer_reset_rate: 0.05,
            elite_count: 2,
            rng_seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.population_size < 2 {
            return Err(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.elite_count >= self.population_size {
            return Err(format!(
                "elite_count ({}) must be below population_size ({})",
                self.elite_count, self.population_size
            ));
        }
        if self.tournament_size < 1 {
            return Err("tournament_size must be >= 1".into());
        }
        for (name, p) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("integer_reset_rate", self.integer_reset_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return Err(format!("mutation_sigma must be >= 0, got {}", self.mutation_sigma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_train: f64,
    pub mean_train: f64,
    /// Validation cost of this generation's best-on-training individual.
    pub champion_validation: f64,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_train: f64,
    pub best_validation: f64,
    /// Generation whose champion was selected.
    pub best_generation: usize,
    pub history: Vec<GenerationStats>,
}

fn stream_rng(seed: u64, generation: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 32) | index as u64);
    rng
}

/// Non-finite costs (NaN included) rank as `+∞`.
fn sanitize(cost: f64) -> f64 {
    if cost.is_nan() {
        f64::INFINITY
    } else {
        cost
    }
}

/// Order by cost, then by index.
fn rank(a: (usize, f64), b: (usize, f64)) -> Ordering {
    sanitize(a.1).total_cmp(&sanitize(b.1)).then(a.0.cmp(&b.0))
}

pub fn init_population<P: Problem>(cfg: &GaConfig, problem: &P) -> Vec<Vec<f64>> {
    (0..cfg.population_size)
        .map(|i| {
            let mut rng = stream_rng(cfg.rng_seed, 0, i);
            let mut genome: Vec<f64> = problem.domains().iter().map(|d| d.sample(&mut rng)).collect();
            problem.repair(&mut genome);
            genome
        })
        .collect()
}

fn tournament(fitnesses: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    (0..size)
        .map(|_| rng.gen_range(0..fitnesses.len()))
        .map(|i| (i, fitnesses[i]))
        .min_by(|&a, &b| rank(a, b))
        .map(|(i, _)| i)
        .expect("tournament size >= 1")
}

/// Produce generation `generation + 1` from `population`.
pub fn ga_step<P: Problem>(
    population: &[Vec<f64>],
    fitnesses: &[f64],
    cfg: &GaConfig,
    problem: &P,
    generation: usize,
) -> Vec<Vec<f64>> {
    assert_eq!(population.len(), fitnesses.len());
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| rank((a, fitnesses[a]), (b, fitnesses[b])));

    let domains = problem.domains();
    let mut next: Vec<Vec<f64>> = order[..cfg.elite_count]
        .iter()
        .map(|&i| population[i].clone())
        .collect();
    let children: Vec<Vec<f64>> = (cfg.elite_count..cfg.population_size)
        .into_par_iter()
        .map(|slot| {
            let mut rng = stream_rng(cfg.rng_seed, generation as u64 + 1, slot);
            let p1 = tournament(fitnesses, cfg.tournament_size, &mut rng);
            let p2 = tournament(fitnesses, cfg.tournament_size, &mut rng);
            let mut child = population[p1].clone();
            if rng.gen::<f64>() < cfg.crossover_rate {
                for (g, &other) in child.iter_mut().zip(&population[p2]) {
                    if rng.gen::<bool>() {
                        *g = other;
                    }
                }
            }
            for (g, d) in child.iter_mut().zip(domains) {
                match d {
                    GeneDomain::Real { .. } => {
                        if rng.gen::<f64>() < cfg.mutation_rate {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *g += z * cfg.mutation_sigma * d.width();
                        }
                    }
                    GeneDomain::Integer { .. } => {
                        if rng.gen::<f64>() < cfg.integer_reset_rate {
                            *g = d.sample(&mut rng);
                        }
                    }
                }
            }
            problem.repair(&mut child);
            child
        })
        .collect();
    next.extend(children);
    next
}

fn evaluate_all<P: Problem>(problem: &P, population: &[Vec<f64>], cases: &[P::Case]) -> Vec<f64> {
    population
        .par_iter()
        .map(|g| sanitize(problem.evaluate(g, cases)))
        .collect()
}

/// Run the GA; returns the generation champion minimizing
/// `mean training cost + mean validation cost` (earliest on ties).
pub fn run<P: Problem>(
    problem: &P,
    training: &[P::Case],
    validation: &[P::Case],
    cfg: &GaConfig,
) -> Result<GaResult, String> {
    cfg.validate()?;
    if training.is_empty() || validation.is_empty() {
        return Err("training and validation sets must be non-empty".into());
    }
    let start = Instant::now();
    let mut population = init_population(cfg, problem);
    let mut history = Vec::with_capacity(cfg.generations);
    let mut best: Option<(f64, Vec<f64>, f64, f64, usize)> = None;

    for generation in 0..cfg.generations {
        let fitnesses = evaluate_all(problem, &population, training);
        let (champion, best_train) = fitnesses
            .iter()
            .copied()
            .enumerate()
            .min_by(|&a, &b| rank(a, b))
            .expect("non-empty population");
        let mean_train = fitnesses.iter().sum::<f64>() / fitnesses.len() as f64;
        let champion_validation = sanitize(problem.evaluate(&population[champion], validation));
        let stats = GenerationStats {
            generation,
            best_train,
            mean_train,
            champion_validation,
            wall_time_secs: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "generation {generation}: best {best_train:.4} mean {mean_train:.4} validation {champion_validation:.4}"
        );
        history.push(stats);

        let combined = best_train + champion_validation;
        if best.as_ref().is_none_or(|b| combined < b.0) {
            best = Some((
                combined,
                population[champion].clone(),
                best_train,
                champion_validation,
                generation,
            ));
        }
        if generation + 1 < cfg.generations {
            population = ga_step(&population, &fitnesses, cfg, problem, generation);
        }
    }

    let (_, best, best_train, best_validation, best_generation) = match best {
        Some(b) => b,
        // zero generations: fall back to the best initial individual
        None => {
            let fitnesses = evaluate_all(problem, &population, training);
            let (i, train) = fitnesses
                .iter()
                .copied()
                .enumerate()
                .min_by(|&a, &b| rank(a, b))
                .expect("non-empty population");
            let val = sanitize(problem.evaluate(&population[i], validation));
            (train + val, population[i].clone(), train, val, 0)
        }
    };
    Ok(GaResult { best, best_train, best_validation, best_generation, history })
}
