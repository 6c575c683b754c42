//! One-hidden-layer regressor: 4 standardized inputs, 30 tanh units, one
//! linear output. Trained by plain mini-batch gradient descent on MSE.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{Controller, Features};

pub const N_IN: usize = 4;
pub const N_HIDDEN: usize = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlpError {
    #[error("dataset has {rows} rows, need at least {needed}")]
    TooSmall { rows: usize, needed: usize },
    #[error("loss became non-finite in epoch {epoch}; try a smaller learning rate")]
    Divergence { epoch: usize },
    #[error("invalid mlp: {0}")]
    Invalid(String),
}

/// One training row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: [f64; N_IN],
    pub y: f64,
}

/// Per-feature affine map applied before the hidden layer: `(x - mean) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; N_IN],
    pub scale: [f64; N_IN],
}

impl Standardizer {
    pub const IDENTITY: Standardizer = Standardizer { mean: [0.0; N_IN], scale: [1.0; N_IN] };

    /// Mean and inverse population standard deviation of each column.
    /// Constant columns get scale 1.
    pub fn fit(data: &[Example]) -> Self {
        let n = data.len().max(1) as f64;
        let mut mean = [0.0; N_IN];
        for ex in data {
            for (m, x) in mean.iter_mut().zip(ex.x) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; N_IN];
        for ex in data {
            for k in 0..N_IN {
                var[k] += (ex.x[k] - mean[k]).powi(2);
            }
        }
        let scale = var.map(|v| {
            let sd = (v / n).sqrt();
            if sd > 1e-12 {
                1.0 / sd
            } else {
                1.0
            }
        });
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64; N_IN]) -> [f64; N_IN] {
        std::array::from_fn(|k| (x[k] - self.mean[k]) * self.scale[k])
    }
}

/// Trainable parameters. Also used as the gradient container.
/// `w1` is row-major, `N_HIDDEN` rows of `N_IN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Weights {
    pub const LEN: usize = N_HIDDEN * N_IN + N_HIDDEN + N_HIDDEN + 1;

    pub fn zeros() -> Self {
        Self {
            w1: vec![0.0; N_HIDDEN * N_IN],
            b1: vec![0.0; N_HIDDEN],
            w2: vec![0.0; N_HIDDEN],
            b2: 0.0,
        }
    }

    pub fn uniform<R: Rng>(rng: &mut R, scale: f64) -> Self {
        let mut w = Self::zeros();
        for p in w.iter_mut() {
            *p = rng.gen_range(-scale..=scale);
        }
        w
    }

    /// All parameters in the order w1, b1, w2, b2.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(std::iter::once(&self.b2))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(std::iter::once(&mut self.b2))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self, MlpError> {
        if flat.len() != Self::LEN {
            return Err(MlpError::Invalid(format!(
                "expected {} parameters, got {}",
                Self::LEN,
                flat.len()
            )));
        }
        let mut w = Self::zeros();
        w.iter_mut().zip(flat).for_each(|(p, &v)| *p = v);
        Ok(w)
    }

    fn add_scaled(&mut self, factor: f64, other: &Weights) {
        for (p, g) in self.iter_mut().zip(other.iter()) {
            *p += factor * g;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub standardizer: Standardizer,
    pub weights: Weights,
}

impl MlpParams {
    pub fn validate(&self) -> Result<(), MlpError> {
        let w = &self.weights;
        if w.w1.len() != N_HIDDEN * N_IN || w.b1.len() != N_HIDDEN || w.w2.len() != N_HIDDEN {
            return Err(MlpError::Invalid("layer shapes must be 30x4, 30, 30".into()));
        }
        if !w.iter().all(|p| p.is_finite()) {
            return Err(MlpError::Invalid("non-finite weight".into()));
        }
        let s = &self.standardizer;
        if !s.mean.iter().all(|m| m.is_finite()) {
            return Err(MlpError::Invalid("non-finite standardization mean".into()));
        }
        if !s.scale.iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(MlpError::Invalid("standardization scales must be > 0".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64; N_IN]) -> f64 {
        let z = self.standardizer.apply(x);
        let w = &self.weights;
        let mut y = w.b2;
        for j in 0..N_HIDDEN {
            let row = &w.w1[j * N_IN..(j + 1) * N_IN];
            let a = w.b1[j] + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            y += w.w2[j] * a.tanh();
        }
        y
    }
}

/// Mean squared error over `batch` and its exact gradient with respect to
/// the weights. The standardizer is treated as fixed.
pub fn loss_and_gradient(params: &MlpParams, batch: &[Example]) -> (f64, Weights) {
    assert!(!batch.is_empty(), "empty batch");
    let w = &params.weights;
    let mut grad = Weights::zeros();
    let mut loss = 0.0;
    let inv_n = 1.0 / batch.len() as f64;
    let mut h = [0.0; N_HIDDEN];
    for ex in batch {
        let z = params.standardizer.apply(&ex.x);
        let mut y = w.b2;
        for j in 0..N_HIDDEN {
            let row = &w.w1[j * N_IN..(j + 1) * N_IN];
            let a = w.b1[j] + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            h[j] = a.tanh();
            y += w.w2[j] * h[j];
        }
        let err = y - ex.y;
        loss += err * err * inv_n;
        let e = 2.0 * err * inv_n;
        grad.b2 += e;
        for j in 0..N_HIDDEN {
            grad.w2[j] += e * h[j];
            let dh = e * w.w2[j] * (1.0 - h[j] * h[j]);
            grad.b1[j] += dh;
            for k in 0..N_IN {
                grad.w1[j * N_IN + k] += dh * z[k];
            }
        }
    }
    (loss, grad)
}

pub fn mse(params: &MlpParams, data: &[Example]) -> f64 {
    let n = data.len() as f64;
    data.iter().map(|ex| (params.forward(&ex.x) - ex.y).powi(2)).sum::<f64>() / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    /// Initial weights are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 500, batch_size: 32, rng_seed: 1, init_scale: 0.2 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(MlpError::Invalid("learning_rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(MlpError::Invalid("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(MlpError::Invalid("batch_size must be >= 1".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(MlpError::Invalid("init_scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// Fit a fresh network to `data`. Returns the parameters and the full-data
/// MSE after every epoch.
///
/// Targets are standardized while training and the output layer is mapped
/// back to the original units afterwards, so `forward` needs no extra step.
pub fn train(data: &[Example], cfg: &TrainConfig) -> Result<(MlpParams, Vec<f64>), MlpError> {
    cfg.validate()?;
    if data.len() < cfg.batch_size {
        return Err(MlpError::TooSmall { rows: data.len(), needed: cfg.batch_size });
    }
    let n = data.len() as f64;
    let y_mean = data.iter().map(|ex| ex.y).sum::<f64>() / n;
    let y_sd = (data.iter().map(|ex| (ex.y - y_mean).powi(2)).sum::<f64>() / n).sqrt();
    let y_sd = if y_sd > 1e-12 { y_sd } else { 1.0 };
    let scaled: Vec<Example> =
        data.iter().map(|ex| Example { x: ex.x, y: (ex.y - y_mean) / y_sd }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut params = MlpParams {
        standardizer: Standardizer::fit(data),
        weights: Weights::uniform(&mut rng, cfg.init_scale),
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| scaled[i]));
            let (_, grad) = loss_and_gradient(&params, &batch);
            params.weights.add_scaled(-cfg.learning_rate, &grad);
        }
        let loss = mse(&params, &scaled) * y_sd * y_sd;
        if !loss.is_finite() {
            return Err(MlpError::Divergence { epoch });
        }
        history.push(loss);
    }
    let w = &mut params.weights;
    w.w2.iter_mut().for_each(|v| *v *= y_sd);
    w.b2 = w.b2 * y_sd + y_mean;
    Ok((params, history))
}

/// A trained network driving one robot; the output is clamped to `±v_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpController {
    pub params: MlpParams,
    pub v_max: f64,
}

impl Controller for MlpController {
    fn voltage(&self, features: &Features) -> f64 {
        self.params.forward(&features.to_array()).clamp(-self.v_max, self.v_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_params(rng: &mut ChaCha8Rng) -> MlpParams {
        MlpParams {
            standardizer: Standardizer {
                mean: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
                scale: std::array::from_fn(|_| rng.gen_range(0.5..2.0)),
            },
            weights: Weights::uniform(rng, 1.0),
        }
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<Example> {
        (0..n)
            .map(|_| Example {
                x: std::array::from_fn(|_| rng.gen_range(-2.0..2.0)),
                y: rng.gen_range(-3.0..3.0),
            })
            .collect()
    }

    #[test]
    fn zero_network_outputs_bias() {
        let mut p = MlpParams { standardizer: Standardizer::IDENTITY, weights: Weights::zeros() };
        p.weights.b2 = 0.3;
        assert_eq!(p.forward(&[1.0, -2.0, 0.5, 9.0]), 0.3);

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = random_params(&mut rng);
        p.weights.w2.iter_mut().for_each(|w| *w = 0.0);
        p.weights.b2 = -1.25;
        assert_eq!(p.forward(&[0.1, 0.2, 0.3, 0.4]), -1.25);
    }

    #[test]
    fn scale_and_weight_rescaling_cancel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&mut rng);
        let mut q = p.clone();
        q.standardizer.scale.iter_mut().for_each(|s| *s *= 2.0);
        q.weights.w1.iter_mut().for_each(|w| *w *= 0.5);
        for ex in random_batch(&mut rng, 50) {
            assert!((p.forward(&ex.x) - q.forward(&ex.x)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_zero_network_loss() {
        let p = MlpParams { standardizer: Standardizer::IDENTITY, weights: Weights::zeros() };
        let (loss, _) = loss_and_gradient(&p, &[Example { x: [0.3; 4], y: 1.7 }]);
        assert!((loss - 1.7f64 * 1.7).abs() < 1e-15);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_params(&mut rng);
        let batch: Vec<Example> = random_batch(&mut rng, 16)
            .into_iter()
            .map(|ex| Example { y: p.forward(&ex.x), ..ex })
            .collect();
        let (loss, grad) = loss_and_gradient(&p, &batch);
        assert!(loss < 1e-28);
        assert!(grad.iter().all(|g| g.abs() < 1e-13));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let max = max_fd_relative_error(20, 7);
        assert!(max < 1e-4, "max relative error {max}");
    }

    /// Worst relative error of the analytic gradient against central
    /// differences over `draws` random parameter/batch pairs.
    fn max_fd_relative_error(draws: usize, seed: u64) -> f64 {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..draws {
            let p = random_params(&mut rng);
            let batch = random_batch(&mut rng, 8);
            let (_, grad) = loss_and_gradient(&p, &batch);
            let flat = p.weights.to_flat();
            for (i, g) in grad.iter().enumerate() {
                let mut plus = flat.clone();
                plus[i] += h;
                let mut minus = flat.clone();
                minus[i] -= h;
                let lp = mse(
                    &MlpParams { weights: Weights::from_flat(&plus).unwrap(), ..p.clone() },
                    &batch,
                );
                let lm = mse(
                    &MlpParams { weights: Weights::from_flat(&minus).unwrap(), ..p.clone() },
                    &batch,
                );
                let fd = (lp - lm) / (2.0 * h);
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Weights::uniform(&mut rng, 0.2);
        assert_eq!(Weights::from_flat(&w.to_flat()).unwrap(), w);
        assert!(Weights::from_flat(&[0.0; 3]).is_err());
        assert!(w.iter().all(|p| p.abs() <= 0.2));
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let data: Vec<Example> = (0..10)
            .map(|i| Example { x: [i as f64, 5.0, -2.0 * i as f64, 0.0], y: 0.0 })
            .collect();
        let s = Standardizer::fit(&data);
        assert!((s.mean[0] - 4.5).abs() < 1e-12);
        assert_eq!(s.scale[1], 1.0);
        let z: Vec<[f64; 4]> = data.iter().map(|ex| s.apply(&ex.x)).collect();
        let var0 = z.iter().map(|v| v[0] * v[0]).sum::<f64>() / 10.0;
        assert!((var0 - 1.0).abs() < 1e-12);
    }

    fn sine_data() -> Vec<Example> {
        (0..200)
            .map(|i| {
                let x = -1.5 + 3.0 * i as f64 / 199.0;
                Example { x: [x, 0.0, 0.0, 0.0], y: (2.0 * x).sin() }
            })
            .collect()
    }

    #[test]
    fn fits_sine() {
        let cfg = TrainConfig { learning_rate: 0.05, epochs: 2000, batch_size: 16, ..Default::default() };
        let (_, history) = train(&sine_data(), &cfg).unwrap();
        let last = *history.last().unwrap();
        assert!(last < 1e-3, "final mse {last}");
    }

    #[test]
    fn constant_target_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Example> =
            random_batch(&mut rng, 100).into_iter().map(|ex| Example { y: 6.0, ..ex }).collect();
        let cfg = TrainConfig { init_scale: 0.1, ..Default::default() };
        let (p, history) = train(&data, &cfg).unwrap();
        assert!(*history.last().unwrap() < 1e-6, "final mse {}", history.last().unwrap());
        for ex in random_batch(&mut rng, 100) {
            assert!((p.forward(&ex.x) - 6.0).abs() < 1e-2);
        }
    }

    #[test]
    fn training_is_deterministic_and_leaves_data_alone() {
        let data = sine_data();
        let copy = data.clone();
        let cfg = TrainConfig { epochs: 20, ..Default::default() };
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(data, copy);
        let c = train(&data, &TrainConfig { rng_seed: 2, ..cfg }).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn divergence_is_reported() {
        let data: Vec<Example> = sine_data()
            .into_iter()
            .map(|ex| Example { y: ex.y * 1e3, ..ex })
            .collect();
        let cfg = TrainConfig { learning_rate: 10.0, epochs: 50, ..Default::default() };
        assert!(matches!(train(&data, &cfg), Err(MlpError::Divergence { .. })));
    }

    #[test]
    fn small_dataset_rejected() {
        let data = vec![Example { x: [0.0; 4], y: 0.0 }; 5];
        assert!(matches!(train(&data, &TrainConfig::default()), Err(MlpError::TooSmall { .. })));
    }

    #[test]
    fn controller_clamps() {
        let mut p = MlpParams { standardizer: Standardizer::IDENTITY, weights: Weights::zeros() };
        p.weights.b2 = 40.0;
        let c = MlpController { params: p, v_max: 12.0 };
        assert_eq!(c.voltage(&Features::new(0.0, 0.0, 0.0, 0.0)), 12.0);
    }
}
