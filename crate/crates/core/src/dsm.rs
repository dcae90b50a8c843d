//! Noise schedule, distance perturbation, the denoising score-matching
//! objective, and the Adam training loop.
//!
//! Training minimizes, per molecule and per call, the sigma^2-weighted
//! single-sample Monte Carlo estimate
//!
//! ```text
//!   sigma_i^2 * 1/2 ||s(d~)/sigma_i + (d~ - d)/sigma_i^2||^2
//!     = 1/2 ||s(d~) + (d~ - d)/sigma_i||^2
//! ```
//!
//! with the noise level `i` drawn uniformly and one Gaussian perturbation
//! `d~ = d + sigma_i z` per call. Squared residuals are averaged per edge
//! within a molecule and then across the batch. Perturbed distances are not
//! clamped to be nonnegative: the regression target `-(d~ - d)/sigma^2`
//! presumes unconstrained Gaussians and the network consumes raw `d~`.
//! Gradients with respect to the parameters come from replaying the forward
//! pass on the autodiff tape.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::autodiff::{backward, sum, Tape};
use crate::molgraph::{compute_distances, Conformation, DistanceVector, GraphError, MolecularGraph};
use crate::scorenet::{
    self, init_params, lift_params, param_count, unconditional_scores_on_tape, ScoreNetError,
    ScoreNetHyper, ScoreNetParams,
};

#[derive(Debug, Error)]
pub enum DsmError {
    #[error("invalid schedule range: need sigma_max > sigma_min > 0 and at least 2 levels")]
    InvalidRange,
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Net(#[from] ScoreNetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Strictly decreasing geometric sequence of noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    sigmas: Vec<f64>,
    gamma: f64,
}

impl NoiseSchedule {
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn sigma(&self, level: usize) -> f64 {
        self.sigmas[level]
    }

    pub fn first(&self) -> f64 {
        self.sigmas[0]
    }

    pub fn last(&self) -> f64 {
        *self.sigmas.last().unwrap()
    }

    /// Common ratio `sigma_{i+1} / sigma_i`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Geometric schedule from `sigma_max` down to `sigma_min` over `levels`
/// entries. The endpoints are reproduced exactly; interior levels follow
/// `sigma_max * gamma^i` with `gamma = (sigma_min/sigma_max)^(1/(levels-1))`.
pub fn make_schedule(
    sigma_max: f64,
    sigma_min: f64,
    levels: usize,
) -> Result<NoiseSchedule, DsmError> {
    if !(sigma_max > sigma_min && sigma_min > 0.0) || levels < 2 {
        return Err(DsmError::InvalidRange);
    }
    let ratio = sigma_min / sigma_max;
    let gamma = ratio.powf(1.0 / (levels - 1) as f64);
    let sigmas = (0..levels)
        .map(|i| {
            if i == 0 {
                sigma_max
            } else if i == levels - 1 {
                sigma_min
            } else {
                sigma_max * ratio.powf(i as f64 / (levels - 1) as f64)
            }
        })
        .collect();
    Ok(NoiseSchedule { sigmas, gamma })
}

/// `d~ = d + sigma * z` with `z` i.i.d. standard normal per component.
pub fn perturb<R: Rng>(d: &DistanceVector, sigma: f64, rng: &mut R) -> DistanceVector {
    assert!(sigma > 0.0, "perturb needs sigma > 0, got {sigma}");
    DistanceVector::new(
        d.values
            .iter()
            .map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

/// The per-call weighted estimand: `1/2 * mean_k (s_k + (d~_k - d_k)/sigma)^2`.
/// This is the sigma^2-weighted level loss after the weight cancels the
/// conditioning, so it depends on sigma only through `d~`.
pub fn weighted_residual(scores: &[f64], d_tilde: &[f64], d: &[f64], sigma: f64) -> f64 {
    assert_eq!(scores.len(), d_tilde.len());
    assert_eq!(scores.len(), d.len());
    let n = scores.len().max(1);
    let total: f64 = scores
        .iter()
        .zip(d_tilde)
        .zip(d)
        .map(|((s, dt), dr)| {
            let r = s + (dt - dr) / sigma;
            r * r
        })
        .sum();
    0.5 * total / n as f64
}

fn draw_level<R: Rng>(schedule: &NoiseSchedule, rng: &mut R) -> usize {
    rng.random_range(0..schedule.len())
}

/// Single-sample Monte Carlo estimate of the DSM objective for one molecule:
/// draws one level and one perturbation from `rng`, runs the network on the
/// perturbed distances, and returns the weighted residual.
pub fn dsm_loss<R: Rng>(
    params: &ScoreNetParams,
    g: &MolecularGraph,
    d: &DistanceVector,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<f64, DsmError> {
    let sigma = schedule.sigma(draw_level(schedule, rng));
    let d_tilde = perturb(d, sigma, rng);
    let scores = scorenet::unconditional_edge_scores(g, &d_tilde, params)?;
    Ok(weighted_residual(&scores, &d_tilde.values, &d.values, sigma))
}

/// Same estimand rebuilt on the autodiff tape; returns the loss value and its
/// gradient with respect to the flat parameter vector.
pub(crate) fn dsm_loss_grad_on_tape<R: Rng>(
    tape: &Tape,
    params: &ScoreNetParams,
    g: &MolecularGraph,
    d: &DistanceVector,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<(f64, Vec<f64>), DsmError> {
    let sigma = schedule.sigma(draw_level(schedule, rng));
    let d_tilde = perturb(d, sigma, rng);

    let theta = lift_params(tape, params);
    let d_vars: Vec<_> = d_tilde.values.iter().map(|&v| tape.lift(v)).collect();
    let scores = unconditional_scores_on_tape(tape, g, &d_vars, &theta, params.hyper())?;

    let residuals: Vec<_> = scores
        .iter()
        .zip(&d_tilde.values)
        .zip(&d.values)
        .map(|((&s, dt), dr)| (s + tape.lift((dt - dr) / sigma)).square())
        .collect();
    let n = residuals.len().max(1);
    let loss = sum(tape, &residuals)
        .expect("single tape")
        .scale(0.5 / n as f64);

    let grads = backward(loss);
    let grad = theta.iter().map(|&v| grads.wrt(v)).collect();
    Ok((loss.value(), grad))
}

/// Minibatch Adam configuration. `lr_decay_rate` multiplies the learning
/// rate once per epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub initial_lr: f64,
    pub lr_decay_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    fn validate(&self) -> Result<(), DsmError> {
        let fail = |reason: &str| {
            Err(DsmError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if !(self.initial_lr >= 0.0) {
            return fail("initial_lr must be nonnegative");
        }
        if !(self.lr_decay_rate > 0.0 && self.lr_decay_rate <= 1.0) {
            return fail("lr_decay_rate must lie in (0, 1]");
        }
        Ok(())
    }
}

/// One line of the training trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub learning_rate: f64,
}

pub struct TrainOutcome {
    pub params: ScoreNetParams,
    pub trace: Vec<EpochStats>,
}

/// Standard Adam with bias correction (beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8).
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, values: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t);
        let bc2 = 1.0 - Self::BETA2.powi(self.t);
        for ((p, g), (m, v)) in values
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Independent RNG stream for one element of one epoch; parallelizing the
/// batch loop would not change any draw.
fn element_seed(seed: u64, epoch: usize, position: usize) -> u64 {
    splitmix64(splitmix64(seed ^ (epoch as u64).wrapping_mul(0x9E3779B97F4A7C15)) ^ position as u64)
}

/// Minibatch Adam on the mean of [`dsm_loss`] over each batch. Parameters
/// start at `init_params(hyper, cfg.seed)`; the learning rate is multiplied
/// by `lr_decay_rate` after every epoch. Deterministic in `cfg.seed`.
pub fn train(
    dataset: &[(MolecularGraph, Conformation)],
    schedule: &NoiseSchedule,
    hyper: &ScoreNetHyper,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, DsmError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(DsmError::EmptyDataset);
    }
    let distances: Vec<DistanceVector> = dataset
        .iter()
        .map(|(g, r)| compute_distances(g, r))
        .collect::<Result<_, _>>()?;

    let mut params = init_params(hyper, cfg.seed)?;
    // Surface incompatible charges before the first epoch.
    for (g, _) in dataset {
        scorenet::embed(g, &DistanceVector::new(vec![0.0; g.num_edges()]), &params)?;
    }

    let n_params = param_count(hyper);
    let mut adam = Adam::new(n_params);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ 0x5348_5546_464C_4531));
    let tape = Tape::new();
    let mut grad_acc = vec![0.0; n_params];
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut lr = cfg.initial_lr;

    for epoch in 0..cfg.epochs {
        for k in (1..order.len()).rev() {
            order.swap(k, shuffle_rng.random_range(0..=k));
        }
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            grad_acc.fill(0.0);
            let mut batch_loss = 0.0;
            for (slot, &idx) in batch.iter().enumerate() {
                let position = batch_no * cfg.batch_size + slot;
                let mut rng = ChaCha8Rng::seed_from_u64(element_seed(cfg.seed, epoch, position));
                tape.clear();
                let (g, _) = &dataset[idx];
                let (loss, grad) =
                    dsm_loss_grad_on_tape(&tape, &params, g, &distances[idx], schedule, &mut rng)?;
                batch_loss += loss;
                for (acc, gi) in grad_acc.iter_mut().zip(&grad) {
                    *acc += gi;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for gi in &mut grad_acc {
                *gi *= inv;
            }
            adam.step(params.values_mut(), &grad_acc, lr);
            epoch_loss += batch_loss;
        }
        trace.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / dataset.len() as f64,
            learning_rate: lr,
        });
        lr *= cfg.lr_decay_rate;
    }

    Ok(TrainOutcome { params, trace })
}
