//! Adam training of the regressor/rejector pair under the surrogate risk,
//! with a slow-start schedule, plus the plain supervised MSE baseline.
//!
//! Slow-start: for the first `slow_start_epochs` epochs only the regressor is
//! trained, by plain MSE. If the rejector were trained from the beginning it
//! could converge to rejecting everything while the regressor is still bad,
//! after which the regressor's gradient vanishes. Training the rejector only
//! once the regressor is ready avoids that.
//!
//! Reproducibility contract: one training run is fully determined by
//! `TrainConfig::seed`. Substreams are forked as
//! seed.fork(0) = regressor init, seed.fork(1) = rejector init,
//! seed.fork(2 + e) = shuffle of 0-based epoch e. The supervised baseline
//! uses the same stream layout, so with `slow_start_epochs == epochs` it
//! follows bit-identical regressor trajectories.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::loss::{raw_surrogate_loss, raw_surrogate_loss_and_grads, BinaryLossKind, CostSpec};
use crate::model::{backward, forward, init_params, Layer, ModelGrads, ModelParams, ModelSpec, RcRPair};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

fn default_lr_grid() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_epochs() -> usize {
    1000
}
fn default_slow_start() -> usize {
    200
}
fn default_batch() -> usize {
    1024
}
fn default_lr() -> f64 {
    1e-2
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_cost() -> CostSpec {
    CostSpec::Constant(1.0)
}
fn default_kind() -> BinaryLossKind {
    BinaryLossKind::Mae
}

/// Everything one training run needs. The defaults are the tabular-benchmark
/// settings: batch size 1024, 1000 epochs with 200 slow-start epochs, and a
/// learning-rate grid of {1e-1, 1e-2, 1e-3}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_kind")]
    pub loss_kind: BinaryLossKind,
    #[serde(default = "default_cost")]
    pub cost: CostSpec,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_lr_grid")]
    pub lr_grid: Vec<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_slow_start")]
    pub slow_start_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss_kind: default_kind(),
            cost: default_cost(),
            lr: default_lr(),
            lr_grid: default_lr_grid(),
            epochs: default_epochs(),
            slow_start_epochs: default_slow_start(),
            batch_size: default_batch(),
            seed: 0,
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slow_start_epochs > self.epochs {
            return Err(Error::Invalid {
                what: "train config",
                reason: format!(
                    "slow_start_epochs ({}) exceeds epochs ({})",
                    self.slow_start_epochs, self.epochs
                ),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid { what: "train config", reason: "batch_size must be >= 1".into() });
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Invalid {
                what: "train config",
                reason: format!("learning rate must be positive, got {}", self.lr),
            });
        }
        if self.lr_grid.iter().any(|&lr| !(lr > 0.0) || !lr.is_finite()) {
            return Err(Error::Invalid {
                what: "train config",
                reason: "every learning rate in the grid must be positive".into(),
            });
        }
        self.cost.validate()
    }
}

/// Adam moment estimates, mirroring the parameter shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: ModelGrads,
    pub v: ModelGrads,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: ModelGrads = params
            .layers
            .iter()
            .map(|l| Layer {
                weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        AdamState { m: zeros.clone(), v: zeros, t: 0 }
    }
}

fn check_same_shape(context: &'static str, params: &ModelParams, grads: &ModelGrads) -> Result<()> {
    if params.layers.len() != grads.len() {
        return Err(Error::DimensionMismatch {
            context,
            expected: params.layers.len(),
            actual: grads.len(),
        });
    }
    for (p, g) in params.layers.iter().zip(grads) {
        if p.weights.rows() != g.weights.rows()
            || p.weights.cols() != g.weights.cols()
            || p.bias.len() != g.bias.len()
        {
            return Err(Error::ShapeMismatch {
                left_rows: p.weights.rows(),
                left_cols: p.weights.cols(),
                right_rows: g.weights.rows(),
                right_cols: g.weights.cols(),
            });
        }
    }
    Ok(())
}

/// One Adam update with bias correction, in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelGrads,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<()> {
    check_same_shape("adam gradients", params, grads)?;
    check_same_shape("adam state", params, &state.m)?;
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (l, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads[l];
        let m = &mut state.m[l];
        let v = &mut state.v[l];
        for ((p, &grad), (m, v)) in layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(g.weights.as_slice())
            .zip(m.weights.as_mut_slice().iter_mut().zip(v.weights.as_mut_slice()))
        {
            *m = beta1 * *m + (1.0 - beta1) * grad;
            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + epsilon);
        }
        for ((p, &grad), (m, v)) in layer
            .bias
            .iter_mut()
            .zip(&g.bias)
            .zip(m.bias.iter_mut().zip(v.bias.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * grad;
            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + epsilon);
        }
    }
    Ok(())
}

/// One epoch's worth of training telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_surrogate_risk: f64,
    pub val_rcr_loss: f64,
    pub val_rej_rate: f64,
}

/// Per-epoch training curve; always exactly `epochs` records long.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn final_val_rcr_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.val_rcr_loss)
    }

    pub fn write_csv(&self, mut writer: impl Write) -> Result<()> {
        writeln!(writer, "epoch,train_surrogate_risk,val_rcr_loss,val_rej_rate")?;
        for rec in &self.records {
            writeln!(
                writer,
                "{},{},{},{}",
                rec.epoch, rec.train_surrogate_risk, rec.val_rcr_loss, rec.val_rej_rate
            )?;
        }
        Ok(())
    }
}

struct Batch {
    features: Matrix,
    targets: Vec<f64>,
    costs: Vec<f64>,
}

fn gather_batch(ds: &Dataset, costs: &[f64], indices: &[usize]) -> Batch {
    Batch {
        features: ds.features.take_rows(indices),
        targets: indices.iter().map(|&i| ds.targets[i]).collect(),
        costs: indices.iter().map(|&i| costs[i]).collect(),
    }
}

/// Mean target loss and rejection rate of the pair on a dataset.
fn validation_stats(h: &ModelParams, r: &ModelParams, ds: &Dataset, costs: &[f64]) -> Result<(f64, f64)> {
    let (h_out, _) = forward(h, &ds.features)?;
    let (r_out, _) = forward(r, &ds.features)?;
    let n = ds.len();
    let mut loss_sum = 0.0;
    let mut rejected = 0usize;
    for i in 0..n {
        let accept = r_out.get(i, 0) > 0.0;
        if accept {
            let d = h_out.get(i, 0) - ds.targets[i];
            loss_sum += d * d;
        } else {
            loss_sum += costs[i];
            rejected += 1;
        }
    }
    Ok((loss_sum / n as f64, rejected as f64 / n as f64))
}

/// Train a regressor/rejector pair by descending the empirical surrogate risk.
///
/// Epochs 1..=slow_start_epochs update only the regressor on plain MSE; the
/// remaining epochs update both models on the mean surrogate loss of each
/// minibatch. Shuffling is seeded per epoch. Returns the final pair and the
/// per-epoch history. A non-finite loss aborts with [`Error::Diverged`].
pub fn train_rcr(
    train: &Dataset,
    val: &Dataset,
    spec_h: &ModelSpec,
    spec_r: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<(RcRPair, TrainHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty { what: "training set" });
    }
    let train_costs = cfg.cost.resolve(train)?;
    let val_costs = cfg.cost.resolve(val)?;

    let root = Rng::new(cfg.seed);
    let mut h = init_params(spec_h, &mut root.fork(0))?;
    let mut r = init_params(spec_r, &mut root.fork(1))?;
    let mut adam_h = AdamState::new(&h);
    let mut adam_r = AdamState::new(&r);

    // The rejector is frozen during slow-start, so its outputs over the
    // training set can be computed once up front.
    let frozen_r_out: Vec<f64> = if cfg.slow_start_epochs > 0 {
        forward(&r, &train.features)?.0.as_slice().to_vec()
    } else {
        Vec::new()
    };

    let n = train.len();
    let mut history = TrainHistory::default();
    let mut indices: Vec<usize> = (0..n).collect();

    for epoch in 1..=cfg.epochs {
        let mut shuffle_rng = root.fork(2 + (epoch as u64 - 1));
        shuffle_rng.shuffle(&mut indices);
        let slow = epoch <= cfg.slow_start_epochs;
        let mut risk_sum = 0.0;

        for chunk in indices.chunks(cfg.batch_size) {
            let batch = gather_batch(train, &train_costs, chunk);
            let b = chunk.len() as f64;
            let (h_out, h_cache) = forward(&h, &batch.features)?;

            if slow {
                // Surrogate risk is still what the history reports.
                let mut mse = 0.0;
                let mut surrogate = 0.0;
                let mut upstream = Matrix::zeros(chunk.len(), 1);
                for (i, &orig) in chunk.iter().enumerate() {
                    let d = h_out.get(i, 0) - batch.targets[i];
                    mse += d * d;
                    surrogate += raw_surrogate_loss(
                        cfg.loss_kind,
                        h_out.get(i, 0),
                        batch.targets[i],
                        frozen_r_out[orig],
                        batch.costs[i],
                    );
                    upstream.set(i, 0, 2.0 * d / b);
                }
                if !mse.is_finite() || !surrogate.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                risk_sum += surrogate;
                let grads = backward(&h, &h_cache, &upstream)?;
                adam_step(&mut h, &grads, &mut adam_h, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon)?;
            } else {
                let (r_out, r_cache) = forward(&r, &batch.features)?;
                let mut surrogate = 0.0;
                let mut upstream_h = Matrix::zeros(chunk.len(), 1);
                let mut upstream_r = Matrix::zeros(chunk.len(), 1);
                for i in 0..chunk.len() {
                    let (loss, d_h, d_r) = raw_surrogate_loss_and_grads(
                        cfg.loss_kind,
                        h_out.get(i, 0),
                        batch.targets[i],
                        r_out.get(i, 0),
                        batch.costs[i],
                    );
                    surrogate += loss;
                    upstream_h.set(i, 0, d_h / b);
                    upstream_r.set(i, 0, d_r / b);
                }
                if !surrogate.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                risk_sum += surrogate;
                let grads_h = backward(&h, &h_cache, &upstream_h)?;
                let grads_r = backward(&r, &r_cache, &upstream_r)?;
                adam_step(&mut h, &grads_h, &mut adam_h, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon)?;
                adam_step(&mut r, &grads_r, &mut adam_r, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon)?;
            }
        }

        let train_risk = risk_sum / n as f64;
        if !train_risk.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let (val_rcr_loss, val_rej_rate) = validation_stats(&h, &r, val, &val_costs)?;
        if !val_rcr_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.records.push(EpochRecord { epoch, train_surrogate_risk: train_risk, val_rcr_loss, val_rej_rate });
    }

    Ok((RcRPair::new(h, r)?, history))
}

/// Plain supervised baseline: Adam on mean squared error over all examples,
/// with the same batching, epoch count, and stream layout as [`train_rcr`].
pub fn train_supervised(train: &Dataset, spec: &ModelSpec, cfg: &TrainConfig) -> Result<ModelParams> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty { what: "training set" });
    }
    let root = Rng::new(cfg.seed);
    let mut params = init_params(spec, &mut root.fork(0))?;
    let mut adam = AdamState::new(&params);
    let n = train.len();
    let mut indices: Vec<usize> = (0..n).collect();

    for epoch in 1..=cfg.epochs {
        let mut shuffle_rng = root.fork(2 + (epoch as u64 - 1));
        shuffle_rng.shuffle(&mut indices);
        for chunk in indices.chunks(cfg.batch_size) {
            let b = chunk.len() as f64;
            let features = train.features.take_rows(chunk);
            let (out, cache) = forward(&params, &features)?;
            let mut mse = 0.0;
            let mut upstream = Matrix::zeros(chunk.len(), 1);
            for (i, &orig) in chunk.iter().enumerate() {
                let d = out.get(i, 0) - train.targets[orig];
                mse += d * d;
                upstream.set(i, 0, 2.0 * d / b);
            }
            if !mse.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let grads = backward(&params, &cache, &upstream)?;
            adam_step(&mut params, &grads, &mut adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon)?;
        }
    }
    Ok(params)
}

pub(crate) struct LrSelection {
    pub config: TrainConfig,
    pub best_run: (RcRPair, TrainHistory),
}

pub(crate) fn select_lr_detailed(
    train: &Dataset,
    val: &Dataset,
    spec_h: &ModelSpec,
    spec_r: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<LrSelection> {
    if cfg.lr_grid.is_empty() {
        return Err(Error::Empty { what: "learning-rate grid" });
    }
    let mut grid = cfg.lr_grid.clone();
    grid.sort_by(f64::total_cmp);
    let mut trials = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64, (RcRPair, TrainHistory))> = None;
    for &lr in &grid {
        let mut candidate = cfg.clone();
        candidate.lr = lr;
        match train_rcr(train, val, spec_h, spec_r, &candidate) {
            Ok((pair, history)) => {
                let score = history.final_val_rcr_loss().unwrap_or(f64::INFINITY);
                trials.push(LrTrial { lr, final_val_rcr_loss: Some(score) });
                // Ties break toward the smaller lr: the grid is ascending and
                // replacement is strict.
                let better = match &best {
                    Some((best_score, _, _)) => score < *best_score,
                    None => score.is_finite(),
                };
                if better && score.is_finite() {
                    best = Some((score, lr, (pair, history)));
                }
            }
            Err(Error::Diverged { .. }) => {
                trials.push(LrTrial { lr, final_val_rcr_loss: None });
            }
            Err(other) => return Err(other),
        }
    }
    match best {
        Some((_, lr, best_run)) => {
            let mut chosen = cfg.clone();
            chosen.lr = lr;
            Ok(LrSelection { config: chosen, best_run, trials })
        }
        None => Err(Error::Invalid {
            what: "learning-rate selection",
            reason: "every learning rate in the grid diverged".into(),
        }),
    }
}

/// Pick the grid learning rate that minimizes final-epoch validation RcR
/// loss. Divergent runs are treated as infinitely bad; ties break toward the
/// smaller rate.
pub fn select_lr(
    train: &Dataset,
    val: &Dataset,
    spec_h: &ModelSpec,
    spec_r: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainConfig> {
    Ok(select_lr_detailed(train, val, spec_h, spec_r, cfg)?.config)
}
