//! Bias estimation, the regularized logistic loss and momentum SGD.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dims, TripletEvent};
use crate::error::{Error, Result};
use crate::models::{logistic, BiasTables, Gradient, LatentModel, Model, TableRole};

/// Empirical log-odds with +1 smoothing.
pub fn estimate_biases(dims: Dims, events: &[TripletEvent]) -> Result<BiasTables> {
    if events.is_empty() {
        return Err(Error::Usage("cannot estimate biases from an empty dataset".into()));
    }
    let mut pos = [vec![0u64; dims[0]], vec![0u64; dims[1]], vec![0u64; dims[2]]];
    let mut neg = pos.clone();
    let (mut p, mut n) = (0u64, 0u64);
    for e in events {
        let (i, j, k) = e.index();
        if i >= dims[0] || j >= dims[1] || k >= dims[2] {
            return Err(Error::Bounds { i, j, k, dims });
        }
        let counts = if e.y {
            p += 1;
            &mut pos
        } else {
            n += 1;
            &mut neg
        };
        counts[0][i] += 1;
        counts[1][j] += 1;
        counts[2][k] += 1;
    }
    let log_odds = |p: u64, n: u64| ((p as f64 + 1.0) / (n as f64 + 1.0)).ln();
    let b0 = log_odds(p, n);
    let table = |f: usize| -> Vec<f64> {
        pos[f]
            .iter()
            .zip(&neg[f])
            .map(|(&p, &n)| log_odds(p, n) - b0)
            .collect()
    };
    Ok(BiasTables {
        b0,
        b1: table(0),
        b2: table(1),
        b3: table(2),
    })
}

/// `softplus(t) − y·t`, the log-loss of logit `t` on label `y`.
#[inline]
pub fn log_loss(logit: f64, y: bool) -> f64 {
    let softplus = logit.max(0.0) + (-logit.abs()).exp().ln_1p();
    if y {
        softplus - logit
    } else {
        softplus
    }
}

/// Squared norm of the regularized tables.
pub fn penalty_norm_sq(model: &Model, regularize_coefficients: bool) -> f64 {
    model
        .tables()
        .iter()
        .filter(|t| regularize_coefficients || t.role != TableRole::Coefficient)
        .map(|t| t.norm_sq())
        .sum()
}

/// Summed log-loss over `events` plus `λ·‖θ‖²`.
pub fn loss(model: &Model, events: &[TripletEvent], lambda: f64, regularize_coefficients: bool) -> f64 {
    data_loss(model, events) + lambda * penalty_norm_sq(model, regularize_coefficients)
}

/// Summed log-loss without the penalty.
pub fn data_loss(model: &Model, events: &[TripletEvent]) -> f64 {
    events
        .iter()
        .map(|e| {
            let (i, j, k) = e.index();
            log_loss(model.logodds_unchecked(i, j, k), e.y)
        })
        .sum()
}

/// Mean log-loss per event.
pub fn mean_log_loss(model: &Model, events: &[TripletEvent]) -> f64 {
    if events.is_empty() {
        return f64::NAN;
    }
    data_loss(model, events) / events.len() as f64
}

/// Full-batch gradient of [`loss`], laid out like [`Model::flat_params`].
pub fn loss_gradient(
    model: &Model,
    events: &[TripletEvent],
    lambda: f64,
    regularize_coefficients: bool,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; model.num_params()];
    let mut g = Gradient::new();
    for e in events {
        let (i, j, k) = e.index();
        let residual = logistic(model.predict_logodds(i, j, k)?) - e.label();
        model.grad_logodds(i, j, k, &mut g)?;
        g.scatter_into(model.tables(), &mut out, residual);
    }
    let mut offset = 0;
    for t in model.tables() {
        if regularize_coefficients || t.role != TableRole::Coefficient {
            for (o, x) in out[offset..offset + t.data.len()].iter_mut().zip(&t.data) {
                *o += 2.0 * lambda * x;
            }
        }
        offset += t.data.len();
    }
    Ok(out)
}

/// `η_t = η₀ / (1 + t/τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub eta0: f64,
    pub tau: f64,
}

impl StepSchedule {
    #[inline]
    pub fn step_size(&self, t: u64) -> f64 {
        self.eta0 / (1.0 + t as f64 / self.tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eta0: f64,
    /// Decay time of the step size in SGD steps; `None` means one epoch.
    pub tau: Option<f64>,
    pub momentum: f64,
    pub lambda: f64,
    pub seed: u64,
    pub shuffle: bool,
    pub regularize_coefficients: bool,
    /// Standard deviation of the Gaussian initialization.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            eta0: 0.01,
            tau: None,
            momentum: 0.9,
            lambda: 1e-3,
            seed: 0,
            shuffle: true,
            regularize_coefficients: true,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Usage(format!("{field}: {why}")));
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0", format!("must be positive and finite, got {}", self.eta0));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", format!("must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("must be finite and >= 0, got {}", self.lambda));
        }
        if let Some(tau) = self.tau {
            if tau.is_nan() || tau <= 0.0 {
                return bad("tau", format!("must be positive, got {tau}"));
            }
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale", format!("must be finite and >= 0, got {}", self.init_scale));
        }
        Ok(())
    }

    pub fn schedule(&self, n_events: usize) -> StepSchedule {
        StepSchedule {
            eta0: self.eta0,
            tau: self.tau.unwrap_or(n_events.max(1) as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Step size at the end of the epoch.
    pub eta: f64,
    /// Mean log-loss per training event.
    pub train_loss: f64,
    /// Full penalized objective.
    pub objective: f64,
    pub holdout_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub wall_time: Duration,
}

impl TrainReport {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

/// Multiplicative L2 decay shared by all rows, applied to a row only when it
/// is next touched. `log_cum` is the running sum of `ln(1 − 2ηλ/n)`; a step
/// whose factor is non-positive zeroes everything and is recorded in `wiped_at`.
struct LazyDecay {
    enabled: bool,
    step: u64,
    log_cum: f64,
    wiped_at: Option<u64>,
    // per table, per row: (step of last sync, log_cum at last sync)
    stamps: Vec<Vec<(u64, f64)>>,
}

impl LazyDecay {
    fn new(model: &Model, lambda: f64, regularize_coefficients: bool) -> Self {
        Self {
            enabled: lambda > 0.0,
            step: 0,
            log_cum: 0.0,
            wiped_at: None,
            stamps: model
                .tables()
                .iter()
                .map(|t| {
                    let decays = regularize_coefficients || t.role != TableRole::Coefficient;
                    if decays {
                        vec![(0, 0.0); t.rows]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        }
    }

    fn sync_row(&mut self, model: &mut Model, table: usize, row: usize) {
        if !self.enabled || self.stamps[table].is_empty() {
            return;
        }
        let (last_step, last_cum) = self.stamps[table][row];
        let factor = match self.wiped_at {
            Some(w) if w >= last_step => 0.0,
            _ => (self.log_cum - last_cum).exp(),
        };
        if factor != 1.0 {
            for x in model.tables_mut()[table].row_mut(row) {
                *x *= factor;
            }
        }
        self.stamps[table][row] = (self.step, self.log_cum);
    }

    fn sync_all(&mut self, model: &mut Model) {
        for t in 0..self.stamps.len() {
            for r in 0..self.stamps[t].len() {
                self.sync_row(model, t, r);
            }
        }
    }

    fn advance(&mut self, eta: f64, lambda: f64, n: usize) {
        if !self.enabled {
            return;
        }
        let d = 1.0 - 2.0 * eta * lambda / n as f64;
        if d > 0.0 {
            self.log_cum += d.ln();
        } else {
            self.wiped_at = Some(self.step);
        }
        self.step += 1;
    }
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Momentum SGD over `events`, one event per step. Biases stay frozen.
///
/// For every touched row the data gradient drives `v ← m·v − η_t·(p − y)·∂T/∂θ`,
/// `θ ← θ + v`. The L2 term is applied as a decay of every regularized row by
/// `1 − 2η_tλ/n` per step, so one epoch applies the full-batch penalty once.
pub fn sgd_train(
    model: &mut Model,
    events: &[TripletEvent],
    config: &TrainConfig,
    holdout: Option<&[TripletEvent]>,
) -> Result<TrainReport> {
    config.validate()?;
    if events.is_empty() {
        return Err(Error::Usage("cannot train on an empty dataset".into()));
    }
    let dims = model.dims();
    for e in events.iter().chain(holdout.unwrap_or(&[])) {
        let (i, j, k) = e.index();
        if i >= dims[0] || j >= dims[1] || k >= dims[2] {
            return Err(Error::Bounds { i, j, k, dims });
        }
    }
    let start = Instant::now();
    let n = events.len();
    let schedule = config.schedule(n);
    let mut velocity: Vec<Vec<f64>> = model.tables().iter().map(|t| vec![0.0; t.data.len()]).collect();
    let mut decay = LazyDecay::new(model, config.lambda, config.regularize_coefficients);
    let mut order: Vec<usize> = (0..n).collect();
    let roles: Vec<TableRole> = model.tables().iter().map(|t| t.role).collect();
    let mut grad = Gradient::new();
    let mut records = Vec::with_capacity(config.epochs);
    let mut t: u64 = 0;

    for epoch in 0..config.epochs {
        if config.shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(config.seed, epoch));
            order.shuffle(&mut rng);
        }
        let mut eta = schedule.step_size(t);
        for &ix in &order {
            let e = events[ix];
            let (i, j, k) = e.index();
            eta = schedule.step_size(t);
            let touched = [(i, 0usize), (j, 1), (k, 2)];
            for (ti, role) in roles.iter().enumerate() {
                let row = match *role {
                    TableRole::Factor(f) => touched[f].0,
                    TableRole::Coefficient => 0,
                };
                decay.sync_row(model, ti, row);
            }
            let residual = logistic(model.logodds_unchecked(i, j, k)) - e.label();
            grad.clear();
            model.interaction_grad(i, j, k, &mut grad);
            let tables = model.tables_mut();
            for (entry, g) in grad.iter() {
                let width = tables[entry.table].width;
                let base = entry.row * width;
                let vel = &mut velocity[entry.table][base..base + width];
                let theta = tables[entry.table].row_mut(entry.row);
                for ((v, x), gx) in vel.iter_mut().zip(theta.iter_mut()).zip(g) {
                    *v = config.momentum * *v - eta * residual * gx;
                    *x += *v;
                }
            }
            decay.advance(eta, config.lambda, n);
            t += 1;
        }
        decay.sync_all(model);

        let data = data_loss(model, events);
        let objective = data + config.lambda * penalty_norm_sq(model, config.regularize_coefficients);
        let holdout_loss = holdout.filter(|h| !h.is_empty()).map(|h| mean_log_loss(model, h));
        if !objective.is_finite() || holdout_loss.is_some_and(|h| !h.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                eta,
                loss: objective,
            });
        }
        records.push(EpochRecord {
            epoch,
            eta,
            train_loss: data / n as f64,
            objective,
            holdout_loss,
        });
    }
    Ok(TrainReport {
        epochs: records,
        wall_time: start.elapsed(),
    })
}
