//! Ranking and calibration metrics, fold plans and the two-stage
//! cross-validation protocol (grid selection, then performance measurement).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TripletEvent};
use crate::error::{Error, Result};
use crate::models::{init_params, logistic, LatentModel, Model, ModelShape};
use crate::training::{estimate_biases, sgd_train, TrainConfig};

/// Area under the ROC curve via midranks; ties count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs at least one positive and one negative label".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Usage("AUC scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based start+1..=end) share their mean
        let mid = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&ix| labels[ix]).count();
        rank_sum_pos += mid * pos_in_group as f64;
        start = end;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

fn check_pairs(probs: &[f64], labels: &[bool]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Usage("error metric of an empty sample".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} probabilities but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Usage(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Mean absolute error of probabilities.
pub fn l1_error(probs: &[f64], labels: &[bool]) -> Result<f64> {
    check_pairs(probs, labels)?;
    let s: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| (p - if y { 1.0 } else { 0.0 }).abs())
        .sum();
    Ok(s / probs.len() as f64)
}

/// Root-mean-square error of probabilities.
pub fn l2_error(probs: &[f64], labels: &[bool]) -> Result<f64> {
    check_pairs(probs, labels)?;
    let s: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| (p - if y { 1.0 } else { 0.0 }).powi(2))
        .sum();
    Ok((s / probs.len() as f64).sqrt())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation over `sqrt(n)`.
pub fn std_error(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Usage(format!("standard error needs >= 2 values, got {n}")));
    }
    let m = mean(values);
    let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub auc: f64,
    pub l1: f64,
    pub l2: f64,
}

impl FoldMetrics {
    pub fn compute(probs: &[f64], labels: &[bool]) -> Result<Self> {
        Ok(Self {
            auc: auc(probs, labels)?,
            l1: l1_error(probs, labels)?,
            l2: l2_error(probs, labels)?,
        })
    }
}

/// Fold means with sample standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub auc: f64,
    pub d_auc: f64,
    pub l1: f64,
    pub d_l1: f64,
    pub l2: f64,
    pub d_l2: f64,
}

impl MetricSummary {
    pub fn from_folds(folds: &[FoldMetrics]) -> Result<Self> {
        let col = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).collect::<Vec<_>>();
        let (a, l1, l2) = (col(|m| m.auc), col(|m| m.l1), col(|m| m.l2));
        Ok(Self {
            auc: mean(&a),
            d_auc: std_error(&a)?,
            l1: mean(&l1),
            d_l1: std_error(&l1)?,
            l2: mean(&l2),
            d_l2: std_error(&l2)?,
        })
    }
}

/// Random event-to-fold assignment with fold sizes differing by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    pub assignment: Vec<u32>,
}

impl FoldPlan {
    pub fn new(n_events: usize, n_folds: usize, seed: u64) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::Usage(format!("need at least 2 folds, got {n_folds}")));
        }
        if n_folds > n_events {
            return Err(Error::Usage(format!(
                "{n_folds} folds requested for only {n_events} events"
            )));
        }
        let mut perm: Vec<usize> = (0..n_events).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignment = vec![0u32; n_events];
        for (pos, &ix) in perm.iter().enumerate() {
            assignment[ix] = (pos % n_folds) as u32;
        }
        Ok(Self {
            n_folds,
            seed,
            assignment,
        })
    }

    /// `(train, test)` events of fold `f`.
    pub fn split(&self, events: &[TripletEvent], f: usize) -> (Vec<TripletEvent>, Vec<TripletEvent>) {
        let mut train = Vec::with_capacity(events.len());
        let mut test = Vec::with_capacity(events.len() / self.n_folds + 1);
        for (e, &a) in events.iter().zip(&self.assignment) {
            if a as usize == f {
                test.push(*e);
            } else {
                train.push(*e);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &a in &self.assignment {
            sizes[a as usize] += 1;
        }
        sizes
    }
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub shape: ModelShape,
    pub lambda: f64,
}

/// Fold counts and seeds of the two CV stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvProtocol {
    /// Folds used to pick the grid point.
    pub selection_folds: usize,
    /// Evaluate only the first this-many selection folds (all when `None`).
    pub selection_folds_used: Option<usize>,
    /// Folds used to measure the chosen point.
    pub measurement_folds: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

impl Default for CvProtocol {
    fn default() -> Self {
        Self {
            selection_folds: 9,
            selection_folds_used: None,
            measurement_folds: 25,
            seed: 0,
            jobs: 0,
        }
    }
}

impl CvProtocol {
    /// Five measurement folds; λ is picked on three of the nine selection folds.
    pub fn desk() -> Self {
        Self {
            selection_folds_used: Some(3),
            measurement_folds: 5,
            ..Self::default()
        }
    }
}

/// Default λ grid.
pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

/// Trains `point` on `train` (biases re-estimated there) and returns the model.
pub fn fit(
    data: &Dataset,
    train: &[TripletEvent],
    point: &GridPoint,
    config: &TrainConfig,
    seed: u64,
) -> Result<Model> {
    let dims = data.dims();
    let mut model = init_params(point.shape, dims, seed, config.init_scale)?;
    *model.biases_mut() = estimate_biases(dims, train)?;
    if model.num_params() > 0 {
        let cfg = TrainConfig {
            lambda: point.lambda,
            seed,
            ..config.clone()
        };
        sgd_train(&mut model, train, &cfg, None)?;
    }
    Ok(model)
}

pub fn predict_events(model: &Model, events: &[TripletEvent]) -> (Vec<f64>, Vec<bool>) {
    events
        .iter()
        .map(|e| {
            let (i, j, k) = e.index();
            (logistic(model.predict_logodds_cold_start(i, j, k)), e.y)
        })
        .unzip()
}

fn fold_seed(base: u64, stage: u64, fold: usize) -> u64 {
    base.wrapping_mul(6364136223846793005)
        .wrapping_add(stage.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(fold as u64 + 1)
}

/// Trains and scores `point` on the given folds of `plan`.
pub fn evaluate_folds(
    data: &Dataset,
    plan: &FoldPlan,
    folds: &[usize],
    point: &GridPoint,
    config: &TrainConfig,
    stage: u64,
) -> Result<Vec<FoldMetrics>> {
    folds
        .par_iter()
        .map(|&f| {
            let (train, test) = plan.split(&data.events, f);
            let model = fit(data, &train, point, config, fold_seed(config.seed, stage, f))?;
            let (probs, labels) = predict_events(&model, &test);
            FoldMetrics::compute(&probs, &labels)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub chosen: GridPoint,
    /// Mean held-out AUC of every grid point in the selection stage.
    pub selection: Vec<(GridPoint, f64)>,
    pub folds: Vec<FoldMetrics>,
    pub summary: MetricSummary,
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Selection CV over `grid` (best mean held-out AUC, first wins ties), then
/// measurement CV at the chosen point.
pub fn cross_validate(
    data: &Dataset,
    grid: &[GridPoint],
    config: &TrainConfig,
    protocol: &CvProtocol,
) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::Usage("empty hyperparameter grid".into()));
    }
    config.validate()?;
    let n = data.len();
    let measure_plan = FoldPlan::new(n, protocol.measurement_folds, protocol.seed)?;
    with_pool(protocol.jobs, || {
        let (chosen, selection) = if grid.len() == 1 {
            (grid[0], Vec::new())
        } else {
            let plan = FoldPlan::new(n, protocol.selection_folds, protocol.seed ^ 0x005e_1ec7)?;
            let used = protocol
                .selection_folds_used
                .unwrap_or(plan.n_folds)
                .clamp(1, plan.n_folds);
            let folds: Vec<usize> = (0..used).collect();
            let mut scores = Vec::with_capacity(grid.len());
            for point in grid {
                let m = evaluate_folds(data, &plan, &folds, point, config, 1)?;
                let auc = mean(&m.iter().map(|x| x.auc).collect::<Vec<_>>());
                scores.push((*point, auc));
            }
            let mut best = 0;
            for (ix, (_, s)) in scores.iter().enumerate() {
                if *s > scores[best].1 {
                    best = ix;
                }
            }
            (scores[best].0, scores)
        };
        let folds: Vec<usize> = (0..measure_plan.n_folds).collect();
        let metrics = evaluate_folds(data, &measure_plan, &folds, &chosen, config, 2)?;
        let summary = MetricSummary::from_folds(&metrics)?;
        Ok(CvOutcome {
            chosen,
            selection,
            folds: metrics,
            summary,
        })
    })?
}
