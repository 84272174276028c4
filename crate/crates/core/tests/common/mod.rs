#![allow(dead_code)]

use nclf_core::data::{Dataset, TripletEvent};
use nclf_core::models::{init_params, logistic, Gradient, LatentModel, Model, ModelShape, NclfRanks};
use nclf_core::training::{estimate_biases, loss, loss_gradient};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Events drawn from a known model: a fraction `observed` of all cells is
/// eligible, `n_events` cells are drawn uniformly from those with
/// replacement, and labels are Bernoulli in the model's probability.
pub struct Synthetic {
    pub generator: Model,
    pub data: Dataset,
}

pub fn nclf_generator(dims: [usize; 3], scale: f64, seed: u64) -> Model {
    let mut m = init_params(ModelShape::Nclf(NclfRanks::uniform(1)), dims, seed, scale).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    for t in m.tables_mut() {
        if t.rows == 1 {
            for x in t.data.iter_mut() {
                *x = if rng.random::<bool>() { 1.0 } else { -1.0 } * rng.random_range(0.5..1.5);
            }
        }
    }
    m
}

pub fn sample_events(generator: Model, observed: f64, n_events: usize, seed: u64) -> Synthetic {
    let dims = generator.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<(u32, u32, u32)> = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    for i in 0..dims[0] as u32 {
        for j in 0..dims[1] as u32 {
            for k in 0..dims[2] as u32 {
                cells.push((i, j, k));
            }
        }
    }
    cells.shuffle(&mut rng);
    cells.truncate(((cells.len() as f64) * observed).round() as usize);
    let events = (0..n_events)
        .map(|_| {
            let (i, j, k) = cells[rng.random_range(0..cells.len())];
            let p = generator.predict_probability(i as usize, j as usize, k as usize).unwrap();
            TripletEvent::new(i, j, k, rng.random::<f64>() < p)
        })
        .collect();
    Synthetic {
        data: Dataset::from_events(dims, events).unwrap(),
        generator,
    }
}

pub fn probabilities(model: &Model, events: &[TripletEvent]) -> (Vec<f64>, Vec<bool>) {
    events
        .iter()
        .map(|e| {
            let (i, j, k) = e.index();
            (logistic(model.predict_logodds(i, j, k).unwrap()), e.y)
        })
        .unzip()
}

/// Random train/holdout split by event.
pub fn split(events: &[TripletEvent], holdout_fraction: f64, seed: u64) -> (Vec<TripletEvent>, Vec<TripletEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for e in events {
        if rng.random::<f64>() < holdout_fraction {
            test.push(*e);
        } else {
            train.push(*e);
        }
    }
    (train, test)
}

// Finite-difference oracle on a small grid.

pub const FD_DIMS: [usize; 3] = [6, 5, 4];
pub const FD_STEP: f64 = 1e-5;

pub fn fd_shapes() -> Vec<ModelShape> {
    vec![
        ModelShape::Bias,
        ModelShape::Cp { rank: 3 },
        ModelShape::PrimitiveNclf { mu_rank: 2, a_rank: 2 },
        ModelShape::Nclf(NclfRanks { s: 1, a: 2, j31m: 1, j31p: 2, j23m: 1, j23p: 1 }),
    ]
}

pub fn random_model(shape: ModelShape, seed: u64) -> Model {
    let mut m = init_params(shape, FD_DIMS, seed, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 99);
    for t in m.tables_mut() {
        for x in t.data.iter_mut() {
            *x = rng.random_range(-1.5..1.5);
        }
    }
    let b = m.biases_mut();
    b.b0 = 0.3;
    for v in [&mut b.b1, &mut b.b2, &mut b.b3] {
        for x in v.iter_mut() {
            *x = rng.random_range(-0.5..0.5);
        }
    }
    m
}

/// `|a − b| / max(|a|, |b|, 1e-3)`; the floor keeps exact zeros from
/// turning rounding noise into a relative error.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub fn central_difference(model: &Model, f: impl Fn(&Model) -> f64) -> Vec<f64> {
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut p = base.clone();
    (0..base.len())
        .map(|n| {
            p[n] = base[n] + FD_STEP;
            probe.set_flat_params(&p).unwrap();
            let up = f(&probe);
            p[n] = base[n] - FD_STEP;
            probe.set_flat_params(&p).unwrap();
            let down = f(&probe);
            p[n] = base[n];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn worst_logodds_error(shape: ModelShape, seed: u64) -> f64 {
    let model = random_model(shape, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Gradient::new();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (i, j, k) = (rng.random_range(0..FD_DIMS[0]), rng.random_range(0..FD_DIMS[1]), rng.random_range(0..FD_DIMS[2]));
        model.grad_logodds(i, j, k, &mut g).unwrap();
        let mut analytic = vec![0.0; model.num_params()];
        g.scatter_into(model.tables(), &mut analytic, 1.0);
        let numeric = central_difference(&model, |m| m.predict_logodds(i, j, k).unwrap());
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(rel_err(*a, *n));
        }
    }
    worst
}

pub fn random_events(n: usize, seed: u64) -> Vec<TripletEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            TripletEvent::new(
                rng.random_range(0..FD_DIMS[0] as u32),
                rng.random_range(0..FD_DIMS[1] as u32),
                rng.random_range(0..FD_DIMS[2] as u32),
                rng.random(),
            )
        })
        .collect()
}

pub fn worst_loss_error(lambda: f64, regularize_coefficients: bool) -> f64 {
    let events = random_events(60, 4);
    let mut worst = 0.0f64;
    for (n, shape) in fd_shapes().into_iter().enumerate() {
        let mut model = random_model(shape, 30 + n as u64);
        *model.biases_mut() = estimate_biases(FD_DIMS, &events).unwrap();
        let analytic = loss_gradient(&model, &events, lambda, regularize_coefficients).unwrap();
        let numeric = central_difference(&model, |m| loss(m, &events, lambda, regularize_coefficients));
        for (a, x) in analytic.iter().zip(&numeric) {
            worst = worst.max(rel_err(*a, *x));
        }
    }
    worst
}

