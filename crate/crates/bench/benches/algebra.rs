use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nclf_bench::cperp_triplets;
use nclf_core::algebra::{component_j, component_s, decompose, mu, CubicalTensor, JacobiTag};

fn products(c: &mut Criterion) {
    let xs = cperp_triplets(1024, 1);
    c.bench_function("mu x1024", |b| {
        b.iter(|| xs.iter().map(|[u, v, w]| mu(*u, *v, *w).c1).sum::<f64>())
    });
    c.bench_function("S x1024", |b| {
        b.iter(|| xs.iter().map(|[u, v, w]| component_s(*u, *v, *w).c1).sum::<f64>())
    });
    c.bench_function("J31+ x1024", |b| {
        b.iter(|| {
            xs.iter()
                .map(|[u, v, w]| component_j(JacobiTag::J31Plus, *u, *v, *w).c3)
                .sum::<f64>()
        })
    });
}

fn tensors(c: &mut Criterion) {
    let t = CubicalTensor::from_fn(20, |i, j, k| ((i * 7 + j * 3 + k) % 11) as f64 - 5.0);
    c.bench_function("decompose n=20", |b| b.iter(|| decompose(black_box(&t)).unwrap()));
}

criterion_group!(benches, products, tensors);
criterion_main!(benches);
