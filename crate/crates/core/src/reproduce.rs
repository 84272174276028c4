//! The five-way benchmark comparison: bias only, CP at rank 13, CP at rank 5,
//! primitive NCLF and NCLF, each tuned over a λ grid and measured by
//! cross-validation on identical folds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::evaluation::{cross_validate, mean, std_error, CvOutcome, CvProtocol, GridPoint};
use crate::models::{ModelShape, NclfRanks};
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Benchmark {
    BiasOnly,
    Cp13,
    BestCp5,
    PrimitiveNclf,
    Nclf,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::BiasOnly,
        Benchmark::Cp13,
        Benchmark::BestCp5,
        Benchmark::PrimitiveNclf,
        Benchmark::Nclf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Benchmark::BiasOnly => "Bias only",
            Benchmark::Cp13 => "CP, R=13",
            Benchmark::BestCp5 => "best CP, R=5",
            Benchmark::PrimitiveNclf => "primitive NCLF",
            Benchmark::Nclf => "NCLF",
        }
    }

    pub fn shape(self, primitive_a_rank: usize) -> ModelShape {
        match self {
            Benchmark::BiasOnly => ModelShape::Bias,
            Benchmark::Cp13 => ModelShape::Cp { rank: 13 },
            Benchmark::BestCp5 => ModelShape::Cp { rank: 5 },
            Benchmark::PrimitiveNclf => ModelShape::PrimitiveNclf {
                mu_rank: 5,
                a_rank: primitive_a_rank,
            },
            Benchmark::Nclf => ModelShape::Nclf(NclfRanks::uniform(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub benchmark: Benchmark,
    pub outcome: CvOutcome,
}

/// Paired difference NCLF − best CP over the shared measurement folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub auc: f64,
    pub d_auc: f64,
    pub l1: f64,
    pub d_l1: f64,
    pub l2: f64,
    pub d_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<BenchmarkRow>,
    pub delta: Option<DeltaRow>,
}

impl ComparisonTable {
    pub fn row(&self, b: Benchmark) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.benchmark == b)
    }

    /// Fixed-width table; Δ columns are standard errors × 10⁴.
    pub fn render(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{title}");
        let _ = writeln!(
            s,
            "{:>2}  {:<16} {:>7} {:>6} {:>7} {:>6} {:>7} {:>6}",
            "#", "Method", "AUC", "dAUC", "L1", "dL1", "L2", "dL2"
        );
        for (n, r) in self.rows.iter().enumerate() {
            let m = &r.outcome.summary;
            let _ = writeln!(
                s,
                "{:>2}  {:<16} {:>7.4} {:>6.0} {:>7.4} {:>6.0} {:>7.4} {:>6.0}",
                n + 1,
                r.benchmark.label(),
                m.auc,
                m.d_auc * 1e4,
                m.l1,
                m.d_l1 * 1e4,
                m.l2,
                m.d_l2 * 1e4
            );
        }
        if let Some(d) = &self.delta {
            let _ = writeln!(
                s,
                "{:>2}  {:<16} {:>7.4} {:>6.0} {:>7.4} {:>6.0} {:>7.4} {:>6.0}",
                "",
                "NCLF-best CP",
                d.auc,
                d.d_auc * 1e4,
                d.l1,
                d.d_l1 * 1e4,
                d.l2,
                d.d_l2 * 1e4
            );
        }
        s
    }
}

fn paired_delta(nclf: &CvOutcome, cp: &CvOutcome) -> Result<DeltaRow> {
    let diff = |f: fn(&crate::evaluation::FoldMetrics) -> f64| -> Vec<f64> {
        nclf.folds.iter().zip(&cp.folds).map(|(a, b)| f(a) - f(b)).collect()
    };
    let (a, l1, l2) = (diff(|m| m.auc), diff(|m| m.l1), diff(|m| m.l2));
    Ok(DeltaRow {
        auc: mean(&a).abs(),
        d_auc: std_error(&a)?,
        l1: mean(&l1).abs(),
        d_l1: std_error(&l1)?,
        l2: mean(&l2).abs(),
        d_l2: std_error(&l2)?,
    })
}

/// Runs the selected benchmarks. Every model sees the same fold plans.
pub fn run_benchmarks(
    data: &Dataset,
    benchmarks: &[Benchmark],
    lambda_grid: &[f64],
    config: &TrainConfig,
    protocol: &CvProtocol,
    primitive_a_rank: usize,
    mut on_row: impl FnMut(&BenchmarkRow),
) -> Result<ComparisonTable> {
    let mut rows = Vec::new();
    for &b in benchmarks {
        let shape = b.shape(primitive_a_rank);
        let grid: Vec<GridPoint> = if shape == ModelShape::Bias {
            vec![GridPoint { shape, lambda: 0.0 }]
        } else {
            lambda_grid
                .iter()
                .map(|&lambda| GridPoint { shape, lambda })
                .collect()
        };
        let outcome = cross_validate(data, &grid, config, protocol)?;
        let row = BenchmarkRow {
            benchmark: b,
            outcome,
        };
        on_row(&row);
        rows.push(row);
    }
    let find = |b| rows.iter().find(|r: &&BenchmarkRow| r.benchmark == b);
    let delta = match (find(Benchmark::Nclf), find(Benchmark::BestCp5)) {
        (Some(n), Some(c)) => Some(paired_delta(&n.outcome, &c.outcome)?),
        _ => None,
    };
    Ok(ComparisonTable { rows, delta })
}
