//! Log-odds predictors: bias-only, CP, primitive NCLF and full NCLF.
//!
//! Every model keeps its trainable parameters in an ordered list of dense
//! [`Table`]s (latent factor tables with one row per entity, and coefficient
//! tables with a single row). The order is the on-disk order, and it is also
//! the order of the flat parameter vector used by gradient checks.

mod cp;
mod expansion;
pub mod io;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dims;
use crate::error::{Error, Result};

pub use cp::CpModel;
pub use expansion::{NclfModel, NclfRanks, PrimitiveNclfModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Bias,
    Cp,
    PrimitiveNclf,
    Nclf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Bias,
        ModelKind::Cp,
        ModelKind::PrimitiveNclf,
        ModelKind::Nclf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Bias => "bias",
            ModelKind::Cp => "cp",
            ModelKind::PrimitiveNclf => "primitive-nclf",
            ModelKind::Nclf => "nclf",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ModelKind::Bias => 0,
            ModelKind::Cp => 1,
            ModelKind::PrimitiveNclf => 2,
            ModelKind::Nclf => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown model kind {s:?}")))
    }
}

/// Model kind together with its ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelShape {
    Bias,
    Cp { rank: usize },
    PrimitiveNclf { mu_rank: usize, a_rank: usize },
    Nclf(NclfRanks),
}

impl ModelShape {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelShape::Bias => ModelKind::Bias,
            ModelShape::Cp { .. } => ModelKind::Cp,
            ModelShape::PrimitiveNclf { .. } => ModelKind::PrimitiveNclf,
            ModelShape::Nclf(_) => ModelKind::Nclf,
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        match *self {
            ModelShape::Bias => vec![],
            ModelShape::Cp { rank } => vec![rank],
            ModelShape::PrimitiveNclf { mu_rank, a_rank } => vec![mu_rank, a_rank],
            ModelShape::Nclf(r) => r.as_array().to_vec(),
        }
    }

    pub fn from_ranks(kind: ModelKind, ranks: &[usize]) -> Result<Self> {
        let want = match kind {
            ModelKind::Bias => 0,
            ModelKind::Cp => 1,
            ModelKind::PrimitiveNclf => 2,
            ModelKind::Nclf => 6,
        };
        if ranks.len() != want {
            return Err(Error::Usage(format!(
                "{kind} takes {want} ranks, got {}",
                ranks.len()
            )));
        }
        Ok(match kind {
            ModelKind::Bias => ModelShape::Bias,
            ModelKind::Cp => ModelShape::Cp { rank: ranks[0] },
            ModelKind::PrimitiveNclf => ModelShape::PrimitiveNclf {
                mu_rank: ranks[0],
                a_rank: ranks[1],
            },
            ModelKind::Nclf => ModelShape::Nclf(NclfRanks::from_array([
                ranks[0], ranks[1], ranks[2], ranks[3], ranks[4], ranks[5],
            ])),
        })
    }

    /// Defaults for each benchmark: CP rank 13, primitive NCLF `(5, 1)`, NCLF unit ranks.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Bias => ModelShape::Bias,
            ModelKind::Cp => ModelShape::Cp { rank: 13 },
            ModelKind::PrimitiveNclf => ModelShape::PrimitiveNclf {
                mu_rank: 5,
                a_rank: 1,
            },
            ModelKind::Nclf => ModelShape::Nclf(NclfRanks::uniform(1)),
        }
    }
}

impl fmt::Display for ModelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelShape::Bias => write!(f, "bias"),
            ModelShape::Cp { rank } => write!(f, "cp(R={rank})"),
            ModelShape::PrimitiveNclf { mu_rank, a_rank } => {
                write!(f, "primitive-nclf(R_mu={mu_rank}, R_A={a_rank})")
            }
            ModelShape::Nclf(r) => write!(f, "nclf{:?}", r.as_array()),
        }
    }
}

/// Frozen empirical log-odds offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTables {
    pub b0: f64,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub b3: Vec<f64>,
}

impl BiasTables {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            b0: 0.0,
            b1: vec![0.0; dims[0]],
            b2: vec![0.0; dims[1]],
            b3: vec![0.0; dims[2]],
        }
    }

    pub fn dims(&self) -> Dims {
        [self.b1.len(), self.b2.len(), self.b3.len()]
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> f64 {
        self.b0 + self.b1[i] + self.b2[j] + self.b3[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableRole {
    /// Latent rows for factor class 0, 1 or 2.
    Factor(usize),
    /// Single-row ζ or α coefficients.
    Coefficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub role: TableRole,
    pub rows: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Table {
    pub fn zeros(role: TableRole, rows: usize, width: usize) -> Self {
        Self {
            role,
            rows,
            width,
            data: vec![0.0; rows * width],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// One gradient block: the derivative with respect to a full table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradEntry {
    pub table: usize,
    pub row: usize,
    start: usize,
    len: usize,
}

/// Sparse gradient of one prediction. Buffers are reused across calls.
#[derive(Debug, Clone, Default)]
pub struct Gradient {
    entries: Vec<GradEntry>,
    values: Vec<f64>,
}

impl Gradient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.values.clear();
    }

    /// Appends a zeroed block for `(table, row)` and returns it.
    pub fn push(&mut self, table: usize, row: usize, len: usize) -> &mut [f64] {
        let start = self.values.len();
        self.values.resize(start + len, 0.0);
        self.entries.push(GradEntry {
            table,
            row,
            start,
            len,
        });
        &mut self.values[start..]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GradEntry, &[f64])> + '_ {
        self.entries
            .iter()
            .map(|e| (*e, &self.values[e.start..e.start + e.len]))
    }

    /// Scatters into a flat vector laid out like [`Model::flat_params`].
    pub fn scatter_into(&self, tables: &[Table], out: &mut [f64], scale: f64) {
        let offsets = table_offsets(tables);
        for (e, vals) in self.iter() {
            let base = offsets[e.table] + e.row * tables[e.table].width;
            for (o, g) in out[base..base + vals.len()].iter_mut().zip(vals) {
                *o += scale * g;
            }
        }
    }
}

pub(crate) fn table_offsets(tables: &[Table]) -> Vec<usize> {
    let mut acc = 0;
    tables
        .iter()
        .map(|t| {
            let o = acc;
            acc += t.data.len();
            o
        })
        .collect()
}

/// Common surface of the four predictors.
pub trait LatentModel {
    fn kind(&self) -> ModelKind;
    fn shape(&self) -> ModelShape;
    fn biases(&self) -> &BiasTables;
    fn biases_mut(&mut self) -> &mut BiasTables;
    fn tables(&self) -> &[Table];
    fn tables_mut(&mut self) -> &mut [Table];

    /// Interaction part of the log-odds; indices are assumed in range.
    fn interaction(&self, i: usize, j: usize, k: usize) -> f64;

    /// Gradient of [`LatentModel::interaction`] with respect to every touched table row.
    fn interaction_grad(&self, i: usize, j: usize, k: usize, out: &mut Gradient);

    fn dims(&self) -> Dims {
        self.biases().dims()
    }
}

/// Any of the four predictors.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Bias(BiasModel),
    Cp(CpModel),
    PrimitiveNclf(PrimitiveNclfModel),
    Nclf(NclfModel),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            Model::Bias($m) => $body,
            Model::Cp($m) => $body,
            Model::PrimitiveNclf($m) => $body,
            Model::Nclf($m) => $body,
        }
    };
}

impl LatentModel for Model {
    fn kind(&self) -> ModelKind {
        dispatch!(self, m => m.kind())
    }
    fn shape(&self) -> ModelShape {
        dispatch!(self, m => m.shape())
    }
    fn biases(&self) -> &BiasTables {
        dispatch!(self, m => m.biases())
    }
    fn biases_mut(&mut self) -> &mut BiasTables {
        dispatch!(self, m => m.biases_mut())
    }
    fn tables(&self) -> &[Table] {
        dispatch!(self, m => m.tables())
    }
    fn tables_mut(&mut self) -> &mut [Table] {
        dispatch!(self, m => m.tables_mut())
    }
    #[inline]
    fn interaction(&self, i: usize, j: usize, k: usize) -> f64 {
        dispatch!(self, m => m.interaction(i, j, k))
    }
    #[inline]
    fn interaction_grad(&self, i: usize, j: usize, k: usize, out: &mut Gradient) {
        dispatch!(self, m => m.interaction_grad(i, j, k, out))
    }
}

/// Logistic function, stable for large `|t|`.
#[inline]
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Model {
    /// Zero-initialized model (biases and latent tables zero, coefficients zero).
    pub fn zeros(shape: ModelShape, dims: Dims) -> Result<Self> {
        validate_dims(dims)?;
        Ok(match shape {
            ModelShape::Bias => Model::Bias(BiasModel::new(dims)),
            ModelShape::Cp { rank } => Model::Cp(CpModel::zeros(dims, rank)?),
            ModelShape::PrimitiveNclf { mu_rank, a_rank } => {
                Model::PrimitiveNclf(PrimitiveNclfModel::zeros(dims, mu_rank, a_rank)?)
            }
            ModelShape::Nclf(r) => Model::Nclf(NclfModel::zeros(dims, r)?),
        })
    }

    #[inline]
    fn check(&self, i: usize, j: usize, k: usize) -> Result<()> {
        let dims = self.dims();
        if i >= dims[0] || j >= dims[1] || k >= dims[2] {
            return Err(Error::Bounds { i, j, k, dims });
        }
        Ok(())
    }

    #[inline]
    pub fn predict_logodds(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        self.check(i, j, k)?;
        Ok(self.logodds_unchecked(i, j, k))
    }

    #[inline]
    pub(crate) fn logodds_unchecked(&self, i: usize, j: usize, k: usize) -> f64 {
        self.biases().offset(i, j, k) + self.interaction(i, j, k)
    }

    pub fn predict_probability(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        self.predict_logodds(i, j, k).map(logistic)
    }

    /// Prediction tolerant of unseen entities: if any index is out of range the
    /// interaction is dropped and the unseen entity contributes a zero bias.
    pub fn predict_logodds_cold_start(&self, i: usize, j: usize, k: usize) -> f64 {
        if self.check(i, j, k).is_ok() {
            return self.logodds_unchecked(i, j, k);
        }
        let b = self.biases();
        b.b0 + b.b1.get(i).copied().unwrap_or(0.0)
            + b.b2.get(j).copied().unwrap_or(0.0)
            + b.b3.get(k).copied().unwrap_or(0.0)
    }

    /// Gradient of the log-odds with respect to the latent parameters and
    /// coefficients. Biases are frozen and never appear.
    pub fn grad_logodds(&self, i: usize, j: usize, k: usize, out: &mut Gradient) -> Result<()> {
        self.check(i, j, k)?;
        out.clear();
        self.interaction_grad(i, j, k, out);
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.tables().iter().map(|t| t.data.len()).sum()
    }

    /// Latent parameters attached to one entity of factor class 0.
    pub fn per_entity_param_count(&self) -> usize {
        self.tables()
            .iter()
            .filter(|t| t.role == TableRole::Factor(0))
            .map(|t| t.width)
            .sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.tables().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, model has {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        for t in self.tables_mut() {
            let (head, tail) = rest.split_at(t.data.len());
            t.data.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Sets every coefficient (ζ, α) table entry to `value`.
    pub fn fill_coefficients(&mut self, value: f64) {
        for t in self.tables_mut() {
            if t.role == TableRole::Coefficient {
                t.data.fill(value);
            }
        }
    }
}

fn validate_dims(dims: Dims) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Usage(format!("all dims must be positive, got {dims:?}")));
    }
    Ok(())
}

/// Random initialization: latent entries i.i.d. `N(0, scale²)`, coefficients 1, biases 0.
pub fn init_params(shape: ModelShape, dims: Dims, seed: u64, scale: f64) -> Result<Model> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Usage(format!("init scale must be finite and >= 0, got {scale}")));
    }
    if let ModelShape::Cp { rank: 0 } = shape {
        return Err(Error::Usage("CP rank must be positive".into()));
    }
    let mut model = Model::zeros(shape, dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for t in model.tables_mut() {
        match t.role {
            TableRole::Coefficient => t.data.fill(1.0),
            TableRole::Factor(_) => {
                for x in t.data.iter_mut() {
                    *x = scale * normal.sample(&mut rng);
                }
            }
        }
    }
    Ok(model)
}

/// `b0 + b1[i] + b2[j] + b3[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasModel {
    pub biases: BiasTables,
}

impl BiasModel {
    pub fn new(dims: Dims) -> Self {
        Self {
            biases: BiasTables::zeros(dims),
        }
    }
}

impl LatentModel for BiasModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Bias
    }
    fn shape(&self) -> ModelShape {
        ModelShape::Bias
    }
    fn biases(&self) -> &BiasTables {
        &self.biases
    }
    fn biases_mut(&mut self) -> &mut BiasTables {
        &mut self.biases
    }
    fn tables(&self) -> &[Table] {
        &[]
    }
    fn tables_mut(&mut self) -> &mut [Table] {
        &mut []
    }
    fn interaction(&self, _i: usize, _j: usize, _k: usize) -> f64 {
        0.0
    }
    fn interaction_grad(&self, _i: usize, _j: usize, _k: usize, _out: &mut Gradient) {}
}
