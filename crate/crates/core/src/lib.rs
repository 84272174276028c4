//! Three-way tensor completion for sparse binary events with non-commuting
//! latent factors.
//!
//! The log-odds of an event at `(i, j, k)` are modelled as frozen empirical
//! biases plus a trilinear interaction. Four interactions are provided:
//! none (bias only), CP, a primitive expansion built on the C⊥ triple product
//! `μ`, and the full NCLF expansion whose components carry the permutation
//! symmetries of a cubical array. Models are trained with momentum SGD on the
//! L2-regularized logistic loss and compared by cross-validated AUC, L1 and L2.

pub mod algebra;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod reproduce;
pub mod training;

pub use algebra::{CPerpElement, CubicalTensor, JacobiTag, SymmetryComponents, Vec3};
pub use data::{Dataset, Dims, TripletEvent};
pub use error::{Error, Result};
pub use evaluation::{CvOutcome, CvProtocol, FoldPlan, GridPoint, MetricSummary};
pub use models::{init_params, LatentModel, Model, ModelKind, ModelShape, NclfRanks};
pub use training::{estimate_biases, sgd_train, TrainConfig, TrainReport};
