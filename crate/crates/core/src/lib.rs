//! Pooled high-throughput screening toolkit.
//!
//! Builds pooling designs (constrained-row exchange designs, a genetic-algorithm
//! co-occurrence design and balanced random pools), detects hits in pooled assay
//! readouts with lasso-based selection procedures and a permutation-calibrated
//! elastic net, filters hits with well-level secondary criteria and runs Monte
//! Carlo comparisons of design and analysis choices.
//!
//! Numerical routines in [`regression`], [`screening`] and [`secondary`] are
//! generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate root fix
//! the usual `f64` instantiation.

pub mod designs;
pub mod error;
pub mod interface;
pub mod matrix;
pub mod regression;
pub mod scalar;
pub mod screening;
pub mod secondary;
pub mod simulation;

pub use designs::{CriterionReport, Design, DesignMethod, DesignSpec};
pub use error::{Error, Result};
pub use matrix::ColMatrix;
pub use scalar::Scalar;
pub use screening::{AnalysisConfig, EffectSign, HitList, Method, ThresholdKind};
pub use secondary::{SecondaryCriterion, SigmaMode};

/// Double-precision regression inputs.
pub type CenteredData64 = regression::CenteredData<f64>;
pub type LassoPath64 = regression::LassoPath<f64>;
pub type RefitModel64 = regression::RefitModel<f64>;
pub type ElasticNetFit64 = regression::ElasticNetFit<f64>;
pub type Matrix64 = ColMatrix<f64>;
pub type PathAnalysis64 = screening::PathAnalysis<f64>;

/// Single-precision variants, mostly useful for memory-bound sweeps.
pub type CenteredData32 = regression::CenteredData<f32>;
pub type LassoPath32 = regression::LassoPath<f32>;
pub type Matrix32 = ColMatrix<f32>;
pub type PathAnalysis32 = screening::PathAnalysis<f32>;

