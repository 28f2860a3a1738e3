//! Stockpile blending with chance constraints.
//!
//! Parcels for downstream customers are blended from several stockpiles that
//! are replenished monthly. A plan fixes, for every parcel, the fraction
//! claimed from each stockpile; the model derives durations, tonnages, grades
//! and concentrate from it. Plans are repaired into shape, scored with a
//! lexicographic fitness vector (optionally with Cantelli surrogates of the
//! Cu-grade and Fl-recovery chance constraints) and searched with
//! differential evolution.
//!
//! Everything numeric is generic over [`Scalar`]; the aliases below fix the
//! usual `f64` (and `f32`) instantiations.
//!
//! ```
//! use stockblend_core::{de, golden, DeConfig64};
//!
//! let instance = golden::instance::<f64>(1);
//! let config = DeConfig64 { generations: 50, seed: 7, ..Default::default() };
//! let result = de::run(&instance, &config).unwrap();
//! assert!(result.best.fitness.objective > 0.0);
//! ```

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod de;
pub mod error;
pub mod fitness;
pub mod golden;
pub mod model;
pub mod repair;
pub mod rng;
pub mod scalar;
pub mod uncertainty;

pub use error::{ConfigError, ModelError};
pub use fitness::{lex_compare, Evaluated, FitnessConfig, FitnessMode, FitnessVector, Preference};
pub use model::{Genome, Instance, Material, PlanEvaluation};
pub use scalar::Scalar;
pub use uncertainty::ChanceConfig;

pub type Instance64 = model::Instance<f64>;
pub type Genome64 = model::Genome<f64>;
pub type PlanEvaluation64 = model::PlanEvaluation<f64>;
pub type FitnessVector64 = fitness::FitnessVector<f64>;
pub type FitnessConfig64 = fitness::FitnessConfig<f64>;
pub type ChanceConfig64 = uncertainty::ChanceConfig<f64>;
pub type DeConfig64 = de::DeConfig<f64>;
pub type RunResult64 = de::RunResult<f64>;

pub type Instance32 = model::Instance<f32>;
pub type Genome32 = model::Genome<f32>;
pub type DeConfig32 = de::DeConfig<f32>;
pub type RunResult32 = de::RunResult<f32>;
