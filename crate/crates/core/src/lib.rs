//! Variable screening for simulation-driven multiobjective optimization.
//!
//! A handful of expensive simulation runs goes in as a [`RunTable`]; each
//! objective is binned into classes, tree classifiers are trained to predict
//! those classes from the input variables, and the variables the trees rely
//! on are ranked and kept. The result is a reduced design space plus a
//! report of per-objective effective variables with their class-probability
//! MAE and RMSE.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below pin the precision.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod scalar;
pub mod screening;
pub mod synthbench;
pub mod trees;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RunTable64 = dataset::RunTable<f64>;
pub type RunTable32 = dataset::RunTable<f32>;
pub type TreeModel64 = trees::TreeModel<f64>;
pub type TreeModel32 = trees::TreeModel<f32>;
pub type LearnerSpec64 = trees::LearnerSpec<f64>;
pub type LearnerSpec32 = trees::LearnerSpec<f32>;
pub type EvaluationResult64 = evaluation::EvaluationResult<f64>;
pub type EvaluationResult32 = evaluation::EvaluationResult<f32>;
pub type ImportanceRanking64 = screening::ImportanceRanking<f64>;
pub type ImportanceRanking32 = screening::ImportanceRanking<f32>;
pub type ScreeningReport64 = screening::ScreeningReport<f64>;
pub type ScreeningReport32 = screening::ScreeningReport<f32>;
pub type PipelineConfig64 = pipeline::PipelineConfig<f64>;
pub type PipelineConfig32 = pipeline::PipelineConfig<f32>;
