//! Exact Verlinde numbers `D_g(r, d, ω)`: dimensions of spaces of
//! generalized theta functions on moduli of parabolic bundles.
//!
//! Two independent engines compute the same integer. The analytic engine
//! sums the closed Verlinde formula over roots of unity and rounds with a
//! verified error bound; the recursive engine uses only integer arithmetic,
//! reducing degree, genus and point count down to fusion coefficients.

pub mod analytic;
pub mod engine;
pub mod error;
pub mod evaluator;
pub mod fusion;
pub mod scalar;
pub mod unity;
pub mod weights;

pub use analytic::{verlinde_analytic, verlinde_analytic_with, AnalyticConfig, AnalyticResult, Tolerances};
pub use engine::{
    verlinde_checked, verlinde_checked_with, AnalyticEngine, Engine, EngineRegistry, EngineSelector,
    Evaluation, RecursiveEngine,
};
pub use error::{Error, Result};
pub use evaluator::{
    check_degree_varying_split, reduce_degree, reduce_genus_once, split_points_once, verlinde_recursive,
    Evaluator, ReductionTrace,
};
pub use fusion::{fusion_base3, pieri_set, FusionEngine};
pub use scalar::Precision;
pub use weights::{ParabolicPoint, Partition, ProblemInstance, WeightSet};
