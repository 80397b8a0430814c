//! Weighted generalized fractional integrals and derivatives with
//! Mittag-Leffler kernels on uniform grids, a harness that checks their
//! inversion and integration-by-parts identities numerically, and a
//! discretize-then-optimize solver for the associated variational problem.

pub mod cli;
pub mod error;
pub mod expr;
pub mod mlf;
pub mod identities;
pub mod operators;
pub mod variational;
pub mod types;

pub use error::{Error, Result};
pub use expr::Expr;
pub use mlf::{mittag_leffler, ml_kernel, MlEvalOptions};
pub use operators::{OperatorMatrix, OperatorOptions, RightSign, Rule, Side};
pub use types::{make_params, sample, FracParams, Grid, Normalization, SampledFunction, WeightFunction};
