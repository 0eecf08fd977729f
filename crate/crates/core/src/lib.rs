//! Electrical flows on weighted multigraphs.
//!
//! Transfer-current matrices, heat kernels and entropy functionals, together
//! with executable checks of the `2 ln n` localization bounds.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod generate;
pub mod graph;
pub mod heat;
pub mod linalg;
pub mod localization;
pub mod quadrature;
pub mod transfer;

pub use error::{AnalysisError, GraphError, LinalgError};
pub use generate::{generate, ConductanceMode, Family, FamilySpec, GenerateError, SplitMix64};
pub use graph::{Edge, EdgeWeighting, WeightedMultigraph};
pub use linalg::{GreenOperator, SpectralDecomposition};
pub use localization::{run_suite, Check, SuiteConfig, Tolerances, VerificationReport};
pub use transfer::{transfer_current_matrix, CurrentMatrices};
