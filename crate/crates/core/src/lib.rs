//! Tucker, hierarchical Tucker and tensor-train subspace models for
//! nearest-subspace classification of tensor data, with exact storage and
//! projection cost accounting.
//!
//! Tensors are dense and row-major (first axis slowest). Every model is
//! learned from training tensors by truncated SVDs; classification picks the
//! class whose subspace captures the most energy of the centered input.

pub mod classifier;
pub mod cost;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matrix;
pub mod persist;
pub mod subspace;
pub mod tensor;

pub use classifier::{train_library, Centering, ClassLibrary, EvaluationResult, LabeledTensor};
pub use cost::{cost_for_layout, cost_general, CostReport};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use subspace::{
    fractional_spec, learn_model, DimensionTree, HtModel, ModelFamily, ModelSpec, ProjectionScheme,
    SubspaceModel, TtModel, TuckerModel,
};
pub use tensor::{fold, unfold, AxisSet, DenseTensor};
