//! Numerical laboratory for weak and almost weak stability of unitary and
//! isometric C₀-semigroups on discretized separable Hilbert spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod hilbert;
pub mod linalg;
pub mod metrics;
pub mod random;
pub mod scenarios;
pub mod semigroups;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hilbert::{DenseSequence, HVector, SumSpace, WeightedGrid, C64};
pub use semigroups::{Evolution, SemigroupModel};
