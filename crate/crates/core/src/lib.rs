//! Numerical workbench for criticality theory of second-order elliptic
//! operators on finite weighted graphs, plus a radial continuum engine for
//! hyperbolic space and planar model operators.

// `!(x > 0.0)` is used on purpose so that NaN is rejected; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod generators;
pub mod green;
pub mod hardy;
pub mod instances;
pub mod linalg;
pub mod operator;
pub mod perturbation;
pub mod radial;
pub mod run;
pub mod spectral;

pub use error::{Error, Result};
pub use operator::{build_operator, DiscreteOperator, Domain, Graph, OperatorSpec};
