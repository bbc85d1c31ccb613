//! Nonparametric estimation of the tree structure of nested Archimedean
//! copulas.
//!
//! The estimators work in two steps: a binary tree is built from rank-based
//! dependence information, then edges that do not separate distinct
//! dependence levels are collapsed. The baseline triple-test estimator,
//! samplers for nested Archimedean copulas, tree distances and a simulation
//! harness are included.

pub mod builders;
pub mod collapse;
pub mod dependence;
pub mod error;
pub mod nac;
pub mod seed;
pub mod study;
pub mod tree;

pub use error::{Error, Result};
