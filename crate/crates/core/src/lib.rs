//! Log-concavity of matrix-valued functions.
//!
//! A *metric* is a map `g: R^n -> C^{r x r}` whose values are Hermitian and
//! strictly positive definite. This crate computes the curvature tensor
//! `Theta_jk = d/dx_k (g^{-1} dg/dx_j)`, decides Griffiths and Nakano
//! log-concavity from it, and provides the integral operators that preserve
//! Nakano log-concavity (marginal integration over some of the variables)
//! together with the weighted vector-valued Paley–Wiener transform pair.

pub mod constructions;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod fd;
pub mod gallery;
pub mod linalg;
pub mod metric;
pub mod paley_wiener;
pub mod prekopa;
pub mod quadrature;
pub mod spec;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, HermitianMatrix, TolerancePolicy};
pub use metric::{MetricFunction, ScalarFunction};
