//! Evaluatable matrix-valued metrics and positive scalar functions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{ComplexMatrix, HermitianMatrix};

type ValueFn = dyn Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync;
type FirstFn = dyn Fn(&[f64], usize) -> Result<ComplexMatrix> + Send + Sync;
type SecondFn = dyn Fn(&[f64], usize, usize) -> Result<ComplexMatrix> + Send + Sync;

/// A map from `R^dim` to `rank x rank` Hermitian positive definite matrices,
/// optionally with analytic first and second partial derivatives.
#[derive(Clone)]
pub struct MetricFunction {
    name: String,
    dim: usize,
    rank: usize,
    value: Arc<ValueFn>,
    first: Option<Arc<FirstFn>>,
    second: Option<Arc<SecondFn>>,
}

impl fmt::Debug for MetricFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("rank", &self.rank)
            .field("analytic_derivatives", &self.has_derivatives())
            .finish()
    }
}

impl MetricFunction {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        rank: usize,
        value: impl Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            rank,
            value: Arc::new(value),
            first: None,
            second: None,
        }
    }

    /// `first(x, j)` is `dg/dx_j`, `second(x, j, k)` is `d^2 g / dx_j dx_k`.
    pub fn with_derivatives(
        mut self,
        first: impl Fn(&[f64], usize) -> Result<ComplexMatrix> + Send + Sync + 'static,
        second: impl Fn(&[f64], usize, usize) -> Result<ComplexMatrix> + Send + Sync + 'static,
    ) -> Self {
        self.first = Some(Arc::new(first));
        self.second = Some(Arc::new(second));
        self
    }

    /// Drops analytic derivatives so that curvature falls back to finite differences.
    pub fn without_derivatives(mut self) -> Self {
        self.first = None;
        self.second = None;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The constant metric `c`.
    pub fn constant(name: impl Into<String>, dim: usize, c: HermitianMatrix) -> Self {
        let r = c.dim();
        let m = c.into_matrix();
        let zero = ComplexMatrix::zeros(r, r);
        let z2 = zero.clone();
        Self::new(name, dim, r, move |_| Ok(m.clone())).with_derivatives(move |_, _| Ok(zero.clone()), move |_, _, _| Ok(z2.clone()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn has_derivatives(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "metric `{}` takes {} variables, got {}",
                self.name,
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("evaluation point {x:?}")));
        }
        Ok(())
    }

    /// `g(x)`, symmetrized and checked for strict positive definiteness.
    pub fn eval(&self, x: &[f64]) -> Result<HermitianMatrix> {
        let h = HermitianMatrix::new(self.eval_raw(x)?).map_err(|e| match e {
            Error::InvalidMatrix(msg) => Error::NonFinite(format!("metric `{}` at {x:?}: {msg}", self.name)),
            other => other,
        })?;
        h.check_positive_definite(x)?;
        Ok(h)
    }

    /// `g(x)` without symmetrization or the positivity check.
    pub fn eval_raw(&self, x: &[f64]) -> Result<ComplexMatrix> {
        self.check_point(x)?;
        let m = (self.value)(x)?;
        if m.nrows() != self.rank || m.ncols() != self.rank {
            return Err(Error::Dimension(format!(
                "metric `{}` returned a {}x{} matrix, expected rank {}",
                self.name,
                m.nrows(),
                m.ncols(),
                self.rank
            )));
        }
        Ok(m)
    }

    pub fn first_derivative(&self, x: &[f64], j: usize) -> Option<Result<ComplexMatrix>> {
        self.first.as_ref().map(|f| {
            self.check_point(x)?;
            f(x, j)
        })
    }

    pub fn second_derivative(&self, x: &[f64], j: usize, k: usize) -> Option<Result<ComplexMatrix>> {
        self.second.as_ref().map(|f| {
            self.check_point(x)?;
            f(x, j, k)
        })
    }
}

type ScalarValueFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type ScalarFirstFn = dyn Fn(&[f64], usize) -> Result<f64> + Send + Sync;
type ScalarSecondFn = dyn Fn(&[f64], usize, usize) -> Result<f64> + Send + Sync;

/// A real function of `dim` variables, optionally with analytic derivatives.
#[derive(Clone)]
pub struct ScalarFunction {
    dim: usize,
    value: Arc<ScalarValueFn>,
    first: Option<Arc<ScalarFirstFn>>,
    second: Option<Arc<ScalarSecondFn>>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction").field("dim", &self.dim).finish()
    }
}

impl ScalarFunction {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            first: None,
            second: None,
        }
    }

    pub fn with_derivatives(
        mut self,
        first: impl Fn(&[f64], usize) -> Result<f64> + Send + Sync + 'static,
        second: impl Fn(&[f64], usize, usize) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        self.first = Some(Arc::new(first));
        self.second = Some(Arc::new(second));
        self
    }

    /// Wraps a parsed expression whose variables are indexed like the point.
    pub fn from_expr(dim: usize, e: Expr) -> Self {
        Self::new(dim, move |x| {
            e.eval(x).map_err(|source| Error::Eval {
                point: x.to_vec(),
                entry: None,
                source,
            })
        })
    }

    /// `exp(-phi)`.
    pub fn exp_neg(phi: ScalarFunction) -> Self {
        let dim = phi.dim;
        Self::new(dim, move |x| Ok((-phi.eval(x)?).exp()))
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, move |_| Ok(c)).with_derivatives(|_, _| Ok(0.0), |_, _, _| Ok(0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_derivatives(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!("function takes {} variables, got {}", self.dim, x.len())));
        }
        let v = (self.value)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("scalar function at {x:?}")));
        }
        Ok(v)
    }

    pub fn first_derivative(&self, x: &[f64], j: usize) -> Option<Result<f64>> {
        self.first.as_ref().map(|f| f(x, j))
    }

    pub fn second_derivative(&self, x: &[f64], j: usize, k: usize) -> Option<Result<f64>> {
        self.second.as_ref().map(|f| f(x, j, k))
    }

    /// The 1x1 matrix-valued view used by the finite-difference engine.
    pub fn as_metric(&self, name: &str) -> MetricFunction {
        let to_m = |v: f64| ComplexMatrix::from_element(1, 1, Complex64::new(v, 0.0));
        let f = self.clone();
        let m = MetricFunction::new(name, self.dim, 1, move |x| f.eval(x).map(to_m));
        if let (Some(d1), Some(d2)) = (self.first.clone(), self.second.clone()) {
            m.with_derivatives(move |x, j| d1(x, j).map(to_m), move |x, j, k| d2(x, j, k).map(to_m))
        } else {
            m
        }
    }
}
