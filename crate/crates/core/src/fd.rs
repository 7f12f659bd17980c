//! Central finite differences with optional Richardson extrapolation.
//!
//! First derivatives use the two-point central stencil, pure second
//! derivatives the three-point stencil and mixed second derivatives the
//! four-point cross stencil. With Richardson enabled every estimate `D` is
//! replaced by `(4 D(h/2) - D(h)) / 3`, which cancels the `h^2` term.

use std::collections::HashMap;

use crate::error::{Error, Result};
use num_complex::Complex64;

use crate::linalg::ComplexMatrix;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    /// Step at the origin; the step along axis `i` is `step_base * (1 + |x_i|)`.
    pub step_base: f64,
    pub richardson: bool,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            step_base: 1e-3,
            richardson: true,
        }
    }
}

impl FdScheme {
    pub fn new(step_base: f64, richardson: bool) -> Result<Self> {
        if !(step_base > 0.0 && step_base.is_finite()) {
            return Err(Error::Domain(format!("finite-difference step must be positive, got {step_base}")));
        }
        Ok(Self { step_base, richardson })
    }

    pub fn step(&self, xi: f64) -> f64 {
        self.step_base * (1.0 + xi.abs())
    }
}

/// Value, gradient and Hessian of a matrix-valued function at one point.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub value: ComplexMatrix,
    pub first: Vec<ComplexMatrix>,
    /// `second[j][k] = d^2 f / dx_j dx_k`.
    pub second: Vec<Vec<ComplexMatrix>>,
}

struct Memo<'a> {
    f: &'a dyn Fn(&[f64]) -> Result<ComplexMatrix>,
    cache: HashMap<Vec<u64>, ComplexMatrix>,
}

impl Memo<'_> {
    fn at(&mut self, x: &[f64]) -> Result<ComplexMatrix> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(m) = self.cache.get(&key) {
            return Ok(m.clone());
        }
        let m = (self.f)(x)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("stencil value at {x:?}")));
        }
        self.cache.insert(key, m.clone());
        Ok(m)
    }

    fn shifted(&mut self, x: &[f64], shifts: &[(usize, f64)]) -> Result<ComplexMatrix> {
        let mut p = x.to_vec();
        for &(i, d) in shifts {
            p[i] += d;
        }
        self.at(&p)
    }
}

fn level(memo: &mut Memo<'_>, x: &[f64], h: &[f64], center: &ComplexMatrix) -> Result<(Vec<ComplexMatrix>, Vec<Vec<ComplexMatrix>>)> {
    let n = x.len();
    let mut first = Vec::with_capacity(n);
    let mut second = vec![vec![ComplexMatrix::zeros(center.nrows(), center.ncols()); n]; n];
    for j in 0..n {
        let plus = memo.shifted(x, &[(j, h[j])])?;
        let minus = memo.shifted(x, &[(j, -h[j])])?;
        first.push((&plus - &minus) * c(0.5 / h[j]));
        second[j][j] = (&plus - center * c(2.0) + &minus) * c(1.0 / (h[j] * h[j]));
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let pp = memo.shifted(x, &[(j, h[j]), (k, h[k])])?;
            let pm = memo.shifted(x, &[(j, h[j]), (k, -h[k])])?;
            let mp = memo.shifted(x, &[(j, -h[j]), (k, h[k])])?;
            let mm = memo.shifted(x, &[(j, -h[j]), (k, -h[k])])?;
            let d = (pp - pm - mp + mm) * c(0.25 / (h[j] * h[k]));
            second[k][j] = d.clone();
            second[j][k] = d;
        }
    }
    Ok((first, second))
}

fn richardson(coarse: ComplexMatrix, fine: ComplexMatrix) -> ComplexMatrix {
    (fine * c(4.0) - coarse) * c(1.0 / 3.0)
}

/// Finite-difference value, gradient and Hessian of `f` at `x`.
pub fn derivatives(f: &dyn Fn(&[f64]) -> Result<ComplexMatrix>, x: &[f64], scheme: &FdScheme) -> Result<Derivatives> {
    let mut memo = Memo {
        f,
        cache: HashMap::new(),
    };
    let value = memo.at(x)?;
    let h: Vec<f64> = x.iter().map(|&xi| scheme.step(xi)).collect();
    let (first, second) = level(&mut memo, x, &h, &value)?;
    if !scheme.richardson {
        return Ok(Derivatives { value, first, second });
    }
    let half: Vec<f64> = h.iter().map(|v| v / 2.0).collect();
    let (first_f, second_f) = level(&mut memo, x, &half, &value)?;
    let first = first.into_iter().zip(first_f).map(|(c, f)| richardson(c, f)).collect();
    let second = second
        .into_iter()
        .zip(second_f)
        .map(|(rc, rf)| rc.into_iter().zip(rf).map(|(c, f)| richardson(c, f)).collect())
        .collect();
    Ok(Derivatives { value, first, second })
}

/// Scalar convenience wrapper around [`derivatives`]: `(value, gradient, hessian)`.
pub fn scalar_derivatives(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], scheme: &FdScheme) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let wrapped = |p: &[f64]| f(p).map(|v| ComplexMatrix::from_element(1, 1, v.into()));
    let d = derivatives(&wrapped, x, scheme)?;
    Ok((
        d.value[(0, 0)].re,
        d.first.iter().map(|m| m[(0, 0)].re).collect(),
        d.second.iter().map(|row| row.iter().map(|m| m[(0, 0)].re).collect()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let f = |x: &[f64]| Ok(x[0] * x[0] * x[1] + 3.0 * x[1]);
        let (v, g, h) = scalar_derivatives(&f, &[1.0, 2.0], &FdScheme::default()).unwrap();
        assert_eq!(v, 8.0);
        assert!((g[0] - 4.0).abs() < 1e-9);
        assert!((g[1] - 4.0).abs() < 1e-9);
        assert!((h[0][0] - 4.0).abs() < 1e-7);
        assert!((h[0][1] - 2.0).abs() < 1e-7);
        assert!(h[1][1].abs() < 1e-7);
    }

    #[test]
    fn richardson_improves_accuracy() {
        let f = |x: &[f64]| Ok(x[0].sin());
        let x = [0.7];
        let plain = scalar_derivatives(&f, &x, &FdScheme::new(1e-2, false).unwrap()).unwrap();
        let rich = scalar_derivatives(&f, &x, &FdScheme::new(1e-2, true).unwrap()).unwrap();
        let exact = -(0.7f64).sin();
        assert!((rich.2[0][0] - exact).abs() < (plain.2[0][0] - exact).abs() / 100.0);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(FdScheme::new(0.0, true).is_err());
        assert!(FdScheme::new(f64::NAN, true).is_err());
    }

    #[test]
    fn non_finite_stencil_value() {
        let f = |x: &[f64]| Ok(x[0].sqrt());
        assert!(matches!(scalar_derivatives(&f, &[0.0005], &FdScheme::default()), Err(Error::NonFinite(_))));
    }
}
