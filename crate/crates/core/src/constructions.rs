//! Constructions that produce new metrics from old ones, and the identities
//! relating their curvatures.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::linalg::{gram_matrix, schur_product, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::metric::{MetricFunction, ScalarFunction};
use crate::quadrature::CompensatedSum;

const ENUMERATION_CAP: u64 = 10_000_000;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Pointwise inverse `g^{-1}`. Analytic derivatives are carried over when `g`
/// has them.
pub fn inverse_metric(g: &MetricFunction) -> MetricFunction {
    let name = format!("inverse({})", g.name());
    let base = g.clone();
    let inv = move |x: &[f64]| base.eval(x)?.inverse().map(HermitianMatrix::into_matrix);
    let out = MetricFunction::new(name, g.dim(), g.rank(), inv.clone());
    if !g.has_derivatives() {
        return out;
    }
    let (g1, g2) = (g.clone(), g.clone());
    let inv1 = inv.clone();
    out.with_derivatives(
        move |x, j| {
            let gi = inv1(x)?;
            let dj = g1.first_derivative(x, j).expect("analytic derivative")?;
            Ok(-(&gi * dj * &gi))
        },
        move |x, j, k| {
            let gi = inv(x)?;
            let dj = g2.first_derivative(x, j).expect("analytic derivative")?;
            let dk = g2.first_derivative(x, k).expect("analytic derivative")?;
            let djk = g2.second_derivative(x, j, k).expect("analytic derivative")?;
            let (a, b) = (&gi * &dj, &gi * &dk);
            Ok(&b * &a * &gi - &gi * djk * &gi + &a * &b * &gi)
        },
    )
}

/// Pointwise `f(x) g(x)` for a strictly positive scalar `f`.
pub fn scale_by_function(f: &ScalarFunction, g: &MetricFunction) -> Result<MetricFunction> {
    if f.dim() != g.dim() {
        return Err(Error::Dimension(format!(
            "scaling a metric in {} variables by a function of {}",
            g.dim(),
            f.dim()
        )));
    }
    let positive = |f: &ScalarFunction, x: &[f64]| -> Result<f64> {
        let v = f.eval(x)?;
        if v <= 0.0 {
            return Err(Error::Domain(format!("scaling function is {v} at {x:?}, must be positive")));
        }
        Ok(v)
    };
    let (fv, gv) = (f.clone(), g.clone());
    let out = MetricFunction::new(format!("scaled({})", g.name()), g.dim(), g.rank(), move |x| {
        let s = positive(&fv, x)?;
        Ok(gv.eval_raw(x)? * c(s))
    });
    if !(f.has_derivatives() && g.has_derivatives()) {
        return Ok(out);
    }
    let (f1, g1, f2, g2) = (f.clone(), g.clone(), f.clone(), g.clone());
    Ok(out.with_derivatives(
        move |x, j| {
            let (s, sj) = (f1.eval(x)?, f1.first_derivative(x, j).expect("analytic derivative")?);
            Ok(g1.eval_raw(x)? * c(sj) + g1.first_derivative(x, j).expect("analytic derivative")? * c(s))
        },
        move |x, j, k| {
            let s = f2.eval(x)?;
            let sj = f2.first_derivative(x, j).expect("analytic derivative")?;
            let sk = f2.first_derivative(x, k).expect("analytic derivative")?;
            let sjk = f2.second_derivative(x, j, k).expect("analytic derivative")?;
            let gj = g2.first_derivative(x, j).expect("analytic derivative")?;
            let gk = g2.first_derivative(x, k).expect("analytic derivative")?;
            let gjk = g2.second_derivative(x, j, k).expect("analytic derivative")?;
            Ok(g2.eval_raw(x)? * c(sjk) + gk * c(sj) + gj * c(sk) + gjk * c(s))
        },
    ))
}

/// Pointwise `g(x) det g(x)`. Curvature of the result is computed by finite
/// differences; see [`demailly_skoda_curvature`] for the closed form.
pub fn demailly_skoda(g: &MetricFunction) -> MetricFunction {
    let base = g.clone();
    MetricFunction::new(format!("det-twisted({})", g.name()), g.dim(), g.rank(), move |x| {
        let h = base.eval(x)?;
        let d = h.det();
        Ok(h.into_matrix() * c(d))
    })
}

/// `Theta_jk + tr(Theta_jk) I`, the curvature of `g det g` from that of `g`.
pub fn demailly_skoda_curvature(t: &CurvatureTensor) -> Result<CurvatureTensor> {
    let r = t.r();
    let blocks = t.map_blocks(|_, _, b| b + ComplexMatrix::identity(r, r) * b.trace());
    let g = t.metric_value();
    let twisted = HermitianMatrix::new(g.as_matrix() * c(g.det()))?;
    CurvatureTensor::from_blocks(t.point().to_vec(), twisted, blocks)
}

/// The `n x n` matrix `[tr Theta_jk]`, which is the Hessian of `log det g`.
pub fn logdet_hessian(t: &CurvatureTensor) -> HermitianMatrix {
    let n = t.n();
    let m = ComplexMatrix::from_fn(n, n, |j, k| t.block(j, k).trace());
    HermitianMatrix::new(m).expect("traces of a finite curvature tensor are finite")
}

/// `q^{-r} sum_sigma (x, sigma) conj((y, sigma)) sigma_alpha conj(sigma_beta)`
/// over all `r`-tuples of `q`-th roots of unity, with `(x, s) = sum x_mu conj(s_mu)`.
/// Indices are 0-based.
pub fn roots_of_unity_average(q: u32, x: &ComplexVector, y: &ComplexVector, alpha: usize, beta: usize) -> Result<Complex64> {
    if q < 3 {
        return Err(Error::Domain(format!("need q >= 3 roots of unity, got {q}")));
    }
    let r = x.len();
    if r == 0 || y.len() != r {
        return Err(Error::Dimension(format!("vectors of lengths {} and {}", r, y.len())));
    }
    if alpha >= r || beta >= r {
        return Err(Error::Dimension(format!("indices ({alpha}, {beta}) out of range for length {r}")));
    }
    let count = u64::from(q)
        .checked_pow(r as u32)
        .filter(|&n| n <= ENUMERATION_CAP)
        .ok_or_else(|| Error::Budget(format!("{q}^{r} root tuples exceed the enumeration cap of {ENUMERATION_CAP}")))?;
    let roots: Vec<Complex64> = (0..q).map(|k| Complex64::from_polar(1.0, 2.0 * PI * f64::from(k) / f64::from(q))).collect();
    let mut digits = vec![0usize; r];
    let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
    for _ in 0..count {
        let sigma = |m: usize| roots[digits[m]];
        let (mut xs, mut ys) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for m in 0..r {
            xs += x[m] * sigma(m).conj();
            ys += y[m] * sigma(m).conj();
        }
        let term = xs * ys.conj() * sigma(alpha) * sigma(beta).conj();
        re.add(term.re);
        im.add(term.im);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < q as usize {
                break;
            }
            *d = 0;
        }
    }
    Ok(Complex64::new(re.value(), im.value()) / count as f64)
}

/// `x_alpha conj(y_beta)` if `alpha != beta`, else `sum_mu x_mu conj(y_mu)`.
pub fn roots_of_unity_closed_form(x: &ComplexVector, y: &ComplexVector, alpha: usize, beta: usize) -> Complex64 {
    if alpha == beta {
        y.dotc(x)
    } else {
        x[alpha] * y[beta].conj()
    }
}

/// `sum_jk (d^2 log f / dx_j dx_k) (u_j, u_k)_g`, evaluated as `-(M 1, 1)` with
/// `M` the Schur product of `hessian_neg = -Hess(log f)` and the Gram matrix.
pub fn schur_mixed_form(hessian_neg: &HermitianMatrix, vectors: &[ComplexVector], g: &HermitianMatrix) -> Result<f64> {
    if hessian_neg.dim() != vectors.len() {
        return Err(Error::Dimension(format!(
            "{}x{} Hessian with {} vectors",
            hessian_neg.dim(),
            hessian_neg.dim(),
            vectors.len()
        )));
    }
    let m = schur_product(hessian_neg, &gram_matrix(vectors, g)?)?;
    Ok(-m.as_matrix().iter().map(|z| z.re).sum::<f64>())
}
