//! Curvature `Theta_jk = d/dx_k (g^{-1} dg/dx_j)` of a matrix-valued metric
//! and the Griffiths/Nakano log-concavity verdicts built on it.
//!
//! The tensor is evaluated through the product-rule expansion
//!
//! ```text
//! Theta_jk = -g^{-1} (d_k g) g^{-1} (d_j g) + g^{-1} d_j d_k g
//! ```
//!
//! so only `g`, its gradient and its Hessian are needed at the point.
//!
//! Sign convention: log-concave means the relevant quadratic form is `<= 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd::{self, Derivatives, FdScheme};
use crate::linalg::{hermitian_deviation, solve_pd, ComplexMatrix, ComplexVector, HermitianMatrix, TolerancePolicy};
use crate::metric::MetricFunction;

/// The `n x n` array of `r x r` blocks `Theta_jk` at one point.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    n: usize,
    r: usize,
    blocks: Vec<ComplexMatrix>,
    point: Vec<f64>,
    metric_value: HermitianMatrix,
}

impl CurvatureTensor {
    /// Builds a tensor from blocks in row-major `(j, k)` order.
    pub fn from_blocks(point: Vec<f64>, metric_value: HermitianMatrix, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let r = metric_value.dim();
        let n = (blocks.len() as f64).sqrt().round() as usize;
        if n * n != blocks.len() || n != point.len() {
            return Err(Error::Dimension(format!(
                "{} blocks do not form an n x n array for a point of dimension {}",
                blocks.len(),
                point.len()
            )));
        }
        if blocks.iter().any(|b| b.nrows() != r || b.ncols() != r) {
            return Err(Error::Dimension(format!("curvature blocks must be {r}x{r}")));
        }
        Ok(Self {
            n,
            r,
            blocks,
            point,
            metric_value,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn block(&self, j: usize, k: usize) -> &ComplexMatrix {
        &self.blocks[j * self.n + k]
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric_value(&self) -> &HermitianMatrix {
        &self.metric_value
    }

    /// `g * Theta_jk`.
    pub fn lowered(&self, j: usize, k: usize) -> ComplexMatrix {
        self.metric_value.as_matrix() * self.block(j, k)
    }

    /// `max_jk |(g Theta_jk)* - g Theta_kj|_F`; zero for exact curvature.
    pub fn pairing_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.n {
            for k in 0..self.n {
                let d = self.lowered(j, k).adjoint() - self.lowered(k, j);
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest Frobenius norm of a block difference against another tensor.
    pub fn max_block_diff(&self, other: &CurvatureTensor) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_block_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }

    pub fn map_blocks(&self, f: impl Fn(usize, usize, &ComplexMatrix) -> ComplexMatrix) -> Vec<ComplexMatrix> {
        (0..self.n * self.n)
            .map(|i| f(i / self.n, i % self.n, &self.blocks[i]))
            .collect()
    }
}

/// Curvature from `g`, its gradient and its Hessian at a point.
pub fn theta_from_derivatives(point: Vec<f64>, d: &Derivatives) -> Result<CurvatureTensor> {
    let g = HermitianMatrix::new(d.value.clone())?;
    g.check_positive_definite(&point)?;
    let n = d.first.len();
    let ginv_d: Vec<ComplexMatrix> = d
        .first
        .iter()
        .map(|dj| solve_pd(&g, dj))
        .collect::<Result<_>>()?;
    let mut blocks = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let second = solve_pd(&g, &d.second[j][k])?;
            blocks.push(second - &ginv_d[k] * &ginv_d[j]);
        }
    }
    if blocks.iter().flat_map(|b| b.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(format!("curvature at {point:?}")));
    }
    CurvatureTensor::from_blocks(point, g, blocks)
}

/// Derivatives of `g` at `x`, analytic when the metric provides them.
pub fn metric_derivatives(g: &MetricFunction, x: &[f64], scheme: &FdScheme) -> Result<Derivatives> {
    if g.has_derivatives() {
        let n = g.dim();
        let value = g.eval(x)?.into_matrix();
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for j in 0..n {
            first.push(g.first_derivative(x, j).expect("analytic derivative")?);
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                row.push(g.second_derivative(x, j, k).expect("analytic derivative")?);
            }
            second.push(row);
        }
        return Ok(Derivatives { value, first, second });
    }
    let f = |p: &[f64]| g.eval(p).map(HermitianMatrix::into_matrix);
    fd::derivatives(&f, x, scheme)
}

/// `Theta_jk` of `g` at `x`.
pub fn theta(g: &MetricFunction, x: &[f64], scheme: &FdScheme) -> Result<CurvatureTensor> {
    let d = metric_derivatives(g, x, scheme)?;
    theta_from_derivatives(x.to_vec(), &d)
}

/// Nakano matrix with its pre-symmetrization Hermitian deviation.
#[derive(Debug, Clone)]
pub struct NakanoMatrix {
    pub matrix: HermitianMatrix,
    pub hermitian_deviation: f64,
}

/// The `nr x nr` matrix with block row `k`, block column `j` equal to
/// `g Theta_jk`, so that `u* N u = sum_jk (Theta_jk u_j, u_k)_g` for the
/// stacked vector `u = (u_1; ...; u_n)`.
pub fn nakano_matrix(t: &CurvatureTensor) -> NakanoMatrix {
    let (n, r) = (t.n, t.r);
    let mut m = ComplexMatrix::zeros(n * r, n * r);
    for j in 0..n {
        for k in 0..n {
            m.view_mut((k * r, j * r), (r, r)).copy_from(&t.lowered(j, k));
        }
    }
    let dev = hermitian_deviation(&m);
    NakanoMatrix {
        matrix: HermitianMatrix::new(m).expect("finite curvature blocks"),
        hermitian_deviation: dev,
    }
}

/// `sum_jk (Theta_jk u_j, u_k)_g` for a stacked tuple, without symmetrization.
pub fn nakano_form(t: &CurvatureTensor, stacked: &ComplexVector) -> Result<Complex64> {
    let (n, r) = (t.n, t.r);
    if stacked.len() != n * r {
        return Err(Error::Dimension(format!("tuple of length {} for n*r = {}", stacked.len(), n * r)));
    }
    let part = |j: usize| stacked.rows(j * r, r).into_owned();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += part(k).dotc(&(t.lowered(j, k) * part(j)));
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Want {
    Concave,
    Convex,
}

impl Want {
    fn sign(self) -> f64 {
        match self {
            Want::Concave => 1.0,
            Want::Convex => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    NakanoConcave,
    NakanoConvex,
    GriffithsConcave,
    GriffithsConvex,
}

impl Mode {
    pub fn nakano(want: Want) -> Self {
        match want {
            Want::Concave => Mode::NakanoConcave,
            Want::Convex => Mode::NakanoConvex,
        }
    }

    pub fn griffiths(want: Want) -> Self {
        match want {
            Want::Concave => Mode::GriffithsConcave,
            Want::Convex => Mode::GriffithsConvex,
        }
    }

    pub fn want(self) -> Want {
        match self {
            Mode::NakanoConcave | Mode::GriffithsConcave => Want::Concave,
            Mode::NakanoConvex | Mode::GriffithsConvex => Want::Convex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Holds {
    /// Decided by an eigenvalue test.
    Certified,
    /// An explicit witness crosses the threshold.
    ViolationFound,
    /// Search exhausted without a witness. Not a certificate.
    NoViolationFound,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Stacked tuple `(u_1; ...; u_n)`.
    Nakano(ComplexVector),
    Griffiths { u: ComplexVector, v: ComplexVector },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityVerdict {
    pub mode: Mode,
    pub holds: Holds,
    /// Largest form value for concavity tests, smallest for convexity tests.
    pub extreme_value: f64,
    pub threshold: f64,
    /// Extreme strictly beyond the threshold on the wanted side.
    pub strict: bool,
    pub witness: Option<Witness>,
    pub point: Vec<f64>,
}

/// Exact Nakano test through the spectrum of [`nakano_matrix`].
pub fn nakano_verdict(t: &CurvatureTensor, tol: &TolerancePolicy, want: Want) -> PositivityVerdict {
    let nm = nakano_matrix(t);
    let e = nm.matrix.eig();
    let (lo, hi) = (e.min(), e.max());
    let tau = tol.threshold(lo.abs().max(hi.abs()));
    let (extreme, idx) = match want {
        Want::Concave => (hi, e.values.len() - 1),
        Want::Convex => (lo, 0),
    };
    let s = want.sign();
    let holds = if s * extreme <= tau {
        Holds::Certified
    } else {
        Holds::ViolationFound
    };
    PositivityVerdict {
        mode: Mode::nakano(want),
        holds,
        extreme_value: extreme,
        threshold: tau,
        strict: s * extreme < -tau,
        witness: Some(Witness::Nakano(e.vector(idx))),
        point: t.point.clone(),
    }
}

/// Relative tolerance on the imaginary part of [`griffiths_form`].
pub const FORM_IMAG_REL: f64 = 1e-10;

/// `sum_jk (Theta_jk u, u)_g v_j conj(v_k)`.
pub fn griffiths_form(t: &CurvatureTensor, u: &ComplexVector, v: &ComplexVector) -> Result<f64> {
    if u.len() != t.r || v.len() != t.n {
        return Err(Error::Dimension(format!(
            "griffiths form needs u in C^{} and v in C^{}, got {} and {}",
            t.r,
            t.n,
            u.len(),
            v.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for j in 0..t.n {
        for k in 0..t.n {
            let term = u.dotc(&(t.lowered(j, k) * u)) * v[j] * v[k].conj();
            scale += term.norm();
            acc += term;
        }
    }
    let allowed = FORM_IMAG_REL * scale;
    if acc.im.abs() > allowed {
        return Err(Error::Symmetry {
            imag: acc.im,
            allowed,
        });
    }
    Ok(acc.re)
}

/// Multistart settings for the Griffiths search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub starts: usize,
    pub alternations: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            starts: 16,
            alternations: 50,
            seed: 0x5eed,
        }
    }
}

fn unit(v: ComplexVector) -> ComplexVector {
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(len, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        if v.norm() > 1e-3 {
            return unit(v);
        }
    }
}

/// `sum_jk v_j conj(v_k) g Theta_jk`, the `r x r` matrix whose form in `u` is the Griffiths form.
fn fiber_matrix(t: &CurvatureTensor, v: &ComplexVector) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(t.r, t.r);
    for j in 0..t.n {
        for k in 0..t.n {
            m += t.lowered(j, k) * (v[j] * v[k].conj());
        }
    }
    HermitianMatrix::new(m).expect("finite curvature blocks")
}

/// `[u* g Theta_jk u]` at `(k, j)`, the `n x n` matrix whose form in `v` is the Griffiths form.
fn base_matrix(t: &CurvatureTensor, u: &ComplexVector) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(t.n, t.n, |k, j| u.dotc(&(t.lowered(j, k) * u)));
    HermitianMatrix::new(m).expect("finite curvature blocks")
}

/// Top eigenpair of `s * m`, returned as `(s * lambda, vector)`.
fn top(m: &HermitianMatrix, s: f64) -> (f64, ComplexVector) {
    let e = m.eig();
    if s > 0.0 {
        (e.max(), e.vector(e.values.len() - 1))
    } else {
        (-e.min(), e.vector(0))
    }
}

/// Griffiths test. Exact when `n == 1` or `r == 1`; otherwise certified
/// through the Nakano bound or searched by alternating maximization.
pub fn griffiths_verdict(t: &CurvatureTensor, tol: &TolerancePolicy, want: Want, search: &SearchBudget) -> Result<PositivityVerdict> {
    let mode = Mode::griffiths(want);
    let s = want.sign();
    let nakano = nakano_verdict(t, tol, want);
    let split = |w: &Option<Witness>| -> Option<Witness> {
        let Some(Witness::Nakano(stacked)) = w else { return None };
        if t.n == 1 {
            Some(Witness::Griffiths {
                u: stacked.clone(),
                v: ComplexVector::from_element(1, Complex64::new(1.0, 0.0)),
            })
        } else if t.r == 1 {
            Some(Witness::Griffiths {
                u: ComplexVector::from_element(1, Complex64::new(1.0, 0.0)),
                v: stacked.clone(),
            })
        } else {
            None
        }
    };
    if t.n == 1 || t.r == 1 {
        return Ok(PositivityVerdict {
            mode,
            witness: split(&nakano.witness),
            ..nakano
        });
    }
    if nakano.holds == Holds::Certified {
        return Ok(PositivityVerdict {
            mode,
            witness: None,
            ..nakano
        });
    }

    let spectral = nakano_matrix(t).matrix.eig();
    let tau = tol.threshold(spectral.min().abs().max(spectral.max().abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best: Option<(f64, ComplexVector, ComplexVector)> = None;
    for _ in 0..search.starts.max(1) {
        let mut v = random_unit(&mut rng, t.n);
        let (mut value, mut u) = top(&fiber_matrix(t, &v), s);
        for _ in 0..search.alternations {
            let (_, v_next) = top(&base_matrix(t, &u), s);
            v = v_next;
            let (next, u_next) = top(&fiber_matrix(t, &v), s);
            u = u_next;
            let improved = next - value;
            value = next;
            if improved <= 1e-15 * value.abs().max(1.0) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, u, v));
        }
        if value > tau {
            break;
        }
    }
    let (value, u, v) = best.expect("at least one start");
    let extreme = griffiths_form(t, &u, &v)?;
    debug_assert!((s * extreme - value).abs() <= 1e-8 * value.abs().max(1.0));
    let holds = if s * extreme > tau {
        Holds::ViolationFound
    } else {
        Holds::NoViolationFound
    };
    Ok(PositivityVerdict {
        mode,
        holds,
        extreme_value: extreme,
        threshold: tau,
        strict: false,
        witness: Some(Witness::Griffiths { u, v }),
        point: t.point.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Nakano(Want),
    Griffiths(Want, SearchBudget),
}

impl SweepMode {
    pub fn want(&self) -> Want {
        match self {
            SweepMode::Nakano(w) | SweepMode::Griffiths(w, _) => *w,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSummary {
    pub certified: usize,
    pub violations: usize,
    pub inconclusive: usize,
    pub errors: usize,
    /// Worst extreme over the successful points and the index of that point.
    pub worst: Option<(f64, usize)>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub verdicts: Vec<Result<PositivityVerdict>>,
    pub summary: SweepSummary,
}

pub fn verdict_at(g: &MetricFunction, x: &[f64], scheme: &FdScheme, tol: &TolerancePolicy, mode: &SweepMode) -> Result<PositivityVerdict> {
    let t = theta(g, x, scheme)?;
    match mode {
        SweepMode::Nakano(w) => Ok(nakano_verdict(&t, tol, *w)),
        SweepMode::Griffiths(w, budget) => griffiths_verdict(&t, tol, *w, budget),
    }
}

pub fn summarize(verdicts: &[Result<PositivityVerdict>], want: Want) -> SweepSummary {
    let mut s = SweepSummary::default();
    let sign = want.sign();
    for (i, v) in verdicts.iter().enumerate() {
        match v {
            Err(_) => s.errors += 1,
            Ok(v) => {
                match v.holds {
                    Holds::Certified => s.certified += 1,
                    Holds::ViolationFound => s.violations += 1,
                    Holds::NoViolationFound => s.inconclusive += 1,
                }
                if s.worst.is_none_or(|(w, _)| sign * v.extreme_value > sign * w) {
                    s.worst = Some((v.extreme_value, i));
                }
            }
        }
    }
    s
}

/// One verdict per grid point; per-point failures are recorded, not propagated.
pub fn grid_sweep(g: &MetricFunction, grid: &[Vec<f64>], scheme: &FdScheme, tol: &TolerancePolicy, mode: &SweepMode) -> SweepResult {
    let verdicts: Vec<_> = grid.par_iter().map(|x| verdict_at(g, x, scheme, tol, mode)).collect();
    let summary = summarize(&verdicts, mode.want());
    SweepResult { verdicts, summary }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_gauss() -> MetricFunction {
        MetricFunction::new("gauss", 1, 1, |x| Ok(ComplexMatrix::from_element(1, 1, (-x[0] * x[0]).exp().into())))
    }

    #[test]
    fn scalar_gaussian_curvature() {
        let t = theta(&scalar_gauss(), &[0.3], &FdScheme::default()).unwrap();
        assert!((t.block(0, 0)[(0, 0)].re + 2.0).abs() < 1e-8);
    }

    #[test]
    fn constant_metric_has_zero_curvature() {
        let c = HermitianMatrix::from_real(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        let g = MetricFunction::constant("c", 2, c).without_derivatives();
        let t = theta(&g, &[0.4, -0.2], &FdScheme::default()).unwrap();
        assert!(t.max_block_norm() < 1e-9);
        let tol = TolerancePolicy::default();
        assert_eq!(nakano_verdict(&t, &tol, Want::Concave).holds, Holds::Certified);
        assert_eq!(nakano_verdict(&t, &tol, Want::Convex).holds, Holds::Certified);
    }

    #[test]
    fn form_with_zero_vector_vanishes() {
        let t = theta(&scalar_gauss(), &[0.3], &FdScheme::default()).unwrap();
        let u = ComplexVector::zeros(1);
        let v = ComplexVector::from_element(1, Complex64::new(1.0, 0.0));
        assert_eq!(griffiths_form(&t, &u, &v).unwrap(), 0.0);
    }

    #[test]
    fn griffiths_form_rejects_non_real_data() {
        let g = HermitianMatrix::identity(2);
        let a = ComplexMatrix::from_fn(2, 2, |j, k| if j == 0 && k == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let t = CurvatureTensor::from_blocks(vec![0.0], g, vec![a]).unwrap();
        let u = ComplexVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let v = ComplexVector::from_element(1, Complex64::new(1.0, 0.0));
        assert!(matches!(griffiths_form(&t, &u, &v), Err(Error::Symmetry { .. })));
    }

    #[test]
    fn sweep_records_errors_per_point() {
        let g = MetricFunction::new("shifted", 1, 1, |x| Ok(ComplexMatrix::from_element(1, 1, (x[0] + 0.5).into())));
        let grid = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let res = grid_sweep(&g, &grid, &FdScheme::default(), &TolerancePolicy::default(), &SweepMode::Nakano(Want::Concave));
        assert!(matches!(res.verdicts[0], Err(Error::NotPositiveDefinite { .. })));
        assert!(res.verdicts[1].is_ok() && res.verdicts[2].is_ok());
        assert_eq!(res.summary.errors, 1);
    }

    #[test]
    fn from_blocks_checks_shape() {
        let r = CurvatureTensor::from_blocks(vec![0.0, 0.0], HermitianMatrix::identity(1), vec![ComplexMatrix::zeros(1, 1)]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }
}
