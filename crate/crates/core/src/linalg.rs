//! Dense complex Hermitian matrices, eigen-decomposition and definiteness
//! verdicts.
//!
//! Every curvature and integration result in this crate is eventually
//! reduced to a question about the spectrum of a small Hermitian matrix, so
//! the threshold policy lives here. A verdict uses the threshold
//!
//! ```text
//! tau = max(abs_eig, rel_eig * max(|min_eig|, |max_eig|))
//! ```
//!
//! which mixes an absolute floor with a scale-relative part.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Thresholds used when a spectrum is turned into a sign decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub abs_eig: f64,
    pub rel_eig: f64,
    /// Hermitian deviation above which construction logs a warning.
    pub herm_warn: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            abs_eig: 1e-8,
            rel_eig: 1e-6,
            herm_warn: 1e-9,
        }
    }
}

impl TolerancePolicy {
    pub fn new(abs_eig: f64, rel_eig: f64, herm_warn: f64) -> Result<Self> {
        for (name, v) in [("abs_eig", abs_eig), ("rel_eig", rel_eig), ("herm_warn", herm_warn)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(Self {
            abs_eig,
            rel_eig,
            herm_warn,
        })
    }

    /// Threshold for a spectrum with the given magnitude.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs_eig.max(self.rel_eig * scale.abs())
    }
}

/// Smallest ratio `min_eig / max_eig` accepted by [`HermitianMatrix::check_positive_definite`].
pub const PD_CONDITION_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    NegativeDefinite,
    NegativeSemidefinite,
    Indefinite,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefinitenessVerdict {
    pub min_eig: f64,
    pub max_eig: f64,
    pub threshold: f64,
    pub classification: Definiteness,
    pub witness_min: ComplexVector,
    pub witness_max: ComplexVector,
}

/// Ascending eigenvalues with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, i: usize) -> ComplexVector {
        self.vectors.column(i).into_owned()
    }
}

/// A complex Hermitian matrix. The stored entries satisfy
/// `m[(j, k)] == m[(k, j)].conj()` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: ComplexMatrix,
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    Ok(())
}

/// Largest entrywise deviation `|m - m*|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for k in j..n {
            dev = dev.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    dev
}

impl HermitianMatrix {
    /// Symmetrizes `(m + m*) / 2`. Logs a warning when the input deviates
    /// from Hermitian by more than the default `herm_warn`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_policy(m, &TolerancePolicy::default()).map(|(h, _)| h)
    }

    /// Like [`HermitianMatrix::new`] and also returns the pre-symmetrization deviation.
    pub fn with_policy(m: ComplexMatrix, tol: &TolerancePolicy) -> Result<(Self, f64)> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_finite(&m)?;
        let dev = hermitian_deviation(&m);
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > tol.herm_warn * scale.max(1.0) {
            log::warn!("symmetrizing matrix with Hermitian deviation {dev:e}");
        }
        Ok((Self::symmetrize(&m), dev))
    }

    fn symmetrize(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        let mut data = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            data[(j, j)] = Complex64::new(m[(j, j)].re, 0.0);
            for k in (j + 1)..n {
                let z = (m[(j, k)] + m[(k, j)].conj()) * 0.5;
                data[(j, k)] = z;
                data[(k, j)] = z.conj();
            }
        }
        Self { data }
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("rows must form a square matrix".into()));
        }
        Self::new(ComplexMatrix::from_fn(n, n, |j, k| Complex64::new(rows[j][k], 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: ComplexMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: ComplexMatrix::zeros(n, n),
        }
    }

    /// `-v v*`, `v v*` scaled by `sign`.
    pub fn rank_one(v: &ComplexVector, sign: f64) -> Self {
        Self::symmetrize(&(v * v.adjoint() * Complex64::new(sign, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.data
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.data[(j, k)]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    pub fn eig(&self) -> Eigen {
        eig_hermitian(self)
    }

    /// `v* M v` (real for Hermitian `M`).
    pub fn quadratic_form(&self, v: &ComplexVector) -> f64 {
        (v.adjoint() * &self.data * v)[(0, 0)].re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|j| self.data[(j, j)].re).sum()
    }

    /// Errors unless `min_eig > 0` and `min_eig > PD_CONDITION_FLOOR * max_eig`.
    pub fn check_positive_definite(&self, point: &[f64]) -> Result<()> {
        let e = self.eig();
        let (lo, hi) = (e.min(), e.max());
        if lo > 0.0 && lo > PD_CONDITION_FLOOR * hi {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite {
                point: point.to_vec(),
                min_eig: lo,
            })
        }
    }

    /// Inverse of a positive definite matrix through its eigen-decomposition.
    pub fn inverse(&self) -> Result<Self> {
        let e = self.eig();
        if e.min() <= 0.0 || e.min() <= PD_CONDITION_FLOOR * e.max() {
            return Err(Error::NotPositiveDefinite {
                point: vec![],
                min_eig: e.min(),
            });
        }
        Ok(Self::symmetrize(&spectral_map(&e, |l| 1.0 / l)))
    }

    /// Determinant, real for Hermitian matrices.
    pub fn det(&self) -> f64 {
        self.eig().values.iter().product()
    }
}

/// `V diag(f(lambda)) V*`.
pub fn spectral_map(e: &Eigen, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = e.values.len();
    let mut scaled = e.vectors.clone();
    for (k, &l) in e.values.iter().enumerate() {
        let fl = f(l);
        for j in 0..n {
            scaled[(j, k)] *= fl;
        }
    }
    scaled * e.vectors.adjoint()
}

pub fn eig_hermitian(m: &HermitianMatrix) -> Eigen {
    let n = m.dim();
    if n == 1 {
        return Eigen {
            values: vec![m.data[(0, 0)].re],
            vectors: ComplexMatrix::identity(1, 1),
        };
    }
    let se = SymmetricEigen::new(m.data.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src);
        let norm = col.norm();
        vectors.set_column(dst, &(col / Complex64::new(norm, 0.0)));
    }
    Eigen { values, vectors }
}

pub fn classify_definiteness(m: &HermitianMatrix, tol: &TolerancePolicy) -> DefinitenessVerdict {
    let e = m.eig();
    let (lo, hi) = (e.min(), e.max());
    let tau = tol.threshold(lo.abs().max(hi.abs()));
    let classification = if lo.abs() <= tau && hi.abs() <= tau {
        Definiteness::Zero
    } else if lo > tau {
        Definiteness::PositiveDefinite
    } else if hi < -tau {
        Definiteness::NegativeDefinite
    } else if lo >= -tau {
        Definiteness::PositiveSemidefinite
    } else if hi <= tau {
        Definiteness::NegativeSemidefinite
    } else {
        Definiteness::Indefinite
    };
    DefinitenessVerdict {
        min_eig: lo,
        max_eig: hi,
        threshold: tau,
        classification,
        witness_min: e.vector(0),
        witness_max: e.vector(m.dim() - 1),
    }
}

/// Entrywise (Hadamard) product.
pub fn schur_product(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "schur product of {0}x{0} and {1}x{1}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(HermitianMatrix::symmetrize(&a.data.component_mul(&b.data)))
}

/// Gram matrix with entry `(j, k) = u_k* g u_j`.
pub fn gram_matrix(vectors: &[ComplexVector], g: &HermitianMatrix) -> Result<HermitianMatrix> {
    if vectors.is_empty() {
        return Err(Error::Dimension("gram matrix of an empty tuple".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != g.dim()) {
        return Err(Error::Dimension(format!(
            "vector of length {} against a {}x{} metric",
            v.len(),
            g.dim(),
            g.dim()
        )));
    }
    g.check_positive_definite(&[])?;
    let gu: Vec<ComplexVector> = vectors.iter().map(|u| g.as_matrix() * u).collect();
    let n = vectors.len();
    let b = ComplexMatrix::from_fn(n, n, |j, k| vectors[k].dotc(&gu[j]));
    HermitianMatrix::new(b)
}

/// Solves `g X = rhs` for positive definite `g`.
pub fn solve_pd(g: &HermitianMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    let chol = nalgebra::Cholesky::new(g.as_matrix().clone()).ok_or_else(|| Error::NotPositiveDefinite {
        point: vec![],
        min_eig: g.eig().min(),
    })?;
    Ok(chol.solve(rhs))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidMatrix("expm of a non-square matrix".into()));
    }
    check_finite(a)?;
    let norm1 = (0..n)
        .map(|k| a.column(k).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    const THETA13: f64 = 5.371920351148152;
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * Complex64::new(2f64.powi(-s), 0.0);
    let c = |i: usize| Complex64::new(PADE13[i], 0.0);
    let id = ComplexMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9));
    let u = &a * (u_inner + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1));
    let v_inner = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8));
    let v = v_inner + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidMatrix("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    check_finite(&r)?;
    Ok(r)
}

/// `exp(H)` for Hermitian `H`: Padé scaling and squaring, falling back to the
/// spectral formula when the result is not numerically positive definite.
pub fn expm_hermitian(h: &HermitianMatrix) -> HermitianMatrix {
    if let Ok(m) = expm(h.as_matrix()) {
        let candidate = HermitianMatrix::symmetrize(&m);
        if candidate.check_positive_definite(&[]).is_ok() {
            return candidate;
        }
    }
    let e = h.eig();
    HermitianMatrix::symmetrize(&spectral_map(&e, f64::exp))
}
