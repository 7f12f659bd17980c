//! Marginal integration `g~(t) = int g(y, t) dy` of a metric in `(y, t)`.
//!
//! If `g` is Nakano log-concave in `(y, t)` then so is `g~` in `t`. The
//! marginal is computed on a fixed quadrature grid, so it is a smooth function
//! of `t` and finite differences of it see only roundoff from the quadrature.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::curvature::{nakano_matrix, nakano_verdict, theta, Holds, PositivityVerdict, Want};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd::{scalar_derivatives, FdScheme};
use crate::linalg::{ComplexMatrix, HermitianMatrix, TolerancePolicy};
use crate::metric::MetricFunction;
use crate::quadrature::{integrate_matrix_masked, Axis, QuadratureGrid, TailReport, TAIL_ERROR, TAIL_WARN};

/// Default relative agreement between a marginal value and its value on the
/// doubled grid before curvature of the marginal is trusted.
pub const DEFAULT_QUAD_TARGET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexRegion {
    Box(Vec<(f64, f64)>),
    Ball { center: Vec<f64>, radius: f64 },
    /// Intersection of `{y : a . y <= b}` over the listed `(a, b)`.
    Halfspaces(Vec<(Vec<f64>, f64)>),
}

impl ConvexRegion {
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexRegion::Box(b) => Some(b.len()),
            ConvexRegion::Ball { center, .. } => Some(center.len()),
            ConvexRegion::Halfspaces(h) => h.first().map(|(a, _)| a.len()),
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            ConvexRegion::Box(b) => y.iter().zip(b).all(|(v, &(lo, hi))| lo <= *v && *v <= hi),
            ConvexRegion::Ball { center, radius } => y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= radius * radius,
            ConvexRegion::Halfspaces(h) => h.iter().all(|(a, b)| a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() <= *b),
        }
    }

    /// The region as a box when it is one; a ball in one variable is an interval.
    fn as_box(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            ConvexRegion::Box(b) => Some(b.clone()),
            ConvexRegion::Ball { center, radius } if center.len() == 1 => Some(vec![(center[0] - radius, center[0] + radius)]),
            _ => None,
        }
    }

    fn strictly_contains(&self, y: &[f64]) -> bool {
        match self {
            ConvexRegion::Box(b) => y.iter().zip(b).all(|(v, &(lo, hi))| lo < *v && *v < hi),
            ConvexRegion::Ball { center, radius } => y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius,
            ConvexRegion::Halfspaces(h) => h.iter().all(|(a, b)| a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() < *b),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != Some(dim) {
            return Err(Error::Dimension(format!("region of dimension {:?} for {dim} integrated variables", self.dim())));
        }
        match self {
            ConvexRegion::Box(b) => {
                if let Some(&(lo, hi)) = b.iter().find(|&&(lo, hi)| !(lo < hi)) {
                    return Err(Error::Domain(format!("empty box side [{lo}, {hi}]")));
                }
            }
            ConvexRegion::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
                }
            }
            ConvexRegion::Halfspaces(h) => {
                if h.iter().any(|(a, _)| a.len() != dim || a.iter().all(|v| *v == 0.0)) {
                    return Err(Error::Domain("halfspace normals must be nonzero vectors of the right length".into()));
                }
            }
        }
        Ok(())
    }
}

type Cache = RwLock<HashMap<Vec<u64>, (HermitianMatrix, TailReport)>>;

struct Inner {
    base: MetricFunction,
    integrated: usize,
    grid: QuadratureGrid,
    mask: Option<ConvexRegion>,
    quad_target: f64,
    cache: Cache,
}

/// `t -> int g(y, t) dy` over a fixed grid in `y`, memoized by the bit
/// pattern of `t`. The first `integrated` coordinates of `g` are `y`.
#[derive(Clone)]
pub struct MarginalMetric {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for MarginalMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MarginalMetric")
            .field("base", &self.inner.base.name())
            .field("integrated", &self.inner.integrated)
            .field("grid", &self.inner.grid)
            .field("mask", &self.inner.mask)
            .finish()
    }
}

/// Gauss–Legendre grid over `[-half_width, half_width]^dims`.
pub fn symmetric_grid(dims: usize, half_width: f64, order: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::new(vec![Axis::gauss_legendre(-half_width, half_width, order); dims])
}

/// Integrates the first `grid.dims()` coordinates of `g` out.
///
/// A box region is applied by shrinking the grid to the intersection, so the
/// integrand stays smooth; other regions give zero weight to outside nodes.
pub fn marginalize(g: &MetricFunction, region: Option<ConvexRegion>, grid: &QuadratureGrid) -> Result<MarginalMetric> {
    let integrated = grid.dims();
    if integrated >= g.dim() {
        return Err(Error::Dimension(format!(
            "integrating {integrated} of {} variables leaves no base variables",
            g.dim()
        )));
    }
    let (grid, mask) = match region {
        None => (grid.clone(), None),
        Some(r) => {
            r.validate(integrated)?;
            match r.as_box() {
                Some(b) => (grid.restricted_to_box(&b)?, None),
                None => {
                    let other = r;
                    let mut inside = false;
                    grid.for_each_node(|p, _, _| {
                        inside |= other.strictly_contains(p);
                        Ok(())
                    })?;
                    if !inside {
                        return Err(Error::Domain("region contains no quadrature node in its interior".into()));
                    }
                    let mut axes = grid.axes().to_vec();
                    if let ConvexRegion::Ball { center, radius } = &other {
                        for (a, c) in axes.iter_mut().zip(center) {
                            a.truncates.0 &= c - radius < a.lo;
                            a.truncates.1 &= c + radius > a.hi;
                        }
                    }
                    (QuadratureGrid::with_cap(axes, grid.node_cap())?, Some(other))
                }
            }
        }
    };
    Ok(MarginalMetric {
        inner: Arc::new(Inner {
            base: g.clone(),
            integrated,
            grid,
            mask,
            quad_target: DEFAULT_QUAD_TARGET,
            cache: RwLock::new(HashMap::new()),
        }),
    })
}

impl MarginalMetric {
    pub fn base_dim(&self) -> usize {
        self.inner.base.dim() - self.inner.integrated
    }

    pub fn rank(&self) -> usize {
        self.inner.base.rank()
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.inner.grid
    }

    pub fn quad_target(&self) -> f64 {
        self.inner.quad_target
    }

    /// Copy with a different resolution target and an empty cache.
    pub fn with_quad_target(&self, target: f64) -> Result<Self> {
        if !(target > 0.0) {
            return Err(Error::Domain(format!("quadrature target must be positive, got {target}")));
        }
        Ok(Self {
            inner: Arc::new(Inner {
                base: self.inner.base.clone(),
                integrated: self.inner.integrated,
                grid: self.inner.grid.clone(),
                mask: self.inner.mask.clone(),
                quad_target: target,
                cache: RwLock::new(HashMap::new()),
            }),
        })
    }

    fn integrate_on(&self, grid: &QuadratureGrid, t: &[f64]) -> Result<(HermitianMatrix, TailReport)> {
        let n = self.inner.integrated;
        if t.len() != self.base_dim() {
            return Err(Error::Dimension(format!("marginal takes {} variables, got {}", self.base_dim(), t.len())));
        }
        let mut point = vec![0.0; n + t.len()];
        point[n..].copy_from_slice(t);
        let base = &self.inner.base;
        let f = |y: &[f64]| {
            let mut p = point.clone();
            p[..n].copy_from_slice(y);
            base.eval_raw(&p)
        };
        let mask = self.inner.mask.as_ref().map(|r| move |y: &[f64]| r.contains(y));
        let mask_ref = mask.as_ref().map(|m| m as &(dyn Fn(&[f64]) -> bool + Sync));
        let (m, tail) = integrate_matrix_masked(&f, grid, mask_ref)?;
        tail.ensure_below(TAIL_ERROR)?;
        if tail.warning() {
            log::warn!("marginal at t = {t:?}: boundary mass ratio {:e} exceeds {TAIL_WARN:e}", tail.boundary_mass_ratio);
        }
        let h = HermitianMatrix::new(m)?;
        h.check_positive_definite(t)?;
        Ok((h, tail))
    }

    /// `g~(t)` with the tail report of its quadrature.
    pub fn value_with_tail(&self, t: &[f64]) -> Result<(HermitianMatrix, TailReport)> {
        let key: Vec<u64> = t.iter().map(|v| v.to_bits()).collect();
        if let Some(hit) = self.inner.cache.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let v = self.integrate_on(&self.inner.grid, t)?;
        self.inner.cache.write().expect("cache lock").insert(key, v.clone());
        Ok(v)
    }

    pub fn value(&self, t: &[f64]) -> Result<HermitianMatrix> {
        self.value_with_tail(t).map(|v| v.0)
    }

    /// Relative Frobenius change of `g~(t)` when every axis order is doubled.
    pub fn resolution(&self, t: &[f64]) -> Result<f64> {
        let coarse = self.value(t)?;
        let (fine, _) = self.integrate_on(&self.inner.grid.refined()?, t)?;
        Ok((fine.as_matrix() - coarse.as_matrix()).norm() / fine.frobenius_norm())
    }

    /// The marginal as a metric in `t`.
    pub fn as_metric(&self) -> MetricFunction {
        let me = self.clone();
        MetricFunction::new(
            format!("marginal({})", self.inner.base.name()),
            self.base_dim(),
            self.rank(),
            move |t| me.value(t).map(HermitianMatrix::into_matrix),
        )
    }
}

/// Nakano concavity verdicts for `g~` at each `t`. A point fails with
/// `NoConvergence` if doubling the grid moves `g~(t)` by more than the
/// marginal's quadrature target.
pub fn prekopa_verdict(m: &MarginalMetric, t_grid: &[Vec<f64>], scheme: &FdScheme, tol: &TolerancePolicy) -> Vec<Result<PositivityVerdict>> {
    let metric = m.as_metric();
    t_grid
        .par_iter()
        .map(|t| {
            let achieved = m.resolution(t)?;
            if achieved > m.quad_target() {
                return Err(Error::NoConvergence {
                    doublings: 1,
                    achieved,
                    target: m.quad_target(),
                });
            }
            Ok(nakano_verdict(&theta(&metric, t, scheme)?, tol, Want::Concave))
        })
        .collect()
}

/// Tolerance used by [`corollary_builder`] when comparing a curvature block
/// against its decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-5;

/// `g(y, t) = exp(-phi(y, t)) A(y)` after checking that `phi` is convex on
/// the sample, that `A Theta^A` is negative definite on the `y` sample, and
/// that the curvature of `g` splits as `-Hess(phi) I + Theta^A` (in the `yy`
/// block) and is Nakano concave at every sample point.
///
/// `phi` is evaluated at points ordered `(y, t)`.
pub fn corollary_builder(phi: &Expr, a: &MetricFunction, t_dim: usize, y_samples: &[Vec<f64>], t_samples: &[Vec<f64>]) -> Result<MetricFunction> {
    let n = a.dim();
    let dim = n + t_dim;
    if y_samples.iter().any(|y| y.len() != n) || t_samples.iter().any(|t| t.len() != t_dim) {
        return Err(Error::Dimension("sample points do not match the variable split".into()));
    }
    if y_samples.is_empty() || t_samples.is_empty() {
        return Err(Error::Domain("corollary_builder needs non-empty samples".into()));
    }
    let scheme = FdScheme::default();
    let tol = TolerancePolicy::default();

    let mut theta_a = Vec::with_capacity(y_samples.len());
    for y in y_samples {
        let t = theta(a, y, &scheme)?;
        let v = nakano_verdict(&t, &tol, Want::Concave);
        if !v.strict {
            return Err(Error::Precondition {
                point: y.clone(),
                reason: format!("A Theta^A is not negative definite (max eigenvalue {:e})", v.extreme_value),
            });
        }
        theta_a.push(t);
    }

    let phi_fn = |p: &[f64]| {
        phi.eval(p).map_err(|source| Error::Eval {
            point: p.to_vec(),
            entry: None,
            source,
        })
    };
    let points: Vec<Vec<f64>> = y_samples
        .iter()
        .flat_map(|y| t_samples.iter().map(move |t| [y.as_slice(), t.as_slice()].concat()))
        .collect();
    let mut hessians = Vec::with_capacity(points.len());
    for p in &points {
        let (_, _, h) = scalar_derivatives(&phi_fn, p, &scheme)?;
        let hm = HermitianMatrix::from_real(&h.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        let e = hm.eig();
        if e.min() < -tol.threshold(e.max().abs()) {
            return Err(Error::Precondition {
                point: p.clone(),
                reason: format!("phi is not convex here (Hessian eigenvalue {:e})", e.min()),
            });
        }
        hessians.push(h);
    }

    let (phi_c, a_c) = (phi.clone(), a.clone());
    let g = MetricFunction::new(format!("corollary({})", a.name()), dim, a.rank(), move |p| {
        let s = phi_c.eval(p).map_err(|source| Error::Eval {
            point: p.to_vec(),
            entry: None,
            source,
        })?;
        Ok(a_c.eval(&p[..n])?.into_matrix() * num_complex::Complex64::new((-s).exp(), 0.0))
    });

    let r = a.rank();
    for (i, p) in points.iter().enumerate() {
        let t = theta(&g, p, &scheme)?;
        let ta = &theta_a[i / t_samples.len()];
        for j in 0..dim {
            for k in 0..dim {
                let mut expect = ComplexMatrix::identity(r, r) * num_complex::Complex64::new(-hessians[i][j][k], 0.0);
                if j < n && k < n {
                    expect += ta.block(j, k);
                }
                let err = (t.block(j, k) - expect).norm();
                if err > DECOMPOSITION_TOL {
                    return Err(Error::Precondition {
                        point: p.clone(),
                        reason: format!("curvature block ({j}, {k}) deviates from the decomposition by {err:e}"),
                    });
                }
            }
        }
        let v = nakano_verdict(&t, &tol, Want::Concave);
        if v.holds != Holds::Certified {
            let e = nakano_matrix(&t).matrix.eig();
            return Err(Error::Precondition {
                point: p.clone(),
                reason: format!("g is not Nakano concave here (max eigenvalue {:e})", e.max()),
            });
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn cmat() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(1.0), c(1.0)])
    }

    fn gauss_c() -> MetricFunction {
        MetricFunction::new("gc", 2, 2, |p| Ok(cmat() * c((-(p[0] * p[0] + p[1] * p[1])).exp())))
    }

    fn a_metric() -> MetricFunction {
        MetricFunction::new("A", 1, 2, |y| {
            let e = (-y[0] * y[0]).exp();
            let (ch, sh) = (y[0].cosh() * e, y[0].sinh() * e);
            Ok(ComplexMatrix::from_row_slice(2, 2, &[c(ch), c(sh), c(sh), c(ch)]))
        })
    }

    fn corollary() -> MetricFunction {
        let a = a_metric();
        MetricFunction::new("cor", 2, 2, move |p| {
            Ok(a.eval_raw(&p[..1])? * c((-(p[0] * p[0] + p[0] * p[1] + p[1] * p[1])).exp()))
        })
    }

    fn vars() -> Vec<String> {
        vec!["y1".into(), "t1".into()]
    }

    #[test]
    fn gaussian_marginal() {
        let m = marginalize(&gauss_c(), None, &symmetric_grid(1, 8.0, 64).unwrap()).unwrap();
        for t in [-2.0f64, -0.5, 0.0, 1.0, 2.0] {
            let expect = cmat() * c(PI.sqrt() * (-t * t).exp());
            let v = m.value(&[t]).unwrap();
            assert!((v.as_matrix() - &expect).norm() <= 1e-10 * expect.norm());
        }
        let vs = prekopa_verdict(&m, &[vec![0.0], vec![1.5]], &FdScheme::default(), &TolerancePolicy::default());
        for v in vs {
            let v = v.unwrap();
            assert_eq!(v.holds, Holds::Certified);
        }
        let t = theta(&m.as_metric(), &[0.7], &FdScheme::default()).unwrap();
        assert!((t.block(0, 0) - ComplexMatrix::identity(2, 2) * c(-2.0)).norm() < 1e-5);
    }

    #[test]
    fn unit_box_gives_unit_mass() {
        let g = MetricFunction::new("flat", 2, 1, |p| Ok(ComplexMatrix::from_element(1, 1, c(1.0 + p[1] * p[1]))));
        let m = marginalize(&g, Some(ConvexRegion::Box(vec![(0.0, 1.0)])), &symmetric_grid(1, 8.0, 16).unwrap()).unwrap();
        assert!((m.value(&[2.0]).unwrap().get(0, 0).re - 5.0).abs() < 1e-13);
        assert_eq!(m.value_with_tail(&[2.0]).unwrap().1.boundary_mass_ratio, 0.0);
    }

    #[test]
    fn full_box_region_is_identical() {
        let grid = symmetric_grid(1, 8.0, 48).unwrap();
        let plain = marginalize(&corollary(), None, &grid).unwrap();
        let boxed = marginalize(&corollary(), Some(ConvexRegion::Box(vec![(-8.0, 8.0)])), &grid).unwrap();
        for t in [-1.0, 0.25] {
            assert_eq!(plain.value(&[t]).unwrap(), boxed.value(&[t]).unwrap());
        }
    }

    #[test]
    fn corollary_marginal_at_origin() {
        let m = marginalize(&corollary(), None, &symmetric_grid(1, 8.0, 64).unwrap()).unwrap();
        let v = m.value(&[0.0]).unwrap();
        let d = (PI / 2.0).sqrt() * (0.125f64).exp();
        assert!((v.get(0, 0).re - d).abs() < 1e-12);
        assert!((v.get(1, 1).re - d).abs() < 1e-12);
        assert!(v.get(0, 1).norm() < 1e-14);
    }

    #[test]
    fn corollary_marginal_closed_form() {
        let m = marginalize(&corollary(), None, &symmetric_grid(1, 8.0, 64).unwrap()).unwrap();
        for t in [-2.0f64, 0.5, 2.0] {
            let s = (PI / 2.0).sqrt() * (0.125 - 7.0 * t * t / 8.0f64).exp();
            let v = m.value(&[t]).unwrap();
            assert!((v.get(0, 0).re - s * (t / 4.0).cosh()).abs() < 1e-12);
            assert!((v.get(0, 1).re + s * (t / 4.0).sinh()).abs() < 1e-12);
        }
        let t = theta(&m.as_metric(), &[1.0], &FdScheme::default()).unwrap();
        assert!((t.block(0, 0) - ComplexMatrix::identity(2, 2) * c(-1.75)).norm() < 1e-6);
    }

    #[test]
    fn divergent_integrand_is_truncation_error() {
        let g = MetricFunction::new("bad", 2, 1, |p| Ok(ComplexMatrix::from_element(1, 1, c((p[0] * p[0] - p[1] * p[1]).exp()))));
        let m = marginalize(&g, None, &symmetric_grid(1, 8.0, 32).unwrap()).unwrap();
        assert!(matches!(m.value(&[0.0]), Err(Error::Truncation { .. })));
    }

    #[test]
    fn ball_region_masks_nodes() {
        let grid = symmetric_grid(2, 1.0, 40).unwrap();
        let g = MetricFunction::new("one", 3, 1, |_| Ok(ComplexMatrix::from_element(1, 1, c(1.0))));
        let m = marginalize(&g, Some(ConvexRegion::Ball { center: vec![0.0, 0.0], radius: 1.0 }), &grid).unwrap();
        assert!((m.value(&[0.0]).unwrap().get(0, 0).re - PI).abs() < 0.05);
        let far = ConvexRegion::Halfspaces(vec![(vec![1.0, 0.0], -5.0)]);
        assert!(marginalize(&g, Some(far), &grid).is_err());
        assert!(marginalize(&g, Some(ConvexRegion::Ball { center: vec![0.0], radius: 1.0 }), &grid).is_err());
    }

    #[test]
    fn builder_accepts_corollary() {
        let phi = parse("y1^2 + y1*t1 + t1^2", &vars()).unwrap();
        let ys: Vec<Vec<f64>> = [-1.0, 0.0, 1.0].iter().map(|&v| vec![v]).collect();
        let ts: Vec<Vec<f64>> = [-1.0, 0.5].iter().map(|&v| vec![v]).collect();
        let g = corollary_builder(&phi, &a_metric(), 1, &ys, &ts).unwrap();
        let p = [0.3, -0.2];
        assert!((g.eval(&p).unwrap().as_matrix() - corollary().eval(&p).unwrap().as_matrix()).norm() < 1e-14);
    }

    #[test]
    fn builder_rejects_nonconvex_phi() {
        let phi = parse("-y1^2", &vars()).unwrap();
        match corollary_builder(&phi, &a_metric(), 1, &[vec![0.5]], &[vec![0.0]]) {
            Err(Error::Precondition { point, .. }) => assert_eq!(point, vec![0.5, 0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn builder_rejects_flat_a() {
        let phi = parse("y1^2 + t1^2", &vars()).unwrap();
        let a = MetricFunction::constant("C", 1, HermitianMatrix::identity(2));
        match corollary_builder(&phi, &a, 1, &[vec![0.25]], &[vec![0.0]]) {
            Err(Error::Precondition { point, .. }) => assert_eq!(point, vec![0.25]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
