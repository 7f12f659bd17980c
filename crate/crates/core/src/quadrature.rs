//! Tensor-product quadrature over boxes.
//!
//! Each axis carries its own one-dimensional rule. Integration sums
//! `w_i F(node_i)` entrywise with compensated summation, visiting nodes in a
//! fixed odometer order so results are reproducible bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub const DEFAULT_NODE_CAP: usize = 10_000_000;
/// Boundary mass ratio above which a [`TailReport`] flags a truncation warning.
pub const TAIL_WARN: f64 = 1e-8;
/// Boundary mass ratio above which callers that need convergence refuse the result.
pub const TAIL_ERROR: f64 = 1e-4;
const MAX_ORDER: usize = 4096;
const MAX_HERMITE_ORDER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    GaussLegendre(usize),
    Trapezoid(usize),
    /// Nodes `center + scale * x_i` for the Hermite rule of the given order.
    /// Weights are rescaled so the rule integrates `F(y) dy` directly.
    GaussHermite { order: usize, center: f64, scale: f64 },
}

impl Rule {
    pub fn order(&self) -> usize {
        match *self {
            Rule::GaussLegendre(k) | Rule::Trapezoid(k) => k,
            Rule::GaussHermite { order, .. } => order,
        }
    }

    fn doubled(&self) -> Rule {
        match *self {
            Rule::GaussLegendre(k) => Rule::GaussLegendre(2 * k),
            Rule::Trapezoid(k) => Rule::Trapezoid(2 * k - 1),
            Rule::GaussHermite { order, center, scale } => Rule::GaussHermite {
                order: 2 * order,
                center,
                scale,
            },
        }
    }
}

/// One axis of a [`QuadratureGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub rule: Rule,
    pub lo: f64,
    pub hi: f64,
    /// Whether each end of the interval truncates a longer domain. Only
    /// truncating faces count towards the [`TailReport`].
    pub truncates: (bool, bool),
}

impl Axis {
    pub fn gauss_legendre(lo: f64, hi: f64, order: usize) -> Self {
        Self {
            rule: Rule::GaussLegendre(order),
            lo,
            hi,
            truncates: (true, true),
        }
    }

    pub fn trapezoid(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            rule: Rule::Trapezoid(points),
            lo,
            hi,
            truncates: (true, true),
        }
    }

    pub fn gauss_hermite(order: usize, center: f64, scale: f64) -> Self {
        Self {
            rule: Rule::GaussHermite { order, center, scale },
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            truncates: (true, true),
        }
    }

    /// Same rule kind on a different interval (a no-op for Hermite axes).
    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        if !matches!(self.rule, Rule::GaussHermite { .. }) {
            self.lo = lo;
            self.hi = hi;
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let k = self.rule.order();
        if k < 2 {
            return Err(Error::Domain(format!("quadrature order must be at least 2, got {k}")));
        }
        match self.rule {
            Rule::GaussHermite { order, center, scale } => {
                if order > MAX_HERMITE_ORDER {
                    return Err(Error::Budget(format!("Gauss-Hermite order {order} exceeds {MAX_HERMITE_ORDER}")));
                }
                if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
                    return Err(Error::Domain(format!("Gauss-Hermite scale must be positive, got {scale}")));
                }
            }
            _ => {
                if k > MAX_ORDER {
                    return Err(Error::Budget(format!("quadrature order {k} exceeds {MAX_ORDER}")));
                }
                if !(self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite()) {
                    return Err(Error::Domain(format!("need a < b on a bounded axis, got [{}, {}]", self.lo, self.hi)));
                }
            }
        }
        Ok(())
    }

    /// Nodes and weights for integrating `F(y) dy` over this axis.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            Rule::GaussLegendre(k) => {
                let (x, w) = gauss_legendre(k);
                let (mid, half) = ((self.hi + self.lo) / 2.0, (self.hi - self.lo) / 2.0);
                (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
            }
            Rule::Trapezoid(k) => {
                let h = (self.hi - self.lo) / (k - 1) as f64;
                let x = (0..k).map(|i| self.lo + h * i as f64).collect();
                let w = (0..k).map(|i| if i == 0 || i == k - 1 { h / 2.0 } else { h }).collect();
                (x, w)
            }
            Rule::GaussHermite { order, center, scale } => {
                let (x, w) = gauss_hermite(order);
                (
                    x.iter().map(|t| center + scale * t).collect(),
                    x.iter().zip(&w).map(|(t, v)| v * (t * t).exp() * scale).collect(),
                )
            }
        }
    }

    /// Length used to scale face masses in a [`TailReport`].
    pub fn extent(&self, nodes: &[f64]) -> f64 {
        match self.rule {
            Rule::GaussHermite { .. } => nodes[nodes.len() - 1] - nodes[0],
            _ => self.hi - self.lo,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    let kf = k as f64;
    for i in 0..k.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=k {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = kf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[k - 1 - i] = z;
        w[i] = wi;
        w[k - 1 - i] = wi;
    }
    if k % 2 == 1 {
        x[k / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Hermite nodes and weights for the weight `exp(-x^2)`, ascending.
pub fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let kf = k as f64;
    let m = k.div_ceil(2);
    let mut roots = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * kf + 1.0).sqrt() - 1.85575 * (2.0 * kf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * kf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..k {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * kf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        roots[i] = z;
        weights[i] = 2.0 / (pp * pp);
    }
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..m {
        x[i] = -roots[i];
        x[k - 1 - i] = roots[i];
        w[i] = weights[i];
        w[k - 1 - i] = weights[i];
    }
    if k % 2 == 1 {
        x[k / 2] = 0.0;
    }
    (x, w)
}

/// Tensor-product grid over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    axes: Vec<Axis>,
    node_cap: usize,
}

impl QuadratureGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        Self::with_cap(axes, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(axes: Vec<Axis>, node_cap: usize) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Dimension("a quadrature grid needs at least one axis".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        let g = Self { axes, node_cap };
        let total = g.total_nodes();
        if total > node_cap {
            return Err(Error::Budget(format!("{total} quadrature nodes exceed the cap of {node_cap}")));
        }
        Ok(g)
    }

    /// Gauss–Legendre of one order on every side of a box.
    pub fn gauss_legendre(bounds: &[(f64, f64)], order: usize) -> Result<Self> {
        Self::new(bounds.iter().map(|&(a, b)| Axis::gauss_legendre(a, b, order)).collect())
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn node_cap(&self) -> usize {
        self.node_cap
    }

    pub fn total_nodes(&self) -> usize {
        self.axes.iter().map(|a| a.rule.order()).fold(1usize, |acc, k| acc.saturating_mul(k))
    }

    /// Every axis with its order doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::with_cap(
            self.axes
                .iter()
                .map(|a| Axis {
                    rule: a.rule.doubled(),
                    ..*a
                })
                .collect(),
            self.node_cap,
        )
    }

    /// Intersects the bounded axes with a box. Faces moved inwards become
    /// genuine boundaries and stop counting as truncation.
    pub fn restricted_to_box(&self, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() != self.dims() {
            return Err(Error::Dimension(format!("box of dimension {} for a {}-dimensional grid", bounds.len(), self.dims())));
        }
        let axes = self
            .axes
            .iter()
            .zip(bounds)
            .map(|(a, &(lo, hi))| {
                if matches!(a.rule, Rule::GaussHermite { .. }) {
                    return Err(Error::Domain("cannot restrict an unbounded Gauss-Hermite axis to a box".into()));
                }
                let (new_lo, new_hi) = (a.lo.max(lo), a.hi.min(hi));
                if new_lo >= new_hi {
                    return Err(Error::Domain(format!("region [{lo}, {hi}] misses the grid interval [{}, {}]", a.lo, a.hi)));
                }
                Ok(Axis {
                    lo: new_lo,
                    hi: new_hi,
                    truncates: (a.truncates.0 && new_lo == a.lo, a.truncates.1 && new_hi == a.hi),
                    ..*a
                })
            })
            .collect::<Result<_>>()?;
        Self::with_cap(axes, self.node_cap)
    }

    /// Calls `f(point, weight)` for every node in a fixed order.
    pub fn for_each_node(&self, mut f: impl FnMut(&[f64], f64, &[usize]) -> Result<()>) -> Result<()> {
        let rules: Vec<(Vec<f64>, Vec<f64>)> = self.axes.iter().map(Axis::nodes).collect();
        let d = self.dims();
        let mut idx = vec![0usize; d];
        let mut point: Vec<f64> = rules.iter().map(|(x, _)| x[0]).collect();
        loop {
            let w: f64 = (0..d).map(|i| rules[i].1[idx[i]]).product();
            f(&point, w, &idx)?;
            let mut axis = d;
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < rules[axis].0.len() {
                    point[axis] = rules[axis].0[idx[axis]];
                    break;
                }
                idx[axis] = 0;
                point[axis] = rules[axis].0[0];
            }
        }
    }
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// How much of the integrand's mass sits on the truncating faces of the box.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailReport {
    /// Max over truncating faces of (face integral of `|F|` times the box
    /// extent normal to the face) over the integral of `|F|`.
    pub boundary_mass_ratio: f64,
}

impl TailReport {
    pub fn warning(&self) -> bool {
        self.boundary_mass_ratio > TAIL_WARN
    }

    /// Errors if the ratio exceeds `limit`.
    pub fn ensure_below(&self, limit: f64) -> Result<()> {
        if self.boundary_mass_ratio > limit {
            Err(Error::Truncation {
                ratio: self.boundary_mass_ratio,
                limit,
            })
        } else {
            Ok(())
        }
    }
}

/// Integrand evaluated at a quadrature node.
pub type Integrand<'a> = dyn Fn(&[f64]) -> Result<ComplexMatrix> + Sync + 'a;

const CHUNK: usize = 1024;

/// `sum_i w_i F(node_i)` over the grid.
pub fn integrate_matrix(f: &Integrand<'_>, grid: &QuadratureGrid) -> Result<(ComplexMatrix, TailReport)> {
    integrate_matrix_masked(f, grid, None)
}

#[derive(Default)]
struct Accumulator {
    shape: Option<(usize, usize)>,
    sums: Vec<(CompensatedSum, CompensatedSum)>,
    total_abs: CompensatedSum,
    faces: Vec<[f64; 2]>,
}

/// [`integrate_matrix`] with nodes outside `mask` given weight zero.
///
/// Nodes are evaluated in parallel in fixed-size chunks and summed in grid
/// order, so the result does not depend on the number of threads.
pub fn integrate_matrix_masked(
    f: &Integrand<'_>,
    grid: &QuadratureGrid,
    mask: Option<&(dyn Fn(&[f64]) -> bool + Sync)>,
) -> Result<(ComplexMatrix, TailReport)> {
    let d = grid.dims();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = grid.axes.iter().map(Axis::nodes).collect();
    let last: Vec<usize> = rules.iter().map(|(x, _)| x.len() - 1).collect();
    let mut acc = Accumulator {
        faces: vec![[0.0; 2]; d],
        ..Default::default()
    };
    let mut buffer: Vec<(Vec<f64>, f64, Vec<usize>)> = Vec::with_capacity(CHUNK);
    let flush = |buffer: &mut Vec<(Vec<f64>, f64, Vec<usize>)>, acc: &mut Accumulator| -> Result<()> {
        let values: Vec<Result<ComplexMatrix>> = buffer.par_iter().map(|(p, _, _)| f(p)).collect();
        for ((p, w, idx), v) in buffer.drain(..).zip(values) {
            let v = v?;
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(format!("integrand at node {p:?}")));
            }
            match acc.shape {
                None => {
                    acc.shape = Some(v.shape());
                    acc.sums = vec![Default::default(); v.len()];
                }
                Some(s) if s != v.shape() => {
                    return Err(Error::Dimension(format!("integrand changed shape from {s:?} to {:?}", v.shape())));
                }
                _ => {}
            }
            for (sum, z) in acc.sums.iter_mut().zip(v.iter()) {
                sum.0.add(w * z.re);
                sum.1.add(w * z.im);
            }
            let mag = v.norm();
            acc.total_abs.add(w.abs() * mag);
            for axis in 0..d {
                let side = if idx[axis] == 0 {
                    0
                } else if idx[axis] == last[axis] {
                    1
                } else {
                    continue;
                };
                acc.faces[axis][side] += (w / rules[axis].1[idx[axis]]).abs() * mag;
            }
        }
        Ok(())
    };
    grid.for_each_node(|p, w, idx| {
        if mask.is_some_and(|m| !m(p)) {
            return Ok(());
        }
        buffer.push((p.to_vec(), w, idx.to_vec()));
        if buffer.len() == CHUNK {
            flush(&mut buffer, &mut acc)?;
        }
        Ok(())
    })?;
    flush(&mut buffer, &mut acc)?;
    let Accumulator { shape, sums, total_abs, faces } = acc;
    let Some((rows, cols)) = shape else {
        return Err(Error::Domain("no quadrature node lies inside the integration region".into()));
    };
    let value = ComplexMatrix::from_iterator(rows, cols, sums.iter().map(|(re, im)| Complex64::new(re.value(), im.value())));
    let total = total_abs.value();
    let mut ratio = 0.0f64;
    if total > 0.0 {
        for (axis, a) in grid.axes.iter().enumerate() {
            let extent = a.extent(&rules[axis].0);
            for side in 0..2 {
                let truncating = if side == 0 { a.truncates.0 } else { a.truncates.1 };
                if truncating {
                    ratio = ratio.max(faces[axis][side] * extent / total);
                }
            }
        }
    }
    Ok((value, TailReport { boundary_mass_ratio: ratio }))
}

/// Scalar convenience wrapper around [`integrate_matrix`].
pub fn integrate_scalar(f: &(dyn Fn(&[f64]) -> Result<f64> + Sync), grid: &QuadratureGrid) -> Result<(f64, TailReport)> {
    let wrapped = |p: &[f64]| f(p).map(|v| ComplexMatrix::from_element(1, 1, Complex64::new(v, 0.0)));
    let (m, tail) = integrate_matrix(&wrapped, grid)?;
    Ok((m[(0, 0)].re, tail))
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub value: ComplexMatrix,
    pub achieved_rel: f64,
    pub doublings: usize,
    pub grid: QuadratureGrid,
    pub tail: TailReport,
}

/// Doubles every axis order until two successive estimates agree to
/// `target_rel` in Frobenius norm.
pub fn refine_until(
    f: &Integrand<'_>,
    grid: &QuadratureGrid,
    target_rel: f64,
    max_doublings: usize,
) -> Result<Refinement> {
    if !(target_rel > 0.0) {
        return Err(Error::Domain(format!("target_rel must be positive, got {target_rel}")));
    }
    let (mut prev, _) = integrate_matrix(f, grid)?;
    let mut current = grid.clone();
    let mut achieved = f64::INFINITY;
    for doublings in 1..=max_doublings {
        current = current.refined()?;
        let (next, tail) = integrate_matrix(f, &current)?;
        let scale = next.norm();
        let diff = (&next - &prev).norm();
        achieved = if scale > 0.0 { diff / scale } else { diff };
        if achieved <= target_rel {
            return Ok(Refinement {
                value: next,
                achieved_rel: achieved,
                doublings,
                grid: current,
                tail,
            });
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        doublings: max_doublings,
        achieved,
        target: target_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> ComplexMatrix {
        ComplexMatrix::from_element(1, 1, Complex64::new(v, 0.0))
    }

    #[test]
    fn legendre_small_orders() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hermite_small_orders() {
        let (x, w) = gauss_hermite(2);
        assert!((x[1] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((w[0] - PI.sqrt() / 2.0).abs() < 1e-14);
        let (_, w) = gauss_hermite(40);
        assert!((w.iter().sum::<f64>() - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn hermite_axis_integrates_shifted_gaussian() {
        let grid = QuadratureGrid::new(vec![Axis::gauss_hermite(20, 1.5, 0.5)]).unwrap();
        let (v, _) = integrate_scalar(&|p| Ok((-(p[0] - 1.5).powi(2) / 0.25).exp()), &grid).unwrap();
        assert!((v - 0.5 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn constant_on_unit_interval() {
        let c = ComplexMatrix::from_fn(2, 2, |j, k| Complex64::new((j + 2 * k) as f64, j as f64));
        let grid = QuadratureGrid::gauss_legendre(&[(0.0, 1.0)], 4).unwrap();
        let cc = c.clone();
        let (v, tail) = integrate_matrix(&|_| Ok(cc.clone()), &grid).unwrap();
        assert!((v - c).norm() < 1e-14);
        assert!(tail.warning());
    }

    #[test]
    fn gaussian_matrix_integral() {
        let grid = QuadratureGrid::gauss_legendre(&[(-8.0, 8.0)], 64).unwrap();
        let (v, tail) = integrate_matrix(&|p| Ok(ComplexMatrix::identity(2, 2) * Complex64::new((-p[0] * p[0]).exp(), 0.0)), &grid).unwrap();
        let sp = PI.sqrt();
        assert!((v[(0, 0)].re - sp).abs() < 1e-12);
        assert!((v[(1, 1)].re - sp).abs() < 1e-12);
        assert_eq!(v[(0, 1)].re, 0.0);
        assert!(!tail.warning());
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let grid = QuadratureGrid::new(vec![Axis::trapezoid(0.0, 2.0, 3)]).unwrap();
        let (v, _) = integrate_scalar(&|p| Ok(3.0 * p[0] + 1.0), &grid).unwrap();
        assert!((v - 8.0).abs() < 1e-14);
        assert_eq!(grid.refined().unwrap().axes()[0].rule, Rule::Trapezoid(5));
    }

    #[test]
    fn refine_polynomial_converges_immediately() {
        let grid = QuadratureGrid::gauss_legendre(&[(-1.0, 2.0)], 3).unwrap();
        let r = refine_until(&|p| Ok(scalar(p[0].powi(5) - p[0])), &grid, 1e-12, 4).unwrap();
        assert_eq!(r.doublings, 1);
    }

    #[test]
    fn refine_gaussian_hits_target() {
        let grid = QuadratureGrid::gauss_legendre(&[(-8.0, 8.0)], 8).unwrap();
        let r = refine_until(&|p| Ok(scalar((-p[0] * p[0]).exp())), &grid, 1e-10, 6).unwrap();
        assert!(r.achieved_rel <= 1e-10);
        assert!((r.value[(0, 0)].re - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn refine_edge_singularity_fails() {
        let grid = QuadratureGrid::gauss_legendre(&[(0.0, 1.0)], 4).unwrap();
        let r = refine_until(&|p| Ok(scalar(1.0 / p[0].sqrt())), &grid, 1e-10, 4);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn invalid_grids() {
        assert!(QuadratureGrid::gauss_legendre(&[(1.0, 0.0)], 4).is_err());
        assert!(QuadratureGrid::gauss_legendre(&[(0.0, 1.0)], 1).is_err());
        assert!(matches!(
            QuadratureGrid::with_cap(vec![Axis::gauss_legendre(0.0, 1.0, 100); 3], 1000),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn divergent_integrand_has_large_tail() {
        let grid = QuadratureGrid::gauss_legendre(&[(-8.0, 8.0)], 64).unwrap();
        let (_, tail) = integrate_scalar(&|p| Ok((p[0] * p[0]).exp()), &grid).unwrap();
        assert!(tail.boundary_mass_ratio > TAIL_ERROR);
        assert!(tail.ensure_below(TAIL_ERROR).is_err());
    }

    #[test]
    fn box_restriction_marks_inner_faces() {
        let grid = QuadratureGrid::gauss_legendre(&[(-8.0, 8.0)], 16).unwrap();
        let r = grid.restricted_to_box(&[(0.0, 1.0)]).unwrap();
        assert_eq!((r.axes()[0].lo, r.axes()[0].hi), (0.0, 1.0));
        assert_eq!(r.axes()[0].truncates, (false, false));
        let (v, tail) = integrate_scalar(&|_| Ok(2.0), &r).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert_eq!(tail.boundary_mass_ratio, 0.0);
        assert!(grid.restricted_to_box(&[(9.0, 10.0)]).is_err());
    }

    #[test]
    fn mask_drops_nodes() {
        let grid = QuadratureGrid::new(vec![Axis::trapezoid(-1.0, 1.0, 3)]).unwrap();
        let wrapped = |_: &[f64]| Ok(scalar(1.0));
        let (v, _) = integrate_matrix_masked(&wrapped, &grid, Some(&|p: &[f64]| p[0] >= 0.0)).unwrap();
        assert!((v[(0, 0)].re - 1.5).abs() < 1e-15);
    }
}
