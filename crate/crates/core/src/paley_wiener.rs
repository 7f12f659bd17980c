//! The weighted vector-valued Paley–Wiener pair.
//!
//! For a metric `g(y)` on `R^n` put `g~(xi) = (2 pi)^n int e^{2 xi.y} g(y) dy`.
//! A function `f: R^n -> C^r` extends to `F(x + iy) = int f(xi) e^{-i xi.z} dxi`,
//! and
//!
//! ```text
//! int int |F(x + iy)|^2_{g(y)} dx dy = int |f(xi)|^2_{g~(xi)} dxi.
//! ```
//!
//! Every integral here is a tensor-product quadrature over a truncated box.
//! The `z` integral has dimension `2n`, so `n` is capped at 2.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::metric::MetricFunction;
use rayon::prelude::*;

use crate::quadrature::{integrate_matrix, Axis, CompensatedSum, QuadratureGrid, Rule, TailReport, TAIL_ERROR, TAIL_WARN};

pub const MAX_DIM: usize = 2;
pub const DEFAULT_ORDER: usize = 80;

type VectorFn = dyn Fn(&[f64]) -> Result<ComplexVector> + Send + Sync;
type HoloFn = dyn Fn(&[f64], &[f64]) -> Result<ComplexVector> + Send + Sync;

/// `f: R^n -> C^r`.
#[derive(Clone)]
pub struct SampledVectorFunction {
    dim: usize,
    rank: usize,
    eval: Arc<VectorFn>,
}

impl std::fmt::Debug for SampledVectorFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledVectorFunction").field("dim", &self.dim).field("rank", &self.rank).finish()
    }
}

impl SampledVectorFunction {
    pub fn new(dim: usize, rank: usize, eval: impl Fn(&[f64]) -> Result<ComplexVector> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            rank,
            eval: Arc::new(eval),
        }
    }

    pub fn zero(dim: usize, rank: usize) -> Self {
        Self::new(dim, rank, move |_| Ok(ComplexVector::zeros(rank)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eval(&self, xi: &[f64]) -> Result<ComplexVector> {
        if xi.len() != self.dim {
            return Err(Error::Dimension(format!("function takes {} variables, got {}", self.dim, xi.len())));
        }
        let v = (self.eval)(xi)?;
        if v.len() != self.rank {
            return Err(Error::Dimension(format!("function returned {} components, expected {}", v.len(), self.rank)));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("function value at {xi:?}")));
        }
        Ok(v)
    }

    /// `c f`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let f = self.clone();
        Self::new(self.dim, self.rank, move |xi| Ok(f.eval(xi)? * c))
    }
}

/// `F(x + iy)` as a function of the pair `(x, y)`.
#[derive(Clone)]
pub struct HolomorphicSamples {
    dim: usize,
    rank: usize,
    eval: Arc<HoloFn>,
}

impl std::fmt::Debug for HolomorphicSamples {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HolomorphicSamples").field("dim", &self.dim).field("rank", &self.rank).finish()
    }
}

impl HolomorphicSamples {
    pub fn new(dim: usize, rank: usize, eval: impl Fn(&[f64], &[f64]) -> Result<ComplexVector> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            rank,
            eval: Arc::new(eval),
        }
    }

    /// The extension of `f`, each value computed on `xi_grid`.
    pub fn extension_of(f: &SampledVectorFunction, xi_grid: &QuadratureGrid) -> Self {
        let (f, grid) = (f.clone(), xi_grid.clone());
        Self::new(f.dim(), f.rank(), move |x, y| fourier_extension(&f, x, y, &grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<ComplexVector> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::Dimension(format!("holomorphic function of {} variables", self.dim)));
        }
        let v = (self.eval)(x, y)?;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("holomorphic function at x = {x:?}, y = {y:?}")));
        }
        Ok(v)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(format!("transforms support 1 <= n <= {MAX_DIM}, got n = {n}")));
    }
    Ok(())
}

fn checked_tail(tail: TailReport, what: &str) -> Result<()> {
    if tail.warning() {
        log::warn!("{what}: boundary mass ratio {:e} exceeds {TAIL_WARN:e}", tail.boundary_mass_ratio);
    }
    tail.ensure_below(TAIL_ERROR)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `(2 pi)^n int e^{2 xi.y} g(y) dy` together with its tail report.
pub fn metric_laplace_transform_with_tail(g: &MetricFunction, xi: &[f64], grid: &QuadratureGrid) -> Result<(HermitianMatrix, TailReport)> {
    let n = g.dim();
    check_dim(n)?;
    if xi.len() != n || grid.dims() != n {
        return Err(Error::Dimension(format!("metric in {n} variables, xi of length {}, grid of dimension {}", xi.len(), grid.dims())));
    }
    let f = |y: &[f64]| {
        let m = g.eval_raw(y)?;
        let s = dot(xi, y);
        Ok(if s == 0.0 { m } else { m * Complex64::new((2.0 * s).exp(), 0.0) })
    };
    let (m, tail) = integrate_matrix(&f, grid)?;
    checked_tail(tail, "metric transform")?;
    let h = HermitianMatrix::new(m * Complex64::new((2.0 * PI).powi(n as i32), 0.0))?;
    h.check_positive_definite(xi)?;
    Ok((h, tail))
}

pub fn metric_laplace_transform(g: &MetricFunction, xi: &[f64], grid: &QuadratureGrid) -> Result<HermitianMatrix> {
    metric_laplace_transform_with_tail(g, xi, grid).map(|v| v.0)
}

/// `F(x + iy) = int f(xi) e^{-i xi.x} e^{xi.y} dxi`.
pub fn fourier_extension(f: &SampledVectorFunction, x: &[f64], y: &[f64], grid: &QuadratureGrid) -> Result<ComplexVector> {
    let n = f.dim();
    check_dim(n)?;
    if x.len() != n || y.len() != n || grid.dims() != n {
        return Err(Error::Dimension(format!("function of {n} variables with x, y of lengths {}, {}", x.len(), y.len())));
    }
    let integrand = |xi: &[f64]| {
        let k = Complex64::from_polar(dot(xi, y).exp(), -dot(xi, x));
        Ok(ComplexMatrix::from_column_slice(f.rank(), 1, (f.eval(xi)? * k).as_slice()))
    };
    let (m, tail) = integrate_matrix(&integrand, grid)?;
    checked_tail(tail, "Fourier extension")?;
    Ok(ComplexVector::from_column_slice(m.as_slice()))
}

/// `int int F(x + iy)* g(y) F(x + iy) dx dy` over `grid_x` times `grid_y`.
pub fn a2_norm(big_f: &HolomorphicSamples, g: &MetricFunction, grid_x: &QuadratureGrid, grid_y: &QuadratureGrid) -> Result<f64> {
    let n = big_f.dim();
    check_dim(n)?;
    if g.dim() != n || grid_x.dims() != n || grid_y.dims() != n || g.rank() != big_f.rank() {
        return Err(Error::Dimension("a2_norm: function, metric and grids disagree on dimension or rank".into()));
    }
    let axes: Vec<Axis> = grid_x.axes().iter().chain(grid_y.axes()).copied().collect();
    let grid = QuadratureGrid::with_cap(axes, grid_x.node_cap().min(grid_y.node_cap()))?;
    let integrand = |p: &[f64]| {
        let (x, y) = p.split_at(n);
        let v = big_f.eval(x, y)?;
        let gv = g.eval_raw(y)? * &v;
        Ok(ComplexMatrix::from_element(1, 1, Complex64::new(v.dotc(&gv).re, 0.0)))
    };
    let (m, tail) = integrate_matrix(&integrand, &grid)?;
    checked_tail(tail, "A2 norm")?;
    Ok(m[(0, 0)].re)
}

/// One axis of the separable evaluation. A missing axis (for `n = 1`) is the
/// single node 0 with weight 1.
struct AxisTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    extent: f64,
    truncates: (bool, bool),
}

impl AxisTable {
    fn of(a: &Axis) -> Self {
        let (nodes, weights) = a.nodes();
        let extent = a.extent(&nodes);
        Self {
            nodes,
            weights,
            extent,
            truncates: a.truncates,
        }
    }

    fn point() -> Self {
        Self {
            nodes: vec![0.0],
            weights: vec![1.0],
            extent: 0.0,
            truncates: (false, false),
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn side(&self, i: usize) -> Option<usize> {
        if self.len() == 1 {
            None
        } else if i == 0 {
            Some(0)
        } else if i == self.len() - 1 {
            Some(1)
        } else {
            None
        }
    }
}

fn tables(grid: &QuadratureGrid) -> [AxisTable; 2] {
    let a = grid.axes();
    [AxisTable::of(&a[0]), a.get(1).map(AxisTable::of).unwrap_or_else(AxisTable::point)]
}

fn face_ratio(axes: &[&AxisTable], faces: &[[f64; 2]], total: f64) -> f64 {
    let mut ratio = 0.0f64;
    if total > 0.0 {
        for (a, f) in axes.iter().zip(faces) {
            for side in 0..2 {
                let truncating = if side == 0 { a.truncates.0 } else { a.truncates.1 };
                if truncating && a.len() > 1 {
                    ratio = ratio.max(f[side] * a.extent / total);
                }
            }
        }
    }
    ratio
}

#[derive(Default)]
struct RowSums {
    value: CompensatedSum,
    total: CompensatedSum,
    faces: [[f64; 2]; 4],
}

/// [`a2_norm`] of the extension of `f` computed on `xi_grid`, evaluated
/// through the factorization `e^{-i xi.z} = prod_d e^{xi_d (y_d - i x_d)}`.
///
/// `F` is tabulated one `(x_1, y_1)` row at a time, so the cost is
/// `O(N^{n+3})` instead of `O(N^{3n})` for `N` nodes per axis. The result and
/// the tail checks match [`a2_norm`] on
/// [`HolomorphicSamples::extension_of`] up to roundoff.
pub fn a2_norm_of_extension(f: &SampledVectorFunction, g: &MetricFunction, xi_grid: &QuadratureGrid, grid_x: &QuadratureGrid, grid_y: &QuadratureGrid) -> Result<f64> {
    let (n, r) = (f.dim(), f.rank());
    check_dim(n)?;
    if g.dim() != n || g.rank() != r || [xi_grid, grid_x, grid_y].iter().any(|q| q.dims() != n) {
        return Err(Error::Dimension("a2_norm_of_extension: function, metric and grids disagree on dimension or rank".into()));
    }
    let [k1, k2] = tables(xi_grid);
    let [x1, x2] = tables(grid_x);
    let [y1, y2] = tables(grid_y);
    let point = |a: f64, b: f64| if n == 1 { vec![a] } else { vec![a, b] };

    let mut fv = Vec::with_capacity(k1.len() * k2.len());
    for &a in &k1.nodes {
        for &b in &k2.nodes {
            fv.push(f.eval(&point(a, b))?);
        }
    }
    let fnorm: Vec<f64> = fv.iter().map(|v| v.norm()).collect();
    let fat = |a: usize, b: usize| &fv[a * k2.len() + b];

    // Tail of the xi integral depends on y only.
    let mut gy = Vec::with_capacity(y1.len() * y2.len());
    for &p in &y1.nodes {
        for &q in &y2.nodes {
            let y = point(p, q);
            let mut faces = [[0.0; 2]; 2];
            let mut total = CompensatedSum::default();
            for (a, (&s, &wa)) in k1.nodes.iter().zip(&k1.weights).enumerate() {
                for (b, (&t, &wb)) in k2.nodes.iter().zip(&k2.weights).enumerate() {
                    let mag = fnorm[a * k2.len() + b] * (s * p + t * q).exp();
                    total.add((wa * wb).abs() * mag);
                    if let Some(side) = k1.side(a) {
                        faces[0][side] += wb.abs() * mag;
                    }
                    if let Some(side) = k2.side(b) {
                        faces[1][side] += wa.abs() * mag;
                    }
                }
            }
            checked_tail(
                TailReport {
                    boundary_mass_ratio: face_ratio(&[&k1, &k2], &faces, total.value()),
                },
                "Fourier extension",
            )?;
            gy.push(g.eval_raw(&y)?);
        }
    }

    let kernel = |t: &AxisTable, x: f64, y: f64| -> Vec<Complex64> {
        t.nodes.iter().zip(&t.weights).map(|(&s, &w)| Complex64::from_polar(w * (s * y).exp(), -s * x)).collect()
    };
    let k2_rows: Vec<Vec<Complex64>> = x2.nodes.iter().flat_map(|&x| y2.nodes.iter().map(move |&y| (x, y))).map(|(x, y)| kernel(&k2, x, y)).collect();
    let rows: Vec<(usize, usize)> = (0..x1.len()).flat_map(|i| (0..y1.len()).map(move |j| (i, j))).collect();
    let partial: Vec<Result<RowSums>> = rows
        .par_iter()
        .map(|&(i1, j1)| {
            let k1_row = kernel(&k1, x1.nodes[i1], y1.nodes[j1]);
            // big_g[b * r + c] = sum_a k1_row[a] f(a, b)[c]
            let mut big_g = vec![Complex64::new(0.0, 0.0); k2.len() * r];
            for (b, chunk) in big_g.chunks_mut(r).enumerate() {
                for (a, kc) in k1_row.iter().enumerate() {
                    for (dst, src) in chunk.iter_mut().zip(fat(a, b).iter()) {
                        *dst += kc * src;
                    }
                }
            }
            let mut v = vec![Complex64::new(0.0, 0.0); r];
            let mut sums = RowSums::default();
            for i2 in 0..x2.len() {
                for j2 in 0..y2.len() {
                    let k2_row = &k2_rows[i2 * y2.len() + j2];
                    v.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    for (kc, gb) in k2_row.iter().zip(big_g.chunks(r)) {
                        for (dst, src) in v.iter_mut().zip(gb) {
                            *dst += kc * src;
                        }
                    }
                    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(Error::NonFinite(format!("extension at x = {:?}, y = {:?}", point(x1.nodes[i1], x2.nodes[i2]), point(y1.nodes[j1], y2.nodes[j2]))));
                    }
                    let gm = &gy[j1 * y2.len() + j2];
                    let mut val = 0.0;
                    for p in 0..r {
                        let mut row = Complex64::new(0.0, 0.0);
                        for q in 0..r {
                            row += gm[(p, q)] * v[q];
                        }
                        val += (v[p].conj() * row).re;
                    }
                    let ws = [x1.weights[i1], y1.weights[j1], x2.weights[i2], y2.weights[j2]];
                    let w: f64 = ws.iter().product();
                    sums.value.add(w * val);
                    let mag = val.abs();
                    sums.total.add(w.abs() * mag);
                    for (axis, (t, idx)) in [(&x1, i1), (&y1, j1), (&x2, i2), (&y2, j2)].iter().enumerate() {
                        if let Some(side) = t.side(*idx) {
                            sums.faces[axis][side] += (w / ws[axis]).abs() * mag;
                        }
                    }
                }
            }
            Ok(sums)
        })
        .collect();
    let (mut value, mut total, mut faces) = (CompensatedSum::default(), CompensatedSum::default(), [[0.0; 2]; 4]);
    for p in partial {
        let p = p?;
        value.add(p.value.value());
        total.add(p.total.value());
        for (acc, f) in faces.iter_mut().zip(p.faces) {
            acc[0] += f[0];
            acc[1] += f[1];
        }
    }
    let ratio = face_ratio(&[&x1, &y1, &x2, &y2], &faces, total.value());
    checked_tail(TailReport { boundary_mass_ratio: ratio }, "A2 norm")?;
    Ok(value.value())
}

/// `int f(xi)* g~(xi) f(xi) dxi`.
pub fn l2_norm(f: &SampledVectorFunction, g_tilde: &(dyn Fn(&[f64]) -> Result<HermitianMatrix> + Sync), grid: &QuadratureGrid) -> Result<f64> {
    check_dim(f.dim())?;
    if grid.dims() != f.dim() {
        return Err(Error::Dimension(format!("grid of dimension {} for a function of {} variables", grid.dims(), f.dim())));
    }
    let integrand = |xi: &[f64]| {
        let v = f.eval(xi)?;
        let w = g_tilde(xi)?;
        if w.dim() != v.len() {
            return Err(Error::Dimension(format!("weight of rank {} for {} components", w.dim(), v.len())));
        }
        Ok(ComplexMatrix::from_element(1, 1, Complex64::new(w.quadratic_form(&v), 0.0)))
    };
    let (m, tail) = integrate_matrix(&integrand, grid)?;
    checked_tail(tail, "L2 norm")?;
    Ok(m[(0, 0)].re)
}

/// Grids for the four integrals of a Parseval check.
#[derive(Debug, Clone)]
pub struct ParsevalGrids {
    /// Frequencies for computing `F`. Must be wide enough for `f(xi) e^{xi.y}`
    /// at every `y` node.
    pub xi: QuadratureGrid,
    /// Frequencies for the `L2` side.
    pub l2_xi: QuadratureGrid,
    /// `y` grid for computing `g~(xi)`.
    pub laplace_y: QuadratureGrid,
    pub x: QuadratureGrid,
    pub y: QuadratureGrid,
}

impl ParsevalGrids {
    /// Gauss–Legendre grids for Gaussian-type data `f ~ e^{-|xi|^2}`,
    /// `g ~ e^{-|y|^2}`, all at the same order. Order 80 resolves the scalar
    /// Gaussian case to about 1e-10; below about 70 the frequency grid cannot
    /// follow the oscillation of `e^{-i xi.x}` and the tail check fails.
    pub fn gaussian(n: usize, order: usize) -> Result<Self> {
        check_dim(n)?;
        let cube = |half: f64| QuadratureGrid::new(vec![Axis::gauss_legendre(-half, half, order); n]);
        Ok(Self {
            xi: cube(11.0)?,
            l2_xi: cube(8.0)?,
            laplace_y: cube(16.0)?,
            x: cube(8.0)?,
            y: cube(8.0)?,
        })
    }

    /// Every axis order increased by `extra`.
    pub fn finer(&self, extra: usize) -> Result<Self> {
        let bump = |g: &QuadratureGrid| {
            let axes = g
                .axes()
                .iter()
                .map(|a| {
                    let rule = match a.rule {
                        Rule::GaussLegendre(k) => Rule::GaussLegendre(k + extra),
                        Rule::Trapezoid(k) => Rule::Trapezoid(k + extra),
                        Rule::GaussHermite { order, center, scale } => Rule::GaussHermite {
                            order: order + extra,
                            center,
                            scale,
                        },
                    };
                    Axis { rule, ..*a }
                })
                .collect();
            QuadratureGrid::with_cap(axes, g.node_cap())
        };
        Ok(Self {
            xi: bump(&self.xi)?,
            l2_xi: bump(&self.l2_xi)?,
            laplace_y: bump(&self.laplace_y)?,
            x: bump(&self.x)?,
            y: bump(&self.y)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalResult {
    /// `A2` norm of the extension.
    pub lhs: f64,
    /// Weighted `L2` norm of `f`.
    pub rhs: f64,
    pub rel_err: f64,
}

pub fn parseval_check(f: &SampledVectorFunction, g: &MetricFunction, grids: &ParsevalGrids) -> Result<ParsevalResult> {
    if f.dim() != g.dim() || f.rank() != g.rank() {
        return Err(Error::Dimension("parseval_check: f and g disagree on dimension or rank".into()));
    }
    let lhs = a2_norm_of_extension(f, g, &grids.xi, &grids.x, &grids.y)?;
    let g_tilde = |xi: &[f64]| metric_laplace_transform(g, xi, &grids.laplace_y);
    let rhs = l2_norm(f, &g_tilde, &grids.l2_xi)?;
    let scale = lhs.abs().max(rhs.abs());
    let rel_err = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(ParsevalResult { lhs, rhs, rel_err })
}
