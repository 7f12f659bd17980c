//! Grid, region and quadrature flag syntax.

use anyhow::{anyhow, bail, ensure, Context, Result};
use mlconcave::prekopa::ConvexRegion;
use mlconcave::quadrature::Axis;

fn number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("{what}: `{s}` is not a number"))?;
    ensure!(v.is_finite(), "{what}: `{s}` is not finite");
    Ok(v)
}

fn count(s: &str, what: &str) -> Result<usize> {
    s.trim().parse().with_context(|| format!("{what}: `{s}` is not a non-negative integer"))
}

/// `var=lo:hi:count,...` (or `var=value`) into the tensor grid of points over
/// `vars`, last variable fastest. Unlisted variables stay at 0. An empty
/// string gives the origin.
pub fn grid(src: &str, vars: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut axes: Vec<Vec<f64>> = vec![vec![0.0]; vars.len()];
    let mut seen = vec![false; vars.len()];
    for part in src.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part.split_once('=').ok_or_else(|| anyhow!("grid: `{part}` is not of the form var=lo:hi:count"))?;
        let name = name.trim();
        let i = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| anyhow!("grid: unknown variable `{name}` (expected one of {})", vars.join(", ")))?;
        ensure!(!seen[i], "grid: variable `{name}` given twice");
        seen[i] = true;
        let fields: Vec<&str> = range.split(':').collect();
        axes[i] = match fields[..] {
            [v] => vec![number(v, "grid")?],
            [lo, hi, n] => {
                let (lo, hi, n) = (number(lo, "grid")?, number(hi, "grid")?, count(n, "grid")?);
                ensure!(n >= 1, "grid: `{part}` needs at least one point");
                ensure!(lo <= hi, "grid: `{part}` has lo > hi");
                ensure!(n > 1 || lo == hi, "grid: `{part}` has one point but lo != hi");
                (0..n).map(|k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
            }
            _ => bail!("grid: `{part}` is not of the form var=lo:hi:count"),
        };
    }
    let total: usize = axes.iter().map(Vec::len).product();
    ensure!(total <= 1_000_000, "grid: {total} points is more than the limit of 1000000");
    let mut points = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Rules accepted by `--quad`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quad {
    GaussLegendre(usize),
    Trapezoid(usize),
    GaussHermite(usize),
}

pub fn quad(src: &str) -> Result<Quad> {
    let (kind, k) = src.split_once(':').ok_or_else(|| anyhow!("quad: expected rule:order, got `{src}`"))?;
    let k = count(k, "quad")?;
    ensure!(k >= 2, "quad: order must be at least 2, got {k}");
    Ok(match kind.trim() {
        "gauss-legendre" => Quad::GaussLegendre(k),
        "trapezoid" => Quad::Trapezoid(k),
        "gauss-hermite" => Quad::GaussHermite(k),
        other => bail!("quad: unknown rule `{other}` (gauss-legendre, trapezoid or gauss-hermite)"),
    })
}

impl Quad {
    pub fn axis(self, lo: f64, hi: f64) -> Axis {
        match self {
            Quad::GaussLegendre(k) => Axis::gauss_legendre(lo, hi, k),
            Quad::Trapezoid(k) => Axis::trapezoid(lo, hi, k),
            Quad::GaussHermite(k) => Axis::gauss_hermite(k, 0.0, 1.0),
        }
    }
}

/// `--domain`: either `lo:hi` for every integrated variable or
/// `y1=lo:hi,y2=lo:hi`. Defaults to `[-8, 8]`.
pub fn domain(src: Option<&str>, vars: &[String]) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(-8.0, 8.0); vars.len()];
    let Some(src) = src else { return Ok(out) };
    let interval = |s: &str| -> Result<(f64, f64)> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("domain: expected lo:hi, got `{s}`"))?;
        let (lo, hi) = (number(lo, "domain")?, number(hi, "domain")?);
        ensure!(lo < hi, "domain: need lo < hi in `{s}`");
        Ok((lo, hi))
    };
    if !src.contains('=') {
        let iv = interval(src)?;
        return Ok(vec![iv; vars.len()]);
    }
    for part in src.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, range) = part.split_once('=').ok_or_else(|| anyhow!("domain: `{part}` is not of the form var=lo:hi"))?;
        let i = vars
            .iter()
            .position(|v| v == name.trim())
            .ok_or_else(|| anyhow!("domain: `{}` is not an integrated variable", name.trim()))?;
        out[i] = interval(range)?;
    }
    Ok(out)
}

/// `box:lo:hi[:lo:hi...]`, `ball:radius[:c1,c2,...]` or
/// `half:a1,a2,...:b[;a1,...:b]` over `dims` integrated variables.
pub fn region(src: &str, dims: usize) -> Result<ConvexRegion> {
    let (kind, rest) = src.split_once(':').ok_or_else(|| anyhow!("region: expected kind:parameters, got `{src}`"))?;
    let r = match kind.trim() {
        "box" => {
            let v: Vec<f64> = rest.split(':').map(|s| number(s, "region")).collect::<Result<_>>()?;
            ensure!(v.len().is_multiple_of(2) && !v.is_empty(), "region: box needs lo:hi pairs");
            let pairs: Vec<(f64, f64)> = v.chunks(2).map(|c| (c[0], c[1])).collect();
            match pairs.len() {
                1 => ConvexRegion::Box(vec![pairs[0]; dims]),
                n if n == dims => ConvexRegion::Box(pairs),
                n => bail!("region: box has {n} intervals for {dims} integrated variables"),
            }
        }
        "ball" => {
            let (radius, center) = match rest.split_once(':') {
                Some((r, c)) => (number(r, "region")?, c.split(',').map(|s| number(s, "region")).collect::<Result<Vec<_>>>()?),
                None => (number(rest, "region")?, vec![0.0; dims]),
            };
            ConvexRegion::Ball { center, radius }
        }
        "half" => {
            let planes = rest
                .split(';')
                .map(|h| {
                    let (a, b) = h.rsplit_once(':').ok_or_else(|| anyhow!("region: halfspace `{h}` is not a1,...:b"))?;
                    let a: Vec<f64> = a.split(',').map(|s| number(s, "region")).collect::<Result<_>>()?;
                    Ok((a, number(b, "region")?))
                })
                .collect::<Result<Vec<_>>>()?;
            ConvexRegion::Halfspaces(planes)
        }
        other => bail!("region: unknown kind `{other}` (box, ball or half)"),
    };
    r.validate(dims).map_err(|e| anyhow!("region: {e}"))?;
    Ok(r)
}

/// Test functions accepted by `--test-f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestF {
    /// Component `i` is `xi_1^i e^{-|xi|^2}`.
    Gauss,
    /// Component `i` is `H_{k+i}(xi_1) e^{-|xi|^2}`.
    Hermite(usize),
}

pub fn test_f(src: &str) -> Result<TestF> {
    match src.split_once(':') {
        None if src == "gauss" => Ok(TestF::Gauss),
        Some(("hermite", k)) => {
            let k = count(k, "test-f")?;
            ensure!(k <= 12, "test-f: hermite degree at most 12, got {k}");
            Ok(TestF::Hermite(k))
        }
        _ => bail!("test-f: expected gauss or hermite:k, got `{src}`"),
    }
}

/// Physicists' Hermite polynomial.
pub fn hermite(k: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if k == 0 {
        return a;
    }
    for m in 1..k {
        (a, b) = (b, 2.0 * x * b - 2.0 * m as f64 * a);
    }
    b
}
