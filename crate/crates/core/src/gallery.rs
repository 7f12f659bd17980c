//! Built-in metrics with known curvature, and seeded random metrics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constructions::inverse_metric;
use crate::curvature::{Holds, Mode};
use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::metric::MetricFunction;
use crate::paley_wiener::SampledVectorFunction;
use crate::spec::{Dims, MetricSpec};

/// A verdict the entry is known to produce at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub point: Vec<f64>,
    pub mode: Mode,
    pub holds: Holds,
}

#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Number of leading coordinates meant to be integrated out.
    pub integrated: usize,
    pub metric: MetricFunction,
    /// Real-valued spec form, when one exists.
    pub spec: Option<MetricSpec>,
    pub expectations: Vec<Expectation>,
}

fn expect(points: &[&[f64]], mode: Mode, holds: Holds) -> Vec<Expectation> {
    points
        .iter()
        .map(|p| Expectation {
            point: p.to_vec(),
            mode,
            holds,
        })
        .collect()
}

fn spec(name: &str, description: &str, dims: Dims, rank: usize, entries: &[(usize, usize, &str)]) -> MetricSpec {
    MetricSpec::new(name, description, dims, rank, entries).expect("built-in spec parses")
}

fn diag_gauss() -> GalleryEntry {
    let s = spec(
        "diag-gauss",
        "diag(exp(-x^2), exp(-2x^2)); Theta = diag(-2, -4)",
        Dims::Plain { x: 1 },
        2,
        &[(1, 1, "exp(-x1^2)"), (2, 2, "exp(-2*x1^2)")],
    );
    let pts: &[&[f64]] = &[&[-1.0], &[0.0], &[0.5]];
    let mut expectations = expect(pts, Mode::NakanoConcave, Holds::Certified);
    expectations.extend(expect(pts, Mode::GriffithsConcave, Holds::Certified));
    expectations.extend(expect(pts, Mode::NakanoConvex, Holds::ViolationFound));
    GalleryEntry {
        name: "diag-gauss",
        description: "diagonal metric with log-concave entries; Nakano concave everywhere",
        integrated: 0,
        metric: s.to_metric(),
        spec: Some(s),
        expectations,
    }
}

fn scalar_times_c() -> GalleryEntry {
    let e = "exp(-(x1^2 + x2^2))";
    let s = spec(
        "scalar-times-C",
        "exp(-|x|^2) [[2, 1], [1, 1]]; Theta_jk = -2 delta_jk I",
        Dims::Plain { x: 2 },
        2,
        &[(1, 1, &format!("2*{e}")), (2, 1, e), (2, 2, e)],
    );
    let pts: &[&[f64]] = &[&[0.0, 0.0], &[0.5, -0.3], &[-1.0, 1.0]];
    let mut expectations = expect(pts, Mode::NakanoConcave, Holds::Certified);
    expectations.extend(expect(pts, Mode::GriffithsConcave, Holds::Certified));
    GalleryEntry {
        name: "scalar-times-C",
        description: "log-concave scalar times a constant matrix; Nakano concave everywhere",
        integrated: 0,
        metric: s.to_metric(),
        spec: Some(s),
        expectations,
    }
}

fn corollary() -> GalleryEntry {
    let w = "exp(-(y1^2 + y1*t1 + t1^2)) * exp(-y1^2)";
    let s = spec(
        "corollary",
        "exp(-(y^2 + yt + t^2)) exp(yB - y^2 I) with B = [[0, 1], [1, 0]]",
        Dims::Split { y: 1, t: 1 },
        2,
        &[(1, 1, &format!("{w} * cosh(y1)")), (2, 1, &format!("{w} * sinh(y1)")), (2, 2, &format!("{w} * cosh(y1)"))],
    );
    let b = ComplexMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| Complex64::new(v, 0.0)));
    let metric = MetricFunction::new("corollary", 2, 2, move |p| {
        let (y, t) = (p[0], p[1]);
        let m = HermitianMatrix::new(&b * Complex64::new(y, 0.0) - ComplexMatrix::identity(2, 2) * Complex64::new(y * y, 0.0))?;
        Ok(expm_hermitian(&m).into_matrix() * Complex64::new((-(y * y + y * t + t * t)).exp(), 0.0))
    });
    GalleryEntry {
        name: "corollary",
        description: "exp(-phi) A(y) with phi convex and A Theta^A = -2A; Nakano concave in (y, t)",
        integrated: 1,
        metric,
        spec: Some(s),
        expectations: expect(&[&[0.0, 0.0], &[1.0, -1.0], &[-0.5, 2.0]], Mode::NakanoConcave, Holds::Certified),
    }
}

fn example4_dual_spec() -> MetricSpec {
    spec(
        "example4-dual",
        "I + x1 E11 + x2 [[0, 1], [1, 0]] + x2^2/2 E11",
        Dims::Plain { x: 2 },
        2,
        &[(1, 1, "1 + x1 + x2^2/2"), (2, 1, "x2"), (2, 2, "1")],
    )
}

fn example4_dual() -> GalleryEntry {
    let s = example4_dual_spec();
    let o: &[&[f64]] = &[&[0.0, 0.0]];
    let mut expectations = expect(o, Mode::NakanoConcave, Holds::Certified);
    expectations.extend(expect(o, Mode::GriffithsConcave, Holds::Certified));
    GalleryEntry {
        name: "example4-dual",
        description: "dual of example4; Nakano matrix at the origin is -vv* with v = (1, 0, 0, 1)",
        integrated: 0,
        metric: s.to_metric(),
        spec: Some(s),
        expectations,
    }
}

fn example4() -> GalleryEntry {
    let d = "(1 + x1 - x2^2/2)";
    let s = spec(
        "example4",
        "pointwise inverse of example4-dual",
        Dims::Plain { x: 2 },
        2,
        &[(1, 1, &format!("1/{d}")), (2, 1, &format!("-x2/{d}")), (2, 2, &format!("(1 + x1 + x2^2/2)/{d}"))],
    );
    let o: &[&[f64]] = &[&[0.0, 0.0]];
    let mut expectations = expect(o, Mode::NakanoConcave, Holds::ViolationFound);
    expectations.extend(expect(o, Mode::NakanoConvex, Holds::ViolationFound));
    expectations.extend(expect(o, Mode::GriffithsConcave, Holds::ViolationFound));
    expectations.extend(expect(o, Mode::GriffithsConvex, Holds::NoViolationFound));
    GalleryEntry {
        name: "example4",
        description: "neither Nakano concave nor Nakano convex at the origin, Griffiths convex there",
        integrated: 0,
        metric: inverse_metric(&example4_dual_spec().to_metric()).renamed("example4"),
        spec: Some(s),
        expectations,
    }
}

fn random_smooth() -> GalleryEntry {
    GalleryEntry {
        name: "random-smooth",
        description: "exp of a seeded random Hermitian polynomial (seed 0, n = 2, r = 2, degree 2)",
        integrated: 0,
        metric: random_metric(0, 2, 2, 2).expect("valid parameters"),
        spec: None,
        expectations: Vec::new(),
    }
}

pub fn gallery_list() -> Vec<GalleryEntry> {
    vec![diag_gauss(), scalar_times_c(), corollary(), example4_dual(), example4(), random_smooth()]
}

pub fn gallery_entry(name: &str) -> Option<GalleryEntry> {
    gallery_list().into_iter().find(|e| e.name == name)
}

fn multi_indices(n: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                let used: usize = prefix.iter().sum();
                (0..=degree - used).map(move |d| {
                    let mut p = prefix.clone();
                    p.push(d);
                    p
                })
            })
            .collect();
    }
    out
}

/// `g(x) = exp(M(x))` with `M` a polynomial of total degree `<= degree`
/// whose coefficients are random complex Hermitian matrices. Coefficients of
/// degree `d` are damped by `1 / (2 d!)` to keep `g` moderate on `[-1, 1]^n`.
pub fn random_metric(seed: u64, n: usize, r: usize, degree: usize) -> Result<MetricFunction> {
    if degree > 4 {
        return Err(Error::Domain(format!("random metrics support degree <= 4, got {degree}")));
    }
    if n == 0 || r == 0 {
        return Err(Error::Dimension("random metrics need n >= 1 and r >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(Vec<usize>, ComplexMatrix)> = multi_indices(n, degree)
        .into_iter()
        .map(|alpha| {
            let d: usize = alpha.iter().sum();
            let damp = 0.5 / (1..=d).product::<usize>() as f64;
            let a = ComplexMatrix::from_fn(r, r, |_, _| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0));
            (alpha, (&a + a.adjoint()) * Complex64::new(damp / 2.0, 0.0))
        })
        .collect();
    Ok(MetricFunction::new(format!("random(seed={seed}, n={n}, r={r}, degree={degree})"), n, r, move |x| {
        let mut m = ComplexMatrix::zeros(r, r);
        for (alpha, c) in &terms {
            let mono: f64 = alpha.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product();
            m += c * Complex64::new(mono, 0.0);
        }
        Ok(expm_hermitian(&HermitianMatrix::new(m)?).into_matrix())
    }))
}

/// A metric in `y` and a test function for the transform identity.
#[derive(Debug, Clone)]
pub struct PwBuiltin {
    pub name: &'static str,
    pub metric: MetricFunction,
    pub f: SampledVectorFunction,
    /// Closed-form value of both sides.
    pub exact: f64,
}

pub fn pw_builtins() -> Vec<PwBuiltin> {
    use std::f64::consts::PI;
    let re = |v: f64| Complex64::new(v, 0.0);
    vec![
        PwBuiltin {
            name: "gauss-scalar",
            metric: MetricFunction::new("gauss-scalar", 1, 1, move |y| Ok(ComplexMatrix::from_element(1, 1, re((-y[0] * y[0]).exp())))),
            f: SampledVectorFunction::new(1, 1, move |xi| Ok(ComplexVector::from_element(1, re((-xi[0] * xi[0]).exp())))),
            exact: 2.0 * PI * PI,
        },
        PwBuiltin {
            name: "gauss-r2",
            metric: MetricFunction::new("gauss-r2", 1, 2, move |y| {
                let e = (-y[0] * y[0]).exp();
                Ok(ComplexMatrix::from_row_slice(2, 2, &[re(2.0 * e), re(e), re(e), re(e)]))
            }),
            f: SampledVectorFunction::new(1, 2, move |xi| {
                let e = (-xi[0] * xi[0]).exp();
                Ok(ComplexVector::from_row_slice(&[re(e), re(xi[0] * e)]))
            }),
            exact: 5.0 * PI * PI,
        },
    ]
}

pub fn pw_builtin(name: &str) -> Option<PwBuiltin> {
    pw_builtins().into_iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{theta, verdict_at, SearchBudget, SweepMode};
    use crate::fd::FdScheme;
    use crate::linalg::TolerancePolicy;

    #[test]
    fn has_required_entries() {
        let names: Vec<_> = gallery_list().iter().map(|e| e.name).collect();
        assert!(names.len() >= 6);
        for n in ["diag-gauss", "scalar-times-C", "corollary", "example4-dual", "example4", "random-smooth"] {
            assert!(names.contains(&n), "{n}");
        }
    }

    #[test]
    fn example4_dual_is_identity_at_origin() {
        let e = gallery_entry("example4-dual").unwrap();
        assert_eq!(e.metric.eval(&[0.0, 0.0]).unwrap().as_matrix(), &ComplexMatrix::identity(2, 2));
    }

    #[test]
    fn spec_forms_match_programmatic_metrics() {
        for e in gallery_list() {
            let Some(s) = &e.spec else { continue };
            let ms = s.to_metric();
            for p in [[0.0, 0.0], [0.3, -0.2], [-0.4, 0.5]] {
                let x = &p[..e.metric.dim()];
                let a = e.metric.eval(x).unwrap();
                let b = ms.eval(x).unwrap();
                assert!((a.as_matrix() - b.as_matrix()).norm() < 1e-12 * a.frobenius_norm(), "{}", e.name);
            }
            assert!(MetricSpec::from_toml(&s.to_toml()).is_ok());
        }
    }

    #[test]
    fn expectations_hold() {
        let (scheme, tol) = (FdScheme::default(), TolerancePolicy::default());
        for e in gallery_list() {
            for x in &e.expectations {
                let mode = match x.mode {
                    Mode::NakanoConcave => SweepMode::Nakano(crate::curvature::Want::Concave),
                    Mode::NakanoConvex => SweepMode::Nakano(crate::curvature::Want::Convex),
                    Mode::GriffithsConcave => SweepMode::Griffiths(crate::curvature::Want::Concave, SearchBudget::default()),
                    Mode::GriffithsConvex => SweepMode::Griffiths(crate::curvature::Want::Convex, SearchBudget::default()),
                };
                let v = verdict_at(&e.metric, &x.point, &scheme, &tol, &mode).unwrap();
                assert_eq!(v.holds, x.holds, "{} {:?} at {:?}", e.name, x.mode, x.point);
            }
        }
    }

    #[test]
    fn corollary_a_has_curvature_minus_two() {
        let a = MetricFunction::new("A", 1, 2, |y| {
            let e = gallery_entry("corollary").unwrap();
            e.metric.eval_raw(&[y[0], 0.0]).map(|m| m * Complex64::new((y[0] * y[0]).exp(), 0.0))
        });
        let t = theta(&a, &[0.4], &FdScheme::default()).unwrap();
        assert!((t.block(0, 0) + ComplexMatrix::identity(2, 2) * Complex64::new(2.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn random_metric_deterministic_and_positive() {
        let a = random_metric(7, 2, 3, 3).unwrap();
        let b = random_metric(7, 2, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..100 {
            let x = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
            let v = a.eval(&x).unwrap();
            assert!(v.eig().min() > 0.0);
            if i < 10 {
                assert_eq!(v, b.eval(&x).unwrap());
            }
        }
        assert_ne!(random_metric(8, 2, 3, 3).unwrap().eval(&[0.1, 0.2]).unwrap(), a.eval(&[0.1, 0.2]).unwrap());
        assert!(random_metric(0, 1, 1, 5).is_err());
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 4).len(), 35);
        assert_eq!(multi_indices(1, 0), vec![vec![0]]);
    }
}
