use mlconcave::constructions::{inverse_metric, roots_of_unity_average, roots_of_unity_closed_form, schur_mixed_form};
use mlconcave::gallery::random_metric;
use mlconcave::linalg::{classify_definiteness, expm, gram_matrix, schur_product};
use mlconcave::quadrature::{integrate_matrix, integrate_scalar, QuadratureGrid};
use mlconcave::{ComplexMatrix, ComplexVector, HermitianMatrix, TolerancePolicy};
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian(r: usize, v: &[f64]) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(r, r, |i, j| Complex64::new(v[2 * (i * r + j)], v[2 * (i * r + j) + 1]));
    HermitianMatrix::new(m).unwrap()
}

fn psd(r: usize, v: &[f64]) -> HermitianMatrix {
    let a = ComplexMatrix::from_fn(r, r, |i, j| Complex64::new(v[2 * (i * r + j)], v[2 * (i * r + j) + 1]));
    HermitianMatrix::new(&a * a.adjoint()).unwrap()
}

fn cvec(v: &[f64]) -> ComplexVector {
    ComplexVector::from_fn(v.len() / 2, |i, _| Complex64::new(v[2 * i], v[2 * i + 1]))
}

fn entries(max_r: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_r).prop_flat_map(|r| (Just(r), prop::collection::vec(-2.0..2.0f64, 2 * r * r)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eigen_reconstruction((r, v) in entries(6)) {
        let h = hermitian(r, &v);
        let e = h.eig();
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(r, e.values.iter().map(|&x| Complex64::new(x, 0.0))));
        let rec = &e.vectors * d * e.vectors.adjoint();
        prop_assert!((rec - h.as_matrix()).norm() <= 1e-12 * r as f64 * h.frobenius_norm().max(1e-300));
    }

    #[test]
    fn definiteness_is_unitarily_invariant((r, v) in entries(5), w in prop::collection::vec(-2.0..2.0f64, 50)) {
        let h = hermitian(r, &v);
        let gen = hermitian(r, &w[..2 * r * r]).into_matrix() * Complex64::new(0.0, 1.0);
        let u = expm(&gen).unwrap();
        let conj = HermitianMatrix::new(&u * h.as_matrix() * u.adjoint()).unwrap();
        let tol = TolerancePolicy::default();
        let (a, b) = (classify_definiteness(&h, &tol), classify_definiteness(&conj, &tol));
        prop_assert!((a.min_eig - b.min_eig).abs() <= 1e-10 && (a.max_eig - b.max_eig).abs() <= 1e-10);
        let near_edge = [a.min_eig, a.max_eig].iter().any(|&e| (e.abs() - a.threshold).abs() < 1e-9);
        prop_assert!(near_edge || a.classification == b.classification);
    }

    #[test]
    fn schur_product_preserves_psd((r, v) in entries(5), w in prop::collection::vec(-2.0..2.0f64, 50)) {
        let (a, b) = (psd(r, &v), psd(r, &w[..2 * r * r]));
        let s = schur_product(&a, &b).unwrap();
        let scale = a.frobenius_norm() * b.frobenius_norm();
        prop_assert!(s.eig().min() >= -1e-10 * scale.max(1.0));
    }

    #[test]
    fn gram_matrix_is_psd((r, v) in entries(4), n in 1usize..5, w in prop::collection::vec(-2.0..2.0f64, 40)) {
        let g = HermitianMatrix::new(psd(r, &v).into_matrix() + ComplexMatrix::identity(r, r) * Complex64::new(0.1, 0.0)).unwrap();
        let vectors: Vec<_> = (0..n).map(|j| cvec(&w[2 * r * j..2 * r * (j + 1)])).collect();
        let gram = gram_matrix(&vectors, &g).unwrap();
        prop_assert!(gram.eig().min() >= -1e-10 * gram.frobenius_norm().max(1.0));
    }

    #[test]
    fn schur_mixed_form_nonpositive(
        (n, h) in entries(3),
        (r, gv) in entries(3),
        w in prop::collection::vec(-2.0..2.0f64, 18),
    ) {
        let hess = psd(n, &h);
        let g = HermitianMatrix::new(psd(r, &gv).into_matrix() + ComplexMatrix::identity(r, r)).unwrap();
        let vectors: Vec<_> = (0..n).map(|j| cvec(&w[2 * r * j..2 * r * (j + 1)])).collect();
        let value = schur_mixed_form(&hess, &vectors, &g).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                let pair = (vectors[k].adjoint() * g.as_matrix() * &vectors[j])[(0, 0)];
                direct -= hess.get(j, k) * pair;
            }
        }
        prop_assert!(value <= 1e-10);
        prop_assert!((value - direct.re).abs() <= 1e-10 * (1.0 + direct.norm()));
    }

    #[test]
    fn gauss_legendre_exact_for_low_degree(
        k in 2usize..=12,
        coeffs in prop::collection::vec(-1.0..1.0f64, 24),
        a in -1.0..0.0f64,
        len in 0.1..2.0f64,
    ) {
        let b = a + len;
        let c = &coeffs[..2 * k];
        let grid = QuadratureGrid::gauss_legendre(&[(a, b)], k).unwrap();
        let poly = |p: &[f64]| Ok(c.iter().rev().fold(0.0, |acc, &ci| acc * p[0] + ci));
        let (got, _) = integrate_scalar(&poly, &grid).unwrap();
        let anti = |x: f64| c.iter().enumerate().map(|(i, ci)| ci * x.powi(i as i32 + 1) / (i + 1) as f64).sum::<f64>();
        let m = a.abs().max(b.abs());
        let scale = len * c.iter().enumerate().map(|(i, ci)| ci.abs() * m.powi(i as i32)).sum::<f64>();
        prop_assert!((got - (anti(b) - anti(a))).abs() <= 1e-13 * scale.max(1.0), "k={} err={}", k, got - anti(b) + anti(a));
    }

    #[test]
    fn integration_is_linear_and_hermitian(
        s in -3.0..3.0f64,
        t in -3.0..3.0f64,
        (r, v) in entries(3),
        w in prop::collection::vec(-2.0..2.0f64, 18),
    ) {
        let (hf, hg) = (hermitian(r, &v), hermitian(r, &w[..2 * r * r]));
        let f = move |p: &[f64]| Ok(hf.as_matrix() * Complex64::new((-p[0] * p[0]).exp() * (1.0 + p[1]).cos(), 0.0));
        let g = move |p: &[f64]| Ok(hg.as_matrix() * Complex64::new((p[0] * p[1]).sin() + p[1] * p[1], 0.0));
        let fg = |p: &[f64]| Ok(f(p)? * Complex64::new(s, 0.0) + g(p)? * Complex64::new(t, 0.0));
        let grid = QuadratureGrid::gauss_legendre(&[(-2.0, 2.0), (-1.0, 1.5)], 12).unwrap();
        let (a, _) = integrate_matrix(&f, &grid).unwrap();
        let (b, _) = integrate_matrix(&g, &grid).unwrap();
        let (c, _) = integrate_matrix(&fg, &grid).unwrap();
        let expected = &a * Complex64::new(s, 0.0) + &b * Complex64::new(t, 0.0);
        prop_assert!((&c - &expected).norm() <= 1e-13 * (1.0 + expected.norm()));
        prop_assert!((&c - c.adjoint()).norm() <= 1e-14 * (1.0 + c.norm()));
    }

    #[test]
    fn roots_of_unity_identity(
        q in 3u32..=5,
        r in 1usize..=3,
        v in prop::collection::vec(-1.0..1.0f64, 12),
        alpha in 0usize..3,
        beta in 0usize..3,
    ) {
        let (alpha, beta) = (alpha % r, beta % r);
        let x = cvec(&v[..2 * r]);
        let y = cvec(&v[6..6 + 2 * r]);
        let avg = roots_of_unity_average(q, &x, &y, alpha, beta).unwrap();
        prop_assert!((avg - roots_of_unity_closed_form(&x, &y, alpha, beta)).norm() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_metrics_are_pd_and_double_inverse_is_identity(
        seed in any::<u64>(),
        n in 1usize..=3,
        r in 1usize..=3,
        degree in 0usize..=4,
        x in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        let g = random_metric(seed, n, r, degree).unwrap();
        let x = &x[..n];
        let v = g.eval(x).unwrap();
        prop_assert!(v.eig().min() > 0.0);
        prop_assert_eq!(&v, &random_metric(seed, n, r, degree).unwrap().eval(x).unwrap());
        let back = inverse_metric(&inverse_metric(&g)).eval(x).unwrap();
        prop_assert!((back.as_matrix() - v.as_matrix()).norm() <= 1e-12 * v.frobenius_norm().max(1.0));
    }
}
