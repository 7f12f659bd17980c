use anyhow::{bail, ensure, Context, Result};
use mlconcave::curvature::{
    griffiths_form, griffiths_verdict, nakano_form, nakano_matrix, nakano_verdict, theta, Mode, PositivityVerdict, SearchBudget,
    Witness,
};
use mlconcave::fd::FdScheme;
use mlconcave::paley_wiener::{metric_laplace_transform_with_tail, parseval_check, ParsevalGrids};
use mlconcave::prekopa::{marginalize, prekopa_verdict};
use mlconcave::quadrature::QuadratureGrid;
use mlconcave::{Error, TolerancePolicy};
use rayon::prelude::*;
use serde_json::json;

use crate::parse::{self, Quad, TestF};
use crate::report::{hermitian_rows, Body, CheckPoint, Extremes, GTildeRow, Outcome, PrekopaPoint, PwBody, Refinement, Report, VerdictJson};
use crate::source::resolve;
use crate::{CheckArgs, ModeSel, PrekopaArgs, PwArgs, WantSel};

fn tolerance(rel: Option<f64>) -> Result<TolerancePolicy> {
    let d = TolerancePolicy::default();
    Ok(TolerancePolicy::new(d.abs_eig, rel.unwrap_or(d.rel_eig), d.herm_warn)?)
}

fn witness_form(t: &mlconcave::curvature::CurvatureTensor, v: &PositivityVerdict) -> Result<Option<f64>> {
    Ok(match &v.witness {
        Some(Witness::Nakano(u)) => Some(nakano_form(t, u)?.re),
        Some(Witness::Griffiths { u, v }) => Some(griffiths_form(t, u, v)?),
        None => None,
    })
}

fn modes(mode: ModeSel, want: WantSel) -> Vec<Mode> {
    let wants = match want {
        WantSel::Concave => vec![mlconcave::curvature::Want::Concave],
        WantSel::Convex => vec![mlconcave::curvature::Want::Convex],
        WantSel::Both => vec![mlconcave::curvature::Want::Concave, mlconcave::curvature::Want::Convex],
    };
    let mut out = Vec::new();
    if matches!(mode, ModeSel::Nakano | ModeSel::Both) {
        out.extend(wants.iter().map(|&w| Mode::nakano(w)));
    }
    if matches!(mode, ModeSel::Griffiths | ModeSel::Both) {
        out.extend(wants.iter().map(|&w| Mode::griffiths(w)));
    }
    out
}

pub fn check(a: &CheckArgs) -> Result<Report> {
    let src = resolve(&a.source)?;
    let points = parse::grid(a.grid.as_deref().unwrap_or(""), &src.vars)?;
    let scheme = FdScheme::new(a.fd_step, true)?;
    let tol = tolerance(a.tol)?;
    let budget = SearchBudget {
        seed: a.seed,
        ..SearchBudget::default()
    };
    let modes = modes(a.mode, a.want);
    let results: Vec<(CheckPoint, Outcome)> = points
        .par_iter()
        .map(|x| {
            let run = || -> Result<(CheckPoint, Outcome)> {
                let t = theta(&src.metric, x, &scheme)?;
                let eig = nakano_matrix(&t).matrix.eig();
                let mut verdicts = Vec::new();
                let mut outcomes = Vec::new();
                for &m in &modes {
                    let v = match m {
                        Mode::NakanoConcave | Mode::NakanoConvex => nakano_verdict(&t, &tol, m.want()),
                        _ => griffiths_verdict(&t, &tol, m.want(), &budget)?,
                    };
                    outcomes.push(Outcome::of(v.holds));
                    verdicts.push(VerdictJson::new(&v, witness_form(&t, &v)?));
                }
                let p = CheckPoint {
                    point: x.clone(),
                    nakano_eigenvalues: Some(Extremes { min: eig.min(), max: eig.max() }),
                    verdicts,
                    error: None,
                };
                Ok((p, Outcome::combine(outcomes)))
            };
            run().unwrap_or_else(|e| {
                let p = CheckPoint {
                    point: x.clone(),
                    nakano_eigenvalues: None,
                    verdicts: Vec::new(),
                    error: Some(format!("{e:#}")),
                };
                (p, Outcome::Error)
            })
        })
        .collect();
    let outcome = Outcome::combine(results.iter().map(|r| r.1));
    let settings = json!({
        "grid": a.grid,
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "want": format!("{:?}", a.want).to_lowercase(),
        "fd_step": a.fd_step,
        "richardson": true,
        "abs_eig": tol.abs_eig,
        "rel_eig": tol.rel_eig,
        "seed": a.seed,
        "search_starts": budget.starts,
        "search_alternations": budget.alternations,
    });
    let points = results.into_iter().map(|r| r.0).collect();
    Ok(Report::new("check", Some(src.info), settings, Body::Check { points }, outcome))
}

pub fn prekopa(a: &PrekopaArgs) -> Result<Report> {
    let src = resolve(&a.source)?;
    let k = match &a.integrate {
        Some(list) => {
            let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            ensure!(!names.is_empty(), "--integrate needs at least one variable");
            for (i, n) in names.iter().enumerate() {
                ensure!(
                    src.vars.get(i).map(String::as_str) == Some(*n),
                    "--integrate must list the leading variables in order ({}), got `{list}`",
                    src.vars.join(", ")
                );
            }
            if let Some(declared) = src.integrated {
                ensure!(declared == names.len(), "the spec integrates {declared} variable(s) but --integrate lists {}", names.len());
            }
            names.len()
        }
        None => src.integrated.context("the source has no y/t split; pass --integrate")?,
    };
    ensure!(k < src.vars.len(), "integrating every variable leaves nothing to test");
    let (y_vars, t_vars) = src.vars.split_at(k);
    let quad = parse::quad(a.quad.as_deref().unwrap_or("gauss-legendre:64"))?;
    let bounds = parse::domain(a.domain.as_deref(), y_vars)?;
    let grid = QuadratureGrid::new(bounds.iter().map(|&(lo, hi)| quad.axis(lo, hi)).collect())?;
    let region = a.region.as_deref().map(|r| parse::region(r, k)).transpose()?;
    if region.is_some() && matches!(quad, Quad::GaussHermite(_)) {
        bail!("--region needs a bounded rule (gauss-legendre or trapezoid)");
    }
    let m = marginalize(&src.metric, region.clone(), &grid)?;
    let ts = parse::grid(a.tgrid.as_deref().unwrap_or(""), t_vars)?;
    let scheme = FdScheme::default();
    let tol = TolerancePolicy::default();
    let verdicts = prekopa_verdict(&m, &ts, &scheme, &tol);
    let metric = m.as_metric();
    let mut outcomes = Vec::new();
    let points: Vec<PrekopaPoint> = ts
        .iter()
        .zip(verdicts)
        .map(|(t, v)| {
            let val = m.value_with_tail(t);
            let mut p = PrekopaPoint {
                t: t.clone(),
                value: None,
                tail: None,
                resolution: None,
                verdict: None,
                error: None,
            };
            if let Ok((h, tail)) = &val {
                p.value = Some(hermitian_rows(h));
                p.tail = Some((*tail).into());
                p.resolution = m.resolution(t).ok();
            }
            let first_error = val.err().or_else(|| v.as_ref().err().cloned());
            match (first_error, v) {
                (Some(e), _) => {
                    p.error = Some(describe(&e));
                    outcomes.push(Outcome::Error);
                }
                (None, Ok(v)) => {
                    let form = theta(&metric, t, &scheme).ok().and_then(|th| witness_form(&th, &v).ok().flatten());
                    outcomes.push(Outcome::of(v.holds));
                    p.verdict = Some(VerdictJson::new(&v, form));
                }
                (None, Err(_)) => unreachable!("error already taken"),
            }
            p
        })
        .collect();
    let settings = json!({
        "integrate": y_vars,
        "base": t_vars,
        "quad": a.quad.clone().unwrap_or_else(|| "gauss-legendre:64".into()),
        "domain": bounds,
        "region": a.region,
        "tgrid": a.tgrid,
        "quad_target": m.quad_target(),
    });
    Ok(Report::new("prekopa", Some(src.info), settings, Body::Prekopa { points }, Outcome::combine(outcomes)))
}

fn describe(e: &Error) -> String {
    match e {
        Error::Truncation { .. } => format!("{e} (pass a wider --domain, or check that the integrand decays)"),
        Error::NoConvergence { .. } => format!("{e} (raise the --quad order)"),
        other => other.to_string(),
    }
}

pub fn pw(a: &PwArgs) -> Result<Report> {
    let src = resolve(&a.source)?;
    let n = src.metric.dim();
    ensure!(n <= 2, "unsupported dimension: transform checks support at most 2 variables, got {n}");
    let test_f = a.test_f.as_deref().map(parse::test_f).transpose()?;
    let f = src.test_function(test_f);
    let base_order = a.order.unwrap_or(if n == 1 { 80 } else { 72 });
    let mut refinements = Vec::new();
    let mut grids = ParsevalGrids::gaussian(n, base_order)?;
    for step in 0..=a.refine {
        if step > 0 {
            grids = grids.finer(4)?;
        }
        let order = base_order + 4 * step;
        let r = parseval_check(&f, &src.metric, &grids).with_context(|| format!("transform check at order {order}"))?;
        refinements.push(Refinement {
            order,
            lhs: r.lhs,
            rhs: r.rhs,
            rel_err: r.rel_err,
        });
    }
    let monotone = refinements.windows(2).all(|w| w[1].rel_err <= w[0].rel_err);
    let xi_vars: Vec<String> = (1..=n).map(|i| format!("xi{i}")).collect();
    let xis = parse::grid(a.xi_grid.as_deref().unwrap_or("xi1=-2:2:5"), &xi_vars)?;
    let g_tilde = xis
        .iter()
        .map(|xi| {
            let (h, tail) = metric_laplace_transform_with_tail(&src.metric, xi, &grids.laplace_y)?;
            Ok(GTildeRow {
                xi: xi.clone(),
                value: hermitian_rows(&h),
                tail: tail.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = refinements.last().expect("at least one run");
    let outcome = if last.rel_err <= a.threshold { Outcome::Certified } else { Outcome::Violation };
    let exact = match (&src.builtin, test_f) {
        (Some(b), None) => Some(b.exact),
        _ => None,
    };
    let settings = json!({
        "order": base_order,
        "refine": a.refine,
        "test_f": match test_f {
            None if src.builtin.is_some() => "builtin".to_string(),
            None | Some(TestF::Gauss) => "gauss".to_string(),
            Some(TestF::Hermite(k)) => format!("hermite:{k}"),
        },
        "xi_grid": a.xi_grid,
        "threshold": a.threshold,
    });
    let body = PwBody {
        lhs: last.lhs,
        rhs: last.rhs,
        rel_err: last.rel_err,
        threshold: a.threshold,
        exact,
        monotone,
        refinements,
        g_tilde,
    };
    Ok(Report::new("pw", Some(src.info), settings, Body::Pw(body), outcome))
}
