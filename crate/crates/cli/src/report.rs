//! Report structures shared by the JSON and text outputs.

use std::fmt::Write as _;

use mlconcave::curvature::{Holds, Mode, PositivityVerdict, Witness};
use mlconcave::quadrature::TailReport;
use mlconcave::{ComplexMatrix, ComplexVector, HermitianMatrix};
use serde::Serialize;

use crate::source::SourceInfo;

pub const SCHEMA_ID: &str = "mlconcave-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Certified,
    Inconclusive,
    Violation,
    Error,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::Error => 1,
            Outcome::Violation => 2,
            Outcome::Inconclusive => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Certified => "certified",
            Outcome::Inconclusive => "inconclusive",
            Outcome::Violation => "violation",
            Outcome::Error => "error",
        }
    }

    pub fn of(holds: Holds) -> Self {
        match holds {
            Holds::Certified => Outcome::Certified,
            Holds::ViolationFound => Outcome::Violation,
            Holds::NoViolationFound => Outcome::Inconclusive,
        }
    }

    /// Errors dominate violations, which dominate inconclusive results.
    pub fn combine(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        outcomes.into_iter().max().unwrap_or(Outcome::Certified)
    }
}

#[derive(Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: Tool,
    pub command: &'static str,
    pub source: Option<SourceInfo>,
    pub settings: serde_json::Value,
    pub outcome: Outcome,
    pub exit_code: i32,
    pub error: Option<String>,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Body {
    Check { points: Vec<CheckPoint> },
    Prekopa { points: Vec<PrekopaPoint> },
    Pw(PwBody),
    Empty {},
}

impl Report {
    pub fn new(command: &'static str, source: Option<SourceInfo>, settings: serde_json::Value, body: Body, outcome: Outcome) -> Self {
        Self {
            schema: SCHEMA_ID,
            tool: Tool {
                name: "mlconcave",
                version: env!("CARGO_PKG_VERSION"),
            },
            command,
            source,
            settings,
            outcome,
            exit_code: outcome.exit_code(),
            error: None,
            body,
        }
    }

    pub fn failed(command: &'static str, message: String) -> Self {
        let mut r = Self::new(command, None, serde_json::Value::Null, Body::Empty {}, Outcome::Error);
        r.error = Some(message);
        r
    }
}

/// Interleaved `[re0, im0, re1, im1, ...]`.
pub fn interleave(v: &ComplexVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Rows of interleaved complex entries.
pub fn matrix_rows(m: &ComplexMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|row| row.iter().flat_map(|z| [z.re, z.im]).collect()).collect()
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::NakanoConcave => "nakano-concave",
        Mode::NakanoConvex => "nakano-convex",
        Mode::GriffithsConcave => "griffiths-concave",
        Mode::GriffithsConvex => "griffiths-convex",
    }
}

pub fn holds_name(h: Holds) -> &'static str {
    match h {
        Holds::Certified => "certified",
        Holds::ViolationFound => "violation-found",
        Holds::NoViolationFound => "no-violation-found",
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WitnessJson {
    /// Stacked tuple `(u_1; ...; u_n)`.
    Nakano { u: Vec<f64>, form_value: f64 },
    Griffiths { u: Vec<f64>, v: Vec<f64>, form_value: f64 },
}

#[derive(Debug, Serialize)]
pub struct VerdictJson {
    pub mode: &'static str,
    pub holds: &'static str,
    pub extreme_value: f64,
    pub threshold: f64,
    pub strict: bool,
    pub witness: Option<WitnessJson>,
}

impl VerdictJson {
    /// `form_value` is the form re-evaluated at the witness.
    pub fn new(v: &PositivityVerdict, form_value: Option<f64>) -> Self {
        let witness = v.witness.as_ref().map(|w| {
            let form_value = form_value.unwrap_or(f64::NAN);
            match w {
                Witness::Nakano(u) => WitnessJson::Nakano { u: interleave(u), form_value },
                Witness::Griffiths { u, v } => WitnessJson::Griffiths {
                    u: interleave(u),
                    v: interleave(v),
                    form_value,
                },
            }
        });
        Self {
            mode: mode_name(v.mode),
            holds: holds_name(v.holds),
            extreme_value: v.extreme_value,
            threshold: v.threshold,
            strict: v.strict,
            witness,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct CheckPoint {
    pub point: Vec<f64>,
    /// Spectrum extremes of the Nakano matrix.
    pub nakano_eigenvalues: Option<Extremes>,
    pub verdicts: Vec<VerdictJson>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct TailJson {
    pub boundary_mass_ratio: f64,
    pub warning: bool,
}

impl From<TailReport> for TailJson {
    fn from(t: TailReport) -> Self {
        Self {
            boundary_mass_ratio: t.boundary_mass_ratio,
            warning: t.warning(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PrekopaPoint {
    pub t: Vec<f64>,
    pub value: Option<Vec<Vec<f64>>>,
    pub tail: Option<TailJson>,
    /// Relative change of the marginal under the doubled grid.
    pub resolution: Option<f64>,
    pub verdict: Option<VerdictJson>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Refinement {
    pub order: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Debug, Serialize)]
pub struct GTildeRow {
    pub xi: Vec<f64>,
    pub value: Vec<Vec<f64>>,
    pub tail: TailJson,
}

#[derive(Debug, Serialize)]
pub struct PwBody {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub threshold: f64,
    pub exact: Option<f64>,
    pub refinements: Vec<Refinement>,
    pub monotone: bool,
    pub g_tilde: Vec<GTildeRow>,
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_matrix(rows: &[Vec<f64>]) -> String {
    let rows: Vec<String> = rows
        .iter()
        .map(|r| {
            let entries: Vec<String> = r
                .chunks(2)
                .map(|c| if c[1] == 0.0 { format!("{:.9e}", c[0]) } else { format!("{:.9e}{:+.9e}i", c[0], c[1]) })
                .collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn fmt_verdict(out: &mut String, v: &VerdictJson) {
    let _ = write!(out, "  {}: {} (extreme {:.6e}, threshold {:.1e})", v.mode, v.holds, v.extreme_value, v.threshold);
    match &v.witness {
        Some(WitnessJson::Nakano { u, form_value }) => {
            let _ = write!(out, "\n    witness u = {u:?}, form = {form_value:.6e}");
        }
        Some(WitnessJson::Griffiths { u, v, form_value }) => {
            let _ = write!(out, "\n    witness u = {u:?}, v = {v:?}, form = {form_value:.6e}");
        }
        None => {}
    }
    out.push('\n');
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.source {
            let _ = writeln!(out, "{} {} ({})", self.command, s.name, s.kind);
        }
        match &self.body {
            Body::Check { points } => {
                for p in points {
                    let _ = writeln!(out, "x = {}", fmt_point(&p.point));
                    if let Some(e) = &p.nakano_eigenvalues {
                        let _ = writeln!(out, "  nakano eigenvalues in [{:.6e}, {:.6e}]", e.min, e.max);
                    }
                    for v in &p.verdicts {
                        fmt_verdict(&mut out, v);
                    }
                    if let Some(e) = &p.error {
                        let _ = writeln!(out, "  error: {e}");
                    }
                }
            }
            Body::Prekopa { points } => {
                for p in points {
                    let _ = writeln!(out, "t = {}", fmt_point(&p.t));
                    if let Some(v) = &p.value {
                        let _ = writeln!(out, "  marginal = {}", fmt_matrix(v));
                    }
                    if let (Some(t), Some(r)) = (&p.tail, p.resolution) {
                        let _ = writeln!(out, "  tail ratio {:.2e}, resolution {:.2e}", t.boundary_mass_ratio, r);
                    }
                    if let Some(v) = &p.verdict {
                        fmt_verdict(&mut out, v);
                    }
                    if let Some(e) = &p.error {
                        let _ = writeln!(out, "  error: {e}");
                    }
                }
            }
            Body::Pw(b) => {
                for r in &b.refinements {
                    let _ = writeln!(out, "order {:>4}: lhs {:.12e}  rhs {:.12e}  rel_err {:.3e}", r.order, r.lhs, r.rhs, r.rel_err);
                }
                if let Some(x) = b.exact {
                    let _ = writeln!(out, "exact value {x:.12e}");
                }
                let _ = writeln!(out, "rel_err {:.3e} (threshold {:.1e}){}", b.rel_err, b.threshold, if b.monotone { "" } else { ", not monotone under refinement" });
                for row in &b.g_tilde {
                    let _ = writeln!(out, "g~{} = {}", fmt_point(&row.xi), fmt_matrix(&row.value));
                }
            }
            Body::Empty {} => {}
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(out, "outcome: {} (exit {})", self.outcome.name(), self.exit_code);
        out
    }
}

pub fn hermitian_rows(h: &HermitianMatrix) -> Vec<Vec<f64>> {
    matrix_rows(h.as_matrix())
}
