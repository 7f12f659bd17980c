//! Metric spec files.
//!
//! A spec is a TOML document describing a real symmetric matrix of
//! expressions by its lower triangle:
//!
//! ```toml
//! name = "corollary"
//! description = "optional"
//! dims = { y = 1, t = 1 }   # or dims = { x = 2 }
//! rank = 2
//!
//! [entry.1]
//! 1 = "exp(-(y1^2 + y1*t1 + t1^2)) * exp(-y1^2) * cosh(y1)"
//! [entry.2]
//! 1 = "exp(-(y1^2 + y1*t1 + t1^2)) * exp(-y1^2) * sinh(y1)"
//! 2 = "exp(-(y1^2 + y1*t1 + t1^2)) * exp(-y1^2) * cosh(y1)"
//! ```
//!
//! Entry indices are 1-based with `k <= j`; omitted entries are zero.
//! Variables are `y1..yn` then `t1..tm`, in that order in evaluation points,
//! or `x1..xd` when the spec uses `dims = { x = d }`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::linalg::ComplexMatrix;
use crate::metric::MetricFunction;

/// How the spec's variables split into integrated (`y`) and base (`t`) groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    Split { y: usize, t: usize },
    Plain { x: usize },
}

impl Dims {
    pub fn total(&self) -> usize {
        match *self {
            Dims::Split { y, t } => y + t,
            Dims::Plain { x } => x,
        }
    }

    /// Number of leading coordinates that are integrated out (`0` for `x` specs).
    pub fn integrated(&self) -> usize {
        match *self {
            Dims::Split { y, .. } => y,
            Dims::Plain { .. } => 0,
        }
    }

    pub fn variables(&self) -> Vec<String> {
        match *self {
            Dims::Split { y, t } => (1..=y).map(|i| format!("y{i}")).chain((1..=t).map(|i| format!("t{i}"))).collect(),
            Dims::Plain { x } => (1..=x).map(|i| format!("x{i}")).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpecEntry {
    /// 1-based row and column, `col <= row`.
    pub row: usize,
    pub col: usize,
    pub source: String,
    pub expr: Expr,
}

#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    pub description: String,
    pub dims: Dims,
    pub rank: usize,
    entries: Vec<SpecEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    y: Option<usize>,
    t: Option<usize>,
    x: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    #[serde(default)]
    description: String,
    dims: RawDims,
    rank: usize,
    #[serde(default)]
    entry: BTreeMap<String, BTreeMap<String, String>>,
}

fn index(key: &str, what: &str) -> Result<usize> {
    key.parse::<usize>()
        .ok()
        .filter(|&i| i >= 1)
        .ok_or_else(|| Error::Spec(format!("{what} index `{key}` is not a positive integer")))
}

impl MetricSpec {
    /// Builds a spec from `(row, col, expression)` triples with 1-based indices.
    pub fn new(name: impl Into<String>, description: impl Into<String>, dims: Dims, rank: usize, entries: &[(usize, usize, &str)]) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Spec("rank must be at least 1".into()));
        }
        if dims.total() == 0 {
            return Err(Error::Spec("a spec needs at least one variable".into()));
        }
        let vars = dims.variables();
        let mut parsed: Vec<SpecEntry> = Vec::with_capacity(entries.len());
        for &(row, col, source) in entries {
            if row == 0 || col == 0 || row > rank || col > rank {
                return Err(Error::Spec(format!("entry ({row}, {col}) is outside a rank-{rank} matrix")));
            }
            if col > row {
                return Err(Error::Spec(format!("entry ({row}, {col}) is above the diagonal; give the lower triangle only")));
            }
            if parsed.iter().any(|e| e.row == row && e.col == col) {
                return Err(Error::Spec(format!("entry ({row}, {col}) given twice")));
            }
            let expr = parse(source, &vars).map_err(|source| Error::EntryParse { entry: (row, col), source })?;
            parsed.push(SpecEntry {
                row,
                col,
                source: source.to_string(),
                expr,
            });
        }
        parsed.sort_by_key(|e| (e.row, e.col));
        Ok(Self {
            name: name.into(),
            description: description.into(),
            dims,
            rank,
            entries: parsed,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string().trim_end().to_string()))?;
        let dims = match raw.dims {
            RawDims { x: Some(x), y: None, t: None } => Dims::Plain { x },
            RawDims { x: None, y, t } if y.is_some() || t.is_some() => Dims::Split {
                y: y.unwrap_or(0),
                t: t.unwrap_or(0),
            },
            _ => return Err(Error::Spec("dims must be either { y = n, t = m } or { x = d }".into())),
        };
        let mut triples = Vec::new();
        for (j, row) in &raw.entry {
            let j = index(j, "row")?;
            for (k, src) in row {
                triples.push((j, index(k, "column")?, src.as_str()));
            }
        }
        Self::new(raw.name, raw.description, dims, raw.rank, &triples)
    }

    pub fn entries(&self) -> &[SpecEntry] {
        &self.entries
    }

    pub fn variables(&self) -> Vec<String> {
        self.dims.variables()
    }

    pub fn to_toml(&self) -> String {
        let q = |s: &str| toml::Value::String(s.to_string()).to_string();
        let mut out = format!("name = {}\n", q(&self.name));
        if !self.description.is_empty() {
            out += &format!("description = {}\n", q(&self.description));
        }
        out += &match self.dims {
            Dims::Split { y, t } => format!("dims = {{ y = {y}, t = {t} }}\n"),
            Dims::Plain { x } => format!("dims = {{ x = {x} }}\n"),
        };
        out += &format!("rank = {}\n", self.rank);
        let mut current = 0;
        for e in &self.entries {
            if e.row != current {
                out += &format!("\n[entry.{}]\n", e.row);
                current = e.row;
            }
            out += &format!("{} = {}\n", e.col, q(&e.source));
        }
        out
    }

    /// The symmetric matrix of entry values at `x`, without a positivity check.
    pub fn matrix_at(&self, x: &[f64]) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::zeros(self.rank, self.rank);
        for e in &self.entries {
            let v = e.expr.eval(x).map_err(|source| Error::Eval {
                point: x.to_vec(),
                entry: Some((e.row, e.col)),
                source,
            })?;
            m[(e.row - 1, e.col - 1)] = Complex64::new(v, 0.0);
            m[(e.col - 1, e.row - 1)] = Complex64::new(v, 0.0);
        }
        Ok(m)
    }

    /// The metric described by this spec. Evaluation checks strict positive
    /// definiteness at every requested point.
    pub fn to_metric(&self) -> MetricFunction {
        let spec = self.clone();
        MetricFunction::new(self.name.clone(), self.dims.total(), self.rank, move |x| spec.matrix_at(x))
    }
}

pub fn metric_from_spec(spec: &MetricSpec) -> MetricFunction {
    spec.to_metric()
}
