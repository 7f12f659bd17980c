//! Resolving the metric argument: a spec file, a gallery entry or a builtin.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mlconcave::gallery::{gallery_entry, gallery_list, pw_builtin, pw_builtins, PwBuiltin};
use mlconcave::paley_wiener::SampledVectorFunction;
use mlconcave::spec::{Dims, MetricSpec};
use mlconcave::MetricFunction;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub struct Source {
    pub info: SourceInfo,
    pub metric: MetricFunction,
    pub vars: Vec<String>,
    /// Leading variables meant to be integrated out, when the source says so.
    pub integrated: Option<usize>,
    pub builtin: Option<PwBuiltin>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceInfo {
    pub kind: &'static str,
    pub name: String,
    /// SHA-256 of the spec TOML text (the file bytes, or the exported text of
    /// a gallery entry); absent for programmatic metrics.
    pub spec_sha256: Option<String>,
}

fn sha256(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn default_vars(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn from_spec(kind: &'static str, name: String, text: &str, spec: &MetricSpec) -> Source {
    let integrated = match spec.dims {
        Dims::Split { y, .. } => Some(y),
        Dims::Plain { .. } => None,
    };
    Source {
        info: SourceInfo {
            kind,
            name,
            spec_sha256: Some(sha256(text)),
        },
        metric: spec.to_metric(),
        vars: spec.variables(),
        integrated,
        builtin: None,
    }
}

fn unknown(arg: &str) -> anyhow::Error {
    let names: Vec<&str> = gallery_list().iter().map(|e| e.name).collect();
    let builtins: Vec<String> = pw_builtins().iter().map(|b| format!("builtin:{}", b.name)).collect();
    anyhow::anyhow!(
        "`{arg}` is neither a readable spec file nor a gallery entry (gallery: {}; builtins: {})",
        names.join(", "),
        builtins.join(", ")
    )
}

pub fn resolve(arg: &str) -> Result<Source> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let Some(b) = pw_builtin(name) else { bail!(unknown(arg)) };
        return Ok(Source {
            info: SourceInfo {
                kind: "builtin",
                name: name.to_string(),
                spec_sha256: None,
            },
            metric: b.metric.clone(),
            vars: default_vars("y", b.metric.dim()),
            integrated: None,
            builtin: Some(b),
        });
    }
    let gallery_name = arg.strip_prefix("gallery:");
    let path = Path::new(arg);
    if gallery_name.is_none() && path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        let spec = MetricSpec::from_toml(&text).with_context(|| format!("spec file {arg}"))?;
        return Ok(from_spec("file", arg.to_string(), &text, &spec));
    }
    let name = gallery_name.unwrap_or(arg);
    let Some(e) = gallery_entry(name) else { bail!(unknown(arg)) };
    Ok(match &e.spec {
        Some(spec) => {
            let mut s = from_spec("gallery", name.to_string(), &spec.to_toml(), spec);
            s.metric = e.metric.clone();
            s.integrated = (e.integrated > 0).then_some(e.integrated);
            s
        }
        None => Source {
            info: SourceInfo {
                kind: "gallery",
                name: name.to_string(),
                spec_sha256: None,
            },
            vars: default_vars("x", e.metric.dim()),
            metric: e.metric.clone(),
            integrated: (e.integrated > 0).then_some(e.integrated),
            builtin: None,
        },
    })
}

impl Source {
    /// Test function for the transform check: the builtin's own unless
    /// `override_f` is given.
    pub fn test_function(&self, override_f: Option<crate::parse::TestF>) -> SampledVectorFunction {
        use crate::parse::{hermite, TestF};
        use mlconcave::ComplexVector;
        use num_complex::Complex64;
        if let (Some(b), None) = (&self.builtin, override_f) {
            return b.f.clone();
        }
        let (n, r) = (self.metric.dim(), self.metric.rank());
        let kind = override_f.unwrap_or(TestF::Gauss);
        SampledVectorFunction::new(n, r, move |xi| {
            let e = (-xi.iter().map(|v| v * v).sum::<f64>()).exp();
            Ok(ComplexVector::from_fn(r, |i, _| {
                let p = match kind {
                    TestF::Gauss => xi[0].powi(i as i32),
                    TestF::Hermite(k) => hermite(k + i, xi[0]),
                };
                Complex64::new(p * e, 0.0)
            }))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_gallery_and_builtins() {
        let s = resolve("example4").unwrap();
        assert_eq!(s.info.kind, "gallery");
        assert_eq!(s.vars, vec!["x1", "x2"]);
        assert_eq!(s.info.spec_sha256.as_ref().unwrap().len(), 64);
        assert_eq!(resolve("corollary").unwrap().integrated, Some(1));
        assert!(resolve("random-smooth").unwrap().info.spec_sha256.is_none());
        let b = resolve("builtin:gauss-r2").unwrap();
        assert_eq!(b.metric.rank(), 2);
        assert!(b.builtin.is_some());
        assert!(resolve("no-such-thing").is_err());
        assert!(resolve("builtin:nope").is_err());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
