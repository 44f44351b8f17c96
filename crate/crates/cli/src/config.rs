//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use carnot_core::{AlgebraSpec, ControlBody, FlowOptions, SkewMatrix};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GRADCHECK_POINTS: usize = 1000;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    /// Euclidean ball of radius `r` (default 1).
    Ball {
        r: Option<f64>,
    },
    Ellipsoid {
        #[serde(rename = "A")]
        a: Option<MatrixSpec>,
    },
    LpBall {
        p: f64,
        r: Option<f64>,
    },
    TranslatedEllipsoid {
        #[serde(rename = "A")]
        a: Option<MatrixSpec>,
        c: Vec<f64>,
    },
}

/// Overrides for [`FlowOptions`]; absent keys keep the library defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_drift: Option<f64>,
    pub kernel_tol: Option<f64>,
    pub parallel_tol: Option<f64>,
    pub borderline_tol: Option<f64>,
    pub capture_radius: Option<f64>,
    pub event_tol: Option<f64>,
    pub return_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub scan_step: Option<f64>,
    pub max_steps: Option<usize>,
    pub gradcheck: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub k: usize,
    pub body: BodySpec,
    #[serde(default)]
    pub h_ij: BTreeMap<String, f64>,
    pub h0: Option<Vec<f64>>,
    #[serde(alias = "horizon")]
    pub t1: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub project: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub sweep: Option<Vec<Vec<f64>>>,
}

/// A checked configuration. The body is built but not yet validated, so
/// `gradcheck` can surface validation failures itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: AlgebraSpec,
    pub body: ControlBody,
    pub m: SkewMatrix,
    pub h0: Option<Vec<f64>>,
    pub t1: Option<f64>,
    pub seed: u64,
    pub points: usize,
    pub gradcheck_tol: f64,
    pub options: FlowOptions,
    pub sweep: Option<Vec<Vec<f64>>>,
}

fn field(name: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config { field: name.into(), message: message.into() }
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>, CliError> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(field(name, format!("must be finite and > 0, got {x}"))),
        other => Ok(other),
    }
}

fn finite_vec(name: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(field(format!("{name}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

fn matrix(name: &str, spec: &Option<MatrixSpec>, k: usize) -> Result<DMatrix<f64>, CliError> {
    let entries: Vec<f64> = match spec {
        None => return Ok(DMatrix::identity(k, k)),
        Some(MatrixSpec::Flat(v)) => v.clone(),
        Some(MatrixSpec::Nested(rows)) => {
            if rows.len() != k {
                return Err(field(name, format!("expected {k} rows, got {}", rows.len())));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != k) {
                return Err(field(format!("{name}[{i}]"), format!("expected {k} entries, got {}", rows[i].len())));
            }
            rows.concat()
        }
    };
    if entries.len() != k * k {
        return Err(field(name, format!("expected {} entries, got {}", k * k, entries.len())));
    }
    finite_vec(name, &entries)?;
    Ok(DMatrix::from_row_slice(k, k, &entries))
}

fn body(spec: &BodySpec, k: usize) -> Result<ControlBody, CliError> {
    Ok(match spec {
        BodySpec::Ball { r } => {
            let r = positive("body.r", *r)?.unwrap_or(1.0);
            ControlBody::lp_ball(k, 2.0, r)
        }
        BodySpec::Ellipsoid { a } => ControlBody::ellipsoid(matrix("body.A", a, k)?),
        BodySpec::LpBall { p, r } => {
            if !p.is_finite() {
                return Err(field("body.p", "must be finite"));
            }
            ControlBody::lp_ball(k, *p, r.unwrap_or(1.0))
        }
        BodySpec::TranslatedEllipsoid { a, c } => {
            if c.len() != k {
                return Err(field("body.c", format!("expected length {k}, got {}", c.len())));
            }
            finite_vec("body.c", c)?;
            ControlBody::translated_ellipsoid(matrix("body.A", a, k)?, DVector::from_column_slice(c))
        }
    })
}

fn parse_pair(key: &str, k: usize) -> Option<(usize, usize)> {
    let (i, j) = key.split_once(',')?;
    let i: usize = i.trim().parse().ok()?;
    let j: usize = j.trim().parse().ok()?;
    (1 <= i && i < j && j <= k).then_some((i - 1, j - 1))
}

fn skew(raw: &RawConfig, spec: AlgebraSpec) -> Result<SkewMatrix, CliError> {
    let mut upper = vec![0.0; spec.pair_count()];
    for (key, &v) in &raw.h_ij {
        let name = format!("h_ij.\"{key}\"");
        let (i, j) = parse_pair(key, raw.k)
            .ok_or_else(|| field(&name, format!("key must be \"i,j\" with 1 <= i < j <= {}", raw.k)))?;
        if !v.is_finite() {
            return Err(field(&name, "must be finite"));
        }
        upper[spec.pair_index(i, j).expect("checked pair")] = v;
    }
    SkewMatrix::from_upper(spec, &upper).map_err(|e| field("h_ij", e.to_string()))
}

fn covector(name: &str, h: &[f64], k: usize) -> Result<(), CliError> {
    if h.len() != k {
        return Err(field(name, format!("expected length {k}, got {}", h.len())));
    }
    finite_vec(name, h)?;
    if h.iter().all(|&x| x == 0.0) {
        return Err(field(name, "zero covector is abnormal, not a normal extremal"));
    }
    Ok(())
}

fn options(raw: &RawConfig) -> Result<FlowOptions, CliError> {
    let t = &raw.tolerances;
    let d = FlowOptions::default();
    let pick = |name: &str, v: Option<f64>, default: f64| -> Result<f64, CliError> {
        Ok(positive(&format!("tolerances.{name}"), v)?.unwrap_or(default))
    };
    let samples = raw.samples.unwrap_or(d.samples);
    if samples == 0 {
        return Err(field("samples", "must be >= 1"));
    }
    let max_steps = t.max_steps.unwrap_or(d.max_steps);
    if max_steps == 0 {
        return Err(field("tolerances.max_steps", "must be >= 1"));
    }
    Ok(FlowOptions {
        rtol: pick("rtol", t.rtol, d.rtol)?,
        atol: pick("atol", t.atol, d.atol)?,
        max_drift: pick("max_drift", t.max_drift, d.max_drift)?,
        project: raw.project,
        samples,
        kernel_tol: pick("kernel_tol", t.kernel_tol, d.kernel_tol)?,
        parallel_tol: pick("parallel_tol", t.parallel_tol, d.parallel_tol)?,
        borderline_tol: pick("borderline_tol", t.borderline_tol, d.borderline_tol)?,
        capture_radius: pick("capture_radius", t.capture_radius, d.capture_radius)?,
        event_tol: pick("event_tol", t.event_tol, d.event_tol)?,
        return_tol: pick("return_tol", t.return_tol, d.return_tol)?,
        t_max: positive("tolerances.t_max", t.t_max)?,
        scan_step: pick("scan_step", t.scan_step, d.scan_step)?,
        max_steps,
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            let missing = inner.strip_prefix("missing field `").and_then(|r| r.split('`').next());
            let name = match (path.as_str(), missing) {
                (".", Some(m)) => m.to_string(),
                (".", None) => String::from("<root>"),
                (p, Some(m)) => format!("{p}.{m}"),
                (p, None) => p.to_string(),
            };
            field(name, inner)
        })?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let spec = AlgebraSpec::new(raw.k).map_err(|_| field("k", format!("must be >= 2, got {}", raw.k)))?;
        let body = body(&raw.body, raw.k)?;
        let m = skew(&raw, spec)?;
        if let Some(h0) = &raw.h0 {
            covector("h0", h0, raw.k)?;
        }
        if let Some(list) = &raw.sweep {
            for (i, h) in list.iter().enumerate() {
                covector(&format!("sweep[{i}]"), h, raw.k)?;
            }
        }
        let t1 = positive("t1", raw.t1)?;
        let points = raw.points.unwrap_or(DEFAULT_GRADCHECK_POINTS);
        if points == 0 {
            return Err(field("points", "must be >= 1"));
        }
        let gradcheck_tol = positive("tolerances.gradcheck", raw.tolerances.gradcheck)?.unwrap_or(1e-6);
        let options = options(&raw)?;
        Ok(Self {
            spec,
            body,
            m,
            h0: raw.h0,
            t1,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            points,
            gradcheck_tol,
            options,
            sweep: raw.sweep,
        })
    }

    /// The body after validation; failures become a config error on `body`.
    pub fn checked_body(&self) -> Result<&ControlBody, CliError> {
        let report = self.body.validate();
        if report.passed() {
            Ok(&self.body)
        } else {
            Err(field("body", report.messages().join("; ")))
        }
    }

    pub fn require_h0(&self) -> Result<&[f64], CliError> {
        self.h0.as_deref().ok_or_else(|| field("h0", "required for this command"))
    }

    pub fn require_t1(&self) -> Result<f64, CliError> {
        self.t1.ok_or_else(|| field("t1", "required for this command"))
    }
}
