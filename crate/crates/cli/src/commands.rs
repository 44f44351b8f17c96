use std::time::Instant;

use carnot_core::{
    classify_k3, integrate_horizontal_partial, leaf_classify, Error, ExtremalClass, LeafClass, LiftedTrajectory,
};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::json::float17;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub command: &'static str,
    pub seed: u64,
    pub k: usize,
    #[serde(rename = "dim_L")]
    pub dim_l: usize,
    pub kernel_dim: usize,
    pub casimir_basis: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// `zero_dim`, `two_dim`, or `unclassified` when `k != 3`.
    pub leaf: &'static str,
    pub casimir: Option<Vec<f64>>,
    pub casimir_level: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport, CliError> {
    let basis = cfg.m.kernel_basis(cfg.options.kernel_tol);
    let mut warnings: Vec<String> = basis.near_singular_warning().into_iter().collect();
    let (leaf, casimir, casimir_level) = if cfg.spec.rank() == 3 {
        let h = cfg.h0.clone().unwrap_or_else(|| vec![0.0; 3]);
        match leaf_classify(&cfg.m, &h)? {
            LeafClass::ZeroDim { .. } => ("zero_dim", None, None),
            LeafClass::TwoDim { casimir, level, .. } => {
                ("two_dim", Some(casimir.to_vec()), cfg.h0.as_ref().map(|_| level))
            }
        }
    } else {
        warnings.push(format!("leaf type is only classified for k=3 (k={})", cfg.spec.rank()));
        ("unclassified", None, None)
    };
    Ok(AnalyzeReport {
        command: "analyze",
        seed: cfg.seed,
        k: cfg.spec.rank(),
        dim_l: cfg.spec.dim(),
        kernel_dim: basis.dim(),
        casimir_basis: basis.vectors.clone(),
        singular_values: cfg.m.singular_values(),
        leaf,
        casimir,
        casimir_level,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    /// `constant`, `periodic`, or `unclassified` on numerical failure.
    pub class: &'static str,
    pub period: Option<f64>,
    pub return_residual: Option<f64>,
    pub parallel_test_residual: Option<f64>,
    pub casimir: Option<Vec<f64>>,
    pub h0: Vec<f64>,
    pub reason: Option<String>,
    pub warnings: Vec<String>,
}

impl ClassifyReport {
    pub fn is_classified(&self) -> bool {
        self.class != "unclassified"
    }
}

fn classify_one(cfg: &RunConfig, h0: &[f64]) -> Result<ClassifyReport, CliError> {
    let body = cfg.checked_body()?;
    let c = match classify_k3(h0, &cfg.m, body, &cfg.options) {
        Ok(c) => c,
        Err(e) if e.is_numerical() => {
            return Ok(ClassifyReport {
                class: "unclassified",
                period: None,
                return_residual: None,
                parallel_test_residual: None,
                casimir: None,
                h0: h0.to_vec(),
                reason: Some(e.to_string()),
                warnings: Vec::new(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let (class, period, return_residual, reason) = match c.class {
        ExtremalClass::Constant => ("constant", None, None, None),
        ExtremalClass::Periodic { period, return_residual } => {
            ("periodic", Some(period), Some(return_residual), None)
        }
        ExtremalClass::Unclassified { reason } => ("unclassified", None, None, Some(reason)),
    };
    Ok(ClassifyReport {
        class,
        period,
        return_residual,
        parallel_test_residual: Some(c.parallel_residual),
        casimir: c.casimir,
        h0: c.h0,
        reason,
        warnings: c.warnings,
    })
}

/// Classifies `h0`, or every entry of `sweep` (in input order) when present.
pub fn cmd_classify(cfg: &RunConfig) -> Result<Vec<ClassifyReport>, CliError> {
    if cfg.spec.rank() != 3 {
        return Err(CliError::Config {
            field: String::from("k"),
            message: format!("classification is only established for k=3, got k={}", cfg.spec.rank()),
        });
    }
    cfg.checked_body()?;
    match &cfg.sweep {
        Some(list) => {
            info!("classifying {} initial covectors", list.len());
            list.par_iter().map(|h0| classify_one(cfg, h0)).collect()
        }
        None => Ok(vec![classify_one(cfg, cfg.require_h0()?)?]),
    }
}

/// A finished or aborted integration.
#[derive(Debug, Clone)]
pub struct IntegrateRun {
    pub lifted: LiftedTrajectory,
    pub failure: Option<Error>,
    pub wall_time: f64,
}

pub fn cmd_integrate(cfg: &RunConfig) -> Result<IntegrateRun, CliError> {
    let body = cfg.checked_body()?;
    let h0 = cfg.require_h0()?;
    let t1 = cfg.require_t1()?;
    let start = Instant::now();
    let (lifted, failure) = integrate_horizontal_partial(h0, &cfg.m, body, t1, &cfg.options)?;
    let wall_time = start.elapsed().as_secs_f64();
    if let Some(e) = &failure {
        info!("integration stopped early: {e}");
    }
    Ok(IntegrateRun { lifted, failure, wall_time })
}

impl IntegrateRun {
    pub fn header(&self, cfg: &RunConfig) -> Vec<String> {
        let k = cfg.spec.rank();
        let mut cols = vec![String::from("t")];
        cols.extend((1..=k).map(|i| format!("h_{i}")));
        cols.extend((1..=k).map(|i| format!("u_{i}")));
        cols.extend((0..cfg.spec.dim()).map(|idx| format!("x_{}", cfg.spec.label(idx))));
        cols.push(String::from("H_drift"));
        cols.extend((1..=self.lifted.vertical.casimirs.dim()).map(|a| format!("I_{a}_drift")));
        cols
    }

    pub fn write_csv<W: std::io::Write>(&self, cfg: &RunConfig, out: W) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Never).from_writer(out);
        w.write_record(self.header(cfg))?;
        let v = &self.lifted.vertical;
        for (i, q) in self.lifted.path.iter().enumerate() {
            let mut row = vec![v.times[i]];
            row.extend(&v.states[i]);
            row.extend(&v.controls[i]);
            row.extend(&q.x);
            row.extend(&q.y);
            row.push(v.h_drift[i]);
            row.extend(&v.casimir_drift[i]);
            w.write_record(row.into_iter().map(float17))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self, cfg: &RunConfig) -> IntegrateSummary {
        let v = &self.lifted.vertical;
        IntegrateSummary {
            command: "integrate",
            seed: cfg.seed,
            status: if self.failure.is_some() { "aborted" } else { "ok" },
            error: self.failure.as_ref().map(|e| e.to_string()),
            rows: v.len(),
            t_end: v.times.last().copied().unwrap_or(0.0),
            max_h_drift: v.max_h_drift,
            max_casimir_drift: v.max_casimir_drift,
            casimir_basis: v.casimirs.vectors.clone(),
            h_end: v.states.last().cloned().unwrap_or_default(),
            endpoint: Endpoint { x: self.lifted.endpoint.x.clone(), x_ij: self.lifted.endpoint.y.clone() },
            steps: v.steps,
            rejected_steps: v.rejected_steps,
            wall_time_s: self.wall_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoint {
    pub x: Vec<f64>,
    pub x_ij: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrateSummary {
    pub command: &'static str,
    pub seed: u64,
    pub status: &'static str,
    pub error: Option<String>,
    pub rows: usize,
    pub t_end: f64,
    pub max_h_drift: f64,
    pub max_casimir_drift: f64,
    pub casimir_basis: Vec<Vec<f64>>,
    pub h_end: Vec<f64>,
    pub endpoint: Endpoint,
    pub steps: usize,
    pub rejected_steps: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub command: &'static str,
    pub seed: u64,
    pub family: &'static str,
    pub points: usize,
    pub tolerance: f64,
    pub valid: bool,
    pub validation: Vec<String>,
    pub max_relative_error: Option<f64>,
    pub worst_point: Option<Vec<f64>>,
    pub pass: bool,
}

/// Central difference of `H`, with the step shrunk near coordinate kinks.
fn fd_gradient(body: &carnot_core::ControlBody, h: &[f64]) -> Result<Vec<f64>, Error> {
    let mut plus = h.to_vec();
    let mut minus = h.to_vec();
    let mut out = Vec::with_capacity(h.len());
    for i in 0..h.len() {
        let step = (0.1 * h[i].abs()).clamp(1e-9, 1e-6);
        plus[i] = h[i] + step;
        minus[i] = h[i] - step;
        out.push((body.support(&plus)? - body.support(&minus)?) / (plus[i] - minus[i]));
        plus[i] = h[i];
        minus[i] = h[i];
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<GradcheckReport, CliError> {
    let report = cfg.body.validate();
    let mut out = GradcheckReport {
        command: "gradcheck",
        seed: cfg.seed,
        family: cfg.body.family(),
        points: cfg.points,
        tolerance: cfg.gradcheck_tol,
        valid: report.passed(),
        validation: report.messages(),
        max_relative_error: None,
        worst_point: None,
        pass: false,
    };
    if !out.valid {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.spec.rank();
    let mut worst = (0.0_f64, Vec::new());
    for _ in 0..cfg.points {
        let h: Vec<f64> = (0..k).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
        let g = cfg.body.support_gradient(&h)?;
        let fd = fd_gradient(&cfg.body, &h)?;
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&g).max(f64::MIN_POSITIVE);
        if rel > worst.0 || worst.1.is_empty() {
            worst = (rel, h);
        }
    }
    out.pass = worst.0 <= cfg.gradcheck_tol;
    out.max_relative_error = Some(worst.0);
    out.worst_point = Some(worst.1);
    Ok(out)
}
