//! Estimator runs over a parameter grid and their CSV output.

use std::io::Write;
use std::time::Instant;

use knudsen_core::diffusivity::{
    accommodation_equivalent, direct_sigma2_with, displacement_observable, galerkin_sigma2, lser_sigma2,
    spectral_sigma2_from, DirectOptions,
};
use knudsen_core::operator::spectral_summary;
use knudsen_core::{DiffusivityError, DiffusivityReport, Estimator, FamilySpec, PiQuadrature};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::MatrixCache;
use crate::config::{GridPoint, Numerics};
use crate::error::CliError;

/// One CSV row: a single estimator at a single grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub family: String,
    pub params: String,
    pub h: Option<f64>,
    pub gap: Option<f64>,
    pub sigma2: Option<f64>,
    pub eta: Option<f64>,
    pub theta_equiv: Option<f64>,
    pub estimator: Estimator,
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub positions: Option<usize>,
    pub error_bound: Option<f64>,
    /// `ok`, or the reason the estimate is missing.
    pub status: String,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub value: f64,
    pub rows: Vec<Row>,
}

/// Rows in grid order, estimators in config order within each point.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: String,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.points.iter().flat_map(|p| &p.rows)
    }
}

fn status_of(e: &DiffusivityError) -> String {
    match e {
        DiffusivityError::Unreliable { reason } => format!("unreliable: {reason}"),
        e if e.is_reliability() => format!("unreliable: {e}"),
        e => format!("error: {e}"),
    }
}

fn blank_row(spec: &FamilySpec, estimator: Estimator, status: String) -> Row {
    Row {
        family: spec.name().to_string(),
        params: spec.params(),
        h: None,
        gap: None,
        sigma2: None,
        eta: None,
        theta_equiv: None,
        estimator,
        n: None,
        m: None,
        positions: None,
        error_bound: None,
        status,
        elapsed_ms: 0.0,
    }
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs every estimator at one profile. Failures are recorded per row.
pub fn run_point(spec: &FamilySpec, estimators: &[Estimator], num: &Numerics, cache: &MatrixCache) -> Vec<Row> {
    let start = Instant::now();
    let profile = match spec.build::<f64>() {
        Ok(p) => p,
        Err(e) => return estimators.iter().map(|&est| blank_row(spec, est, format!("geometry error: {e}"))).collect(),
    };
    let h = profile.flatness_h().h;
    let quad = PiQuadrature::new(num.quadrature_order);
    let f = displacement_observable(num.cutoff, num.radius);

    let matrix = cache.get_or_build(&profile, num.m, num.n, num.sampling);
    let summary = match &matrix {
        Ok((p, _)) => Some(spectral_summary(p)),
        Err(_) => None,
    };
    let gap = match &summary {
        Some(Ok(s)) => Some(s.gap),
        _ => None,
    };
    let setup_ms = millis(start);

    estimators
        .iter()
        .map(|&est| {
            let t = Instant::now();
            let mut row = blank_row(spec, est, String::new());
            row.h = Some(h);
            row.gap = gap;
            if est != Estimator::Lser {
                row.m = Some(num.m);
                row.positions = Some(num.n);
            }
            row.n = match est {
                Estimator::Lser => Some(num.n_lser),
                Estimator::Galerkin => Some(num.n_galerkin),
                _ => None,
            };
            let report: Result<DiffusivityReport, String> = (|| {
                let f = f.as_ref().map_err(status_of)?;
                if est == Estimator::Lser {
                    return lser_sigma2(f, h, num.n_lser, &quad).map_err(|e| status_of(&e));
                }
                let p = match &matrix {
                    Ok((p, _)) => p,
                    Err(e) => return Err(format!("error: {e}")),
                };
                match est {
                    Estimator::Galerkin => galerkin_sigma2(p, f, num.n_galerkin, &quad),
                    Estimator::Direct => {
                        let opts = DirectOptions { gap_threshold: num.gap_threshold, known_gap: gap, ..Default::default() };
                        direct_sigma2_with(p, f, &quad, &opts)
                    }
                    Estimator::Spectral => match summary.as_ref().expect("summary exists with the matrix") {
                        Ok(s) => spectral_sigma2_from(s, p, f, &quad),
                        Err(e) => Err(DiffusivityError::Operator(e.clone())),
                    },
                    Estimator::Lser => unreachable!(),
                }
                .map_err(|e| status_of(&e))
            })();
            match report {
                Ok(r) => {
                    row.sigma2 = Some(r.sigma2);
                    row.eta = Some(r.eta);
                    row.theta_equiv = accommodation_equivalent(r.eta).ok().map(|a| a.theta);
                    row.error_bound = r.error_bound;
                    row.n = r.n.or(row.n);
                    row.status = "ok".into();
                }
                Err(status) => row.status = status,
            }
            let ms = millis(t) + if est == Estimator::Lser { 0.0 } else { setup_ms };
            row.elapsed_ms = (ms * 1e3).round() / 1e3;
            row
        })
        .collect()
}

/// Runs the grid on a pool of `jobs` workers (all cores if `None`).
pub fn run_sweep(
    parameter: &str,
    points: &[GridPoint],
    estimators: &[Estimator],
    num: &Numerics,
    cache: &MatrixCache,
    jobs: Option<usize>,
) -> Result<SweepResult, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let points = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                log::info!("point {}: {} {}", pt.index, pt.spec.name(), pt.spec.params());
                PointResult { value: pt.value, rows: run_point(&pt.spec, estimators, num, cache) }
            })
            .collect()
    });
    Ok(SweepResult { parameter: parameter.to_string(), points })
}

pub fn write_csv<'a, W: Write>(out: W, rows: impl IntoIterator<Item = &'a Row>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
