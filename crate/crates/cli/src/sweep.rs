//! Runs a sweep: every series at every grid point with every method.

use rayon::prelude::*;
use serde::Serialize;

use rffso_core::analysis::{metrics_per_round, Method};
use rffso_core::Error;

use crate::config::{Axis, ModelConfig, SweepSpec};

/// One dataset row. `throughput` and `outage` describe the protocol with
/// `M = m` rounds; `phi` is the failure probability of round `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub axis: &'static str,
    pub axis_value: f64,
    pub method: &'static str,
    pub m: usize,
    pub phi: Option<f64>,
    pub throughput: Option<f64>,
    pub outage: Option<f64>,
    pub std_err: Option<f64>,
    pub status: String,
}

pub const STATUS_OK: &str = "ok";

impl Row {
    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }

    pub fn is_convergence_error(&self) -> bool {
        self.status.starts_with("error: quadrature")
    }
}

fn error_status(e: &Error) -> String {
    match e {
        Error::Convergence { .. } => format!("error: quadrature did not converge ({e})"),
        other => format!("error: {other}"),
    }
}

struct Point<'a> {
    series: &'a str,
    axis: Axis,
    value: f64,
    model: ModelConfig,
}

impl Point<'_> {
    fn row(&self, method: Method, m: usize) -> Row {
        Row {
            series: self.series.to_string(),
            axis: self.axis.as_str(),
            axis_value: self.value,
            method: method.as_str(),
            m,
            phi: None,
            throughput: None,
            outage: None,
            std_err: None,
            status: STATUS_OK.to_string(),
        }
    }

    fn failed(&self, method: Method, e: &Error) -> Vec<Row> {
        (1..=self.model.harq.m_max)
            .map(|m| Row {
                status: error_status(e),
                ..self.row(method, m)
            })
            .collect()
    }

    fn evaluate(&self, methods: &[Method]) -> Vec<Row> {
        let sc = match self.model.scenario() {
            Ok(sc) => sc,
            Err(e) => return methods.iter().flat_map(|&m| self.failed(m, &e)).collect(),
        };
        let snr = self.model.power.snr_db;
        let saturated = sc
            .links_at(snr)
            .and_then(|(_, rf)| rf.pa_output())
            .map(|o| o.saturated)
            .unwrap_or(false);
        let flags = |fallback: bool| {
            let mut s = Vec::new();
            if fallback {
                s.push("fallback-exact");
            }
            if saturated {
                s.push("pa-saturated");
            }
            if s.is_empty() {
                STATUS_OK.to_string()
            } else {
                s.join("+")
            }
        };
        let moments = if methods.iter().any(|m| m.is_analytic()) {
            Some(sc.moments_at(snr))
        } else {
            None
        };
        let rate = self.model.harq.rate;
        let mut rows = Vec::new();
        for &method in methods {
            let result = if method == Method::MonteCarlo {
                sc.simulate_at(snr, &self.model.mc).and_then(|est| {
                    let metrics = metrics_per_round(&est.profile(), rate)?;
                    Ok((
                        est.phi_hat,
                        Some(est.std_err),
                        vec![false; metrics.len()],
                        metrics,
                    ))
                })
            } else {
                moments
                    .clone()
                    .expect("computed for analytic methods")
                    .and_then(|mo| sc.profile_at(snr, method, Some(mo)))
                    .and_then(|p| {
                        let metrics = metrics_per_round(&p, rate)?;
                        Ok((p.phi, None, p.fallback, metrics))
                    })
            };
            match result {
                Ok((phi, se, fallback, metrics)) => {
                    for (i, mt) in metrics.iter().enumerate() {
                        rows.push(Row {
                            phi: Some(phi[i]),
                            throughput: Some(mt.throughput),
                            outage: Some(mt.outage),
                            std_err: se.as_ref().map(|s| s[i]),
                            status: flags(fallback[i]),
                            ..self.row(method, i + 1)
                        });
                    }
                }
                Err(e) => rows.extend(self.failed(method, &e)),
            }
        }
        rows
    }
}

/// Rows in (series, grid point, method, m) order. Failures are recorded in
/// the `status` column and never stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Vec<Row> {
    let points: Vec<Point> = spec
        .series
        .iter()
        .flat_map(|s| {
            spec.grid.iter().map(move |&v| Point {
                series: &s.name,
                axis: spec.axis,
                value: v,
                model: s.model.at(spec.axis, v),
            })
        })
        .collect();
    points
        .par_iter()
        .map(|p| p.evaluate(&spec.methods))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
