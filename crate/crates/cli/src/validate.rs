//! Cross-method comparison against the exact integral.

use std::collections::HashMap;

use serde::Serialize;

use rffso_core::analysis::Method;

use crate::config::SweepSpec;
use crate::sweep::{run_sweep, Row};

/// Allowed absolute deviations from the exact integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub linearized: f64,
    pub asymptotic: f64,
    /// Monte Carlo allowance is `max(mc_se * std_err, mc_floor)`.
    pub mc_se: f64,
    pub mc_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            linearized: 0.02,
            asymptotic: 0.05,
            mc_se: 3.0,
            mc_floor: 5e-3,
        }
    }
}

impl Tolerances {
    fn allowed(&self, method: &str, std_err: Option<f64>) -> f64 {
        match method {
            "linearized" => self.linearized,
            "asymptotic" => self.asymptotic,
            _ => (self.mc_se * std_err.unwrap_or(0.0)).max(self.mc_floor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub series: String,
    pub axis: &'static str,
    pub axis_value: f64,
    pub method: &'static str,
    pub m: usize,
    pub exact: Option<f64>,
    pub value: Option<f64>,
    pub delta: Option<f64>,
    pub allowed: f64,
    pub verdict: &'static str,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.verdict == "PASS")
    }

    /// Largest deviation per compared method.
    pub fn max_delta(&self, method: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.method == method)
            .filter_map(|c| c.delta)
            .reduce(f64::max)
    }

    pub fn methods(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for c in &self.checks {
            if !out.contains(&c.method) {
                out.push(c.method);
            }
        }
        out
    }
}

/// Runs the sweep with the exact method added and compares every other
/// method against it row by row.
pub fn validate(spec: &SweepSpec, tol: &Tolerances) -> Report {
    let mut spec = spec.clone();
    if !spec.methods.contains(&Method::Exact) {
        spec.methods.insert(0, Method::Exact);
    }
    let rows = run_sweep(&spec);
    let key = |r: &Row| (r.series.clone(), r.axis_value.to_bits(), r.m);
    let exact: HashMap<_, &Row> = rows
        .iter()
        .filter(|r| r.method == Method::Exact.as_str())
        .map(|r| (key(r), r))
        .collect();
    let mut checks = Vec::new();
    for r in rows.iter().filter(|r| r.method != Method::Exact.as_str()) {
        let reference = exact.get(&key(r)).copied();
        let allowed = tol.allowed(r.method, r.std_err);
        let exact_phi = reference.and_then(|e| e.phi);
        let delta = match (exact_phi, r.phi) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        let errored = r.is_error() || reference.is_none_or(Row::is_error);
        let verdict = match delta {
            Some(d) if !errored && d <= allowed => "PASS",
            _ => "FAIL",
        };
        let status = match reference {
            Some(e) if e.is_error() => e.status.clone(),
            _ => r.status.clone(),
        };
        checks.push(Check {
            series: r.series.clone(),
            axis: r.axis,
            axis_value: r.axis_value,
            method: r.method,
            m: r.m,
            exact: exact_phi,
            value: r.phi,
            delta,
            allowed,
            verdict,
            status,
        });
    }
    Report { checks }
}
