//! SNR saving from HARQ at a target outage.

use rayon::prelude::*;

use rffso_core::analysis::Method;

use crate::config::{Axis, SweepSpec};
use crate::CliError;

/// Outage values below this are treated as this value on the log scale.
const LOG_FLOOR: f64 = 1e-300;

/// SNR at which a nonincreasing outage curve reaches `target`, by linear
/// interpolation of `log10(outage)` between the bracketing grid points.
pub fn required_snr(snr: &[f64], outage: &[f64], target: f64) -> Option<f64> {
    let lg = |p: f64| p.max(LOG_FLOOR).log10();
    let t = lg(target);
    for i in 0..outage.len().saturating_sub(1) {
        let (a, b) = (outage[i], outage[i + 1]);
        if a >= target && b <= target {
            let (la, lb) = (lg(a), lg(b));
            if la == lb {
                return Some(snr[i]);
            }
            return Some(snr[i] + (la - t) / (la - lb) * (snr[i + 1] - snr[i]));
        }
    }
    None
}

/// Exact outage curves of the first series for `M = m` at every grid point.
fn outage_curves(spec: &SweepSpec, rounds: &[usize]) -> Result<Vec<Vec<f64>>, CliError> {
    let series = spec
        .series
        .first()
        .ok_or_else(|| CliError::Config("no series".into()))?;
    let m_max = rounds.iter().copied().max().unwrap_or(1);
    let profiles = spec
        .grid
        .par_iter()
        .map(|&snr| {
            let mut model = series.model.at(Axis::SnrDb, snr);
            model.harq.m_max = m_max;
            let sc = model.scenario()?;
            let p = sc.profile_at(snr, Method::Exact, None)?;
            p.normalized()
        })
        .collect::<Result<Vec<_>, rffso_core::Error>>()?;
    Ok(rounds
        .iter()
        .map(|&m| profiles.iter().map(|phi| phi[m - 1]).collect())
        .collect())
}

/// `SNR(M = m_low) - SNR(M = m_high)` in dB at outage `target`.
pub fn harq_gain(
    spec: &SweepSpec,
    target: f64,
    m_low: usize,
    m_high: usize,
) -> Result<f64, CliError> {
    if spec.axis != Axis::SnrDb {
        return Err(CliError::Usage(format!(
            "harq-gain needs an snr_db sweep, preset sweeps {}",
            spec.axis.as_str()
        )));
    }
    if m_low < 1 || m_high < 1 {
        return Err(CliError::Usage("round counts must be at least 1".into()));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(CliError::Range(format!(
            "target outage {target} is not in (0, 1)"
        )));
    }
    let mut grid = spec.grid.clone();
    let curves = outage_curves(spec, &[m_low, m_high])?;
    let mut curves: Vec<Vec<f64>> = curves;
    if grid.len() > 1 && grid[1] < grid[0] {
        grid.reverse();
        curves.iter_mut().for_each(|c| c.reverse());
    }
    let solve = |m: usize, curve: &[f64]| {
        required_snr(&grid, curve, target).ok_or_else(|| {
            let (lo, hi) = curve
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                    (a.min(x), b.max(x))
                });
            CliError::Range(format!(
                "target outage {target} outside the M={m} curve range [{lo:e}, {hi:e}]"
            ))
        })
    };
    Ok(solve(m_low, &curves[0])? - solve(m_high, &curves[1])?)
}
