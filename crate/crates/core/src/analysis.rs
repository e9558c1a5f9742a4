//! Closed-form pipeline: FSO log-rate moments, per-round decoding failure
//! probabilities and HARQ throughput / outage.
//!
//! Round `m` fails when the accumulated information per channel use
//! `W_m = log(1 + P_RF G_RF) + Y_m` does not exceed `R / m`, where `Y_m` is
//! the FSO contribution averaged over `m N` independent realizations. The
//! analytic methods replace `Y_m` by a Gaussian with mean `mu` and variance
//! `sigma^2 / (m N)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{rician_amplitude_pdf, rician_gain_cdf, FsoLinkParams, RfLinkParams};
use crate::error::{param, Error, Result};
use crate::quad::{self, Tolerance};
use crate::special::{gaussian_q, FsoGainDensity};

/// Slack allowed for `phi_{m+1} > phi_m` before a profile is rejected.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarqParams {
    /// Maximum number of transmission rounds `M` (1 = open loop).
    pub m_max: usize,
    /// Initial code rate `R` in nats per channel use.
    pub rate: f64,
    /// FSO channel realizations per round `N`.
    pub n_fso: usize,
    /// Relative symbol rate `psi` of the FSO link.
    pub psi: f64,
}

impl HarqParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_max < 1 {
            return Err(param("m_max must be at least 1"));
        }
        if self.n_fso < 1 {
            return Err(param("n_fso must be at least 1"));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(param(format!("rate must be positive, got {}", self.rate)));
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return Err(param(format!("psi must be positive, got {}", self.psi)));
        }
        Ok(())
    }

    /// Equivalent code rate after `m` rounds.
    pub fn rate_after(&self, m: usize) -> f64 {
        self.rate / m as f64
    }

    fn check_round(&self, m: usize) -> Result<()> {
        self.validate()?;
        if m < 1 || m > self.m_max {
            return Err(param(format!("round {m} outside 1..={}", self.m_max)));
        }
        Ok(())
    }
}

/// Mean and variance of `log(1 + c_r P_FSO G_FSO)` for a unit symbol-rate
/// ratio. Scaling by `psi` happens in [`LogRateStats::scaled`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRateStats {
    pub mean: f64,
    pub variance: f64,
}

impl LogRateStats {
    pub fn scaled(&self, psi: f64) -> FsoLogMoments {
        let mu = psi * self.mean;
        let sigma2 = (psi * psi) * self.variance;
        FsoLogMoments {
            mu,
            sigma2,
            rho2: sigma2 + mu * mu,
        }
    }
}

/// Moments of the per-realization FSO log-rate `psi * log(1 + c_r P_FSO G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsoLogMoments {
    pub mu: f64,
    pub sigma2: f64,
    /// Second raw moment.
    pub rho2: f64,
}

impl FsoLogMoments {
    pub const ZERO: FsoLogMoments = FsoLogMoments {
        mu: 0.0,
        sigma2: 0.0,
        rho2: 0.0,
    };
}

fn softplus(t: f64) -> f64 {
    if t > 35.0 {
        t + (-t).exp()
    } else {
        t.exp().ln_1p()
    }
}

/// `E[log(1 + K G)]` and `Var[log(1 + K G)]` by quadrature against the gain
/// density, where `K = c_r P_FSO`.
pub fn log_rate_stats(
    density: &FsoGainDensity,
    snr_scale: f64,
    tol: Tolerance,
) -> Result<LogRateStats> {
    if snr_scale == 0.0 {
        return Ok(LogRateStats {
            mean: 0.0,
            variance: 0.0,
        });
    }
    if !(snr_scale > 0.0 && snr_scale.is_finite()) {
        return Err(param(format!(
            "SNR scale must be nonnegative, got {snr_scale}"
        )));
    }
    let p = *density.params();
    let ln_k = snr_scale.ln();
    let ell = |s: f64| softplus(ln_k + p.ln_gain_from_ln_y(s));
    // Centre the second moment near the mean to avoid cancellation.
    let shift = softplus(ln_k + p.mu_r.ln());
    let knee = p.h().ln() - (ln_k + p.mu_r.ln()) / p.r() as f64;
    let [m1, c2] = density.expect_ln_y(
        |s| {
            let l = ell(s);
            [l, (l - shift) * (l - shift)]
        },
        Some(knee),
        tol,
    )?;
    let d = m1 - shift;
    Ok(LogRateStats {
        mean: m1,
        variance: (c2 - d * d).max(0.0),
    })
}

/// `mu = psi E{log(1 + c_r P_FSO G)}`, `rho^2 = psi^2 E{log(...)^2}`,
/// `sigma^2 = rho^2 - mu^2`.
pub fn fso_log_moments(fso: &FsoLinkParams, psi: f64) -> Result<FsoLogMoments> {
    fso.validate()?;
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(param(format!("psi must be positive, got {psi}")));
    }
    if fso.p_fso == 0.0 {
        return Ok(FsoLogMoments::ZERO);
    }
    let density = FsoGainDensity::new(fso.density)?;
    let tol = Tolerance::new(1e-12, 1e-9);
    Ok(log_rate_stats(&density, fso.snr_scale(), tol)?.scaled(psi))
}

/// Which evaluator produced a decoding profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Linearized,
    Asymptotic,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Exact,
        Method::Linearized,
        Method::Asymptotic,
        Method::MonteCarlo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Linearized => "linearized",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "monte-carlo",
        }
    }

    pub fn is_analytic(self) -> bool {
        self != Method::MonteCarlo
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Method::Exact),
            "linearized" | "lin" => Ok(Method::Linearized),
            "asymptotic" | "asym" => Ok(Method::Asymptotic),
            "monte-carlo" | "mc" | "montecarlo" => Ok(Method::MonteCarlo),
            other => Err(param(format!("unknown method '{other}'"))),
        }
    }
}

/// Quantities shared by every evaluator for one round.
struct Round {
    threshold: f64,
    mu: f64,
    sigma: f64,
    /// `sqrt(m N)`
    root_mn: f64,
    /// RF transmit power
    s: f64,
}

impl Round {
    fn new(m: usize, harq: &HarqParams, fso: &FsoLogMoments, rf: &RfLinkParams) -> Result<Self> {
        harq.check_round(m)?;
        if !(fso.mu >= 0.0 && fso.sigma2 >= 0.0) {
            return Err(param(format!(
                "moments must be nonnegative, got mu={} sigma2={}",
                fso.mu, fso.sigma2
            )));
        }
        let s = rf.pa_output()?.power;
        Ok(Self {
            threshold: harq.rate_after(m),
            mu: fso.mu,
            sigma: fso.sigma2.sqrt(),
            root_mn: ((m * harq.n_fso) as f64).sqrt(),
            s,
        })
    }

    /// `Pr(log(1 + s G_RF) <= R/m - mu)`.
    fn shifted_rf_cdf(&self, rf: &RfLinkParams) -> f64 {
        let gap = self.threshold - self.mu;
        if gap <= 0.0 {
            return 0.0;
        }
        if self.s == 0.0 {
            return 1.0;
        }
        rician_gain_cdf((gap.exp_m1() / self.s).sqrt(), rf)
    }
}

/// Failure probability of round `m` by direct quadrature of the Gaussian
/// surrogate over the RF amplitude.
pub fn decoding_prob_exact(
    m: usize,
    harq: &HarqParams,
    fso: &FsoLogMoments,
    rf: &RfLinkParams,
) -> Result<f64> {
    let rd = Round::new(m, harq, fso, rf)?;
    if rd.sigma == 0.0 {
        return Ok(rd.shifted_rf_cdf(rf));
    }
    let scale = rd.root_mn / rd.sigma;
    if rd.s == 0.0 {
        return Ok(gaussian_q(scale * (rd.mu - rd.threshold)));
    }
    let u_max = (rd.threshold.exp_m1() / rd.s).sqrt();
    let integrand = |u: f64| {
        let arg = scale * ((rd.s * u * u).ln_1p() + rd.mu - rd.threshold);
        rician_amplitude_pdf(u, rf) * gaussian_q(arg)
    };
    // Breakpoints where the Q factor passes through its transition.
    let mut points = Vec::new();
    for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
        let g = (rd.threshold - rd.mu + k / scale).exp_m1() / rd.s;
        if g > 0.0 {
            points.push(g.sqrt());
        }
    }
    let mode = rf.nu.max(rf.omega);
    points.push(mode);
    let tol = Tolerance::new(1e-12, 1e-9);
    let v = quad::integrate_points(integrand, 0.0, u_max, &points, tol)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Result of the linearized closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedPhi {
    pub value: f64,
    /// The closed form was invalid (`R/m <= mu`, `sigma = 0` or `P_RF = 0`)
    /// and the exact integral was used instead.
    pub used_exact: bool,
}

/// Intermediate constants of the linearized closed form, in the amplitude domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationPoint {
    /// `d_m = (e^{R/m} - 1) / P_RF`
    pub d: f64,
    /// `tau_m = (e^{R/m - mu} - 1) / P_RF`
    pub tau: f64,
    /// Slope of the Q factor in the RF amplitude at `sqrt(tau)`.
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

/// Constants of the linearization for round `m`, or `None` when the
/// closed form does not apply.
pub fn linearization_point(
    m: usize,
    harq: &HarqParams,
    fso: &FsoLogMoments,
    rf: &RfLinkParams,
) -> Result<Option<LinearizationPoint>> {
    let rd = Round::new(m, harq, fso, rf)?;
    let gap = rd.threshold - rd.mu;
    if rd.sigma == 0.0 || rd.s == 0.0 || gap <= 0.0 {
        return Ok(None);
    }
    let d = rd.threshold.exp_m1() / rd.s;
    let tau = gap.exp_m1() / rd.s;
    // e^{-gap} - e^{-2 gap}
    let spread = -(-gap).exp() * (-gap).exp_m1();
    let mn = rd.root_mn * rd.root_mn;
    let lambda = (2.0 * mn * spread * rd.s / (PI * fso.sigma2)).sqrt();
    if !(lambda.is_finite() && lambda > 0.0) {
        return Ok(None);
    }
    let centre = tau.sqrt();
    let half_width = 0.5 / lambda;
    Ok(Some(LinearizationPoint {
        d,
        tau,
        lambda,
        a: (centre - half_width).max(0.0),
        b: (centre + half_width).min(d.sqrt()),
    }))
}

/// Piecewise-linear surrogate of the Q factor integrated against the RF
/// amplitude density, with the midpoint rule for the `u * f(u)` term.
pub fn linearized_closed_form<F>(a: f64, b: f64, centre: f64, lambda: f64, cdf: F) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return cdf(b.max(0.0));
    }
    let fa = cdf(a);
    let fb = cdf(b);
    let fmid = cdf(0.5 * (a + b));
    fa + (0.5 + lambda * centre) * (fb - fa) - lambda * (b * fb - a * fa - (b - a) * fmid)
}

/// Failure probability of round `m` by the linearized closed form, falling
/// back to [`decoding_prob_exact`] where that form is invalid.
pub fn decoding_prob_linearized(
    m: usize,
    harq: &HarqParams,
    fso: &FsoLogMoments,
    rf: &RfLinkParams,
) -> Result<LinearizedPhi> {
    match linearization_point(m, harq, fso, rf)? {
        Some(lp) => {
            let v = linearized_closed_form(lp.a, lp.b, lp.tau.sqrt(), lp.lambda, |x| {
                rician_gain_cdf(x, rf)
            });
            Ok(LinearizedPhi {
                value: v.clamp(0.0, 1.0),
                used_exact: false,
            })
        }
        None => Ok(LinearizedPhi {
            value: decoding_prob_exact(m, harq, fso, rf)?,
            used_exact: true,
        }),
    }
}

/// Large-`N` approximation: the FSO term is replaced by its mean,
/// `phi_m ~ Pr(log(1 + P_RF G_RF) <= R/m - mu)`.
pub fn decoding_prob_asymptotic(
    m: usize,
    harq: &HarqParams,
    fso: &FsoLogMoments,
    rf: &RfLinkParams,
) -> Result<f64> {
    let rd = Round::new(m, harq, fso, rf)?;
    Ok(rd.shifted_rf_cdf(rf))
}

/// `(phi_1, ..., phi_M)` with the evaluator that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingProfile {
    pub phi: Vec<f64>,
    pub method: Method,
    /// Rounds whose linearized value came from the exact fallback.
    #[serde(default)]
    pub fallback: Vec<bool>,
}

impl DecodingProfile {
    pub fn new(phi: Vec<f64>, method: Method) -> Self {
        let n = phi.len();
        Self {
            phi,
            method,
            fallback: vec![false; n],
        }
    }

    /// Checks `0 <= phi <= 1` and `phi_{m+1} <= phi_m`, clamping violations
    /// within [`MONOTONE_SLACK`].
    pub fn normalized(&self) -> Result<Vec<f64>> {
        if self.phi.is_empty() {
            return Err(param("decoding profile is empty"));
        }
        let mut out = Vec::with_capacity(self.phi.len());
        for (i, &p) in self.phi.iter().enumerate() {
            if !(-MONOTONE_SLACK..=1.0 + MONOTONE_SLACK).contains(&p) {
                return Err(param(format!("phi_{} = {p} outside [0, 1]", i + 1)));
            }
            let mut p = p.clamp(0.0, 1.0);
            if let Some(&prev) = out.last() {
                if p > prev + MONOTONE_SLACK {
                    return Err(Error::NonMonotone {
                        round: i + 1,
                        prev,
                        next: p,
                    });
                }
                p = p.min(prev);
            }
            out.push(p);
        }
        Ok(out)
    }
}

/// Decoding failure probabilities for rounds `1..=M`.
pub fn decoding_profile(
    method: Method,
    harq: &HarqParams,
    fso: &FsoLogMoments,
    rf: &RfLinkParams,
) -> Result<DecodingProfile> {
    let mut phi = Vec::with_capacity(harq.m_max);
    let mut fallback = Vec::with_capacity(harq.m_max);
    for m in 1..=harq.m_max {
        let (v, fb) = match method {
            Method::Exact => (decoding_prob_exact(m, harq, fso, rf)?, false),
            Method::Linearized => {
                let r = decoding_prob_linearized(m, harq, fso, rf)?;
                (r.value, r.used_exact)
            }
            Method::Asymptotic => (decoding_prob_asymptotic(m, harq, fso, rf)?, false),
            Method::MonteCarlo => {
                return Err(param("Monte Carlo profiles come from the mc module"));
            }
        };
        phi.push(v);
        fallback.push(fb);
    }
    Ok(DecodingProfile {
        phi,
        method,
        fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetrics {
    /// Nats per channel use.
    pub throughput: f64,
    pub outage: f64,
}

/// `eta = R (1 - phi_M) / (1 + sum_{m<M} phi_m)`, outage `phi_M`.
pub fn throughput_and_outage(profile: &DecodingProfile, rate: f64) -> Result<PerformanceMetrics> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(param(format!("rate must be positive, got {rate}")));
    }
    let phi = profile.normalized()?;
    let last = *phi.last().expect("nonempty");
    let denom = 1.0 + phi[..phi.len() - 1].iter().sum::<f64>();
    Ok(PerformanceMetrics {
        throughput: rate * (1.0 - last) / denom,
        outage: last,
    })
}

/// Metrics of the truncated protocols with `M = 1, ..., len(phi)` rounds.
pub fn metrics_per_round(profile: &DecodingProfile, rate: f64) -> Result<Vec<PerformanceMetrics>> {
    let phi = profile.normalized()?;
    (1..=phi.len())
        .map(|m| {
            throughput_and_outage(
                &DecodingProfile::new(phi[..m].to_vec(), profile.method),
                rate,
            )
        })
        .collect()
}
