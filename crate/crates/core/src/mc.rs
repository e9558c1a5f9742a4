//! Monte Carlo simulation of the HARQ process.
//!
//! Each trial holds one RF gain fixed over all rounds and draws `N` fresh FSO
//! gains per round. Trial `t` owns the random stream `(seed, t)`, so results
//! do not depend on how trials are spread over workers, and per-trial failure
//! counts are integers, so the reduction order cannot change them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{throughput_and_outage, DecodingProfile, HarqParams, Method};
use crate::channel::{sample_rf_gain, stream_rng, FsoGainSampler, FsoLinkParams, RfLinkParams};
use crate::error::{param, Result};
use crate::special::gaussian_q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Pair trials so the second uses `1 - U` for every pointing-loss draw.
    #[serde(default)]
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(param("trials must be at least 1"));
        }
        Ok(())
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self::new(100_000, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub phi_hat: Vec<f64>,
    pub std_err: Vec<f64>,
    pub throughput_hat: f64,
    pub outage_hat: f64,
    /// Number of trials failing round `m`, for `m = 1..=M`.
    pub failures: Vec<u64>,
    pub trials: u64,
}

impl McEstimate {
    fn from_histogram(hist: &[u64], trials: u64, rate: f64) -> Result<Self> {
        // hist[k] counts trials that failed exactly rounds 1..=k.
        let m_max = hist.len() - 1;
        let mut failures = vec![0u64; m_max];
        let mut tail = 0u64;
        for m in (1..=m_max).rev() {
            tail += hist[m];
            failures[m - 1] = tail;
        }
        let n = trials as f64;
        let phi_hat: Vec<f64> = failures.iter().map(|&f| f as f64 / n).collect();
        let std_err = phi_hat
            .iter()
            .map(|&p| (p * (1.0 - p) / n).sqrt())
            .collect();
        let metrics = throughput_and_outage(
            &DecodingProfile::new(phi_hat.clone(), Method::MonteCarlo),
            rate,
        )?;
        Ok(Self {
            phi_hat,
            std_err,
            throughput_hat: metrics.throughput,
            outage_hat: metrics.outage,
            failures,
            trials,
        })
    }

    pub fn profile(&self) -> DecodingProfile {
        DecodingProfile::new(self.phi_hat.clone(), Method::MonteCarlo)
    }
}

/// Per-run constants of the trial loop.
struct TrialModel {
    sampler: FsoGainSampler,
    rf: RfLinkParams,
    rf_power: f64,
    fso_scale: f64,
    harq: HarqParams,
}

impl TrialModel {
    fn new(fso: &FsoLinkParams, rf: &RfLinkParams, harq: &HarqParams) -> Result<Self> {
        fso.validate()?;
        rf.validate()?;
        harq.validate()?;
        Ok(Self {
            sampler: FsoGainSampler::new(&fso.density)?,
            rf: *rf,
            rf_power: rf.pa_output()?.power,
            fso_scale: fso.snr_scale(),
            harq: *harq,
        })
    }

    fn fso_log_rate(&self, rng: &mut ChaCha8Rng, flip: bool) -> f64 {
        let u0: f64 = rng.random();
        let u = if flip { u0 } else { 1.0 - u0 };
        (self.fso_scale * self.sampler.sample_with_pointing(rng, u)).ln_1p()
    }

    /// Accumulated information `m W_m` after each round, stopping after the
    /// first round that decodes. Later rounds cannot fail once one succeeds.
    fn run(&self, rng: &mut ChaCha8Rng, flip: bool, full: bool, out: &mut Vec<f64>) {
        out.clear();
        let rf_term = (self.rf_power * sample_rf_gain(&self.rf, rng)).ln_1p();
        let n = self.harq.n_fso;
        let scale = self.harq.psi / n as f64;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for m in 1..=self.harq.m_max {
            for _ in 0..n {
                acc += self.fso_log_rate(rng, flip);
            }
            let info = m as f64 * rf_term + scale * acc;
            assert!(
                info >= prev,
                "accumulated information decreased: {prev} -> {info}"
            );
            prev = info;
            out.push(info);
            if !full && info > self.harq.rate {
                break;
            }
        }
    }

    /// Number of leading rounds that fail, in `0..=M`.
    fn failed_rounds(&self, trial: u64, seed: u64, antithetic: bool, buf: &mut Vec<f64>) -> usize {
        let (stream, flip) = if antithetic {
            (trial / 2, trial % 2 == 1)
        } else {
            (trial, false)
        };
        let mut rng = stream_rng(seed, stream);
        self.run(&mut rng, flip, false, buf);
        buf.iter()
            .take_while(|&&info| info <= self.harq.rate)
            .count()
    }
}

/// Accumulated information `m W_m`, `m = 1..=M`, of a single trial.
pub fn trial_information(
    fso: &FsoLinkParams,
    rf: &RfLinkParams,
    harq: &HarqParams,
    seed: u64,
    trial: u64,
) -> Result<Vec<f64>> {
    let model = TrialModel::new(fso, rf, harq)?;
    let mut out = Vec::with_capacity(harq.m_max);
    model.run(&mut stream_rng(seed, trial), false, true, &mut out);
    Ok(out)
}

/// Estimates `phi_1..phi_M`, throughput and outage on the current rayon pool.
pub fn simulate_harq(
    fso: &FsoLinkParams,
    rf: &RfLinkParams,
    harq: &HarqParams,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    let model = TrialModel::new(fso, rf, harq)?;
    let m_max = harq.m_max;
    let hist = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || (vec![0u64; m_max + 1], Vec::with_capacity(m_max)),
            |(mut hist, mut buf), t| {
                hist[model.failed_rounds(t, cfg.seed, cfg.antithetic, &mut buf)] += 1;
                (hist, buf)
            },
        )
        .map(|(hist, _)| hist)
        .reduce(
            || vec![0u64; m_max + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    McEstimate::from_histogram(&hist, cfg.trials, harq.rate)
}

/// [`simulate_harq`] on a dedicated pool of `workers` threads.
pub fn simulate_harq_with_workers(
    fso: &FsoLinkParams,
    rf: &RfLinkParams,
    harq: &HarqParams,
    cfg: &McConfig,
    workers: usize,
) -> Result<McEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| param(format!("thread pool: {e}")))?;
    pool.install(|| simulate_harq(fso, rf, harq, cfg))
}

/// Sample statistics of `psi * log(1 + c_r P_FSO G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateStats {
    pub mean: f64,
    pub variance: f64,
    pub mean_std_err: f64,
    pub variance_std_err: f64,
    pub samples: u64,
}

const CHUNK: u64 = 1 << 16;

/// Power sums of `x - shift` for one chunk.
#[derive(Debug, Clone, Copy, Default)]
struct PowerSums([f64; 4]);

impl PowerSums {
    fn add(&mut self, d: f64) {
        let d2 = d * d;
        self.0[0] += d;
        self.0[1] += d2;
        self.0[2] += d2 * d;
        self.0[3] += d2 * d2;
    }
}

/// Empirical mean and variance of the FSO log-rate over `samples` draws.
pub fn simulate_fso_rate_stats(
    fso: &FsoLinkParams,
    psi: f64,
    samples: u64,
    seed: u64,
) -> Result<RateStats> {
    fso.validate()?;
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(param(format!("psi must be positive, got {psi}")));
    }
    if samples < 1000 {
        return Err(param(format!("need at least 1000 samples, got {samples}")));
    }
    if fso.p_fso == 0.0 {
        return Ok(RateStats {
            mean: 0.0,
            variance: 0.0,
            mean_std_err: 0.0,
            variance_std_err: 0.0,
            samples,
        });
    }
    let sampler = FsoGainSampler::new(&fso.density)?;
    let k = fso.snr_scale();
    let shift = (k * fso.mean_gain).ln_1p();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<PowerSums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut s = PowerSums::default();
            for _ in 0..len {
                s.add((k * sampler.sample(&mut rng)).ln_1p() - shift);
            }
            s
        })
        .collect();
    let mut tot = [0.0; 4];
    for p in &partial {
        for (t, v) in tot.iter_mut().zip(p.0) {
            *t += v;
        }
    }
    let n = samples as f64;
    let [m1, m2, m3, m4] = tot.map(|t| t / n);
    let var = (m2 - m1 * m1).max(0.0);
    // Fourth central moment from raw moments about the shift.
    let c4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
    let unit_var = var * n / (n - 1.0);
    Ok(RateStats {
        mean: psi * (shift + m1),
        variance: (psi * psi) * unit_var,
        mean_std_err: psi * (unit_var / n).sqrt(),
        variance_std_err: (psi * psi) * ((c4 - var * var).max(0.0) / n).sqrt(),
        samples,
    })
}

/// Outcome of an Anderson-Darling normality test with estimated mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityTest {
    /// Small-sample corrected statistic `A^2 (1 + 0.75/n + 2.25/n^2)`.
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
}

/// Critical value of the corrected statistic at the 1% level.
pub const AD_CRITICAL_1PCT: f64 = 1.035;

/// Anderson-Darling test of normality; `xs` is sorted in place.
pub fn anderson_darling_normal(xs: &mut [f64]) -> Result<NormalityTest> {
    let n = xs.len();
    if n < 8 {
        return Err(param(format!("need at least 8 observations, got {n}")));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(param("sample has zero variance"));
    }
    xs.sort_by(f64::total_cmp);
    // ln Phi(z) and ln(1 - Phi(z)) through the upper tail for accuracy.
    let ln_cdf = |z: f64| gaussian_q(-z).ln();
    let ln_sf = |z: f64| gaussian_q(z).ln();
    let s: f64 = (0..n)
        .map(|i| {
            let zi = (xs[i] - mean) / sd;
            let zj = (xs[n - 1 - i] - mean) / sd;
            (2 * i + 1) as f64 * (ln_cdf(zi) + ln_sf(zj))
        })
        .sum();
    let a2 = -nf - s / nf;
    let statistic = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(NormalityTest {
        statistic,
        critical: AD_CRITICAL_1PCT,
        passed: statistic < AD_CRITICAL_1PCT,
    })
}

/// Draws `blocks` independent values of the per-round FSO term
/// `(psi / N) sum_k log(1 + c_r P_FSO G_k)` and tests them for normality.
pub fn fso_block_normality(
    fso: &FsoLinkParams,
    psi: f64,
    n_fso: usize,
    blocks: u64,
    seed: u64,
) -> Result<NormalityTest> {
    fso.validate()?;
    let sampler = FsoGainSampler::new(&fso.density)?;
    let k = fso.snr_scale();
    let scale = psi / n_fso as f64;
    let mut xs: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            scale
                * (0..n_fso)
                    .map(|_| (k * sampler.sample(&mut rng)).ln_1p())
                    .sum::<f64>()
        })
        .collect();
    anderson_darling_normal(&mut xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::Detection;

    fn links(snr_db: f64) -> (FsoLinkParams, RfLinkParams) {
        let p = crate::channel::SystemPower::new(snr_db);
        let fso =
            FsoLinkParams::new(4.3939, 2.5636, 0.9, Detection::Heterodyne, 1.0, p.p_fso()).unwrap();
        (fso, RfLinkParams::ideal(0.0995, 0.7036, p.p_cons()))
    }

    fn harq(rate: f64) -> HarqParams {
        HarqParams {
            m_max: 3,
            rate,
            n_fso: 20,
            psi: 0.03,
        }
    }

    #[test]
    fn zero_power_always_fails() {
        let (fso, rf) = links(10.0);
        let est = simulate_harq(
            &fso.with_power(0.0),
            &rf.with_consumed_power(0.0),
            &harq(1.0),
            &McConfig::new(500, 3),
        )
        .unwrap();
        assert_eq!(est.phi_hat, vec![1.0; 3]);
        assert_eq!(est.throughput_hat, 0.0);
        assert_eq!(est.std_err, vec![0.0; 3]);
    }

    #[test]
    fn vanishing_rate_never_fails() {
        let (fso, rf) = links(20.0);
        let est = simulate_harq(&fso, &rf, &harq(1e-12), &McConfig::new(500, 3)).unwrap();
        assert_eq!(est.phi_hat, vec![0.0; 3]);
        assert_eq!(est.outage_hat, 0.0);
    }

    #[test]
    fn estimates_are_nested_and_reproducible() {
        let (fso, rf) = links(8.0);
        let cfg = McConfig::new(4000, 11);
        let a = simulate_harq(&fso, &rf, &harq(1.0), &cfg).unwrap();
        let b = simulate_harq(&fso, &rf, &harq(1.0), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.failures.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.phi_hat[0] > 0.0 && a.phi_hat[0] < 1.0);
    }

    #[test]
    fn information_sequence_is_nondecreasing() {
        let (fso, rf) = links(5.0);
        for t in 0..50 {
            let w = trial_information(&fso, &rf, &harq(1.0), 9, t).unwrap();
            assert_eq!(w.len(), 3);
            assert!(w.windows(2).all(|p| p[1] >= p[0]));
        }
    }

    #[test]
    fn rate_stats_degenerate_and_scaling() {
        let (fso, _) = links(20.0);
        let z = simulate_fso_rate_stats(&fso.with_power(0.0), 0.03, 1000, 1).unwrap();
        assert_eq!((z.mean, z.variance), (0.0, 0.0));
        let a = simulate_fso_rate_stats(&fso, 0.03, 5000, 4).unwrap();
        let b = simulate_fso_rate_stats(&fso, 0.06, 5000, 4).unwrap();
        assert_eq!(b.mean, 2.0 * a.mean);
        assert!(simulate_fso_rate_stats(&fso, 0.03, 999, 4).is_err());
    }

    #[test]
    fn anderson_darling_separates_normal_and_exponential() {
        use rand_distr::{Distribution, Exp, StandardNormal};
        let mut rng = stream_rng(5, 0);
        let mut normal: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut skewed: Vec<f64> = (0..2000)
            .map(|_| Exp::new(1.0).unwrap().sample(&mut rng))
            .collect();
        assert!(anderson_darling_normal(&mut normal).unwrap().passed);
        assert!(!anderson_darling_normal(&mut skewed).unwrap().passed);
    }
}
