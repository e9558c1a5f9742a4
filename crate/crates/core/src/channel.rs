//! Link parameters, power-amplifier model and channel-gain samplers.
//!
//! Noise powers of both links are normalised to one, so a transmit power
//! times a channel gain is directly the received SNR.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::special::{bessel_i0_scaled, marcum_q1_complement, Detection, FsoGainDensityParams};

/// FSO link: turbulence, pointing error, detection mode and optical power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsoLinkParams {
    pub density: FsoGainDensityParams,
    /// `E[G_FSO]`.
    pub mean_gain: f64,
    /// Optical transmit power (linear, noise normalised).
    pub p_fso: f64,
}

impl FsoLinkParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        xi: f64,
        detection: Detection,
        mean_gain: f64,
        p_fso: f64,
    ) -> Result<Self> {
        let density = FsoGainDensityParams::from_mean_gain(alpha, beta, xi, detection, mean_gain)?;
        let link = Self {
            density,
            mean_gain,
            p_fso,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        if !(self.mean_gain > 0.0 && self.mean_gain.is_finite()) {
            return Err(param(format!(
                "mean gain must be positive, got {}",
                self.mean_gain
            )));
        }
        if !(self.p_fso >= 0.0 && self.p_fso.is_finite()) {
            return Err(param(format!(
                "FSO power must be nonnegative, got {}",
                self.p_fso
            )));
        }
        Ok(())
    }

    pub fn with_power(mut self, p_fso: f64) -> Self {
        self.p_fso = p_fso;
        self
    }

    pub fn detection(&self) -> Detection {
        self.density.detection
    }

    /// `c_r`: 1 for heterodyne, `e / (2 pi)` for IM/DD.
    pub fn rate_constant(&self) -> f64 {
        self.density.detection.rate_constant()
    }

    /// Effective SNR scale `c_r * P_FSO` multiplying the gain inside the log.
    pub fn snr_scale(&self) -> f64 {
        self.rate_constant() * self.p_fso
    }
}

/// RF link: Rician fading and power-amplifier parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfLinkParams {
    pub nu: f64,
    pub omega: f64,
    /// Maximum PA efficiency.
    pub epsilon: f64,
    /// PA class parameter.
    pub vartheta: f64,
    /// Maximum PA output power; `f64::INFINITY` for an ideal amplifier.
    pub p_max: f64,
    /// Power consumed by the PA.
    pub p_cons: f64,
}

/// Output of the PA model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaOutput {
    pub power: f64,
    /// The unclamped formula exceeded `p_max`.
    pub saturated: bool,
}

impl RfLinkParams {
    /// Ideal amplifier: `epsilon = 1`, `vartheta = 0`, unbounded output.
    pub fn ideal(nu: f64, omega: f64, p_cons: f64) -> Self {
        Self {
            nu,
            omega,
            epsilon: 1.0,
            vartheta: 0.0,
            p_max: f64::INFINITY,
            p_cons,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(param(format!("nu must be nonnegative, got {}", self.nu)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(param(format!("omega must be positive, got {}", self.omega)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(param(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.vartheta >= 0.0 && self.vartheta < 1.0) {
            return Err(param(format!(
                "vartheta must lie in [0, 1), got {}",
                self.vartheta
            )));
        }
        if !(self.p_max > 0.0) {
            return Err(param(format!("p_max must be positive, got {}", self.p_max)));
        }
        if !(self.p_cons >= 0.0 && self.p_cons.is_finite()) {
            return Err(param(format!(
                "p_cons must be nonnegative, got {}",
                self.p_cons
            )));
        }
        Ok(())
    }

    pub fn with_consumed_power(mut self, p_cons: f64) -> Self {
        self.p_cons = p_cons;
        self
    }

    /// `E[G_RF] = nu^2 + 2 omega^2`.
    pub fn mean_gain(&self) -> f64 {
        self.nu * self.nu + 2.0 * self.omega * self.omega
    }

    /// Transmit power from the PA efficiency model, clamped at `p_max`.
    pub fn pa_output(&self) -> Result<PaOutput> {
        self.validate()?;
        if self.p_cons == 0.0 || self.epsilon == 0.0 {
            return Ok(PaOutput {
                power: 0.0,
                saturated: false,
            });
        }
        let ln_max = if self.vartheta == 0.0 {
            0.0
        } else {
            self.p_max.ln()
        };
        let ln_p =
            (self.epsilon.ln() + self.p_cons.ln() - self.vartheta * ln_max) / (1.0 - self.vartheta);
        let p = ln_p.exp();
        if p > self.p_max {
            Ok(PaOutput {
                power: self.p_max,
                saturated: true,
            })
        } else {
            Ok(PaOutput {
                power: p,
                saturated: false,
            })
        }
    }

    /// Effective PA efficiency `epsilon * (P_RF / P_max)^vartheta`.
    pub fn effective_efficiency(&self) -> Result<f64> {
        let out = self.pa_output()?;
        if self.vartheta == 0.0 {
            return Ok(self.epsilon);
        }
        Ok(self.epsilon * (out.power / self.p_max).powf(self.vartheta))
    }
}

/// RF transmit power produced by the PA for the configured consumed power.
pub fn pa_output_power(rf: &RfLinkParams) -> Result<f64> {
    rf.pa_output().map(|o| o.power)
}

/// Total transmit power split between the two links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemPower {
    pub snr_db: f64,
    /// Fraction of the total power given to the FSO link.
    pub split: f64,
}

impl SystemPower {
    pub fn new(snr_db: f64) -> Self {
        Self { snr_db, split: 0.5 }
    }

    pub fn with_split(snr_db: f64, split: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&split) {
            return Err(param(format!(
                "power split must lie in [0, 1], got {split}"
            )));
        }
        Ok(Self { snr_db, split })
    }

    pub fn total(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    pub fn p_fso(&self) -> f64 {
        self.split * self.total()
    }

    pub fn p_cons(&self) -> f64 {
        (1.0 - self.split) * self.total()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Random stream for `(seed, stream)`. ChaCha is counter based, so the
/// stream for a given trial does not depend on which worker draws it.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws FSO channel gains by the composite construction.
#[derive(Debug, Clone)]
pub struct FsoGainSampler {
    gamma_a: Gamma<f64>,
    gamma_b: Gamma<f64>,
    inv_xi2: f64,
    inv_h: f64,
    mu_r: f64,
    r: i32,
}

impl FsoGainSampler {
    pub fn new(p: &FsoGainDensityParams) -> Result<Self> {
        p.validate()?;
        let gamma = |shape: f64| {
            Gamma::new(shape, 1.0 / shape).map_err(|e| param(format!("gamma shape {shape}: {e}")))
        };
        Ok(Self {
            gamma_a: gamma(p.alpha)?,
            gamma_b: gamma(p.beta)?,
            inv_xi2: 1.0 / (p.xi * p.xi),
            inv_h: 1.0 / p.h(),
            mu_r: p.mu_r,
            r: p.r() as i32,
        })
    }

    /// One gain; `u` in `(0, 1]` drives the pointing loss `h_p = u^(1/xi^2)`.
    pub fn sample_with_pointing<R: Rng + ?Sized>(&self, rng: &mut R, u: f64) -> f64 {
        let xa = self.gamma_a.sample(rng);
        let xb = self.gamma_b.sample(rng);
        let hp = u.powf(self.inv_xi2);
        let y = xa * xb * hp;
        self.mu_r * (y * self.inv_h).powi(self.r)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        self.sample_with_pointing(rng, u)
    }
}

/// One draw of the FSO channel gain.
pub fn sample_fso_gain<R: Rng + ?Sized>(fso: &FsoLinkParams, rng: &mut R) -> Result<f64> {
    Ok(FsoGainSampler::new(&fso.density)?.sample(rng))
}

/// One draw of the Rician RF channel gain `|h|^2`.
pub fn sample_rf_gain<R: Rng + ?Sized>(rf: &RfLinkParams, rng: &mut R) -> f64 {
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let re = rf.nu + rf.omega * z1;
    let im = rf.omega * z2;
    re * re + im * im
}

/// Rician amplitude density.
pub fn rician_amplitude_pdf(u: f64, rf: &RfLinkParams) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let w2 = rf.omega * rf.omega;
    let d = u - rf.nu;
    u / w2 * (-d * d / (2.0 * w2)).exp() * bessel_i0_scaled(u * rf.nu / w2)
}

/// `Pr(sqrt(G_RF) <= x) = 1 - Q_1(nu / omega, x / omega)`.
pub fn rician_gain_cdf(x: f64, rf: &RfLinkParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    marcum_q1_complement(rf.nu / rf.omega, x / rf.omega)
}

/// `Pr(G_RF <= g)`.
pub fn rician_power_cdf(g: f64, rf: &RfLinkParams) -> f64 {
    if g <= 0.0 {
        return 0.0;
    }
    rician_gain_cdf(g.sqrt(), rf)
}
