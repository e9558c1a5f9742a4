//! Scalar special functions and the FSO channel-gain density.
//!
//! The FSO gain is modelled through its composite construction
//! `G = mu_r * (Y / h)^r` with `Y = X_a * X_b * h_p`, where `X_a`, `X_b` are
//! unit-mean Gamma variates and `h_p` is the pointing loss with density
//! `xi^2 t^(xi^2 - 1)` on `(0, 1]`. In the log domain `ln Y = L - E` with
//! `L = ln(X_a X_b)` (closed form through `K_{alpha-beta}`) and
//! `E ~ Exp(xi^2)`, so every density value or expectation reduces to a
//! one-dimensional integral against the exponential pointing-loss law.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quad::{self, Tolerance};

/// Upper-tail probability of the standard normal distribution.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// Arguments below this use the power series, above it the asymptotic expansion.
pub const I0_SWITCHOVER: f64 = 25.0;

/// `e^{-x} I_0(x)` by the power series (exact up to rounding for any `x >= 0`).
pub fn bessel_i0_scaled_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < f64::EPSILON * 1e-2 * sum {
            break;
        }
        k += 1.0;
    }
    sum * (-x).exp()
}

/// `e^{-x} I_0(x)` by the large-argument asymptotic expansion, truncated at its smallest term.
pub fn bessel_i0_scaled_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term < f64::EPSILON * 1e-2 * sum {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Exponentially scaled modified Bessel function `e^{-|x|} I_0(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x < I0_SWITCHOVER {
        bessel_i0_scaled_series(x)
    } else {
        bessel_i0_scaled_asymptotic(x)
    }
}

/// Modified Bessel function of the first kind, order zero. Overflows to
/// infinity only past `x ~ 713`; use [`bessel_i0_scaled`] beyond that.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x > 700.0 {
        // Split the exponential so the product does not overflow early.
        return bessel_i0_scaled(x) * (0.5 * x).exp() * (0.5 * x).exp();
    }
    bessel_i0_scaled(x) * x.exp()
}

// Taylor coefficients of 1/Gamma(1+z) about z = 0.
#[allow(clippy::excessive_precision)]
const RGAMMA1P: [f64; 27] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
];

/// Temme's auxiliary gamma quantities for `|mu| <= 1/2`:
/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let m2 = mu * mu;
    let mut even = 0.0;
    let mut odd = 0.0;
    let mut pow = 1.0;
    for pair in RGAMMA1P.chunks(2) {
        even += pair[0] * pow;
        if let Some(c) = pair.get(1) {
            odd += c * pow;
        }
        pow *= m2;
    }
    let gam1 = -odd;
    let gam2 = even;
    (gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1)
}

/// `ln K_nu(x)` for real order `nu` and `x > 0` (Temme series below 2,
/// Steed's continued fraction above, forward recurrence in the order).
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let mu2 = mu * mu;
    const EPS: f64 = 1e-16;
    const MAXIT: usize = 100_000;

    // (K_mu, K_{mu+1}) carried as value * e^{ln_scale}
    let (mut k0, mut k1, mut ln_scale);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        k0 = sum;
        k1 = sum1 * 2.0 / x;
        ln_scale = 0.0;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        k0 = (PI / (2.0 * x)).sqrt() / s;
        k1 = k0 * (mu + x + 0.5 - h) / x;
        ln_scale = -x;
    }

    let mut i = 1.0;
    while i <= nl {
        let kt = (mu + i) * (2.0 / x) * k1 + k0;
        k0 = k1;
        k1 = kt;
        if k1 > 1e250 {
            k0 *= 1e-250;
            k1 *= 1e-250;
            ln_scale += 250.0 * std::f64::consts::LN_10;
        }
        i += 1.0;
    }
    k0.ln() + ln_scale
}

/// `sum_{i>=0} P(Outer = i) * P(Inner <= i - offset)` for independent
/// Poisson variables; every term is nonnegative so the result keeps full
/// relative accuracy in either tail.
fn poisson_race(outer: f64, inner: f64, offset: usize) -> f64 {
    let ln_outer = outer.ln();
    let ln_inner = inner.ln();
    let ln_pmf = |mean: f64, ln_mean: f64, i: usize| -> f64 {
        if i == 0 {
            -mean
        } else {
            -mean + i as f64 * ln_mean - ln_gamma(i as f64 + 1.0)
        }
    };

    let mut inner_cdf = 0.0;
    let mut inner_next = 0usize;
    let mut sum = 0.0;
    let mut i = 0usize;
    loop {
        // bring the inner CDF up to index i - offset
        if i >= offset {
            let target = i - offset;
            while inner_next <= target {
                inner_cdf += ln_pmf(inner, ln_inner, inner_next).exp();
                inner_next += 1;
            }
        }
        let p = ln_pmf(outer, ln_outer, i).exp();
        sum += p * inner_cdf.min(1.0);

        let fi = i as f64;
        if fi > outer + 1.0 {
            let ratio = outer / (fi + 1.0);
            let tail = p * ratio / (1.0 - ratio);
            if tail <= 1e-17 * sum || (p == 0.0 && sum > 0.0) || tail < 1e-320 {
                break;
            }
        }
        i += 1;
    }
    sum
}

/// First-order Marcum Q function `Q_1(a, b)`: the probability that a Rician
/// amplitude with noncentrality `a` and unit scale exceeds `b`.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    let a = a.max(0.0);
    let b = b.max(0.0);
    if b == 0.0 {
        return 1.0;
    }
    if a == 0.0 {
        return (-0.5 * b * b).exp();
    }
    let gap = b - a;
    if gap > 0.0 && 0.5 * gap * gap > 745.0 {
        return 0.0;
    }
    if gap < 0.0 && 0.5 * gap * gap > 745.0 {
        return 1.0;
    }
    poisson_race(0.5 * a * a, 0.5 * b * b, 0).clamp(0.0, 1.0)
}

/// `1 - Q_1(a, b)`, i.e. the Rician amplitude CDF, computed directly so small
/// values keep their relative accuracy.
pub fn marcum_q1_complement(a: f64, b: f64) -> f64 {
    let a = a.max(0.0);
    let b = b.max(0.0);
    if b == 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return -(-0.5 * b * b).exp_m1();
    }
    let gap = b - a;
    if gap > 0.0 && 0.5 * gap * gap > 745.0 {
        return 1.0;
    }
    if gap < 0.0 && 0.5 * gap * gap > 745.0 {
        return 0.0;
    }
    poisson_race(0.5 * b * b, 0.5 * a * a, 1).clamp(0.0, 1.0)
}

/// FSO detection technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    /// Coherent detection, `r = 1`.
    Heterodyne,
    /// Intensity modulation with direct detection, `r = 2`.
    ImDd,
}

impl Detection {
    pub fn r(self) -> u32 {
        match self {
            Detection::Heterodyne => 1,
            Detection::ImDd => 2,
        }
    }

    pub fn from_r(r: u32) -> Result<Self> {
        match r {
            1 => Ok(Detection::Heterodyne),
            2 => Ok(Detection::ImDd),
            other => Err(param(format!(
                "detection type r must be 1 or 2, got {other}"
            ))),
        }
    }

    /// Rate constant `c_r` in `log(1 + c_r * snr)`.
    pub fn rate_constant(self) -> f64 {
        match self {
            Detection::Heterodyne => 1.0,
            Detection::ImDd => std::f64::consts::E / (2.0 * PI),
        }
    }
}

/// Parameters of the Gamma-Gamma pointing-error gain density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsoGainDensityParams {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub detection: Detection,
    /// Average electrical SNR (linear).
    pub mu_r: f64,
}

impl FsoGainDensityParams {
    pub fn new(alpha: f64, beta: f64, xi: f64, detection: Detection, mu_r: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            xi,
            detection,
            mu_r,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from the mean gain `E[G]`, deriving `mu_r` for the detection mode.
    pub fn from_mean_gain(
        alpha: f64,
        beta: f64,
        xi: f64,
        detection: Detection,
        mean_gain: f64,
    ) -> Result<Self> {
        if !(mean_gain > 0.0 && mean_gain.is_finite()) {
            return Err(param(format!(
                "mean gain must be positive, got {mean_gain}"
            )));
        }
        let mu_r = match detection {
            Detection::Heterodyne => mean_gain,
            Detection::ImDd => {
                let x2 = xi * xi;
                mean_gain * alpha * beta * x2 * (x2 + 2.0)
                    / ((alpha + 1.0) * (beta + 1.0) * (x2 + 1.0) * (x2 + 1.0))
            }
        };
        Self::new(alpha, beta, xi, detection, mu_r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("xi", self.xi),
            ("mu_r", self.mu_r),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn r(&self) -> u32 {
        self.detection.r()
    }

    /// `h = xi^2 / (xi^2 + 1)`.
    pub fn h(&self) -> f64 {
        let x2 = self.xi * self.xi;
        x2 / (x2 + 1.0)
    }

    /// `ln G` for a given `ln Y`.
    pub fn ln_gain_from_ln_y(&self, ln_y: f64) -> f64 {
        self.mu_r.ln() + self.r() as f64 * (ln_y - self.h().ln())
    }

    /// `ln Y` for a given gain.
    pub fn ln_y_from_gain(&self, x: f64) -> f64 {
        self.h().ln() + (x.ln() - self.mu_r.ln()) / self.r() as f64
    }
}

/// Precomputed evaluator for the FSO gain density.
#[derive(Debug, Clone)]
pub struct FsoGainDensity {
    params: FsoGainDensityParams,
    ln_norm: f64,
    sqrt_ab: f64,
    half_sum: f64,
    order: f64,
    xi2: f64,
    /// Effective support of `L = ln(X_a X_b)`.
    l_lo: f64,
    l_hi: f64,
    l_mode: f64,
    l_scale: f64,
}

impl FsoGainDensity {
    pub fn new(params: FsoGainDensityParams) -> Result<Self> {
        params.validate()?;
        let (a, b) = (params.alpha, params.beta);
        let ab = a * b;
        let half_sum = 0.5 * (a + b);
        let mut d = Self {
            params,
            ln_norm: LN_2 + half_sum * ab.ln() - ln_gamma(a) - ln_gamma(b),
            sqrt_ab: ab.sqrt(),
            half_sum,
            order: a - b,
            xi2: params.xi * params.xi,
            l_lo: 0.0,
            l_hi: 0.0,
            l_mode: 0.0,
            l_scale: (1.0 / a + 1.0 / b).sqrt(),
        };
        d.locate_support();
        Ok(d)
    }

    pub fn params(&self) -> &FsoGainDensityParams {
        &self.params
    }

    /// Log-density of `L = ln(X_a X_b)`.
    pub fn ln_product_log_density(&self, l: f64) -> f64 {
        let z = 2.0 * self.sqrt_ab * (0.5 * l).exp();
        self.ln_norm + self.half_sum * l + ln_bessel_k(self.order, z)
    }

    fn locate_support(&mut self) {
        let step = 0.25 * self.l_scale;
        let start = -0.5 * (1.0 / self.params.alpha + 1.0 / self.params.beta);
        let mut best = (start, self.ln_product_log_density(start));
        // climb to the mode
        for dir in [1.0, -1.0] {
            let mut l = best.0;
            loop {
                let next = l + dir * step;
                let v = self.ln_product_log_density(next);
                if v > best.1 {
                    best = (next, v);
                    l = next;
                } else {
                    break;
                }
            }
        }
        let (mode, peak) = best;
        let cutoff = peak - 60.0;
        let mut lo = mode;
        while self.ln_product_log_density(lo) > cutoff {
            lo -= step.max(0.05);
        }
        let mut hi = mode;
        while self.ln_product_log_density(hi) > cutoff {
            hi += step.max(0.05);
        }
        self.l_mode = mode;
        self.l_lo = lo;
        self.l_hi = hi;
    }

    /// Density of `S = ln Y = L - E`, `E ~ Exp(xi^2)`.
    pub fn log_y_density(&self, s: f64) -> Result<f64> {
        if s >= self.l_hi {
            return Ok(0.0);
        }
        let xi2 = self.xi2;
        // u = v / xi^2 with v ~ Exp(1); L = s + u must stay below l_hi.
        let v_max = (xi2 * (self.l_hi - s)).min(46.0);
        let mut points = Vec::new();
        for k in -6..=6 {
            let v = xi2 * (self.l_mode + k as f64 * self.l_scale - s);
            points.push(v);
        }
        let f = |v: f64| {
            let l = s + v / xi2;
            if l < self.l_lo {
                return 0.0;
            }
            (self.ln_product_log_density(l) - v).exp()
        };
        let tol = Tolerance::new(1e-14, 1e-10);
        quad::integrate_points(f, 0.0, v_max, &points, tol)
    }

    /// Density of the channel gain at `x > 0`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("gain density needs x > 0, got {x}")));
        }
        let s = self.params.ln_y_from_gain(x);
        Ok(self.log_y_density(s)? / (self.params.r() as f64 * x))
    }

    /// `E[g(ln Y)]` for a vector-valued `g`. `knee` marks where `g` changes
    /// character (used as a quadrature breakpoint).
    pub fn expect_ln_y<const N: usize, F>(
        &self,
        g: F,
        knee: Option<f64>,
        tol: Tolerance,
    ) -> Result<[f64; N]>
    where
        F: Fn(f64) -> [f64; N],
    {
        let xi2 = self.xi2;
        let inner_tol = Tolerance::new(tol.abs * 1e-3, tol.rel * 1e-2);
        let failure = std::cell::Cell::new(None);
        let outer = |l: f64| -> [f64; N] {
            let w = self.ln_product_log_density(l).exp();
            if w == 0.0 {
                return [0.0; N];
            }
            // E over the pointing loss: v = xi^2 * u ~ Exp(1)
            let pts: Vec<f64> = knee.map(|k| vec![xi2 * (l - k)]).unwrap_or_default();
            let inner = |v: f64| {
                let mut r = g(l - v / xi2);
                let wt = (-v).exp();
                for c in r.iter_mut() {
                    *c *= wt;
                }
                r
            };
            match quad::integrate_vec_points(inner, 0.0, 46.0, &pts, inner_tol) {
                Ok(est) => {
                    let mut r = est.value;
                    for c in r.iter_mut() {
                        *c *= w;
                    }
                    r
                }
                Err(e) => {
                    failure.set(Some(e));
                    [0.0; N]
                }
            }
        };
        let mut pts = vec![self.l_mode];
        for k in 1..=4 {
            pts.push(self.l_mode - k as f64 * self.l_scale);
            pts.push(self.l_mode + k as f64 * self.l_scale);
        }
        let est = quad::integrate_vec_points(outer, self.l_lo, self.l_hi, &pts, tol)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(est.value)
    }
}

/// Density of the FSO channel gain at `x` (composite-integral route).
pub fn fso_gain_pdf(x: f64, p: &FsoGainDensityParams) -> Result<f64> {
    FsoGainDensity::new(*p)?.pdf(x)
}

/// Minimum pole separation accepted by the residue-series route.
pub const POLE_SEPARATION: f64 = 1e-3;

/// The `G^{3,0}_{1,3}(z | xi^2+1; xi^2, alpha, beta)` function by residue
/// summation. Fails when two of `xi^2, alpha, beta` differ by less than
/// [`POLE_SEPARATION`] from an integer, where the poles merge.
pub fn meijer_g_pointing(z: f64, xi2: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!(
            "Meijer-G argument must be positive, got {z}"
        )));
    }
    let poles = [xi2, alpha, beta];
    for i in 0..3 {
        for j in (i + 1)..3 {
            let d = poles[i] - poles[j];
            if (d - d.round()).abs() < POLE_SEPARATION {
                return Err(param(format!(
                    "poles {} and {} too close for the residue series",
                    poles[i], poles[j]
                )));
            }
        }
    }
    let ln_z = z.ln();
    // simple pole at s = xi^2
    let mut total = libm::tgamma(alpha - xi2) * libm::tgamma(beta - xi2) * (xi2 * ln_z).exp();
    // poles at alpha + k and beta + k
    for (b, other) in [(alpha, beta), (beta, alpha)] {
        let c = other - b;
        let mut term = libm::tgamma(c) * (b * ln_z).exp();
        let mut k = 0.0;
        let mut sum = 0.0;
        loop {
            let t = term / (xi2 - b - k);
            sum += t;
            if k > 10.0 && t.abs() < 1e-17 * sum.abs() {
                break;
            }
            if k > 500.0 {
                break;
            }
            k += 1.0;
            // (-1)^k / k! * Gamma(c - k) * z^k, advanced one step
            term *= -z / (k * (c - k));
        }
        total += sum;
    }
    Ok(total)
}

/// Gain density evaluated through the residue series of the Meijer-G form.
pub fn fso_gain_pdf_series(x: f64, p: &FsoGainDensityParams) -> Result<f64> {
    p.validate()?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("gain density needs x > 0, got {x}")));
    }
    let r = p.r() as f64;
    let xi2 = p.xi * p.xi;
    let z = p.h() * p.alpha * p.beta * (x / p.mu_r).powf(1.0 / r);
    let g = meijer_g_pointing(z, xi2, p.alpha, p.beta)?;
    let ln_pref = xi2.ln() - r.ln() - x.ln() - ln_gamma(p.alpha) - ln_gamma(p.beta);
    Ok(ln_pref.exp() * g)
}
