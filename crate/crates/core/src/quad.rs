//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature.
//!
//! The integrator keeps every subinterval in a max-heap keyed on its local
//! error estimate and bisects the worst one until the summed error falls
//! below `max(abs, rel * |I|)`. Integrands may be vector valued (`[f64; N]`),
//! which lets several moments share one set of function evaluations; the
//! tolerance must then hold for every component.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute/relative error targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }
}

/// Default targets: absolute 1e-10, relative 1e-8.
pub const DEFAULT_TOL: Tolerance = Tolerance::new(1e-10, 1e-8);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub abs_err: [f64; N],
    pub intervals: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: [f64; N],
    worst: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.worst == other.worst
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.worst.total_cmp(&other.worst)
    }
}

fn kronrod21<const N: usize, F>(f: &F, a: f64, b: f64) -> Segment<N>
where
    F: Fn(f64) -> [f64; N],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let mut abs_sum = [0.0; N];
    for i in 0..N {
        kron[i] = fc[i] * WGK[10];
        abs_sum[i] = (fc[i] * WGK[10]).abs();
    }

    let mut samples = [[0.0; N]; 21];
    samples[10] = fc;
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for i in 0..N {
            kron[i] += WGK[j] * (f1[i] + f2[i]);
            abs_sum[i] += WGK[j] * (f1[i].abs() + f2[i].abs());
            // Odd Kronrod abscissae are the 10-point Gauss nodes.
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * (f1[i] + f2[i]);
            }
        }
        samples[j] = f1;
        samples[20 - j] = f2;
    }

    let mut value = [0.0; N];
    let mut err = [0.0; N];
    for i in 0..N {
        let mean = 0.5 * kron[i];
        let mut asc = WGK[10] * (fc[i] - mean).abs();
        for j in 0..10 {
            asc += WGK[j] * ((samples[j][i] - mean).abs() + (samples[20 - j][i] - mean).abs());
        }
        let res_abs = abs_sum[i] * half.abs();
        let res_asc = asc * half.abs();
        let mut e = ((kron[i] - gauss[i]) * half).abs();
        if res_asc != 0.0 && e != 0.0 {
            e = res_asc * (200.0 * e / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            e = e.max(50.0 * f64::EPSILON * res_abs);
        }
        value[i] = kron[i] * half;
        err[i] = e;
    }
    let worst = err.iter().cloned().fold(0.0, f64::max);
    Segment {
        a,
        b,
        value,
        err,
        worst,
    }
}

fn converged<const N: usize>(value: &[f64; N], err: &[f64; N], tol: &Tolerance) -> bool {
    value
        .iter()
        .zip(err)
        .all(|(v, e)| *e <= tol.abs.max(tol.rel * v.abs()))
}

/// Integrates a vector-valued `f` over `[a, b]`, splitting first at every
/// breakpoint in `points` that lies strictly inside the interval.
pub fn integrate_vec_points<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    points: &[f64],
    tol: Tolerance,
) -> Result<Estimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate {
            value: [0.0; N],
            abs_err: [0.0; N],
            intervals: 0,
        });
    }
    if a > b {
        let mut est = integrate_vec_points(f, b, a, points, tol)?;
        for v in est.value.iter_mut() {
            *v = -*v;
        }
        return Ok(est);
    }

    let mut cuts: Vec<f64> = points
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        heap.push(kronrod21(&f, lo, hi));
        lo = hi;
    }

    loop {
        let mut value = [0.0; N];
        let mut err = [0.0; N];
        for seg in heap.iter() {
            for i in 0..N {
                value[i] += seg.value[i];
                err[i] += seg.err[i];
            }
        }
        if converged(&value, &err, &tol) {
            return Ok(Estimate {
                value,
                abs_err: err,
                intervals: heap.len(),
            });
        }

        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let too_small = mid <= worst.a || mid >= worst.b;
        if heap.len() + 2 > tol.max_intervals || too_small {
            let (i, _) = err
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .expect("N >= 1");
            return Err(Error::Convergence {
                value: value[i],
                abs_err: err[i],
            });
        }
        heap.push(kronrod21(&f, worst.a, mid));
        heap.push(kronrod21(&f, mid, worst.b));
    }
}

pub fn integrate_vec<const N: usize, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    integrate_vec_points(f, a, b, &[], tol)
}

/// Scalar integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_vec_points(|x| [f(x)], a, b, &[], tol).map(|e| e.value[0])
}

/// Scalar integral with interior breakpoints.
pub fn integrate_points<F>(f: F, a: f64, b: f64, points: &[f64], tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_vec_points(|x| [f(x)], a, b, points, tol).map(|e| e.value[0])
}

/// Integral of `f` over `[a, inf)` using the map `x = a + t / (1 - t)`, `t in [0, 1)`.
pub fn integrate_semi_infinite<F>(f: F, a: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let om = 1.0 - t;
        let x = a + t / om;
        let v = f(x) / (om * om);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, DEFAULT_TOL).unwrap();
        // [x^3 - x^2/2 + 2x] from -1 to 2
        let exact = (8.0 - 2.0 + 4.0) - (-1.0 - 0.5 - 2.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate(f64::sin, 0.0, 2.0, DEFAULT_TOL).unwrap();
        let rev = integrate(f64::sin, 2.0, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(fwd, -rev);
    }

    #[test]
    fn endpoint_singularity() {
        // integral of x^-0.5 over [0,1] is 2
        let v = integrate(
            |x| if x > 0.0 { x.powf(-0.5) } else { 0.0 },
            0.0,
            1.0,
            DEFAULT_TOL,
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn semi_infinite_exponential() {
        let v = integrate_semi_infinite(|x| (-x).exp(), 0.0, DEFAULT_TOL).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let g = integrate_semi_infinite(|x| (-x * x / 2.0).exp(), 0.0, DEFAULT_TOL).unwrap();
        assert!((g - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn breakpoints_help_with_kinks() {
        let v = integrate_points(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], DEFAULT_TOL).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn vector_components_share_evaluations() {
        let est = integrate_vec(|x| [x, x * x, 1.0], 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert!((est.value[0] - 0.5).abs() < 1e-14);
        assert!((est.value[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((est.value[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let tol = Tolerance {
            abs: 1e-300,
            rel: 0.0,
            max_intervals: 3,
        };
        match integrate(|x| (50.0 * x).sin(), 0.0, 10.0, tol) {
            Err(Error::Convergence { abs_err, .. }) => assert!(abs_err > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
