//! Samplers against their densities, CDFs and known moments.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rffso_core::channel::{sample_rf_gain, stream_rng, FsoGainSampler, RfLinkParams};
use rffso_core::quad::{integrate_points, Tolerance};
use rffso_core::special::{marcum_q1, Detection, FsoGainDensity, FsoGainDensityParams};

const ALPHA: f64 = 4.3939;
const BETA: f64 = 2.5636;

fn fso(xi: f64, detection: Detection) -> FsoGainDensityParams {
    FsoGainDensityParams::from_mean_gain(ALPHA, BETA, xi, detection, 1.0).unwrap()
}

fn rf() -> RfLinkParams {
    RfLinkParams::ideal(0.0995, 0.7036, 1.0)
}

/// Mean and standard error of the mean.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn draw_fso(p: &FsoGainDensityParams, n: usize, seed: u64) -> Vec<f64> {
    let s = FsoGainSampler::new(p).unwrap();
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| s.sample(&mut rng)).collect()
}

#[test]
fn fso_sample_mean_heterodyne() {
    let xs = draw_fso(&fso(0.9, Detection::Heterodyne), 10_000_000, 1);
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn fso_sample_mean_im_dd() {
    let xs = draw_fso(&fso(1.2, Detection::ImDd), 2_000_000, 2);
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn fso_sample_variance_matches_density_moment() {
    let p = fso(0.9, Detection::Heterodyne);
    let d = FsoGainDensity::new(p).unwrap();
    // Second moment from the log-domain density: E[G^2] = E[exp(2 ln G)].
    let [g2] = d
        .expect_ln_y(
            |s| [(2.0 * p.ln_gain_from_ln_y(s)).exp()],
            None,
            Tolerance::new(1e-12, 1e-10),
        )
        .unwrap();
    let want = g2 - 1.0;
    let xs = draw_fso(&p, 10_000_000, 3);
    let (m, _) = mean_se(&xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let (var, se) = mean_se(&dev);
    assert!(
        (var - want).abs() < 3.0 * se,
        "var {var} want {want} se {se}"
    );
}

/// `Pr(G <= q)` by integrating the log-domain density up to `ln Y(q)`.
fn cdf_from_density(d: &FsoGainDensity, q: f64) -> f64 {
    let p = d.params();
    let sq = p.ln_y_from_gain(q);
    let xi2 = p.xi * p.xi;
    let lo = sq.min(0.0) - 60.0 / xi2;
    let tol = Tolerance::new(1e-12, 1e-10);
    let pts: Vec<f64> = (1..8)
        .map(|k| sq - k as f64 * 0.5)
        .filter(|&s| s > lo)
        .collect();
    integrate_points(|s| d.log_y_density(s).unwrap(), lo, sq, &pts, tol).unwrap()
}

#[test]
fn fso_ecdf_matches_density_integral_at_deciles() {
    for (xi, det) in [(0.9, Detection::Heterodyne), (1.2, Detection::ImDd)] {
        let p = fso(xi, det);
        let d = FsoGainDensity::new(p).unwrap();
        let mut xs = draw_fso(&p, 1_000_000, 4);
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        for k in 1..=9 {
            let q = xs[(k as f64 * 0.1 * n) as usize];
            let emp = xs.partition_point(|&x| x <= q) as f64 / n;
            let want = cdf_from_density(&d, q);
            let se = (want * (1.0 - want) / n).sqrt();
            assert!(
                (emp - want).abs() < 3.0 * se + 1.0 / n,
                "xi={xi} q={q}: {emp} vs {want}"
            );
        }
    }
}

#[test]
fn negligible_pointing_loss_has_unit_mean() {
    let inv_xi2 = 1.0 / (1e3f64 * 1e3);
    let mut rng = stream_rng(5, 0);
    let n = 1_000_000;
    let mean = (0..n)
        .map(|_| (1.0 - rng.random::<f64>()).powf(inv_xi2))
        .sum::<f64>()
        / n as f64;
    assert!((mean - 1.0).abs() < 1e-3, "{mean}");
}

#[test]
fn gamma_sampler_moments() {
    let mut rng = stream_rng(6, 0);
    for shape in [ALPHA, BETA] {
        let g = Gamma::new(shape, 1.0 / shape).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| g.sample(&mut rng)).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 1.0).abs() < 3.0 * se, "shape {shape}: mean {m}");
        let dev: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
        let (v, vse) = mean_se(&dev);
        assert!(
            (v - 1.0 / shape).abs() < 3.0 * vse,
            "shape {shape}: var {v}"
        );
    }
}

#[test]
fn rician_sample_mean_is_unit() {
    let r = rf();
    let mut rng = stream_rng(7, 0);
    let n = 10_000_000;
    let mean = (0..n).map(|_| sample_rf_gain(&r, &mut rng)).sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 0.002, "{mean}");
    assert!((r.mean_gain() - 1.0).abs() < 1e-3);
}

#[test]
fn rayleigh_amplitude_tail() {
    let r = RfLinkParams::ideal(0.0, 0.7036, 1.0);
    let mut rng = stream_rng(8, 0);
    let n = 1_000_000;
    let amps: Vec<f64> = (0..n)
        .map(|_| sample_rf_gain(&r, &mut rng).sqrt())
        .collect();
    for b in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let emp = amps.iter().filter(|&&a| a > b).count() as f64 / n as f64;
        let want = (-b * b / (2.0 * r.omega * r.omega)).exp();
        let se = (want * (1.0 - want) / n as f64).sqrt();
        assert!((emp - want).abs() < 3.0 * se, "b={b}: {emp} vs {want}");
    }
}

#[test]
fn rician_amplitude_tail_matches_marcum() {
    let r = rf();
    let mut rng = stream_rng(9, 0);
    let n = 1_000_000;
    let amps: Vec<f64> = (0..n)
        .map(|_| sample_rf_gain(&r, &mut rng).sqrt())
        .collect();
    for i in 1..=10 {
        let x = 0.25 * i as f64;
        let emp = amps.iter().filter(|&&a| a > x).count() as f64 / n as f64;
        let want = marcum_q1(r.nu / r.omega, x / r.omega);
        let se = (want * (1.0 - want) / n as f64).sqrt();
        assert!(
            (emp - want).abs() < 3.0 * se + 1e-6,
            "x={x}: {emp} vs {want}"
        );
    }
}

#[test]
fn rician_cdf_at_one_matches_samples() {
    let r = rf();
    let mut rng = stream_rng(10, 0);
    let n = 10_000_000;
    let below = (0..n)
        .filter(|_| sample_rf_gain(&r, &mut rng) <= 1.0)
        .count() as f64
        / n as f64;
    let want = rffso_core::channel::rician_gain_cdf(1.0, &r);
    let se = (want * (1.0 - want) / n as f64).sqrt();
    assert!((below - want).abs() < 3.0 * se, "{below} vs {want}");
    assert!((rffso_core::channel::rician_gain_cdf(1e3 * r.omega, &r) - 1.0).abs() < 1e-9);
}
