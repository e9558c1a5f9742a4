//! The FSO gain density against independent routes: quadrature in the gain
//! domain, the plain Gamma-Gamma law, and the residue series.

use rffso_core::quad::{integrate_points, integrate_semi_infinite, Tolerance};
use rffso_core::special::{
    fso_gain_pdf, fso_gain_pdf_series, ln_bessel_k, ln_gamma, Detection, FsoGainDensity,
    FsoGainDensityParams,
};

const ALPHA: f64 = 4.3939;
const BETA: f64 = 2.5636;

fn params(xi: f64, detection: Detection) -> FsoGainDensityParams {
    FsoGainDensityParams::from_mean_gain(ALPHA, BETA, xi, detection, 1.0).unwrap()
}

/// Integral of `g(x) f(x)` over `x > 0`, split at 1 so the `x^(xi^2 - 1)`
/// behaviour near zero stays on its own interval.
fn gain_integral(p: &FsoGainDensityParams, g: impl Fn(f64) -> f64) -> f64 {
    let d = FsoGainDensity::new(*p).unwrap();
    let tol = Tolerance::new(1e-12, 1e-10);
    let f = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            g(x) * d.pdf(x).unwrap()
        }
    };
    let near = integrate_points(f, 0.0, 1.0, &[1e-6, 1e-3, 0.1], tol).unwrap();
    let far = integrate_semi_infinite(f, 1.0, tol).unwrap();
    near + far
}

#[test]
fn heterodyne_density_normalised_with_unit_mean() {
    let p = params(0.9, Detection::Heterodyne);
    let mass = gain_integral(&p, |_| 1.0);
    let mean = gain_integral(&p, |x| x);
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    assert!((mean - 1.0).abs() < 1e-5, "mean {mean}");
}

#[test]
fn im_dd_density_normalised_with_unit_mean() {
    let p = params(1.2, Detection::ImDd);
    let mass = gain_integral(&p, |_| 1.0);
    let mean = gain_integral(&p, |x| x);
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    assert!((mean - 1.0).abs() < 1e-5, "mean {mean}");
}

#[test]
fn second_moment_matches_product_moments() {
    // E[Y^2] = (1 + 1/a)(1 + 1/b) xi^2 / (xi^2 + 2) for the composite law.
    let xi: f64 = 0.9;
    let p = params(xi, Detection::Heterodyne);
    let y2 = (1.0 + 1.0 / ALPHA) * (1.0 + 1.0 / BETA) * xi * xi / (xi * xi + 2.0);
    let h = p.h();
    let want = p.mu_r * p.mu_r * y2 / (h * h);
    let got = gain_integral(&p, |x| x * x);
    assert!((got / want - 1.0).abs() < 1e-6, "{got} vs {want}");
}

fn gamma_gamma_pdf(x: f64) -> f64 {
    let ab = ALPHA * BETA;
    let half = 0.5 * (ALPHA + BETA);
    let ln = std::f64::consts::LN_2 + half * ab.ln() - ln_gamma(ALPHA) - ln_gamma(BETA)
        + (half - 1.0) * x.ln()
        + ln_bessel_k(ALPHA - BETA, 2.0 * (ab * x).sqrt());
    ln.exp()
}

#[test]
fn negligible_pointing_error_reduces_to_gamma_gamma() {
    let p = params(1e3, Detection::Heterodyne);
    for x in [0.1, 0.3, 0.6, 1.0, 1.5, 2.0, 3.0] {
        let got = fso_gain_pdf(x, &p).unwrap();
        let want = gamma_gamma_pdf(x);
        assert!((got / want - 1.0).abs() < 0.02, "x={x}: {got} vs {want}");
    }
}

#[test]
fn residue_series_agrees_with_composite_route() {
    for (xi, det) in [
        (0.9, Detection::Heterodyne),
        (1.2, Detection::ImDd),
        (0.5, Detection::Heterodyne),
    ] {
        let p = params(xi, det);
        for x in [0.05, 0.2, 0.5, 1.0, 2.0, 4.0] {
            let a = fso_gain_pdf(x, &p).unwrap();
            let b = fso_gain_pdf_series(x, &p).unwrap();
            assert!(
                (a - b).abs() <= 1e-8 * a.max(1e-3),
                "xi={xi} x={x}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn density_rejects_nonpositive_gain() {
    let p = params(0.9, Detection::Heterodyne);
    assert!(fso_gain_pdf(0.0, &p).is_err());
    assert!(fso_gain_pdf(-1.0, &p).is_err());
}
