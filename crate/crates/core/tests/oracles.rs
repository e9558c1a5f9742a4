//! Closed forms against Monte Carlo, and structural properties of the
//! decoding profiles.

use proptest::prelude::*;
use rffso_core::analysis::{
    decoding_prob_asymptotic, decoding_prob_exact, fso_log_moments, throughput_and_outage,
    DecodingProfile, HarqParams, Method,
};
use rffso_core::channel::{db_to_linear, FsoLinkParams, RfLinkParams, SystemPower};
use rffso_core::mc::{
    fso_block_normality, simulate_fso_rate_stats, simulate_harq_with_workers, McConfig,
};
use rffso_core::scenario::Scenario;
use rffso_core::special::Detection;

fn fig3(m_max: usize, n_fso: usize) -> Scenario {
    Scenario {
        fso: FsoLinkParams::new(4.3939, 2.5636, 0.9, Detection::Heterodyne, 1.0, 0.0).unwrap(),
        rf: RfLinkParams::ideal(0.0995, 0.7036, 0.0),
        harq: HarqParams {
            m_max,
            rate: 1.0,
            n_fso,
            psi: 0.03,
        },
        split: 0.5,
    }
}

fn fig6(detection: Detection, n_fso: usize) -> Scenario {
    Scenario {
        fso: FsoLinkParams::new(4.3939, 2.5636, 1.2, detection, 1.0, 0.0).unwrap(),
        rf: RfLinkParams {
            nu: 0.0995,
            omega: 0.7036,
            epsilon: 0.65,
            vartheta: 0.5,
            p_max: db_to_linear(18.0),
            p_cons: 0.0,
        },
        harq: HarqParams {
            m_max: 1,
            rate: 12.0,
            n_fso,
            psi: 2.0,
        },
        split: 0.5,
    }
}

#[test]
fn moments_match_sampled_log_rate() {
    let sc = fig3(1, 100);
    for (snr, det) in [(20.0, Detection::Heterodyne), (10.0, Detection::ImDd)] {
        let p = SystemPower::new(snr);
        let fso = FsoLinkParams::new(4.3939, 2.5636, 0.9, det, 1.0, p.p_fso()).unwrap();
        let exact = fso_log_moments(&fso, sc.harq.psi).unwrap();
        let mc = simulate_fso_rate_stats(&fso, sc.harq.psi, 10_000_000, 17).unwrap();
        assert!(
            (exact.mu - mc.mean).abs() < 3.0 * mc.mean_std_err,
            "{det:?}: mu {} vs {}",
            exact.mu,
            mc.mean
        );
        assert!(
            (exact.sigma2 - mc.variance).abs() < 3.0 * mc.variance_std_err,
            "{det:?}: sigma2 {} vs {}",
            exact.sigma2,
            mc.variance
        );
    }
}

#[test]
fn exact_open_loop_matches_simulation_at_20db() {
    let sc = fig3(1, 100);
    let exact = sc.profile_at(20.0, Method::Exact, None).unwrap();
    let (fso, rf) = sc.links_at(20.0).unwrap();
    let est =
        simulate_harq_with_workers(&fso, &rf, &sc.harq, &McConfig::new(1_000_000, 23), 1).unwrap();
    let tol = (3.0 * est.std_err[0]).max(5e-3);
    assert!(
        (exact.phi[0] - est.phi_hat[0]).abs() <= tol,
        "{} vs {}",
        exact.phi[0],
        est.phi_hat[0]
    );
}

#[test]
fn simulation_is_bit_reproducible_across_worker_counts() {
    let sc = fig3(3, 100);
    let (fso, rf) = sc.links_at(8.0).unwrap();
    for antithetic in [false, true] {
        let cfg = McConfig {
            trials: 20_000,
            seed: 99,
            antithetic,
        };
        let runs: Vec<_> = [1, 2, 3, 4]
            .iter()
            .map(|&w| simulate_harq_with_workers(&fso, &rf, &sc.harq, &cfg, w).unwrap())
            .collect();
        for r in &runs[1..] {
            assert_eq!(r, &runs[0]);
            assert_eq!(
                r.phi_hat.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
                runs[0]
                    .phi_hat
                    .iter()
                    .map(|p| p.to_bits())
                    .collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn asymptotic_gap_shrinks_with_realizations() {
    let mut gaps = Vec::new();
    for n in [1, 10, 100, 1000, 10_000] {
        let sc = fig3(1, n);
        let m = sc.moments_at(10.0).unwrap();
        let (_, rf) = sc.links_at(10.0).unwrap();
        let e = decoding_prob_exact(1, &sc.harq, &m, &rf).unwrap();
        let a = decoding_prob_asymptotic(1, &sc.harq, &m, &rf).unwrap();
        gaps.push((e - a).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn asymptotic_close_to_exact_at_large_n() {
    let sc = fig3(3, 10_000);
    for snr in (0..=35).step_by(5) {
        let snr = snr as f64;
        let m = sc.moments_at(snr).unwrap();
        let e = sc.profile_at(snr, Method::Exact, Some(m)).unwrap();
        let a = sc.profile_at(snr, Method::Asymptotic, Some(m)).unwrap();
        for (x, y) in e.phi.iter().zip(&a.phi) {
            assert!((x - y).abs() <= 5e-3, "snr {snr}: {x} vs {y}");
        }
    }
}

#[test]
fn profiles_monotone_in_round_and_snr() {
    let sc = fig3(3, 100);
    for method in [Method::Exact, Method::Linearized, Method::Asymptotic] {
        let mut prev: Option<Vec<f64>> = None;
        for snr in 0..=35 {
            let p = sc.profile_at(snr as f64, method, None).unwrap();
            assert!(
                p.phi.windows(2).all(|w| w[1] <= w[0] + 1e-9),
                "{method} at {snr}: {:?}",
                p.phi
            );
            if let Some(q) = &prev {
                for (a, b) in p.phi.iter().zip(q) {
                    assert!(*a <= b + 1e-9, "{method} not decreasing in SNR at {snr}");
                }
            }
            prev = Some(p.phi);
        }
    }
}

#[test]
fn heterodyne_outage_not_above_im_dd() {
    for n in [1, 2, 5, 10, 25, 50, 100, 250, 500, 1000] {
        let het = fig6(Detection::Heterodyne, n)
            .profile_at(18.0, Method::Exact, None)
            .unwrap();
        let imdd = fig6(Detection::ImDd, n)
            .profile_at(18.0, Method::Exact, None)
            .unwrap();
        // Both saturate at one for large N; allow rounding there.
        assert!(
            het.phi[0] <= imdd.phi[0] + 1e-12,
            "N={n}: {} > {}",
            het.phi[0],
            imdd.phi[0]
        );
    }
}

#[test]
fn per_round_fso_average_is_near_normal() {
    let p = SystemPower::new(20.0);
    let fso =
        FsoLinkParams::new(4.3939, 2.5636, 0.9, Detection::Heterodyne, 1.0, p.p_fso()).unwrap();
    let t = fso_block_normality(&fso, 0.03, 100, 1000, 31).unwrap();
    assert!(t.passed, "A* = {} >= {}", t.statistic, t.critical);
}

#[test]
fn psi_doubling_doubles_mu() {
    let (fso, _) = fig3(1, 100).links_at(15.0).unwrap();
    let a = fso_log_moments(&fso, 0.03).unwrap();
    let b = fso_log_moments(&fso, 0.06).unwrap();
    assert_eq!(b.mu, 2.0 * a.mu);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn throughput_identities(raw in proptest::collection::vec(0.0f64..=1.0, 1..6), rate in 0.01f64..20.0) {
        let mut phi = raw.clone();
        phi.sort_by(|a, b| b.total_cmp(a));
        let r = throughput_and_outage(&DecodingProfile::new(phi.clone(), Method::Exact), rate).unwrap();
        prop_assert_eq!(r.outage, *phi.last().unwrap());
        prop_assert!(r.throughput >= 0.0 && r.throughput <= rate);
        let denom = 1.0 + phi[..phi.len() - 1].iter().sum::<f64>();
        prop_assert!((r.throughput * denom - rate * (1.0 - r.outage)).abs() <= 1e-12 * rate * denom);
    }

    #[test]
    fn analytic_profiles_are_valid(snr in -5.0f64..40.0, rate in 0.1f64..4.0, n in 1usize..500, m_max in 1usize..5) {
        let mut sc = fig3(m_max, n);
        sc.harq.rate = rate;
        for method in [Method::Exact, Method::Linearized, Method::Asymptotic] {
            let p = sc.profile_at(snr, method, None).unwrap();
            prop_assert!(p.phi.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!(throughput_and_outage(&p, rate).is_ok(), "{:?}", p.phi);
        }
    }
}
