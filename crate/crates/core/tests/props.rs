//! Property tests: exact identities and invariants that must hold across the
//! whole parameter space, checked on randomized inputs with modest case
//! counts (the heavy numerical agreement tests live in the other suites).

use proptest::prelude::*;

use bufferloss::loss::{
    conditional_idle_moment, conditional_loss_moment, idle_moment, loss_moment, mean_idleness,
    mean_loss, LossMomentRequest, MomentMethod,
};
use bufferloss::propagator::{
    stationary_cdf, stationary_density, stationary_inverse_cdf, PropagatorParams,
};
use bufferloss::sim::{aggregate_windows, run, InitialOccupancy, RunConfig};
use bufferloss::traffic::{derive_fp_params, FpParams, GapDist, SizeDist, TrafficModel};

fn small_config() -> impl Strategy<Value = RunConfig> {
    (
        5e-3f64..2e-2,
        50f64..200.0,
        0.5f64..2.0,
        0u64..1u64 << 48,
        0u64..8,
        prop_oneof![Just(true), Just(false)],
    )
        .prop_map(|(p, rate, eta0, seed, stream, stationary)| RunConfig {
            traffic: TrafficModel::new(
                GapDist::Exponential { rate },
                SizeDist::Deterministic { value: p },
                eta0,
            )
            .unwrap(),
            duration: 200.0,
            warmup: 20.0,
            window: 10.0,
            seed,
            stream,
            initial: if stationary {
                InitialOccupancy::StationarySample
            } else {
                InitialOccupancy::Fixed(0.3)
            },
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tau_and_t_convert_both_ways(
        a in -0.05f64..0.05,
        sigma2 in 1e-4f64..1.0,
        t in 1e-3f64..1e4,
    ) {
        let v = a / sigma2;
        let fp = FpParams { a, sigma2, v, criticality: a };
        let tau = fp.tau_of_t(t);
        prop_assert!((fp.t_of_tau(tau) - t).abs() <= 1e-12 * t);
        prop_assert!((tau - sigma2 * t / 2.0).abs() <= 1e-15 * tau.abs().max(1.0));
    }

    #[test]
    fn loss_and_idleness_swap_under_drift_reversal(
        tau in 1e-3f64..50.0,
        v in -3.0f64..3.0,
        k in 1u32..4,
    ) {
        // means: closed forms must agree exactly
        prop_assert_eq!(
            mean_idleness(tau, v).unwrap(),
            mean_loss(tau, -v).unwrap()
        );
        // higher moments route through the same kernels with v negated
        let idle = idle_moment(&LossMomentRequest {
            k, tau, v, method: MomentMethod::LaplaceInversion,
        }).unwrap();
        let loss = loss_moment(&LossMomentRequest {
            k, tau, v: -v, method: MomentMethod::LaplaceInversion,
        }).unwrap();
        prop_assert_eq!(idle, loss);
    }

    #[test]
    fn conditional_duality_mirrors_the_start_point(
        v in -2.0f64..2.0,
        ell in 0.05f64..0.95,
    ) {
        let idle = conditional_idle_moment(1, 0.3, ell, v).unwrap();
        let loss = conditional_loss_moment(1, 0.3, 1.0 - ell, -v).unwrap();
        prop_assert_eq!(idle, loss);
    }

    #[test]
    fn stationary_cdf_inverts(
        v in -6.0f64..6.0,
        u in 1e-6f64..1.0,
    ) {
        let x = stationary_inverse_cdf(v, u);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((stationary_cdf(v, x) - u).abs() < 1e-9);
    }

    #[test]
    fn detailed_balance_holds_pointwise(
        v in -2.0f64..2.0,
        tau in 0.02f64..2.0,
        l in 0.1f64..0.9,
        lp in 0.1f64..0.9,
    ) {
        let params = PropagatorParams::new(v).unwrap();
        let fwd = stationary_density(v, l) * params.propagator(lp, tau, l).unwrap();
        let bwd = stationary_density(v, lp) * params.propagator(l, tau, lp).unwrap();
        prop_assert!((fwd - bwd).abs() <= 1e-9 * fwd.abs().max(1e-300));
    }

    #[test]
    fn mean_loss_grows_in_tau_and_v(
        tau in 1e-3f64..20.0,
        v in -2.0f64..2.0,
    ) {
        let base = mean_loss(tau, v).unwrap();
        prop_assert!(base > 0.0);
        prop_assert!(mean_loss(tau * 1.5, v).unwrap() > base);
        prop_assert!(mean_loss(tau, v + 0.25).unwrap() > base);
    }
}

proptest! {
    // simulation-backed properties get fewer, cheaper cases
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn runs_are_deterministic_and_conservative(config in small_config()) {
        let (s1, w1) = run(&config).unwrap();
        let (s2, w2) = run(&config).unwrap();
        prop_assert_eq!(s1.lost_traffic, s2.lost_traffic);
        prop_assert_eq!(s1.idle_deficit, s2.idle_deficit);
        prop_assert_eq!(s1.final_ell, s2.final_ell);
        prop_assert_eq!(s1.packets_arrived, s2.packets_arrived);
        prop_assert_eq!(&w1.lost, &w2.lost);
        prop_assert!(s1.conservation_residual.abs() <= s1.conservation_tol);

        // a different stream of the same seed decorrelates the draw
        let other = RunConfig { stream: config.stream + 100, ..config.clone() };
        let (s3, _) = run(&other).unwrap();
        prop_assert!(s3.packets_arrived != s1.packets_arrived || s3.final_ell != s1.final_ell);

        // window totals reconcile with the run totals over the measured span
        let lost_sum: f64 = w1.lost.iter().sum();
        prop_assert!(lost_sum <= s1.lost_traffic + 1e-9);

        // aggregation preserves totals for any admissible factor
        let agg = aggregate_windows(&w1, 3).unwrap();
        let agg_sum: f64 = agg.lost.iter().sum();
        let direct: f64 = w1.lost[..agg.len() * 3].iter().sum();
        prop_assert!((agg_sum - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn derived_params_match_the_run_criticality(
        p in 5e-3f64..2e-2,
        rate in 50f64..200.0,
    ) {
        let traffic = TrafficModel::new(
            GapDist::Exponential { rate },
            SizeDist::Deterministic { value: p },
            1.0,
        ).unwrap();
        let fp = derive_fp_params(&traffic).unwrap();
        let eta_bar = 1.0 / rate;
        prop_assert!((fp.a - (p / eta_bar - 1.0)).abs() < 1e-12);
        prop_assert!((fp.criticality - fp.a).abs() < 1e-12);
        prop_assert!((fp.v - fp.a / fp.sigma2).abs() < 1e-12 * fp.v.abs().max(1.0));
    }
}
