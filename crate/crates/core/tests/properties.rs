//! Property-based invariants over randomized parameters, times and seeds.

use proptest::prelude::*;

use isoclust_core::malthus::{
    laplace_series, malthusian_parameter, pi_active, pi_isolated, yule_simon_pmf,
};
use isoclust_core::model::{
    isolation_cdf, tail_truncation_k, typical_size_pmf, untraceable_intensity, validate,
};
use isoclust_core::sim::{simulate, snapshot, StopCondition};
use isoclust_core::stats::tv_distance;

fn arb_params() -> impl Strategy<Value = (f64, f64, f64)> {
    // gamma in (0.2, 4], p in [0, 1], delta in (0.05, 3]
    (0.2f64..4.0, 0.0f64..=1.0, 0.05f64..3.0)
}

fn arb_supercritical() -> impl Strategy<Value = (f64, f64, f64)> {
    // delta strictly below (1-p) gamma by construction
    (0.5f64..4.0, 0.0f64..0.9, 0.05f64..0.95)
        .prop_map(|(gamma, p, frac)| (gamma, p, frac * (1.0 - p) * gamma))
        .prop_filter("delta positive", |&(_, _, d)| d > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_rejects_out_of_domain(gamma in -2.0f64..3.0, p in -0.5f64..1.5, delta in -1.0f64..2.0) {
        let ok = validate(gamma, p, delta).is_ok();
        let in_domain = gamma > 0.0
            && (0.0..=1.0).contains(&p)
            && delta >= 0.0
            && (delta > 0.0 || p > 0.0);
        prop_assert_eq!(ok, in_domain);
    }

    #[test]
    fn size_law_normalizes_with_isolation((gamma, p, delta) in arb_params(), t in 0.0f64..6.0) {
        let params = validate(gamma, p, delta).unwrap();
        let cap = tail_truncation_k(&params, 1e-13).unwrap();
        let mut total = isolation_cdf(&params, t).unwrap();
        for k in 1..=cap as u64 {
            total += typical_size_pmf(&params, t, k).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-9, "total = {}", total);
    }

    #[test]
    fn birth_intensity_is_monotone_and_bounded((gamma, p, delta) in arb_params()) {
        let params = validate(gamma, p, delta).unwrap();
        let cap = (1.0 - p) * gamma / delta;
        let mut prev = 0.0;
        for i in 0..=60 {
            let mu = untraceable_intensity(&params, 0.15 * i as f64).unwrap();
            prop_assert!(mu + 1e-12 >= prev);
            prop_assert!(mu <= cap + 1e-9);
            prev = mu;
        }
    }

    #[test]
    fn laplace_is_decreasing((gamma, p, delta) in arb_params(), a in 0.01f64..2.0, b in 0.01f64..2.0) {
        let params = validate(gamma, p, delta).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let l_lo = laplace_series(&params, lo).unwrap();
        let l_hi = laplace_series(&params, hi).unwrap();
        prop_assert!(l_lo > l_hi);
    }

    #[test]
    fn size_bias_links_the_two_profiles((gamma, p, delta) in arb_supercritical()) {
        let params = validate(gamma, p, delta).unwrap();
        let alpha = malthusian_parameter(&params, 1e-11).unwrap();
        let k_max = tail_truncation_k(&params, 1e-12).unwrap().min(3000);
        let (pi_a, _) = pi_active(&params, alpha, k_max).unwrap();
        let (pi_i, _) = pi_isolated(&params, alpha, k_max).unwrap();
        let mean = pi_a.mean();
        for k in (1..=k_max).step_by(1 + k_max / 40) {
            let lhs = pi_i.get(k) * mean;
            let rhs = k as f64 * pi_a.get(k);
            prop_assert!((lhs - rhs).abs() < 1e-9, "k = {}: {} vs {}", k, lhs, rhs);
        }
    }

    #[test]
    fn yule_simon_is_a_distribution(q in 0.05f64..=1.0) {
        let mut total = 0.0;
        for k in 1..=200_000usize {
            total += yule_simon_pmf(q, k).unwrap();
        }
        // polynomial tail: only coarse closure at finite truncation
        prop_assert!(total <= 1.0 + 1e-9);
        prop_assert!(total > 0.9);
    }

    #[test]
    fn tv_distance_is_a_metric_on_the_simplex(
        raw_p in prop::collection::vec(0.0f64..1.0, 1..12),
        raw_q in prop::collection::vec(0.0f64..1.0, 1..12),
        raw_r in prop::collection::vec(0.0f64..1.0, 1..12),
    ) {
        let norm = |v: &[f64]| -> Vec<f64> {
            let s: f64 = v.iter().sum();
            if s == 0.0 { vec![1.0] } else { v.iter().map(|x| x / s).collect() }
        };
        let p = norm(&raw_p);
        let q = norm(&raw_q);
        let r = norm(&raw_r);
        let d_pq = tv_distance(&p, &q);
        let d_qp = tv_distance(&q, &p);
        prop_assert!((d_pq - d_qp).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d_pq));
        prop_assert!(tv_distance(&p, &p) < 1e-12);
        let d_pr = tv_distance(&p, &r);
        let d_rq = tv_distance(&r, &q);
        prop_assert!(d_pq <= d_pr + d_rq + 1e-12);
    }
}

proptest! {
    // simulation cases are heavier
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traces_replay_deterministically((gamma, p, delta) in arb_params(), seed in any::<u64>()) {
        let params = validate(gamma, p, delta).unwrap();
        let stop = StopCondition::default().with_max_individuals(400).with_t_max(50.0);
        let a = simulate(&params, seed, stop).unwrap();
        let b = simulate(&params, seed, stop).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn conservation_holds_at_random_times((gamma, p, delta) in arb_params(), seed in any::<u64>(), frac in 0.0f64..=1.0) {
        let params = validate(gamma, p, delta).unwrap();
        let stop = StopCondition::default().with_max_individuals(400).with_t_max(50.0);
        let trace = simulate(&params, seed, stop).unwrap();
        let t = trace.end_time * frac;
        let snap = snapshot(&trace, t).unwrap();
        prop_assert_eq!(
            snap.totals.contagious + snap.totals.isolated_individuals,
            snap.totals.cumulative_infected
        );
        let recount: u64 = snap.active_sizes.iter().map(|&(_, s)| s as u64).sum();
        prop_assert_eq!(recount, snap.totals.contagious);
    }
}
