//! Cross-route verification: every closed form is checked against an
//! independent evaluation (a different algebraic route, a quadrature, or a
//! Monte Carlo band) rather than against itself.

use isoclust_core::malthus::{
    integrate_nu, laplace_quadrature, laplace_series, malthusian_parameter, nu_balance_root,
    StepControl,
};
use isoclust_core::model::{
    self, isolation_cdf, joint_final_size_cdf, tail_truncation_k, untraceable_intensity, validate,
};
use isoclust_core::sim::{self, single_cluster, StopCondition};
use isoclust_core::Params64;

fn reference() -> Params64 {
    validate(2.0, 0.5, 0.5).unwrap()
}

#[test]
fn laplace_routes_agree_on_a_theta_grid() {
    // series vs quadrature across (0, 2 gamma]
    for params in [
        reference(),
        validate(2.0, 0.2, 0.8).unwrap(),
        validate(3.0, 0.5, 0.3).unwrap(),
        validate(1.5, 0.9, 0.1).unwrap(),
    ] {
        let gamma: f64 = params.gamma();
        for i in 1..=24 {
            let theta = 2.0 * gamma * i as f64 / 24.0;
            let s = laplace_series(&params, theta).unwrap();
            let q = laplace_quadrature(&params, theta).unwrap();
            assert!(
                (s - q).abs() < 1e-9,
                "gamma={gamma} theta={theta}: {s} vs {q}"
            );
        }
    }
}

#[test]
fn oracle_triangle_for_the_growth_rate() {
    // three independent evaluations of the growth exponent: the transform
    // root, the recurrence balance root, and the ODE log-slope
    let params = reference();
    let k_tail = tail_truncation_k(&params, 1e-12).unwrap();
    let a_root = malthusian_parameter(&params, 1e-12).unwrap();
    let a_balance = nu_balance_root(&params, k_tail, 1e-13).unwrap();
    let a_slope = integrate_nu(&params, 160, 18.0, StepControl::default())
        .unwrap()
        .log_slope(0.25)
        .unwrap();
    assert!((a_root - a_balance).abs() < 1e-4);
    assert!((a_root - a_slope).abs() < 1e-4);
    assert!((a_balance - a_slope).abs() < 1e-4);
}

#[test]
fn oracle_triangle_collapses_to_closed_form_when_p_zero() {
    let params = validate(2.0, 0.0, 0.5).unwrap();
    let expect = 1.5f64;
    let a_root = malthusian_parameter(&params, 1e-12).unwrap();
    let a_balance = nu_balance_root(&params, 50, 1e-13).unwrap();
    let control = StepControl {
        dt: Some(0.002),
        ..StepControl::default()
    };
    let a_slope = integrate_nu(&params, 8, 6.0, control)
        .unwrap()
        .log_slope(0.25)
        .unwrap();
    assert!((a_root - expect).abs() < 1e-8, "root {a_root}");
    assert!((a_balance - expect).abs() < 1e-8, "balance {a_balance}");
    assert!((a_slope - expect).abs() < 1e-8, "slope {a_slope}");
}

#[test]
fn isolation_age_law_against_monte_carlo() {
    // P(zeta <= t) at a few times, from 1e5 single-cluster runs, 3 sigma
    let params = reference();
    let n = 100_000u64;
    let runs: Vec<f64> = (0..n)
        .map(|i| single_cluster(&params, isoclust_core::rng::derive_seed(11, i)).unwrap().isolation_age)
        .collect();
    for &t in &[0.5, 1.0, 2.0] {
        let expect = isolation_cdf(&params, t).unwrap();
        let hit = runs.iter().filter(|&&z| z <= t).count() as f64 / n as f64;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (hit - expect).abs() < 3.0 * sigma,
            "t={t}: {hit} vs {expect} (sigma {sigma})"
        );
    }
}

#[test]
fn joint_final_size_law_against_monte_carlo() {
    let params = reference();
    let n = 100_000u64;
    let t = 2.0;
    let runs: Vec<_> = (0..n)
        .map(|i| single_cluster(&params, isoclust_core::rng::derive_seed(13, i)).unwrap())
        .collect();
    for k in [1u32, 2, 3, 5] {
        let expect = joint_final_size_cdf(&params, t, k as u64).unwrap();
        let hit = runs
            .iter()
            .filter(|r| r.final_size == k && r.isolation_age <= t)
            .count() as f64
            / n as f64;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (hit - expect).abs() < 3.0 * sigma,
            "k={k}: {hit} vs {expect}"
        );
    }
}

#[test]
fn untraceable_intensity_against_full_simulation() {
    // mean number of child clusters begotten by the ancestral cluster by
    // age t, against mu(t); runs are long enough that age t is observed
    let params = reference();
    let n = 20_000u64;
    let t_obs = [0.5, 1.0, 2.0, 4.0];
    let stop = StopCondition::default().with_t_max(4.0).with_max_individuals(200_000);
    let counts = sim::replicate_map(&params, 17, n, stop, |_, trace| {
        let ages = &trace.clusters[0].child_birth_ages;
        let mut row = [0u32; 4];
        for (j, &t) in t_obs.iter().enumerate() {
            row[j] = ages.iter().filter(|&&a| a <= t).count() as u32;
        }
        row
    })
    .unwrap();
    for (j, &t) in t_obs.iter().enumerate() {
        let expect = untraceable_intensity(&params, t).unwrap();
        let xs: Vec<f64> = counts.iter().map(|r| r[j] as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sigma = (var / n as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.5 * sigma,
            "t={t}: {mean} vs {expect} (se {sigma})"
        );
    }
}

#[test]
fn extinction_probability_against_batches() {
    let params = reference();
    let expect_survive = 1.0 - model::extinction_probability(&params);
    let n = 4000u64;
    let stop = StopCondition::default().with_max_individuals(1000);
    let batch = sim::replicate_batch(&params, 23, n, stop).unwrap();
    let survived = batch.iter().filter(|s| s.is_surviving()).count() as f64 / n as f64;
    let sigma = (expect_survive * (1.0 - expect_survive) / n as f64).sqrt();
    assert!(
        (survived - expect_survive).abs() < 3.0 * sigma,
        "{survived} vs {expect_survive}"
    );
    // subcritical: every run dies
    let sub = validate(1.0, 0.9, 0.5).unwrap();
    let batch = sim::replicate_batch(&sub, 29, 3000, StopCondition::unbounded()).unwrap();
    assert!(batch.iter().all(|s| !s.is_surviving()));
}
