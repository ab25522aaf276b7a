use proptest::prelude::*;

use rgo_sampling::chain::ChainState;
use rgo_sampling::config::RunConfig;
use rgo_sampling::finitesum::{exact_filter_probability, gamma_estimator, MrwParams};
use rgo_sampling::gaussian::{sample_truncated_normal, RngStream};
use rgo_sampling::models::{build_model, ModelSpec};
use rgo_sampling::oracle::{combine_quadratics, shift_to_shared_min};
use rgo_sampling::reduction::iteration_count;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn combined_quadratic_matches_sum_up_to_constant(
        l1 in 0.01f64..10.0, l2 in 0.01f64..10.0,
        v1 in -5.0f64..5.0, v2 in -5.0f64..5.0,
        x in -5.0f64..5.0, z in -5.0f64..5.0,
    ) {
        let (lam, v) = combine_quadratics(l1, &[v1], l2, &[v2]);
        let sum = |t: f64| (t - v1).powi(2) / (2.0 * l1) + (t - v2).powi(2) / (2.0 * l2);
        let one = |t: f64| (t - v[0]).powi(2) / (2.0 * lam);
        prop_assert!(close(sum(x) - sum(z), one(x) - one(z), 1e-9));
    }

    #[test]
    fn shared_min_shift_preserves_the_sum(
        a in 0.5f64..4.0, b in 0.5f64..4.0, r in 0.0f64..2.0,
        x0 in -3.0f64..3.0, x1 in -3.0f64..3.0,
    ) {
        let m = build_model(&ModelSpec::LassoGaussian { curvature: vec![a, b], mean: vec![1.0, -0.5], reg: vec![r, r] }).unwrap();
        let (ft, gt) = shift_to_shared_min(&m.f, &m.g, &m.x_star).unwrap();
        let x = [x0, x1];
        let before = m.f.value(&x) + m.g.value(&x).unwrap();
        let after = ft.value(&x) + gt.value(&x).unwrap();
        let base = m.f.value(&m.x_star) + m.g.value(&m.x_star).unwrap();
        let shifted = ft.value(&m.x_star) + gt.value(&m.x_star).unwrap();
        prop_assert!(close(before - base, after - shifted, 1e-9));
    }

    #[test]
    fn truncated_normal_stays_in_bounds(
        mean in -20.0f64..20.0, var in 0.001f64..50.0,
        lo in -5.0f64..5.0, width in 0.01f64..5.0, seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..16 {
            let x = sample_truncated_normal(mean, var, lo, lo + width, &mut rng).unwrap();
            prop_assert!(x >= lo && x <= lo + width, "{x} outside [{lo}, {}]", lo + width);
        }
    }

    #[test]
    fn iteration_count_is_monotone(
        eta in 1e-4f64..1.0, mu in 0.1f64..10.0,
        lb in 0.0f64..100.0, dlb in 0.0f64..100.0,
        eps in 1e-4f64..0.5, shrink in 0.1f64..1.0,
    ) {
        let base = iteration_count(eta, mu, lb, eps, 4.0).unwrap();
        prop_assert!(iteration_count(eta, mu, lb + dlb, eps, 4.0).unwrap() >= base);
        prop_assert!(iteration_count(eta, mu, lb, eps * shrink, 4.0).unwrap() >= base);
        prop_assert!(iteration_count(eta * shrink, mu, lb, eps, 4.0).unwrap() >= base);
    }

    #[test]
    fn exact_filter_is_reversible(delta in -8.0f64..8.0) {
        let fwd = exact_filter_probability(delta);
        let back = exact_filter_probability(-delta);
        prop_assert!(fwd > 0.0 && fwd <= 1.0);
        prop_assert!(close(fwd / back, delta.exp(), 1e-12));
    }

    #[test]
    fn subset_cap_is_floor_of_twice_the_mean(n in 1usize..5000, k in 1usize..1000, delta in 0.01f64..0.5) {
        let p = MrwParams::new(n, 0.1, k, delta).unwrap();
        prop_assert!(p.inclusion > 0.0 && p.inclusion <= 1.0);
        prop_assert_eq!(p.subset_cap, (2.0 * p.inclusion * n as f64).floor() as usize);
    }

    #[test]
    fn config_json_round_trips(seed in any::<u64>(), chains in 1usize..64, eps in 0.001f64..0.5) {
        let text = format!(
            r#"{{"model": {{"kind": "gaussian", "curvature": [1.0, 2.0], "mean": [0.0, 1.0]}}, "sampler": "wellcond", "eps": {eps}, "seed": {seed}, "chains": {chains}}}"#
        );
        let cfg = RunConfig::from_json(&text).unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}

/// Enumerates every subset of a 6-term sum and weighs `gamma` by its
/// probability; the result must equal `exp((F(x) - F(y)) / 2)`.
#[test]
fn gamma_expectation_by_enumeration() {
    let m = build_model(&ModelSpec::QuadraticFinitesum { n: 6, curvature: vec![1.0, 3.0], smoothness: None, spread: 1.5, data_seed: 9 })
        .unwrap();
    let fs = m.finite_sum.unwrap();
    let n = fs.n();
    let mut st = ChainState::new(3, 0);
    for p in [0.3f64, 0.7, 1.0] {
        for _ in 0..10 {
            let x: Vec<f64> = (0..2).map(|_| 0.5 * st.rng.normal()).collect();
            let y: Vec<f64> = x.iter().map(|c| c + 0.2 * st.rng.normal()).collect();
            let mut expect = 0.0;
            for mask in 0u32..(1 << n) {
                let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let k = subset.len() as i32;
                let prob = p.powi(k) * (1.0 - p).powi(n as i32 - k);
                expect += prob * gamma_estimator(&fs, &x, &y, &subset, p).0;
            }
            let fx: f64 = (0..n).map(|i| fs.summand_value(i, &x)).sum::<f64>() / n as f64;
            let fy: f64 = (0..n).map(|i| fs.summand_value(i, &y)).sum::<f64>() / n as f64;
            let truth = (0.5 * (fx - fy)).exp();
            assert!(close(expect, truth, 1e-10), "p = {p}: {expect} vs {truth}");
        }
    }
}
