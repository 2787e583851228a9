use mann_bounds::bounds::{validate_metric, validate_quadrangle};
use mann_bounds::optimizers::*;
use mann_bounds::schemes::SchemeKind;
use mann_bounds::{build_distance_table, Rational, Scalar};
use proptest::prelude::*;

fn quick() -> OptimizerConfig {
    OptimizerConfig { restarts: 8, ..OptimizerConfig::default() }
}

#[test]
fn fixed_horizon_beats_sequential_beats_monotone() {
    for n in 1..=4 {
        let fh = optimize_fixed_horizon(n, &quick()).unwrap().value();
        let s = optimize_sequential(n, &quick(), false).unwrap().value();
        let ms = optimize_sequential(n, &quick(), true).unwrap().value();
        assert!(fh <= s + 1e-9 && s <= ms + 1e-6, "n={n}: fh {fh}, s {s}, ms {ms}");
    }
}

#[test]
fn second_fixed_horizon_optimum() {
    // Closed-form two-step optimum and its coefficients.
    let result = optimize_fixed_horizon(2, &OptimizerConfig::default()).unwrap();
    let r6 = 6f64.sqrt();
    assert!((result.value() - (30.0 - 12.0 * r6)).abs() < 1e-9);
    let expected = [vec![1.0], vec![r6 - 2.0, 3.0 - r6], vec![3.0 * r6 - 7.0, 5.0 - 2.0 * r6, 3.0 - r6]];
    for (row, want) in result.array.weights().iter().zip(&expected) {
        for (x, y) in row.iter().zip(want) {
            assert!((x - y).abs() < 1e-6, "{row:?} vs {want:?}");
        }
    }
}

#[test]
fn exact_modes_hit_the_rational_optima() {
    let cfg = OptimizerConfig { exact: true, ..OptimizerConfig::default() };
    for monotone in [true, false] {
        let exact = optimize_sequential(2, &cfg, monotone).unwrap().exact.unwrap();
        assert_eq!(exact.residuals[1], Rational::ratio(3, 4));
        assert_eq!(exact.residuals[2], Rational::ratio(17, 28));
        let row2: Vec<Rational> = exact.array.row(2).weights().to_vec();
        assert_eq!(row2, vec![Rational::ratio(5, 14), Rational::ratio(1, 14), Rational::ratio(8, 14)]);
    }
    let fh1 = optimize_fixed_horizon(1, &cfg).unwrap().exact.unwrap();
    assert_eq!(fh1.residuals[1], Rational::ratio(3, 4));
}

#[test]
fn traces_recheck_and_tables_are_clean() {
    let ms = optimize_sequential(15, &quick(), true).unwrap();
    assert!(ms.recheck().unwrap() < 1e-12);
    let table = build_distance_table(&ms.array).unwrap();
    assert!(validate_metric(&table).is_clean());
    assert!(validate_quadrangle(&table).is_clean());
    let trace = &ms.value_trace;
    assert!(trace.windows(2).all(|w| w[1] < w[0]));

    let km = optimize_scheme(SchemeKind::KM, 8, &quick()).unwrap();
    assert!(km.recheck().unwrap() < 1e-12);
    assert!(validate_metric(&build_distance_table(&km.array).unwrap()).is_clean());
}

#[test]
fn halpern_scheme_search_finds_the_recursion() {
    let result = optimize_scheme(SchemeKind::Halpern, 10, &quick()).unwrap();
    let (betas, residuals) = halpern_optimal_recursion::<f64>(10).unwrap();
    let (_, found) = result.stepsizes.unwrap();
    for n in 1..=10 {
        assert!((found[n] - betas[n]).abs() < 1e-6, "beta_{n}: {} vs {}", found[n], betas[n]);
        assert!((result.value_trace[n] - residuals[n]).abs() < 1e-10);
    }
}

#[test]
fn runs_are_deterministic() {
    let a = optimize_sequential(6, &quick(), false).unwrap();
    let b = optimize_sequential(6, &quick(), false).unwrap();
    assert_eq!(a.value_trace, b.value_trace);
    assert_eq!(a.array.weights(), b.array.weights());
}

#[test]
fn halpern_residuals_stay_below_four_over_n_plus_four() {
    let (_, r) = halpern_optimal_recursion::<f64>(10_000).unwrap();
    for (n, x) in r.iter().enumerate() {
        assert!(*x <= 4.0 / (n as f64 + 4.0) + 1e-15);
    }
}

#[test]
fn remark_one_matches_the_recursion() {
    let betas: Vec<f64> = (0..=200).map(|n| n as f64 / (n as f64 + 2.0)).collect();
    let table = mann_bounds::halpern_distance_recursion(&betas).unwrap();
    for n in 0..=200 {
        let closed: f64 = remark_one_residual(n);
        assert!((table.residual(n) - closed).abs() < 1e-10, "n={n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// `beta_k = k/(k+1)` minimizes `Theta_n`: random perturbations never do better.
    #[test]
    fn theta_minimality(n in 1usize..15, noise in prop::collection::vec(-0.2f64..0.2, 15)) {
        let star: Vec<f64> = affine_halpern_optimal(n).unwrap();
        let mut perturbed = star.clone();
        for k in 1..=n {
            perturbed[k] = (star[k] + noise[k - 1]).clamp(0.0, 1.0);
        }
        let best = affine_halpern_theta(&star).unwrap();
        prop_assert!(affine_halpern_theta(&perturbed).unwrap() >= best - 1e-12);
    }

    #[test]
    fn exact_theta_at_the_optimum(n in 1usize..40) {
        let star: Vec<Rational> = affine_halpern_optimal(n).unwrap();
        prop_assert_eq!(affine_halpern_theta(&star).unwrap(), Rational::ratio(2, n as i64 + 1));
    }
}

#[test]
fn theta_minimality_on_many_perturbations() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10_000 {
        let n = 1 + trial % 20;
        let star: Vec<f64> = affine_halpern_optimal(n).unwrap();
        let best = affine_halpern_theta(&star).unwrap();
        let scale = [1e-3, 0.05, 0.5][trial % 3];
        let mut perturbed = star.clone();
        for b in perturbed.iter_mut().skip(1) {
            *b = (*b + rng.random_range(-scale..scale)).clamp(0.0, 1.0);
        }
        assert!(affine_halpern_theta(&perturbed).unwrap() >= best - 1e-12, "n={n}: {perturbed:?}");
    }
}
