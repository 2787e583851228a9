use mann_bounds::lab::*;
use mann_bounds::optimizers::{affine_halpern_theta, optimize_sequential, OptimizerConfig};
use mann_bounds::{Rational, Scalar, TriangularArray};
use proptest::prelude::*;
use statrs::distribution::{Binomial, Discrete};

fn simplex(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn array_strategy(max_horizon: usize) -> impl Strategy<Value = TriangularArray> {
    (1..=max_horizon).prop_flat_map(|n| {
        let rows: Vec<_> = (1..=n).map(|k| prop::collection::vec(0.01f64..1.0, k + 1)).collect();
        rows.prop_map(|rows| {
            let mut all = vec![vec![1.0]];
            all.extend(rows.into_iter().map(simplex));
            TriangularArray::from_weights(all).unwrap()
        })
    })
}

/// Distribution of a sum of Bernoullis by enumerating every outcome.
fn brute_force_pmf(alphas: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut p = 1.0;
        for (k, a) in alphas.iter().enumerate() {
            p *= if mask >> k & 1 == 1 { *a } else { 1.0 - a };
        }
        pmf[mask.count_ones() as usize] += p;
    }
    pmf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_residual_respects_the_lower_bound(pi in array_strategy(12)) {
        for n in 0..=pi.horizon() {
            let r = shift_linf_residual(&pi, n).unwrap();
            prop_assert!(r >= 1.0 / (n as f64 + 1.0) - 1e-12);
        }
    }

    #[test]
    fn poisson_binomial_matches_enumeration(alphas in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let n = alphas.len();
        let mut padded = vec![0.0];
        padded.extend(&alphas);
        let dp = poisson_binomial_pmf(&padded, n).unwrap();
        let oracle = brute_force_pmf(&alphas);
        for (a, b) in dp.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-13);
        }
        let r = km_l1_residual(&padded, n).unwrap();
        prop_assert!((r - 2.0 * oracle.iter().cloned().fold(0.0, f64::max)).abs() < 1e-12);
    }

    #[test]
    fn affine_shift_equals_theta(tail in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let mut betas = vec![0.0];
        betas.extend(tail);
        let n = betas.len() - 1;
        let r = affine_shift_halpern_residual(&betas, n).unwrap();
        prop_assert!((r - affine_halpern_theta(&betas).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn shift_residual_on_optimal_sequential_array() {
    let ms = optimize_sequential(25, &OptimizerConfig::default(), true).unwrap();
    assert!(shift_linf_residual(&ms.array, 25).unwrap() >= 1.0 / 26.0);
}

#[test]
fn exact_shift_iterates_stay_in_the_cube() {
    let rows = vec![
        vec![Rational::ratio(1, 1)],
        vec![Rational::ratio(1, 2), Rational::ratio(1, 2)],
        vec![Rational::ratio(1, 3), Rational::ratio(1, 3), Rational::ratio(1, 3)],
    ];
    let pi = TriangularArray::from_weights(rows).unwrap();
    // x^1 = (1/2) y^0 + (1/2) T x^0 = (1/2, 1, ...); x^2_0 = 1/3 + 1/3 * 0 + 1/3 * 0 = 1/3.
    assert_eq!(shift_linf_iterate(&pi, 1).unwrap(), vec![Rational::ratio(1, 2)]);
    assert_eq!(shift_linf_iterate(&pi, 2).unwrap()[0], Rational::ratio(1, 3));
}

#[test]
fn floor_function_matches_statrs() {
    for n in 1..=20u64 {
        for step in 1..50 {
            let x = step as f64 / 50.0;
            let b = Binomial::new(x, n).unwrap();
            let nx = n as f64 * x;
            let (lo, hi) = (nx.floor() as u64, nx.ceil() as u64);
            let oracle = b.pmf(lo) + b.pmf(hi);
            let ours = binomial_floor_function(n as usize, x).unwrap();
            assert!((ours - oracle).abs() < 1e-12, "n={n} x={x}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn closed_form_infimum_matches_a_scan() {
    for n in 1..=12usize {
        let mut best = f64::INFINITY;
        for k in 0..n {
            // One-sided limits at the discontinuities plus interior points.
            for t in [1e-10, 0.25, 0.5, 0.75, 1.0 - 1e-10] {
                best = best.min(binomial_floor_function(n, (k as f64 + t) / n as f64).unwrap());
            }
        }
        for i in 0..=20_000 {
            best = best.min(binomial_floor_function(n, i as f64 / 20_000.0).unwrap());
        }
        let closed: f64 = inf_f(n).unwrap();
        assert!((best - closed).abs() < 1e-6, "n={n}: scan {best} vs {closed}");
    }
    assert_eq!(inf_f::<Rational>(2).unwrap(), Rational::ratio(3, 4));
    for n in (1..40).step_by(2) {
        assert!(inf_f::<f64>(n).unwrap() >= inf_f::<f64>(n + 1).unwrap());
    }
}

#[test]
fn rotation_values() {
    assert!((rotation_halpern_residual(99).unwrap() - 0.02).abs() < 1e-12);
    for n in 1..=100 {
        assert!((rotation_halpern_residual(n).unwrap() - 2.0 / (n as f64 + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn kim_reproduces_halpern() {
    let rot = Rotation { theta: 0.7 };
    let run = kim_vs_halpern(&|x: &[f64]| rot.apply(x), &[1.0, 0.0], &[0.0, 0.0], 200).unwrap();
    assert!(run.max_gap <= 1e-10, "{}", run.max_gap);
    assert!(run.within_bounds(1e-12));

    let shift = TruncatedShift { dim: 64 };
    let x0 = vec![1.0; 64];
    let run = kim_vs_halpern(&|x: &[f64]| shift.apply(x), &x0, &[0.0; 64], 100).unwrap();
    assert!(run.max_gap <= 1e-10, "{}", run.max_gap);
    assert!(run.within_bounds(1e-12));
}

#[test]
fn csv_has_one_line_per_record() {
    let records: Vec<LabRecord> = (0..3)
        .map(|n| LabRecord { n, residual: 1.0, bound: 0.5, certified: true })
        .collect();
    let csv = lab_csv(&records);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("n,residual,bound,certificate\n"));
}
