use mann_bounds::bounds::{validate_metric, validate_quadrangle};
use mann_bounds::schemes::check_monotone;
use mann_bounds::{build_distance_table, build_worst_case_witness, halpern_distance_recursion, Rational, Scalar, TriangularArray};
use proptest::prelude::*;

fn simplex(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn array_strategy(max_horizon: usize) -> impl Strategy<Value = TriangularArray> {
    (1..=max_horizon).prop_flat_map(|n| {
        let rows: Vec<_> = (1..=n)
            .map(|k| prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], k + 1))
            .collect();
        rows.prop_map(|rows| {
            let mut all = vec![vec![1.0]];
            all.extend(rows.into_iter().map(|mut r| {
                if r.iter().sum::<f64>() == 0.0 {
                    r[0] = 1.0;
                }
                simplex(r)
            }));
            TriangularArray::from_weights(all).unwrap()
        })
    })
}

/// Monotone rows: each row shrinks the previous one and tops it up at `n`.
fn monotone_strategy(max_horizon: usize) -> impl Strategy<Value = TriangularArray> {
    (1..=max_horizon).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..=n), n).prop_map(move |shrink| {
            let mut rows = vec![vec![1.0]];
            for k in 1..=n {
                let prev = &rows[k - 1];
                let mut row: Vec<f64> = prev.iter().enumerate().map(|(i, p)| p * shrink[k - 1][i % shrink[k - 1].len()]).collect();
                row.push(1.0 - row.iter().sum::<f64>());
                rows.push(row);
            }
            TriangularArray::from_weights(rows).unwrap()
        })
    })
}

/// Integer weights, normalized exactly.
fn rational_strategy(max_horizon: usize) -> impl Strategy<Value = TriangularArray<Rational>> {
    (1..=max_horizon).prop_flat_map(|n| {
        let rows: Vec<_> = (1..=n).map(|k| prop::collection::vec(0i64..6, k + 1)).collect();
        rows.prop_map(|rows| {
            let mut all = vec![vec![Rational::ratio(1, 1)]];
            for mut r in rows {
                if r.iter().sum::<i64>() == 0 {
                    r[0] = 1;
                }
                let total: i64 = r.iter().sum();
                all.push(r.into_iter().map(|x| Rational::ratio(x, total)).collect());
            }
            TriangularArray::from_weights(all).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tables_are_metrics_in_the_unit_interval(pi in array_strategy(6)) {
        let table = build_distance_table(&pi).unwrap();
        prop_assert!(validate_metric(&table).is_clean(), "{:?}", validate_metric(&table));
        for r in table.residuals() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(r));
        }
    }

    #[test]
    fn residual_is_the_stage_formula(pi in array_strategy(6)) {
        let table = build_distance_table(&pi).unwrap();
        for n in 1..=pi.horizon() {
            let w = pi.row(n).weights();
            let direct = w[0] + (1..=n).map(|i| w[i] * table.get(i as isize - 1, n as isize)).sum::<f64>();
            prop_assert!((direct - table.residual(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn float_and_exact_tables_agree(pi in rational_strategy(4)) {
        let exact = build_distance_table(&pi).unwrap();
        let float = build_distance_table(&pi.to_f64()).unwrap();
        for n in -1..=pi.horizon() as isize {
            for m in -1..=n {
                prop_assert!((exact.get(m, n).to_f64_lossy() - float.get(m, n)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monotone_arrays_satisfy_the_quadrangle_inequality(pi in monotone_strategy(7)) {
        prop_assume!(check_monotone(&pi).monotone);
        let table = build_distance_table(&pi).unwrap();
        prop_assert!(validate_quadrangle(&table).is_clean(), "{:?}", validate_quadrangle(&table));
    }

    #[test]
    fn witness_attains_every_bound(pi in array_strategy(5)) {
        let w = build_worst_case_witness(&pi, pi.horizon()).unwrap();
        prop_assert!(w.report.passed(), "{:?}", w.report);
    }

    #[test]
    fn halpern_recursion_matches_transport(steps in prop::collection::vec(0.0f64..=1.0, 1..10)) {
        let mut betas = vec![0.0];
        let mut sorted = steps;
        sorted.sort_by(f64::total_cmp);
        betas.extend(sorted);
        let n = betas.len() - 1;
        let rows: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let mut r = vec![0.0; k + 1];
                r[0] += 1.0 - betas[k];
                r[k] += betas[k];
                r
            })
            .collect();
        let table = build_distance_table(&TriangularArray::from_weights(rows).unwrap()).unwrap();
        let rec = halpern_distance_recursion(&betas).unwrap();
        for b in 0..=n as isize {
            for a in -1..=b {
                prop_assert!((rec.get(a, b) - table.get(a, b)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn identity_dirac_array_has_unit_residuals() {
    let rows: Vec<Vec<f64>> = (0..=5).map(|n| { let mut r = vec![0.0; n + 1]; r[0] = 1.0; r }).collect();
    let table = build_distance_table(&TriangularArray::from_weights(rows).unwrap()).unwrap();
    assert!(table.residuals().iter().all(|r| (r - 1.0).abs() < 1e-15));
}
