use mann_bounds::bounds::DistanceTable;
use mann_bounds::{build_distance_table, greedy_monotone_transport, solve_transport, CostMatrix, Distribution, TriangularArray};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Probability vector with some exact zeros to exercise degenerate bases.
fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], len)
        .prop_filter("nonzero mass", |v| v.iter().sum::<f64>() > 0.0)
        .prop_map(normalized)
}

/// A metric cost on points `0..len` from a random table of a Halpern-like array,
/// restricted to the given shape.
fn metric_costs(rows: usize, cols: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..cols.max(rows)).map(|_| (rng.random(), rng.random())).collect();
    CostMatrix::from_fn(rows, cols, |i, j| {
        let (p, q) = (points[i], points[j]);
        ((p.0 - q.0).abs().max((p.1 - q.1).abs())).min(1.0)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn strong_duality_and_simple_plans(
        (a, b) in (1usize..9, 1usize..9).prop_flat_map(|(r, c)| (weights(r), weights(c))),
        seed in any::<u64>(),
    ) {
        let costs = metric_costs(a.len(), b.len(), seed);
        let (source, target) = (Distribution::new(a).unwrap(), Distribution::new(b).unwrap());
        let plan = solve_transport(&source, &target, &costs).unwrap();
        let check = plan.check(&source, &target, &costs);
        prop_assert!(check.is_optimal(), "{check:?}");
        prop_assert!(check.is_simple(), "{check:?}");
        let low = plan.dual_u.iter().chain(&plan.dual_v).cloned().fold(f64::INFINITY, f64::min);
        let high = plan.dual_u.iter().chain(&plan.dual_v).cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(low.abs() < 1e-12 && high <= 1.0 + 1e-10, "duals span [{low}, {high}]");
    }

    #[test]
    fn relabelling_preserves_the_objective(
        (a, b) in (2usize..7, 2usize..7).prop_flat_map(|(r, c)| (weights(r), weights(c))),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let costs = CostMatrix::from_fn(a.len(), b.len(), |_, _| rng.random::<f64>()).unwrap();
        let plan = solve_transport(&Distribution::new(a.clone()).unwrap(), &Distribution::new(b.clone()).unwrap(), &costs).unwrap();
        let row_perm: Vec<usize> = (0..a.len()).rev().collect();
        let mut col_perm: Vec<usize> = (0..b.len()).collect();
        col_perm.rotate_left(1);
        let a2: Vec<f64> = row_perm.iter().map(|&i| a[i]).collect();
        let b2: Vec<f64> = col_perm.iter().map(|&j| b[j]).collect();
        let permuted = solve_transport(
            &Distribution::new(a2).unwrap(),
            &Distribution::new(b2).unwrap(),
            &costs.permuted(&row_perm, &col_perm),
        ).unwrap();
        prop_assert!((plan.objective - permuted.objective).abs() < 1e-10);
    }
}

/// Monotone array whose rows keep at least half of their mass on the top index,
/// so both the monotonicity and the tail condition hold.
fn random_monotone_array(rng: &mut ChaCha8Rng, horizon: usize) -> TriangularArray {
    let mut rows = vec![vec![1.0]];
    for n in 1..=horizon {
        let prev: &Vec<f64> = &rows[n - 1];
        let mut row: Vec<f64> = prev.iter().map(|p| p * rng.random::<f64>()).collect();
        let kept: f64 = row.iter().sum();
        let budget = 0.5 * rng.random::<f64>();
        if kept > budget {
            row.iter_mut().for_each(|x| *x *= budget / kept);
        }
        let rest = 1.0 - row.iter().sum::<f64>();
        row.push(rest);
        rows.push(row);
    }
    TriangularArray::from_weights(rows).unwrap()
}

#[test]
fn greedy_agrees_with_simplex_on_monotone_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0;
    while compared < 1000 {
        let n = rng.random_range(1..=12usize);
        let pi = random_monotone_array(&mut rng, n);
        let table: DistanceTable = build_distance_table(&pi.truncated(n - 1).unwrap()).unwrap();
        let m = rng.random_range(0..n);
        let costs = table.stage_costs(m, n);
        let greedy = greedy_monotone_transport(pi.row(m), pi.row(n), &costs).expect("preconditions hold");
        let lp = solve_transport(pi.row(m), pi.row(n), &costs).unwrap();
        assert!(
            (greedy.objective - lp.objective).abs() <= 1e-10,
            "n={n} m={m}: greedy {} vs simplex {}",
            greedy.objective,
            lp.objective
        );
        assert!(greedy.check(pi.row(m), pi.row(n), &costs).is_optimal());
        compared += 1;
    }
}

#[test]
fn greedy_matches_simplex_at_stage_five() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pi = random_monotone_array(&mut rng, 5);
    let table = build_distance_table(&pi.truncated(4).unwrap()).unwrap();
    for m in 0..5 {
        let costs = table.stage_costs(m, 5);
        let g = greedy_monotone_transport(pi.row(m), pi.row(5), &costs).unwrap();
        let s = solve_transport(pi.row(m), pi.row(5), &costs).unwrap();
        assert!((g.objective - s.objective).abs() <= 1e-10);
    }
}

#[test]
fn large_degenerate_problem_terminates() {
    // Uniform margins with many ties in the costs.
    let size = 120;
    let w = Distribution::new(vec![1.0 / size as f64; size]).unwrap();
    let costs = CostMatrix::from_fn(size, size, |i, j| if i == j { 0.0 } else { 0.5 }).unwrap();
    let shifted: Vec<f64> = (0..size).map(|i| if i % 2 == 0 { 2.0 / size as f64 } else { 0.0 }).collect();
    let plan = solve_transport(&w, &Distribution::new(shifted.clone()).unwrap(), &costs).unwrap();
    assert!((plan.objective - 0.25).abs() < 1e-10);
    assert!(plan.check(&w, &Distribution::new(shifted).unwrap(), &costs).is_optimal());
}
