//! Closed-form nested transport for monotone arrays.
//!
//! When `pi^n_i <= pi^m_i` for `i <= m` and the tail condition
//! `pi^m_m >= sum_{j=m}^{n-1} pi^n_j` holds, an optimal plan keeps the shared
//! mass in place, ships the top source point `m` onto the targets `m+1..n-1`
//! and sends every remaining surplus to `n`. The plan is only returned after
//! its complementary dual has been checked for feasibility, so a returned plan
//! is always optimal even if the quadrangle inequality fails for the table.

use thiserror::Error;

use super::{normalize_duals, plan_cost, CostMatrix, Distribution, TransportPlan};
use crate::scalar::Scalar;

/// Why the closed-form plan was not produced. Callers fall back to the simplex.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum GreedyRefusal {
    #[error("shape: {0}")]
    Shape(String),
    #[error("target weight {index} exceeds the source weight")]
    NotMonotone { index: usize },
    #[error("tail condition fails by {deficit:e}")]
    TailCondition { deficit: f64 },
    #[error("dual constraint ({i}, {j}) violated by {excess:e}")]
    DualInfeasible { i: usize, j: usize, excess: f64 },
}

fn slack<S: Scalar>() -> S {
    if S::is_exact() {
        S::zero()
    } else {
        S::from_f64(1e-11).expect("finite")
    }
}

/// Builds the nested plan from row `pi^m` (source) to row `pi^n` (target).
pub fn greedy_monotone_transport<S: Scalar>(
    source: &Distribution<S>,
    target: &Distribution<S>,
    costs: &CostMatrix<S>,
) -> Result<TransportPlan<S>, GreedyRefusal> {
    let (m, n) = (source.top(), target.top());
    if costs.rows() != m + 1 || costs.cols() != n + 1 {
        return Err(GreedyRefusal::Shape(format!(
            "costs are {}x{} for supports 0..={m} and 0..={n}",
            costs.rows(),
            costs.cols()
        )));
    }
    if m > n {
        return Err(GreedyRefusal::Shape(format!("source support 0..={m} is larger than target 0..={n}")));
    }
    let a = source.weights();
    let b = target.weights();
    let tol = slack::<S>();

    if m == n {
        if let Some(index) = (0..=m).find(|&i| !(a[i].clone() - b[i].clone()).abs().le(&tol)) {
            return Err(GreedyRefusal::NotMonotone { index });
        }
        return Ok(TransportPlan {
            flows: (0..=m).filter(|&i| b[i] > S::zero()).map(|i| (i, i, b[i].clone())).collect(),
            objective: S::zero(),
            dual_u: vec![S::zero(); n + 1],
            dual_v: vec![S::zero(); m + 1],
        });
    }

    if let Some(index) = (0..=m).find(|&i| b[i].clone() > a[i].clone() + tol.clone()) {
        return Err(GreedyRefusal::NotMonotone { index });
    }
    let shipped = b[m..n].iter().fold(S::zero(), |acc, w| acc + w.clone());
    let top_to_n = a[m].clone() - shipped;
    if top_to_n < -tol.clone() {
        return Err(GreedyRefusal::TailCondition { deficit: -top_to_n.to_f64_lossy() });
    }

    let mut flows = Vec::with_capacity(n + m + 2);
    let clamp = |x: S| if x < S::zero() { S::zero() } else { x };
    for i in 0..m {
        flows.push((i, i, b[i].clone()));
        flows.push((i, n, clamp(a[i].clone() - b[i].clone())));
    }
    flows.push((m, m, b[m].clone()));
    for (j, bj) in b.iter().enumerate().take(n).skip(m + 1) {
        flows.push((m, j, bj.clone()));
    }
    flows.push((m, n, clamp(top_to_n)));
    flows.retain(|(_, _, z)| *z > S::zero());
    flows.sort_by_key(|&(i, j, _)| (i, j));

    // Potentials making every used cell tight, anchored at u_n = 1.
    let c = |i: usize, j: usize| costs.get(i, j).clone();
    let mut dual_v: Vec<S> = (0..=m).map(|i| S::one() - c(i, n)).collect();
    let mut dual_u: Vec<S> = Vec::with_capacity(n + 1);
    dual_u.extend(dual_v.iter().cloned());
    for j in m + 1..=n {
        dual_u.push(dual_v[m].clone() + c(m, j));
    }
    for i in 0..=m {
        for j in 0..=n {
            let excess = dual_u[j].clone() - dual_v[i].clone() - c(i, j);
            if excess > tol {
                return Err(GreedyRefusal::DualInfeasible { i, j, excess: excess.to_f64_lossy() });
            }
        }
    }
    // Tightening makes the potentials 1-Lipschitz on the whole target support.
    normalize_duals(&mut dual_u, &mut dual_v, costs);
    let objective = plan_cost(&flows, costs);
    Ok(TransportPlan { flows, objective, dual_u, dual_v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::transport::solve_transport;

    fn dist(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn halpern_pair_matches_recursion() {
        // pi^1 = (1/2, 1/2), pi^2 = (3/8, 0, 5/8); d(0,1) = 1/2.
        let r = |p, q| Rational::ratio(p, q);
        let source = Distribution::new(vec![r(1, 2), r(1, 2)]).unwrap();
        let target = Distribution::new(vec![r(3, 8), r(0, 1), r(5, 8)]).unwrap();
        let costs = CostMatrix::new(2, 3, vec![r(0, 1), r(1, 1), r(1, 1), r(1, 1), r(0, 1), r(1, 2)]).unwrap();
        let plan = greedy_monotone_transport(&source, &target, &costs).unwrap();
        // |beta_1 - beta_2| + beta_1 * d(0, 1) = 1/8 + 1/4.
        assert_eq!(plan.objective, r(3, 8));
        assert_eq!(plan.dual_objective(&source, &target), r(3, 8));
        let lp = solve_transport(&source, &target, &costs).unwrap();
        assert_eq!(lp.objective, plan.objective);
    }

    #[test]
    fn equal_rows_give_diagonal_plan() {
        let w = dist(&[0.25, 0.75]);
        let costs = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let plan = greedy_monotone_transport(&w, &w, &costs).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert!(plan.flows.iter().all(|(i, j, _)| i == j));
    }

    #[test]
    fn refuses_non_monotone_rows() {
        let costs = CostMatrix::new(2, 3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.5]).unwrap();
        let err = greedy_monotone_transport(&dist(&[0.2, 0.8]), &dist(&[0.5, 0.0, 0.5]), &costs).unwrap_err();
        assert_eq!(err, GreedyRefusal::NotMonotone { index: 0 });
    }

    #[test]
    fn refuses_when_tail_condition_fails() {
        // The top source weight 0.1 cannot cover target indices 1..=2.
        let costs = CostMatrix::from_fn(2, 4, |i, j| if i == j { 0.0 } else { 0.5 + 0.1 * j as f64 }).unwrap();
        let err = greedy_monotone_transport(&dist(&[0.9, 0.1]), &dist(&[0.1, 0.0, 0.5, 0.4]), &costs).unwrap_err();
        assert!(matches!(err, GreedyRefusal::TailCondition { .. }), "{err:?}");
    }
}
