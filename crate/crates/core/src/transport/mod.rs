//! Finite transportation problems between two rows of a triangular array.
//!
//! The source is row `pi^m` (indices `0..=m`), the target is row `pi^n`
//! (indices `0..=n`) and moving a unit of mass from `i` to `j` costs
//! `d(i-1, j-1)`. Both margins live on the same index set, so index `i` of the
//! source and index `i` of the target are the same support point.
//!
//! Dual convention: `dual_u` is indexed by target points, `dual_v` by source
//! points, feasibility reads `u[j] - v[i] <= cost(i, j)` and the dual objective
//! is `<target, u> - <source, v>`.

mod greedy;
mod simplex;

pub use greedy::{greedy_monotone_transport, GreedyRefusal};
pub use simplex::solve_transport;

use serde::Serialize;

use crate::scalar::{self, Scalar};
use crate::{Error, Result};

/// Probability vector on `{0, ..., n}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Distribution<S: Scalar = f64> {
    #[serde(serialize_with = "crate::report::serialize_scalars")]
    weights: Vec<S>,
}

impl<S: Scalar> Distribution<S> {
    /// Validates nonnegativity and unit mass. For `f64`, entries in
    /// `[-1e-14, 0)` are treated as rounding noise and clamped to zero.
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NotAProbability("empty weight vector".into()));
        }
        let noise = S::from_f64(if S::is_exact() { 0.0 } else { 1e-14 }).unwrap_or_else(S::zero);
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if *w < S::zero() {
                if -w.clone() > noise {
                    return Err(Error::NotAProbability(format!("weight {i} is negative ({w})")));
                }
                *w = S::zero();
            }
        }
        let total = scalar::sum(&weights);
        let tol = S::from_f64(if S::is_exact() { 0.0 } else { 1e-12 }).unwrap_or_else(S::zero);
        if (total.clone() - S::one()).abs() > tol {
            return Err(Error::NotAProbability(format!("weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    /// Point mass at `k` on the support `{0, ..., n}`.
    pub fn dirac(n: usize, k: usize) -> Self {
        assert!(k <= n, "dirac index {k} outside support 0..={n}");
        let mut weights = vec![S::zero(); n + 1];
        weights[k] = S::one();
        Self { weights }
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest support index `n`.
    pub fn top(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn get(&self, i: usize) -> S {
        self.weights.get(i).cloned().unwrap_or_else(S::zero)
    }

    pub fn to_f64(&self) -> Distribution<f64> {
        Distribution { weights: scalar::to_f64_vec(&self.weights) }
    }
}

/// Dense `(m+1) x (n+1)` cost matrix with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<S: Scalar = f64> {
    rows: usize,
    cols: usize,
    entries: Vec<S>,
}

impl<S: Scalar> CostMatrix<S> {
    pub fn new(rows: usize, cols: usize, entries: Vec<S>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "cost matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for (k, c) in entries.iter().enumerate() {
            if c.lt_eps(&S::zero()) || c.gt_eps(&S::one()) {
                return Err(Error::InvalidInput(format!(
                    "cost ({}, {}) = {c} outside [0, 1]",
                    k / cols,
                    k % cols
                )));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.cols + j]
    }

    /// Applies the same relabelling to row and column indices.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(row_perm[i], col_perm[j]).clone())
            .expect("permutation keeps entries in range")
    }
}

/// An optimal plan with optimal dual multipliers.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct TransportPlan<S: Scalar = f64> {
    /// Positive flows `(source index, target index, mass)`.
    #[serde(serialize_with = "crate::report::serialize_flows")]
    pub flows: Vec<(usize, usize, S)>,
    #[serde(serialize_with = "crate::report::serialize_scalar")]
    pub objective: S,
    /// Potentials on target points, normalized so the smallest dual value is zero.
    #[serde(serialize_with = "crate::report::serialize_scalars")]
    pub dual_u: Vec<S>,
    /// Potentials on source points, on the same scale as `dual_u`.
    #[serde(serialize_with = "crate::report::serialize_scalars")]
    pub dual_v: Vec<S>,
}

/// Residuals of the optimality conditions of a plan.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlanCheck {
    pub marginal_error: f64,
    pub negative_flow: f64,
    pub dual_violation: f64,
    pub duality_gap: f64,
    pub slackness_violation: f64,
    /// Largest `min(source[i], target[i]) - flow(i, i)` over shared indices.
    pub diagonal_defect: f64,
}

impl PlanCheck {
    /// Feasibility 1e-10, duality and slackness 1e-9.
    pub fn is_optimal(&self) -> bool {
        self.marginal_error <= 1e-10
            && self.negative_flow <= 1e-10
            && self.dual_violation <= 1e-10
            && self.duality_gap <= 1e-9
            && self.slackness_violation <= 1e-9
    }

    pub fn is_simple(&self) -> bool {
        self.diagonal_defect <= 1e-10
    }
}

impl<S: Scalar> TransportPlan<S> {
    pub fn flow(&self, i: usize, j: usize) -> S {
        self.flows
            .iter()
            .find(|(a, b, _)| *a == i && *b == j)
            .map(|(_, _, z)| z.clone())
            .unwrap_or_else(S::zero)
    }

    pub fn total_mass(&self) -> S {
        self.flows.iter().fold(S::zero(), |acc, (_, _, z)| acc + z.clone())
    }

    /// Dual objective `<target, u> - <source, v>`.
    pub fn dual_objective(&self, source: &Distribution<S>, target: &Distribution<S>) -> S {
        scalar::dot(target.weights(), &self.dual_u) - scalar::dot(source.weights(), &self.dual_v)
    }

    /// Evaluates primal feasibility, dual feasibility, strong duality,
    /// complementary slackness and the diagonal property against the data.
    pub fn check(&self, source: &Distribution<S>, target: &Distribution<S>, costs: &CostMatrix<S>) -> PlanCheck {
        let (rows, cols) = (source.len(), target.len());
        let mut row_sum = vec![0.0; rows];
        let mut col_sum = vec![0.0; cols];
        let mut negative_flow = 0.0f64;
        let mut primal = 0.0;
        let mut slackness = 0.0f64;
        for (i, j, z) in &self.flows {
            let z = z.to_f64_lossy();
            row_sum[*i] += z;
            col_sum[*j] += z;
            negative_flow = negative_flow.max(-z);
            let c = costs.get(*i, *j).to_f64_lossy();
            primal += z * c;
            if z > 1e-12 {
                let reduced = self.dual_u[*j].to_f64_lossy() - self.dual_v[*i].to_f64_lossy() - c;
                slackness = slackness.max(reduced.abs());
            }
        }
        let marginal_error = row_sum
            .iter()
            .zip(source.weights())
            .chain(col_sum.iter().zip(target.weights()))
            .map(|(s, w)| (s - w.to_f64_lossy()).abs())
            .fold(0.0, f64::max);
        let mut dual_violation = 0.0f64;
        for i in 0..rows {
            for j in 0..cols {
                let excess = self.dual_u[j].to_f64_lossy()
                    - self.dual_v[i].to_f64_lossy()
                    - costs.get(i, j).to_f64_lossy();
                dual_violation = dual_violation.max(excess);
            }
        }
        let dual = self.dual_objective(source, target).to_f64_lossy();
        let mut diagonal_defect = 0.0f64;
        for i in 0..rows.min(cols) {
            let want = source.weights()[i].to_f64_lossy().min(target.weights()[i].to_f64_lossy());
            diagonal_defect = diagonal_defect.max(want - self.flow(i, i).to_f64_lossy());
        }
        PlanCheck {
            marginal_error,
            negative_flow,
            dual_violation,
            duality_gap: (self.objective.to_f64_lossy() - dual)
                .abs()
                .max((primal - self.objective.to_f64_lossy()).abs()),
            slackness_violation: slackness,
            diagonal_defect,
        }
    }

    pub fn to_f64(&self) -> TransportPlan<f64> {
        TransportPlan {
            flows: self.flows.iter().map(|(i, j, z)| (*i, *j, z.to_f64_lossy())).collect(),
            objective: self.objective.to_f64_lossy(),
            dual_u: scalar::to_f64_vec(&self.dual_u),
            dual_v: scalar::to_f64_vec(&self.dual_v),
        }
    }
}

pub(crate) fn check_shapes<S: Scalar>(
    source: &Distribution<S>,
    target: &Distribution<S>,
    costs: &CostMatrix<S>,
) -> Result<()> {
    if costs.rows() != source.len() || costs.cols() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "costs are {}x{} but margins have {} and {} points",
            costs.rows(),
            costs.cols(),
            source.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Tightens a feasible dual pair by a double c-transform and shifts it so the
/// smallest value is zero.
///
/// `u_j <- min_i v_i + c(i, j)` and then `v_i <- max_j u_j - c(i, j)`. Both steps
/// keep feasibility, never lower the dual objective and keep every equality
/// `u_j - v_i = c(i, j)` on cells carrying positive flow. When costs vanish on
/// shared indices and obey the triangle inequality, the result satisfies
/// `v_i = u_i` and every value lies in `[0, 1]`.
pub(crate) fn normalize_duals<S: Scalar>(u: &mut [S], v: &mut [S], costs: &CostMatrix<S>) {
    for (j, uj) in u.iter_mut().enumerate() {
        let best = (0..v.len())
            .map(|i| v[i].clone() + costs.get(i, j).clone())
            .reduce(|a, b| S::min_of(&a, &b))
            .expect("at least one source point");
        *uj = best;
    }
    for (i, vi) in v.iter_mut().enumerate() {
        let best = (0..u.len())
            .map(|j| u[j].clone() - costs.get(i, j).clone())
            .reduce(|a, b| S::max_of(&a, &b))
            .expect("at least one target point");
        *vi = best;
    }
    let shift = u
        .iter()
        .chain(v.iter())
        .cloned()
        .reduce(|a, b| S::min_of(&a, &b))
        .expect("nonempty duals");
    for x in u.iter_mut().chain(v.iter_mut()) {
        *x = x.clone() - shift.clone();
    }
}

/// Dense flows to the sparse representation, dropping zeros.
pub(crate) fn sparse_flows<S: Scalar>(dense: &[S], cols: usize) -> Vec<(usize, usize, S)> {
    dense
        .iter()
        .enumerate()
        .filter(|(_, z)| **z > S::zero())
        .map(|(k, z)| (k / cols, k % cols, z.clone()))
        .collect()
}

pub(crate) fn plan_cost<S: Scalar>(flows: &[(usize, usize, S)], costs: &CostMatrix<S>) -> S {
    flows
        .iter()
        .fold(S::zero(), |acc, (i, j, z)| acc + z.clone() * costs.get(*i, *j).clone())
}
