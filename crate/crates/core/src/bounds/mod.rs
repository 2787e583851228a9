//! Distance tables and residual bounds.
//!
//! For a triangular array `pi`, the bounds `d(m, n)` on `||x^m - x^n||` are
//! defined over indices `-1..=N` by `d(-1, -1) = 0`, `d(-1, k) = 1` and, for
//! `0 <= m < n`, the optimal cost of transporting `pi^m` onto `pi^n` with unit
//! costs `d(i-1, j-1)`. The residual bound is `R_n = sum_i pi^n_i d(i-1, n)`.
//!
//! Distances are filled stage by stage: stage `n` only needs the entries
//! `d(i, j)` with `i, j < n`, and its `n` transport problems are independent.

mod array;
mod validate;
mod witness;

pub use array::{parse_array, TriangularArray};
pub use validate::{validate_metric, validate_quadrangle, Violation, ViolationReport};
pub use witness::{build_worst_case_witness, witness_from_table, WitnessReport, WorstCaseWitness};

use rayon::prelude::*;

use crate::scalar::Scalar;
use crate::transport::{greedy_monotone_transport, solve_transport, CostMatrix, Distribution, TransportPlan};
use crate::{Error, Result};

/// How a transport problem was solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Greedy,
    Simplex,
}

/// Symmetric table `d(m, n)` over `-1..=N` with residuals `R_0..=R_N`.
///
/// Tables built from an array also keep every optimal plan, which the
/// worst-case witness needs.
#[derive(Clone, Debug)]
pub struct DistanceTable<S: Scalar = f64> {
    /// `lower[n + 1][m + 1] = d(m, n)` for `-1 <= m <= n`.
    lower: Vec<Vec<S>>,
    residuals: Vec<S>,
    /// `plans[n][m]` solves the problem from `pi^m` to `pi^n`, `m < n`.
    plans: Vec<Vec<TransportPlan<S>>>,
    methods: Vec<Vec<Method>>,
}

impl<S: Scalar> DistanceTable<S> {
    /// Table for the horizon-0 array `pi^0 = delta^0`.
    pub fn initial() -> Self {
        Self {
            lower: vec![vec![S::zero()], vec![S::one(), S::zero()]],
            residuals: vec![S::one()],
            plans: vec![Vec::new()],
            methods: vec![Vec::new()],
        }
    }

    pub fn horizon(&self) -> usize {
        self.residuals.len() - 1
    }

    /// `d(m, n)` for `-1 <= m, n <= N`, in either order.
    pub fn get(&self, m: isize, n: isize) -> S {
        let (a, b) = if m <= n { (m, n) } else { (n, m) };
        assert!(a >= -1 && b <= self.horizon() as isize, "index ({m}, {n}) outside the table");
        self.lower[(b + 1) as usize][(a + 1) as usize].clone()
    }

    pub fn residual(&self, n: usize) -> S {
        self.residuals[n].clone()
    }

    pub fn residuals(&self) -> &[S] {
        &self.residuals
    }

    /// Optimal plan from `pi^m` to `pi^n`, when the table was built from an array.
    pub fn plan(&self, m: usize, n: usize) -> Option<&TransportPlan<S>> {
        self.plans.get(n).and_then(|row| row.get(m))
    }

    pub fn method(&self, m: usize, n: usize) -> Option<Method> {
        self.methods.get(n).and_then(|row| row.get(m)).copied()
    }

    /// Number of stage problems solved by the closed form and by the simplex.
    pub fn method_counts(&self) -> (usize, usize) {
        let all = self.methods.iter().flatten();
        let greedy = all.clone().filter(|m| **m == Method::Greedy).count();
        (greedy, all.count() - greedy)
    }

    /// Overwrites one symmetric entry. Intended for constructing hypothetical
    /// tables, for instance to exercise the validators.
    pub fn with_entry(mut self, m: isize, n: isize, value: S) -> Self {
        let (a, b) = if m <= n { (m, n) } else { (n, m) };
        self.lower[(b + 1) as usize][(a + 1) as usize] = value;
        self
    }

    pub fn to_f64(&self) -> DistanceTable<f64> {
        DistanceTable {
            lower: self.lower.iter().map(|r| crate::scalar::to_f64_vec(r)).collect(),
            residuals: crate::scalar::to_f64_vec(&self.residuals),
            plans: self.plans.iter().map(|r| r.iter().map(TransportPlan::to_f64).collect()).collect(),
            methods: self.methods.clone(),
        }
    }

    /// Costs `d(i-1, j-1)` for the problem from `pi^m` to a row on `0..=n`.
    /// Needs the table to cover index `n - 1`.
    pub fn stage_costs(&self, m: usize, n: usize) -> CostMatrix<S> {
        CostMatrix::from_fn(m + 1, n + 1, |i, j| self.get(i as isize - 1, j as isize - 1))
            .expect("table entries lie in [0, 1]")
    }

    /// Distances from every committed row to a candidate row `pi^n`,
    /// `n = horizon + 1`, together with the optimal plans. Does not modify the table.
    pub fn evaluate_stage(&self, rows: &[Distribution<S>], candidate: &Distribution<S>) -> Result<Stage<S>> {
        let n = self.horizon() + 1;
        if rows.len() != n || candidate.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "stage {n} needs {n} committed rows and a candidate on 0..={n}, got {} rows and {} weights",
                rows.len(),
                candidate.len()
            )));
        }
        let solve = |m: usize| -> Result<(TransportPlan<S>, Method)> {
            let costs = self.stage_costs(m, n);
            match greedy_monotone_transport(&rows[m], candidate, &costs) {
                Ok(plan) => Ok((plan, Method::Greedy)),
                Err(_) => solve_transport(&rows[m], candidate, &costs).map(|p| (p, Method::Simplex)),
            }
        };
        let solved: Vec<(TransportPlan<S>, Method)> = if n >= 8 {
            (0..n).into_par_iter().map(solve).collect::<Result<_>>()?
        } else {
            (0..n).map(solve).collect::<Result<_>>()?
        };
        let distances: Vec<S> = solved.iter().map(|(p, _)| p.objective.clone()).collect();
        // R_n = pi^n_0 d(-1, n) + sum_{i >= 1} pi^n_i d(i-1, n).
        let w = candidate.weights();
        let residual = w[1..]
            .iter()
            .zip(&distances)
            .fold(w[0].clone(), |acc, (p, d)| acc + p.clone() * d.clone());
        let (plans, methods) = solved.into_iter().unzip();
        Ok(Stage { distances, residual, plans, methods })
    }

    /// Appends a solved stage, growing the horizon by one.
    pub fn commit(&mut self, stage: Stage<S>) {
        let mut row = Vec::with_capacity(stage.distances.len() + 2);
        row.push(S::one());
        row.extend(stage.distances);
        row.push(S::zero());
        self.lower.push(row);
        self.residuals.push(stage.residual);
        self.plans.push(stage.plans);
        self.methods.push(stage.methods);
    }
}

/// Result of one stage: `d(m, n)` for `m < n`, `R_n`, and the plans.
#[derive(Clone, Debug)]
pub struct Stage<S: Scalar = f64> {
    pub distances: Vec<S>,
    pub residual: S,
    pub plans: Vec<TransportPlan<S>>,
    pub methods: Vec<Method>,
}

/// Computes `d(m, n)` and `R_n` for the whole array.
///
/// Each problem first tries the closed-form nested plan and falls back to the
/// transportation simplex when the closed form does not certify.
pub fn build_distance_table<S: Scalar>(pi: &TriangularArray<S>) -> Result<DistanceTable<S>> {
    let mut table = DistanceTable::initial();
    for n in 1..=pi.horizon() {
        let stage = table.evaluate_stage(&pi.rows()[..n], pi.row(n))?;
        table.commit(stage);
    }
    Ok(table)
}

/// Table of the Halpern array `pi^n = (1 - beta_n) delta^0 + beta_n delta^n`
/// from the recursion `d(m, n) = |beta_m - beta_n| + min(beta_m, beta_n) d(m-1, n-1)`.
pub fn halpern_distance_recursion<S: Scalar>(betas: &[S]) -> Result<DistanceTable<S>> {
    if betas.is_empty() || !betas[0].is_zero() {
        return Err(Error::InvalidInput("Halpern stepsizes must start with beta_0 = 0".into()));
    }
    if let Some(n) = betas.iter().position(|b| *b < S::zero() || *b > S::one()) {
        return Err(Error::InvalidInput(format!("beta_{n} = {} outside [0, 1]", betas[n])));
    }
    let horizon = betas.len() - 1;
    let mut lower: Vec<Vec<S>> = Vec::with_capacity(horizon + 2);
    lower.push(vec![S::zero()]);
    let mut residuals = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let mut row = Vec::with_capacity(n + 2);
        row.push(S::one());
        for m in 0..n {
            let (bm, bn) = (&betas[m], &betas[n]);
            let prev = lower[n][m].clone(); // d(m-1, n-1)
            row.push((bm.clone() - bn.clone()).abs() + S::min_of(bm, bn) * prev);
        }
        row.push(S::zero());
        let r = if n == 0 {
            S::one()
        } else {
            S::one() - betas[n].clone() + betas[n].clone() * row[n].clone()
        };
        residuals.push(r);
        lower.push(row);
    }
    Ok(DistanceTable { lower, residuals, plans: Vec::new(), methods: Vec::new() })
}
