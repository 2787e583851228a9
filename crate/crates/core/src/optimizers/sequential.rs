//! Sequential and monotone sequential optimization.
//!
//! Both freeze `pi^0..pi^{n-1}` and the distances among them, then choose
//! `pi^n` to minimize `R_n`. In the monotone problem the objective is the
//! explicit quadratic of [`monotone_stage_qp`] over a box-and-simplex polytope,
//! solved by maximal-violating-pair descent from several starts, an active-set
//! Newton polish and, for small `n`, global face enumeration. The
//! unconstrained problem evaluates `R_n` through the transport solvers and
//! descends along pairwise mass moves chosen by the transport duals, starting
//! from the monotone solution so that its value never exceeds it.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::{monotone_stage_qp, sequential_stage_qp, solve_linear, QuadraticProgram};
use super::line_search::brent;
use super::{candidate_order, ExactSolution, Mode, OptimizationResult, OptimizerConfig, StageMethod, StageRecord};
use crate::bounds::{DistanceTable, TriangularArray};
use crate::scalar::Rational;
use crate::transport::Distribution;
use crate::{Error, Result};

/// Largest stage solved by face enumeration in the monotone problem.
const MONOTONE_ORACLE_LIMIT: usize = 4;
/// Largest stage solved by face enumeration in the unconstrained problem.
const SEQUENTIAL_ORACLE_LIMIT: usize = 2;
/// Agreement required between the quadratic model and the transport value.
const MODEL_CHECK: f64 = 1e-9;
/// Values closer than this are treated as tied in favour of enumerated points.
const TIE: f64 = 1e-13;

/// Runs stages `1..=horizon` of the sequential (`monotone = false`) or
/// monotone sequential (`monotone = true`) problem.
pub fn optimize_sequential(horizon: usize, cfg: &OptimizerConfig, monotone: bool) -> Result<OptimizationResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut table = DistanceTable::<f64>::initial();
    let mut rows = vec![Distribution::<f64>::dirac(0, 0)];
    let mut stages = Vec::with_capacity(horizon);
    let oracle_limit = if monotone { MONOTONE_ORACLE_LIMIT } else { SEQUENTIAL_ORACLE_LIMIT };
    let mut exact = cfg.exact.then(|| (DistanceTable::<Rational>::initial(), vec![Distribution::<Rational>::dirac(0, 0)]));

    for n in 1..=horizon {
        let (row, gap, method) = match exact.as_mut() {
            Some((table_q, rows_q)) if n <= oracle_limit => {
                let qp = if monotone { monotone_stage_qp(table_q, rows_q) } else { sequential_stage_qp(table_q, rows_q) };
                let (x, value) = qp.solve_by_faces().ok_or_else(|| Error::Infeasible {
                    stage: n,
                    detail: "no feasible stationary point on any face".into(),
                })?;
                let row_q = Distribution::new(x[..=n].to_vec())?;
                let stage_q = table_q.evaluate_stage(rows_q, &row_q)?;
                if stage_q.residual != value {
                    return Err(Error::Certification {
                        m: -1,
                        n: n as isize,
                        detail: format!("stage model value {value} differs from the transport value {}", stage_q.residual),
                    });
                }
                table_q.commit(stage_q);
                rows_q.push(row_q.clone());
                (row_q.to_f64(), 0.0, StageMethod::FaceEnumeration)
            }
            _ => {
                let seed = stage_seed(cfg.seed, n);
                let (ms_row, ms_gap, ms_method) = monotone_stage(&table, &rows, cfg, seed)?;
                if monotone {
                    (ms_row, ms_gap, ms_method)
                } else {
                    let (row, gap, method) = sequential_stage(&table, &rows, cfg, seed, ms_row)?;
                    (row, gap, method)
                }
            }
        };
        let stage = table.evaluate_stage(&rows, &row)?;
        stages.push(StageRecord { n, value: stage.residual, gap, method });
        table.commit(stage);
        rows.push(row);
    }

    let exact = match exact {
        Some((table_q, rows_q)) => Some(ExactSolution { array: TriangularArray::new(rows_q)?, residuals: table_q.residuals().to_vec() }),
        None => None,
    };
    Ok(OptimizationResult {
        mode: if monotone { Mode::MonotoneSequential } else { Mode::Sequential },
        array: TriangularArray::new(rows)?,
        value_trace: table.residuals().to_vec(),
        stages,
        exact,
        stepsizes: None,
        wall_time: start.elapsed(),
    })
}

pub(crate) fn stage_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    let mut p: Vec<f64> = y.iter().map(|v| (v - theta).max(0.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Sets the last coordinate so that the row sums to one exactly in floating point.
fn close_row(mut p: Vec<f64>) -> Vec<f64> {
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let last = p.len() - 1;
    let rest: f64 = p[..last].iter().sum();
    p[last] = (1.0 - rest).max(0.0);
    p
}

/// Box-constrained form of the monotone stage problem:
/// `min g'p + p'Hp` with `lo <= p <= hi` and `sum p = 1`.
struct BoxQp {
    g: Vec<f64>,
    h: Vec<Vec<f64>>,
    /// `H + H'`.
    s: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxQp {
    fn from_stage(qp: &QuadraticProgram<f64>, prev: &[f64]) -> Self {
        let d = qp.dim();
        let s = (0..d).map(|i| (0..d).map(|j| qp.quadratic[i][j] + qp.quadratic[j][i]).collect()).collect();
        let mut lo = vec![0.0; d];
        let mut hi: Vec<f64> = prev.to_vec();
        lo[d - 1] = 0.5;
        hi.push(1.0);
        Self { g: qp.linear.clone(), h: qp.quadratic.clone(), s, lo, hi }
    }

    fn value(&self, p: &[f64]) -> f64 {
        let lin: f64 = self.g.iter().zip(p).map(|(a, b)| a * b).sum();
        let quad: f64 = self.h.iter().zip(p).map(|(row, pi)| pi * row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).sum();
        lin + quad
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.g.iter().zip(&self.s).map(|(g, row)| g + row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    /// Largest first-order violation `max_j grad_j - min_i grad_i` over
    /// coordinates that can decrease (`j`) and increase (`i`).
    fn violation(&self, p: &[f64], grad: &[f64]) -> (f64, Option<(usize, usize)>) {
        let slack = 1e-15;
        let up = (0..p.len()).filter(|&k| p[k] < self.hi[k] - slack).min_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        let down = (0..p.len()).filter(|&k| p[k] > self.lo[k] + slack).max_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        match (up, down) {
            (Some(i), Some(j)) if i != j => (grad[j] - grad[i], Some((i, j))),
            _ => (0.0, None),
        }
    }

    /// Maximal-violating-pair descent.
    fn descend(&self, mut p: Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
        let mut grad = self.gradient(&p);
        for iter in 0..max_iter {
            let (gap, pair) = self.violation(&p, &grad);
            let Some((i, j)) = pair else { break };
            if gap <= tol {
                break;
            }
            let tmax = (self.hi[i] - p[i]).min(p[j] - self.lo[j]);
            let kappa = self.h[i][i] + self.h[j][j] - self.h[i][j] - self.h[j][i];
            let t = if kappa > 0.0 { (gap / (2.0 * kappa)).min(tmax) } else { tmax };
            if t <= 0.0 {
                break;
            }
            p[i] += t;
            p[j] -= t;
            if t == tmax {
                // Snap the coordinate that reached its bound.
                if self.hi[i] - p[i] <= p[j] - self.lo[j] {
                    p[i] = self.hi[i];
                } else {
                    p[j] = self.lo[j];
                }
            }
            if iter % 64 == 63 {
                grad = self.gradient(&p);
            } else {
                for (k, gk) in grad.iter_mut().enumerate() {
                    *gk += t * (self.s[k][i] - self.s[k][j]);
                }
            }
        }
        p
    }

    /// Newton step on the face where the coordinates at their bounds stay fixed.
    fn polish(&self, p: &[f64]) -> Option<Vec<f64>> {
        let d = p.len();
        let slack = 1e-12;
        let free: Vec<usize> = (0..d).filter(|&k| p[k] > self.lo[k] + slack && p[k] < self.hi[k] - slack).collect();
        if free.is_empty() {
            return None;
        }
        let mut fixed = p.to_vec();
        for k in 0..d {
            if !free.contains(&k) {
                fixed[k] = if p[k] <= self.lo[k] + slack { self.lo[k] } else { self.hi[k] };
            }
        }
        let f = free.len();
        let mut a = vec![vec![0.0; f + 1]; f + 1];
        let mut b = vec![0.0; f + 1];
        let fixed_mass: f64 = (0..d).filter(|k| !free.contains(k)).map(|k| fixed[k]).sum();
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                a[r][c] = self.s[i][j];
            }
            a[r][f] = -1.0;
            a[f][r] = 1.0;
            b[r] = -self.g[i] - (0..d).filter(|k| !free.contains(k)).map(|k| self.s[i][k] * fixed[k]).sum::<f64>();
        }
        b[f] = 1.0 - fixed_mass;
        let sol = solve_linear(a, b)?;
        let mut out = fixed;
        for (r, &i) in free.iter().enumerate() {
            if sol[r] < self.lo[i] - 1e-13 || sol[r] > self.hi[i] + 1e-13 {
                return None;
            }
            out[i] = sol[r].clamp(self.lo[i], self.hi[i]);
        }
        Some(out)
    }

    /// A feasible point: a random vector with the right mass mixed towards the
    /// always-feasible point `s * hi` until it fits under `hi`.
    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.g.len();
        let top: f64 = rng.random_range(0.5..=1.0);
        let mass = 1.0 - top;
        let hi_mass: f64 = self.hi[..d - 1].iter().sum();
        let base: Vec<f64> = self.hi[..d - 1].iter().map(|h| if hi_mass > 0.0 { mass * h / hi_mass } else { 0.0 }).collect();
        let raw: Vec<f64> = self.hi[..d - 1].iter().map(|h| h * rng.random::<f64>()).collect();
        let raw_mass: f64 = raw.iter().sum();
        let q: Vec<f64> = if raw_mass > 0.0 { raw.iter().map(|r| mass * r / raw_mass).collect() } else { base.clone() };
        let mut t = 1.0f64;
        for k in 0..d - 1 {
            if q[k] > self.hi[k] {
                t = t.min((self.hi[k] - base[k]) / (q[k] - base[k]));
            }
        }
        let mut p: Vec<f64> = q.iter().zip(&base).map(|(a, b)| (t * a + (1.0 - t) * b).clamp(0.0, f64::INFINITY)).collect();
        p.push(top);
        p
    }
}

/// Solves the monotone stage problem in floating point.
fn monotone_stage(
    table: &DistanceTable<f64>,
    rows: &[Distribution<f64>],
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<(Distribution<f64>, f64, StageMethod)> {
    let n = rows.len();
    let qp = monotone_stage_qp(table, rows);
    let boxed = BoxQp::from_stage(&qp, rows[n - 1].weights());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(cfg.restarts);
    let ramps = cfg.restarts.div_ceil(2);
    for k in 0..ramps {
        let w = if ramps == 1 { 0.5 } else { 0.5 + 0.5 * k as f64 / (ramps - 1) as f64 };
        let mut p: Vec<f64> = rows[n - 1].weights().iter().map(|x| (1.0 - w) * x).collect();
        p.push(w);
        starts.push(p);
    }
    while starts.len() < cfg.restarts {
        starts.push(boxed.random_point(&mut rng));
    }
    let max_iter = cfg.max_evals.max(1000) * 10;
    let tol = cfg.tolerance * 1e-3;
    let mut candidates: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .map(|p0| {
            let mut p = boxed.descend(p0, tol, max_iter);
            if let Some(q) = boxed.polish(&p) {
                if boxed.value(&q) <= boxed.value(&p) + 1e-15 {
                    p = boxed.descend(q, tol, max_iter);
                }
            }
            (boxed.value(&p), p)
        })
        .collect();
    candidates.sort_by(candidate_order);
    let (mut value, mut p) = candidates.swap_remove(0);
    let mut method = StageMethod::LocalSearch;
    if n <= MONOTONE_ORACLE_LIMIT {
        if let Some((x, v)) = qp.solve_by_faces() {
            // The enumerated point is accurate to rounding in its coordinates, while
            // a descent point can only be trusted to the square root of that.
            if v <= value + TIE {
                (value, p) = (v, x);
                method = StageMethod::FaceEnumeration;
            }
        }
    }
    let grad = boxed.gradient(&p);
    let (gap, _) = boxed.violation(&p, &grad);
    let row = Distribution::new(close_row(p))?;
    let check = table.evaluate_stage(rows, &row)?.residual;
    if (check - value).abs() > MODEL_CHECK {
        return Err(Error::Certification {
            m: -1,
            n: n as isize,
            detail: format!("monotone stage model {value} differs from the transport value {check}"),
        });
    }
    let gap = if method == StageMethod::FaceEnumeration { 0.0 } else { gap.max(0.0) };
    Ok((row, gap, method))
}

/// `R_n` of a candidate row and its gradient `g_j = d(j-1, n) + sum_m p_{m+1} u^m_j`
/// from the transport duals.
fn residual_and_gradient(table: &DistanceTable<f64>, rows: &[Distribution<f64>], p: &[f64]) -> Result<(f64, Vec<f64>)> {
    let row = Distribution::new(p.to_vec())?;
    let stage = table.evaluate_stage(rows, &row)?;
    let mut grad = Vec::with_capacity(p.len());
    grad.push(1.0);
    grad.extend(stage.distances.iter().copied());
    for (m, plan) in stage.plans.iter().enumerate() {
        let w = p[m + 1];
        if w == 0.0 {
            continue;
        }
        for (g, u) in grad.iter_mut().zip(&plan.dual_u) {
            *g += w * u;
        }
    }
    Ok((stage.residual, grad))
}

fn residual(table: &DistanceTable<f64>, rows: &[Distribution<f64>], p: &[f64]) -> f64 {
    Distribution::new(p.to_vec())
        .and_then(|row| table.evaluate_stage(rows, &row))
        .map(|s| s.residual)
        .unwrap_or(f64::INFINITY)
}

/// Moves `t` of mass from `j` to `i`.
fn shifted(p: &[f64], i: usize, j: usize, t: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[i] += t;
    q[j] = (q[j] - t).max(0.0);
    q
}

/// Pairwise descent on the transport-evaluated `R_n`. Returns the point, its
/// value and the final first-order violation.
fn pairwise_descent(
    table: &DistanceTable<f64>,
    rows: &[Distribution<f64>],
    mut p: Vec<f64>,
    budget: usize,
) -> Result<(Vec<f64>, f64, f64)> {
    let (mut value, mut grad) = residual_and_gradient(table, rows, &p)?;
    let mut evals = 1usize;
    let mut violation = 0.0;
    while evals < budget {
        let mut up: Vec<usize> = (0..p.len()).collect();
        up.sort_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        let mut down: Vec<usize> = (0..p.len()).filter(|&k| p[k] > 0.0).collect();
        down.sort_by(|&a, &b| grad[b].total_cmp(&grad[a]));
        violation = (grad[down[0]] - grad[up[0]]).max(0.0);
        let mut pairs: Vec<(usize, usize)> = up
            .iter()
            .take(3)
            .flat_map(|&i| down.iter().take(3).map(move |&j| (i, j)))
            .filter(|&(i, j)| i != j && grad[j] - grad[i] > 1e-14)
            .collect();
        pairs.sort_by(|a, b| (grad[b.1] - grad[b.0]).total_cmp(&(grad[a.1] - grad[a.0])));
        let mut improved = false;
        for (i, j) in pairs {
            let tmax = p[j];
            let phi = |t: f64| residual(table, rows, &close_row(shifted(&p, i, j, t)));
            let (mut t, mut v) = brent(&phi, 0.0, tmax, 1e-10, 60);
            evals += 60;
            let at_end = phi(tmax);
            if at_end < v {
                (t, v) = (tmax, at_end);
            }
            if v < value - 1e-15 {
                p = close_row(shifted(&p, i, j, t));
                (value, grad) = residual_and_gradient(table, rows, &p)?;
                evals += 1;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((p, value, violation))
}

/// Solves the unconstrained sequential stage problem from the monotone
/// solution and a few other starts.
fn sequential_stage(
    table: &DistanceTable<f64>,
    rows: &[Distribution<f64>],
    cfg: &OptimizerConfig,
    seed: u64,
    monotone_row: Distribution<f64>,
) -> Result<(Distribution<f64>, f64, StageMethod)> {
    let n = rows.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut starts = vec![monotone_row.weights().to_vec()];
    // Krasnosel'skii-Mann-like rows and random rows.
    for a in [0.3, 0.7] {
        let mut p: Vec<f64> = rows[n - 1].weights().iter().map(|x| (1.0 - a) * x).collect();
        p.push(a);
        starts.push(p);
    }
    let extra = cfg.restarts.min(4);
    for _ in 0..extra {
        let raw: Vec<f64> = (0..=n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = raw.iter().sum();
        starts.push(close_row(raw.iter().map(|x| x / total).collect()));
    }
    let budget = cfg.max_evals;
    let results: Vec<Result<(Vec<f64>, f64, f64)>> =
        starts.into_par_iter().map(|p| pairwise_descent(table, rows, p, budget)).collect();
    let mut candidates = Vec::with_capacity(results.len() + 1);
    let mut violation_of_best = Vec::new();
    for r in results {
        let (p, v, viol) = r?;
        violation_of_best.push((v, p.clone(), viol));
        candidates.push((v, p));
    }
    candidates.sort_by(candidate_order);
    let (best_value, mut best) = candidates.swap_remove(0);
    let mut method = StageMethod::LocalSearch;
    if n <= SEQUENTIAL_ORACLE_LIMIT {
        let qp = sequential_stage_qp(table, rows);
        if let Some((x, _)) = qp.solve_by_faces() {
            let p = close_row(x[..=n].to_vec());
            if residual(table, rows, &p) <= best_value + TIE {
                best = p;
                method = StageMethod::FaceEnumeration;
            }
        }
    }
    let gap = if method == StageMethod::FaceEnumeration {
        0.0
    } else {
        violation_of_best.iter().find(|(_, p, _)| *p == best).map(|t| t.2).unwrap_or(0.0)
    };
    Ok((Distribution::new(best)?, gap, method))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_the_simplex() {
        let p = project_to_simplex(&[0.5, 0.9, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12 && p[2] == 0.0);
    }

    #[test]
    fn first_stages_in_float_mode() {
        let cfg = OptimizerConfig { restarts: 8, ..OptimizerConfig::default() };
        for monotone in [true, false] {
            let result = optimize_sequential(2, &cfg, monotone).unwrap();
            assert!((result.value_trace[1] - 0.75).abs() < 1e-12);
            assert!((result.value_trace[2] - 17.0 / 28.0).abs() < 1e-12, "{:?}", result.value_trace);
            let row = result.array.row(2).weights();
            for (a, b) in row.iter().zip([5.0 / 14.0, 1.0 / 14.0, 8.0 / 14.0]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_mode_recovers_rationals() {
        let cfg = OptimizerConfig { restarts: 4, exact: true, ..OptimizerConfig::default() };
        let result = optimize_sequential(3, &cfg, true).unwrap();
        let exact = result.exact.unwrap();
        assert_eq!(exact.residuals[2], Rational::new(17.into(), 28.into()));
        assert_eq!(exact.array.horizon(), 3);
    }

    #[test]
    fn descent_matches_oracle_at_stage_four() {
        let cfg = OptimizerConfig { restarts: 16, ..OptimizerConfig::default() };
        let result = optimize_sequential(4, &cfg, true).unwrap();
        let table = crate::bounds::build_distance_table(&result.array.truncated(3).unwrap()).unwrap();
        let qp = monotone_stage_qp(&table, &result.array.rows()[..4]);
        let boxed = BoxQp::from_stage(&qp, result.array.row(3).weights());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let best = (0..16)
            .map(|_| {
                let p = boxed.descend(boxed.random_point(&mut rng), 1e-14, 1_000_000);
                boxed.value(&p)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best >= result.value_trace[4] - 1e-12, "{best} < {}", result.value_trace[4]);
        assert!(best <= result.value_trace[4] + 1e-9, "descent {best} vs oracle {}", result.value_trace[4]);
    }
}
