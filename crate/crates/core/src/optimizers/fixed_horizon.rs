//! Fixed-horizon optimization: all rows `pi^1..pi^N` jointly minimize `R_N`.
//!
//! Each row is an unconstrained vector projected onto its simplex, with the
//! projection distance added as a penalty so the search does not drift. Starts
//! include the sequential solutions, which makes the result no worse than
//! them. Every start runs restarted Nelder-Mead followed by a pairwise
//! line-search polish.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::sequential_stage_qp;
use super::halpern::halpern_optimal_recursion;
use super::line_search::brent;
use super::nelder_mead::{nelder_mead_restarted, NelderMeadOptions};
use super::sequential::{optimize_sequential, project_to_simplex};
use super::{candidate_order, ExactSolution, Mode, OptimizationResult, OptimizerConfig, StageMethod, StageRecord};
use crate::bounds::{build_distance_table, DistanceTable, TriangularArray};
use crate::scalar::{rationalize, Rational, Scalar};
use crate::transport::Distribution;
use crate::{Error, Result};

/// Largest horizon accepted by the joint search.
pub const FIXED_HORIZON_LIMIT: usize = 8;

/// Denominator bound used when rationalizing a float solution in exact mode.
const RATIONAL_DENOMINATOR: u64 = 1_000_000;

/// Best array found for the fixed-horizon problem with horizon `N <= 8`.
/// The value is an upper bound on the optimum, not a global optimality claim.
pub fn optimize_fixed_horizon(horizon: usize, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    if horizon > FIXED_HORIZON_LIMIT {
        return Err(Error::HorizonTooLarge { horizon, limit: FIXED_HORIZON_LIMIT });
    }
    let start = Instant::now();
    let flat = if horizon == 0 {
        Vec::new()
    } else {
        let seq_cfg = OptimizerConfig { restarts: cfg.restarts.min(8), exact: false, ..cfg.clone() };
        let ms = optimize_sequential(horizon, &seq_cfg, true)?;
        let s = optimize_sequential(horizon, &seq_cfg, false)?;
        let mut starts = vec![flatten(&ms.array), flatten(&s.array), flatten(&halpern_array(horizon)?)];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        while starts.len() < cfg.restarts.max(3) {
            starts.push(random_array(&mut rng, horizon));
        }
        let objective = |x: &[f64]| penalized_value(x, horizon);
        let opts = NelderMeadOptions { step: 0.05, x_tol: 1e-10, f_tol: 1e-15, max_evals: cfg.max_evals };
        let mut found: Vec<(f64, Vec<f64>)> = starts
            .into_par_iter()
            .map(|x0| {
                let run = nelder_mead_restarted(&objective, &x0, &opts);
                let x = project_rows(&run.x, horizon);
                (value_of(&x, horizon), x)
            })
            .collect();
        found.sort_by(candidate_order);
        found.truncate(4);
        let mut polished: Vec<(f64, Vec<f64>)> =
            found.into_par_iter().map(|(v, x)| pairwise_polish(x, v, horizon, cfg.max_evals)).collect();
        polished.sort_by(candidate_order);
        polished.swap_remove(0).1
    };

    let array = unflatten(&flat, horizon)?;
    let table = build_distance_table(&array)?;
    let value_trace = table.residuals().to_vec();
    let stages = (1..=horizon)
        .map(|n| StageRecord {
            n,
            value: value_trace[n],
            gap: if n == horizon { first_order_gap(&flat, horizon) } else { f64::NAN },
            method: if n == horizon { StageMethod::LocalSearch } else { StageMethod::Evaluated },
        })
        .collect();
    let exact = if cfg.exact { Some(exact_solution(&array)?) } else { None };
    Ok(OptimizationResult {
        mode: Mode::FixedHorizon,
        array,
        value_trace,
        stages,
        exact,
        stepsizes: None,
        wall_time: start.elapsed(),
    })
}

/// Horizon one coincides with the first sequential stage, which is solved
/// exactly; longer horizons are rationalized entry by entry and evaluated
/// exactly, giving a rigorous bound for a nearby rational array.
fn exact_solution(array: &TriangularArray<f64>) -> Result<ExactSolution> {
    let mut rows: Vec<Distribution<Rational>> = vec![Distribution::dirac(0, 0)];
    if array.horizon() == 1 {
        let table = DistanceTable::<Rational>::initial();
        let (x, _) = sequential_stage_qp(&table, &rows).solve_by_faces().ok_or_else(|| Error::Infeasible {
            stage: 1,
            detail: "no feasible stationary point on any face".into(),
        })?;
        rows.push(Distribution::new(x[..2].to_vec())?);
    } else {
        for row in &array.rows()[1..] {
            let mut w: Vec<Rational> = row.weights().iter().map(|&x| rationalize(x, RATIONAL_DENOMINATOR)).collect();
            let last = w.len() - 1;
            let rest = w[..last].iter().fold(<Rational as Scalar>::from_usize(0), |a, b| a + b);
            w[last] = <Rational as Scalar>::from_usize(1) - rest;
            rows.push(Distribution::new(w)?);
        }
    }
    let array = TriangularArray::new(rows)?;
    let table = build_distance_table(&array)?;
    Ok(ExactSolution { residuals: table.residuals().to_vec(), array })
}

fn flatten(array: &TriangularArray<f64>) -> Vec<f64> {
    array.rows()[1..].iter().flat_map(|r| r.weights().iter().copied()).collect()
}

fn row_slices(x: &[f64], horizon: usize) -> impl Iterator<Item = &[f64]> {
    (1..=horizon).map(move |n| {
        let off = (1..n).map(|k| k + 1).sum::<usize>();
        &x[off..off + n + 1]
    })
}

fn project_rows(x: &[f64], horizon: usize) -> Vec<f64> {
    row_slices(x, horizon).flat_map(project_to_simplex).collect()
}

fn unflatten(x: &[f64], horizon: usize) -> Result<TriangularArray<f64>> {
    let mut rows = vec![Distribution::dirac(0, 0)];
    for r in row_slices(x, horizon) {
        let mut w = r.to_vec();
        let last = w.len() - 1;
        w[last] = (1.0 - w[..last].iter().sum::<f64>()).max(0.0);
        rows.push(Distribution::new(w)?);
    }
    TriangularArray::new(rows)
}

/// `R_N` of the array encoded by `x`, whose rows must already lie on their simplices.
fn value_of(x: &[f64], horizon: usize) -> f64 {
    unflatten(x, horizon)
        .and_then(|a| build_distance_table(&a))
        .map(|t| t.residual(horizon))
        .unwrap_or(f64::INFINITY)
}

fn penalized_value(x: &[f64], horizon: usize) -> f64 {
    let p = project_rows(x, horizon);
    let penalty: f64 = x.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
    value_of(&p, horizon) + penalty
}

/// Sweeps over all rows and index pairs, line-searching mass moves until a
/// sweep no longer improves.
fn pairwise_polish(mut x: Vec<f64>, mut value: f64, horizon: usize, budget: usize) -> (f64, Vec<f64>) {
    let mut evals = 0usize;
    let mut reach = 1e-2;
    for _ in 0..200 {
        let before = value;
        let mut offset = 0;
        for n in 1..=horizon {
            for i in 0..=n {
                for j in 0..=n {
                    if i == j || x[offset + j] <= 0.0 {
                        continue;
                    }
                    let (a, b) = (offset + i, offset + j);
                    let tmax = x[b].min(reach);
                    let phi = |t: f64| {
                        let mut y = x.clone();
                        y[a] += t;
                        y[b] = (y[b] - t).max(0.0);
                        value_of(&y, horizon)
                    };
                    let (t, v) = brent(&phi, 0.0, tmax, 1e-12, 50);
                    evals += 50;
                    if v < value - 1e-16 && t > 0.0 {
                        x[a] += t;
                        x[b] = (x[b] - t).max(0.0);
                        value = v;
                    }
                }
            }
            offset += n + 1;
        }
        if evals >= budget * 4 || before - value < 1e-16 {
            if reach <= 1e-6 {
                break;
            }
            reach *= 0.1;
        }
    }
    (value, x)
}

/// Largest directional derivative along feasible pairwise moves, by central
/// differences. Near zero at a smooth local minimum.
fn first_order_gap(x: &[f64], horizon: usize) -> f64 {
    let h = 1e-7;
    let base = value_of(x, horizon);
    let mut worst: f64 = 0.0;
    let mut offset = 0;
    for n in 1..=horizon {
        for i in 0..=n {
            for j in 0..=n {
                let (a, b) = (offset + i, offset + j);
                if i == j || x[b] < h {
                    continue;
                }
                let mut y = x.to_vec();
                y[a] += h;
                y[b] -= h;
                worst = worst.max((base - value_of(&y, horizon)) / h);
            }
        }
        offset += n + 1;
    }
    worst
}

fn halpern_array(horizon: usize) -> Result<TriangularArray<f64>> {
    let (betas, _) = halpern_optimal_recursion::<f64>(horizon)?;
    let rows = (0..=horizon)
        .map(|n| {
            let mut w = vec![0.0; n + 1];
            w[0] += 1.0 - betas[n];
            w[n] += betas[n];
            w
        })
        .collect();
    TriangularArray::from_weights(rows)
}

fn random_array(rng: &mut ChaCha8Rng, horizon: usize) -> Vec<f64> {
    (1..=horizon)
        .flat_map(|n| {
            let raw: Vec<f64> = (0..=n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(move |x| x / total)
        })
        .collect()
}
