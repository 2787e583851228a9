//! Stage-by-stage stepsize optimization for named schemes.
//!
//! Stage `n` chooses the scheme's one or two stepsizes to minimize the exact
//! `R_n` of the resulting row, with earlier rows frozen. One-parameter stages
//! use a grid, Brent refinement and parabolic polishing; two-parameter stages
//! search the triangle `alpha, beta >= 0, alpha + beta <= 1` with a grid,
//! Nelder-Mead from the best grid points and alternating line searches.

use std::time::Instant;

use super::line_search::minimize_interval;
use super::nelder_mead::{nelder_mead, NelderMeadOptions};
use super::{Mode, OptimizationResult, OptimizerConfig, StageMethod, StageRecord};
use crate::bounds::{DistanceTable, TriangularArray};
use crate::schemes::{scheme_row, SchemeKind};
use crate::transport::Distribution;
use crate::{Error, Result};

const GRID_1D: usize = 32;
const GRID_2D: usize = 12;

pub fn optimize_scheme(kind: SchemeKind, horizon: usize, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    if kind == SchemeKind::General {
        return Err(Error::InvalidInput("general arrays have no stepsizes to optimize; use the fh, s or ms modes".into()));
    }
    let start = Instant::now();
    let mut table = DistanceTable::<f64>::initial();
    let mut rows = vec![Distribution::<f64>::dirac(0, 0)];
    let pairs = if kind == SchemeKind::Ishikawa { horizon.div_ceil(2) } else { horizon };
    let mut alphas = vec![0.0; pairs + 1];
    let mut betas = vec![0.0; pairs + 1];
    let mut stages = Vec::with_capacity(horizon);

    for n in 1..=horizon {
        let prev2 = if n >= 2 { rows[n - 2].weights().to_vec() } else { rows[0].weights().to_vec() };
        let prev = rows[n - 1].weights().to_vec();
        let value = |a: f64, b: f64| -> f64 {
            scheme_row(kind, n, &a, &b, &prev, &prev2)
                .and_then(Distribution::new)
                .and_then(|row| table.evaluate_stage(&rows, &row))
                .map(|s| s.residual)
                .unwrap_or(f64::INFINITY)
        };
        let (a, b) = match kind {
            SchemeKind::Halpern => (0.0, minimize_interval(&|b| value(0.0, b), 0.0, 1.0, GRID_1D).0),
            SchemeKind::KM => (minimize_interval(&|a| value(a, 0.0), 0.0, 1.0, GRID_1D).0, 0.0),
            SchemeKind::Ishikawa => {
                let p = n.div_ceil(2);
                if n % 2 == 1 {
                    // The pair's alpha is chosen at the next step; zero keeps it admissible.
                    (0.0, minimize_interval(&|b| value(0.0, b), 0.0, 1.0, GRID_1D).0)
                } else {
                    let b = betas[p];
                    (minimize_interval(&|a| value(a, b), 0.0, b, GRID_1D).0, b)
                }
            }
            _ => minimize_triangle(&value, cfg),
        };
        let k = if kind == SchemeKind::Ishikawa { n.div_ceil(2) } else { n };
        if kind.uses_alpha() {
            alphas[k] = a;
        }
        if kind.uses_beta() {
            betas[k] = b;
        }
        let row = Distribution::new(scheme_row(kind, n, &a, &b, &prev, &prev2)?)?;
        let stage = table.evaluate_stage(&rows, &row)?;
        stages.push(StageRecord { n, value: stage.residual, gap: f64::NAN, method: StageMethod::LocalSearch });
        table.commit(stage);
        rows.push(row);
    }

    Ok(OptimizationResult {
        mode: Mode::SchemeConstrained,
        array: TriangularArray::new(rows)?,
        value_trace: table.residuals().to_vec(),
        stages,
        exact: None,
        stepsizes: Some((alphas, betas)),
        wall_time: start.elapsed(),
    })
}

/// Closest point of `{a, b >= 0, a + b <= 1}`.
fn project_triangle(a: f64, b: f64) -> (f64, f64) {
    let (mut a, mut b) = (a.max(0.0), b.max(0.0));
    if a + b > 1.0 {
        let excess = 0.5 * (a + b - 1.0);
        (a, b) = (a - excess, b - excess);
        if a < 0.0 {
            (a, b) = (0.0, 1.0);
        } else if b < 0.0 {
            (a, b) = (1.0, 0.0);
        }
    }
    (a, b)
}

fn minimize_triangle(value: &dyn Fn(f64, f64) -> f64, cfg: &OptimizerConfig) -> (f64, f64) {
    let mut grid = Vec::new();
    for i in 0..=GRID_2D {
        for j in 0..=GRID_2D - i {
            let (a, b) = (i as f64 / GRID_2D as f64, j as f64 / GRID_2D as f64);
            grid.push((value(a, b), a, b));
        }
    }
    grid.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)));
    let penalized = |x: &[f64]| {
        let (a, b) = project_triangle(x[0], x[1]);
        value(a, b) + (x[0] - a).abs() + (x[1] - b).abs()
    };
    let opts = NelderMeadOptions { step: 0.5 / GRID_2D as f64, x_tol: 1e-10, f_tol: 1e-16, max_evals: cfg.max_evals.min(600) };
    let mut best = (grid[0].0, grid[0].1, grid[0].2);
    for &(_, a0, b0) in grid.iter().take(3) {
        let run = nelder_mead(&penalized, &[a0, b0], &opts);
        let (a, b) = project_triangle(run.x[0], run.x[1]);
        let v = value(a, b);
        if v < best.0 {
            best = (v, a, b);
        }
    }
    // Alternating exact line searches along each coordinate.
    let (mut v, mut a, mut b) = best;
    for _ in 0..3 {
        let (na, va) = minimize_interval(&|x| value(x, b), 0.0, 1.0 - b, 16);
        if va < v {
            (a, v) = (na, va);
        }
        let (nb, vb) = minimize_interval(&|y| value(a, y), 0.0, 1.0 - a, 16);
        if vb < v {
            (b, v) = (nb, vb);
        }
    }
    (a, b)
}
