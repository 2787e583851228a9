//! Coefficient optimizers.
//!
//! Three regimes search for arrays with small residual bounds:
//!
//! - fixed horizon: all rows `pi^1..pi^N` jointly minimize `R_N`;
//! - sequential: stage `n` minimizes `R_n` over `pi^n` with earlier rows frozen;
//! - monotone sequential: as sequential, restricted to `pi^n_k <= pi^{n-1}_k`
//!   and `pi^n_n >= 1/2`, where `R_n` is an explicit quadratic.
//!
//! A fourth mode optimizes the one or two stepsizes of a named scheme stage by
//! stage. Every result is re-evaluated through [`build_distance_table`], so the
//! reported values are exact bounds for the returned array and upper bounds on
//! the optimal values.

mod exact;
mod fixed_horizon;
mod halpern;
mod line_search;
mod nelder_mead;
mod scheme;
mod sequential;

pub use exact::{monotone_stage_qp, sequential_stage_qp, solve_linear, QuadraticProgram};
pub use fixed_horizon::{optimize_fixed_horizon, FIXED_HORIZON_LIMIT};
pub use halpern::{
    affine_halpern_optimal, affine_halpern_theta, best_sufficient_step, check_halpern_sufficient,
    halpern_optimal_recursion, remark_one_residual, remark_two_delta, remark_two_window, SufficientReport,
};
pub use line_search::{brent, minimize_interval, parabolic_polish};
pub use nelder_mead::{nelder_mead, nelder_mead_restarted, NelderMeadOptions, NelderMeadResult};
pub use scheme::optimize_scheme;
pub use sequential::{optimize_sequential, project_to_simplex};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use crate::bounds::{build_distance_table, TriangularArray};
use crate::scalar::Rational;
use crate::{Error, Result};

/// Which optimization problem to solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    FixedHorizon,
    Sequential,
    MonotoneSequential,
    SchemeConstrained,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FixedHorizon => "fh",
            Mode::Sequential => "s",
            Mode::MonotoneSequential => "ms",
            Mode::SchemeConstrained => "scheme",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fh" | "fixed-horizon" => Ok(Mode::FixedHorizon),
            "s" | "sequential" => Ok(Mode::Sequential),
            "ms" | "monotone" | "monotone-sequential" => Ok(Mode::MonotoneSequential),
            "scheme" => Ok(Mode::SchemeConstrained),
            other => Err(Error::InvalidInput(format!("unknown mode '{other}' (expected fh, s, ms or scheme)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerConfig {
    /// Number of starting points per search.
    pub restarts: usize,
    /// Objective evaluations allowed per local search.
    pub max_evals: usize,
    /// Stationarity tolerance of the local searches.
    pub tolerance: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Solve the small stages with exact rational arithmetic where possible.
    pub exact: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 32, max_evals: 20_000, tolerance: 1e-10, seed: 0, mode: Mode::MonotoneSequential, exact: false }
    }
}

impl OptimizerConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restarts must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidInput("max_evals must be at least 1".into()));
        }
        Ok(())
    }
}

/// How a stage value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StageMethod {
    /// Global face enumeration of the stage quadratic program.
    FaceEnumeration,
    /// Local search; the value is an upper bound.
    LocalSearch,
    /// Closed form or a fixed array.
    Evaluated,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub n: usize,
    /// `R_n` of the returned array.
    pub value: f64,
    /// Estimated optimality gap at this stage: zero for globally solved stages,
    /// otherwise the residual first-order violation of the local search.
    pub gap: f64,
    pub method: StageMethod,
}

/// Exactly evaluated prefix of a result.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub array: TriangularArray<Rational>,
    pub residuals: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub mode: Mode,
    pub array: TriangularArray<f64>,
    /// `R_0..=R_N` of `array`.
    pub value_trace: Vec<f64>,
    pub stages: Vec<StageRecord>,
    /// Present in exact mode for the prefix solved in rational arithmetic.
    pub exact: Option<ExactSolution>,
    /// `(alphas, betas)` for scheme-constrained runs.
    pub stepsizes: Option<(Vec<f64>, Vec<f64>)>,
    pub wall_time: Duration,
}

impl OptimizationResult {
    pub fn horizon(&self) -> usize {
        self.array.horizon()
    }

    pub fn value(&self) -> f64 {
        *self.value_trace.last().expect("trace holds R_0")
    }

    /// Largest difference between the stored trace and a fresh evaluation of the array.
    pub fn recheck(&self) -> Result<f64> {
        let table = build_distance_table(&self.array)?;
        Ok(table
            .residuals()
            .iter()
            .zip(&self.value_trace)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Deterministic ordering of candidate solutions: by value, then lexicographically.
pub(crate) fn candidate_order(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then_with(|| {
        a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    })
}
