//! Worst-case fixed-point residual bounds for Mann iterations.
//!
//! A Mann iteration averages all past images of a nonexpansive map,
//! `x^n = sum_i pi^n_i T x^{i-1}` (with `T x^{-1} = y^0`), where row `pi^n` of a
//! triangular array is a probability vector on `{0, ..., n}`. This crate
//! computes the universal residual bounds `R_n(pi)` produced by a nested family
//! of optimal transport problems, certifies that they are attained, and searches
//! for averaging schemes that make them small.
//!
//! Module map:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`transport`] | exact transportation simplex with duals, closed-form nested plans |
//! | [`bounds`] | distance tables `d(m, n)`, residuals `R_n`, metric checks, worst-case witness |
//! | [`schemes`] | Halpern, Krasnosel'skii-Mann and inertial variants as triangular arrays |
//! | [`optimizers`] | fixed-horizon, sequential and monotone-sequential coefficient search |
//! | [`lab`] | concrete operators: right shifts, rotations, Poisson binomial lower bounds |
//! | [`report`] | CSV/JSON emitters and slope fits |

#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod lab;
pub mod optimizers;
pub mod report;
pub mod scalar;
pub mod schemes;
pub mod transport;

pub use bounds::{
    build_distance_table, build_worst_case_witness, halpern_distance_recursion, DistanceTable,
    TriangularArray, WorstCaseWitness,
};
pub use scalar::{Rational, Scalar};
pub use transport::{greedy_monotone_transport, solve_transport, CostMatrix, Distribution, TransportPlan};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a probability vector: {0}")]
    NotAProbability(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("negative weight in row {row}: {detail}")]
    NegativeWeight { row: usize, detail: String },

    #[error("transport simplex exceeded {0} pivots")]
    CycleGuard(usize),

    #[error("certification failed at pair ({m}, {n}): {detail}")]
    Certification { m: isize, n: isize, detail: String },

    #[error("horizon {horizon} exceeds the fixed-horizon limit {limit}; use sequential mode instead")]
    HorizonTooLarge { horizon: usize, limit: usize },

    #[error("infeasible stage {stage}: {detail}")]
    Infeasible { stage: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
