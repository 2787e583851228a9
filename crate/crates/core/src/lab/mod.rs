//! Concrete operators that realize the abstract bounds.
//!
//! Lower bounds come from the right shift: in `l-infinity` every Mann
//! iteration leaves a residual of at least `1/(n+1)`, and in `l1` the
//! Krasnosel'skii-Mann iterates are Poisson binomial distributions whose
//! residual is at least `1/sqrt(n+1)`. Tightness examples come from affine
//! Halpern iterations on the shift and on a plane rotation. The last piece
//! checks that Kim's inertial method reproduces Halpern's iterates.
//!
//! All infinite-dimensional iterates here have finite support or constant
//! tails, so the finite representations are exact rather than truncations.

mod kim;
mod poisson;
mod shift;

pub use kim::{kim_vs_halpern, rotation_halpern_residual, KimComparison, Rotation, TruncatedShift};
pub use poisson::{binomial_floor_function, inf_f, km_l1_residual, poisson_binomial_pmf};
pub use shift::{affine_shift_halpern_residual, shift_linf_iterate, shift_linf_residual, shift_profile_residual};

use crate::report::fmt_f64;

/// One row of a simulation certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct LabRecord {
    pub n: usize,
    pub residual: f64,
    pub bound: f64,
    /// Whether the residual sits on the expected side of the bound.
    pub certified: bool,
}

/// CSV with header `n,residual,bound,certificate`.
pub fn lab_csv(records: &[LabRecord]) -> String {
    let mut out = String::from("n,residual,bound,certificate\n");
    for r in records {
        let flag = if r.certified { "verified" } else { "failed" };
        out.push_str(&format!("{},{},{},{}\n", r.n, fmt_f64(r.residual), fmt_f64(r.bound), flag));
    }
    out
}
