//! CSV/JSON emitters and slope fits.
//!
//! Floating values are written with 17 significant digits so every `f64`
//! round-trips. Exact scalars are serialized through their `f64` value.

use std::fmt::Write as _;

use serde::ser::{SerializeSeq, SerializeTuple};
use serde::Serializer;

use crate::bounds::DistanceTable;
use crate::scalar::Scalar;

pub(crate) fn serialize_scalar<S: Scalar, Z: Serializer>(value: &S, serializer: Z) -> Result<Z::Ok, Z::Error> {
    serializer.serialize_f64(value.to_f64_lossy())
}

pub(crate) fn serialize_scalars<S: Scalar, Z: Serializer>(values: &[S], serializer: Z) -> Result<Z::Ok, Z::Error> {
    let mut seq = serializer.serialize_seq(Some(values.len()))?;
    for v in values {
        seq.serialize_element(&v.to_f64_lossy())?;
    }
    seq.end()
}

struct Flow(usize, usize, f64);

impl serde::Serialize for Flow {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> Result<Z::Ok, Z::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.0)?;
        t.serialize_element(&self.1)?;
        t.serialize_element(&self.2)?;
        t.end()
    }
}

pub(crate) fn serialize_flows<S: Scalar, Z: Serializer>(
    flows: &[(usize, usize, S)],
    serializer: Z,
) -> Result<Z::Ok, Z::Error> {
    let mut seq = serializer.serialize_seq(Some(flows.len()))?;
    for (i, j, z) in flows {
        seq.serialize_element(&Flow(*i, *j, z.to_f64_lossy()))?;
    }
    seq.end()
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV of the distance table: one row `m,n,d` per pair `-1 <= m <= n <= N`.
pub fn distance_table_csv<S: Scalar>(table: &DistanceTable<S>) -> String {
    let mut out = String::from("m,n,d\n");
    let horizon = table.horizon() as isize;
    for n in -1..=horizon {
        for m in -1..=n {
            let _ = writeln!(out, "{m},{n},{}", fmt_f64(table.get(m, n).to_f64_lossy()));
        }
    }
    out
}

/// CSV of the residual series with `1/R_n` and a certificate column.
pub fn residuals_csv(residuals: &[f64], certificate: &str) -> String {
    let mut out = String::from("n,R,inv_R,certificate\n");
    for (n, r) in residuals.iter().enumerate() {
        let _ = writeln!(out, "{n},{},{},{certificate}", fmt_f64(*r), fmt_f64(1.0 / r));
    }
    out
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx })
}

/// Slope of `1/R_n` against `n` over `n in [from, to]` (clipped to the series).
pub fn inverse_residual_slope(residuals: &[f64], from: usize, to: usize) -> Option<f64> {
    let to = to.min(residuals.len().checked_sub(1)?);
    let xs: Vec<f64> = (from..=to).map(|n| n as f64).collect();
    let ys: Vec<f64> = (from..=to).map(|n| 1.0 / residuals[n]).collect();
    fit_line(&xs, &ys).map(|f| f.slope)
}

/// Slope of `log R_n` against `log n` over `n in [from, to]`.
pub fn log_log_slope(residuals: &[f64], from: usize, to: usize) -> Option<f64> {
    let to = to.min(residuals.len().checked_sub(1)?);
    let from = from.max(1);
    let xs: Vec<f64> = (from..=to).map(|n| (n as f64).ln()).collect();
    let ys: Vec<f64> = (from..=to).map(|n| residuals[n].ln()).collect();
    fit_line(&xs, &ys).map(|f| f.slope)
}
