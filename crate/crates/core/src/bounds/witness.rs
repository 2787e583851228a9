//! Worst-case iterates attaining every bound of a distance table.
//!
//! Points live in `[0,1]^I` with `I = {(m, n) : -1 <= m <= n <= N}` and the
//! sup norm. Point `y^k` carries `d(k-1, n)` on coordinate `(-1, n)` and the
//! optimal dual potential `u^{mn}_k` of the problem from `pi^m` to `pi^n` on
//! coordinate `(m, n)`. Potentials are extended past `n` by the smallest
//! 1-Lipschitz extension. The iterates are `x^k = sum_i pi^k_i y^i` and the map
//! is `T x^k = y^{k+1}`. Only the finite iterate set is certified; nothing is
//! claimed about extending `T` to the whole cube.

use serde::Serialize;

use super::{build_distance_table, DistanceTable, TriangularArray};
use crate::scalar::Scalar;
use crate::{Error, Result};

const CERTIFY: f64 = 1e-8;

/// Deviations measured on a witness; all must stay below `1e-8`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct WitnessReport {
    /// `max |‖x^m - x^n‖ - d(m, n)|`.
    pub distance_error: f64,
    /// `max |‖x^n - y^{n+1}‖ - R_n|`.
    pub residual_error: f64,
    /// `max (‖y^{m+1} - y^{n+1}‖ - ‖x^m - x^n‖)`, positive when `T` expands.
    pub expansion: f64,
    /// Smallest and largest coordinate over all points.
    pub coordinate_range: (f64, f64),
    /// `‖x^n - T x^n‖` for `n = 0..=N`.
    pub residuals: Vec<f64>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.distance_error <= CERTIFY && self.residual_error <= CERTIFY && self.expansion <= CERTIFY
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstCaseWitness {
    pub horizon: usize,
    pub coordinates: Vec<(isize, isize)>,
    /// `y^0..=y^{N+1}`.
    pub y: Vec<Vec<f64>>,
    /// `x^0..=x^N`.
    pub x: Vec<Vec<f64>>,
    pub report: WitnessReport,
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Builds and certifies the witness for rows `0..=horizon` of `pi`.
pub fn build_worst_case_witness<S: Scalar>(pi: &TriangularArray<S>, horizon: usize) -> Result<WorstCaseWitness> {
    let pi = pi.truncated(horizon)?;
    let table = build_distance_table(&pi)?;
    witness_from_table(&pi.to_f64(), &table.to_f64())
}

/// Builds and certifies the witness from an already computed table, which must
/// come from [`build_distance_table`] so that it carries the optimal plans.
pub fn witness_from_table(pi: &TriangularArray<f64>, table: &DistanceTable<f64>) -> Result<WorstCaseWitness> {
    let horizon = pi.horizon();
    if table.horizon() != horizon {
        return Err(Error::DimensionMismatch(format!(
            "table horizon {} differs from array horizon {horizon}",
            table.horizon()
        )));
    }
    let d = |m: usize, n: usize| table.get(m as isize - 1, n as isize - 1);
    let coordinates: Vec<(isize, isize)> = (-1..=horizon as isize)
        .flat_map(|n| (-1..=n).map(move |m| (m, n)))
        .collect();

    // potentials[c][k] is coordinate c of y^k.
    let points = horizon + 2;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(coordinates.len());
    for &(m, n) in &coordinates {
        if m == -1 {
            columns.push((0..points).map(|k| table.get(k as isize - 1, n)).collect());
            continue;
        }
        let (m, n) = (m as usize, n as usize);
        let mut phi = if m == n {
            vec![0.0; n + 1]
        } else {
            let plan = table.plan(m, n).ok_or_else(|| Error::Certification {
                m: m as isize,
                n: n as isize,
                detail: "table carries no transport plan for this pair".into(),
            })?;
            plan.dual_u.clone()
        };
        for i in n + 1..points {
            let ext = (0..=n).map(|k| phi[k] + d(k, i)).fold(f64::INFINITY, f64::min);
            phi.push(ext);
        }
        let low = phi.iter().copied().fold(f64::INFINITY, f64::min);
        columns.push(phi.into_iter().map(|p| p - low).collect());
    }
    let y: Vec<Vec<f64>> = (0..points).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
    let x: Vec<Vec<f64>> = (0..=horizon)
        .map(|k| {
            let mut point = vec![0.0; coordinates.len()];
            for (i, w) in pi.row(k).weights().iter().enumerate() {
                for (p, yi) in point.iter_mut().zip(&y[i]) {
                    *p += w * yi;
                }
            }
            point
        })
        .collect();

    let mut report = WitnessReport {
        coordinate_range: y.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        }),
        ..Default::default()
    };
    let mut first_failure: Option<(isize, isize, String)> = None;
    for n in 0..=horizon {
        let residual = sup_distance(&x[n], &y[n + 1]);
        report.residuals.push(residual);
        let err = (residual - table.residual(n)).abs();
        report.residual_error = report.residual_error.max(err);
        if err > CERTIFY && first_failure.is_none() {
            first_failure = Some((n as isize, n as isize + 1, format!("residual {residual} vs bound {}", table.residual(n))));
        }
        for m in 0..n {
            let dist = sup_distance(&x[m], &x[n]);
            let target = table.get(m as isize, n as isize);
            let err = (dist - target).abs();
            report.distance_error = report.distance_error.max(err);
            let expansion = sup_distance(&y[m + 1], &y[n + 1]) - dist;
            report.expansion = report.expansion.max(expansion);
            if (err > CERTIFY || expansion > CERTIFY) && first_failure.is_none() {
                first_failure = Some((
                    m as isize,
                    n as isize,
                    format!("distance {dist} vs bound {target}, expansion {expansion:e}"),
                ));
            }
        }
    }
    if let Some((m, n, detail)) = first_failure {
        return Err(Error::Certification { m, n, detail });
    }
    Ok(WorstCaseWitness { horizon, coordinates, y, x, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Distribution;

    #[test]
    fn horizon_zero() {
        let w = build_worst_case_witness(&TriangularArray::<f64>::initial(), 0).unwrap();
        assert_eq!(w.report.residuals, vec![1.0]);
    }

    #[test]
    fn picard_averaging_attains_table() {
        let rows = (0..=4).map(|n| Distribution::dirac(n, n)).collect();
        let pi = TriangularArray::<f64>::new(rows).unwrap();
        let w = build_worst_case_witness(&pi, 4).unwrap();
        assert!(w.report.passed(), "{:?}", w.report);
        assert!(w.report.coordinate_range.0 >= -1e-12 && w.report.coordinate_range.1 <= 1.0 + 1e-12);
    }
}
