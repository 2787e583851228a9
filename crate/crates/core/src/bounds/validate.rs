//! Report-only structural checks on a distance table.

use serde::Serialize;

use super::DistanceTable;
use crate::scalar::Scalar;

const TOLERANCE: f64 = 1e-9;
const KEPT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub indices: Vec<isize>,
    pub magnitude: f64,
}

/// Violations found by a check. Only the first few are stored; `count` is exact.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub count: usize,
    pub worst: f64,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.count == 0
    }

    fn record(&mut self, kind: &'static str, indices: Vec<isize>, magnitude: f64) {
        self.count += 1;
        self.worst = self.worst.max(magnitude);
        if self.violations.len() < KEPT {
            self.violations.push(Violation { kind, indices, magnitude });
        }
    }
}

fn dense<S: Scalar>(table: &DistanceTable<S>) -> (Vec<f64>, usize) {
    let size = table.horizon() + 2;
    let mut d = vec![0.0; size * size];
    for a in 0..size {
        for b in 0..size {
            // Read both orientations so that asymmetric corruption is visible.
            let (m, n) = (a as isize - 1, b as isize - 1);
            d[a * size + b] = if a <= b {
                table.get(m, n).to_f64_lossy()
            } else {
                table.get(n, m).to_f64_lossy()
            };
        }
    }
    (d, size)
}

/// Identity, `d(-1, k) = 1`, range `[0, 1]` and the triangle inequality on all triples.
///
/// Tables store one entry per unordered pair, so symmetry holds by construction.
pub fn validate_metric<S: Scalar>(table: &DistanceTable<S>) -> ViolationReport {
    let (d, size) = dense(table);
    let at = |a: usize, b: usize| d[a * size + b];
    let idx = |a: usize| a as isize - 1;
    let mut report = ViolationReport::default();
    for a in 0..size {
        if at(a, a).abs() > TOLERANCE {
            report.record("identity", vec![idx(a)], at(a, a).abs());
        }
        if a > 0 && (at(0, a) - 1.0).abs() > TOLERANCE {
            report.record("anchor", vec![-1, idx(a)], (at(0, a) - 1.0).abs());
        }
        for b in 0..size {
            let v = at(a, b);
            if !(-TOLERANCE..=1.0 + TOLERANCE).contains(&v) {
                report.record("range", vec![idx(a), idx(b)], (v - v.clamp(0.0, 1.0)).abs());
            }
            if (v - at(b, a)).abs() > TOLERANCE {
                report.record("symmetry", vec![idx(a), idx(b)], (v - at(b, a)).abs());
            }
        }
    }
    for a in 0..size {
        for b in a + 1..size {
            for c in 0..size {
                if c == a || c == b {
                    continue;
                }
                let excess = at(a, b) - at(a, c) - at(c, b);
                if excess > TOLERANCE {
                    report.record("triangle", vec![idx(a), idx(c), idx(b)], excess);
                }
            }
        }
    }
    report
}

/// `d(i, l) + d(j, k) <= d(i, k) + d(j, l)` for all `-1 <= i < j < k < l <= N`.
///
/// Guaranteed only for monotone arrays; for other arrays violations are
/// reported, not treated as errors.
pub fn validate_quadrangle<S: Scalar>(table: &DistanceTable<S>) -> ViolationReport {
    let (d, size) = dense(table);
    let at = |a: usize, b: usize| d[a * size + b];
    let idx = |a: usize| a as isize - 1;
    let mut report = ViolationReport::default();
    for i in 0..size {
        for j in i + 1..size {
            for k in j + 1..size {
                for l in k + 1..size {
                    let excess = at(i, l) + at(j, k) - at(i, k) - at(j, l);
                    if excess > TOLERANCE {
                        report.record("quadrangle", vec![idx(i), idx(j), idx(k), idx(l)], excess);
                    }
                }
            }
        }
    }
    report
}
