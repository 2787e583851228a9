//! Named iteration families as triangular arrays.
//!
//! Stepsizes are indexed by the iteration counter `n`; entry 0 is unused and row
//! 0 is always `delta^0`. For the two-step Ishikawa iteration the stepsizes are
//! indexed by the pair counter `p = 1, 2, ...` instead: step `2p - 1` applies
//! `beta_p` and step `2p` applies `alpha_p`, and both are rewritten as
//! extra Krasnosel'skii-Mann steps.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bounds::TriangularArray;
use crate::scalar::{parse_scalar, Scalar};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SchemeKind {
    Halpern,
    KM,
    InertialHalpern,
    InertialKM,
    KMHalpern,
    ExtraKM,
    Ishikawa,
    General,
}

impl SchemeKind {
    pub const NAMED: [SchemeKind; 7] = [
        SchemeKind::Halpern,
        SchemeKind::KM,
        SchemeKind::InertialHalpern,
        SchemeKind::InertialKM,
        SchemeKind::KMHalpern,
        SchemeKind::ExtraKM,
        SchemeKind::Ishikawa,
    ];

    /// Short name used on the command line and in CSV headers.
    pub fn short(self) -> &'static str {
        match self {
            SchemeKind::Halpern => "h",
            SchemeKind::KM => "km",
            SchemeKind::InertialHalpern => "ih",
            SchemeKind::InertialKM => "ikm",
            SchemeKind::KMHalpern => "kmh",
            SchemeKind::ExtraKM => "ekm",
            SchemeKind::Ishikawa => "ish",
            SchemeKind::General => "general",
        }
    }

    /// Whether the scheme reads the `alpha` sequence.
    pub fn uses_alpha(self) -> bool {
        !matches!(self, SchemeKind::Halpern | SchemeKind::General)
    }

    /// Whether the scheme reads the `beta` sequence.
    pub fn uses_beta(self) -> bool {
        !matches!(self, SchemeKind::KM | SchemeKind::General)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "h" | "halpern" => SchemeKind::Halpern,
            "km" | "krasnoselskiimann" | "mann" => SchemeKind::KM,
            "ih" | "inertialhalpern" => SchemeKind::InertialHalpern,
            "ikm" | "inertialkm" => SchemeKind::InertialKM,
            "kmh" | "kmhalpern" => SchemeKind::KMHalpern,
            "ekm" | "extrakm" => SchemeKind::ExtraKM,
            "ish" | "ishikawa" => SchemeKind::Ishikawa,
            "general" | "array" => SchemeKind::General,
            other => return Err(Error::InvalidInput(format!("unknown scheme {other:?}"))),
        })
    }
}

/// Stepsize formula.
#[derive(Clone, Debug, PartialEq)]
pub enum StepRule<S: Scalar = f64> {
    Constant(S),
    /// `n / (n + 1)`
    NOverNPlusOne,
    /// `n / (n + 2)`
    NOverNPlusTwo,
    /// `(n + 1) / (n + 3)`
    ShiftedThird,
    /// `b_0 = 0`, `b_{n+1} = (1 + b_n^2) / 2`.
    OptimalRecursion,
    /// Values for `n = 1, 2, ...`.
    Explicit(Vec<S>),
}

impl<S: Scalar> StepRule<S> {
    /// Values for `n = 0..=count`, with index 0 set to zero.
    pub fn values(&self, count: usize) -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(count + 1);
        out.push(S::zero());
        for n in 1..=count {
            let k = n as i64;
            let v = match self {
                StepRule::Constant(c) => c.clone(),
                StepRule::NOverNPlusOne => S::ratio(k, k + 1),
                StepRule::NOverNPlusTwo => S::ratio(k, k + 2),
                StepRule::ShiftedThird => S::ratio(k + 1, k + 3),
                StepRule::OptimalRecursion => {
                    let prev: S = out[n - 1].clone();
                    (S::one() + prev.clone() * prev) / S::ratio(2, 1)
                }
                StepRule::Explicit(list) => list.get(n - 1).cloned().ok_or_else(|| {
                    Error::InvalidInput(format!("explicit stepsize list has {} values, need {count}", list.len()))
                })?,
            };
            out.push(v);
        }
        Ok(out)
    }
}

impl<S: Scalar> FromStr for StepRule<S> {
    type Err = Error;

    /// Accepts `n/(n+1)`, `n/(n+2)`, `(n+1)/(n+3)`, `optimal`, a single number
    /// (constant) or a comma-separated list (explicit values from `n = 1`).
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let rule = match compact.as_str() {
            "n/(n+1)" => StepRule::NOverNPlusOne,
            "n/(n+2)" => StepRule::NOverNPlusTwo,
            "(n+1)/(n+3)" => StepRule::ShiftedThird,
            "optimal" | "optimal-recursion" => StepRule::OptimalRecursion,
            _ => {
                let body = compact
                    .strip_prefix("constant:")
                    .or_else(|| compact.strip_prefix("list:"))
                    .unwrap_or(&compact);
                let values = body
                    .split(',')
                    .map(|t| parse_scalar::<S>(t).ok_or_else(|| Error::InvalidInput(format!("bad stepsize {t:?}"))))
                    .collect::<Result<Vec<S>>>()?;
                if compact.starts_with("list:") || values.len() > 1 {
                    StepRule::Explicit(values)
                } else {
                    StepRule::Constant(values.into_iter().next().expect("split yields one item"))
                }
            }
        };
        Ok(rule)
    }
}

/// A scheme with concrete stepsizes, or an explicit array.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSpec<S: Scalar = f64> {
    Stepsizes { kind: SchemeKind, alphas: Vec<S>, betas: Vec<S> },
    General(TriangularArray<S>),
}

impl<S: Scalar> SchemeSpec<S> {
    pub fn halpern(betas: Vec<S>) -> Self {
        SchemeSpec::Stepsizes { kind: SchemeKind::Halpern, alphas: Vec::new(), betas }
    }

    pub fn km(alphas: Vec<S>) -> Self {
        SchemeSpec::Stepsizes { kind: SchemeKind::KM, alphas, betas: Vec::new() }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            SchemeSpec::Stepsizes { kind, .. } => *kind,
            SchemeSpec::General(_) => SchemeKind::General,
        }
    }
}

fn step<S: Scalar>(seq: &[S], n: usize, name: &str) -> Result<S> {
    let v = seq
        .get(n)
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("{name}_{n} missing: {} values supplied", seq.len())))?;
    if v < S::zero() || v > S::one() {
        return Err(Error::InvalidInput(format!("{name}_{n} = {v} outside [0, 1]")));
    }
    Ok(v)
}

/// `a * x + b * y`, padded to length `len`.
fn combine<S: Scalar>(len: usize, parts: &[(S, &[S])]) -> Vec<S> {
    let mut out = vec![S::zero(); len];
    for (c, w) in parts {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(w.iter()) {
            *o = o.clone() + c.clone() * x.clone();
        }
    }
    out
}

fn unit<S: Scalar>(len: usize, k: usize) -> Vec<S> {
    let mut v = vec![S::zero(); len];
    v[k] = S::one();
    v
}

/// Checks `1 - a - b >= 0` up to rounding and returns it.
fn remainder<S: Scalar>(a: &S, b: &S, n: usize) -> Result<S> {
    let r = S::one() - a.clone() - b.clone();
    if r.lt_eps(&S::zero()) {
        return Err(Error::NegativeWeight { row: n, detail: format!("1 - {a} - {b} is negative") });
    }
    Ok(if r < S::zero() { S::zero() } else { r })
}

/// Rows `pi^0..=pi^N` of a scheme.
pub fn build_rows<S: Scalar>(spec: &SchemeSpec<S>, horizon: usize) -> Result<TriangularArray<S>> {
    let (kind, alphas, betas) = match spec {
        SchemeSpec::General(array) => return array.truncated(horizon),
        SchemeSpec::Stepsizes { kind, alphas, betas } => (*kind, alphas, betas),
    };
    let mut rows: Vec<Vec<S>> = vec![vec![S::one()]];
    for n in 1..=horizon {
        // Ishikawa uses one stepsize pair for every two steps.
        let k = if kind == SchemeKind::Ishikawa { n.div_ceil(2) } else { n };
        let a = if kind.uses_alpha() { step(alphas, k, "alpha")? } else { S::zero() };
        let b = if kind.uses_beta() { step(betas, k, "beta")? } else { S::zero() };
        let prev2 = if n >= 2 { rows[n - 2].as_slice() } else { rows[0].as_slice() };
        let row = scheme_row(kind, n, &a, &b, &rows[n - 1], prev2)?;
        rows.push(row);
    }
    TriangularArray::from_weights(rows)
}

/// Row `pi^n` of a scheme from the stepsizes of step `n` and the two previous
/// rows (`prev2 = pi^0` when `n = 1`). For Ishikawa the stepsizes are those of
/// the pair `p = ceil(n/2)`: odd steps use `beta_p`, even steps `alpha_p`.
pub fn scheme_row<S: Scalar>(kind: SchemeKind, n: usize, a: &S, b: &S, prev: &[S], prev2: &[S]) -> Result<Vec<S>> {
    for (name, v) in [("alpha", a), ("beta", b)] {
        if *v < S::zero() || *v > S::one() {
            return Err(Error::InvalidInput(format!("{name}_{n} = {v} outside [0, 1]")));
        }
    }
    let (a, b) = (a.clone(), b.clone());
    let len = n + 1;
    let e0 = unit::<S>(len, 0);
    let en = unit::<S>(len, n);
    let en1 = unit::<S>(len, n - 1);
    let row = match kind {
        SchemeKind::Halpern => combine(len, &[(S::one() - b.clone(), &e0), (b, &en)]),
        SchemeKind::KM => combine(len, &[(S::one() - a.clone(), prev), (a, &en)]),
        SchemeKind::InertialHalpern => {
            let r = remainder(&a, &b, n)?;
            combine(len, &[(r, &e0), (b, &en1), (a, &en)])
        }
        SchemeKind::InertialKM => {
            let r = remainder(&a, &b, n)?;
            combine(len, &[(r, prev), (b, &en1), (a, &en)])
        }
        SchemeKind::KMHalpern => {
            let r = remainder(&a, &b, n)?;
            combine(len, &[(r, &e0), (b, prev), (a, &en)])
        }
        SchemeKind::ExtraKM => {
            let r = remainder(&a, &b, n)?;
            combine(len, &[(r, prev2), (b, prev), (a, &en)])
        }
        SchemeKind::Ishikawa => {
            let p = n.div_ceil(2);
            if a > b {
                return Err(Error::InvalidInput(format!("Ishikawa needs alpha_{p} <= beta_{p}, got {a} > {b}")));
            }
            if n % 2 == 1 {
                // x^{2p-1} = (1 - beta_p) x^{2p-2} + beta_p T x^{2p-2}
                combine(len, &[(S::one() - b.clone(), prev), (b, &en)])
            } else {
                // x^{2p} = (1 - alpha_p) x^{2p-2} + alpha_p T x^{2p-1}
                combine(len, &[(S::one() - a.clone(), prev2), (a, &en)])
            }
        }
        SchemeKind::General => {
            return Err(Error::InvalidInput("general arrays have no stepsize parametrization".into()));
        }
    };
    Ok(row)
}

/// Structural facts about an array relevant to the closed-form transports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneReport {
    /// `pi^n_n > 0` and `pi^n_i <= pi^{n-1}_i` for all `i < n <= N`.
    pub monotone: bool,
    /// First `(n, i)` breaking the condition; `i = n` flags `pi^n_n = 0`.
    pub first_violation: Option<(usize, usize)>,
    /// `pi^m_m >= sum_{i=m}^{n-1} pi^n_i` for all `m < n`.
    pub tail_condition: bool,
    pub first_tail_failure: Option<(usize, usize)>,
    /// `pi^n_n >= 1/2` for all `n >= 1`.
    pub top_mass_half: bool,
}

impl MonotoneReport {
    /// Whether the nested closed-form transports apply to every pair.
    pub fn fast_path(&self) -> bool {
        self.monotone && self.tail_condition
    }
}

pub fn check_monotone<S: Scalar>(pi: &TriangularArray<S>) -> MonotoneReport {
    let mut first_violation = None;
    'outer: for n in 1..=pi.horizon() {
        let (row, prev) = (pi.row(n).weights(), pi.row(n - 1).weights());
        if !row[n].is_positive_eps() {
            first_violation = Some((n, n));
            break;
        }
        for i in 0..n {
            if row[i].gt_eps(&prev[i]) {
                first_violation = Some((n, i));
                break 'outer;
            }
        }
    }
    let mut first_tail_failure = None;
    'tail: for n in 1..=pi.horizon() {
        let row = pi.row(n).weights();
        // Suffix sums over i = m..n-1, for m descending.
        let mut tail = S::zero();
        for m in (0..n).rev() {
            tail = tail + row[m].clone();
            if pi.row(m).weights()[m].lt_eps(&tail) {
                first_tail_failure = Some((m, n));
                break 'tail;
            }
        }
    }
    let half = S::ratio(1, 2);
    MonotoneReport {
        monotone: first_violation.is_none(),
        first_violation,
        tail_condition: first_tail_failure.is_none(),
        first_tail_failure,
        top_mass_half: (1..=pi.horizon()).all(|n| !pi.row(n).weights()[n].lt_eps(&half)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::ratio(p, q)
    }

    #[test]
    fn km_half_unrolls() {
        let spec = SchemeSpec::km(StepRule::Constant(r(1, 2)).values(2).unwrap());
        let pi = build_rows(&spec, 2).unwrap();
        assert_eq!(pi.row(2).weights(), &[r(1, 4), r(1, 4), r(1, 2)]);
    }

    #[test]
    fn halpern_third_row() {
        let spec = SchemeSpec::halpern(StepRule::<Rational>::NOverNPlusOne.values(3).unwrap());
        let pi = build_rows(&spec, 3).unwrap();
        assert_eq!(pi.row(3).weights(), &[r(1, 4), r(0, 1), r(0, 1), r(3, 4)]);
    }

    #[test]
    fn stationary_extra_km() {
        let spec: SchemeSpec<Rational> = SchemeSpec::Stepsizes {
            kind: SchemeKind::ExtraKM,
            alphas: vec![r(0, 1); 5],
            betas: vec![r(1, 1); 5],
        };
        let pi = build_rows(&spec, 4).unwrap();
        for n in 1..=4 {
            let mut expected = pi.row(n - 1).weights().to_vec();
            expected.push(r(0, 1));
            assert_eq!(pi.row(n).weights(), expected.as_slice());
        }
    }

    #[test]
    fn ishikawa_is_two_step() {
        let spec: SchemeSpec<f64> = SchemeSpec::Stepsizes {
            kind: SchemeKind::Ishikawa,
            alphas: vec![0.0, 0.5],
            betas: vec![0.0, 0.75],
        };
        let pi = build_rows(&spec, 2).unwrap();
        assert_eq!(pi.row(1).weights(), &[0.25, 0.75]);
        // x^2 = 1/2 x^0 + 1/2 T x^1.
        assert_eq!(pi.row(2).weights(), &[0.5, 0.0, 0.5]);
        let bad: SchemeSpec<f64> = SchemeSpec::Stepsizes {
            kind: SchemeKind::Ishikawa,
            alphas: vec![0.0, 0.9],
            betas: vec![0.0, 0.5],
        };
        assert!(build_rows(&bad, 2).is_err());
    }

    #[test]
    fn negative_weight_names_the_row() {
        let spec: SchemeSpec<f64> = SchemeSpec::Stepsizes {
            kind: SchemeKind::InertialHalpern,
            alphas: vec![0.0, 0.5, 0.7],
            betas: vec![0.0, 0.2, 0.6],
        };
        match build_rows(&spec, 2) {
            Err(Error::NegativeWeight { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_rules_parse() {
        assert_eq!("n/(n+2)".parse::<StepRule>().unwrap(), StepRule::NOverNPlusTwo);
        assert_eq!("0.5".parse::<StepRule>().unwrap(), StepRule::Constant(0.5));
        assert_eq!("0.5, 0.6".parse::<StepRule>().unwrap(), StepRule::Explicit(vec![0.5, 0.6]));
        assert!("n^2".parse::<StepRule>().is_err());
        let opt = StepRule::<Rational>::OptimalRecursion.values(3).unwrap();
        assert_eq!(opt, vec![r(0, 1), r(1, 2), r(5, 8), r(89, 128)]);
    }

    #[test]
    fn monotonicity_checks() {
        let h = build_rows(&SchemeSpec::halpern(StepRule::<f64>::NOverNPlusTwo.values(20).unwrap()), 20).unwrap();
        assert!(check_monotone(&h).monotone);
        let km = build_rows(&SchemeSpec::km(StepRule::<f64>::Constant(0.3).values(20).unwrap()), 20).unwrap();
        assert!(check_monotone(&km).monotone);
        let bad = TriangularArray::from_weights(vec![vec![1.0], vec![0.5, 0.5], vec![0.2, 0.6, 0.2]]).unwrap();
        let report = check_monotone(&bad);
        assert!(!report.monotone);
        assert_eq!(report.first_violation, Some((2, 1)));
    }

    #[test]
    fn general_round_trip() {
        let pi = TriangularArray::from_weights(vec![vec![1.0], vec![0.3, 0.7]]).unwrap();
        assert_eq!(build_rows(&SchemeSpec::General(pi.clone()), 1).unwrap(), pi);
    }
}
