//! Krasnosel'skii-Mann on the `l1` right shift.
//!
//! From `x^0 = e^0` the iterate `x^n` is the law of a sum of independent
//! Bernoulli(`alpha_k`) variables, and since that law is unimodal the residual
//! `||x^n - T x^n||_1` equals twice its largest atom.

use crate::scalar::Scalar;
use crate::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-12;
const SHAPE_TOLERANCE: f64 = 1e-14;

/// Law of `S_n = sum_{k=1}^n Bernoulli(alpha_k)`; `alphas[0]` is ignored.
pub fn poisson_binomial_pmf(alphas: &[f64], n: usize) -> Result<Vec<f64>> {
    if alphas.len() <= n {
        return Err(Error::InvalidInput(format!("need alpha_1..alpha_{n}, got {} values", alphas.len().saturating_sub(1))));
    }
    if let Some(k) = (1..=n).find(|&k| !(0.0..=1.0).contains(&alphas[k])) {
        return Err(Error::InvalidInput(format!("alpha_{k} = {} outside [0, 1]", alphas[k])));
    }
    let mut p = vec![1.0];
    for &a in &alphas[1..=n] {
        let mut next = vec![0.0; p.len() + 1];
        for (j, &q) in p.iter().enumerate() {
            next[j] += (1.0 - a) * q;
            next[j + 1] += a * q;
        }
        p = next;
    }
    let mass: f64 = p.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("pmf mass {mass}") });
    }
    Ok(p)
}

fn is_unimodal(p: &[f64]) -> bool {
    let peak = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(k, _)| k);
    p[..=peak].windows(2).all(|w| w[1] >= w[0] - SHAPE_TOLERANCE)
        && p[peak..].windows(2).all(|w| w[1] <= w[0] + SHAPE_TOLERANCE)
}

/// `||x^n - T x^n||_1 = 2 max_k p^n_k` for the KM iteration on the shift.
///
/// The direct sum `sum_j |p_j - p_{j-1}|` is computed as well and must agree;
/// the result must also respect the lower bound `1/sqrt(n+1)`.
pub fn km_l1_residual(alphas: &[f64], n: usize) -> Result<f64> {
    let p = poisson_binomial_pmf(alphas, n)?;
    if !is_unimodal(&p) {
        return Err(Error::Certification { m: -1, n: n as isize, detail: "Poisson binomial law is not unimodal".into() });
    }
    let peak = 2.0 * p.iter().copied().fold(0.0, f64::max);
    let direct: f64 = p
        .iter()
        .chain(std::iter::once(&0.0))
        .scan(0.0, |prev, &c| {
            let d = (c - *prev).abs();
            *prev = c;
            Some(d)
        })
        .sum();
    if (peak - direct).abs() > MASS_TOLERANCE {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("2 max p = {peak} but sum |dp| = {direct}") });
    }
    let bound = 1.0 / ((n + 1) as f64).sqrt();
    if peak < bound - 1e-12 {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("residual {peak} below 1/sqrt(n+1)") });
    }
    Ok(peak)
}

fn binomial_pmf(n: usize, k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let log_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
    (log_choose + k as f64 * x.ln() + (n - k) as f64 * (-x).ln_1p()).exp()
}

/// `f_n(x) = p_floor(nx) + p_ceil(nx)` for `B_n(x) ~ Binomial(n, x)`, which is
/// `P(floor(n x) <= B_n(x) <= ceil(n x))` when `n x` is fractional.
///
/// At `x = k/n` the two indices coincide and the atom is counted twice, as in
/// the bound `2 max_k p_k >= p_floor + p_ceil`. This makes `f_n(k/n)` exceed
/// both one-sided limits, so the infimum is a one-sided limit.
pub fn binomial_floor_function(n: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("x = {x} outside [0, 1]")));
    }
    let mut nx = n as f64 * x;
    if (nx - nx.round()).abs() <= 4.0 * f64::EPSILON * nx.max(1.0) {
        nx = nx.round();
    }
    let (lo, hi) = (nx.floor() as usize, (nx.ceil() as usize).min(n));
    Ok(binomial_pmf(n, lo, x) + binomial_pmf(n, hi, x))
}

fn inf_f_closed_form<S: Scalar>(n: usize) -> S {
    let m = (n / 2) as i64;
    if n.is_multiple_of(2) {
        // (2m+1)/(m+1) * C(2m, m) / 4^m
        (1..=m).fold(S::ratio(2 * m + 1, m + 1), |acc, i| acc * S::ratio(2 * i - 1, 2 * i))
    } else {
        // C(2m+1, m) (m(m+1)/(2m+1)^2)^m, with the binomial spread over the powers
        let q = S::ratio(m * (m + 1), (2 * m + 1) * (2 * m + 1));
        (1..=m).fold(S::one(), |acc, i| acc * S::ratio(m + 1 + i, i) * q.clone())
    }
}

/// Closed-form `inf_x f_n(x)`, checked against `inf f_n >= 1/sqrt(n+1)` and,
/// for odd `n`, against `inf f_n >= inf f_{n+1}`.
pub fn inf_f<S: Scalar>(n: usize) -> Result<S> {
    let value: S = inf_f_closed_form(n);
    let fail = |detail: String| Error::Certification { m: -1, n: n as isize, detail };
    if value.to_f64_lossy() < 1.0 / ((n + 1) as f64).sqrt() - 1e-12 {
        return Err(fail(format!("inf f_n = {value} below 1/sqrt(n+1)")));
    }
    if n % 2 == 1 && value < inf_f_closed_form::<S>(n + 1) - S::eps() {
        return Err(fail("inf f_n < inf f_{n+1} for odd n".into()));
    }
    Ok(value)
}
