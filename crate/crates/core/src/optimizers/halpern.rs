//! Closed-form results for Halpern iterations.
//!
//! Halpern rows `pi^n = (1 - beta_n) delta^0 + beta_n delta^n` with increasing
//! stepsizes give `R_n = (1 - beta_n)^2 + beta_n R_{n-1}`, which is minimized
//! stage by stage by `beta_{n+1} = (1 + beta_n^2) / 2`. For affine maps the
//! tight residual bound is `Theta_n`, minimized by `beta_k = k / (k + 1)`.

use serde::Serialize;

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Optimal stepsizes `beta_0..=beta_N` and residuals `R_0..=R_N`.
///
/// Fails if the sequences are not strictly monotone or if `R_n > 4/(n+4)`,
/// which would indicate a precision breakdown.
pub fn halpern_optimal_recursion<S: Scalar>(horizon: usize) -> Result<(Vec<S>, Vec<S>)> {
    let two = S::ratio(2, 1);
    let four = S::ratio(4, 1);
    let mut betas = Vec::with_capacity(horizon + 1);
    let mut residuals = Vec::with_capacity(horizon + 1);
    betas.push(S::zero());
    residuals.push(S::one());
    for n in 0..horizon {
        let b = betas[n].clone();
        let r = residuals[n].clone();
        let next_b = (S::one() + b.clone() * b.clone()) / two.clone();
        let next_r = r.clone() - r.clone() * r.clone() / four.clone();
        if next_b <= b || next_r >= r {
            return Err(Error::Certification {
                m: n as isize,
                n: n as isize + 1,
                detail: "optimal Halpern sequences lost strict monotonicity".into(),
            });
        }
        if next_r > four.clone() / <S as Scalar>::from_usize(n + 5) {
            return Err(Error::Certification {
                m: -1,
                n: n as isize + 1,
                detail: format!("residual {next_r} exceeds 4/(n+4)"),
            });
        }
        betas.push(next_b);
        residuals.push(next_r);
    }
    Ok((betas, residuals))
}

/// `R_n = 4/(n+1) (1 - H_{n+2}/(n+2))`, the tight bound for `beta_n = n/(n+2)`.
pub fn remark_one_residual<S: Scalar>(n: usize) -> S {
    let harmonic = (1..=n + 2).fold(S::zero(), |acc, k| acc + S::ratio(1, k as i64));
    S::ratio(4, n as i64 + 1) * (S::one() - harmonic / <S as Scalar>::from_usize(n + 2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SufficientReport {
    pub passed: bool,
    pub first_failure: Option<usize>,
    /// Largest `lhs - rhs` over the checked range (negative when every check passes).
    pub worst_margin: f64,
    pub checked: usize,
}

/// Checks `(1 - beta_n)^2 + kappa beta_n / (n + a) <= kappa / (n + a + 1)` for
/// `n = 1..` over the supplied stepsizes. The induction also needs
/// `a + 1 <= kappa`; that is reported as a failure at `n = 0`.
pub fn check_halpern_sufficient(betas: &[f64], a: f64, kappa: f64) -> Result<SufficientReport> {
    if a < 0.0 {
        return Err(Error::InvalidInput(format!("offset a = {a} must be nonnegative")));
    }
    if let Some(n) = betas.iter().position(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::InvalidInput(format!("beta_{n} = {} outside [0, 1]", betas[n])));
    }
    let mut report = SufficientReport { passed: true, first_failure: None, worst_margin: f64::NEG_INFINITY, checked: 0 };
    if a + 1.0 > kappa {
        report.passed = false;
        report.first_failure = Some(0);
        report.worst_margin = a + 1.0 - kappa;
    }
    for (n, b) in betas.iter().enumerate().skip(1) {
        let t = n as f64 + a;
        let lhs = (1.0 - b) * (1.0 - b) + kappa * b / t;
        let rhs = kappa / (t + 1.0);
        let margin = lhs - rhs;
        report.worst_margin = report.worst_margin.max(margin);
        report.checked += 1;
        if margin > 1e-14 * rhs && report.first_failure.is_none() {
            report.passed = false;
            report.first_failure = Some(n);
        }
    }
    Ok(report)
}

/// Stepsize closest to satisfying the sufficient condition at stage `n`,
/// `beta = 1 - kappa / (2 (n + a))`, clamped to `[0, 1]`.
pub fn best_sufficient_step(n: usize, a: f64, kappa: f64) -> f64 {
    (1.0 - kappa / (2.0 * (n as f64 + a))).clamp(0.0, 1.0)
}

/// Half-width `delta_n = 2 / ((n + 3) sqrt(n + 4))` of the window around `(n+1)/(n+3)`.
pub fn remark_two_delta(n: usize) -> f64 {
    2.0 / ((n as f64 + 3.0) * (n as f64 + 4.0).sqrt())
}

/// First `n >= 1` with `|beta_n - (n+1)/(n+3)| > delta_n`, if any.
pub fn remark_two_window(betas: &[f64]) -> Option<usize> {
    betas.iter().enumerate().skip(1).find_map(|(n, b)| {
        let center = (n as f64 + 1.0) / (n as f64 + 3.0);
        ((b - center).abs() > remark_two_delta(n) * (1.0 + 1e-12)).then_some(n)
    })
}

/// `Theta_n(beta)` with `n = betas.len() - 1`; `betas[0]` must be 0.
pub fn affine_halpern_theta<S: Scalar>(betas: &[S]) -> Result<S> {
    if betas.is_empty() || !betas[0].is_zero() {
        return Err(Error::InvalidInput("affine Halpern stepsizes must start with beta_0 = 0".into()));
    }
    if let Some(k) = betas.iter().position(|b| *b < S::zero() || *b > S::one()) {
        return Err(Error::InvalidInput(format!("beta_{k} = {} outside [0, 1]", betas[k])));
    }
    let n = betas.len() - 1;
    // tail[k] = prod_{l=k}^{n} beta_l, tail[n+1] = 1.
    let mut tail = vec![S::one(); n + 2];
    for k in (1..=n).rev() {
        tail[k] = tail[k + 1].clone() * betas[k].clone();
    }
    let two = S::ratio(2, 1);
    let mut theta = S::one() - betas[n].clone() + tail[1].clone();
    for k in 1..=n {
        let kink = ((two.clone() - betas[k - 1].clone()) * betas[k].clone() - S::one()).abs();
        theta = theta + kink * tail[k + 1].clone();
    }
    Ok(theta)
}

/// Minimizer `beta_k = k/(k+1)`, `k = 0..=n`, checked to give `Theta_n = 2/(n+1)`
/// (exactly for exact scalars).
pub fn affine_halpern_optimal<S: Scalar>(n: usize) -> Result<Vec<S>> {
    let betas: Vec<S> = (0..=n).map(|k| S::ratio(k as i64, k as i64 + 1)).collect();
    let theta = affine_halpern_theta(&betas)?;
    let target = S::ratio(2, n as i64 + 1);
    let ok = if S::is_exact() { theta == target } else { (theta.clone() - target.clone()).abs() <= S::from_f64(1e-12).expect("finite") };
    if !ok {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("Theta = {theta}, expected {target}") });
    }
    Ok(betas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::ratio(p, q)
    }

    #[test]
    fn recursion_first_terms() {
        let (b, res) = halpern_optimal_recursion::<Rational>(3).unwrap();
        assert_eq!(b, vec![r(0, 1), r(1, 2), r(5, 8), r(89, 128)]);
        assert_eq!(&res[..3], &[r(1, 1), r(3, 4), r(39, 64)]);
        // R_n = 2 (1 - beta_{n+1}).
        for n in 0..3 {
            assert_eq!(res[n], r(2, 1) * (r(1, 1) - b[n + 1].clone()));
        }
    }

    #[test]
    fn remark_one_first_value() {
        assert_eq!(remark_one_residual::<Rational>(1), r(7, 9));
    }

    #[test]
    fn sufficient_condition_examples() {
        let b: Vec<f64> = (0..=10_000).map(|n| n as f64 / (n as f64 + 2.0)).collect();
        assert!(check_halpern_sufficient(&b, 0.0, 4.0).unwrap().passed);
        let shifted: Vec<f64> = (0..=10_000).map(|n| (n as f64 + 1.0) / (n as f64 + 3.0)).collect();
        assert!(check_halpern_sufficient(&shifted[..], 3.0, 4.0).unwrap().passed);
        assert!(remark_two_window(&shifted).is_none());
        let best: Vec<f64> = (0..=1000).map(|n| best_sufficient_step(n, 0.0, 3.9)).collect();
        assert!(!check_halpern_sufficient(&best, 0.0, 3.9).unwrap().passed);
    }

    #[test]
    fn theta_values() {
        assert_eq!(affine_halpern_theta(&[r(0, 1), r(1, 2)]).unwrap(), r(1, 1));
        let b = affine_halpern_optimal::<Rational>(9).unwrap();
        assert_eq!(affine_halpern_theta(&b).unwrap(), r(1, 5));
        // Picard on the l1 shift: ‖e^n - e^{n+1}‖ = 2.
        let mut ones = vec![r(1, 1); 6];
        ones[0] = r(0, 1);
        assert_eq!(affine_halpern_theta(&ones).unwrap(), r(2, 1));
    }
}
