//! Right shift in `l-infinity` and affine Halpern on the `l1` shift.

use crate::bounds::TriangularArray;
use crate::optimizers::affine_halpern_theta;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Coordinates `x^n_0..x^n_{n-1}` of the Mann iterate for the `l-infinity`
/// right shift started from `x^0 = y^0 = (1, 1, ...)`. Every coordinate with
/// index `>= n` equals 1, so the returned prefix determines `x^n` exactly.
pub fn shift_linf_iterate<S: Scalar>(pi: &TriangularArray<S>, n: usize) -> Result<Vec<S>> {
    if n > pi.horizon() {
        return Err(Error::InvalidInput(format!("step {n} exceeds the array horizon {}", pi.horizon())));
    }
    // images[i] = T x^{i-1} restricted to indices 0..i (ones beyond); images[0] = y^0.
    let mut images: Vec<Vec<S>> = vec![Vec::new()];
    let mut x: Vec<S> = Vec::new();
    for k in 0..=n {
        let row = pi.row(k).weights();
        x = (0..k)
            .map(|j| {
                row.iter().enumerate().fold(S::zero(), |acc, (i, w)| {
                    let coord = images[i].get(j).cloned().unwrap_or_else(S::one);
                    acc + w.clone() * coord
                })
            })
            .collect();
        if let Some(j) = x.iter().position(|c| c.lt_eps(&S::zero()) || c.gt_eps(&S::one())) {
            return Err(Error::Certification { m: k as isize, n: k as isize, detail: format!("coordinate {j} left [0, 1]") });
        }
        let mut image = Vec::with_capacity(k + 1);
        image.push(S::zero());
        image.extend(x.iter().cloned());
        images.push(image);
    }
    Ok(x)
}

/// `max(x_0, max_i |x_i - x_{i-1}|, 1 - x_{n-1})`, the shift residual of a
/// profile whose coordinates from `n = coords.len()` on equal 1.
pub fn shift_profile_residual<S: Scalar>(coords: &[S]) -> S {
    let mut worst = coords.first().cloned().unwrap_or_else(S::one).abs();
    for w in coords.windows(2) {
        worst = S::max_of(&worst, &(w[1].clone() - w[0].clone()).abs());
    }
    if let Some(last) = coords.last() {
        worst = S::max_of(&worst, &(S::one() - last.clone()).abs());
    }
    worst
}

/// `||x^n - T x^n||_inf` for the right shift; fails if it falls below `1/(n+1)`.
pub fn shift_linf_residual<S: Scalar>(pi: &TriangularArray<S>, n: usize) -> Result<S> {
    let residual = shift_profile_residual(&shift_linf_iterate(pi, n)?);
    let bound = S::ratio(1, n as i64 + 1);
    let slack = if S::is_exact() { S::zero() } else { S::from_f64(1e-12).expect("finite") };
    if residual.clone() < bound.clone() - slack {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("shift residual {residual} below 1/(n+1)") });
    }
    Ok(residual)
}

/// `||x^n - T x^n||_1` for `x^k = (1 - beta_k) e^0 + beta_k T x^{k-1}` on the
/// `l1` right shift from `x^0 = e^0`, checked against `Theta_n(beta)`.
pub fn affine_shift_halpern_residual<S: Scalar>(betas: &[S], n: usize) -> Result<S> {
    if betas.len() <= n {
        return Err(Error::InvalidInput(format!("need beta_0..beta_{n}, got {} values", betas.len())));
    }
    let betas = &betas[..=n];
    let theta = affine_halpern_theta(betas)?;
    let mut x = vec![S::one()];
    for b in &betas[1..] {
        let mut next = Vec::with_capacity(x.len() + 1);
        next.push(S::one() - b.clone());
        next.extend(x.iter().map(|c| b.clone() * c.clone()));
        x = next;
    }
    // x - T x has entries c_j - c_{j-1} on 0..=n+1.
    let mut residual = S::zero();
    let mut prev = S::zero();
    for c in x.iter().chain(std::iter::once(&S::zero())) {
        residual = residual + (c.clone() - prev).abs();
        prev = c.clone();
    }
    let agree = if S::is_exact() {
        residual == theta
    } else {
        (residual.clone() - theta.clone()).abs() <= S::from_f64(1e-12).expect("finite")
    };
    if !agree {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("residual {residual} differs from Theta {theta}") });
    }
    Ok(residual)
}
