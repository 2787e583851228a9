//! Plane rotations and Kim's inertial method.

use std::f64::consts::PI;

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Counterclockwise rotation of the plane by `theta`.
#[derive(Clone, Copy, Debug)]
pub struct Rotation {
    pub theta: f64,
}

impl Rotation {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (s, c) = self.theta.sin_cos();
        vec![c * x[0] - s * x[1], s * x[0] + c * x[1]]
    }
}

/// Right shift on `R^dim` that drops the last coordinate. Nonexpansive in
/// every `l_p` norm with unique fixed point 0.
#[derive(Clone, Copy, Debug)]
pub struct TruncatedShift {
    pub dim: usize,
}

impl TruncatedShift {
    pub fn apply<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut y = Vec::with_capacity(self.dim);
        y.push(S::zero());
        y.extend(x[..self.dim - 1].iter().cloned());
        y
    }
}

fn norm2<S: Scalar>(x: &[S]) -> f64 {
    x.iter().map(|c| c.to_f64_lossy().powi(2)).sum::<f64>().sqrt()
}

fn diff<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(p, q)| p.clone() - q.clone()).collect()
}

/// Halpern with `beta_k = k/(k+1)` on the rotation by `pi/(n+1)` from `(1, 0)`.
/// Returns `||x^n - T x^n||_2`, which must equal `2/(n+1)`.
pub fn rotation_halpern_residual(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("the rotation example needs n >= 1".into()));
    }
    let t = Rotation { theta: PI / (n + 1) as f64 };
    let x0 = [1.0, 0.0];
    let mut x = x0.to_vec();
    for k in 1..=n {
        let b = k as f64 / (k + 1) as f64;
        let tx = t.apply(&x);
        x = vec![(1.0 - b) * x0[0] + b * tx[0], (1.0 - b) * x0[1] + b * tx[1]];
    }
    let residual = norm2(&diff(&x, &t.apply(&x)));
    let expected = 2.0 / (n + 1) as f64;
    if (residual - expected).abs() > 1e-12 {
        return Err(Error::Certification { m: -1, n: n as isize, detail: format!("rotation residual {residual} != {expected}") });
    }
    Ok(residual)
}

#[derive(Clone, Debug)]
pub struct KimComparison {
    /// `max_n max_i |x^n_i(Kim) - x^n_i(Halpern)|` over `n = 0..=N`.
    pub max_gap: f64,
    /// `||x^n - T x^n||_2` along Kim's iterates.
    pub residuals: Vec<f64>,
    /// `2 ||x^0 - x*||_2 / (n+1)`.
    pub bounds: Vec<f64>,
}

impl KimComparison {
    pub fn within_bounds(&self, slack: f64) -> bool {
        self.residuals.iter().zip(&self.bounds).all(|(r, b)| *r <= b + slack)
    }
}

/// Runs Kim's inertial method with `M = I - T`, `mu = 1/2` and
/// `x^0 = y^0 = x^{-1}` next to the Halpern iteration
/// `x^n = x^0/(n+1) + n/(n+1) T x^{n-1}` for `steps` steps.
pub fn kim_vs_halpern<S: Scalar>(
    t: &dyn Fn(&[S]) -> Vec<S>,
    x0: &[S],
    fixed_point: &[S],
    steps: usize,
) -> Result<KimComparison> {
    if x0.is_empty() || x0.len() != fixed_point.len() {
        return Err(Error::DimensionMismatch(format!("start has {} coordinates, fixed point {}", x0.len(), fixed_point.len())));
    }
    let half = S::ratio(1, 2);
    let (mut x_prev, mut x, mut y) = (x0.to_vec(), x0.to_vec(), x0.to_vec());
    let mut h = x0.to_vec();
    let mut gap = S::zero();
    let radius = norm2(&diff(x0, fixed_point));
    let mut residuals = vec![norm2(&diff(&x, &t(&x)))];
    let mut bounds = vec![2.0 * radius];
    for k in 0..steps {
        let tx = t(&x);
        let y_next: Vec<S> = x.iter().zip(&tx).map(|(a, b)| half.clone() * (a.clone() + b.clone())).collect();
        let c = S::ratio(k as i64, k as i64 + 2);
        let x_next: Vec<S> = (0..x.len())
            .map(|i| {
                y_next[i].clone() + c.clone() * (y_next[i].clone() - y[i].clone())
                    - c.clone() * (y[i].clone() - x_prev[i].clone())
            })
            .collect();
        (x_prev, x, y) = (x, x_next, y_next);

        let n = k as i64 + 1;
        let th = t(&h);
        h = x0.iter().zip(&th).map(|(a, b)| S::ratio(1, n + 1) * a.clone() + S::ratio(n, n + 1) * b.clone()).collect();

        for (a, b) in x.iter().zip(&h) {
            gap = S::max_of(&gap, &(a.clone() - b.clone()).abs());
        }
        residuals.push(norm2(&diff(&x, &t(&x))));
        bounds.push(2.0 * radius / (n + 1) as f64);
    }
    Ok(KimComparison { max_gap: gap.to_f64_lossy(), residuals, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn rotation_examples() {
        assert!((rotation_halpern_residual(3).unwrap() - 0.5).abs() < 1e-15);
        assert!((rotation_halpern_residual(1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_step_is_exact() {
        let shift = TruncatedShift { dim: 4 };
        let x0: Vec<Rational> = (1..=4).map(|i| Rational::ratio(i, 3)).collect();
        let zero = vec![Rational::ratio(0, 1); 4];
        let run = kim_vs_halpern(&|x: &[Rational]| shift.apply(x), &x0, &zero, 1).unwrap();
        assert_eq!(run.max_gap, 0.0);
    }
}
