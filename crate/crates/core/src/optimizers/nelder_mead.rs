//! Nelder-Mead direct search with dimension-adaptive coefficients.

/// Stopping rules for one Nelder-Mead run.
#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub step: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Stop when the spread of vertex values falls below this.
    pub f_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { step: 0.05, x_tol: 1e-10, f_tol: 1e-15, max_evals: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Minimizes `f` from `x0`. Coefficients follow the adaptive choice
/// `rho = 1`, `chi = 1 + 2/d`, `gamma = 3/4 - 1/(2d)`, `sigma = 1 - 1/d`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let d = x0.len();
    if d == 0 {
        return NelderMeadResult { x: Vec::new(), value: f(x0), evals: 1 };
    }
    let dim = d as f64;
    let (rho, chi, gamma, sigma) = if d >= 2 {
        (1.0, 1.0 + 2.0 / dim, 0.75 - 0.5 / dim, 1.0 - 1.0 / dim)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] += opts.step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    loop {
        simplex.sort_by(by_value);
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if evals.get() >= opts.max_evals || diameter < opts.x_tol || (worst - best).abs() < opts.f_tol {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(rho);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(rho * chi);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[d].1 {
            let x = along(rho * gamma);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-gamma);
            let v = eval(&x);
            (x, v)
        };
        if fc < fr.min(simplex[d].1) {
            simplex[d] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = anchor.iter().zip(&vertex.0).map(|(a, v)| a + sigma * (v - a)).collect();
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(by_value);
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult { x, value, evals: evals.get() }
}

/// Restarts Nelder-Mead from its own result with a shrinking initial simplex
/// until a restart no longer improves the value.
pub fn nelder_mead_restarted(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let mut best = nelder_mead(f, x0, opts);
    let mut step = opts.step;
    let mut total = best.evals;
    for _ in 0..12 {
        if total >= opts.max_evals {
            break;
        }
        step = (step * 0.5).max(1e-6);
        let run = nelder_mead(f, &best.x, &NelderMeadOptions { step, max_evals: opts.max_evals - total, ..*opts });
        total += run.evals;
        if run.value < best.value - 1e-15 {
            best = run;
        } else {
            break;
        }
    }
    best.evals = total;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions { step: 0.5, x_tol: 1e-12, f_tol: 1e-20, max_evals: 10_000 };
        let r = nelder_mead_restarted(&f, &[-1.2, 1.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2);
        let r = nelder_mead(&f, &[0.9], &NelderMeadOptions { step: 0.1, ..Default::default() });
        assert!((r.x[0] - 0.3).abs() < 1e-7);
    }
}
