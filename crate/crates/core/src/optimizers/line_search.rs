//! One-dimensional minimization on an interval.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's method (golden section with parabolic steps) on `[lo, hi]`.
/// Returns the best point and value seen.
pub fn brent(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

/// Minimizes on `[lo, hi]`: uniform grid, Brent around the best grid point,
/// endpoint checks and parabolic refinement with shrinking spacing.
pub fn minimize_interval(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let grid = grid.max(2);
    let h = (hi - lo) / grid as f64;
    let mut best = (lo, f(lo));
    for k in 1..=grid {
        let x = if k == grid { hi } else { lo + k as f64 * h };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (a, b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let cand = brent(f, a, b, 1e-12, 200);
    if cand.1 < best.1 {
        best = cand;
    }
    parabolic_polish(f, best, lo, hi)
}

/// Three-point parabolic fits around `best` with spacings 1e-3, 1e-4 and 1e-5.
/// On a locally quadratic function the fitted vertex is exact up to rounding;
/// it is accepted when its value is within rounding of the best value, so
/// the result is not limited by the `sqrt(eps)` resolution of value comparisons.
pub fn parabolic_polish(f: &dyn Fn(f64) -> f64, mut best: (f64, f64), lo: f64, hi: f64) -> (f64, f64) {
    for h in [1e-3, 1e-4, 1e-5] {
        let x = best.0;
        let (xl, xr) = ((x - h).max(lo), (x + h).min(hi));
        if xr - xl < 1e-12 {
            break;
        }
        let xm = 0.5 * (xl + xr);
        let (fl, fm, fr) = (f(xl), f(xm), f(xr));
        let noise = 4.0 * f64::EPSILON * best.1.abs().max(1.0);
        for cand in [(xl, fl), (xm, fm), (xr, fr)] {
            if cand.1 < best.1 - noise {
                best = cand;
            }
        }
        let hh = 0.5 * (xr - xl);
        let curvature = fl - 2.0 * fm + fr;
        if curvature > 0.0 {
            let t = (xm + hh * (fl - fr) / (2.0 * curvature)).clamp(lo, hi);
            let ft = f(t);
            if (t - xm).abs() <= hh && ft <= best.1 + noise {
                best = (t, ft.min(best.1));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_quadratic_minimum() {
        let (x, _) = brent(&|x| (x - 0.7).powi(2) + 1.0, 0.0, 1.0, 1e-12, 200);
        assert!((x - 0.7).abs() < 1e-7);
    }

    #[test]
    fn interval_search_handles_endpoints_and_kinks() {
        let (x, v) = minimize_interval(&|x| (x - 2.0).powi(2), 0.0, 1.0, 10);
        assert_eq!(x, 1.0);
        assert_eq!(v, 1.0);
        let (x, _) = minimize_interval(&|x: f64| (x - 0.123_456_789).abs() + 0.1 * x * x, 0.0, 1.0, 20);
        assert!((x - 0.123_456_789).abs() < 1e-9, "{x}");
        let (x, _) = minimize_interval(&|x| 3.0 * x * x - 2.0 * x + 0.5, 0.0, 1.0, 16);
        assert!((x - 1.0 / 3.0).abs() < 1e-11, "{x}");
    }
}
