//! Global minimization of small quadratic programs by face enumeration.
//!
//! The minimum of `c'x + x'Qx` over a polytope `{Ax = b, Cx >= e}` is attained
//! at a stationary point of the relative interior of some face. Each face is
//! described by a set of active inequalities; its stationary points solve a
//! KKT linear system. Enumerating all active sets up to the dimension of the
//! polytope and keeping the best feasible candidate gives the global minimum.
//! Singular systems are skipped: on such a face the objective is either
//! unbounded along a direction (so the minimum lies on a smaller face) or
//! constant along one (so an equally good point lies on a smaller face).
//!
//! With [`Rational`](crate::Rational) scalars every step is exact.

use crate::bounds::DistanceTable;
use crate::scalar::Scalar;
use crate::transport::Distribution;

/// `min c'x + x'Qx  s.t.  Ax = b,  Cx >= e`.
#[derive(Clone, Debug)]
pub struct QuadraticProgram<S: Scalar = f64> {
    pub linear: Vec<S>,
    /// Not necessarily symmetric.
    pub quadratic: Vec<Vec<S>>,
    /// Rows must be linearly independent.
    pub eq_matrix: Vec<Vec<S>>,
    pub eq_rhs: Vec<S>,
    pub ineq_matrix: Vec<Vec<S>>,
    pub ineq_rhs: Vec<S>,
}

impl<S: Scalar> QuadraticProgram<S> {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: &[S]) -> S {
        let mut v = crate::scalar::dot(&self.linear, x);
        for (i, row) in self.quadratic.iter().enumerate() {
            if x[i].is_zero() {
                continue;
            }
            v = v + x[i].clone() * crate::scalar::dot(row, x);
        }
        v
    }

    /// Largest constraint violation (zero when feasible).
    pub fn violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for (row, rhs) in self.eq_matrix.iter().zip(&self.eq_rhs) {
            worst = S::max_of(&worst, &(crate::scalar::dot(row, x) - rhs.clone()).abs());
        }
        for (row, rhs) in self.ineq_matrix.iter().zip(&self.ineq_rhs) {
            worst = S::max_of(&worst, &(rhs.clone() - crate::scalar::dot(row, x)));
        }
        worst
    }

    /// Global minimizer and value, ties broken towards the lexicographically
    /// smallest point. `None` if no face has a feasible stationary point
    /// (which for a nonempty bounded polytope cannot happen).
    pub fn solve_by_faces(&self) -> Option<(Vec<S>, S)> {
        let d = self.dim();
        let free = d.saturating_sub(self.eq_matrix.len());
        let tol = if S::is_exact() { S::zero() } else { S::from_f64(1e-10).expect("finite") };
        let mut best: Option<(Vec<S>, S)> = None;
        let mut active = Vec::with_capacity(free);
        self.enumerate(0, free, &mut active, &mut |set| {
            let Some(x) = self.face_stationary_point(set) else { return };
            if self.violation(&x) > tol {
                return;
            }
            let v = self.value(&x);
            let better = match &best {
                None => true,
                Some((bx, bv)) => v.lt_eps(bv) || (v.approx_eq(bv) && lex_less(&x, bx)),
            };
            if better {
                best = Some((x, v));
            }
        });
        best
    }

    fn enumerate(&self, start: usize, left: usize, active: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        visit(active);
        if left == 0 {
            return;
        }
        for k in start..self.ineq_matrix.len() {
            active.push(k);
            self.enumerate(k + 1, left - 1, active, visit);
            active.pop();
        }
    }

    /// Solves `(Q + Q')x - M'lambda = -c`, `Mx = rhs` with `M` stacking the
    /// equalities and the active inequalities.
    fn face_stationary_point(&self, active: &[usize]) -> Option<Vec<S>> {
        let d = self.dim();
        let rows: Vec<(&Vec<S>, &S)> = self
            .eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .chain(active.iter().map(|&k| (&self.ineq_matrix[k], &self.ineq_rhs[k])))
            .collect();
        let size = d + rows.len();
        let mut a = vec![vec![S::zero(); size]; size];
        let mut rhs = vec![S::zero(); size];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = self.quadratic[i][j].clone() + self.quadratic[j][i].clone();
            }
            for (r, (row, _)) in rows.iter().enumerate() {
                a[i][d + r] = -row[i].clone();
            }
            rhs[i] = -self.linear[i].clone();
        }
        for (r, (row, b)) in rows.iter().enumerate() {
            a[d + r][..d].clone_from_slice(row);
            rhs[d + r] = (*b).clone();
        }
        let sol = solve_linear(a, rhs)?;
        Some(sol[..d].to_vec())
    }
}

fn lex_less<S: Scalar>(a: &[S], b: &[S]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x.lt_eps(y) {
            return true;
        }
        if x.gt_eps(y) {
            return false;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting. `None` for singular systems.
pub fn solve_linear<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(S::zero(), |m, x| S::max_of(&m, &x.abs()));
    let singular = if S::is_exact() { S::zero() } else { scale * S::from_f64(1e-11).expect("finite") };
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("ordered"))?;
        if a[pivot][col].abs() <= singular {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / p.clone();
            for k in col..n {
                let delta = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[row] = b[row].clone() - delta;
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Some(x)
}

/// The monotone sequential stage problem as an explicit quadratic program.
///
/// With `m = k - 1`, the closed-form distance
/// `D_{m,n}(p) = sum_{i<=m} (pi^m_i - p_i) d(i-1,n-1) + sum_{j>m} p_j (d(m-1,j-1) - d(m-1,n-1))`
/// makes `p_0 + sum_k p_k D_{k-1,n}(p)` a quadratic form. The feasible set is
/// `p` in the simplex with `p_k <= pi^{n-1}_k` for `k < n` and `p_n >= 1/2`.
/// `table` must cover indices up to `n - 1` and `rows` hold `pi^0..pi^{n-1}`.
pub fn monotone_stage_qp<S: Scalar>(table: &DistanceTable<S>, rows: &[Distribution<S>]) -> QuadraticProgram<S> {
    let n = table.horizon() + 1;
    assert_eq!(rows.len(), n, "stage {n} needs rows 0..{n}");
    let d = |a: isize, b: isize| table.get(a, b);
    let top = n as isize - 1;
    let mut linear = vec![S::zero(); n + 1];
    let mut quadratic = vec![vec![S::zero(); n + 1]; n + 1];
    linear[0] = S::one();
    for k in 1..=n {
        let m = k - 1;
        let pm = rows[m].weights();
        linear[k] = (0..=m).fold(S::zero(), |acc, i| acc + pm[i].clone() * d(i as isize - 1, top));
        for i in 0..=m {
            quadratic[k][i] = -d(i as isize - 1, top);
        }
        for j in m + 1..=n {
            quadratic[k][j] = d(m as isize - 1, j as isize - 1) - d(m as isize - 1, top);
        }
    }
    let prev = rows[n - 1].weights();
    let mut ineq_matrix = Vec::with_capacity(2 * n + 1);
    let mut ineq_rhs = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        ineq_matrix.push(unit_row(n + 1, k, S::one()));
        ineq_rhs.push(S::zero());
        ineq_matrix.push(unit_row(n + 1, k, -S::one()));
        ineq_rhs.push(-prev[k].clone());
    }
    ineq_matrix.push(unit_row(n + 1, n, S::one()));
    ineq_rhs.push(S::ratio(1, 2));
    QuadraticProgram {
        linear,
        quadratic,
        eq_matrix: vec![vec![S::one(); n + 1]],
        eq_rhs: vec![S::one()],
        ineq_matrix,
        ineq_rhs,
    }
}

/// The unconstrained sequential stage problem as a quadratic program in the
/// row `p` and the transport plans `z^m` from `pi^m` to `p` jointly:
/// `min p_0 + sum_m p_{m+1} <c^m, z^m>`. Since `p >= 0`, minimizing over the
/// plans first gives back `p_0 + sum_m p_{m+1} d(m, n)`. The enumeration grows
/// quickly with `n`; intended for `n <= 2`.
pub fn sequential_stage_qp<S: Scalar>(table: &DistanceTable<S>, rows: &[Distribution<S>]) -> QuadraticProgram<S> {
    let n = table.horizon() + 1;
    assert_eq!(rows.len(), n, "stage {n} needs rows 0..{n}");
    let width = n + 1;
    // Offsets of each plan block z^m (size (m+1) x (n+1)).
    let mut offsets = Vec::with_capacity(n);
    let mut dim = width;
    for m in 0..n {
        offsets.push(dim);
        dim += (m + 1) * width;
    }
    let mut linear = vec![S::zero(); dim];
    linear[0] = S::one();
    let mut quadratic = vec![vec![S::zero(); dim]; dim];
    let mut eq_matrix = vec![{
        let mut r = vec![S::zero(); dim];
        r[..width].iter_mut().for_each(|x| *x = S::one());
        r
    }];
    let mut eq_rhs = vec![S::one()];
    for m in 0..n {
        let off = offsets[m];
        let cell = |i: usize, j: usize| off + i * width + j;
        for i in 0..=m {
            for j in 0..width {
                quadratic[m + 1][cell(i, j)] = table.get(i as isize - 1, j as isize - 1);
            }
        }
        // Source margins.
        for i in 0..=m {
            let mut r = vec![S::zero(); dim];
            (0..width).for_each(|j| r[cell(i, j)] = S::one());
            eq_matrix.push(r);
            eq_rhs.push(rows[m].get(i));
        }
        // Target margins, dropping the last one which the others imply.
        for j in 0..n {
            let mut r = vec![S::zero(); dim];
            (0..=m).for_each(|i| r[cell(i, j)] = S::one());
            r[j] = -S::one();
            eq_matrix.push(r);
            eq_rhs.push(S::zero());
        }
    }
    let ineq_matrix = (0..dim).map(|k| unit_row(dim, k, S::one())).collect();
    QuadraticProgram { linear, quadratic, eq_matrix, eq_rhs, ineq_matrix, ineq_rhs: vec![S::zero(); dim] }
}

fn unit_row<S: Scalar>(len: usize, k: usize, value: S) -> Vec<S> {
    let mut r = vec![S::zero(); len];
    r[k] = value;
    r
}
