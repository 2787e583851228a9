//! Transportation simplex (u-v method).
//!
//! Starts from the northwest-corner basis, prices nonbasic cells with the tree
//! potentials and pivots along the unique cycle closed by the entering cell.
//! Entering cells follow Dantzig's rule while pivots make progress; after a
//! degenerate pivot the solver switches to Bland's rule (lowest cell index
//! enters, lowest index among tied minus cells leaves) until the next
//! nondegenerate pivot, which rules out cycling.

use super::{check_shapes, normalize_duals, plan_cost, sparse_flows, CostMatrix, Distribution, TransportPlan};
use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Row(usize),
    Col(usize),
}

struct Tableau<'a, S: Scalar> {
    rows: usize,
    cols: usize,
    costs: &'a CostMatrix<S>,
    supply: &'a [S],
    demand: &'a [S],
    flow: Vec<S>,
    basic: Vec<bool>,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl<'a, S: Scalar> Tableau<'a, S> {
    fn northwest(source: &'a Distribution<S>, target: &'a Distribution<S>, costs: &'a CostMatrix<S>) -> Self {
        let (rows, cols) = (source.len(), target.len());
        let mut tab = Tableau {
            rows,
            cols,
            costs,
            supply: source.weights(),
            demand: target.weights(),
            flow: vec![S::zero(); rows * cols],
            basic: vec![false; rows * cols],
            row_adj: vec![Vec::new(); rows],
            col_adj: vec![Vec::new(); cols],
        };
        let mut a = tab.supply[0].clone();
        let mut b = tab.demand[0].clone();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = S::min_of(&a, &b);
            tab.add_basic(i, j);
            tab.flow[i * cols + j] = x.clone();
            if i == rows - 1 && j == cols - 1 {
                break;
            }
            a = a - x.clone();
            b = b - x;
            // Leave the staircase through whichever margin is exhausted; on ties
            // move down so the skipped column keeps a zero basic cell.
            let go_down = if i == rows - 1 {
                false
            } else if j == cols - 1 {
                true
            } else {
                a <= b
            };
            if go_down {
                i += 1;
                a = tab.supply[i].clone();
            } else {
                j += 1;
                b = tab.demand[j].clone();
            }
        }
        tab
    }

    fn add_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.cols + j] = true;
        self.row_adj[i].push(j);
        self.col_adj[j].push(i);
    }

    fn remove_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.cols + j] = false;
        self.flow[i * self.cols + j] = S::zero();
        self.row_adj[i].retain(|&c| c != j);
        self.col_adj[j].retain(|&r| r != i);
    }

    /// Tree potentials with `v[0] = 0` and `u[j] - v[i] = c(i, j)` on basic cells.
    fn potentials(&self) -> (Vec<S>, Vec<S>) {
        let mut u = vec![S::zero(); self.cols];
        let mut v = vec![S::zero(); self.rows];
        let mut row_seen = vec![false; self.rows];
        let mut col_seen = vec![false; self.cols];
        let mut stack = vec![Node::Row(0)];
        row_seen[0] = true;
        while let Some(node) = stack.pop() {
            match node {
                Node::Row(i) => {
                    for &j in &self.row_adj[i] {
                        if !col_seen[j] {
                            col_seen[j] = true;
                            u[j] = v[i].clone() + self.costs.get(i, j).clone();
                            stack.push(Node::Col(j));
                        }
                    }
                }
                Node::Col(j) => {
                    for &i in &self.col_adj[j] {
                        if !row_seen[i] {
                            row_seen[i] = true;
                            v[i] = u[j].clone() - self.costs.get(i, j).clone();
                            stack.push(Node::Row(i));
                        }
                    }
                }
            }
        }
        debug_assert!(row_seen.iter().all(|&s| s) && col_seen.iter().all(|&s| s), "basis is not spanning");
        (u, v)
    }

    fn entering(&self, u: &[S], v: &[S], bland: bool) -> Option<(usize, usize)> {
        let threshold = -S::eps();
        let mut best: Option<(usize, usize, S)> = None;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.basic[i * self.cols + j] {
                    continue;
                }
                let reduced = self.costs.get(i, j).clone() - u[j].clone() + v[i].clone();
                if reduced < threshold {
                    if bland {
                        return Some((i, j));
                    }
                    if best.as_ref().is_none_or(|(_, _, r)| reduced < *r) {
                        best = Some((i, j, reduced));
                    }
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Tree path from column `j` to row `i`, as the list of visited nodes.
    fn tree_path(&self, i: usize, j: usize) -> Vec<Node> {
        let n_nodes = self.rows + self.cols;
        let index = |node: Node| match node {
            Node::Row(r) => r,
            Node::Col(c) => self.rows + c,
        };
        let mut parent: Vec<Option<Node>> = vec![None; n_nodes];
        let mut seen = vec![false; n_nodes];
        let start = Node::Col(j);
        let goal = Node::Row(i);
        seen[index(start)] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            let next: Vec<Node> = match node {
                Node::Row(r) => self.row_adj[r].iter().map(|&c| Node::Col(c)).collect(),
                Node::Col(c) => self.col_adj[c].iter().map(|&r| Node::Row(r)).collect(),
            };
            for nb in next {
                if !seen[index(nb)] {
                    seen[index(nb)] = true;
                    parent[index(nb)] = Some(node);
                    queue.push_back(nb);
                }
            }
        }
        let mut path = vec![goal];
        let mut cur = goal;
        while let Some(p) = parent[index(cur)] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        debug_assert_eq!(path[0], start);
        path
    }

    fn optimize(&mut self) -> Result<usize> {
        let guard = 10_000 + 50 * self.rows * self.cols;
        let mut bland = false;
        for pivot in 0..guard {
            let (u, v) = self.potentials();
            let Some((ei, ej)) = self.entering(&u, &v, bland) else {
                return Ok(pivot);
            };
            let path = self.tree_path(ei, ej);
            // Cycle cells in order: the entering cell (+), then the tree edges
            // along the path with alternating signs starting at minus.
            let mut cells: Vec<(usize, usize)> = Vec::with_capacity(path.len());
            for w in path.windows(2) {
                let cell = match (w[0], w[1]) {
                    (Node::Col(c), Node::Row(r)) | (Node::Row(r), Node::Col(c)) => (r, c),
                    _ => unreachable!("tree paths alternate rows and columns"),
                };
                cells.push(cell);
            }
            let minus: Vec<(usize, usize)> = cells.iter().copied().step_by(2).collect();
            let plus: Vec<(usize, usize)> = cells.iter().copied().skip(1).step_by(2).collect();
            let theta = minus
                .iter()
                .map(|&(r, c)| self.flow[r * self.cols + c].clone())
                .reduce(|a, b| S::min_of(&a, &b))
                .expect("cycle has a minus cell");
            let leaving = minus
                .iter()
                .copied()
                .filter(|&(r, c)| self.flow[r * self.cols + c].approx_eq(&theta))
                .min_by_key(|&(r, c)| r * self.cols + c)
                .expect("the minimum is attained");
            for &(r, c) in &minus {
                let k = r * self.cols + c;
                self.flow[k] = self.flow[k].clone() - theta.clone();
            }
            for &(r, c) in &plus {
                let k = r * self.cols + c;
                self.flow[k] = self.flow[k].clone() + theta.clone();
            }
            self.remove_basic(leaving.0, leaving.1);
            self.add_basic(ei, ej);
            self.flow[ei * self.cols + ej] = theta.clone();
            bland = !theta.is_positive_eps();
        }
        Err(Error::CycleGuard(guard))
    }

    /// Recomputes basic flows from the margins by peeling tree leaves.
    fn refresh_flows(&mut self) {
        let mut supply: Vec<S> = self.supply.to_vec();
        let mut demand: Vec<S> = self.demand.to_vec();
        let mut row_deg: Vec<usize> = self.row_adj.iter().map(Vec::len).collect();
        let mut col_deg: Vec<usize> = self.col_adj.iter().map(Vec::len).collect();
        let mut done = vec![false; self.rows * self.cols];
        let mut remaining = self.rows + self.cols - 1;
        while remaining > 0 {
            let mut progressed = false;
            for i in 0..self.rows {
                if row_deg[i] == 1 {
                    let j = *self.row_adj[i]
                        .iter()
                        .find(|&&c| !done[i * self.cols + c])
                        .expect("leaf has one live edge");
                    self.assign(i, j, supply[i].clone(), &mut supply, &mut demand, &mut done);
                    row_deg[i] -= 1;
                    col_deg[j] -= 1;
                    remaining -= 1;
                    progressed = true;
                }
            }
            for j in 0..self.cols {
                if col_deg[j] == 1 {
                    let i = *self.col_adj[j]
                        .iter()
                        .find(|&&r| !done[r * self.cols + j])
                        .expect("leaf has one live edge");
                    self.assign(i, j, demand[j].clone(), &mut supply, &mut demand, &mut done);
                    row_deg[i] -= 1;
                    col_deg[j] -= 1;
                    remaining -= 1;
                    progressed = true;
                }
            }
            debug_assert!(progressed, "basis graph is not a tree");
            if !progressed {
                break;
            }
        }
    }

    fn assign(&mut self, i: usize, j: usize, amount: S, supply: &mut [S], demand: &mut [S], done: &mut [bool]) {
        let k = i * self.cols + j;
        let amount = if amount < S::zero() { S::zero() } else { amount };
        supply[i] = supply[i].clone() - amount.clone();
        demand[j] = demand[j].clone() - amount.clone();
        self.flow[k] = amount;
        done[k] = true;
    }
}

/// Moves mass onto the diagonal until `flow(i, i) = min(source[i], target[i])`.
///
/// Each reroute replaces `i -> j` and `k -> i` by `i -> i` and `k -> j`, which
/// does not increase the cost when `c(k, j) <= c(k, i) + c(i, j)` and
/// `c(i, i) = 0`; reroutes violating that are skipped.
fn saturate_diagonal<S: Scalar>(flow: &mut [S], source: &[S], target: &[S], costs: &CostMatrix<S>) {
    let cols = target.len();
    for i in 0..source.len().min(cols) {
        if !costs.get(i, i).approx_eq(&S::zero()) {
            continue;
        }
        let want = S::min_of(&source[i], &target[i]);
        'reroute: loop {
            let have = flow[i * cols + i].clone();
            let missing = want.clone() - have;
            if !missing.is_positive_eps() {
                break;
            }
            for j in (0..cols).filter(|&j| j != i) {
                if !flow[i * cols + j].is_positive_eps() {
                    continue;
                }
                for k in (0..source.len()).filter(|&k| k != i) {
                    if !flow[k * cols + i].is_positive_eps() {
                        continue;
                    }
                    let detour = costs.get(k, i).clone() + costs.get(i, j).clone();
                    if costs.get(k, j).gt_eps(&detour) {
                        continue;
                    }
                    let delta = S::min_of(
                        &S::min_of(&flow[i * cols + j], &flow[k * cols + i]),
                        &missing,
                    );
                    flow[i * cols + j] = flow[i * cols + j].clone() - delta.clone();
                    flow[k * cols + i] = flow[k * cols + i].clone() - delta.clone();
                    flow[i * cols + i] = flow[i * cols + i].clone() + delta.clone();
                    flow[k * cols + j] = flow[k * cols + j].clone() + delta;
                    continue 'reroute;
                }
            }
            break;
        }
    }
    if !S::is_exact() {
        for z in flow.iter_mut() {
            if !z.is_positive_eps() {
                *z = S::zero();
            }
        }
    }
}

/// Solves the transportation problem exactly (up to the backend slack).
///
/// Returns a basic optimal plan post-processed onto the diagonal, together with
/// tree duals tightened by a double c-transform and shifted to start at zero.
pub fn solve_transport<S: Scalar>(
    source: &Distribution<S>,
    target: &Distribution<S>,
    costs: &CostMatrix<S>,
) -> Result<TransportPlan<S>> {
    check_shapes(source, target, costs)?;
    let (a, b) = (source.weights(), target.weights());
    let rows: Vec<usize> = (0..a.len()).filter(|&i| a[i] > S::zero()).collect();
    let cols: Vec<usize> = (0..b.len()).filter(|&j| b[j] > S::zero()).collect();
    let (mut flow, mut u, mut v) = if rows.len() == a.len() && cols.len() == b.len() {
        let mut tab = Tableau::northwest(source, target, costs);
        tab.optimize()?;
        tab.refresh_flows();
        let (u, v) = tab.potentials();
        (std::mem::take(&mut tab.flow), u, v)
    } else {
        solve_on_support(source, target, costs, &rows, &cols)?
    };
    normalize_duals(&mut u, &mut v, costs);
    saturate_diagonal(&mut flow, a, b, costs);
    let flows = sparse_flows(&flow, target.len());
    let objective = plan_cost(&flows, costs);
    Ok(TransportPlan { flows, objective, dual_u: u, dual_v: v })
}

/// Solves the problem restricted to the points carrying mass and extends the
/// potentials to the others by c-transforms, which keeps them feasible.
#[allow(clippy::type_complexity)]
fn solve_on_support<S: Scalar>(
    source: &Distribution<S>,
    target: &Distribution<S>,
    costs: &CostMatrix<S>,
    rows: &[usize],
    cols: &[usize],
) -> Result<(Vec<S>, Vec<S>, Vec<S>)> {
    let sub_source = Distribution::new(rows.iter().map(|&i| source.get(i)).collect())?;
    let sub_target = Distribution::new(cols.iter().map(|&j| target.get(j)).collect())?;
    let sub_costs = CostMatrix::from_fn(rows.len(), cols.len(), |i, j| costs.get(rows[i], cols[j]).clone())?;
    let mut tab = Tableau::northwest(&sub_source, &sub_target, &sub_costs);
    tab.optimize()?;
    tab.refresh_flows();
    let (sub_u, sub_v) = tab.potentials();
    let width = target.len();
    let mut flow = vec![S::zero(); source.len() * width];
    for (si, &i) in rows.iter().enumerate() {
        for (sj, &j) in cols.iter().enumerate() {
            flow[i * width + j] = tab.flow[si * cols.len() + sj].clone();
        }
    }
    let mut u: Vec<Option<S>> = vec![None; width];
    let mut v: Vec<Option<S>> = vec![None; source.len()];
    for (sj, &j) in cols.iter().enumerate() {
        u[j] = Some(sub_u[sj].clone());
    }
    for (si, &i) in rows.iter().enumerate() {
        v[i] = Some(sub_v[si].clone());
    }
    let u: Vec<S> = (0..width)
        .map(|j| {
            u[j].clone().unwrap_or_else(|| {
                rows.iter()
                    .map(|&i| v[i].clone().expect("support potential") + costs.get(i, j).clone())
                    .reduce(|x, y| S::min_of(&x, &y))
                    .expect("nonempty support")
            })
        })
        .collect();
    let v: Vec<S> = (0..source.len())
        .map(|i| {
            v[i].clone().unwrap_or_else(|| {
                (0..width)
                    .map(|j| u[j].clone() - costs.get(i, j).clone())
                    .reduce(|x, y| S::max_of(&x, &y))
                    .expect("nonempty target")
            })
        })
        .collect();
    Ok((flow, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn dist(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec()).unwrap()
    }

    /// Minimum cost over all vertices of a 2 x 3 transportation polytope.
    ///
    /// With `z00` and `z01` free, every cell is affine in them; a vertex makes
    /// two cells vanish, so solve each 2 x 2 system and keep feasible points.
    fn brute_force_2x3(a: [f64; 2], b: [f64; 3], c: [[f64; 3]; 2]) -> f64 {
        // cell = k0 + k1 * z00 + k2 * z01
        let cells: [(usize, usize, [f64; 3]); 6] = [
            (0, 0, [0.0, 1.0, 0.0]),
            (0, 1, [0.0, 0.0, 1.0]),
            (0, 2, [a[0], -1.0, -1.0]),
            (1, 0, [b[0], -1.0, 0.0]),
            (1, 1, [b[1], 0.0, -1.0]),
            (1, 2, [b[2] - a[0], 1.0, 1.0]),
        ];
        let mut best = f64::INFINITY;
        for p in 0..6 {
            for q in p + 1..6 {
                let (x, y) = (cells[p].2, cells[q].2);
                let det = x[1] * y[2] - x[2] * y[1];
                if det.abs() < 1e-14 {
                    continue;
                }
                let z00 = (-x[0] * y[2] + x[2] * y[0]) / det;
                let z01 = (-x[1] * y[0] + x[0] * y[1]) / det;
                let values: Vec<f64> = cells.iter().map(|(_, _, k)| k[0] + k[1] * z00 + k[2] * z01).collect();
                if values.iter().all(|&v| v >= -1e-12) {
                    let cost: f64 = cells.iter().zip(&values).map(|((i, j, _), v)| c[*i][*j] * v).sum();
                    best = best.min(cost);
                }
            }
        }
        best
    }

    #[test]
    fn single_source_transport_is_forced() {
        let source = dist(&[1.0]);
        let target = dist(&[0.5, 0.5]);
        let costs = CostMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        let plan = solve_transport(&source, &target, &costs).unwrap();
        assert!((plan.objective - 0.5).abs() < 1e-15);
        assert_eq!(plan.flow(0, 0), 0.5);
        assert_eq!(plan.flow(0, 1), 0.5);
        assert!(plan.check(&source, &target, &costs).is_optimal());
    }

    #[test]
    fn identical_margins_stay_on_diagonal() {
        let w = dist(&[0.2, 0.3, 0.5]);
        let costs = CostMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 }).unwrap();
        let plan = solve_transport(&w, &w, &costs).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.flows.len(), 3, "{:?}", plan.flows);
        assert!(plan.flows.iter().all(|(i, j, _)| i == j));
    }

    #[test]
    fn second_stage_transport_matches_vertex_enumeration() {
        // Row pi^1 = (1/2, 1/2) to pi^2 = (5/14, 1/14, 8/14) with costs
        // d(i-1, j-1) from the table of the first stage: d(0,1) = 1/2.
        let a = [0.5, 0.5];
        let b = [5.0 / 14.0, 1.0 / 14.0, 8.0 / 14.0];
        let c = [[0.0, 1.0, 1.0], [1.0, 0.0, 0.5]];
        let costs = CostMatrix::from_fn(2, 3, |i, j| c[i][j]).unwrap();
        let plan = solve_transport(&dist(&a), &dist(&b), &costs).unwrap();
        let oracle = brute_force_2x3(a, b, c);
        assert!((plan.objective - oracle).abs() < 1e-9, "{} vs {}", plan.objective, oracle);
        // 5/14 stays, 1/14 stays, 1/7 from 0 to 2 at cost 1 and 3/7 from 1 to 2 at cost 1/2.
        assert!((plan.objective - 5.0 / 14.0).abs() < 1e-12);
        let check = plan.check(&dist(&a), &dist(&b), &costs);
        assert!(check.is_optimal() && check.is_simple(), "{check:?}");
    }

    #[test]
    fn exact_backend_matches() {
        let r = |p, q| Rational::ratio(p, q);
        let source = Distribution::new(vec![r(1, 2), r(1, 2)]).unwrap();
        let target = Distribution::new(vec![r(5, 14), r(1, 14), r(8, 14)]).unwrap();
        let costs = CostMatrix::new(2, 3, vec![r(0, 1), r(1, 1), r(1, 1), r(1, 1), r(0, 1), r(1, 2)]).unwrap();
        let plan = solve_transport(&source, &target, &costs).unwrap();
        assert_eq!(plan.objective, r(5, 14));
        assert_eq!(plan.dual_objective(&source, &target), r(5, 14));
    }

    #[test]
    fn degenerate_margins_with_zero_weights() {
        let source = dist(&[0.5, 0.0, 0.5]);
        let target = dist(&[0.0, 0.5, 0.0, 0.5]);
        let costs = CostMatrix::from_fn(3, 4, |i, j| (i as f64 - j as f64).abs() / 4.0).unwrap();
        let plan = solve_transport(&source, &target, &costs).unwrap();
        assert!(plan.check(&source, &target, &costs).is_optimal());
        assert!((plan.objective - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let costs = CostMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        let err = solve_transport(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5]), &costs).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }
}
