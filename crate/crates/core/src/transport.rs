//! Exact solver for the balanced transportation problem.
//!
//! Primal transportation simplex: a north-west-corner spanning tree as the
//! starting basis, dual potentials from the tree, and Bland's rule for both
//! the entering and the leaving cell so degenerate pivots cannot cycle.

use crate::error::{Error, Result};

pub const MASS_TOLERANCE: f64 = 1e-12;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub supplies: Vec<f64>,
    pub demands: Vec<f64>,
    /// Row-major `supplies.len() × demands.len()` flows.
    pub plan: Vec<f64>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.demands.len() + j]
    }
}

/// Minimum-cost plan moving `supplies` onto `demands`; `cost` is row-major.
pub fn solve_transport(supplies: &[f64], demands: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (supplies.len(), demands.len());
    if m == 0 || n == 0 {
        return Err(Error::Invalid("transport problem needs non-empty mass vectors".into()));
    }
    if cost.len() != m * n {
        return Err(Error::Invalid(format!(
            "cost matrix has {} entries, expected {m}×{n}",
            cost.len()
        )));
    }
    for (side, masses) in [("supply", supplies), ("demand", demands)] {
        if masses.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid(format!("{side} masses must be finite and nonnegative")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Invalid(format!("unbalanced masses: {side} total {total} is not 1")));
        }
    }
    if let Some(c) = cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::Invalid(format!("transport cost {c} is not a nonnegative finite number")));
    }

    // Zero-mass rows and columns carry no flow; solve on the rest.
    let rows: Vec<usize> = (0..m).filter(|&i| supplies[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| demands[j] > 0.0).collect();
    let sub_cost: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * n + j]))
        .collect();
    let s: Vec<f64> = rows.iter().map(|&i| supplies[i]).collect();
    let d: Vec<f64> = cols.iter().map(|&j| demands[j]).collect();
    let flows = Simplex::new(&s, &d, &sub_cost).solve()?;

    let mut plan = vec![0.0; m * n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            plan[i * n + j] = flows[a * cols.len() + b];
        }
    }
    let total = plan.iter().zip(cost).map(|(x, c)| x * c).sum();
    Ok(TransportPlan {
        supplies: supplies.to_vec(),
        demands: demands.to_vec(),
        plan,
        cost: total,
    })
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    basic: Vec<bool>,
    eps: f64,
}

impl<'a> Simplex<'a> {
    fn new(supplies: &[f64], demands: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supplies.len(), demands.len());
        let mut flow = vec![0.0; m * n];
        let mut basic = vec![false; m * n];
        let (mut s, mut d) = (supplies.to_vec(), demands.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]);
            flow[i * n + j] = x;
            basic[i * n + j] = true;
            s[i] -= x;
            d[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        let scale = cost.iter().copied().fold(1.0, f64::max);
        Self {
            m,
            n,
            cost,
            flow,
            basic,
            eps: 1e-12 * scale,
        }
    }

    /// Row and column potentials with `u[0] = 0` such that `u_i + v_j = c_ij` on the tree.
    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut stack = vec![(true, 0usize)];
        while let Some((is_row, k)) = stack.pop() {
            if is_row {
                for j in 0..n {
                    if self.basic[k * n + j] && v[j].is_nan() {
                        v[j] = self.cost[k * n + j] - u[k];
                        stack.push((false, j));
                    }
                }
            } else {
                for i in 0..m {
                    if self.basic[i * n + k] && u[i].is_nan() {
                        u[i] = self.cost[i * n + k] - v[k];
                        stack.push((true, i));
                    }
                }
            }
        }
        (u, v)
    }

    /// Tree path of cells from row `p` to column `q`.
    fn path(&self, p: usize, q: usize) -> Vec<usize> {
        let (m, n) = (self.m, self.n);
        // nodes: rows 0..m, columns m..m+n; BFS from row p recording the arriving cell
        let mut via = vec![usize::MAX; m + n];
        let mut prev = vec![usize::MAX; m + n];
        let mut seen = vec![false; m + n];
        let mut queue = std::collections::VecDeque::from([p]);
        seen[p] = true;
        while let Some(node) = queue.pop_front() {
            if node == m + q {
                break;
            }
            let neighbours: Vec<(usize, usize)> = if node < m {
                (0..n).filter(|&j| self.basic[node * n + j]).map(|j| (m + j, node * n + j)).collect()
            } else {
                let j = node - m;
                (0..m).filter(|&i| self.basic[i * n + j]).map(|i| (i, i * n + j)).collect()
            };
            for (next, cell) in neighbours {
                if !seen[next] {
                    seen[next] = true;
                    via[next] = cell;
                    prev[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = m + q;
        while node != p {
            cells.push(via[node]);
            node = prev[node];
        }
        cells.reverse();
        cells
    }

    fn solve(mut self) -> Result<Vec<f64>> {
        for _ in 0..MAX_PIVOTS {
            let (u, v) = self.potentials();
            let entering = (0..self.m * self.n).find(|&c| {
                !self.basic[c] && self.cost[c] - u[c / self.n] - v[c % self.n] < -self.eps
            });
            let Some(enter) = entering else {
                return Ok(self.flow);
            };
            // Cycle: entering cell gains, then the tree path alternates lose/gain.
            let path = self.path(enter / self.n, enter % self.n);
            let losing: Vec<usize> = path.iter().step_by(2).copied().collect();
            let theta = losing.iter().map(|&c| self.flow[c]).fold(f64::INFINITY, f64::min);
            let leave = *losing
                .iter()
                .filter(|&&c| self.flow[c] == theta)
                .min()
                .expect("cycle has a losing cell");
            for (k, &c) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.flow[c] = (self.flow[c] - theta).max(0.0);
                } else {
                    self.flow[c] += theta;
                }
            }
            self.flow[enter] = theta;
            self.basic[enter] = true;
            self.basic[leave] = false;
            self.flow[leave] = 0.0;
        }
        Err(Error::Numerical(format!(
            "transport simplex did not converge within {MAX_PIVOTS} pivots"
        )))
    }
}
