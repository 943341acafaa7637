//! Transportation simplex on a balanced `m × n` problem.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + n − 1` cells. Degeneracy is removed by the classical perturbation
//! `a_i + ε` (every row) and `b_n + mε` (last column), tracked symbolically:
//! each flow is a pair `(value, k)` standing for `value + kε`. Under this
//! perturbation every basic flow is strictly positive, so the ratio test has
//! a unique winner and every pivot strictly decreases the objective. The
//! entering cell is the first improving cell in row-major order (Bland).

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug)]
struct Flow<T> {
    value: T,
    eps: i64,
}

impl<T: Scalar> Flow<T> {
    fn cmp(&self, other: &Self, tol: T) -> Ordering {
        if (self.value - other.value).abs() <= tol {
            self.eps.cmp(&other.eps)
        } else if self.value < other.value {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    fn sub(self, other: Self) -> Self {
        Flow { value: self.value - other.value, eps: self.eps - other.eps }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Solution<T> {
    /// Dense row-major flows.
    pub flows: Vec<T>,
    pub row_duals: Vec<T>,
    pub col_duals: Vec<T>,
    pub iterations: usize,
    /// Most negative reduced cost at termination (≥ −tolerance).
    pub min_reduced_cost: T,
}

pub(crate) fn solve<T: Scalar>(supply: &[T], demand: &[T], cost: &[T]) -> Result<Solution<T>> {
    let m = supply.len();
    let n = demand.len();
    assert_eq!(cost.len(), m * n);
    let mut tableau = Tableau::new(supply, demand, cost);
    let scale = cost.iter().fold(T::one(), |s, c| s.max(c.abs()));
    let opt_tol = T::lit(T::OPT_TOL) * scale;
    let limit = 100 * (m + n) * (m + n) + 1000;
    let mut iterations = 0;
    loop {
        tableau.compute_duals();
        let entering = tableau.entering(opt_tol);
        let Some((i, j)) = entering else { break };
        if iterations >= limit {
            return Err(Error::Solver(format!("transportation simplex exceeded {limit} pivots")));
        }
        tableau.pivot(i, j)?;
        iterations += 1;
    }
    let min_reduced_cost = tableau.min_reduced_cost();
    Ok(Solution {
        flows: tableau.dense_flows(),
        row_duals: tableau.u.clone(),
        col_duals: tableau.v.clone(),
        iterations,
        min_reduced_cost,
    })
}

struct Tableau<'a, T> {
    m: usize,
    n: usize,
    cost: &'a [T],
    supply: Vec<Flow<T>>,
    demand: Vec<Flow<T>>,
    /// Basic cells `(row, col)`; always `m + n − 1` of them.
    basis: Vec<(usize, usize)>,
    is_basic: Vec<bool>,
    flows: Vec<Flow<T>>,
    u: Vec<T>,
    v: Vec<T>,
    tol: T,
}

impl<'a, T: Scalar> Tableau<'a, T> {
    fn new(supply: &[T], demand: &[T], cost: &'a [T]) -> Self {
        let m = supply.len();
        let n = demand.len();
        let supply: Vec<Flow<T>> = supply.iter().map(|&a| Flow { value: a, eps: 1 }).collect();
        let demand: Vec<Flow<T>> = demand
            .iter()
            .enumerate()
            .map(|(j, &b)| Flow { value: b, eps: if j + 1 == n { m as i64 } else { 0 } })
            .collect();
        let tol = T::lit(T::ZERO_TOL);

        // Northwest corner on the perturbed problem.
        let mut basis = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let mut rs = supply[0];
        let mut rd = demand[0];
        loop {
            basis.push((i, j));
            if i + 1 == m && j + 1 == n {
                break;
            }
            let advance_row = j + 1 == n || (i + 1 < m && rs.cmp(&rd, tol) == Ordering::Less);
            if advance_row {
                rd = rd.sub(rs);
                i += 1;
                rs = supply[i];
            } else {
                rs = rs.sub(rd);
                j += 1;
                rd = demand[j];
            }
        }
        debug_assert_eq!(basis.len(), m + n - 1);
        let mut is_basic = vec![false; m * n];
        for &(i, j) in &basis {
            is_basic[i * n + j] = true;
        }
        let mut t = Tableau {
            m,
            n,
            cost,
            supply,
            demand,
            basis,
            is_basic,
            flows: Vec::new(),
            u: vec![T::zero(); m],
            v: vec![T::zero(); n],
            tol,
        };
        t.compute_flows();
        t
    }

    /// Tree adjacency: nodes `0..m` are rows, `m..m+n` columns; entries are basis slots.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push(k);
            adj[self.m + j].push(k);
        }
        adj
    }

    fn other_end(&self, slot: usize, node: usize) -> usize {
        let (i, j) = self.basis[slot];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    /// Flows are determined by the tree: peel leaves until no edge remains.
    fn compute_flows(&mut self) {
        let adj = self.adjacency();
        let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut remaining: Vec<Flow<T>> = self.supply.iter().chain(&self.demand).copied().collect();
        let mut removed = vec![false; self.basis.len()];
        let mut flows = vec![Flow { value: T::zero(), eps: 0 }; self.basis.len()];
        let mut queue: VecDeque<usize> = (0..adj.len()).filter(|&v| degree[v] == 1).collect();
        while let Some(node) = queue.pop_front() {
            if degree[node] != 1 {
                continue;
            }
            let slot = *adj[node].iter().find(|&&s| !removed[s]).expect("leaf has an edge");
            let f = remaining[node];
            flows[slot] = f;
            removed[slot] = true;
            degree[node] = 0;
            let other = self.other_end(slot, node);
            remaining[other] = remaining[other].sub(f);
            degree[other] -= 1;
            if degree[other] == 1 {
                queue.push_back(other);
            }
        }
        self.flows = flows;
    }

    fn compute_duals(&mut self) {
        let adj = self.adjacency();
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        self.u[0] = T::zero();
        while let Some(node) = queue.pop_front() {
            for &slot in &adj[node] {
                let other = self.other_end(slot, node);
                if seen[other] {
                    continue;
                }
                let (i, j) = self.basis[slot];
                let c = self.cost[i * self.n + j];
                if other >= self.m {
                    self.v[j] = c - self.u[i];
                } else {
                    self.u[i] = c - self.v[j];
                }
                seen[other] = true;
                queue.push_back(other);
            }
        }
    }

    #[inline]
    fn reduced_cost(&self, i: usize, j: usize) -> T {
        self.cost[i * self.n + j] - self.u[i] - self.v[j]
    }

    fn entering(&self, tol: T) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in 0..self.n {
                if !self.is_basic[i * self.n + j] && self.reduced_cost(i, j) < -tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn min_reduced_cost(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.m {
            for j in 0..self.n {
                best = best.min(self.reduced_cost(i, j));
            }
        }
        best
    }

    /// Tree path from row node `i` to column node `m + j`, as basis slots.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let target = self.m + j;
        let mut parent: Vec<Option<usize>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([i]);
        seen[i] = true;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &slot in &adj[node] {
                let other = self.other_end(slot, node);
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some(slot);
                    queue.push_back(other);
                }
            }
        }
        // Walk back from the column to the row.
        let mut path = Vec::new();
        let mut node = target;
        while node != i {
            let slot = parent[node].expect("basis is a spanning tree");
            path.push(slot);
            node = self.other_end(slot, node);
        }
        path
    }

    fn pivot(&mut self, i: usize, j: usize) -> Result<()> {
        let path = self.path(i, j);
        // Along the cycle (i,j) → col j → … → row i, slots alternate −, +, −, …
        let mut leaving: Option<usize> = None;
        for &slot in path.iter().step_by(2) {
            leaving = Some(match leaving {
                None => slot,
                Some(best) => {
                    let (a, b) = (self.flows[slot], self.flows[best]);
                    match a.cmp(&b, self.tol) {
                        Ordering::Less => slot,
                        Ordering::Equal if self.cell_index(slot) < self.cell_index(best) => slot,
                        _ => best,
                    }
                }
            });
        }
        let leaving = leaving.ok_or_else(|| Error::Solver("empty pivot cycle".into()))?;
        let (li, lj) = self.basis[leaving];
        self.is_basic[li * self.n + lj] = false;
        self.is_basic[i * self.n + j] = true;
        self.basis[leaving] = (i, j);
        self.compute_flows();
        Ok(())
    }

    fn cell_index(&self, slot: usize) -> usize {
        let (i, j) = self.basis[slot];
        i * self.n + j
    }

    fn dense_flows(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.m * self.n];
        for (slot, &(i, j)) in self.basis.iter().enumerate() {
            let x = self.flows[slot].value;
            out[i * self.n + j] = if x.abs() <= self.tol { T::zero() } else { x.max(T::zero()) };
        }
        out
    }
}
