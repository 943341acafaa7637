//! Dense two-phase primal simplex with Bland's rule.
//!
//! Standard form: minimize `c·x` subject to `A x = b`, `x ≥ 0`. Phase one
//! starts from an all-artificial basis; phase two never lets artificials
//! re-enter. The artificial block of the final tableau holds `B^{-1}`, from
//! which the duals `y = c_B B^{-1}` are read off.

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// Dense equality-form linear program over nonnegative variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    /// Row-major `rows × vars` constraint matrix.
    pub matrix: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>, matrix: Vec<T>, rhs: Vec<T>) -> Result<Self> {
        let n = objective.len();
        if n == 0 || matrix.len() != n * rhs.len() {
            return Err(Error::input(
                "lp",
                format!("matrix has {} entries for {} rows x {} vars", matrix.len(), rhs.len(), n),
            ));
        }
        Ok(LinearProgram { objective, matrix, rhs })
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn coeff(&self, row: usize, var: usize) -> T {
        self.matrix[row * self.vars() + var]
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub value: T,
    pub duals: Vec<T>,
    /// Basic variable per row (`None` for a redundant row kept on its artificial).
    pub basis: Vec<Option<usize>>,
    pub iterations: usize,
    pub min_reduced_cost: T,
    pub duality_gap: T,
    /// `max |A x − b|`.
    pub residual: T,
    pub redundant_rows: usize,
}

struct Tableau<T> {
    rows: usize,
    vars: usize,
    /// `rows × (vars + rows + 1)`: structural, artificial, rhs.
    cells: Vec<T>,
    /// Reduced-cost row (same width), last entry is `−objective`.
    z: Vec<T>,
    basis: Vec<usize>,
    smallest_pivot: T,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.vars + self.rows + 1
    }

    fn at(&self, r: usize, c: usize) -> T {
        self.cells[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> T {
        self.at(r, self.width() - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let piv = self.cells[pr * w + pc];
        self.smallest_pivot = self.smallest_pivot.min(piv.abs());
        for c in 0..w {
            self.cells[pr * w + c] /= piv;
        }
        self.cells[pr * w + pc] = T::one();
        let pivot_row: Vec<T> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.cells[r * w + pc];
            if f != T::zero() {
                for c in 0..w {
                    self.cells[r * w + c] -= f * pivot_row[c];
                }
                self.cells[r * w + pc] = T::zero();
            }
        }
        let f = self.z[pc];
        if f != T::zero() {
            for c in 0..w {
                self.z[c] -= f * pivot_row[c];
            }
            self.z[pc] = T::zero();
        }
        self.basis[pr] = pc;
    }

    /// Bland iterations over columns `0..allowed`; returns pivots taken.
    fn run(&mut self, allowed: usize, limit: usize) -> Result<usize> {
        let opt_tol = T::lit(T::OPT_TOL);
        let piv_tol = T::lit(T::PIVOT_TOL);
        let mut iterations = 0;
        loop {
            let Some(enter) = (0..allowed).find(|&c| self.z[c] < -opt_tol) else {
                return Ok(iterations);
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > piv_tol {
                    let ratio = self.rhs(r).max(T::zero()) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= T::lit(T::ZERO_TOL) * (T::one() + bratio);
                            if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Err(Error::Solver(format!("unbounded direction on column {enter}")));
            };
            if iterations >= limit {
                return Err(Error::Solver(format!("simplex exceeded {limit} pivots")));
            }
            self.pivot(pr, enter);
            iterations += 1;
        }
    }
}

/// Phase one only: whether `{A x = b, x ≥ 0}` is nonempty.
pub fn is_feasible<T: Scalar>(lp: &LinearProgram<T>) -> Result<bool> {
    let (tab, _, _) = phase_one(lp)?;
    Ok(-tab.z[tab.width() - 1] <= feasibility_tol::<T>(lp))
}

fn feasibility_tol<T: Scalar>(lp: &LinearProgram<T>) -> T {
    T::lit(T::OPT_TOL) * (T::one() + lp.rhs.iter().fold(T::zero(), |m, b| m + b.abs()))
}

fn phase_one<T: Scalar>(lp: &LinearProgram<T>) -> Result<(Tableau<T>, Vec<T>, usize)> {
    let (m, n) = (lp.rows(), lp.vars());
    let w = n + m + 1;
    let mut cells = vec![T::zero(); m * w];
    let mut sign = vec![T::one(); m];
    for r in 0..m {
        if lp.rhs[r] < T::zero() {
            sign[r] = -T::one();
        }
        for c in 0..n {
            cells[r * w + c] = sign[r] * lp.coeff(r, c);
        }
        cells[r * w + n + r] = T::one();
        cells[r * w + w - 1] = sign[r] * lp.rhs[r];
    }
    let mut z = vec![T::zero(); w];
    for r in 0..m {
        for c in 0..n {
            z[c] -= cells[r * w + c];
        }
        z[w - 1] -= cells[r * w + w - 1];
    }
    let mut tab = Tableau { rows: m, vars: n, cells, z, basis: (n..n + m).collect(), smallest_pivot: T::infinity() };
    let limit = 50 * (n + m) * (m + 1) + 1000;
    let it = tab.run(n + m, limit)?;
    Ok((tab, sign, it))
}

/// Solves `lp` to optimality, returning the primal vertex and dual certificate.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    let (m, n) = (lp.rows(), lp.vars());
    let (mut tab, sign, mut iterations) = phase_one(lp)?;
    let infeasibility = -tab.z[tab.width() - 1];
    if infeasibility > feasibility_tol::<T>(lp) {
        return Err(Error::Solver(format!("infeasible program (phase-one value {infeasibility})")));
    }

    // Drive zero-level artificials out of the basis where possible.
    let piv_tol = T::lit(T::PIVOT_TOL);
    let mut redundant = vec![false; m];
    for r in 0..m {
        if tab.basis[r] >= n {
            match (0..n).find(|&c| tab.at(r, c).abs() > piv_tol) {
                Some(c) => {
                    tab.pivot(r, c);
                    iterations += 1;
                }
                None => redundant[r] = true,
            }
        }
    }

    // Phase two reduced costs: z_j = c_j − c_B B^{-1} A_j.
    let w = tab.width();
    let mut z = vec![T::zero(); w];
    z[..n].copy_from_slice(&lp.objective);
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < n { lp.objective[b] } else { T::zero() };
        if cb != T::zero() {
            for c in 0..w {
                z[c] -= cb * tab.at(r, c);
            }
        }
    }
    tab.z = z;
    let limit = 50 * (n + m) * (m + 1) + 1000;
    iterations += tab.run(n, limit)?;

    let mut x = vec![T::zero(); n];
    for r in 0..m {
        let b = tab.basis[r];
        if b < n {
            let v = tab.rhs(r);
            x[b] = if v.abs() <= T::lit(T::ZERO_TOL) { T::zero() } else { v.max(T::zero()) };
        }
    }

    // y_k = Σ_r c_B(r) (B^{-1})_{r,k}, undoing the row sign flips.
    let duals: Vec<T> = (0..m)
        .map(|k| {
            let s = compensated_sum((0..m).map(|r| {
                let b = tab.basis[r];
                let cb = if b < n { lp.objective[b] } else { T::zero() };
                cb * tab.at(r, n + k)
            }));
            s * sign[k]
        })
        .collect();

    let value = compensated_sum(x.iter().zip(&lp.objective).map(|(a, c)| *a * *c));
    let dual_value = compensated_sum(duals.iter().zip(&lp.rhs).map(|(y, b)| *y * *b));
    let mut min_reduced_cost = T::zero();
    for c in 0..n {
        let r = lp.objective[c] - compensated_sum((0..m).map(|k| duals[k] * lp.coeff(k, c)));
        min_reduced_cost = min_reduced_cost.min(r);
    }
    let mut residual = T::zero();
    for r in 0..m {
        let ax = compensated_sum((0..n).map(|c| lp.coeff(r, c) * x[c]));
        residual = residual.max((ax - lp.rhs[r]).abs());
    }
    if residual.as_f64() > 1e3 * T::OPT_TOL {
        return Err(Error::Solver(format!(
            "primal residual {residual} after solve (smallest pivot {})",
            tab.smallest_pivot
        )));
    }
    let basis = tab.basis.iter().map(|&b| (b < n).then_some(b)).collect();
    Ok(LpSolution {
        x,
        value,
        duals,
        basis,
        iterations,
        min_reduced_cost,
        duality_gap: (value - dual_value).abs(),
        residual,
        redundant_rows: redundant.iter().filter(|&&r| r).count(),
    })
}
