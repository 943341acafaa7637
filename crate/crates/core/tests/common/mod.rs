//! Brute-force reference solvers shared by the integration tests. They use
//! their own cost arithmetic and never call the crate's solvers.

#![allow(dead_code)]

use itertools::Itertools;

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of `c·x` over basic feasible solutions of `A x = b, x ≥ 0`, where `A`
/// has full row rank. Restricted to `allowed` columns when given.
pub fn min_over_bases(a: &[Vec<f64>], b: &[f64], c: &[f64], allowed: Option<&[usize]>) -> Option<f64> {
    let r = b.len();
    let cols: Vec<usize> = match allowed {
        Some(s) => s.to_vec(),
        None => (0..c.len()).collect(),
    };
    let mut best: Option<f64> = None;
    for basis in cols.iter().copied().combinations(r) {
        let sub: Vec<Vec<f64>> = a.iter().map(|row| basis.iter().map(|&j| row[j]).collect()).collect();
        let Some(x) = solve_square(sub, b.to_vec()) else { continue };
        if x.iter().any(|&v| v < -1e-11) {
            continue;
        }
        let val: f64 = basis.iter().zip(&x).map(|(&j, &v)| c[j] * v.max(0.0)).sum();
        best = Some(best.map_or(val, |b: f64| b.min(val)));
    }
    best
}

/// Constraint rows of the transportation polytope with one redundant
/// column constraint dropped.
pub fn transport_rows(m: usize, n: usize, supply: &[f64], demand: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        for j in 0..n {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(supply[i]);
    }
    for j in 0..n - 1 {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(demand[j]);
    }
    (a, b)
}

/// `min Σ γ_ij c_ij` over couplings, by vertex enumeration.
pub fn transport_by_enumeration(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (a, b) = transport_rows(supply.len(), demand.len(), supply, demand);
    min_over_bases(&a, &b, cost, None).expect("transport polytope is nonempty")
}

/// Smallest threshold `t` with a coupling supported on cells of cost `≤ t`.
pub fn bottleneck_by_enumeration(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (a, b) = transport_rows(supply.len(), demand.len(), supply, demand);
    let mut levels = cost.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let zero = vec![0.0; cost.len()];
    for t in levels {
        let allowed: Vec<usize> = (0..cost.len()).filter(|&k| cost[k] <= t).collect();
        if allowed.len() >= b.len() && min_over_bases(&a, &b, &zero, Some(&allowed)).is_some() {
            return t;
        }
    }
    unreachable!("the full support is always feasible")
}

/// `Σ_k |x_k − y_k|^p`, the separable cost for one-dimensional blocks.
pub fn separable_cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum()
}

/// `max_k |x_k − y_k|`.
pub fn max_cost(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Simple xorshift for generating test data independently of the crate RNG.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    /// Normalized positive weights.
    pub fn weights(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| 0.2 + self.unit()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    }

    /// Distinct points on the lattice `{0, 1/4, …, 1}` (ties in costs are intended).
    pub fn lattice_points(&mut self, n: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = Vec::new();
        while pts.len() < n {
            let v = self.below(5) as f64 / 4.0;
            if !pts.contains(&v) {
                pts.push(v);
            }
        }
        pts
    }

    /// Distinct uniform points.
    pub fn points(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.unit()).collect()
    }
}
