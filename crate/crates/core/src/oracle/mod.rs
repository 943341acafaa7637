//! Brute-force multimarginal LP for the Wasserstein projection.
//!
//! One variable `γ(x, y)` per pair of a point `x` of the product of the `μ_i`
//! supports and an atom `y` of `ρ`. The constraints force the `x`-marginal
//! into `Π(μ)` and the `y`-marginal to equal `ρ`; the objective is the
//! separable cost `d(x, y)^p`. This is independent of the shadow
//! construction and serves as its optimality oracle.

mod lp;

pub use lp::{is_feasible, solve_lp, LinearProgram, LpSolution};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Exponent, MarginalVector, MetricSpec, ProductMeasure};
use crate::ot::coupling_cost;
use crate::scalar::{compensated_sum, Scalar};

/// Default cap on LP variables.
pub const DEFAULT_VARIABLE_CAP: usize = 20_000;

/// Product-support indexing shared by the LP builder and the certificate.
#[derive(Clone, Debug)]
pub struct ProjectionLayout {
    sizes: Vec<usize>,
    rho_atoms: usize,
}

impl ProjectionLayout {
    fn new<T: Scalar>(rho: &ProductMeasure<T>, mu: &MarginalVector<T>) -> Self {
        ProjectionLayout { sizes: mu.components().iter().map(DiscreteMeasure::len).collect(), rho_atoms: rho.len() }
    }

    /// Number of points of `supp μ_1 × … × supp μ_K`.
    pub fn product_points(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn vars(&self) -> usize {
        self.product_points() * self.rho_atoms
    }

    /// Atom indices of product point `x` (first block varies slowest).
    pub fn tuple(&self, mut x: usize) -> Vec<usize> {
        let mut t = vec![0; self.sizes.len()];
        for i in (0..self.sizes.len()).rev() {
            t[i] = x % self.sizes[i];
            x /= self.sizes[i];
        }
        t
    }

    /// `(product point, ρ atom)` of variable `v`.
    pub fn split(&self, v: usize) -> (usize, usize) {
        (v / self.rho_atoms, v % self.rho_atoms)
    }
}

fn check_sizes<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    cap: usize,
) -> Result<ProjectionLayout> {
    mu.check(spec)?;
    if rho.spec().block_dims() != spec.block_dims() {
        return Err(Error::input("rho", "block structure does not match the metric"));
    }
    let layout = ProjectionLayout::new(rho, mu);
    let vars = layout
        .sizes
        .iter()
        .try_fold(layout.rho_atoms, |acc, &s| acc.checked_mul(s))
        .unwrap_or(usize::MAX);
    if vars > cap {
        return Err(Error::SizeCap { what: "projection LP variables", size: vars, cap });
    }
    Ok(layout)
}

fn product_point<T: Scalar>(mu: &MarginalVector<T>, tuple: &[usize]) -> Vec<T> {
    tuple.iter().enumerate().flat_map(|(i, &a)| mu.get(i).atom(a).iter().copied()).collect()
}

/// Equality rows of the projection LP restricted to the variables in `keep`.
///
/// Rows: every atom of `μ_1`; every atom but the last of `μ_i` for `i ≥ 2`;
/// every atom but the last of `ρ`. Each dropped row is implied by the others
/// (every group sums to the total mass), so the system has full row rank.
fn constraint_rows<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    layout: &ProjectionLayout,
    keep: &[usize],
) -> (Vec<T>, Vec<T>) {
    let k = layout.sizes.len();
    let mut groups: Vec<(usize, usize)> = Vec::new(); // (block or K for rho, atom)
    let mut rhs = Vec::new();
    for i in 0..k {
        let take = if i == 0 { layout.sizes[0] } else { layout.sizes[i] - 1 };
        for a in 0..take {
            groups.push((i, a));
            rhs.push(mu.get(i).weight(a));
        }
    }
    for r in 0..layout.rho_atoms - 1 {
        groups.push((k, r));
        rhs.push(rho.base().weight(r));
    }
    let n = keep.len();
    let mut matrix = vec![T::zero(); groups.len() * n];
    for (col, &v) in keep.iter().enumerate() {
        let (x, y) = layout.split(v);
        let t = layout.tuple(x);
        for (row, &(g, a)) in groups.iter().enumerate() {
            let hit = if g == k { y == a } else { t[g] == a };
            if hit {
                matrix[row * n + col] = T::one();
            }
        }
    }
    (matrix, rhs)
}

/// Costs `d(x, y)^p` (or `d(x, y)` for `p = ∞`) for every variable.
fn variable_costs<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    layout: &ProjectionLayout,
) -> Vec<T> {
    let mut costs = Vec::with_capacity(layout.vars());
    for x in 0..layout.product_points() {
        let point = product_point(mu, &layout.tuple(x));
        for y in rho.base().atoms() {
            costs.push(spec.cost(&point, y));
        }
    }
    costs
}

/// Dense LP for finite `p`.
pub fn build_projection_lp<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    variable_cap: usize,
) -> Result<LinearProgram<T>> {
    if spec.p.is_infinite() {
        return Err(Error::input("p", "the projection LP objective needs a finite exponent"));
    }
    let layout = check_sizes(rho, mu, spec, variable_cap)?;
    let all: Vec<usize> = (0..layout.vars()).collect();
    let (matrix, rhs) = constraint_rows(rho, mu, &layout, &all);
    LinearProgram::new(variable_costs(rho, mu, spec, &layout), matrix, rhs)
}

/// Optimal multimarginal coupling with its certificate.
#[derive(Clone, Debug)]
pub struct ProjectionCertificate<T> {
    /// Optimal value in cost units: `Σ d^p γ` for finite `p`, the bottleneck for `p = ∞`.
    pub value: T,
    pub p: Exponent<T>,
    /// `(μ-atom tuple, ρ atom, mass)` for every positive variable.
    pub gamma: Vec<(Vec<usize>, usize, T)>,
    /// `x`-marginal of `γ`: *a* minimizer of the projection problem.
    pub projection: ProductMeasure<T>,
    pub duals: Vec<T>,
    pub duality_gap: T,
    /// Largest violation of the (full, unreduced) marginal constraints.
    pub max_violation: T,
    pub iterations: usize,
}

impl<T: Scalar> ProjectionCertificate<T> {
    /// Value converted to a distance (`1/p` root for finite `p`).
    pub fn distance(&self) -> T {
        self.p.root(self.value.max(T::zero()))
    }
}

/// Solves the projection LP (any `p`) and packages the optimal coupling.
pub fn project_oracle<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
) -> Result<ProjectionCertificate<T>> {
    project_oracle_with(rho, mu, spec, DEFAULT_VARIABLE_CAP)
}

pub fn project_oracle_with<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    variable_cap: usize,
) -> Result<ProjectionCertificate<T>> {
    let layout = check_sizes(rho, mu, spec, variable_cap)?;
    let costs = variable_costs(rho, mu, spec, &layout);
    match spec.p {
        Exponent::Finite(_) => {
            let all: Vec<usize> = (0..layout.vars()).collect();
            let (matrix, rhs) = constraint_rows(rho, mu, &layout, &all);
            let lp = LinearProgram::new(costs, matrix, rhs)?;
            let sol = solve_lp(&lp)?;
            certificate(rho, mu, spec, &layout, &all, &sol, sol.value)
        }
        Exponent::Infinite => {
            // Smallest t whose allowed variables (cost ≤ t) admit a feasible coupling.
            let mut levels = costs.clone();
            levels.sort_by(|a, b| a.partial_cmp(b).expect("finite costs"));
            levels.dedup();
            let restrict = |t: T| -> Vec<usize> { (0..costs.len()).filter(|&v| costs[v] <= t).collect() };
            let feasible_at = |t: T| -> Result<bool> {
                let keep = restrict(t);
                let (matrix, rhs) = constraint_rows(rho, mu, &layout, &keep);
                is_feasible(&LinearProgram::new(vec![T::zero(); keep.len()], matrix, rhs)?)
            };
            let (mut lo, mut hi) = (0usize, levels.len() - 1);
            let mut probes = 0;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                probes += 1;
                if feasible_at(levels[mid])? {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let t = levels[lo];
            let keep = restrict(t);
            let (matrix, rhs) = constraint_rows(rho, mu, &layout, &keep);
            let sub_costs: Vec<T> = keep.iter().map(|&v| costs[v]).collect();
            let mut sol = solve_lp(&LinearProgram::new(sub_costs, matrix, rhs)?)?;
            sol.iterations += probes;
            certificate(rho, mu, spec, &layout, &keep, &sol, t)
        }
    }
}

fn certificate<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    layout: &ProjectionLayout,
    keep: &[usize],
    sol: &LpSolution<T>,
    value: T,
) -> Result<ProjectionCertificate<T>> {
    let k = layout.sizes.len();
    let mut gamma = Vec::new();
    let mut x_mass = vec![T::zero(); layout.product_points()];
    let mut mu_sums: Vec<Vec<T>> = layout.sizes.iter().map(|&s| vec![T::zero(); s]).collect();
    let mut rho_sums = vec![T::zero(); layout.rho_atoms];
    for (col, &v) in keep.iter().enumerate() {
        let mass = sol.x[col];
        if mass <= T::zero() {
            continue;
        }
        let (x, y) = layout.split(v);
        let t = layout.tuple(x);
        x_mass[x] += mass;
        rho_sums[y] += mass;
        for i in 0..k {
            mu_sums[i][t[i]] += mass;
        }
        gamma.push((t, y, mass));
    }
    let mut max_violation = T::zero();
    for i in 0..k {
        for (a, s) in mu_sums[i].iter().enumerate() {
            max_violation = max_violation.max((*s - mu.get(i).weight(a)).abs());
        }
    }
    for (y, s) in rho_sums.iter().enumerate() {
        max_violation = max_violation.max((*s - rho.base().weight(y)).abs());
    }
    let tol = T::lit(1e-8f64.max(T::OPT_TOL));
    if max_violation > tol {
        return Err(Error::Solver(format!("oracle coupling violates marginals by {max_violation}")));
    }

    let dim = spec.total_dim();
    let mut coords = Vec::new();
    let mut masses = Vec::new();
    for (x, &m) in x_mass.iter().enumerate() {
        if m > T::zero() {
            coords.extend(product_point(mu, &layout.tuple(x)));
            masses.push(m);
        }
    }
    let total = compensated_sum(masses.iter().copied());
    let projection = ProductMeasure::new(
        DiscreteMeasure::from_masses(dim, &coords, &masses.iter().map(|&m| m / total).collect::<Vec<_>>())?,
        spec.clone(),
    )?;

    // Cross-check the reported value against the coupling itself.
    if spec.p.is_infinite() {
        let idx: Vec<(usize, usize, T)> = gamma
            .iter()
            .map(|(t, y, m)| (projection.base().find(&product_point(mu, t)).expect("projection atom"), *y, *m))
            .collect();
        let c = coupling_cost(projection.base(), rho.base(), &idx, spec)?;
        if c > value {
            return Err(Error::Solver(format!("bottleneck coupling cost {c} exceeds threshold {value}")));
        }
    }

    Ok(ProjectionCertificate {
        value,
        p: spec.p,
        gamma,
        projection,
        duals: sol.duals.clone(),
        duality_gap: sol.duality_gap,
        max_violation,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(points: &[f64], w: Option<Vec<f64>>) -> DiscreteMeasure<f64> {
        DiscreteMeasure::on_line(points, w).unwrap()
    }

    fn spec2(p: Exponent<f64>) -> MetricSpec<f64> {
        MetricSpec::new(p, vec![1, 1]).unwrap()
    }

    fn worked() -> (ProductMeasure<f64>, MarginalVector<f64>) {
        let s = spec2(Exponent::Finite(2.0));
        let rho = ProductMeasure::new(DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap(), s.clone())
            .unwrap();
        let mu = MarginalVector::new(vec![line(&[0.0, 1.0], None), line(&[0.5], None)], &s).unwrap();
        (rho, mu)
    }

    #[test]
    fn lp_counts_for_two_one_two_supports() {
        let (rho, mu) = worked();
        let lp = build_projection_lp(&rho, &mu, &spec2(Exponent::Finite(2.0)), DEFAULT_VARIABLE_CAP).unwrap();
        assert_eq!(lp.vars(), 4);
        // |μ_1| + |μ_2| + |ρ| − K rows.
        assert_eq!(lp.rows(), 3);
    }

    #[test]
    fn worked_instance_value() {
        let (rho, mu) = worked();
        let s = spec2(Exponent::Finite(2.0));
        let lp = build_projection_lp(&rho, &mu, &s, DEFAULT_VARIABLE_CAP).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(sol.value, 0.25, epsilon = 1e-15);
        let cert = project_oracle(&rho, &mu, &s).unwrap();
        assert_abs_diff_eq!(cert.distance(), 0.5, epsilon = 1e-15);
        assert!(cert.duality_gap <= 1e-8);
    }

    #[test]
    fn matching_marginals_give_zero() {
        let s = spec2(Exponent::Finite(1.5));
        let rho = ProductMeasure::new(
            DiscreteMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], Some(vec![0.3, 0.7])).unwrap(),
            s.clone(),
        )
        .unwrap();
        let mu = rho.marginals().unwrap();
        let cert = project_oracle(&rho, &mu, &s).unwrap();
        assert!(cert.value.abs() < 1e-12);
    }

    #[test]
    fn dirac_marginals_have_forced_value() {
        let s = spec2(Exponent::Finite(2.0));
        let rho = ProductMeasure::new(
            DiscreteMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], Some(vec![0.3, 0.7])).unwrap(),
            s.clone(),
        )
        .unwrap();
        let mu = MarginalVector::new(
            vec![DiscreteMeasure::dirac(vec![0.5]).unwrap(), DiscreteMeasure::dirac(vec![2.0]).unwrap()],
            &s,
        )
        .unwrap();
        let cert = project_oracle(&rho, &mu, &s).unwrap();
        let expected = 0.3 * (0.25 + 1.0) + 0.7 * (0.25 + 4.0);
        assert_abs_diff_eq!(cert.value, expected, epsilon = 1e-13);
    }

    #[test]
    fn variable_cap() {
        let (rho, mu) = worked();
        let err = build_projection_lp(&rho, &mu, &spec2(Exponent::Finite(2.0)), 3).unwrap_err();
        assert!(matches!(err, Error::SizeCap { size: 4, cap: 3, .. }));
    }

    #[test]
    fn bottleneck_oracle() {
        let s = spec2(Exponent::Infinite);
        let rho = ProductMeasure::new(DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap(), s.clone())
            .unwrap();
        let mu = MarginalVector::new(vec![line(&[0.1, 0.9], None), line(&[0.5], None)], &s).unwrap();
        let cert = project_oracle(&rho, &mu, &s).unwrap();
        assert_abs_diff_eq!(cert.value, 0.5, epsilon = 1e-15);
        assert_eq!(cert.distance(), cert.value);
    }
}
