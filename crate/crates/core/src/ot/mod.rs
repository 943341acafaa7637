//! Exact discrete optimal transport between two finitely supported measures.
//!
//! Finite `p` is solved by the transportation simplex, `p = ∞` by a threshold
//! search with a max-flow feasibility test. Both return vertex couplings
//! selected by a deterministic pivot rule, so repeated solves of the same
//! instance return the same plan.

mod bottleneck;
mod simplex;

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Exponent, MetricSpec};
use crate::scalar::{compensated_sum, Scalar};

/// Pairwise ground costs: `d^p` for finite `p`, `d` for `p = ∞`.
#[derive(Clone, Debug)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
    pub p: Exponent<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(source: &DiscreteMeasure<T>, target: &DiscreteMeasure<T>, spec: &MetricSpec<T>) -> Result<Self> {
        let d = spec.total_dim();
        for m in [source, target] {
            if m.dim() != d {
                return Err(Error::Dimension { expected: d, found: m.dim() });
            }
        }
        let mut entries = Vec::with_capacity(source.len() * target.len());
        for x in source.atoms() {
            for y in target.atoms() {
                entries.push(spec.cost(x, y));
            }
        }
        Ok(CostMatrix { rows: source.len(), cols: target.len(), entries, p: spec.p })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }
}

/// Coupling between `source` (rows) and `target` (columns), stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan<T> {
    source: DiscreteMeasure<T>,
    target: DiscreteMeasure<T>,
    table: Vec<T>,
}

/// Marginal tolerance for plans.
pub const PLAN_TOL: f64 = 1e-9;

impl<T: Scalar> TransportPlan<T> {
    /// Validates nonnegativity and both marginals (within [`PLAN_TOL`]).
    pub fn new(source: DiscreteMeasure<T>, target: DiscreteMeasure<T>, table: Vec<T>) -> Result<Self> {
        let plan = TransportPlan { source, target, table };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = (self.rows(), self.cols());
        if self.table.len() != m * n {
            return Err(Error::input("plan", format!("table has {} entries, expected {}", self.table.len(), m * n)));
        }
        if self.table.iter().any(|x| !(x.is_finite() && *x >= T::zero())) {
            return Err(Error::input("plan", "entries must be finite and nonnegative"));
        }
        let tol = T::lit(PLAN_TOL.max(T::MASS_TOL));
        for (i, s) in self.row_sums().into_iter().enumerate() {
            if (s - self.source.weight(i)).abs() > tol {
                return Err(Error::input("plan", format!("row {i} sums to {s}, expected {}", self.source.weight(i))));
            }
        }
        for (j, s) in self.col_sums().into_iter().enumerate() {
            if (s - self.target.weight(j)).abs() > tol {
                return Err(Error::input("plan", format!("column {j} sums to {s}, expected {}", self.target.weight(j))));
            }
        }
        Ok(())
    }

    /// Independent coupling `source ⊗ target`.
    pub fn product(source: DiscreteMeasure<T>, target: DiscreteMeasure<T>) -> Self {
        let mut table = Vec::with_capacity(source.len() * target.len());
        for &a in source.weights() {
            for &b in target.weights() {
                table.push(a * b);
            }
        }
        TransportPlan { source, target, table }
    }

    pub fn source(&self) -> &DiscreteMeasure<T> {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure<T> {
        &self.target
    }

    pub fn rows(&self) -> usize {
        self.source.len()
    }

    pub fn cols(&self) -> usize {
        self.target.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.table[i * self.cols() + j]
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    /// Nonzero cells as `(row, col, mass)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let n = self.cols();
        self.table
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > T::zero())
            .map(move |(k, &x)| (k / n, k % n, x))
    }

    pub fn nonzeros(&self) -> usize {
        self.table.iter().filter(|&&x| x > T::zero()).count()
    }

    pub fn row_sums(&self) -> Vec<T> {
        let n = self.cols();
        (0..self.rows())
            .map(|i| compensated_sum(self.table[i * n..(i + 1) * n].iter().copied()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let n = self.cols();
        (0..n)
            .map(|j| compensated_sum((0..self.rows()).map(|i| self.table[i * n + j])))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let (m, n) = (self.rows(), self.cols());
        let mut table = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                table[j * m + i] = self.table[i * n + j];
            }
        }
        TransportPlan { source: self.target.clone(), target: self.source.clone(), table }
    }

    /// True when every column carries a single nonzero entry, i.e. the plan
    /// is induced by a map from target atoms to source atoms.
    pub fn is_column_deterministic(&self) -> bool {
        let n = self.cols();
        (0..n).all(|j| (0..self.rows()).filter(|&i| self.table[i * n + j] > T::zero()).count() == 1)
    }
}

/// Dual potentials certifying optimality of a finite-`p` plan.
#[derive(Clone, Debug)]
pub struct DualCertificate<T> {
    pub row: Vec<T>,
    pub col: Vec<T>,
    /// Most negative reduced cost `c_ij − u_i − v_j`.
    pub min_reduced_cost: T,
    /// `|Σ c γ − (Σ a u + Σ b v)|` in cost units.
    pub duality_gap: T,
}

#[derive(Clone, Debug)]
pub struct OTResult<T> {
    pub plan: TransportPlan<T>,
    /// `W_p` (already rooted) or the bottleneck value for `p = ∞`.
    pub value: T,
    pub iterations: usize,
    /// Present for finite `p`.
    pub certificate: Option<DualCertificate<T>>,
}

fn check_inputs<T: Scalar>(source: &DiscreteMeasure<T>, target: &DiscreteMeasure<T>, spec: &MetricSpec<T>) -> Result<()> {
    let d = spec.total_dim();
    for m in [source, target] {
        if m.dim() != d {
            return Err(Error::Dimension { expected: d, found: m.dim() });
        }
        let mass = m.total_mass();
        if (mass - T::one()).abs().as_f64() > T::MASS_TOL {
            return Err(Error::input("weights", format!("measure has mass {mass}")));
        }
    }
    Ok(())
}

/// Optimal coupling for finite `p` by the transportation simplex.
///
/// Optimality is certified by the recovered duals; the plan is a vertex of the
/// transportation polytope (at most `m + n − 1` nonzeros). With `p = 1` optimal
/// plans are typically far from unique and the pivot rule fixes the choice.
pub fn solve_ot<T: Scalar>(
    source: &DiscreteMeasure<T>,
    target: &DiscreteMeasure<T>,
    spec: &MetricSpec<T>,
) -> Result<OTResult<T>> {
    if spec.p.is_infinite() {
        return Err(Error::input("p", "solve_ot requires a finite exponent; use solve_ot_inf"));
    }
    check_inputs(source, target, spec)?;
    let cost = CostMatrix::new(source, target, spec)?;
    let sol = simplex::solve(source.weights(), target.weights(), cost.entries())?;
    let primal = compensated_sum(sol.flows.iter().zip(cost.entries()).map(|(x, c)| *x * *c));
    let dual = compensated_sum(
        source
            .weights()
            .iter()
            .zip(&sol.row_duals)
            .map(|(a, u)| *a * *u)
            .chain(target.weights().iter().zip(&sol.col_duals).map(|(b, v)| *b * *v)),
    );
    let plan = TransportPlan::new(source.clone(), target.clone(), sol.flows)?;
    Ok(OTResult {
        value: spec.p.root(primal.max(T::zero())),
        plan,
        iterations: sol.iterations,
        certificate: Some(DualCertificate {
            row: sol.row_duals,
            col: sol.col_duals,
            min_reduced_cost: sol.min_reduced_cost,
            duality_gap: (primal - dual).abs(),
        }),
    })
}

/// Bottleneck transport for `p = ∞`.
///
/// Binary search over the sorted distinct costs; each probe asks whether a
/// coupling supported on cells of cost `≤ t` exists (max-flow feasibility).
/// The returned plan is a vertex coupling on the optimal threshold's cells,
/// computed by the transportation simplex with 0/1 costs.
pub fn solve_ot_inf<T: Scalar>(
    source: &DiscreteMeasure<T>,
    target: &DiscreteMeasure<T>,
    spec: &MetricSpec<T>,
) -> Result<OTResult<T>> {
    if !spec.p.is_infinite() {
        return Err(Error::input("p", "solve_ot_inf requires p = inf"));
    }
    check_inputs(source, target, spec)?;
    let cost = CostMatrix::new(source, target, spec)?;
    let levels = bottleneck::thresholds(cost.entries());
    let mut probes = 0;
    let k = bottleneck::lowest_feasible(&levels, |&t| {
        probes += 1;
        let allowed: Vec<bool> = cost.entries().iter().map(|&c| c <= t).collect();
        bottleneck::feasible(source.weights(), target.weights(), &allowed)
    });
    let t = levels[k];
    let indicator: Vec<T> = cost.entries().iter().map(|&c| if c <= t { T::zero() } else { T::one() }).collect();
    let sol = simplex::solve(source.weights(), target.weights(), &indicator)?;
    let plan = TransportPlan::new(source.clone(), target.clone(), sol.flows)?;
    let support_max = plan_cost_inner(&plan, &cost);
    if support_max > t {
        return Err(Error::Solver(format!(
            "bottleneck plan uses cost {support_max} above feasible threshold {t}"
        )));
    }
    Ok(OTResult { plan, value: t, iterations: probes + sol.iterations, certificate: None })
}

/// `W_p(source, target)` for any exponent.
pub fn solve<T: Scalar>(
    source: &DiscreteMeasure<T>,
    target: &DiscreteMeasure<T>,
    spec: &MetricSpec<T>,
) -> Result<OTResult<T>> {
    match spec.p {
        Exponent::Finite(_) => solve_ot(source, target, spec),
        Exponent::Infinite => solve_ot_inf(source, target, spec),
    }
}

pub fn wasserstein<T: Scalar>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>, spec: &MetricSpec<T>) -> Result<T> {
    Ok(solve(a, b, spec)?.value)
}

fn plan_cost_inner<T: Scalar>(plan: &TransportPlan<T>, cost: &CostMatrix<T>) -> T {
    match cost.p {
        Exponent::Finite(_) => cost.p.root(compensated_sum(
            plan.triplets().map(|(i, j, x)| x * cost.get(i, j)),
        )),
        Exponent::Infinite => plan.triplets().fold(T::zero(), |m, (i, j, _)| m.max(cost.get(i, j))),
    }
}

/// `(Σ γ_ij d(x_i, y_j)^p)^{1/p}`, or the maximal support distance for `p = ∞`.
pub fn plan_cost<T: Scalar>(plan: &TransportPlan<T>, spec: &MetricSpec<T>) -> Result<T> {
    let cost = CostMatrix::new(plan.source(), plan.target(), spec)?;
    Ok(plan_cost_inner(plan, &cost))
}

/// Cost of a sparse coupling given as `(source atom, target atom, mass)` triplets.
pub fn coupling_cost<T: Scalar>(
    source: &DiscreteMeasure<T>,
    target: &DiscreteMeasure<T>,
    triplets: &[(usize, usize, T)],
    spec: &MetricSpec<T>,
) -> Result<T> {
    let d = spec.total_dim();
    if source.dim() != d || target.dim() != d {
        return Err(Error::Dimension { expected: d, found: source.dim().max(target.dim()) });
    }
    Ok(match spec.p {
        Exponent::Finite(_) => spec.p.root(compensated_sum(
            triplets
                .iter()
                .filter(|t| t.2 > T::zero())
                .map(|&(i, j, x)| x * spec.cost(source.atom(i), target.atom(j))),
        )),
        Exponent::Infinite => triplets
            .iter()
            .filter(|t| t.2 > T::zero())
            .fold(T::zero(), |m, &(i, j, _)| m.max(spec.cost(source.atom(i), target.atom(j)))),
    })
}

/// Conditional means of a plan given its target atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricMap<T> {
    /// `(target atom index, Σ_i γ_ij x_i / Σ_i γ_ij)` for every column with mass.
    pub points: Vec<(usize, Vec<T>)>,
    /// Columns without mass, left out of `points`.
    pub excluded: Vec<usize>,
}

impl<T: Scalar> BarycentricMap<T> {
    pub fn get(&self, target_atom: usize) -> Option<&[T]> {
        self.points.iter().find(|(j, _)| *j == target_atom).map(|(_, x)| x.as_slice())
    }
}

/// Quadratic (conditional-mean) barycentric projection of `plan` onto its
/// target atoms; exact Monge map when each column has a single nonzero.
pub fn barycentric_map<T: Scalar>(plan: &TransportPlan<T>) -> BarycentricMap<T> {
    let d = plan.source().dim();
    let (m, n) = (plan.rows(), plan.cols());
    let mut points = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for j in 0..n {
        let mass = compensated_sum((0..m).map(|i| plan.get(i, j)));
        if mass <= T::zero() {
            excluded.push(j);
            continue;
        }
        let mut mean = vec![T::zero(); d];
        for i in 0..m {
            let w = plan.get(i, j);
            if w > T::zero() {
                for (acc, &x) in mean.iter_mut().zip(plan.source().atom(i)) {
                    *acc += w * x;
                }
            }
        }
        for v in &mut mean {
            *v /= mass;
        }
        points.push((j, mean));
    }
    BarycentricMap { points, excluded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(points: &[f64], weights: Option<Vec<f64>>) -> DiscreteMeasure<f64> {
        DiscreteMeasure::on_line(points, weights).unwrap()
    }

    fn spec1(p: Exponent<f64>) -> MetricSpec<f64> {
        MetricSpec::single(p, 1).unwrap()
    }

    #[test]
    fn identical_measures_cost_zero_on_diagonal() {
        let a = line(&[0.0, 0.3, 1.0], Some(vec![0.2, 0.5, 0.3]));
        let r = solve_ot(&a, &a, &spec1(Exponent::Finite(2.0))).unwrap();
        assert_eq!(r.value, 0.0);
        for (i, j, _) in r.plan.triplets() {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn dirac_source_forces_product_plan() {
        let a = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let b = line(&[1.0, -2.0, 3.0], Some(vec![0.5, 0.25, 0.25]));
        let s = spec1(Exponent::Finite(1.5));
        let r = solve_ot(&a, &b, &s).unwrap();
        let expected = (0.5 * 1.0f64 + 0.25 * 2f64.powf(1.5) + 0.25 * 3f64.powf(1.5)).powf(1.0 / 1.5);
        assert_abs_diff_eq!(r.value, expected, epsilon = 1e-14);
        assert_eq!(r.plan, TransportPlan::product(a.clone(), b.clone()));
        assert_abs_diff_eq!(plan_cost(&TransportPlan::product(a, b), &s).unwrap(), r.value, epsilon = 1e-14);
    }

    #[test]
    fn two_points_to_midpoint() {
        // Only one coupling exists: both halves travel 0.5.
        let r = solve_ot(&line(&[0.0, 1.0], None), &line(&[0.5], None), &spec1(Exponent::Finite(2.0))).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bottleneck_examples() {
        let s = spec1(Exponent::Infinite);
        let a = line(&[0.0, 1.0], None);
        assert_eq!(solve_ot_inf(&a, &a, &s).unwrap().value, 0.0);
        // Vertex couplings: identity-like (max 0.1) or crossed (max 0.9).
        let r = solve_ot_inf(&a, &line(&[0.1, 0.9], None), &s).unwrap();
        assert_abs_diff_eq!(r.value, 0.1, epsilon = 1e-15);
        let r = solve_ot_inf(
            &DiscreteMeasure::dirac(vec![0.25]).unwrap(),
            &DiscreteMeasure::dirac(vec![-1.0]).unwrap(),
            &s,
        )
        .unwrap();
        assert_eq!(r.value, 1.25);
    }

    #[test]
    fn exponent_dispatch_errors() {
        let a = line(&[0.0], None);
        assert!(solve_ot(&a, &a, &spec1(Exponent::Infinite)).is_err());
        assert!(solve_ot_inf(&a, &a, &spec1(Exponent::Finite(2.0))).is_err());
        let b = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        assert!(matches!(solve_ot(&a, &b, &spec1(Exponent::Finite(2.0))), Err(Error::Dimension { .. })));
    }

    #[test]
    fn barycentric_examples() {
        let src = line(&[0.0, 1.0], None);
        let tgt = line(&[0.5], None);
        let r = solve_ot(&src, &tgt, &spec1(Exponent::Finite(2.0))).unwrap();
        // Condition on the midpoint: half-half split gives 0.5.
        let bm = barycentric_map(&r.plan);
        assert_eq!(bm.get(0).unwrap(), &[0.5]);
        // Conditioning on {0, 1} instead: both atoms are sent to the midpoint.
        let bm = barycentric_map(&r.plan.transpose());
        assert_eq!(bm.points.len(), 2);
        assert_eq!(bm.get(0).unwrap(), &[0.5]);
        assert_eq!(bm.get(1).unwrap(), &[0.5]);

        // Deterministic plan: identity-like means.
        let id = solve_ot(&src, &src, &spec1(Exponent::Finite(2.0))).unwrap();
        assert!(id.plan.is_column_deterministic());
        let bm = barycentric_map(&id.plan);
        assert_eq!(bm.get(0).unwrap(), &[0.0]);
        assert_eq!(bm.get(1).unwrap(), &[1.0]);
        assert!(bm.excluded.is_empty());
    }

    #[test]
    fn plan_validation_rejects_bad_marginals() {
        let a = line(&[0.0, 1.0], None);
        assert!(TransportPlan::new(a.clone(), a.clone(), vec![0.5, 0.0, 0.0, 0.4]).is_err());
        assert!(TransportPlan::new(a.clone(), a.clone(), vec![0.6, -0.1, -0.1, 0.6]).is_err());
        assert!(TransportPlan::new(a.clone(), a, vec![0.25; 4]).is_ok());
    }
}
