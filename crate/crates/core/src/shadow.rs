//! Shadow of a joint measure `ρ` onto the couplings `Π(μ_1, …, μ_K)`.
//!
//! Each marginal `ρ_i` is optimally transported onto `μ_i`; the plans are
//! disintegrated against `ρ_i` into kernels `κ_i(dx_i | y_i)` and glued:
//!
//! ```text
//! π*(x)    = Σ_y ρ(y) Π_i κ_i(x_i | y_i)
//! γ*(x, y) = ρ(y) Π_i κ_i(x_i | y_i)
//! ```
//!
//! Because the ground cost is separable, the cost of `γ*` is exactly
//! `(Σ_i W_p^p(μ_i, ρ_i))^{1/p}`, which is also the optimal projection value.
//! When optimal plans are not unique the pivot rule of [`crate::ot`] fixes
//! one; the result is the *canonical shadow*.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{total_variation, DiscreteMeasure, MarginalVector, MetricSpec, ProductMeasure};
use crate::ot::{self, TransportPlan};
use crate::scalar::{Accumulator, Scalar};

/// Default cap on the number of glued cells (an upper bound on the shadow support).
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Tolerance for the feasibility and value certificates.
pub const CERT_TOL: f64 = 1e-9;

/// Row-stochastic disintegration of a plan against its target marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalKernel<T> {
    conditioning: DiscreteMeasure<T>,
    support: DiscreteMeasure<T>,
    /// Per conditioning atom: nonzero `(support atom, probability)` entries.
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> ConditionalKernel<T> {
    pub fn conditioning(&self) -> &DiscreteMeasure<T> {
        &self.conditioning
    }

    pub fn support(&self) -> &DiscreteMeasure<T> {
        &self.support
    }

    pub fn sparse_row(&self, j: usize) -> &[(usize, T)] {
        &self.rows[j]
    }

    /// Dense probability vector over the support atoms.
    pub fn row(&self, j: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.support.len()];
        for &(i, w) in &self.rows[j] {
            out[i] = w;
        }
        out
    }

    /// Atom index the row is concentrated on, if it is a Dirac.
    pub fn dirac_target(&self, j: usize) -> Option<usize> {
        match self.rows[j].as_slice() {
            [(i, _)] => Some(*i),
            _ => None,
        }
    }

    /// `κ(dx | y) ρ(dy)` as a plan with the support as rows.
    pub fn reconstruct(&self) -> Result<TransportPlan<T>> {
        let n = self.conditioning.len();
        let mut table = vec![T::zero(); self.support.len() * n];
        for (j, row) in self.rows.iter().enumerate() {
            let w = self.conditioning.weight(j);
            for &(i, k) in row {
                table[i * n + j] = k * w;
            }
        }
        TransportPlan::new(self.support.clone(), self.conditioning.clone(), table)
    }
}

/// Factors `plan = κ ⊗ target` where `κ` is indexed by target atoms.
///
/// Rows are normalized by the column sums of the plan, which agree with the
/// target weights up to the plan tolerance.
pub fn disintegrate<T: Scalar>(plan: &TransportPlan<T>) -> Result<ConditionalKernel<T>> {
    let n = plan.cols();
    let col_sums = plan.col_sums();
    let mut rows = Vec::with_capacity(n);
    for (j, &mass) in col_sums.iter().enumerate() {
        if mass <= T::zero() {
            return Err(Error::input("plan", format!("column {j} carries no mass")));
        }
        let row: Vec<(usize, T)> = (0..plan.rows())
            .filter_map(|i| {
                let x = plan.get(i, j);
                (x > T::zero()).then(|| (i, x / mass))
            })
            .collect();
        rows.push(row);
    }
    Ok(ConditionalKernel { conditioning: plan.target().clone(), support: plan.source().clone(), rows })
}

#[derive(Clone, Debug)]
pub struct ShadowOptions {
    pub support_cap: usize,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions { support_cap: DEFAULT_SUPPORT_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct ShadowResult<T> {
    /// The canonical shadow `π* ∈ Π(μ)`.
    pub shadow: ProductMeasure<T>,
    /// `ρ`, the second marginal of the glued coupling.
    pub rho: ProductMeasure<T>,
    /// Glued coupling `γ*` as `(shadow atom, ρ atom, mass)`.
    pub glued: Vec<(usize, usize, T)>,
    /// For every shadow atom, the index of its block-`i` coordinates among `μ_i`'s atoms.
    pub shadow_index: Vec<Vec<usize>>,
    pub value: T,
    /// `W_p(μ_i, ρ_i)` for each block.
    pub per_marginal_values: Vec<T>,
    /// Optimal plans `γ_i ∈ Π(μ_i, ρ_i)` (rows `μ_i`, columns `ρ_i`).
    pub plans: Vec<TransportPlan<T>>,
    pub kernels: Vec<ConditionalKernel<T>>,
    /// For every atom of `ρ`, the index of its block-`i` projection among `ρ_i`'s atoms.
    pub rho_index: Vec<Vec<usize>>,
    pub spec: MetricSpec<T>,
}

impl<T: Scalar> ShadowResult<T> {
    /// Cost of the glued coupling under the product metric.
    pub fn glued_cost(&self) -> Result<T> {
        ot::coupling_cost(self.shadow.base(), self.rho.base(), &self.glued, &self.spec)
    }

    /// Glued coupling as a dense plan (shadow rows, `ρ` columns).
    pub fn glued_plan(&self) -> Result<TransportPlan<T>> {
        let n = self.rho.len();
        let mut table = vec![T::zero(); self.shadow.len() * n];
        for &(i, j, w) in &self.glued {
            table[i * n + j] += w;
        }
        TransportPlan::new(self.shadow.base().clone(), self.rho.base().clone(), table)
    }
}

/// Canonical shadow of `rho` onto `Π(mu)` with the default support cap.
pub fn compose_shadow<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
) -> Result<ShadowResult<T>> {
    compose_shadow_with(rho, mu, spec, &ShadowOptions::default())
}

pub fn compose_shadow_with<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    options: &ShadowOptions,
) -> Result<ShadowResult<T>> {
    mu.check(spec)?;
    if rho.spec().block_dims() != spec.block_dims() {
        return Err(Error::input(
            "rho",
            format!("block dims {:?} do not match {:?}", rho.spec().block_dims(), spec.block_dims()),
        ));
    }
    let k = spec.blocks();
    let rho = ProductMeasure::new(rho.base().clone(), spec.clone())?;

    let marginals: Vec<(DiscreteMeasure<T>, Vec<usize>)> =
        (0..k).map(|i| rho.marginal_with_index(i)).collect::<Result<_>>()?;

    // Independent per-block solves; collected in block order.
    let solved: Vec<ot::OTResult<T>> = (0..k)
        .into_par_iter()
        .map(|i| ot::solve(mu.get(i), &marginals[i].0, &spec.block(i)))
        .collect::<Result<_>>()?;

    let kernels: Vec<ConditionalKernel<T>> =
        solved.iter().map(|r| disintegrate(&r.plan)).collect::<Result<_>>()?;

    let rho_index: Vec<Vec<usize>> = marginals.iter().map(|(_, idx)| idx.clone()).collect();

    let cells: usize = (0..rho.len())
        .map(|r| (0..k).map(|i| kernels[i].sparse_row(rho_index[i][r]).len()).product::<usize>())
        .sum();
    if cells > options.support_cap {
        return Err(Error::SizeCap { what: "shadow support", size: cells, cap: options.support_cap });
    }

    let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut shadow_index: Vec<Vec<usize>> = Vec::new();
    let mut masses: Vec<Accumulator<T>> = Vec::new();
    let mut glued = Vec::with_capacity(cells);
    let mut tuple = vec![0usize; k];
    for (r, &w) in rho.base().weights().iter().enumerate() {
        let rows: Vec<&[(usize, T)]> = (0..k).map(|i| kernels[i].sparse_row(rho_index[i][r])).collect();
        // Odometer over the Cartesian product of the sparse rows.
        let mut pos = vec![0usize; k];
        'cells: loop {
            let mut mass = w;
            for i in 0..k {
                let (a, kappa) = rows[i][pos[i]];
                tuple[i] = a;
                mass *= kappa;
            }
            let idx = *lookup.entry(tuple.clone()).or_insert_with(|| {
                shadow_index.push(tuple.clone());
                masses.push(Accumulator::default());
                shadow_index.len() - 1
            });
            masses[idx].add(mass);
            glued.push((idx, r, mass));
            for i in (0..k).rev() {
                pos[i] += 1;
                if pos[i] < rows[i].len() {
                    continue 'cells;
                }
                pos[i] = 0;
            }
            break;
        }
    }

    let dim = spec.total_dim();
    let mut coords = Vec::with_capacity(shadow_index.len() * dim);
    for t in &shadow_index {
        for (i, &a) in t.iter().enumerate() {
            coords.extend_from_slice(mu.get(i).atom(a));
        }
    }
    let weights: Vec<T> = masses.iter().map(Accumulator::value).collect();
    let base = DiscreteMeasure::from_flat(dim, coords, weights)?;
    if base.len() != shadow_index.len() {
        return Err(Error::Solver("shadow atoms collapsed during construction".into()));
    }
    let shadow = ProductMeasure::new(base, spec.clone())?;

    let per_marginal_values: Vec<T> = solved.iter().map(|r| r.value).collect();
    let value = spec.p.aggregate(per_marginal_values.iter().copied());

    let result = ShadowResult {
        shadow,
        rho,
        glued,
        shadow_index,
        value,
        per_marginal_values,
        plans: solved.into_iter().map(|r| r.plan).collect(),
        kernels,
        rho_index,
        spec: spec.clone(),
    };
    certify(&result, mu)?;
    Ok(result)
}

/// Feasibility (`π* ∈ Π(μ)`) and value (`cost(γ*) = aggregated W_p`) checks.
fn certify<T: Scalar>(result: &ShadowResult<T>, mu: &MarginalVector<T>) -> Result<()> {
    let tol = T::lit(CERT_TOL.max(T::OPT_TOL));
    for i in 0..result.spec.blocks() {
        let tv = total_variation(&result.shadow.marginal(i)?, mu.get(i));
        if tv > tol {
            return Err(Error::Assertion(format!("shadow marginal {i} differs from mu_{i} by {tv} in TV")));
        }
    }
    let glued_cost = result.glued_cost()?;
    if (glued_cost - result.value).abs() > tol * (T::one() + result.value) {
        return Err(Error::Assertion(format!(
            "glued coupling cost {glued_cost} differs from projection value {}",
            result.value
        )));
    }
    Ok(())
}

/// Outcome of [`is_map_induced`].
#[derive(Clone, Debug, PartialEq)]
pub struct MapInduction<T> {
    pub induced: bool,
    /// `maps[i][j]`: the `μ_i` atom that `ρ_i` atom `j` is sent to (when induced).
    pub maps: Option<Vec<Vec<usize>>>,
    /// TV distance between the shadow and `(T_1, …, T_K)_# ρ` (zero when induced).
    pub pushforward_tv: Option<T>,
}

/// Whether every per-block plan is deterministic given `ρ_i`, in which case
/// the shadow is the pushforward of `ρ` under the product of transport maps.
pub fn is_map_induced<T: Scalar>(result: &ShadowResult<T>) -> MapInduction<T> {
    let mut maps = Vec::with_capacity(result.kernels.len());
    for kernel in &result.kernels {
        let map: Option<Vec<usize>> = (0..kernel.conditioning().len()).map(|j| kernel.dirac_target(j)).collect();
        match map {
            Some(m) => maps.push(m),
            None => return MapInduction { induced: false, maps: None, pushforward_tv: None },
        }
    }
    let supports: Vec<&DiscreteMeasure<T>> = result.kernels.iter().map(ConditionalKernel::support).collect();
    let dim = result.spec.total_dim();
    let pushed = result
        .rho
        .base()
        .pushforward(dim, |y| {
            let mut x = Vec::with_capacity(dim);
            for (i, map) in maps.iter().enumerate() {
                let yi = &y[result.spec.block_range(i)];
                let j = result.kernels[i].conditioning().find(yi).expect("rho_i atom");
                x.extend_from_slice(supports[i].atom(map[j]));
            }
            x
        })
        .expect("pushforward of a valid measure");
    let tv = total_variation(&pushed, result.shadow.base());
    assert!(
        tv.as_f64() <= CERT_TOL.max(T::MASS_TOL),
        "map-induced shadow differs from the pushforward of rho (TV {tv})"
    );
    MapInduction { induced: true, maps: Some(maps), pushforward_tv: Some(tv) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Exponent;
    use approx::assert_abs_diff_eq;

    fn line(points: &[f64], w: Option<Vec<f64>>) -> DiscreteMeasure<f64> {
        DiscreteMeasure::on_line(points, w).unwrap()
    }

    fn spec2(p: Exponent<f64>) -> MetricSpec<f64> {
        MetricSpec::new(p, vec![1, 1]).unwrap()
    }

    fn joint(atoms: Vec<Vec<f64>>, w: Option<Vec<f64>>, s: &MetricSpec<f64>) -> ProductMeasure<f64> {
        ProductMeasure::new(DiscreteMeasure::new(atoms, w).unwrap(), s.clone()).unwrap()
    }

    #[test]
    fn disintegrate_examples() {
        let s = MetricSpec::single(Exponent::Finite(2.0), 1).unwrap();
        let a = line(&[0.0, 1.0, 2.0], Some(vec![0.2, 0.3, 0.5]));
        let diag = ot::solve_ot(&a, &a, &s).unwrap().plan;
        let k = disintegrate(&diag).unwrap();
        for j in 0..3 {
            assert_eq!(k.sparse_row(j), &[(j, 1.0)]);
        }
        assert_eq!(k.reconstruct().unwrap(), diag);

        let d = DiscreteMeasure::dirac(vec![4.0]).unwrap();
        let k = disintegrate(&TransportPlan::product(d, a.clone())).unwrap();
        for j in 0..3 {
            assert_eq!(k.dirac_target(j), Some(0));
        }

        let u = line(&[0.0, 1.0], None);
        let plan = TransportPlan::new(u.clone(), u, vec![0.25; 4]).unwrap();
        let k = disintegrate(&plan).unwrap();
        assert_eq!(k.row(0), vec![0.5, 0.5]);
        assert_eq!(k.row(1), vec![0.5, 0.5]);
    }

    #[test]
    fn identity_when_marginals_already_match() {
        let s = spec2(Exponent::Finite(2.0));
        let rho = joint(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]], Some(vec![0.2, 0.3, 0.5]), &s);
        let mu = rho.marginals().unwrap();
        let r = compose_shadow(&rho, &mu, &s).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(total_variation(r.shadow.base(), rho.base()) < 1e-15);
        let m = is_map_induced(&r);
        assert!(m.induced);
    }

    #[test]
    fn dirac_marginals_absorb() {
        let s = spec2(Exponent::Finite(1.5));
        let rho = joint(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]], None, &s);
        let mu = MarginalVector::new(
            vec![DiscreteMeasure::dirac(vec![2.0]).unwrap(), DiscreteMeasure::dirac(vec![-1.0]).unwrap()],
            &s,
        )
        .unwrap();
        let r = compose_shadow(&rho, &mu, &s).unwrap();
        assert_eq!(r.shadow.len(), 1);
        assert_eq!(r.shadow.base().atom(0), &[2.0, -1.0]);
        let m = is_map_induced(&r);
        assert!(m.induced);
        assert!(m.maps.unwrap().iter().all(|map| map.iter().all(|&a| a == 0)));
    }

    #[test]
    fn worked_two_atom_instance() {
        let s = spec2(Exponent::Finite(2.0));
        let rho = joint(vec![vec![0.0, 0.0], vec![1.0, 1.0]], None, &s);
        let mu = MarginalVector::new(vec![line(&[0.0, 1.0], None), line(&[0.5], None)], &s).unwrap();
        let r = compose_shadow(&rho, &mu, &s).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-15);
        let expected = DiscreteMeasure::uniform(vec![vec![0.0, 0.5], vec![1.0, 0.5]]).unwrap();
        assert!(total_variation(r.shadow.base(), &expected) < 1e-15);
        assert_abs_diff_eq!(r.glued_cost().unwrap(), 0.5, epsilon = 1e-15);
        // Block 2 maps both rho_2 atoms to 0.5: still a map.
        assert!(is_map_induced(&r).induced);
    }

    #[test]
    fn splitting_mass_is_not_map_induced() {
        let s = spec2(Exponent::Finite(2.0));
        let rho = joint(vec![vec![0.0, 0.0]], None, &s);
        let mu = MarginalVector::new(vec![line(&[-1.0, 1.0], None), line(&[-1.0, 1.0], None)], &s).unwrap();
        let r = compose_shadow(&rho, &mu, &s).unwrap();
        assert_eq!(r.shadow.len(), 4);
        assert!(!is_map_induced(&r).induced);
        // Shadow of a Dirac is the independent coupling.
        let ind = ProductMeasure::independent(&mu, &s).unwrap();
        assert!(total_variation(r.shadow.base(), ind.base()) < 1e-15);
    }

    #[test]
    fn support_cap_rejects() {
        let s = spec2(Exponent::Finite(2.0));
        let rho = joint(vec![vec![0.0, 0.0]], None, &s);
        let mu = MarginalVector::new(vec![line(&[-1.0, 1.0], None), line(&[-1.0, 1.0], None)], &s).unwrap();
        let err = compose_shadow_with(&rho, &mu, &s, &ShadowOptions { support_cap: 3 }).unwrap_err();
        assert!(matches!(err, Error::SizeCap { size: 4, cap: 3, .. }));
    }

    #[test]
    fn block_count_mismatch() {
        let s = spec2(Exponent::Finite(2.0));
        let rho = joint(vec![vec![0.0, 0.0]], None, &s);
        let mu = MarginalVector::from_components(vec![line(&[0.0], None)]).unwrap();
        assert!(compose_shadow(&rho, &mu, &s).is_err());
    }

    #[test]
    fn bottleneck_shadow_value_is_max() {
        let s = spec2(Exponent::Infinite);
        let rho = joint(vec![vec![0.0, 0.0], vec![1.0, 1.0]], None, &s);
        let mu = MarginalVector::new(vec![line(&[0.1, 0.9], None), line(&[0.5], None)], &s).unwrap();
        let r = compose_shadow(&rho, &mu, &s).unwrap();
        assert_abs_diff_eq!(r.per_marginal_values[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.per_marginal_values[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn single_precision_instance() {
        let s = MetricSpec::<f32>::new(Exponent::Finite(2.0), vec![1, 1]).unwrap();
        let rho = ProductMeasure::new(
            DiscreteMeasure::uniform(vec![vec![0.0f32, 0.0], vec![1.0, 1.0]]).unwrap(),
            s.clone(),
        )
        .unwrap();
        let mu = MarginalVector::new(
            vec![DiscreteMeasure::on_line(&[0.0f32, 1.0], None).unwrap(), DiscreteMeasure::on_line(&[0.5f32], None).unwrap()],
            &s,
        )
        .unwrap();
        let r = compose_shadow(&rho, &mu, &s).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6);
    }
}
