//! Stability of the shadow: exponents, the constant-free lower bound,
//! smoothing, and Hölder-type slope experiments.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{least_squares, LinearFit};
use crate::instances::random_projection_instance;
use crate::measures::{marginal_vector_distance, DiscreteMeasure, Exponent, MarginalVector, MetricSpec, ProductMeasure};
use crate::ot;
use crate::rng::{mix_seed, Stream};
use crate::scalar::Scalar;
use crate::shadow::{compose_shadow_with, ShadowOptions, ShadowResult};

/// Default offset closing the open exponent interval for `1 < p < 2`.
pub const DEFAULT_DELTA: f64 = 0.01;
/// Slack allowed on the lower bound.
pub const LOWER_BOUND_TOL: f64 = 1e-9;
/// Denominators below this are treated as zero by the ratio diagnostics.
pub const RATIO_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaSpec<T> {
    pub p: T,
    pub delta: T,
    pub theta: T,
}

/// Stability exponent: `(1 − δ)(p − 1)²/(p(p + 1))` for `1 < p < 2`,
/// `1/(6(p − 1))` for `p ≥ 2`.
pub fn theta_of<T: Scalar>(p: T, delta: T) -> Result<ThetaSpec<T>> {
    if !p.is_finite() || p <= T::one() {
        return Err(Error::input("p", format!("exponent requires 1 < p < inf, got {p}")));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::input("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let two = T::lit(2.0);
    let theta = if p < two {
        let pm = p - T::one();
        (T::one() - delta) * (pm * pm) / (p * (p + T::one()))
    } else {
        T::one() / (T::lit(6.0) * (p - T::one()))
    };
    Ok(ThetaSpec { p, delta, theta })
}

fn theta_for<T: Scalar>(p: Exponent<T>, delta: T) -> Option<ThetaSpec<T>> {
    p.finite().and_then(|p| theta_of(p, delta).ok())
}

/// Common-offset smoothing kernel: every atom is split uniformly over `x + offsets`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingSpec<T> {
    pub sigma: T,
    pub offsets: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> SmoothingSpec<T> {
    /// The `2d + 1` offsets `{0, ±σ e_k}`.
    pub fn axis(sigma: T, dim: usize) -> Result<Self> {
        let mut offsets = vec![vec![T::zero(); dim]];
        for k in 0..dim {
            for s in [-sigma, sigma] {
                let mut e = vec![T::zero(); dim];
                e[k] = s;
                offsets.push(e);
            }
        }
        Self::custom(sigma, offsets, Exponent::Finite(T::one()))
    }

    /// Arbitrary stencil; every offset must lie in the `ℓ_norm` ball of radius `sigma`.
    pub fn custom(sigma: T, offsets: Vec<Vec<T>>, norm: Exponent<T>) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::input("sigma", format!("must be positive, got {sigma}")));
        }
        let Some(first) = offsets.first() else {
            return Err(Error::input("offsets", "stencil is empty"));
        };
        let dim = first.len();
        let slack = T::lit(1e-12) * (T::one() + sigma);
        for o in &offsets {
            if o.len() != dim {
                return Err(Error::Dimension { expected: dim, found: o.len() });
            }
            let len = norm.aggregate(o.iter().map(|x| x.abs()));
            if len > sigma + slack {
                return Err(Error::input("offsets", format!("offset of length {len} exceeds sigma {sigma}")));
            }
        }
        let w = T::one() / T::lit(offsets.len() as f64);
        let weights = vec![w; offsets.len()];
        Ok(SmoothingSpec { sigma, offsets, weights })
    }

    pub fn dim(&self) -> usize {
        self.offsets[0].len()
    }
}

/// Measures that can be convolved with a [`SmoothingSpec`].
pub trait Smoothable<T: Scalar>: Sized {
    fn smooth(&self, spec: &SmoothingSpec<T>) -> Result<Self>;
}

impl<T: Scalar> Smoothable<T> for DiscreteMeasure<T> {
    fn smooth(&self, spec: &SmoothingSpec<T>) -> Result<Self> {
        if spec.offsets.is_empty() {
            return Err(Error::input("offsets", "stencil is empty"));
        }
        if spec.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: spec.dim() });
        }
        let mut atoms = Vec::with_capacity(self.len() * spec.offsets.len());
        let mut weights = Vec::with_capacity(atoms.capacity());
        for (a, &w) in self.atoms().zip(self.weights()) {
            for (o, &v) in spec.offsets.iter().zip(&spec.weights) {
                atoms.push(a.iter().zip(o).map(|(x, d)| *x + *d).collect());
                weights.push(w * v);
            }
        }
        DiscreteMeasure::new(atoms, Some(weights))
    }
}

impl<T: Scalar> Smoothable<T> for ProductMeasure<T> {
    fn smooth(&self, spec: &SmoothingSpec<T>) -> Result<Self> {
        ProductMeasure::new(self.base().smooth(spec)?, self.spec().clone())
    }
}

/// `m * γ^σ`.
pub fn smooth<T: Scalar, M: Smoothable<T>>(m: &M, spec: &SmoothingSpec<T>) -> Result<M> {
    m.smooth(spec)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct StabilityReport<T> {
    pub p: Exponent<T>,
    pub q: Exponent<T>,
    /// `W_p(μ, ν)`.
    pub lower: T,
    /// `W_p(S(ρ; μ), S(ξ; ν))`.
    pub observed: T,
    /// `W_p(ρ, ξ)`.
    pub rho_xi_term: T,
    /// `W_q(μ_i, ν_i)` per block.
    pub marginal_terms: Vec<T>,
    /// `None` when `p` is 1 or infinite.
    pub theta: Option<ThetaSpec<T>>,
    pub slack_lower: T,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn lower_bound_holds(&self) -> bool {
        self.slack_lower.as_f64() >= -LOWER_BOUND_TOL
    }

    /// `W_q(μ, ν)` with the blocks combined in `ℓ_q`.
    pub fn marginal_distance(&self) -> T {
        self.q.aggregate(self.marginal_terms.iter().copied())
    }

    /// `Σ_i W_q(μ_i, ν_i)^θ`.
    pub fn theta_sum(&self) -> Option<T> {
        self.theta.map(|t| self.marginal_terms.iter().map(|w| w.powf(t.theta)).sum())
    }

    /// Smallest constant consistent with the upper bound on this instance:
    /// `max(observed − W_p(ρ, ξ), 0) / Σ_i W_q(μ_i, ν_i)^θ`. Reporting only.
    pub fn ratio(&self) -> Option<T> {
        let denom = self.theta_sum()?;
        let excess = (self.observed - self.rho_xi_term).max(T::zero());
        if denom.as_f64() < RATIO_GUARD {
            return if excess.as_f64() < RATIO_GUARD { Some(T::zero()) } else { Some(T::infinity()) };
        }
        Some(excess / denom)
    }
}

#[derive(Clone, Debug)]
pub struct StabilityOptions<T> {
    pub delta: T,
    pub shadow: ShadowOptions,
}

impl<T: Scalar> Default for StabilityOptions<T> {
    fn default() -> Self {
        StabilityOptions { delta: T::lit(DEFAULT_DELTA), shadow: ShadowOptions::default() }
    }
}

fn shadow_pair<T: Scalar>(
    rho: &ProductMeasure<T>,
    xi: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    nu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    options: &ShadowOptions,
) -> Result<(ShadowResult<T>, ShadowResult<T>)> {
    let (a, b) = rayon::join(
        || compose_shadow_with(rho, mu, spec, options),
        || compose_shadow_with(xi, nu, spec, options),
    );
    Ok((a?, b?))
}

fn report_from_parts<T: Scalar>(
    s: &ShadowResult<T>,
    t: &ShadowResult<T>,
    rho_xi_term: T,
    mu: &MarginalVector<T>,
    nu: &MarginalVector<T>,
    spec: &MetricSpec<T>,
    q: Exponent<T>,
    delta: T,
) -> Result<StabilityReport<T>> {
    let lower = marginal_vector_distance(mu, nu, spec)?;
    let observed = ot::wasserstein(s.shadow.base(), t.shadow.base(), spec)?;
    let qspec = spec.with_p(q);
    let marginal_terms = (0..spec.blocks())
        .map(|i| ot::wasserstein(mu.get(i), nu.get(i), &qspec.block(i)))
        .collect::<Result<Vec<T>>>()?;
    Ok(StabilityReport {
        p: spec.p,
        q,
        lower,
        observed,
        rho_xi_term,
        marginal_terms,
        theta: theta_for(spec.p, delta),
        slack_lower: observed - lower,
    })
}

/// Computes the report without judging it.
pub fn evaluate_stability<T: Scalar>(
    rho: &ProductMeasure<T>,
    xi: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    nu: &MarginalVector<T>,
    p: Exponent<T>,
    q: Exponent<T>,
    options: &StabilityOptions<T>,
) -> Result<StabilityReport<T>> {
    let spec = rho.spec().with_p(p);
    if xi.spec().block_dims() != spec.block_dims() {
        return Err(Error::input("xi", "block structure differs from rho"));
    }
    let (s, t) = shadow_pair(rho, xi, mu, nu, &spec, &options.shadow)?;
    let rho_xi_term = ot::wasserstein(rho.base(), xi.base(), &spec)?;
    report_from_parts(&s, &t, rho_xi_term, mu, nu, &spec, q, options.delta)
}

/// Both canonical shadows, the three distance groups, and the lower-bound
/// check `W_p(μ, ν) ≤ W_p(S(ρ; μ), S(ξ; ν))`; a violation is an
/// [`Error::Assertion`].
pub fn stability_report<T: Scalar>(
    rho: &ProductMeasure<T>,
    xi: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    nu: &MarginalVector<T>,
    p: Exponent<T>,
    q: Exponent<T>,
) -> Result<StabilityReport<T>> {
    let report = evaluate_stability(rho, xi, mu, nu, p, q, &StabilityOptions::default())?;
    if !report.lower_bound_holds() {
        return Err(Error::Assertion(format!(
            "lower bound violated: W_p(mu, nu) = {} > observed {}",
            report.lower, report.observed
        )));
    }
    Ok(report)
}

/// One random instance of the lower-bound batch.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct BatchRow<T> {
    pub instance: usize,
    pub seed: u64,
    pub report: StabilityReport<T>,
}

/// Random `(ρ, ξ, μ, ν)` instances on `blocks` one-dimensional blocks, every
/// pair of `ps × qs` evaluated on each. Instance `k` uses seed `mix(seed, k)`.
pub fn random_stability_batch<T: Scalar>(
    instances: usize,
    seed: u64,
    ps: &[Exponent<T>],
    qs: &[Exponent<T>],
    blocks: usize,
    max_atoms: usize,
) -> Result<Vec<BatchRow<T>>> {
    let options = StabilityOptions::default();
    let rows: Vec<Vec<BatchRow<T>>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let s = mix_seed(seed, &[k as u64]);
            let mut stream = Stream::new(s);
            let lattice = k % 2 == 1;
            let p0 = ps.first().copied().unwrap_or(Exponent::Finite(T::lit(2.0)));
            let (rho, mu, _) = random_projection_instance(&mut stream, p0, blocks, max_atoms, lattice)?;
            let (xi, nu, _) = random_projection_instance(&mut stream, p0, blocks, max_atoms, lattice)?;
            let mut out = Vec::with_capacity(ps.len() * qs.len());
            for &p in ps {
                for &q in qs {
                    let report = evaluate_stability(&rho, &xi, &mu, &nu, p, q, &options)?;
                    out.push(BatchRow { instance: k, seed: s, report });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonexpansiveReport<T> {
    /// `W_p(S(ρ; μ), S(ξ; μ))`.
    pub shadow_distance: T,
    /// `W_p(ρ, ξ)`.
    pub input_distance: T,
    /// `None` when `W_p(ρ, ξ) < 1e-12`.
    pub ratio: Option<T>,
    /// Both distances vanish.
    pub exact_zero: bool,
}

/// `W_p(S(ρ; μ), S(ξ; μ)) / W_p(ρ, ξ)` for the canonical shadows. A diagnostic:
/// only the existence of some shadow pair with ratio at most one is known.
pub fn nonexpansive_diagnostic<T: Scalar>(
    rho: &ProductMeasure<T>,
    xi: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    p: Exponent<T>,
) -> Result<NonexpansiveReport<T>> {
    let spec = rho.spec().with_p(p);
    let (s, t) = shadow_pair(rho, xi, mu, mu, &spec, &ShadowOptions::default())?;
    let shadow_distance = ot::wasserstein(s.shadow.base(), t.shadow.base(), &spec)?;
    let input_distance = ot::wasserstein(rho.base(), xi.base(), &spec)?;
    let guarded = input_distance.as_f64() < RATIO_GUARD;
    Ok(NonexpansiveReport {
        shadow_distance,
        input_distance,
        ratio: if guarded { None } else { Some(shadow_distance / input_distance) },
        exact_zero: guarded && shadow_distance.as_f64() < RATIO_GUARD,
    })
}

/// One scale of a slope experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderPoint<T> {
    pub t: T,
    /// Perturbation size (horizontal axis).
    pub input: T,
    /// Response (vertical axis).
    pub output: T,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct HolderFit<T> {
    /// All scales, sorted by `t`.
    pub points: Vec<HolderPoint<T>>,
    /// `(log input, log output)` for the points where both are positive.
    pub log_pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub stderr: f64,
    /// `log10(max input / min input)` over the fitted points.
    pub decades: f64,
    /// Per-scale reports (empty for the map experiment).
    pub reports: Vec<StabilityReport<T>>,
}

fn fit_points<T: Scalar>(points: Vec<HolderPoint<T>>, reports: Vec<StabilityReport<T>>) -> Result<HolderFit<T>> {
    let log_pairs: Vec<(f64, f64)> = points
        .iter()
        .filter(|pt| pt.input.as_f64() > RATIO_GUARD && pt.output.as_f64() > RATIO_GUARD)
        .map(|pt| (pt.input.as_f64().ln(), pt.output.as_f64().ln()))
        .collect();
    if log_pairs.len() < 3 {
        return Err(Error::Degenerate(format!(
            "only {} scales with nonzero distances; a slope needs 3",
            log_pairs.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = log_pairs.iter().copied().unzip();
    let LinearFit { slope, intercept, stderr, r2 } = least_squares(&xs, &ys)?;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(HolderFit {
        points,
        log_pairs,
        slope,
        intercept,
        r2,
        stderr,
        decades: (hi - lo) / std::f64::consts::LN_10,
        reports,
    })
}

fn sorted_scales<T: Scalar>(scales: &[T]) -> Result<Vec<T>> {
    if scales.iter().any(|t| !t.is_finite()) {
        return Err(Error::input("scales", "non-finite scale"));
    }
    let mut s = scales.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(s)
}

/// Fits `log W_p(S(ρ; μ), S(ρ; ν_t))` against `log W_q(μ, ν_t)` over `scales`.
pub fn holder_experiment<T, F>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    family: F,
    p: Exponent<T>,
    q: Exponent<T>,
    scales: &[T],
) -> Result<HolderFit<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<MarginalVector<T>> + Sync,
{
    let spec = rho.spec().with_p(p);
    let options = ShadowOptions::default();
    let base = compose_shadow_with(rho, mu, &spec, &options)?;
    let delta = T::lit(DEFAULT_DELTA);
    let scales = sorted_scales(scales)?;
    let reports: Vec<StabilityReport<T>> = scales
        .par_iter()
        .map(|&t| {
            let nu = family(t)?;
            let moved = compose_shadow_with(rho, &nu, &spec, &options)?;
            report_from_parts(&base, &moved, T::zero(), mu, &nu, &spec, q, delta)
        })
        .collect::<Result<_>>()?;
    let points = scales
        .iter()
        .zip(&reports)
        .map(|(&t, r)| HolderPoint { t, input: r.marginal_distance(), output: r.observed })
        .collect();
    fit_points(points, reports)
}

/// `t ↦ μ` with every component translated by `t` along each axis.
pub fn translation_family<T: Scalar>(mu: &MarginalVector<T>) -> impl Fn(T) -> Result<MarginalVector<T>> + Sync + '_ {
    move |t| mu.map(|m| m.translate(&vec![t; m.dim()]))
}

/// `t ↦ μ` with mass `t` moved from atom `from` to atom `to` in every component.
pub fn mass_swap_family<T: Scalar>(
    mu: &MarginalVector<T>,
    from: usize,
    to: usize,
) -> impl Fn(T) -> Result<MarginalVector<T>> + Sync + '_ {
    move |t| {
        mu.map(|m| {
            if from >= m.len() || to >= m.len() {
                return Err(Error::Index { index: from.max(to), len: m.len() });
            }
            if t > m.weight(from) {
                return Err(Error::input("t", format!("cannot move {t} from an atom of mass {}", m.weight(from))));
            }
            let mut w = m.weights().to_vec();
            w[from] -= t;
            w[to] += t;
            m.reweight(w)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapStability<T> {
    /// `‖T_μ − T_ν‖_{L²(λ)}`.
    pub lhs: T,
    /// `W_1(μ, ν)`.
    pub rhs_base: T,
}

fn map_on_grid<T: Scalar>(lambda: &DiscreteMeasure<T>, m: &DiscreteMeasure<T>, spec: &MetricSpec<T>) -> Result<Vec<Vec<T>>> {
    let plan = ot::solve(m, lambda, spec)?.plan;
    let map = ot::barycentric_map(&plan);
    if !map.excluded.is_empty() {
        return Err(Error::input("lambda", "grid has atoms without mass"));
    }
    Ok(map.points.into_iter().map(|(_, x)| x).collect())
}

/// Barycentric maps `T_μ`, `T_ν` from optimal plans out of the grid `λ`,
/// their `L²(λ)` distance and `W_1(μ, ν)`.
pub fn map_stability_experiment<T: Scalar>(
    lambda: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: Exponent<T>,
) -> Result<MapStability<T>> {
    if p.is_infinite() {
        return Err(Error::input("p", "map experiment needs a finite exponent"));
    }
    let spec = MetricSpec::single(p, lambda.dim())?;
    let tm = map_on_grid(lambda, mu, &spec)?;
    let tn = map_on_grid(lambda, nu, &spec)?;
    let sq = tm.iter().zip(&tn).zip(lambda.weights()).map(|((a, b), &w)| {
        w * a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>()
    });
    let lhs = crate::scalar::compensated_sum(sq).max(T::zero()).sqrt();
    let rhs_base = ot::wasserstein(mu, nu, &spec.with_p(Exponent::Finite(T::one())))?;
    Ok(MapStability { lhs, rhs_base })
}

/// Slope of `log lhs` against `log W_1(μ, ν_t)` over a shrinking family.
pub fn map_stability_sweep<T, F>(
    lambda: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    family: F,
    p: Exponent<T>,
    scales: &[T],
) -> Result<HolderFit<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<DiscreteMeasure<T>> + Sync,
{
    let scales = sorted_scales(scales)?;
    let points = scales
        .par_iter()
        .map(|&t| {
            let r = map_stability_experiment(lambda, mu, &family(t)?, p)?;
            Ok(HolderPoint { t, input: r.rhs_base, output: r.lhs })
        })
        .collect::<Result<Vec<_>>>()?;
    fit_points(points, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{grid_measure, reference_instance};
    use approx::assert_abs_diff_eq;

    fn e(p: f64) -> Exponent<f64> {
        Exponent::Finite(p)
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_of(2.0, 0.01).unwrap().theta, 1.0 / 6.0);
        assert_eq!(theta_of(3.0, 0.01).unwrap().theta, 1.0 / 12.0);
        let t = theta_of(1.5f64, 0.01).unwrap().theta;
        assert!((t - 0.99 * 0.25 / 3.75).abs() < 1e-15);
        assert!((t - 0.066).abs() < 1e-15);
        assert!(theta_of(1.0, 0.01).is_err());
        assert!(theta_of(0.5, 0.01).is_err());
        assert!(theta_of(1.5, 1.0).is_err());
    }

    #[test]
    fn theta_decreasing_and_in_unit_interval() {
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let p = 2.0 + 0.25 * k as f64;
            let t = theta_of(p, 0.01).unwrap().theta;
            assert!(t < prev && t > 0.0 && t < 1.0);
            prev = t;
        }
        for k in 1..20 {
            let t = theta_of(1.0 + 0.05 * k as f64, 0.01).unwrap().theta;
            assert!(t > 0.0 && t < 1.0);
        }
    }

    #[test]
    fn smoothing_examples() {
        let d = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let s = smooth(&d, &SmoothingSpec::axis(0.5, 1).unwrap()).unwrap();
        assert_eq!(s.len(), 3);
        for x in [-0.5, 0.0, 0.5] {
            let i = s.find(&[x]).unwrap();
            assert_abs_diff_eq!(s.weight(i), 1.0 / 3.0, epsilon = 1e-15);
        }
        let id = SmoothingSpec::custom(0.5, vec![vec![0.0]], e(2.0)).unwrap();
        let m = DiscreteMeasure::on_line(&[0.0, 1.0], Some(vec![0.3, 0.7])).unwrap();
        assert_eq!(smooth(&m, &id).unwrap(), m);
        assert!(SmoothingSpec::<f64>::custom(0.5, vec![], e(2.0)).is_err());
        assert!(SmoothingSpec::custom(0.5, vec![vec![0.6]], e(2.0)).is_err());
    }

    #[test]
    fn smoothing_is_nonexpansive_on_random_pairs() {
        let mut s = Stream::new(3);
        let spec = MetricSpec::single(e(2.0), 2).unwrap();
        let st = SmoothingSpec::axis(0.1, 2).unwrap();
        for _ in 0..20 {
            let a = crate::instances::random_measure::<f64>(&mut s, 4, 2).unwrap();
            let b = crate::instances::random_measure::<f64>(&mut s, 4, 2).unwrap();
            let before = ot::wasserstein(&a, &b, &spec).unwrap();
            let after = ot::wasserstein(&smooth(&a, &st).unwrap(), &smooth(&b, &st).unwrap(), &spec).unwrap();
            assert!(after <= before + 1e-9, "{after} > {before}");
        }
    }

    fn three_atom() -> (ProductMeasure<f64>, MarginalVector<f64>, MetricSpec<f64>) {
        let spec = MetricSpec::new(e(2.0), vec![1, 1]).unwrap();
        let rho = ProductMeasure::new(
            DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![0.5, 1.0], vec![1.0, 0.5]], Some(vec![0.3, 0.3, 0.4]))
                .unwrap(),
            spec.clone(),
        )
        .unwrap();
        let mu = MarginalVector::new(
            vec![
                DiscreteMeasure::on_line(&[0.0, 1.0], Some(vec![0.5, 0.5])).unwrap(),
                DiscreteMeasure::on_line(&[0.2, 0.8], Some(vec![0.4, 0.6])).unwrap(),
            ],
            &spec,
        )
        .unwrap();
        (rho, mu, spec)
    }

    #[test]
    fn report_trivial_and_perturbed() {
        let (rho, mu, _) = three_atom();
        let r = stability_report(&rho, &rho, &mu, &mu, e(2.0), e(1.0)).unwrap();
        assert_eq!(r.lower, 0.0);
        assert!(r.observed.abs() < 1e-12);
        assert!(r.slack_lower.abs() < 1e-12);

        let nu = translation_family(&mu)(0.1).unwrap();
        let r = stability_report(&rho, &rho, &mu, &nu, e(2.0), e(2.0)).unwrap();
        // Independent value: each block moves by 0.1 exactly.
        assert_abs_diff_eq!(r.lower, (2.0f64 * 0.01).sqrt(), epsilon = 1e-12);
        assert!(r.lower <= r.observed + 1e-9);
        assert_abs_diff_eq!(r.marginal_terms[0], 0.1, epsilon = 1e-12);
        assert_eq!(r.rho_xi_term, 0.0);

        let xi = ProductMeasure::new(rho.base().translate(&[0.05, 0.0]).unwrap(), rho.spec().clone()).unwrap();
        let r = stability_report(&rho, &xi, &mu, &mu, e(1.5), Exponent::Infinite).unwrap();
        assert_eq!(r.lower, 0.0);
        assert!(r.observed >= 0.0);
        assert_abs_diff_eq!(r.rho_xi_term, 0.05, epsilon = 1e-12);
        assert_eq!(r.ratio(), Some(0.0));
    }

    #[test]
    fn batch_lower_bound() {
        let rows =
            random_stability_batch(10, 99, &[e(1.5), e(2.0)], &[e(1.0), e(2.0), Exponent::Infinite], 2, 4).unwrap();
        assert_eq!(rows.len(), 60);
        assert!(rows.iter().all(|r| r.report.lower_bound_holds()));
    }

    #[test]
    fn nonexpansive_examples() {
        let (rho, mu, _) = three_atom();
        let r = nonexpansive_diagnostic(&rho, &rho, &mu, e(2.0)).unwrap();
        assert!(r.ratio.is_none() && r.exact_zero);

        // μ equal to the marginals of both: shadows are ρ and ξ themselves.
        let swapped = ProductMeasure::new(
            DiscreteMeasure::new(vec![vec![0.0, 1.0], vec![0.5, 0.0], vec![1.0, 0.5]], Some(vec![0.3, 0.3, 0.4]))
                .unwrap(),
            rho.spec().clone(),
        )
        .unwrap();
        let r = nonexpansive_diagnostic(&rho, &swapped, &rho.marginals().unwrap(), e(2.0)).unwrap();
        assert_abs_diff_eq!(r.ratio.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nonexpansive_on_smooth_grids() {
        let p = e(2.0);
        let rho = grid_measure(8, 8, p, |x, y| 1.0 + 0.3 * x * y).unwrap();
        let xi = grid_measure(8, 8, p, |x, y| 1.2 - 0.3 * (x - y).abs()).unwrap();
        let (_, mu, _) = reference_instance::<f64>(p).unwrap();
        let r = nonexpansive_diagnostic(&rho, &xi, &mu, p).unwrap();
        assert!(r.ratio.unwrap() <= 1.05, "{r:?}");
    }

    #[test]
    fn holder_translation_slope_is_one() {
        let p = e(2.0);
        let (rho, mu, _) = reference_instance::<f64>(p).unwrap();
        let scales: Vec<f64> = (0..6).map(|k| 0.002 * 2f64.powi(k)).collect();
        let fit = holder_experiment(&rho, &mu, translation_family(&mu), p, e(1.0), &scales).unwrap();
        assert!(fit.decades >= 1.5);
        assert!((fit.slope - 1.0).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn holder_degenerate_family() {
        let (rho, mu, _) = reference_instance::<f64>(e(2.0)).unwrap();
        let err = holder_experiment(&rho, &mu, |_| Ok(mu.clone()), e(2.0), e(1.0), &[0.1, 0.2, 0.3]);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn map_experiment_examples() {
        let lambda = DiscreteMeasure::uniform((0..20).map(|i| vec![(i as f64 + 0.5) / 20.0]).collect()).unwrap();
        let mu = DiscreteMeasure::on_line(&[0.1, 0.4, 0.9], Some(vec![0.2, 0.5, 0.3])).unwrap();
        let r = map_stability_experiment(&lambda, &mu, &mu, e(2.0)).unwrap();
        assert_eq!(r.lhs, 0.0);
        let nu = mu.translate(&[0.05]).unwrap();
        let r = map_stability_experiment(&lambda, &mu, &nu, e(2.0)).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs_base, 0.05, epsilon = 1e-12);
        let back = map_stability_experiment(&lambda, &nu, &mu, e(2.0)).unwrap();
        assert!((back.lhs - r.lhs).abs() <= 1e-12);

        let fit = map_stability_sweep(&lambda, &mu, |t| mu.translate(&[t]), e(2.0), &[0.2, 0.1, 0.05, 0.025]).unwrap();
        assert!(fit.slope >= 1.0 / 6.0);
    }
}
