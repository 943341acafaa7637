//! Covering numbers, dimension profiles and sample-complexity experiments.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{least_squares, LinearFit};
use crate::measures::{marginal_vector_distance, DiscreteMeasure, Exponent, MarginalVector, ProductMeasure};
use crate::ot;
use crate::rng::mix_seed;
use crate::scalar::Scalar;
use crate::shadow::{compose_shadow_with, ShadowOptions};
use crate::stability::{theta_of, DEFAULT_DELTA, LOWER_BOUND_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoveringEstimate {
    pub epsilon: f64,
    /// Number of balls of diameter `epsilon` in the greedy net.
    pub n: usize,
    /// `log N / (−log ε)`; zero whenever `N = 1`.
    pub d_eps: f64,
    /// Mass allowed to be discarded.
    pub tau: f64,
    /// Mass actually discarded.
    pub dropped: f64,
}

impl CoveringEstimate {
    fn new(epsilon: f64, n: usize, tau: f64, dropped: f64) -> Self {
        let d_eps = if n == 1 { 0.0 } else { (n as f64).ln() / -epsilon.ln() };
        CoveringEstimate { epsilon, n, d_eps, tau, dropped }
    }
}

/// Greedy net: centre indices plus, for every point, the index (into the
/// centre list) of its nearest centre.
struct Net {
    centers: Vec<usize>,
    assignment: Vec<usize>,
}

fn greedy_net<T: Scalar>(coords: &[T], dim: usize, epsilon: f64, norm: Exponent<T>) -> Net {
    let n = coords.len() / dim;
    let point = |i: usize| &coords[i * dim..(i + 1) * dim];
    let dist = |a: &[T], b: &[T]| norm.aggregate(a.iter().zip(b).map(|(x, y)| (*x - *y).abs())).as_f64();
    let radius = epsilon / 2.0;
    let mut centers = vec![0];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(point(i), point(0))).collect();
    let mut assignment = vec![0; n];
    loop {
        // First index among the farthest points.
        let (far, d) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        if d <= radius {
            break;
        }
        let c = centers.len();
        centers.push(far);
        for i in 0..n {
            let di = dist(point(i), point(far));
            if di < nearest[i] {
                nearest[i] = di;
                assignment[i] = c;
            }
        }
    }
    Net { centers, assignment }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::input("epsilon", format!("must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

/// Greedy farthest-point count of closed balls of diameter `epsilon` (radius
/// `epsilon / 2` around points of the set) needed to cover `points`.
///
/// Every pair of centres is more than `epsilon / 2` apart, so the count is at
/// most the optimal count at diameter `epsilon / 2`; it is an upper bound on the
/// optimum at `epsilon`.
pub fn covering_number<T: Scalar>(points: &[Vec<T>], epsilon: f64, norm: Exponent<T>) -> Result<CoveringEstimate> {
    check_epsilon(epsilon)?;
    let Some(first) = points.first() else {
        return Err(Error::input("points", "empty point set"));
    };
    let dim = first.len();
    let mut coords = Vec::with_capacity(points.len() * dim);
    for p in points {
        if p.len() != dim {
            return Err(Error::Dimension { expected: dim, found: p.len() });
        }
        coords.extend_from_slice(p);
    }
    let net = greedy_net(&coords, dim.max(1), epsilon, norm);
    let n = if dim == 0 { 1 } else { net.centers.len() };
    Ok(CoveringEstimate::new(epsilon, n, 0.0, 0.0))
}

/// Covering with mass `tau` allowed to go uncovered. Runs the greedy net, then
/// repeatedly removes the centre carrying the least mass while the retained
/// mass stays at least `1 − tau`. An upper bound on the optimal count.
pub fn covering_with_mass_drop<T: Scalar>(
    m: &DiscreteMeasure<T>,
    epsilon: f64,
    tau: f64,
    norm: Exponent<T>,
) -> Result<CoveringEstimate> {
    check_epsilon(epsilon)?;
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::input("tau", format!("must lie in [0, 1), got {tau}")));
    }
    let net = greedy_net(m.coords(), m.dim().max(1), epsilon, norm);
    let mut mass = vec![0.0; net.centers.len()];
    for (i, &c) in net.assignment.iter().enumerate() {
        mass[c] += m.weight(i).as_f64();
    }
    let mut alive = vec![true; mass.len()];
    let mut retained: f64 = mass.iter().sum();
    let floor = 1.0 - tau - 1e-12;
    loop {
        let lightest = (0..mass.len())
            .filter(|&c| alive[c])
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if mass[b] <= mass[c] => Some(b),
                _ => Some(c),
            });
        match lightest {
            Some(c) if alive.iter().filter(|a| **a).count() > 1 && retained - mass[c] >= floor => {
                alive[c] = false;
                retained -= mass[c];
            }
            _ => break,
        }
    }
    let n = alive.iter().filter(|a| **a).count();
    Ok(CoveringEstimate::new(epsilon, n, tau, (1.0 - retained).max(0.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionProfile {
    pub estimates: Vec<CoveringEstimate>,
    /// Slope of `log N` against `−log ε`.
    pub fitted_dimension: f64,
    pub fit: Option<LinearFit>,
}

/// `d(ε, τ)` over an `ε` grid and the fitted slope of `log N` against `−log ε`.
/// A constant profile (a single point, say) has dimension zero.
pub fn dimension_profile<T: Scalar>(
    m: &DiscreteMeasure<T>,
    epsilons: &[f64],
    tau: f64,
    norm: Exponent<T>,
) -> Result<DimensionProfile> {
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let estimates = eps
        .par_iter()
        .map(|&e| covering_with_mass_drop(m, e, tau, norm))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = estimates.iter().map(|c| -c.epsilon.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|c| (c.n as f64).ln()).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(DimensionProfile { estimates, fitted_dimension: fit.slope, fit: Some(fit) })
}

/// OLS of log mean distance against log sample size.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    least_squares(xs, ys)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    /// `W_p(S(ρ; μ), S(ρ̂_n; μ̂_m))`.
    pub distance: f64,
    /// `W_p(μ, μ̂_m)`.
    pub lower: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub m: usize,
    pub mean: f64,
    /// Standard error of the mean across trials.
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub cells: Vec<CellSummary>,
    /// Fit against `log n` at the largest `m` (needs three distinct `n`).
    pub n_fit: Option<LinearFit>,
    /// Fit against `log m` at the largest `n`.
    pub m_fit: Option<LinearFit>,
    /// `−1/Σ d_i`.
    pub reference_n_slope: f64,
    /// `−θ(p)/s_i` per block; `None` when `θ(p)` is undefined.
    pub reference_m_slopes: Option<Vec<f64>>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

impl RateTable {
    pub fn cell(&self, n: usize, m: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.m == m)
    }

    pub fn lower_bound_holds(&self) -> bool {
        self.rows.iter().all(|r| r.distance - r.lower >= -LOWER_BOUND_TOL)
    }

    /// Cells with `n = m`, in increasing size.
    pub fn diagonal(&self) -> Vec<CellSummary> {
        self.cells.iter().filter(|c| c.n == c.m).copied().collect()
    }

    /// Whether the diagonal means never increase by more than one pooled
    /// standard error from one size to the next.
    pub fn diagonal_nonincreasing(&self) -> bool {
        self.diagonal().windows(2).all(|w| w[1].mean <= w[0].mean + w[0].stderr.hypot(w[1].stderr))
    }
}

#[derive(Clone, Debug)]
pub struct RateOptions {
    pub shadow: ShadowOptions,
    /// Defaults to `d_i + 0.5`.
    pub s: Option<Vec<f64>>,
    /// Defaults to `d_i`.
    pub t: Option<Vec<f64>>,
    pub delta: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { shadow: ShadowOptions::default(), s: None, t: None, delta: DEFAULT_DELTA }
    }
}

/// Seed for one trial: `mix(base, n, m, trial)`. Inside a trial `ρ̂_n` uses
/// `mix(seed, 0)` and `μ̂_{i,m}` uses `mix(seed, i + 1)`.
pub fn trial_seed(base: u64, n: usize, m: usize, trial: usize) -> u64 {
    mix_seed(base, &[n as u64, m as u64, trial as u64])
}

fn summarize(rows: &[RateRow], n: usize, m: usize) -> CellSummary {
    let d: Vec<f64> = rows.iter().filter(|r| r.n == n && r.m == m).map(|r| r.distance).collect();
    let k = d.len() as f64;
    let mean = d.iter().sum::<f64>() / k;
    let var = if d.len() > 1 { d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    CellSummary { n, m, mean, stderr: (var / k).sqrt() }
}

fn fit_line(cells: &[&CellSummary], size: impl Fn(&CellSummary) -> usize) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.mean > 0.0)
        .map(|c| ((size(c) as f64).ln(), c.mean.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    rate_fit(&xs, &ys).ok()
}

/// Distances between the shadow of `ρ` onto `μ` and the shadows of empirical
/// `ρ̂_n` onto empirical `μ̂_m`, for every `(n, m, trial)`.
pub fn sample_complexity_experiment<T: Scalar>(
    rho: &ProductMeasure<T>,
    mu: &MarginalVector<T>,
    n_grid: &[usize],
    m_grid: &[usize],
    trials: usize,
    base_seed: u64,
    p: Exponent<T>,
    options: &RateOptions,
) -> Result<RateTable> {
    if n_grid.is_empty() || m_grid.is_empty() || trials == 0 {
        return Err(Error::input("grid", "n_grid, m_grid and trials must be nonempty"));
    }
    if n_grid.contains(&0) || m_grid.contains(&0) {
        return Err(Error::input("grid", "sample sizes must be positive"));
    }
    let mut n_grid = n_grid.to_vec();
    let mut m_grid = m_grid.to_vec();
    n_grid.sort_unstable();
    n_grid.dedup();
    m_grid.sort_unstable();
    m_grid.dedup();

    let spec = rho.spec().with_p(p);
    let base = compose_shadow_with(rho, mu, &spec, &options.shadow)?;
    let mut jobs = Vec::new();
    for &n in &n_grid {
        for &m in &m_grid {
            for trial in 0..trials {
                jobs.push((n, m, trial));
            }
        }
    }
    let mut rows: Vec<RateRow> = jobs
        .par_iter()
        .map(|&(n, m, trial)| {
            let seed = trial_seed(base_seed, n, m, trial);
            let rho_n = rho.sample_empirical(n, mix_seed(seed, &[0]))?;
            let mu_m = MarginalVector::new(
                (0..mu.len())
                    .map(|i| mu.get(i).sample_empirical(m, mix_seed(seed, &[i as u64 + 1])))
                    .collect::<Result<_>>()?,
                &spec,
            )?;
            let shadow = compose_shadow_with(&rho_n, &mu_m, &spec, &options.shadow)?;
            let distance = ot::wasserstein(base.shadow.base(), shadow.shadow.base(), &spec)?.as_f64();
            let lower = marginal_vector_distance(mu, &mu_m, &spec)?.as_f64();
            Ok(RateRow { n, m, trial, seed, distance, lower })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.m, r.trial));

    let cells: Vec<CellSummary> =
        n_grid.iter().flat_map(|&n| m_grid.iter().map(move |&m| (n, m))).map(|(n, m)| summarize(&rows, n, m)).collect();
    let n_max = *n_grid.last().expect("nonempty");
    let m_max = *m_grid.last().expect("nonempty");
    let at_m: Vec<&CellSummary> = cells.iter().filter(|c| c.m == m_max).collect();
    let at_n: Vec<&CellSummary> = cells.iter().filter(|c| c.n == n_max).collect();

    let dims = spec.block_dims().to_vec();
    let s = options.s.clone().unwrap_or_else(|| dims.iter().map(|&d| d as f64 + 0.5).collect());
    let t = options.t.clone().unwrap_or_else(|| dims.iter().map(|&d| d as f64).collect());
    if s.len() != dims.len() || t.len() != dims.len() {
        return Err(Error::input("s", "one rate exponent per block is required"));
    }
    let theta = p.finite().and_then(|p| theta_of(p.as_f64(), options.delta).ok());
    Ok(RateTable {
        n_fit: fit_line(&at_m, |c| c.n),
        m_fit: fit_line(&at_n, |c| c.m),
        reference_n_slope: -1.0 / dims.iter().sum::<usize>() as f64,
        reference_m_slopes: theta.map(|th| s.iter().map(|si| -th.theta / si).collect()),
        rows,
        cells,
        s,
        t,
    })
}
