//! Seeded instance generators and the reference grid instances used by the
//! experiments.

use crate::error::Result;
use crate::measures::{DiscreteMeasure, Exponent, MarginalVector, MetricSpec, ProductMeasure};
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Positive random weights summing to one (uniform draws offset away from zero).
pub fn random_weights<T: Scalar>(stream: &mut Stream, n: usize) -> Vec<T> {
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + stream.uniform()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| T::lit(w / total)).collect()
}

/// Up to `max_atoms` atoms drawn uniformly from `[0, 1]^dim`, with random weights.
pub fn random_measure<T: Scalar>(stream: &mut Stream, max_atoms: usize, dim: usize) -> Result<DiscreteMeasure<T>> {
    let n = 1 + stream.below(max_atoms);
    let atoms = (0..n)
        .map(|_| (0..dim).map(|_| T::lit(stream.uniform())).collect())
        .collect();
    DiscreteMeasure::new(atoms, Some(random_weights(stream, n)))
}

/// Like [`random_measure`] but with coordinates on the lattice `{0, 1/8, …, 1}`,
/// which produces ties in costs and degenerate transport problems.
pub fn random_lattice_measure<T: Scalar>(
    stream: &mut Stream,
    max_atoms: usize,
    dim: usize,
) -> Result<DiscreteMeasure<T>> {
    let n = 1 + stream.below(max_atoms);
    let atoms = (0..n)
        .map(|_| (0..dim).map(|_| T::lit(stream.below(9) as f64 / 8.0)).collect())
        .collect();
    DiscreteMeasure::new(atoms, Some(random_weights(stream, n)))
}

/// Random joint measure and random marginals on `K` one-dimensional blocks.
pub fn random_projection_instance<T: Scalar>(
    stream: &mut Stream,
    p: Exponent<T>,
    blocks: usize,
    max_atoms: usize,
    lattice: bool,
) -> Result<(ProductMeasure<T>, MarginalVector<T>, MetricSpec<T>)> {
    let spec = MetricSpec::new(p, vec![1; blocks])?;
    let draw = |s: &mut Stream, dim| {
        if lattice {
            random_lattice_measure::<T>(s, max_atoms, dim)
        } else {
            random_measure::<T>(s, max_atoms, dim)
        }
    };
    let rho = ProductMeasure::new(draw(stream, blocks)?, spec.clone())?;
    let mu = MarginalVector::new((0..blocks).map(|_| draw(stream, 1)).collect::<Result<_>>()?, &spec)?;
    Ok((rho, mu, spec))
}

/// Midpoints of `n` equal cells of `[0, 1]`.
pub fn cell_centers<T: Scalar>(n: usize) -> Vec<T> {
    (0..n).map(|i| T::lit((i as f64 + 0.5) / n as f64)).collect()
}

/// `nx × ny` grid of cell centres in `[0, 1]²` weighted by `density`
/// (normalized); a discretized density bounded above and below.
pub fn grid_measure<T: Scalar, F>(nx: usize, ny: usize, p: Exponent<T>, density: F) -> Result<ProductMeasure<T>>
where
    F: Fn(f64, f64) -> f64,
{
    let xs: Vec<T> = cell_centers(nx);
    let ys: Vec<T> = cell_centers(ny);
    let mut atoms = Vec::with_capacity(nx * ny);
    let mut raw = Vec::with_capacity(nx * ny);
    for &x in &xs {
        for &y in &ys {
            atoms.push(vec![x, y]);
            raw.push(density(x.as_f64(), y.as_f64()));
        }
    }
    let total: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| T::lit(w / total)).collect();
    ProductMeasure::new(DiscreteMeasure::new(atoms, Some(weights))?, MetricSpec::new(p, vec![1, 1])?)
}

/// Smooth density on `[0, 1]²` with values in `[0.4, 1.6]`.
pub fn reference_density(x: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    1.0 + 0.4 * (PI * x).sin() * (PI * y).cos() + 0.2 * (x - y)
}

/// The reference instance for the rate and Hölder experiments: a 6×6
/// grid density `ρ` and two one-dimensional targets on five atoms each.
pub fn reference_instance<T: Scalar>(p: Exponent<T>) -> Result<(ProductMeasure<T>, MarginalVector<T>, MetricSpec<T>)> {
    let rho = grid_measure(6, 6, p, reference_density)?;
    let spec = rho.spec().clone();
    let pts: Vec<T> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&v| T::lit(v)).collect();
    let mu1 = DiscreteMeasure::on_line(&pts, Some([0.1, 0.2, 0.4, 0.2, 0.1].iter().map(|&w| T::lit(w)).collect()))?;
    let mu2 = DiscreteMeasure::on_line(&pts, Some([0.3, 0.1, 0.2, 0.1, 0.3].iter().map(|&w| T::lit(w)).collect()))?;
    let mu = MarginalVector::new(vec![mu1, mu2], &spec)?;
    Ok((rho, mu, spec))
}
