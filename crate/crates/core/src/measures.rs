//! Finitely supported probability measures on products of Euclidean blocks.

use std::collections::HashMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ot;
use crate::rng::Stream;
use crate::scalar::{compensated_sum, Scalar};

/// Wasserstein / ground exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Exponent<T> {
    pub fn new(p: T) -> Result<Self> {
        if p.is_infinite() && p > T::zero() {
            Ok(Exponent::Infinite)
        } else if p.is_finite() && p >= T::one() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::input("p", format!("exponent must lie in [1, inf], got {p}")))
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `p` as a scalar, `+inf` for the bottleneck exponent.
    pub fn value(self) -> T {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => T::infinity(),
        }
    }

    pub fn cast<U: Scalar>(self) -> Exponent<U> {
        match self {
            Exponent::Finite(p) => Exponent::Finite(U::lit(p.as_f64())),
            Exponent::Infinite => Exponent::Infinite,
        }
    }

    /// `x^p` for finite `p`; identity for `p = ∞`.
    #[inline]
    pub fn raise(self, x: T) -> T {
        match self {
            Exponent::Finite(p) if p == T::one() => x,
            Exponent::Finite(p) if p == T::lit(2.0) => x * x,
            Exponent::Finite(p) => x.powf(p),
            Exponent::Infinite => x,
        }
    }

    /// Inverse of [`Exponent::raise`].
    #[inline]
    pub fn root(self, x: T) -> T {
        match self {
            Exponent::Finite(p) if p == T::one() => x,
            Exponent::Finite(p) if p == T::lit(2.0) => x.sqrt(),
            Exponent::Finite(p) => x.powf(p.recip()),
            Exponent::Infinite => x,
        }
    }

    /// Aggregates per-block quantities: `ℓ_p` combination, or the maximum for `p = ∞`.
    pub fn aggregate<I: IntoIterator<Item = T>>(self, parts: I) -> T {
        match self {
            Exponent::Finite(_) => self.root(compensated_sum(parts.into_iter().map(|x| self.raise(x)))),
            Exponent::Infinite => parts.into_iter().fold(T::zero(), T::max),
        }
    }
}

impl<T: Scalar> fmt::Display for Exponent<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl<T: Scalar> Serialize for Exponent<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(p.as_f64()),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Exponent<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExpVisitor<T>(std::marker::PhantomData<T>);

        impl<T: Scalar> Visitor<'_> for ExpVisitor<T> {
            type Value = Exponent<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number >= 1 or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Exponent::new(T::lit(v)).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
                    other => other
                        .parse::<f64>()
                        .map_err(E::custom)
                        .and_then(|x| self.visit_f64(x)),
                }
            }
        }

        d.deserialize_any(ExpVisitor(std::marker::PhantomData))
    }
}

impl<T: Scalar> std::str::FromStr for Exponent<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(Exponent::Infinite),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::input("p", format!("cannot parse exponent {s:?}")))?;
                Exponent::new(T::lit(p))
            }
        }
    }
}

/// Exponent plus the block split `(d_1, …, d_K)` of the product space.
///
/// The ground metric is the separable product metric: `ℓ_p` within each
/// block, combined across blocks by an `ℓ_p` sum (max for `p = ∞`).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec<T> {
    pub p: Exponent<T>,
    block_dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl<T: Scalar> MetricSpec<T> {
    pub fn new(p: Exponent<T>, block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::input("dims", "at least one block is required"));
        }
        if block_dims.iter().any(|&d| d == 0) {
            return Err(Error::input("dims", "block dimensions must be positive"));
        }
        let mut offsets = Vec::with_capacity(block_dims.len() + 1);
        offsets.push(0);
        for d in &block_dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        Ok(MetricSpec { p, block_dims, offsets })
    }

    /// One block of dimension `dim`.
    pub fn single(p: Exponent<T>, dim: usize) -> Result<Self> {
        Self::new(p, vec![dim])
    }

    pub fn with_p(&self, p: Exponent<T>) -> Self {
        MetricSpec { p, ..self.clone() }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Metric restricted to block `i`.
    pub fn block(&self, i: usize) -> Self {
        MetricSpec::single(self.p, self.block_dims[i]).expect("block dims validated")
    }

    /// `d(x, y)^p` for finite `p`, `d(x, y)` for `p = ∞`; no dimension checks.
    #[inline]
    pub(crate) fn cost(&self, x: &[T], y: &[T]) -> T {
        match self.p {
            Exponent::Finite(p) => {
                let mut acc = T::zero();
                if p == T::one() {
                    for (a, b) in x.iter().zip(y) {
                        acc += (*a - *b).abs();
                    }
                } else if p == T::lit(2.0) {
                    for (a, b) in x.iter().zip(y) {
                        let d = *a - *b;
                        acc += d * d;
                    }
                } else {
                    for (a, b) in x.iter().zip(y) {
                        acc += (*a - *b).abs().powf(p);
                    }
                }
                acc
            }
            Exponent::Infinite => x
                .iter()
                .zip(y)
                .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())),
        }
    }
}

/// Separable product distance between two points of the space described by `spec`.
pub fn ground_distance<T: Scalar>(x: &[T], y: &[T], spec: &MetricSpec<T>) -> Result<T> {
    let n = spec.total_dim();
    for v in [x, y] {
        if v.len() != n {
            return Err(Error::Dimension { expected: n, found: v.len() });
        }
    }
    Ok(spec.p.root(spec.cost(x, y)))
}

/// Probability measure with finitely many distinct atoms.
///
/// Atoms are stored flat and in construction order (first occurrence wins
/// when duplicates are merged); every weight is strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    dim: usize,
    coords: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    /// Builds a measure from atoms and optional weights (uniform when `None`).
    ///
    /// Duplicate atoms (exact coordinate equality) are merged. A total mass
    /// within [`Scalar::MASS_TOL`] of one is renormalized, anything else is rejected.
    pub fn new(atoms: Vec<Vec<T>>, weights: Option<Vec<T>>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::input("atoms", "measure needs at least one atom"))?;
        if dim == 0 {
            return Err(Error::input("atoms", "atoms must have at least one coordinate"));
        }
        let n = atoms.len();
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::input(
                        "weights",
                        format!("{} weights for {} atoms", w.len(), n),
                    ));
                }
                if let Some((i, w)) = w.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > T::zero())) {
                    return Err(Error::input("weights", format!("weight {i} is {w}, must be positive")));
                }
                w
            }
            None => vec![T::one() / T::lit(n as f64); n],
        };
        let mut coords = Vec::with_capacity(n * dim);
        for (i, a) in atoms.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::Dimension { expected: dim, found: a.len() });
            }
            if a.iter().any(|c| !c.is_finite()) {
                return Err(Error::input("atoms", format!("atom {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(a);
        }
        Self::from_flat(dim, coords, weights)
    }

    pub fn dirac(point: Vec<T>) -> Result<Self> {
        Self::new(vec![point], None)
    }

    pub fn uniform(atoms: Vec<Vec<T>>) -> Result<Self> {
        Self::new(atoms, None)
    }

    /// One-dimensional measure on `points`.
    pub fn on_line(points: &[T], weights: Option<Vec<T>>) -> Result<Self> {
        Self::new(points.iter().map(|&x| vec![x]).collect(), weights)
    }

    /// Flat constructor: merges duplicates, validates and renormalizes.
    pub(crate) fn from_flat(dim: usize, coords: Vec<T>, weights: Vec<T>) -> Result<Self> {
        debug_assert_eq!(coords.len(), dim * weights.len());
        let total = compensated_sum(weights.iter().copied());
        if (total - T::one()).abs().as_f64() > T::MASS_TOL || !total.is_finite() {
            return Err(Error::input(
                "weights",
                format!("weights sum to {total}, expected 1 within {:e}", T::MASS_TOL),
            ));
        }
        let mut m = Self::merge(dim, &coords, &weights);
        let total = compensated_sum(m.weights.iter().copied());
        if total != T::one() {
            for w in &mut m.weights {
                *w /= total;
            }
        }
        Ok(m)
    }

    /// Builds from nonnegative masses, dropping zeros. Used for pushforwards
    /// whose total mass is one up to rounding.
    pub(crate) fn from_masses(dim: usize, coords: &[T], masses: &[T]) -> Result<Self> {
        let mut c = Vec::with_capacity(coords.len());
        let mut w = Vec::with_capacity(masses.len());
        for (i, &m) in masses.iter().enumerate() {
            if m > T::zero() {
                c.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                w.push(m);
            }
        }
        if w.is_empty() {
            return Err(Error::input("weights", "no positive mass"));
        }
        Self::from_flat(dim, c, w)
    }

    fn merge(dim: usize, coords: &[T], weights: &[T]) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(weights.len());
        let mut out_coords = Vec::with_capacity(coords.len());
        let mut parts: Vec<Vec<T>> = Vec::with_capacity(weights.len());
        for (i, &w) in weights.iter().enumerate() {
            let atom = &coords[i * dim..(i + 1) * dim];
            let key: Vec<u64> = atom.iter().map(|c| c.canonical_key()).collect();
            match index.get(&key) {
                Some(&j) => parts[j].push(w),
                None => {
                    index.insert(key, parts.len());
                    out_coords.extend(atom.iter().map(|&c| if c == T::zero() { T::zero() } else { c }));
                    parts.push(vec![w]);
                }
            }
        }
        let weights = parts.into_iter().map(compensated_sum).collect();
        DiscreteMeasure { dim, coords: out_coords, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn total_mass(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    /// Index of an atom with exactly these coordinates.
    pub fn find(&self, point: &[T]) -> Option<usize> {
        self.atoms().position(|a| {
            a.iter().zip(point).all(|(x, y)| x.canonical_key() == y.canonical_key())
        })
    }

    /// Coordinatewise `(min, max)` of the support; recorded as compact-domain metadata.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let mut lo = vec![T::infinity(); self.dim];
        let mut hi = vec![T::neg_infinity(); self.dim];
        for a in self.atoms() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(a[k]);
            }
        }
        (lo, hi)
    }

    /// Pushforward under `f`, which maps each atom to a point of dimension `dim`.
    pub fn pushforward<F>(&self, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        let mut coords = Vec::with_capacity(self.len() * dim);
        for a in self.atoms() {
            let y = f(a);
            if y.len() != dim {
                return Err(Error::Dimension { expected: dim, found: y.len() });
            }
            coords.extend(y);
        }
        Self::from_flat(dim, coords, self.weights.clone())
    }

    /// Same atoms translated by `shift`.
    pub fn translate(&self, shift: &[T]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: shift.len() });
        }
        self.pushforward(self.dim, |a| a.iter().zip(shift).map(|(x, s)| *x + *s).collect())
    }

    /// Same atoms, new weights (same order).
    pub fn reweight(&self, weights: Vec<T>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::input("weights", "length must match atom count"));
        }
        let atoms = self.atoms().map(<[T]>::to_vec).collect();
        Self::new(atoms, Some(weights))
    }

    /// Empirical measure of `n` i.i.d. draws (see [`sample_indices`]).
    pub fn sample_empirical(&self, n: usize, seed: u64) -> Result<Self> {
        let draws = sample_indices(&self.weights, n, seed)?;
        Ok(self.empirical_from_draws(&draws))
    }

    pub(crate) fn empirical_from_draws(&self, draws: &[usize]) -> Self {
        let mut counts = vec![0usize; self.len()];
        for &d in draws {
            counts[d] += 1;
        }
        let n = T::lit(draws.len() as f64);
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                coords.extend_from_slice(self.atom(i));
                weights.push(T::lit(c as f64) / n);
            }
        }
        Self::from_flat(self.dim, coords, weights).expect("counts sum to n")
    }

    pub fn cast<U: Scalar>(&self) -> DiscreteMeasure<U> {
        let coords = self.coords.iter().map(|c| U::lit(c.as_f64())).collect();
        let weights = self.weights.iter().map(|w| U::lit(w.as_f64())).collect();
        DiscreteMeasure::from_flat(self.dim, coords, weights).expect("cast preserves validity")
    }
}

/// Total variation distance, matching atoms by exact coordinates.
pub fn total_variation<T: Scalar>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> T {
    let key = |x: &[T]| x.iter().map(|c| c.canonical_key()).collect::<Vec<u64>>();
    let mut diff: HashMap<Vec<u64>, T> = HashMap::new();
    for (x, &w) in a.atoms().zip(a.weights()) {
        *diff.entry(key(x)).or_insert(T::zero()) += w;
    }
    for (x, &w) in b.atoms().zip(b.weights()) {
        *diff.entry(key(x)).or_insert(T::zero()) -= w;
    }
    let mut parts: Vec<(Vec<u64>, T)> = diff.into_iter().collect();
    parts.sort_by(|l, r| l.0.cmp(&r.0));
    compensated_sum(parts.into_iter().map(|(_, d)| d.abs())) / T::lit(2.0)
}

/// `n` inverse-CDF draws over the weights in list order.
///
/// Each draw consumes one uniform from a [`Stream`] seeded with `seed` and
/// returns the first index whose cumulative weight exceeds it.
pub fn sample_indices<T: Scalar>(weights: &[T], n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::input("n", "sample size must be at least 1"));
    }
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0f64;
    for w in weights {
        acc += w.as_f64();
        cdf.push(acc);
    }
    let total = acc;
    let mut stream = Stream::new(seed);
    Ok((0..n)
        .map(|_| {
            let u = stream.uniform() * total;
            cdf.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect())
}

/// Discrete measure on the product space `ℝ^{d_1} × … × ℝ^{d_K}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMeasure<T> {
    base: DiscreteMeasure<T>,
    spec: MetricSpec<T>,
}

impl<T: Scalar> ProductMeasure<T> {
    pub fn new(base: DiscreteMeasure<T>, spec: MetricSpec<T>) -> Result<Self> {
        if base.dim() != spec.total_dim() {
            return Err(Error::Dimension { expected: spec.total_dim(), found: base.dim() });
        }
        Ok(ProductMeasure { base, spec })
    }

    pub fn base(&self) -> &DiscreteMeasure<T> {
        &self.base
    }

    pub fn spec(&self) -> &MetricSpec<T> {
        &self.spec
    }

    pub fn blocks(&self) -> usize {
        self.spec.blocks()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn with_p(&self, p: Exponent<T>) -> Self {
        ProductMeasure { base: self.base.clone(), spec: self.spec.with_p(p) }
    }

    /// Pushforward under the projection onto block `i` (zero-based).
    pub fn marginal(&self, i: usize) -> Result<DiscreteMeasure<T>> {
        Ok(self.marginal_with_index(i)?.0)
    }

    /// Marginal `i` together with, for every atom of `self`, the index of its
    /// projection among the marginal's atoms.
    pub fn marginal_with_index(&self, i: usize) -> Result<(DiscreteMeasure<T>, Vec<usize>)> {
        if i >= self.blocks() {
            return Err(Error::Index { index: i, len: self.blocks() });
        }
        let range = self.spec.block_range(i);
        let d = range.len();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut coords = Vec::new();
        let mut parts: Vec<Vec<T>> = Vec::new();
        let mut assignment = Vec::with_capacity(self.len());
        for (a, &w) in self.base.atoms().zip(self.base.weights()) {
            let x = &a[range.clone()];
            let key: Vec<u64> = x.iter().map(|c| c.canonical_key()).collect();
            let j = *index.entry(key).or_insert_with(|| {
                coords.extend_from_slice(x);
                parts.push(Vec::new());
                parts.len() - 1
            });
            parts[j].push(w);
            assignment.push(j);
        }
        let weights: Vec<T> = parts.into_iter().map(compensated_sum).collect();
        let m = DiscreteMeasure::from_flat(d, coords, weights)?;
        debug_assert!(assignment.iter().all(|&j| j < m.len()));
        Ok((m, assignment))
    }

    pub fn marginals(&self) -> Result<MarginalVector<T>> {
        let comps = (0..self.blocks()).map(|i| self.marginal(i)).collect::<Result<Vec<_>>>()?;
        MarginalVector::new(comps, &self.spec)
    }

    pub fn sample_empirical(&self, n: usize, seed: u64) -> Result<Self> {
        Ok(ProductMeasure { base: self.base.sample_empirical(n, seed)?, spec: self.spec.clone() })
    }

    /// Product coupling `μ_1 ⊗ … ⊗ μ_K`.
    pub fn independent(mu: &MarginalVector<T>, spec: &MetricSpec<T>) -> Result<Self> {
        mu.check(spec)?;
        let mut coords: Vec<T> = Vec::new();
        let mut weights = vec![T::one()];
        let mut dim = 0;
        for comp in mu.components() {
            let mut next_c = Vec::with_capacity(coords.len() / dim.max(1) * comp.len() * (dim + comp.dim()));
            let mut next_w = Vec::with_capacity(weights.len() * comp.len());
            for (k, &w) in weights.iter().enumerate() {
                let prefix = &coords[k * dim..(k + 1) * dim];
                for (a, &v) in comp.atoms().zip(comp.weights()) {
                    next_c.extend_from_slice(prefix);
                    next_c.extend_from_slice(a);
                    next_w.push(w * v);
                }
            }
            dim += comp.dim();
            coords = next_c;
            weights = next_w;
        }
        Self::new(DiscreteMeasure::from_flat(dim, coords, weights)?, spec.clone())
    }

    pub fn cast<U: Scalar>(&self) -> ProductMeasure<U> {
        let spec = MetricSpec::new(self.spec.p.cast(), self.spec.block_dims().to_vec()).unwrap();
        ProductMeasure { base: self.base.cast(), spec }
    }
}

/// Vector of prescribed marginals `(μ_1, …, μ_K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalVector<T> {
    components: Vec<DiscreteMeasure<T>>,
}

impl<T: Scalar> MarginalVector<T> {
    pub fn new(components: Vec<DiscreteMeasure<T>>, spec: &MetricSpec<T>) -> Result<Self> {
        let v = MarginalVector { components };
        v.check(spec)?;
        Ok(v)
    }

    /// Builds without a spec; block dimensions are taken from the components.
    pub fn from_components(components: Vec<DiscreteMeasure<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::input("marginals", "at least one marginal is required"));
        }
        Ok(MarginalVector { components })
    }

    pub(crate) fn check(&self, spec: &MetricSpec<T>) -> Result<()> {
        if self.components.len() != spec.blocks() {
            return Err(Error::Dimension { expected: spec.blocks(), found: self.components.len() });
        }
        for (c, &d) in self.components.iter().zip(spec.block_dims()) {
            if c.dim() != d {
                return Err(Error::Dimension { expected: d, found: c.dim() });
            }
        }
        Ok(())
    }

    pub fn components(&self) -> &[DiscreteMeasure<T>] {
        &self.components
    }

    pub fn get(&self, i: usize) -> &DiscreteMeasure<T> {
        &self.components[i]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.components.iter().map(DiscreteMeasure::dim).collect()
    }

    /// Applies `f` to every component.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&DiscreteMeasure<T>) -> Result<DiscreteMeasure<T>>,
    {
        let components = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(MarginalVector { components })
    }

    pub fn cast<U: Scalar>(&self) -> MarginalVector<U> {
        MarginalVector { components: self.components.iter().map(DiscreteMeasure::cast).collect() }
    }
}

/// `(Σ_i W_p^p(a_i, b_i))^{1/p}`, or `max_i W_∞(a_i, b_i)` for `p = ∞`.
pub fn marginal_vector_distance<T: Scalar>(
    a: &MarginalVector<T>,
    b: &MarginalVector<T>,
    spec: &MetricSpec<T>,
) -> Result<T> {
    a.check(spec)?;
    b.check(spec)?;
    let parts = (0..spec.blocks())
        .map(|i| ot::wasserstein(a.get(i), b.get(i), &spec.block(i)))
        .collect::<Result<Vec<T>>>()?;
    Ok(spec.p.aggregate(parts))
}
