//! Cross-checks of the solvers against brute-force vertex enumeration.

mod common;

use common::*;
use shadowproj::measures::{DiscreteMeasure, Exponent, MarginalVector, MetricSpec, ProductMeasure};
use shadowproj::oracle::{build_projection_lp, solve_lp, LinearProgram, DEFAULT_VARIABLE_CAP};
use shadowproj::ot::{solve_ot, solve_ot_inf};
use shadowproj::{compose_shadow, project_oracle};

fn line(points: &[f64], weights: Vec<f64>) -> DiscreteMeasure<f64> {
    DiscreteMeasure::on_line(points, Some(weights)).unwrap()
}

fn cost_1d(a: &DiscreteMeasure<f64>, b: &DiscreteMeasure<f64>, p: f64) -> Vec<f64> {
    a.atoms().flat_map(|x| b.atoms().map(move |y| separable_cost(x, y, p))).collect()
}

fn random_line(rng: &mut Xorshift, max: usize, lattice: bool) -> DiscreteMeasure<f64> {
    let n = 1 + rng.below(max);
    let pts = if lattice { rng.lattice_points(n) } else { rng.points(n) };
    line(&pts, rng.weights(n))
}

#[test]
fn transport_matches_vertex_enumeration() {
    let mut rng = Xorshift(0x9e3779b97f4a7c15);
    for k in 0..240 {
        let p = [1.0, 1.5, 2.0][k % 3];
        let lattice = k % 2 == 0;
        let a = random_line(&mut rng, 4, lattice);
        let b = random_line(&mut rng, 4, lattice);
        let spec = MetricSpec::single(Exponent::Finite(p), 1).unwrap();
        let got = solve_ot(&a, &b, &spec).unwrap();
        let expected = transport_by_enumeration(a.weights(), b.weights(), &cost_1d(&a, &b, p));
        assert!(
            (got.value.powf(p) - expected).abs() <= 1e-10,
            "instance {k}: simplex {} vs enumeration {expected}",
            got.value.powf(p)
        );
        let cert = got.certificate.unwrap();
        assert!(cert.min_reduced_cost >= -1e-10 && cert.duality_gap <= 1e-10);
        assert!(got.plan.nonzeros() < a.len() + b.len());
    }
}

#[test]
fn bottleneck_matches_vertex_enumeration() {
    let mut rng = Xorshift(77);
    for k in 0..120 {
        let a = random_line(&mut rng, 4, k % 2 == 0);
        let b = random_line(&mut rng, 4, k % 2 == 0);
        let spec = MetricSpec::single(Exponent::Infinite, 1).unwrap();
        let got = solve_ot_inf(&a, &b, &spec).unwrap();
        let cost: Vec<f64> = cost_1d(&a, &b, 1.0);
        let expected = bottleneck_by_enumeration(a.weights(), b.weights(), &cost);
        assert_eq!(got.value, expected, "instance {k}");
    }
}

fn random_lp(rng: &mut Xorshift, rows: usize, vars: usize) -> LinearProgram<f64> {
    let a: Vec<f64> = (0..rows * vars).map(|_| (rng.below(5) as f64) - 1.0).collect();
    let x0: Vec<f64> = (0..vars).map(|_| if rng.below(2) == 0 { rng.unit() } else { 0.0 }).collect();
    let b: Vec<f64> = (0..rows).map(|r| (0..vars).map(|j| a[r * vars + j] * x0[j]).sum()).collect();
    let c: Vec<f64> = (0..vars).map(|_| rng.unit()).collect();
    LinearProgram::new(c, a, b).unwrap()
}

#[test]
fn dense_simplex_matches_vertex_enumeration() {
    let mut rng = Xorshift(2024);
    let mut checked = 0;
    while checked < 150 {
        let rows = 2 + rng.below(2);
        let vars = rows + 2 + rng.below(3);
        let lp = random_lp(&mut rng, rows, vars);
        let a: Vec<Vec<f64>> = (0..rows).map(|r| (0..vars).map(|j| lp.coeff(r, j)).collect()).collect();
        // Enumeration needs full row rank; a rank-deficient draw has no
        // nonsingular basis and is skipped.
        let Some(expected) = min_over_bases(&a, &lp.rhs, &lp.objective, None) else { continue };
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value - expected).abs() <= 1e-9, "lp {checked}: {} vs {expected}", sol.value);
        assert!(sol.residual <= 1e-9);
        checked += 1;
    }
}

fn random_instance(rng: &mut Xorshift, p: Exponent<f64>, max: usize) -> (ProductMeasure<f64>, MarginalVector<f64>, MetricSpec<f64>) {
    let spec = MetricSpec::new(p, vec![1, 1]).unwrap();
    let n = 1 + rng.below(max);
    let atoms: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.below(5) as f64 / 4.0, rng.unit()]).collect();
    let rho = ProductMeasure::new(DiscreteMeasure::new(atoms, Some(rng.weights(n))).unwrap(), spec.clone()).unwrap();
    let mu = MarginalVector::new(vec![random_line(rng, max, true), random_line(rng, max, false)], &spec).unwrap();
    (rho, mu, spec)
}

#[test]
fn projection_lp_matches_vertex_enumeration() {
    let mut rng = Xorshift(31337);
    for k in 0..60 {
        let p = [1.0, 1.5, 2.0][k % 3];
        let (rho, mu, spec) = random_instance(&mut rng, Exponent::Finite(p), 3);
        let lp = build_projection_lp(&rho, &mu, &spec, DEFAULT_VARIABLE_CAP).unwrap();
        let a: Vec<Vec<f64>> = (0..lp.rows()).map(|r| (0..lp.vars()).map(|j| lp.coeff(r, j)).collect()).collect();
        let expected = min_over_bases(&a, &lp.rhs, &lp.objective, None).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value - expected).abs() <= 1e-9, "instance {k}: {} vs {expected}", sol.value);
    }
}

#[test]
fn shadow_value_matches_blockwise_enumeration() {
    let mut rng = Xorshift(4242);
    for k in 0..90 {
        let p = [1.0, 1.5, 2.0][k % 3];
        let (rho, mu, spec) = random_instance(&mut rng, Exponent::Finite(p), 4);
        let s = compose_shadow(&rho, &mu, &spec).unwrap();
        let mut total = 0.0;
        for i in 0..2 {
            let ri = rho.marginal(i).unwrap();
            total += transport_by_enumeration(mu.get(i).weights(), ri.weights(), &cost_1d(mu.get(i), &ri, p));
        }
        assert!((s.value - total.powf(1.0 / p)).abs() <= 1e-9, "instance {k}");
        let cert = project_oracle(&rho, &mu, &spec).unwrap();
        assert!((cert.value - total).abs() <= 1e-9);
    }
}

#[test]
fn bottleneck_shadow_matches_blockwise_enumeration() {
    let mut rng = Xorshift(555);
    for k in 0..40 {
        let (rho, mu, spec) = random_instance(&mut rng, Exponent::Infinite, 4);
        let s = compose_shadow(&rho, &mu, &spec).unwrap();
        let expected = (0..2)
            .map(|i| {
                let ri = rho.marginal(i).unwrap();
                let cost: Vec<f64> = mu.get(i).atoms().flat_map(|x| ri.atoms().map(move |y| max_cost(x, y))).collect();
                bottleneck_by_enumeration(mu.get(i).weights(), ri.weights(), &cost)
            })
            .fold(0.0, f64::max);
        assert_eq!(s.value, expected, "instance {k}");
    }
}

#[test]
fn worked_two_atom_instance() {
    let spec = MetricSpec::new(Exponent::Finite(2.0), vec![1, 1]).unwrap();
    let rho = ProductMeasure::new(DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap(), spec.clone())
        .unwrap();
    let mu = MarginalVector::new(vec![line(&[0.0, 1.0], vec![0.5, 0.5]), line(&[0.5], vec![1.0])], &spec).unwrap();
    let s = compose_shadow(&rho, &mu, &spec).unwrap();
    let cert = project_oracle(&rho, &mu, &spec).unwrap();
    // Every atom of ρ moves by 1/2 in the second coordinate only.
    assert_eq!(s.value, 0.5);
    assert!((cert.distance() - 0.5).abs() <= 1e-12);
}
