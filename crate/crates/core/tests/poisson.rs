use dirichlet_mc::calculus::{CoordinateSpec, SmoothFn};
use dirichlet_mc::harness::quadrature_expectation;
use dirichlet_mc::poisson::{
    poisson_identity_check, quad_from_points, quad_via_jets, sample_poisson_quad, PointFunction,
    PoissonFunctionalSpec,
};
use dirichlet_mc::rng::generate;
use dirichlet_mc::stats::mean_stat;

const LAMBDA: f64 = 5.0;
const N: usize = 100_000;

/// `λ ∫₀¹ f(u) du` by Gauss–Legendre.
fn campbell(f: impl Fn(f64) -> f64) -> f64 {
    LAMBDA * quadrature_expectation(&|u| f(u[0]), &[CoordinateSpec::McUnit], 48).unwrap()
}

fn gamma_unit(u: f64) -> f64 {
    (u * (1.0 - u)).powi(2)
}

fn a_unit(u: f64) -> f64 {
    u * (1.0 - u) * (1.0 - 2.0 * u)
}

#[test]
fn point_count_is_poisson() {
    let spec = PoissonFunctionalSpec::mc_unit(LAMBDA, PointFunction::Identity).unwrap();
    let r = poisson_identity_check(&spec, N, 21, 4, &[]).unwrap();
    assert!(
        r.count_mean.z_score(LAMBDA).abs() <= 4.0,
        "{:?}",
        r.count_mean
    );
    assert!(
        (r.count_variance / LAMBDA - 1.0).abs() < 0.03,
        "{}",
        r.count_variance
    );
}

#[test]
fn campbell_moments_match_quadrature() {
    type Derivs = (fn(f64) -> f64, fn(f64) -> f64, fn(f64) -> f64);
    let cases: [(PointFunction, Derivs); 3] = [
        (PointFunction::Identity, (|p| p, |_| 1.0, |_| 0.0)),
        (PointFunction::Sin, (f64::sin, f64::cos, |p| -p.sin())),
        (
            PointFunction::Polynomial,
            (|p| p + p * p, |p| 1.0 + 2.0 * p, |_| 2.0),
        ),
    ];
    for (k, (pf, (h, h1, h2))) in cases.into_iter().enumerate() {
        let spec = PoissonFunctionalSpec::mc_unit(LAMBDA, pf).unwrap();
        let draws = generate(N, 22 + k as u64, 4, |rng| {
            sample_poisson_quad(&spec, rng).unwrap()
        });
        let x: Vec<f64> = draws.iter().map(|q| q.x()).collect();
        let g: Vec<f64> = draws.iter().map(|q| q.gamma()).collect();
        let a: Vec<f64> = draws.iter().map(|q| q.a()).collect();
        let ex = campbell(h);
        let eg = campbell(|u| gamma_unit(u) * h1(u).powi(2));
        let ea = campbell(|u| a_unit(u) * h1(u) + 0.5 * gamma_unit(u) * h2(u));
        let vx = campbell(|u| h(u).powi(2));
        let (mx, mg, ma) = (mean_stat(&x), mean_stat(&g), mean_stat(&a));
        assert!(mx.z_score(ex).abs() <= 4.0, "{pf:?} E[N(h)] {mx:?} vs {ex}");
        assert!(mg.z_score(eg).abs() <= 4.0, "{pf:?} E[Γ] {mg:?} vs {eg}");
        assert!(ma.z_score(ea).abs() <= 4.0, "{pf:?} E[A] {ma:?} vs {ea}");
        assert!(
            (mx.variance / vx - 1.0).abs() < 0.03,
            "{pf:?} Var {} vs {vx}",
            mx.variance
        );
    }
}

#[test]
fn generator_is_centered() {
    let spec = PoissonFunctionalSpec::mc_unit(LAMBDA, PointFunction::Sin).unwrap();
    let fns = [SmoothFn::identity(), SmoothFn::cos(), SmoothFn::square()];
    let r = poisson_identity_check(&spec, N, 23, 4, &fns).unwrap();
    assert!(r.max_centering_z() <= 4.0, "{:?}", r.centering);
    assert!(r.max_violation <= 1e-12, "{}", r.max_violation);
}

#[test]
fn summation_agrees_with_jet_route() {
    let spec = PoissonFunctionalSpec::mc_unit(LAMBDA, PointFunction::Polynomial).unwrap();
    let points = [0.1, 0.35, 0.5, 0.77, 0.93];
    let q = quad_from_points(&spec, &points).unwrap();
    let r = quad_via_jets(&spec, &points).unwrap().unwrap();
    for (u, v) in [
        (q.x(), r.x()),
        (q.gamma(), r.gamma()),
        (q.a(), r.a()),
        (q.gamma_x_gammax(), r.gamma_x_gammax()),
    ] {
        assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
    }
}

#[test]
fn empty_configurations_carry_no_error() {
    let spec = PoissonFunctionalSpec::mc_unit(0.5, PointFunction::Identity).unwrap();
    let draws = generate(2_000, 24, 1, |rng| sample_poisson_quad(&spec, rng).unwrap());
    let empty: Vec<_> = draws.iter().filter(|q| q.x() == 0.0).collect();
    assert!(!empty.is_empty());
    assert!(empty.iter().all(|q| q.gamma() == 0.0 && q.a() == 0.0));
}
