use dirichlet_mc::calculus::gamma_of;
use dirichlet_mc::harness::sweep::fit_loglog_slope;
use dirichlet_mc::rng::{generate, stream};
use dirichlet_mc::stats::mean_stat;
use dirichlet_mc::wiener::{
    draw_increments, gbm_exact_jet, jet_oracle_triple, run_euler, run_euler_consistent,
    simulate_triple, SdeCoefficients,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn coefficient_sets() -> Vec<SdeCoefficients> {
    vec![
        SdeCoefficients::gbm(0.3, 0.05),
        SdeCoefficients::additive(0.5, 1.0, 0.0),
    ]
}

#[test]
fn scheme_x_and_a_commute_with_the_calculus() {
    for c in coefficient_sets() {
        for n in [1usize, 4, 16, 32] {
            let mut rng = stream(11, n as u64);
            for _ in 0..100 {
                let s = simulate_triple(1.0, 1.0, n, &c, &mut rng).unwrap();
                let t = jet_oracle_triple(1.0, 1.0, n, &c, &s.increments).unwrap();
                assert!(rel(s.state.x, t.x()[0]) <= 1e-10, "{} n={n}", c.name());
                let a_scale = t.a()[0].abs().max(1e-3);
                assert!(
                    (s.state.a - t.a()[0]).abs() <= 1e-10 * a_scale,
                    "{} n={n}",
                    c.name()
                );
            }
        }
    }
}

#[test]
fn single_step_gamma_commutes() {
    for c in coefficient_sets() {
        let mut rng = stream(12, 0);
        for _ in 0..100 {
            let s = simulate_triple(1.0, 1.0, 1, &c, &mut rng).unwrap();
            let t = jet_oracle_triple(1.0, 1.0, 1, &c, &s.increments).unwrap();
            assert!(rel(s.state.gamma, t.gamma()[(0, 0)]) <= 1e-10);
        }
    }
}

#[test]
fn consistent_variant_commutes_in_every_component() {
    for c in coefficient_sets() {
        for n in [1usize, 4, 16, 32] {
            let mut rng = stream(13, n as u64);
            for _ in 0..100 {
                let inc = draw_increments(1.0, n, &mut rng).unwrap();
                let s = run_euler_consistent(1.0, 1.0, &inc, &c).unwrap();
                let t = jet_oracle_triple(1.0, 1.0, n, &c, &inc).unwrap();
                assert!(rel(s.x, t.x()[0]) <= 1e-10);
                assert!(
                    rel(s.gamma, t.gamma()[(0, 0)]) <= 1e-10,
                    "{} n={n}",
                    c.name()
                );
                assert!((s.a - t.a()[0]).abs() <= 1e-10 * t.a()[0].abs().max(1e-3));
                assert!(s.gamma >= 0.0);
            }
        }
    }
}

#[test]
fn zero_drift_additive_noise_is_exact() {
    // σ′ = r′ = 0: both recursions give Γ = σ²T and A = −½σ B_T exactly.
    let c = SdeCoefficients::additive(0.5, 0.0, 0.0);
    let mut rng = stream(14, 0);
    for n in [1usize, 7, 32] {
        let s = simulate_triple(0.3, 2.0, n, &c, &mut rng).unwrap();
        let t = jet_oracle_triple(0.3, 2.0, n, &c, &s.increments).unwrap();
        assert!(rel(s.state.gamma, 0.5) <= 1e-12);
        assert!(rel(t.gamma()[(0, 0)], 0.5) <= 1e-12);
        let a = -0.25 * s.increments.iter().sum::<f64>();
        assert!((s.state.a - a).abs() <= 1e-12 && (t.a()[0] - a).abs() <= 1e-12);
    }
}

#[test]
fn scheme_gamma_converges_at_weak_order_one() {
    // E[Γ_euler] against Γ = σ²X_T²T of the exact GBM solution on the same
    // increments.
    let c = SdeCoefficients::gbm(0.3, 0.05);
    let mut pts = Vec::new();
    for n in [4usize, 8, 16, 32, 64] {
        let diffs = generate(40_000, 15 + n as u64, 4, |rng| {
            let inc = draw_increments(1.0, n, rng).unwrap();
            let s = run_euler(1.0, 1.0, &inc, &c).unwrap();
            let x = ((0.05 - 0.045) + 0.3 * inc.iter().sum::<f64>()).exp();
            s.gamma - 0.09 * x * x
        });
        let m = mean_stat(&diffs);
        assert!(m.mean.abs() > 3.0 * m.std_error, "n={n}: {m:?}");
        pts.push((n as f64, m.mean.abs()));
    }
    let slope = fit_loglog_slope(&pts).unwrap();
    assert!((-1.3..=-0.7).contains(&slope), "slope {slope}, {pts:?}");
}

#[test]
fn exact_gbm_jet_has_closed_form_gamma() {
    let mut rng = stream(16, 0);
    let inc = draw_increments(1.0, 12, &mut rng).unwrap();
    let (x, base) = gbm_exact_jet(1.0, 0.3, 0.05, 1.0, &inc).unwrap();
    let g = gamma_of(&x, &x, &base).unwrap();
    assert!(rel(g, 0.09 * x.value() * x.value()) <= 1e-12);
}
