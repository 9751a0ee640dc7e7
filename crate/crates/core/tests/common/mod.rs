//! Random smooth functionals of a few base coordinates, evaluable both as
//! plain `f64` (for finite differences) and as [`Jet2`].

#![allow(dead_code)]

use std::sync::Arc;

use dirichlet_mc::calculus::{BasePoint, CoordinateSpec, Jet2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum Expr {
    Coord(usize),
    Const(f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    ExpHalf(Box<Expr>),
    Square(Box<Expr>),
    Atan(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Expr::Coord(i) => u[*i],
            Expr::Const(c) => *c,
            Expr::Sin(e) => e.eval(u).sin(),
            Expr::Cos(e) => e.eval(u).cos(),
            Expr::ExpHalf(e) => (0.5 * e.eval(u)).exp(),
            Expr::Square(e) => e.eval(u).powi(2),
            Expr::Atan(e) => e.eval(u).atan(),
            Expr::Add(a, b) => a.eval(u) + b.eval(u),
            Expr::Mul(a, b) => a.eval(u) * b.eval(u),
        }
    }

    pub fn jet(&self, base: &BasePoint) -> Jet2 {
        match self {
            Expr::Coord(i) => Jet2::lift(base, *i).unwrap(),
            Expr::Const(c) => Jet2::constant(base.dim(), *c),
            Expr::Sin(e) => e.jet(base).sin(),
            Expr::Cos(e) => e.jet(base).cos(),
            Expr::ExpHalf(e) => e.jet(base).scale(0.5).exp(),
            Expr::Square(e) => e.jet(base).powi(2),
            Expr::Atan(e) => e.jet(base).apply(
                f64::atan,
                |v| 1.0 / (1.0 + v * v),
                |v| -2.0 * v / (1.0 + v * v).powi(2),
            ),
            Expr::Add(a, b) => &a.jet(base) + &b.jet(base),
            Expr::Mul(a, b) => &a.jet(base) * &b.jet(base),
        }
    }
}

fn random_expr(rng: &mut ChaCha8Rng, dim: usize, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.8) {
            Expr::Coord(rng.random_range(0..dim))
        } else {
            Expr::Const(rng.random_range(-1.5..1.5))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, dim, depth - 1));
    match rng.random_range(0..7) {
        0 => Expr::Sin(sub(rng)),
        1 => Expr::Cos(sub(rng)),
        2 => Expr::ExpHalf(sub(rng)),
        3 => Expr::Square(sub(rng)),
        4 => Expr::Atan(sub(rng)),
        5 => Expr::Add(sub(rng), sub(rng)),
        _ => Expr::Mul(sub(rng), sub(rng)),
    }
}

/// A functional together with a base point where it is evaluated.
#[derive(Debug, Clone)]
pub struct Case {
    pub expr: Expr,
    pub aux: Expr,
    pub base: BasePoint,
}

/// Deterministic random case with 1 to 4 coordinates mixing Gaussian and
/// Monte Carlo structures.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=4);
    let mut specs = Vec::with_capacity(dim);
    let mut coords = Vec::with_capacity(dim);
    for _ in 0..dim {
        if rng.random_bool(0.5) {
            let v = rng.random_range(0.25..2.0);
            specs.push(CoordinateSpec::ou_gaussian(v).unwrap());
            coords.push(rng.random_range(-1.5..1.5));
        } else {
            specs.push(CoordinateSpec::McUnit);
            coords.push(rng.random_range(0.05..0.95));
        }
    }
    let specs: Arc<[CoordinateSpec]> = specs.into();
    let expr = random_expr(&mut rng, dim, 4);
    let aux = random_expr(&mut rng, dim, 3);
    Case {
        expr,
        aux,
        base: BasePoint::new(coords, specs).unwrap(),
    }
}

pub const FD_STEP: f64 = 1e-4;

/// Finite-difference gradient, Hessian diagonal and mixed partials.
pub struct FdDerivatives {
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

#[allow(clippy::needless_range_loop)]
pub fn fd_derivatives(e: &Expr, u: &[f64]) -> FdDerivatives {
    let n = u.len();
    let h = FD_STEP;
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut v = u.to_vec();
        v[di] += si * h;
        v[dj] += sj * h;
        e.eval(&v)
    };
    let f0 = e.eval(u);
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut p = u.to_vec();
        let mut m = u.to_vec();
        p[i] += h;
        m[i] -= h;
        let (fp, fm) = (e.eval(&p), e.eval(&m));
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let v = (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0)
                + at(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    FdDerivatives { grad, hess }
}

/// Oracle values of `Γ[X]`, `Γ[X, Y]`, `A[X]` and `Γ[X, Γ[X]]`, each with
/// the sum of absolute terms used as its error scale.
pub struct FdOracle {
    pub gamma: (f64, f64),
    pub gamma_xy: (f64, f64),
    pub a: (f64, f64),
    pub gxg: (f64, f64),
}

pub fn fd_oracle(x: &Expr, y: &Expr, base: &BasePoint) -> FdOracle {
    let u = base.coords();
    let dx = fd_derivatives(x, u);
    let dy = fd_derivatives(y, u);
    let n = u.len();
    let g: Vec<f64> = (0..n).map(|i| base.spec(i).gamma(u[i])).collect();
    let gp: Vec<f64> = (0..n).map(|i| base.spec(i).gamma_prime(u[i])).collect();
    let a: Vec<f64> = (0..n).map(|i| base.spec(i).gen_a(u[i])).collect();
    let sum = |terms: Vec<f64>| {
        (
            terms.iter().sum::<f64>(),
            terms.iter().map(|t| t.abs()).sum::<f64>(),
        )
    };
    let gamma = sum((0..n).map(|i| dx.grad[i] * dx.grad[i] * g[i]).collect());
    let gamma_xy = sum((0..n).map(|i| dx.grad[i] * dy.grad[i] * g[i]).collect());
    let a = sum((0..n)
        .flat_map(|i| [dx.grad[i] * a[i], 0.5 * dx.hess[i][i] * g[i]])
        .collect());
    let mut terms = Vec::new();
    for j in 0..n {
        for i in 0..n {
            terms.push(dx.grad[j] * g[j] * 2.0 * dx.grad[i] * dx.hess[i][j] * g[i]);
        }
        terms.push(dx.grad[j] * g[j] * dx.grad[j] * dx.grad[j] * gp[j]);
    }
    FdOracle {
        gamma,
        gamma_xy,
        a,
        gxg: sum(terms),
    }
}

/// `|got − want| ≤ rel · max(1, scale)`.
pub fn close(got: f64, want: f64, scale: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * scale.max(1.0)
}
