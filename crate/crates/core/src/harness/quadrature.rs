//! Tensorised Gauss rules for noise-free expectations over base coordinates.
//!
//! `ou_gaussian` axes use Gauss–Hermite (probabilists' weight) or a composite
//! Gauss–Legendre rule on `±half_width` standard deviations; `mc_unit` axes
//! use Gauss–Legendre on `[0, 1]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::calculus::CoordinateSpec;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 128;
pub const MAX_ORACLE_DIM: usize = 3;

/// Nodes and weights of a rule for an expectation (weights sum to one).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix with
/// zero diagonal and the given off-diagonal.
fn golub_welsch(off: impl Fn(usize) -> f64, n: usize) -> GaussRule {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = off(k);
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    GaussRule { nodes, weights }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be in 1..={MAX_ORDER}, got {n}"
        )));
    }
    Ok(())
}

/// Gauss–Hermite rule for `E[f(Z)]`, `Z ~ N(0, 1)`.
pub fn gauss_hermite(n: usize) -> Result<GaussRule> {
    check_order(n)?;
    Ok(golub_welsch(|k| (k as f64).sqrt(), n))
}

/// Gauss–Legendre rule for `E[f(U)]`, `U ~ uniform[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Result<GaussRule> {
    check_order(n)?;
    let mut r = golub_welsch(
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        n,
    );
    for x in &mut r.nodes {
        *x = 0.5 * (*x + 1.0);
    }
    Ok(r)
}

/// Composite Gauss–Legendre on `[a, b]` for `∫ f dx` (weights sum to `b − a`).
pub fn composite_legendre(a: f64, b: f64, panels: usize, order: usize) -> Result<GaussRule> {
    if panels == 0 || a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::InvalidArgument(
            "composite rule needs a < b and panels ≥ 1".into(),
        ));
    }
    let base = gauss_legendre_unit(order)?;
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(lo + width * x);
            weights.push(width * w);
        }
    }
    Ok(GaussRule { nodes, weights })
}

/// Per-axis rule choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisRule {
    Gauss {
        order: usize,
    },
    /// Composite Gauss–Legendre. Gaussian axes are truncated to
    /// `±half_width` standard deviations.
    Composite {
        panels: usize,
        order: usize,
        half_width: f64,
    },
}

fn axis_rule(spec: &CoordinateSpec, rule: AxisRule) -> Result<GaussRule> {
    match (spec, rule) {
        (CoordinateSpec::OuGaussian { variance }, AxisRule::Gauss { order }) => {
            let mut r = gauss_hermite(order)?;
            let sd = variance.sqrt();
            r.nodes.iter_mut().for_each(|x| *x *= sd);
            Ok(r)
        }
        (
            CoordinateSpec::OuGaussian { variance },
            AxisRule::Composite {
                panels,
                order,
                half_width,
            },
        ) => {
            let sd = variance.sqrt();
            let mut r = composite_legendre(-half_width, half_width, panels, order)?;
            for (x, w) in r.nodes.iter_mut().zip(r.weights.iter_mut()) {
                *w *= (-0.5 * *x * *x).exp() / (2.0 * PI).sqrt();
                *x *= sd;
            }
            Ok(r)
        }
        (CoordinateSpec::McUnit, AxisRule::Gauss { order }) => gauss_legendre_unit(order),
        (CoordinateSpec::McUnit, AxisRule::Composite { panels, order, .. }) => {
            composite_legendre(0.0, 1.0, panels, order)
        }
        (other, _) => Err(Error::UnsupportedQuadrature(other.kind_name())),
    }
}

/// `E[f(u_1, …, u_k)]` over independent coordinates, `k ≤ 3`, with the same
/// rule on every axis.
pub fn quadrature_expectation_with(
    integrand: &dyn Fn(&[f64]) -> f64,
    specs: &[CoordinateSpec],
    rule: AxisRule,
) -> Result<f64> {
    if specs.len() > MAX_ORACLE_DIM {
        return Err(Error::InvalidArgument(format!(
            "quadrature supports at most {MAX_ORACLE_DIM} coordinates, got {}",
            specs.len()
        )));
    }
    let axes = specs
        .iter()
        .map(|s| axis_rule(s, rule))
        .collect::<Result<Vec<_>>>()?;
    let k = axes.len();
    let mut point = vec![0.0; k];
    let mut idx = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (a, (&i, axis)) in idx.iter().zip(&axes).enumerate() {
            point[a] = axis.nodes[i];
            w *= axis.weights[i];
        }
        total += w * integrand(&point);
        // odometer increment
        let mut a = 0;
        loop {
            if a == k {
                return Ok(total);
            }
            idx[a] += 1;
            if idx[a] < axes[a].nodes.len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Gauss–Hermite / Gauss–Legendre tensor rule of the given order.
pub fn quadrature_expectation(
    integrand: &dyn Fn(&[f64]) -> f64,
    specs: &[CoordinateSpec],
    order: usize,
) -> Result<f64> {
    quadrature_expectation_with(integrand, specs, AxisRule::Gauss { order })
}
