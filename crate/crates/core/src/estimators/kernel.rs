use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::batch::{DensityEstimate, TripleBatch};
use crate::calculus::ErrorTriple;
use crate::error::{Error, Result};
use crate::stats::mean_stat;

/// Covariances with determinant below this are degenerate.
pub const DEGENERATE_DET: f64 = 1e-30;

/// Handling of (near-)singular kernel covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    /// Leave the sample out and count it.
    #[default]
    Skip,
    /// Add `δ·I` with `δ = 10⁻⁸ · trace`; skip if still degenerate.
    Ridge,
}

fn psd_floor(trace: f64) -> f64 {
    -1e-12 * trace.abs().max(1.0)
}

fn kernel_1d(y: f64, var: f64, policy: DegeneratePolicy) -> Result<Option<f64>> {
    if var < psd_floor(var) {
        return Err(Error::NotPsd {
            min_eigenvalue: var,
        });
    }
    let mut v = var;
    if v < DEGENERATE_DET {
        match policy {
            DegeneratePolicy::Skip => return Ok(None),
            DegeneratePolicy::Ridge => {
                v += 1e-8 * var.max(0.0);
                if v < DEGENERATE_DET {
                    return Ok(None);
                }
            }
        }
    }
    Ok(Some((-0.5 * y * y / v).exp() / (2.0 * PI * v).sqrt()))
}

/// Centered Gaussian density with covariance `cov` evaluated at `y`.
///
/// Returns `Ok(None)` when `det(cov) < 10⁻³⁰` and the policy leaves the
/// sample out.
pub fn gaussian_kernel(
    y: &[f64],
    cov: &DMatrix<f64>,
    policy: DegeneratePolicy,
) -> Result<Option<f64>> {
    let d = y.len();
    if cov.nrows() != d || cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: cov.nrows(),
        });
    }
    if d == 1 {
        return kernel_1d(y[0], cov[(0, 0)], policy);
    }
    let trace = cov.trace();
    let min_eig = cov.clone().symmetric_eigenvalues().min();
    if min_eig < psd_floor(trace) {
        return Err(Error::NotPsd {
            min_eigenvalue: min_eig,
        });
    }
    let mut c = cov.clone();
    if c.determinant() < DEGENERATE_DET {
        match policy {
            DegeneratePolicy::Skip => return Ok(None),
            DegeneratePolicy::Ridge => {
                let delta = 1e-8 * trace;
                for i in 0..d {
                    c[(i, i)] += delta;
                }
            }
        }
    }
    let Some(chol) = c.clone().cholesky() else {
        return Ok(None);
    };
    let det: f64 = chol.l().diagonal().iter().map(|l| l * l).product();
    if det < DEGENERATE_DET {
        return Ok(None);
    }
    let yv = DVector::from_column_slice(y);
    let sol = chol.solve(&yv);
    let quad = yv.dot(&sol);
    Ok(Some(
        (-0.5 * quad).exp() / ((2.0 * PI).powi(d as i32) * det).sqrt(),
    ))
}

/// Baseline variants without the `εA[X]` shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlainVariant {
    /// `g(x − X_n, εI)`
    IdentityCov,
    /// `g(x − X_n, εΓ̲̲[X]_n)`
    GammaCov,
}

fn check_inputs(b: &TripleBatch, epsilon: f64, xs: &[Vec<f64>]) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let d = b.dim().ok_or(Error::NoUsableSamples)?;
    if let Some(x) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            left: d,
            right: x.len(),
        });
    }
    Ok(d)
}

/// Mean of per-sample kernel values; degenerate samples are left out of both
/// numerator and count, so every estimate integrates to one.
fn kernel_estimate(
    b: &TripleBatch,
    epsilon: f64,
    x: &[f64],
    policy: DegeneratePolicy,
    term: impl Fn(&ErrorTriple, &[f64], DegeneratePolicy) -> Result<Option<f64>>,
) -> Result<DensityEstimate> {
    let mut vals = Vec::with_capacity(b.len());
    let mut skipped = 0;
    for s in b.samples() {
        match term(s, x, policy)? {
            Some(v) => vals.push(v),
            None => skipped += 1,
        }
    }
    if vals.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    let m = mean_stat(&vals);
    Ok(DensityEstimate {
        x: x.to_vec(),
        value: m.mean,
        std_error: m.std_error,
        n_used: b.len(),
        n_skipped: skipped,
        epsilon: Some(epsilon),
    })
}

/// `f̂(x) = N⁻¹ Σ g(x − X_n − εA[X]_n, εΓ̲̲[X]_n)`.
pub fn shifted_kernel_density(
    b: &TripleBatch,
    epsilon: f64,
    xs: &[Vec<f64>],
    policy: DegeneratePolicy,
) -> Result<Vec<DensityEstimate>> {
    let d = check_inputs(b, epsilon, xs)?;
    xs.iter()
        .map(|x| {
            kernel_estimate(b, epsilon, x, policy, |s, x, policy| {
                if d == 1 {
                    let y = x[0] - s.x()[0] - epsilon * s.a()[0];
                    kernel_1d(y, epsilon * s.gamma()[(0, 0)], policy)
                } else {
                    let y: Vec<f64> = (0..d)
                        .map(|i| x[i] - s.x()[i] - epsilon * s.a()[i])
                        .collect();
                    gaussian_kernel(&y, &(s.gamma() * epsilon), policy)
                }
            })
        })
        .collect()
}

/// Kernel estimators without the generator shift.
pub fn plain_kernel_density(
    b: &TripleBatch,
    epsilon: f64,
    xs: &[Vec<f64>],
    variant: PlainVariant,
    policy: DegeneratePolicy,
) -> Result<Vec<DensityEstimate>> {
    let d = check_inputs(b, epsilon, xs)?;
    let identity = DMatrix::<f64>::identity(d, d) * epsilon;
    xs.iter()
        .map(|x| {
            kernel_estimate(b, epsilon, x, policy, |s, x, policy| {
                let y: Vec<f64> = (0..d).map(|i| x[i] - s.x()[i]).collect();
                match (variant, d) {
                    (PlainVariant::IdentityCov, 1) => kernel_1d(y[0], epsilon, policy),
                    (PlainVariant::GammaCov, 1) => {
                        kernel_1d(y[0], epsilon * s.gamma()[(0, 0)], policy)
                    }
                    (PlainVariant::IdentityCov, _) => gaussian_kernel(&y, &identity, policy),
                    (PlainVariant::GammaCov, _) => {
                        gaussian_kernel(&y, &(s.gamma() * epsilon), policy)
                    }
                }
            })
        })
        .collect()
}
