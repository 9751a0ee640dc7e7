use super::batch::{DensityEstimate, QuadBatch};
use crate::calculus::{ErrorQuad, SmoothFn};
use crate::error::{Error, Result};
use crate::stats::{covariance, mean_stat, pairwise_sum, MeanStat};

/// `sign` with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `Γ[X, G/Γ[X]] + 2G·A[X]/Γ[X]`, expanded as
/// `Γ[X,G]/Γ − G·Γ[X,Γ[X]]/Γ² + 2G·A/Γ`.
fn conditional_weight(q: &ErrorQuad, g: f64, gamma_x_g: f64) -> f64 {
    let gamma = q.gamma();
    gamma_x_g / gamma - g * q.gamma_x_gammax() / (gamma * gamma) + 2.0 * g * q.a() / gamma
}

/// `W = Γ[X, 1/Γ[X]] + 2A[X]/Γ[X]`, or `None` when `Γ[X] ≤ 0`.
///
/// Computed as the conditional weight with `G ≡ 1`, so the two agree
/// bit for bit.
pub fn direct_weight(q: &ErrorQuad) -> Option<f64> {
    (q.gamma() > 0.0).then(|| conditional_weight(q, 1.0, 0.0))
}

/// `W_ε = Γ[X, 1/(ε+Γ[X])] + 2A[X]/(ε+Γ[X])`.
pub fn regularized_weight(q: &ErrorQuad, epsilon: f64) -> f64 {
    let s = epsilon + q.gamma();
    -q.gamma_x_gammax() / (s * s) + 2.0 * q.a() / s
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

fn sign_estimate(
    xs: &[f64],
    points: &[f64],
    weights: &[f64],
    n_used: usize,
    n_skipped: usize,
    epsilon: Option<f64>,
) -> Result<Vec<DensityEstimate>> {
    if weights.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    Ok(xs
        .iter()
        .map(|&x| {
            let terms: Vec<f64> = points
                .iter()
                .zip(weights)
                .map(|(p, w)| 0.5 * sign(x - p) * w)
                .collect();
            let m = mean_stat(&terms);
            DensityEstimate {
                x: vec![x],
                value: m.mean,
                std_error: m.std_error,
                n_used,
                n_skipped,
                epsilon,
            }
        })
        .collect())
}

fn usable(samples: &[ErrorQuad]) -> (Vec<f64>, Vec<f64>, usize) {
    let mut points = Vec::with_capacity(samples.len());
    let mut weights = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for q in samples {
        match direct_weight(q) {
            Some(w) => {
                points.push(q.x());
                weights.push(w);
            }
            None => skipped += 1,
        }
    }
    (points, weights, skipped)
}

/// `f(x) = ½ E[sign(x − X) W]`. Samples with `Γ[X] = 0` are left out and
/// reported in `n_skipped`.
pub fn direct_density(b: &QuadBatch, xs: &[f64]) -> Result<Vec<DensityEstimate>> {
    let (points, weights, skipped) = usable(b.samples());
    sign_estimate(xs, &points, &weights, b.len(), skipped, None)
}

/// `f̃_ε(x) = ½ E[sign(x − X) W_ε]`, increasing to the l.s.c. density as
/// `ε ↓ 0`.
pub fn regularized_density(
    b: &QuadBatch,
    epsilon: f64,
    xs: &[f64],
) -> Result<Vec<DensityEstimate>> {
    check_epsilon(epsilon)?;
    let points: Vec<f64> = b.samples().iter().map(ErrorQuad::x).collect();
    let weights: Vec<f64> = b
        .samples()
        .iter()
        .map(|q| regularized_weight(q, epsilon))
        .collect();
    sign_estimate(xs, &points, &weights, b.len(), 0, Some(epsilon))
}

/// Numerator, density and ratio for `E[G | X = x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEstimate {
    pub x: f64,
    /// Estimate of `f(x) E[G | X = x]`.
    pub numerator: DensityEstimate,
    pub density: DensityEstimate,
    pub ratio: f64,
    /// Delta-method standard error of the ratio.
    pub ratio_std_error: f64,
    /// False when the density is within two standard errors of zero.
    pub reliable: bool,
}

/// `f(x) E[G|X=x] = ½ E[sign(x − X)(Γ[X, G/Γ[X]] + 2G·A[X]/Γ[X])]`, divided
/// by [`direct_density`].
pub fn conditional_expectation(b: &QuadBatch, xs: &[f64]) -> Result<Vec<ConditionalEstimate>> {
    let mut points = Vec::with_capacity(b.len());
    let mut w_num = Vec::with_capacity(b.len());
    let mut w_den = Vec::with_capacity(b.len());
    let mut skipped = 0;
    for q in b.samples() {
        let aux = q.aux().ok_or_else(|| {
            Error::InvalidArgument("conditional expectation needs auxiliary G data".into())
        })?;
        match direct_weight(q) {
            Some(w) => {
                points.push(q.x());
                w_num.push(conditional_weight(q, aux.value, aux.gamma_x_g));
                w_den.push(w);
            }
            None => skipped += 1,
        }
    }
    if points.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let s: Vec<f64> = points.iter().map(|p| 0.5 * sign(x - p)).collect();
        let tn: Vec<f64> = s.iter().zip(&w_num).map(|(s, w)| s * w).collect();
        let td: Vec<f64> = s.iter().zip(&w_den).map(|(s, w)| s * w).collect();
        let (mn, md) = (mean_stat(&tn), mean_stat(&td));
        let ratio = mn.mean / md.mean;
        let n = tn.len() as f64;
        let var = (mn.variance - 2.0 * ratio * covariance(&tn, &td) + ratio * ratio * md.variance)
            / (n * md.mean * md.mean);
        let wrap = |m: MeanStat| DensityEstimate {
            x: vec![x],
            value: m.mean,
            std_error: m.std_error,
            n_used: b.len(),
            n_skipped: skipped,
            epsilon: None,
        };
        out.push(ConditionalEstimate {
            x,
            numerator: wrap(mn),
            density: wrap(md),
            ratio,
            ratio_std_error: var.max(0.0).sqrt(),
            reliable: md.mean.abs() > 2.0 * md.std_error,
        });
    }
    Ok(out)
}

/// How the control-variate coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientChoice {
    /// `c*(x) = Σ sign(x−X) W² / Σ W²` over the first half.
    Fitted,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenteredEstimate {
    pub estimate: DensityEstimate,
    pub coefficient: f64,
}

/// `½ mean_{half 2} (sign(x − X) − c) W` with `c` fitted on half 1. Since `W`
/// is centered the subtracted term has mean zero; fitting on the other half
/// keeps the estimate unbiased.
pub fn centered_direct_density(b: &QuadBatch, xs: &[f64]) -> Result<Vec<DensityEstimate>> {
    Ok(
        centered_direct_density_with(b, xs, CoefficientChoice::Fitted)?
            .into_iter()
            .map(|c| c.estimate)
            .collect(),
    )
}

pub fn centered_direct_density_with(
    b: &QuadBatch,
    xs: &[f64],
    choice: CoefficientChoice,
) -> Result<Vec<CenteredEstimate>> {
    let (first, second) = b.halves();
    let (p1, w1, s1) = usable(first);
    let (p2, w2, s2) = usable(second);
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    let w1_sq: Vec<f64> = w1.iter().map(|w| w * w).collect();
    let denom = pairwise_sum(&w1_sq);
    Ok(xs
        .iter()
        .map(|&x| {
            let c = match choice {
                CoefficientChoice::Fixed(c) => c,
                CoefficientChoice::Fitted if denom > 0.0 => {
                    let num: Vec<f64> = p1
                        .iter()
                        .zip(&w1_sq)
                        .map(|(p, w2)| sign(x - p) * w2)
                        .collect();
                    pairwise_sum(&num) / denom
                }
                CoefficientChoice::Fitted => 0.0,
            };
            let terms: Vec<f64> = p2
                .iter()
                .zip(&w2)
                .map(|(p, w)| 0.5 * (sign(x - p) - c) * w)
                .collect();
            let m = mean_stat(&terms);
            CenteredEstimate {
                estimate: DensityEstimate {
                    x: vec![x],
                    value: m.mean,
                    std_error: m.std_error,
                    n_used: second.len(),
                    n_skipped: s1 + s2,
                    epsilon: None,
                },
                coefficient: c,
            }
        })
        .collect())
}

/// Mean of `φ′(X) A[X] + ½ φ″(X) Γ[X]`, which is `E[A[φ(X)]] = 0`.
pub fn generator_centering(b: &QuadBatch, phi: &SmoothFn) -> Result<MeanStat> {
    if b.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    let terms: Vec<f64> = b
        .samples()
        .iter()
        .map(|q| phi.d1(q.x()) * q.a() + 0.5 * phi.d2(q.x()) * q.gamma())
        .collect();
    Ok(mean_stat(&terms))
}

/// Per-sample residual of
/// `E[φ″(X) Γ/(ε+Γ)] = −E[φ′(X) W_ε]`; its mean should vanish.
pub fn ibp_residual(b: &QuadBatch, phi: &SmoothFn, epsilon: f64) -> Result<MeanStat> {
    check_epsilon(epsilon)?;
    if b.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    let terms: Vec<f64> = b
        .samples()
        .iter()
        .map(|q| {
            let x = q.x();
            phi.d2(x) * q.gamma() / (epsilon + q.gamma())
                + phi.d1(x) * regularized_weight(q, epsilon)
        })
        .collect();
    Ok(mean_stat(&terms))
}

/// Mean of `W` (or `W_ε` when `epsilon` is given) over the batch.
pub fn weight_centering(b: &QuadBatch, epsilon: Option<f64>) -> Result<MeanStat> {
    let w: Vec<f64> = match epsilon {
        Some(e) => {
            check_epsilon(e)?;
            b.samples()
                .iter()
                .map(|q| regularized_weight(q, e))
                .collect()
        }
        None => b.samples().iter().filter_map(direct_weight).collect(),
    };
    if w.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    Ok(mean_stat(&w))
}
