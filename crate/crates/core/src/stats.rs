//! Reductions with a fixed summation order.

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStat {
    pub mean: f64,
    /// Unbiased sample variance of the terms.
    pub variance: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanStat {
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

pub fn mean_stat(xs: &[f64]) -> MeanStat {
    let n = xs.len();
    if n == 0 {
        return MeanStat {
            mean: f64::NAN,
            variance: f64::NAN,
            std_error: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(xs) / n as f64;
    let variance = if n > 1 {
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        pairwise_sum(&dev) / (n - 1) as f64
    } else {
        0.0
    };
    MeanStat {
        mean,
        variance,
        std_error: (variance / n as f64).sqrt(),
        n,
    }
}

/// Unbiased sample covariance of two equally long term sequences.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = pairwise_sum(xs) / n as f64;
    let my = pairwise_sum(ys) / n as f64;
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    pairwise_sum(&prods) / (n - 1) as f64
}
