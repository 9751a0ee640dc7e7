//! Centering and integration-by-parts checks on a simulated batch.

use super::scenario::{DensityTheorem, Scenario};
use crate::calculus::SmoothFn;
use crate::error::Result;
use crate::estimators::{generator_centering, ibp_residual, weight_centering, QuadBatch};
use crate::stats::MeanStat;

/// Largest `|z|` accepted for a centered statistic.
pub const Z_THRESHOLD: f64 = 4.0;
/// ε used by the regularized weight when the direct weight is not covered.
pub const CENTERING_EPSILON: f64 = 0.1;
pub const IBP_EPSILONS: [f64; 2] = [0.5, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub stat: MeanStat,
    pub z: f64,
}

impl IdentityCheck {
    fn new(name: String, stat: MeanStat) -> Self {
        let z = stat.z_score(0.0);
        Self { name, stat, z }
    }

    pub fn passed(&self) -> bool {
        self.z.abs() <= Z_THRESHOLD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub scenario: String,
    pub samples: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Runs every check on `batch`. The direct weight is centered only when the
/// unregularized representation applies; otherwise `W_ε` at ε = 0.1 is used.
pub fn run_identity_checks(
    name: &str,
    batch: &QuadBatch,
    theorem: DensityTheorem,
) -> Result<IdentityReport> {
    let mut checks = Vec::new();
    for phi in [SmoothFn::identity(), SmoothFn::square(), SmoothFn::cos()] {
        let stat = generator_centering(batch, &phi)?;
        checks.push(IdentityCheck::new(
            format!("generator_centering[{}]", phi.name()),
            stat,
        ));
    }
    for eps in IBP_EPSILONS {
        for phi in [SmoothFn::cos(), SmoothFn::square()] {
            let stat = ibp_residual(batch, &phi, eps)?;
            checks.push(IdentityCheck::new(
                format!("ibp_residual[{},eps={eps}]", phi.name()),
                stat,
            ));
        }
    }
    let (label, eps) = match theorem {
        DensityTheorem::Direct => ("weight_centering[direct]".to_string(), None),
        _ => (
            format!("weight_centering[eps={CENTERING_EPSILON}]"),
            Some(CENTERING_EPSILON),
        ),
    };
    checks.push(IdentityCheck::new(label, weight_centering(batch, eps)?));
    Ok(IdentityReport {
        scenario: name.to_string(),
        samples: batch.len(),
        checks,
    })
}

/// Samples `n` draws of `scenario` and runs [`run_identity_checks`].
pub fn run_identity_suite(
    scenario: &Scenario,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<IdentityReport> {
    let batch = scenario.sample_batch(n, seed, workers);
    run_identity_checks(scenario.name, &batch, scenario.theorem)
}
