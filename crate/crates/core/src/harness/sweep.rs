//! Bias and variance sweeps over ε with log-log slope fitting, and the
//! MSE-versus-N comparison table.

use nalgebra::DMatrix;

use super::quadrature::AxisRule;
use super::scenario::Scenario;
use crate::calculus::ErrorQuad;
use crate::error::{Error, Result};
use crate::estimators::{direct_weight, gaussian_kernel, sign, DegeneratePolicy, QuadBatch};
use crate::rng::parallel_map;
use crate::stats::mean_stat;

/// Bias below this is treated as quadrature noise and left out of fits.
pub const QUADRATURE_BIAS_FLOOR: f64 = 1e-11;
/// Number of trailing epsilons used for slope fits.
pub const FIT_POINTS: usize = 4;
/// Smallest Monte Carlo sample size accepted by sweeps.
pub const MIN_MC_SAMPLES: usize = 1000;

pub const DEFAULT_BIAS_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const DEFAULT_VARIANCE_EPSILONS: [f64; 4] = [0.008, 0.004, 0.002, 0.001];

/// Kernel estimators that sweeps can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `g(x − X − εA, εΓ)`
    Shifted,
    /// `g(x − X, εΓ)`
    PlainGamma,
    /// `g(x − X, ε)`
    PlainIdentity,
}

pub const KERNEL_NAMES: &[&str] = &["shifted", "plain_gamma", "plain_identity"];

impl KernelKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "shifted" => Ok(Self::Shifted),
            "plain_gamma" | "gamma_cov" => Ok(Self::PlainGamma),
            "plain_identity" | "identity_cov" => Ok(Self::PlainIdentity),
            _ => Err(Error::UnknownName {
                what: "sweep estimator",
                name: name.to_string(),
                valid: KERNEL_NAMES.join(", "),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Shifted => "shifted",
            Self::PlainGamma => "plain_gamma",
            Self::PlainIdentity => "plain_identity",
        }
    }

    /// Kernel value for one scalar sample, `None` if degenerate.
    pub fn term(self, q: &ErrorQuad, x: f64, epsilon: f64) -> Result<Option<f64>> {
        let (y, v) = match self {
            Self::Shifted => (x - q.x() - epsilon * q.a(), epsilon * q.gamma()),
            Self::PlainGamma => (x - q.x(), epsilon * q.gamma()),
            Self::PlainIdentity => (x - q.x(), epsilon),
        };
        gaussian_kernel(
            &[y],
            &DMatrix::from_element(1, 1, v),
            DegeneratePolicy::Skip,
        )
    }
}

/// Monte Carlo sample size or the noise-free quadrature oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    MonteCarlo(usize),
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: String,
    pub estimator: String,
    pub epsilons: Vec<f64>,
    pub samples: SampleSize,
    pub points: Vec<f64>,
    pub seed: u64,
    pub workers: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidArgument("no epsilons given".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "epsilons must be positive, got {e}"
            )));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "epsilons must be strictly decreasing".into(),
            ));
        }
        if let SampleSize::MonteCarlo(n) = self.samples {
            if n < MIN_MC_SAMPLES {
                return Err(Error::InvalidArgument(format!(
                    "Monte Carlo sweeps need at least {MIN_MC_SAMPLES} samples, got {n}"
                )));
            }
        }
        if self.points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("query points must be finite".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Sample size; 0 for quadrature.
    pub n: usize,
    pub x: f64,
    pub estimate: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub std_error: f64,
}

/// Fitted slope at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub x: f64,
    pub slope: Option<f64>,
    pub epsilons_used: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SlopeFit>,
    pub notices: Vec<String>,
}

impl SweepReport {
    /// Slope at the first query point.
    pub fn slope(&self) -> Option<f64> {
        self.fits.first().and_then(|f| f.slope)
    }
}

/// Ordinary least-squares slope of `ln y` on `ln x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least two points".into(),
        ));
    }
    if let Some(p) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs positive values, got ({}, {})",
            p.0, p.1
        )));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "slope fit needs distinct abscissae".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Quadrature rule used by the sweeps, by oracle dimension.
pub fn sweep_rule(dim: usize) -> AxisRule {
    match dim {
        1 => AxisRule::Composite {
            panels: 512,
            order: 16,
            half_width: 12.0,
        },
        2 => AxisRule::Composite {
            panels: 96,
            order: 8,
            half_width: 10.0,
        },
        _ => AxisRule::Gauss { order: 48 },
    }
}

/// Moments of one kernel term under the law of the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    /// `E[g]`, renormalized over non-degenerate samples.
    pub mean: f64,
    /// `E[g²]` on the same footing.
    pub second: f64,
    /// Standard error of `mean` (0 for quadrature).
    pub std_error: f64,
    /// Standard error of `second` (0 for quadrature).
    pub second_std_error: f64,
}

impl KernelMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

fn oracle_moments(s: &Scenario, kind: KernelKind, x: f64, epsilon: f64) -> Result<KernelMoments> {
    let dim = s.oracle_dim().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "scenario '{}' has no quadrature model; use a Monte Carlo sample size",
            s.name
        ))
    })?;
    let rule = sweep_rule(dim);
    let term = |q: &ErrorQuad| kind.term(q, x, epsilon).ok().flatten();
    let mass = s.oracle_expectation(&|q| term(q).map_or(0.0, |_| 1.0), rule)?;
    if mass <= 0.0 {
        return Err(Error::NoUsableSamples);
    }
    let m1 = s.oracle_expectation(&|q| term(q).unwrap_or(0.0), rule)?;
    let m2 = s.oracle_expectation(&|q| term(q).map_or(0.0, |g| g * g), rule)?;
    Ok(KernelMoments {
        mean: m1 / mass,
        second: m2 / mass,
        std_error: 0.0,
        second_std_error: 0.0,
    })
}

fn sample_moments(b: &QuadBatch, kind: KernelKind, x: f64, epsilon: f64) -> Result<KernelMoments> {
    let mut g = Vec::with_capacity(b.len());
    for q in b.samples() {
        if let Some(v) = kind.term(q, x, epsilon)? {
            g.push(v);
        }
    }
    if g.is_empty() {
        return Err(Error::NoUsableSamples);
    }
    let first = mean_stat(&g);
    let sq: Vec<f64> = g.iter().map(|v| v * v).collect();
    let second = mean_stat(&sq);
    Ok(KernelMoments {
        mean: first.mean,
        second: second.mean,
        std_error: first.std_error,
        second_std_error: second.std_error,
    })
}

struct Prepared {
    scenario: Scenario,
    kind: KernelKind,
    batch: Option<QuadBatch>,
}

fn prepare(cfg: &SweepConfig) -> Result<Prepared> {
    cfg.validate()?;
    let scenario = Scenario::by_name(&cfg.scenario)?;
    let kind = KernelKind::parse(&cfg.estimator)?;
    let probe = scenario.sample_batch(256, cfg.seed ^ 0x5eed, 1);
    if probe.samples().iter().all(|q| q.gamma() <= 0.0) {
        return Err(Error::Degenerate(format!(
            "scenario '{}' has Γ[X] = 0 on every probe sample; the law of X has no density",
            scenario.name
        )));
    }
    if !scenario.has_exact_density() {
        return Err(Error::InvalidArgument(format!(
            "scenario '{}' has no exact density to measure bias against",
            scenario.name
        )));
    }
    let batch = match cfg.samples {
        SampleSize::MonteCarlo(n) => Some(scenario.sample_batch(n, cfg.seed, cfg.workers)),
        SampleSize::Quadrature => {
            if scenario.oracle_dim().is_none() {
                return Err(Error::InvalidArgument(format!(
                    "scenario '{}' does not support quadrature",
                    scenario.name
                )));
            }
            None
        }
    };
    Ok(Prepared {
        scenario,
        kind,
        batch,
    })
}

fn query_points(cfg: &SweepConfig, s: &Scenario) -> Vec<f64> {
    if cfg.points.is_empty() {
        vec![s.sweep_point]
    } else {
        cfg.points.clone()
    }
}

/// Moments for every `(x, ε)` pair, x-major, in config order.
fn all_moments(
    p: &Prepared,
    cfg: &SweepConfig,
    xs: &[f64],
) -> Result<Vec<(f64, f64, KernelMoments)>> {
    let items: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| cfg.epsilons.iter().map(move |&e| (x, e)))
        .collect();
    let out = parallel_map(&items, cfg.workers, |&(x, e)| {
        let m = match &p.batch {
            Some(b) => sample_moments(b, p.kind, x, e),
            None => oracle_moments(&p.scenario, p.kind, x, e),
        };
        m.map(|m| (x, e, m))
    });
    out.into_iter().collect()
}

fn n_of(cfg: &SweepConfig, p: &Prepared) -> usize {
    p.batch.as_ref().map_or(0, |b| match cfg.samples {
        SampleSize::MonteCarlo(_) => b.len(),
        SampleSize::Quadrature => 0,
    })
}

fn fit_trailing(
    x: f64,
    candidates: Vec<(f64, f64)>,
    dropped: &[f64],
    notices: &mut Vec<String>,
) -> SlopeFit {
    if !dropped.is_empty() {
        notices.push(format!(
            "x = {x}: epsilons {dropped:?} dropped from the fit (bias below noise level)"
        ));
    }
    let start = candidates.len().saturating_sub(FIT_POINTS);
    let used = &candidates[start..];
    let slope = if used.len() >= 2 {
        fit_loglog_slope(used).ok()
    } else {
        notices.push(format!("x = {x}: fewer than two usable epsilons, no slope"));
        None
    };
    SlopeFit {
        x,
        slope,
        epsilons_used: used.iter().map(|p| p.0).collect(),
    }
}

/// Bias `E[g] − f(x)` per `(ε, x)` and the fitted order in ε.
pub fn run_bias_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let p = prepare(cfg)?;
    let xs = query_points(cfg, &p.scenario);
    let moments = all_moments(&p, cfg, &xs)?;
    let n = n_of(cfg, &p);
    let mut rows = Vec::with_capacity(moments.len());
    let mut fits = Vec::new();
    let mut notices = Vec::new();
    for &x in &xs {
        let reference = p.scenario.exact_density(x).expect("checked in prepare");
        let mut pts = Vec::new();
        let mut dropped = Vec::new();
        for &(mx, e, m) in moments.iter().filter(|r| r.0 == x) {
            let abs_error = (m.mean - reference).abs();
            rows.push(SweepRow {
                epsilon: e,
                n,
                x: mx,
                estimate: m.mean,
                reference,
                abs_error,
                std_error: m.std_error,
            });
            let floor = match p.batch {
                Some(_) => 2.0 * m.std_error,
                None => QUADRATURE_BIAS_FLOOR,
            };
            if abs_error > floor {
                pts.push((e, abs_error));
            } else {
                dropped.push(e);
            }
        }
        fits.push(fit_trailing(x, pts, &dropped, &mut notices));
    }
    Ok(SweepReport {
        rows,
        fits,
        notices,
    })
}

/// `√ε · Var[g]` per `(ε, x)` against `f(x) / √(4π γ(x))`, and the fitted
/// slope of `ln Var` in `ln ε`.
pub fn run_variance_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let p = prepare(cfg)?;
    let xs = query_points(cfg, &p.scenario);
    if p.scenario.gamma_at(xs[0]).is_none() {
        return Err(Error::InvalidArgument(format!(
            "scenario '{}' has no deterministic Γ[X] = γ(X); the reduced variance constant is unavailable",
            p.scenario.name
        )));
    }
    let moments = all_moments(&p, cfg, &xs)?;
    let n = n_of(cfg, &p);
    let mut rows = Vec::with_capacity(moments.len());
    let mut fits = Vec::new();
    let mut notices = Vec::new();
    for &x in &xs {
        let f = p.scenario.exact_density(x).expect("checked in prepare");
        let gamma = p.scenario.gamma_at(x).expect("checked above");
        let reference = f / (4.0 * std::f64::consts::PI * gamma).sqrt();
        let mut pts = Vec::new();
        let mut dropped = Vec::new();
        for &(mx, e, m) in moments.iter().filter(|r| r.0 == x) {
            let var = m.variance();
            let estimate = e.sqrt() * var;
            rows.push(SweepRow {
                epsilon: e,
                n,
                x: mx,
                estimate,
                reference,
                abs_error: (estimate - reference).abs(),
                std_error: e.sqrt() * m.second_std_error,
            });
            if var > 0.0 {
                pts.push((e, var));
            } else {
                dropped.push(e);
            }
        }
        fits.push(fit_trailing(x, pts, &dropped, &mut notices));
    }
    Ok(SweepReport {
        rows,
        fits,
        notices,
    })
}

/// One line of the MSE-versus-N table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub estimator: &'static str,
    pub n: usize,
    /// MSE-optimal ε on the grid; `None` for the direct estimator.
    pub epsilon: Option<f64>,
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
}

pub const COMPARE_SAMPLE_SIZES: [usize; 5] = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];

fn epsilon_grid() -> Vec<f64> {
    (0..=64)
        .map(|k| 10f64.powf(-4.0 + k as f64 * 0.0625))
        .collect()
}

/// Predicted `MSE(N) = bias(ε)² + Var(ε)/N` at the best grid ε for the
/// plain identity and shifted kernel estimators, and `Var/N` for the direct
/// estimator, all from quadrature.
pub fn run_compare(scenario: &Scenario, x: f64, workers: usize) -> Result<Vec<CompareRow>> {
    let Some(dim) = scenario.oracle_dim() else {
        return Err(Error::InvalidArgument(format!(
            "scenario '{}' does not support quadrature",
            scenario.name
        )));
    };
    if dim != 1 {
        return Err(Error::InvalidArgument(
            "the comparison table is defined for one-dimensional scenarios".into(),
        ));
    }
    let f = scenario.exact_density(x).ok_or_else(|| {
        Error::InvalidArgument(format!("scenario '{}' has no exact density", scenario.name))
    })?;
    let grid = epsilon_grid();
    let mut rows = Vec::new();
    for kind in [KernelKind::PlainIdentity, KernelKind::Shifted] {
        let table: Vec<KernelMoments> =
            parallel_map(&grid, workers, |&e| oracle_moments(scenario, kind, x, e))
                .into_iter()
                .collect::<Result<_>>()?;
        for &n in &COMPARE_SAMPLE_SIZES {
            let best = grid
                .iter()
                .zip(&table)
                .map(|(&e, m)| {
                    let bias = m.mean - f;
                    let var = m.variance();
                    (e, bias, var, bias * bias + var / n as f64)
                })
                .min_by(|a, b| a.3.total_cmp(&b.3))
                .expect("non-empty grid");
            rows.push(CompareRow {
                estimator: kind.name(),
                n,
                epsilon: Some(best.0),
                mse: best.3,
                bias: best.1,
                variance: best.2,
            });
        }
    }
    let rule = sweep_rule(dim);
    let term = |q: &ErrorQuad| direct_weight(q).map_or(0.0, |w| 0.5 * sign(x - q.x()) * w);
    let m1 = scenario.oracle_expectation(&term, rule)?;
    let m2 = scenario.oracle_expectation(&|q| term(q).powi(2), rule)?;
    let var = m2 - m1 * m1;
    for &n in &COMPARE_SAMPLE_SIZES {
        rows.push(CompareRow {
            estimator: "direct",
            n,
            epsilon: None,
            mse: (m1 - f).powi(2) + var / n as f64,
            bias: m1 - f,
            variance: var,
        });
    }
    Ok(rows)
}

/// Slope of `ln MSE` on `ln N` per estimator, in table order.
pub fn compare_slopes(rows: &[CompareRow]) -> Vec<(&'static str, f64)> {
    let mut names: Vec<&'static str> = Vec::new();
    for r in rows {
        if !names.contains(&r.estimator) {
            names.push(r.estimator);
        }
    }
    names
        .into_iter()
        .filter_map(|name| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.estimator == name)
                .map(|r| (r.n as f64, r.mse))
                .collect();
            fit_loglog_slope(&pts).ok().map(|s| (name, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(scenario: &str, estimator: &str, eps: &[f64]) -> SweepConfig {
        SweepConfig {
            scenario: scenario.into(),
            estimator: estimator.into(),
            epsilons: eps.to_vec(),
            samples: SampleSize::Quadrature,
            points: vec![],
            seed: 1,
            workers: 1,
        }
    }

    #[test]
    fn slope_examples() {
        assert!((fit_loglog_slope(&[(1.0, 1.0), (10.0, 100.0)]).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&[(1.0, 3.0), (10.0, 3.0)]).unwrap().abs() < 1e-12);
        let s = fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert!((s + 1.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg("gaussian", "shifted", &[0.1, 0.2]).validate().is_err());
        assert!(cfg("gaussian", "shifted", &[0.1, 0.1]).validate().is_err());
        assert!(cfg("gaussian", "shifted", &[0.1, -0.2]).validate().is_err());
        let mut c = cfg("gaussian", "shifted", &[0.2, 0.1]);
        c.samples = SampleSize::MonteCarlo(999);
        assert!(c.validate().is_err());
        c.samples = SampleSize::MonteCarlo(1000);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn degenerate_scenario_rejected() {
        let e = run_bias_sweep(&cfg("euler_zero_noise", "shifted", &[0.2, 0.1])).unwrap_err();
        assert!(matches!(e, Error::Degenerate(_)), "{e}");
    }

    #[test]
    fn gaussian_shifted_bias_is_second_order() {
        let r = run_bias_sweep(&cfg("gaussian", "shifted", &DEFAULT_BIAS_EPSILONS)).unwrap();
        let s = r.slope().unwrap();
        assert!((1.7..=2.3).contains(&s), "{s}");
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.n == 0 && row.std_error == 0.0));
    }

    #[test]
    fn gaussian_variance_constant() {
        let r =
            run_variance_sweep(&cfg("gaussian", "shifted", &DEFAULT_VARIANCE_EPSILONS)).unwrap();
        let last = r.rows.last().unwrap();
        assert!((last.reference - 0.1125395).abs() < 1e-6);
        assert!(last.abs_error / last.reference < 0.05, "{last:?}");
    }
}
