//! Built-in scenarios: a way to draw [`ErrorQuad`] samples, plus whatever
//! oracles are available for them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use super::quadrature::{
    composite_legendre, gauss_hermite, quadrature_expectation_with, AxisRule, GaussRule,
};
use crate::calculus::{quad_of, sample_base, BasePoint, CoordinateSpec, ErrorQuad, Jet2};
use crate::error::{Error, Result};
use crate::estimators::QuadBatch;
use crate::poisson::{sample_poisson_quad, PointFunction, PoissonFunctionalSpec};
use crate::rng::{generate, StreamRng};
use crate::wiener::{draw_increments, jet_oracle_quad, SdeCoefficients};

type Sampler = Arc<dyn Fn(&mut StreamRng) -> Result<ErrorQuad> + Send + Sync>;
type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Builder = Arc<dyn Fn(&BasePoint) -> Result<(Jet2, Option<Jet2>)> + Send + Sync>;

pub const SCENARIO_NAMES: &[&str] = &[
    "gaussian",
    "lognormal",
    "gaussian_pair",
    "triangular",
    "gbm_exact",
    "gbm_euler",
    "poisson_mc_unit",
    "euler_zero_noise",
];

/// Which density representation a scenario satisfies the hypotheses of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityTheorem {
    /// `1/Γ[X]` regular enough: the unregularized sign formula applies.
    Direct,
    /// Only the regularized, monotone-limit form is covered.
    RegularizedOnly,
    /// The law of `X` has atoms or `Γ` vanishes: no density theorem applies.
    Outside,
}

/// A functional of at most three base coordinates, usable by the quadrature
/// oracle.
#[derive(Clone)]
pub struct JetModel {
    pub specs: Arc<[CoordinateSpec]>,
    build: Builder,
}

impl JetModel {
    pub fn new(
        specs: Vec<CoordinateSpec>,
        build: impl Fn(&BasePoint) -> Result<(Jet2, Option<Jet2>)> + Send + Sync + 'static,
    ) -> Self {
        Self {
            specs: specs.into(),
            build: Arc::new(build),
        }
    }

    pub fn quad_at(&self, base: &BasePoint) -> Result<ErrorQuad> {
        let (x, g) = (self.build)(base)?;
        quad_of(&x, base, g.as_ref())
    }

    pub fn jets_at(&self, base: &BasePoint) -> Result<(Jet2, Option<Jet2>)> {
        (self.build)(base)
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<ErrorQuad> {
        let base = sample_base(&self.specs, rng);
        self.quad_at(&base)
    }
}

#[derive(Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub theorem: DensityTheorem,
    /// Three interior query points used by the default checks.
    pub interior_points: [f64; 3],
    /// Default query point for sweeps.
    pub sweep_point: f64,
    /// Finite interval carrying (numerically) all of the density's mass.
    pub support: (f64, f64),
    sampler: Sampler,
    exact_density: Option<Density>,
    /// `x ↦ Γ[X]` when `Γ[X]` is a deterministic function of `X`.
    gamma_at: Option<Density>,
    model: Option<JetModel>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("theorem", &self.theorem)
            .finish_non_exhaustive()
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn lognormal_pdf(x: f64, mu: f64, s: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = (x.ln() - mu) / s;
    (-0.5 * z * z).exp() / (x * s * (2.0 * PI).sqrt())
}

const GBM_VOL: f64 = 0.3;
const GBM_DRIFT: f64 = 0.05;
const GBM_HORIZON: f64 = 1.0;
const GBM_X0: f64 = 1.0;
const GBM_EULER_STEPS: usize = 16;
const POISSON_INTENSITY: f64 = 5.0;

impl Scenario {
    fn from_model(
        name: &'static str,
        description: &'static str,
        theorem: DensityTheorem,
        interior_points: [f64; 3],
        sweep_point: f64,
        support: (f64, f64),
        model: JetModel,
    ) -> Self {
        let m = model.clone();
        Self {
            name,
            description,
            theorem,
            interior_points,
            sweep_point,
            support,
            sampler: Arc::new(move |rng| m.sample(rng)),
            exact_density: None,
            gamma_at: None,
            model: Some(model),
        }
    }

    fn with_density(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact_density = Some(Arc::new(f));
        self
    }

    fn with_gamma_at(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.gamma_at = Some(Arc::new(f));
        self
    }

    pub fn gaussian() -> Self {
        let model = JetModel::new(vec![CoordinateSpec::OuGaussian { variance: 1.0 }], |b| {
            Ok((Jet2::lift(b, 0)?, None))
        });
        Self::from_model(
            "gaussian",
            "X = G, G standard normal (OU structure)",
            DensityTheorem::Direct,
            [-1.0, 0.0, 1.0],
            0.0,
            (-10.0, 10.0),
            model,
        )
        .with_density(std_normal_pdf)
        .with_gamma_at(|_| 1.0)
    }

    pub fn lognormal() -> Self {
        let model = JetModel::new(vec![CoordinateSpec::OuGaussian { variance: 1.0 }], |b| {
            Ok((Jet2::lift(b, 0)?.exp(), None))
        });
        Self::from_model(
            "lognormal",
            "X = exp(G), G standard normal",
            DensityTheorem::Direct,
            [0.5, 1.0, 2.0],
            1.0,
            (0.0, 400.0),
            model,
        )
        .with_density(|x| lognormal_pdf(x, 0.0, 1.0))
        .with_gamma_at(|x| x * x)
    }

    pub fn gaussian_pair() -> Self {
        let ou = CoordinateSpec::OuGaussian { variance: 1.0 };
        let model = JetModel::new(vec![ou.clone(), ou], |b| {
            let s = Jet2::lift(b, 1)?.sin();
            Ok((&Jet2::lift(b, 0)? + &s, Some(s)))
        });
        Self::from_model(
            "gaussian_pair",
            "X = G1 + sin(G2), tracked G = sin(G2)",
            DensityTheorem::Direct,
            [-1.0, 0.0, 1.0],
            0.0,
            (-11.0, 11.0),
            model,
        )
        .with_density(gaussian_pair_density)
    }

    pub fn triangular() -> Self {
        let model = JetModel::new(vec![CoordinateSpec::McUnit, CoordinateSpec::McUnit], |b| {
            Ok((&Jet2::lift(b, 0)? + &Jet2::lift(b, 1)?, None))
        });
        Self::from_model(
            "triangular",
            "X = U0 + U1 on the Monte Carlo space (weight u^2(1-u)^2)",
            DensityTheorem::RegularizedOnly,
            [0.5, 1.0, 1.5],
            1.0,
            (0.0, 2.0),
            model,
        )
        .with_density(|x| {
            if (0.0..=2.0).contains(&x) {
                1.0 - (x - 1.0).abs()
            } else {
                0.0
            }
        })
    }

    pub fn gbm_exact() -> Self {
        let model = JetModel::new(
            vec![CoordinateSpec::OuGaussian {
                variance: GBM_HORIZON,
            }],
            |b| {
                let e = Jet2::lift(b, 0)?
                    .scale(GBM_VOL)
                    .add_const((GBM_DRIFT - 0.5 * GBM_VOL * GBM_VOL) * GBM_HORIZON);
                Ok((e.exp().scale(GBM_X0), None))
            },
        );
        let mu = GBM_X0.ln() + (GBM_DRIFT - 0.5 * GBM_VOL * GBM_VOL) * GBM_HORIZON;
        let s = GBM_VOL * GBM_HORIZON.sqrt();
        Self::from_model(
            "gbm_exact",
            "GBM(vol 0.3, drift 0.05) at T = 1 from x0 = 1, exact solution in B_T",
            DensityTheorem::Direct,
            [0.8, 1.0, 1.3],
            1.0,
            (0.0, 20.0),
            model,
        )
        .with_density(move |x| lognormal_pdf(x, mu, s))
        .with_gamma_at(|x| GBM_VOL * GBM_VOL * x * x * GBM_HORIZON)
    }

    fn euler(
        name: &'static str,
        description: &'static str,
        c: SdeCoefficients,
        theorem: DensityTheorem,
    ) -> Self {
        Self {
            name,
            description,
            theorem,
            interior_points: [0.8, 1.0, 1.3],
            sweep_point: 1.0,
            support: (0.0, 20.0),
            sampler: Arc::new(move |rng| {
                let inc = draw_increments(GBM_HORIZON, GBM_EULER_STEPS, rng)?;
                jet_oracle_quad(GBM_X0, GBM_HORIZON, &c, &inc)
            }),
            exact_density: None,
            gamma_at: None,
            model: None,
        }
    }

    pub fn gbm_euler() -> Self {
        Self::euler(
            "gbm_euler",
            "Euler scheme (16 steps) for GBM(vol 0.3, drift 0.05), Γ and A by jet calculus over the increments",
            SdeCoefficients::gbm(GBM_VOL, GBM_DRIFT),
            DensityTheorem::Direct,
        )
    }

    pub fn euler_zero_noise() -> Self {
        Self::euler(
            "euler_zero_noise",
            "Euler scheme without diffusion: X deterministic, Γ ≡ 0 (degenerate)",
            SdeCoefficients::zero_noise(1.0),
            DensityTheorem::Outside,
        )
    }

    pub fn poisson_mc_unit(lambda: f64, h: PointFunction) -> Result<Self> {
        let spec = PoissonFunctionalSpec::mc_unit(lambda, h)?;
        Ok(Self {
            name: "poisson_mc_unit",
            description: "N(h) for a Poisson process of intensity 5·uniform[0,1], mc_unit structure on points; law has an atom at 0",
            theorem: DensityTheorem::Outside,
            interior_points: [2.0, 2.5, 3.0],
            sweep_point: 2.5,
            support: (0.0, 30.0),
            sampler: Arc::new(move |rng| sample_poisson_quad(&spec, rng)),
            exact_density: None,
            gamma_at: None,
            model: None,
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::gaussian()),
            "lognormal" => Ok(Self::lognormal()),
            "gaussian_pair" => Ok(Self::gaussian_pair()),
            "triangular" => Ok(Self::triangular()),
            "gbm_exact" => Ok(Self::gbm_exact()),
            "gbm_euler" => Ok(Self::gbm_euler()),
            "poisson_mc_unit" => Self::poisson_mc_unit(POISSON_INTENSITY, PointFunction::Identity),
            "euler_zero_noise" => Ok(Self::euler_zero_noise()),
            _ => Err(Error::UnknownName {
                what: "scenario",
                name: name.to_string(),
                valid: SCENARIO_NAMES.join(", "),
            }),
        }
    }

    pub fn all() -> Vec<Self> {
        SCENARIO_NAMES
            .iter()
            .map(|n| Self::by_name(n).expect("built-in scenario"))
            .collect()
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<ErrorQuad> {
        (self.sampler)(rng)
    }

    /// `n` draws; failed or non-finite draws are counted as invalid.
    pub fn sample_batch(&self, n: usize, seed: u64, workers: usize) -> QuadBatch {
        QuadBatch::from_results(generate(n, seed, workers, |rng| self.sample(rng)))
    }

    pub fn exact_density(&self, x: f64) -> Option<f64> {
        self.exact_density.as_ref().map(|f| f(x))
    }

    pub fn has_exact_density(&self) -> bool {
        self.exact_density.is_some()
    }

    pub fn gamma_at(&self, x: f64) -> Option<f64> {
        self.gamma_at.as_ref().map(|f| f(x))
    }

    pub fn model(&self) -> Option<&JetModel> {
        self.model.as_ref()
    }

    /// Number of base coordinates seen by the quadrature oracle.
    pub fn oracle_dim(&self) -> Option<usize> {
        self.model.as_ref().map(|m| m.specs.len())
    }

    /// `E[f(quad)]` by tensor quadrature over the base coordinates.
    pub fn oracle_expectation(
        &self,
        f: &(dyn Fn(&ErrorQuad) -> f64 + Sync),
        rule: AxisRule,
    ) -> Result<f64> {
        let model = self.model.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("scenario '{}' has no quadrature model", self.name))
        })?;
        let failure = std::cell::Cell::new(None);
        let value = quadrature_expectation_with(
            &|u: &[f64]| {
                let base = BasePoint::new(u.to_vec(), Arc::clone(&model.specs));
                match base.and_then(|b| model.quad_at(&b)) {
                    Ok(q) => f(&q),
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                }
            },
            &model.specs,
            rule,
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// `∫ exact_density` over the support by composite Gauss–Legendre.
    pub fn density_mass(&self) -> Option<f64> {
        let f = self.exact_density.as_ref()?;
        let (a, b) = self.support;
        let rule = composite_legendre(a, b, 4000, 8).ok()?;
        Some(
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * f(*x))
                .sum(),
        )
    }
}

fn hermite96() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(96).expect("order within range"))
}

/// `f(x) = E[φ(x − sin G2)]` for `X = G1 + sin(G2)`.
pub fn gaussian_pair_density(x: f64) -> f64 {
    let r = hermite96();
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(g, w)| w * std_normal_pdf(x - g.sin()))
        .sum()
}

/// `E[sin(G2) | X = x]` for `X = G1 + sin(G2)`, as a ratio of two
/// quadratures over `G2` with `G1` integrated out in closed form.
pub fn gaussian_pair_conditional_sin(x: f64) -> f64 {
    let r = hermite96();
    let num: f64 = r
        .nodes
        .iter()
        .zip(&r.weights)
        .map(|(g, w)| w * g.sin() * std_normal_pdf(x - g.sin()))
        .sum();
    num / gaussian_pair_density(x)
}
