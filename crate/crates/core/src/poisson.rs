//! Functionals `X = N(h) = Σ h(p_i)` of a Poisson point process with finite
//! intensity on an interval, under the white error structure:
//!
//! ```text
//! Γ[N(h)] = N(γ[h]),   A[N(h)] = N(a[h]),   Γ[N(h), N(g)] = N(γ[h, g])
//! γ[h, g](p) = γ(p) h′(p) g′(p),   a[h](p) = ½ γ(p) h″(p) + a(p) h′(p)
//! ```
//!
//! where `(γ, a)` is the one-dimensional structure carried by each point.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::calculus::{
    quad_of, BasePoint, CoordinateSpec, CustomCoordinate, ErrorQuad, Jet2, SmoothFn,
    MAX_COORDINATES,
};
use crate::error::{Error, Result};
use crate::rng::{generate, StreamRng};
use crate::stats::{mean_stat, MeanStat};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SamplerFn = Arc<dyn Fn(&mut StreamRng) -> f64 + Send + Sync>;

/// Point functions available for the built-in `poisson_mc_unit` spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFunction {
    Identity,
    Sin,
    /// `p + p²`
    Polynomial,
}

impl PointFunction {
    pub const NAMES: &'static [&'static str] = &["identity", "sin", "polynomial"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "identity" => Ok(Self::Identity),
            "sin" => Ok(Self::Sin),
            "polynomial" => Ok(Self::Polynomial),
            _ => Err(Error::UnknownName {
                what: "point function",
                name: name.to_string(),
                valid: Self::NAMES.join(", "),
            }),
        }
    }

    fn derivatives(self) -> (ScalarFn, ScalarFn, ScalarFn) {
        match self {
            Self::Identity => (Arc::new(|p| p), Arc::new(|_| 1.0), Arc::new(|_| 0.0)),
            Self::Sin => (
                Arc::new(f64::sin),
                Arc::new(f64::cos),
                Arc::new(|p: f64| -p.sin()),
            ),
            Self::Polynomial => (
                Arc::new(|p| p + p * p),
                Arc::new(|p| 1.0 + 2.0 * p),
                Arc::new(|_| 2.0),
            ),
        }
    }
}

/// Point process intensity, point function `h` with derivatives, and the
/// one-dimensional structure carried by each point.
#[derive(Clone)]
pub struct PoissonFunctionalSpec {
    name: String,
    total_mass: f64,
    support: (f64, f64),
    point_sampler: SamplerFn,
    h: ScalarFn,
    h1: ScalarFn,
    h2: ScalarFn,
    base_gamma: ScalarFn,
    base_gamma_prime: ScalarFn,
    base_a: ScalarFn,
}

impl fmt::Debug for PoissonFunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonFunctionalSpec")
            .field("name", &self.name)
            .field("total_mass", &self.total_mass)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

/// The evaluators making up a [`PoissonFunctionalSpec`].
#[derive(Clone)]
pub struct PoissonParts {
    pub point_sampler: SamplerFn,
    pub h: ScalarFn,
    pub h1: ScalarFn,
    pub h2: ScalarFn,
    pub base_gamma: ScalarFn,
    pub base_gamma_prime: ScalarFn,
    pub base_a: ScalarFn,
}

fn fd_check(name: &'static str, f: &ScalarFn, df: &ScalarFn, p: f64) -> Result<()> {
    let step = 1e-5 * p.abs().max(1.0);
    let estimated = (f(p + step) - f(p - step)) / (2.0 * step);
    let supplied = df(p);
    let diff = (estimated - supplied).abs();
    if diff.is_nan() || diff > 1e-5 * supplied.abs().max(1.0) {
        return Err(Error::DerivativeMismatch {
            name,
            point: p,
            supplied,
            estimated,
        });
    }
    Ok(())
}

impl PoissonFunctionalSpec {
    /// Validates finiteness of the mass and the derivative evaluators by
    /// central differences at ten interior probes of `support`.
    pub fn new(
        name: impl Into<String>,
        total_mass: f64,
        support: (f64, f64),
        parts: PoissonParts,
    ) -> Result<Self> {
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "total mass must be positive and finite, got {total_mass}"
            )));
        }
        let (lo, hi) = support;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument("empty support interval".into()));
        }
        for k in 0..10 {
            let p = lo + (hi - lo) * (k as f64 + 0.5) / 10.0;
            fd_check("h1", &parts.h, &parts.h1, p)?;
            fd_check("h2", &parts.h1, &parts.h2, p)?;
            fd_check(
                "base_gamma_prime",
                &parts.base_gamma,
                &parts.base_gamma_prime,
                p,
            )?;
        }
        Ok(Self {
            name: name.into(),
            total_mass,
            support,
            point_sampler: parts.point_sampler,
            h: parts.h,
            h1: parts.h1,
            h2: parts.h2,
            base_gamma: parts.base_gamma,
            base_gamma_prime: parts.base_gamma_prime,
            base_a: parts.base_a,
        })
    }

    /// `μ = λ·uniform[0, 1]` with the `mc_unit` structure on each point.
    pub fn mc_unit(lambda: f64, h: PointFunction) -> Result<Self> {
        let (h0, h1, h2) = h.derivatives();
        let unit = CoordinateSpec::McUnit;
        let (g, gp, a) = (unit.clone(), unit.clone(), unit);
        Self::new(
            "poisson_mc_unit",
            lambda,
            (0.0, 1.0),
            PoissonParts {
                point_sampler: Arc::new(|rng: &mut StreamRng| rng.random::<f64>()),
                h: h0,
                h1,
                h2,
                base_gamma: Arc::new(move |p| g.gamma(p)),
                base_gamma_prime: Arc::new(move |p| gp.gamma_prime(p)),
                base_a: Arc::new(move |p| a.gen_a(p)),
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn h(&self, p: f64) -> f64 {
        (self.h)(p)
    }

    /// The spec with `h` replaced by `c·h`.
    pub fn scaled(&self, c: f64) -> Self {
        let (h, h1, h2) = (self.h.clone(), self.h1.clone(), self.h2.clone());
        Self {
            h: Arc::new(move |p| c * h(p)),
            h1: Arc::new(move |p| c * h1(p)),
            h2: Arc::new(move |p| c * h2(p)),
            ..self.clone()
        }
    }

    /// `γ[h](p) = γ(p) h′(p)²`
    pub fn gamma_h(&self, p: f64) -> f64 {
        let d = (self.h1)(p);
        (self.base_gamma)(p) * d * d
    }

    /// `a[h](p) = ½ γ(p) h″(p) + a(p) h′(p)`
    pub fn a_h(&self, p: f64) -> f64 {
        0.5 * (self.base_gamma)(p) * (self.h2)(p) + (self.base_a)(p) * (self.h1)(p)
    }

    /// `γ[h, γ[h]](p) = γ(p) h′(p) (γ[h])′(p)` with
    /// `(γ[h])′ = γ′ h′² + 2 γ h′ h″`.
    pub fn gamma_h_gamma_h(&self, p: f64) -> f64 {
        let (g, gp) = ((self.base_gamma)(p), (self.base_gamma_prime)(p));
        let (d1, d2) = ((self.h1)(p), (self.h2)(p));
        let dgamma_h = gp * d1 * d1 + 2.0 * g * d1 * d2;
        g * d1 * dgamma_h
    }

    /// The point structure as a coordinate spec, for jet computations.
    pub fn point_coordinate(&self) -> CoordinateSpec {
        let (s, g, gp, a) = (
            self.point_sampler.clone(),
            self.base_gamma.clone(),
            self.base_gamma_prime.clone(),
            self.base_a.clone(),
        );
        CoordinateSpec::custom(CustomCoordinate::new(
            format!("{}_point", self.name),
            move |r| s(r),
            move |p| g(p),
            move |p| gp(p),
            move |p| a(p),
        ))
    }
}

/// Draws `K ~ Poisson(total_mass)` and `K` i.i.d. points.
pub fn sample_points(spec: &PoissonFunctionalSpec, rng: &mut StreamRng) -> Vec<f64> {
    let law = Poisson::new(spec.total_mass).expect("positive finite mass");
    let k = law.sample(rng) as usize;
    (0..k).map(|_| (spec.point_sampler)(rng)).collect()
}

/// Sums the per-point identities over a configuration.
pub fn quad_from_points(spec: &PoissonFunctionalSpec, points: &[f64]) -> Result<ErrorQuad> {
    let (mut x, mut gamma, mut a, mut gg) = (0.0, 0.0, 0.0, 0.0);
    for &p in points {
        x += spec.h(p);
        gamma += spec.gamma_h(p);
        a += spec.a_h(p);
        gg += spec.gamma_h_gamma_h(p);
    }
    ErrorQuad::new(x, gamma, a, gg)
}

pub fn sample_poisson_quad(spec: &PoissonFunctionalSpec, rng: &mut StreamRng) -> Result<ErrorQuad> {
    quad_from_points(spec, &sample_points(spec, rng))
}

/// Same configuration computed as a jet `Σ h(u_i)` over one coordinate per
/// point. `None` when the configuration exceeds the jet coordinate cap.
pub fn quad_via_jets(spec: &PoissonFunctionalSpec, points: &[f64]) -> Result<Option<ErrorQuad>> {
    let k = points.len();
    if k > MAX_COORDINATES {
        return Ok(None);
    }
    if k == 0 {
        return ErrorQuad::new(0.0, 0.0, 0.0, 0.0).map(Some);
    }
    let specs: Arc<[CoordinateSpec]> = vec![spec.point_coordinate(); k].into();
    let base = BasePoint::new(points.to_vec(), specs)?;
    let mut x = Jet2::constant(k, 0.0);
    for i in 0..k {
        let u = Jet2::lift(&base, i)?;
        x = &x + &u.apply(|p| spec.h(p), |p| (spec.h1)(p), |p| (spec.h2)(p));
    }
    quad_of(&x, &base, None).map(Some)
}

/// Outcome of [`poisson_identity_check`].
#[derive(Debug, Clone)]
pub struct PoissonIdentityReport {
    pub samples: usize,
    /// Largest relative disagreement between per-point summation and the
    /// jet route, over all samples and the four components.
    pub max_violation: f64,
    /// Samples too large for the jet route, checked by reverse summation.
    pub fallback_samples: usize,
    pub count_mean: MeanStat,
    pub count_variance: f64,
    /// `E[φ′(X) A[X] + ½ φ″(X) Γ[X]]` per test function.
    pub centering: Vec<(String, MeanStat)>,
}

impl PoissonIdentityReport {
    pub fn max_centering_z(&self) -> f64 {
        self.centering
            .iter()
            .map(|(_, s)| s.z_score(0.0).abs())
            .fold(0.0, f64::max)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

fn quad_violation(q: &ErrorQuad, r: &ErrorQuad) -> f64 {
    rel(q.x(), r.x())
        .max(rel(q.gamma(), r.gamma()))
        .max(rel(q.a(), r.a()))
        .max(rel(q.gamma_x_gammax(), r.gamma_x_gammax()))
}

/// Checks the white-structure identities sample by sample against the jet
/// route, and generator centering for each test function.
pub fn poisson_identity_check(
    spec: &PoissonFunctionalSpec,
    n: usize,
    seed: u64,
    workers: usize,
    test_fns: &[SmoothFn],
) -> Result<PoissonIdentityReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let draws = generate(n, seed, workers, |rng| {
        let points = sample_points(spec, rng);
        let q = quad_from_points(spec, &points);
        (points, q)
    });
    let mut quads = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut max_violation = 0.0f64;
    let mut fallback_samples = 0;
    for (points, q) in draws {
        let q = q?;
        let check = match quad_via_jets(spec, &points)? {
            Some(r) => r,
            None => {
                fallback_samples += 1;
                let rev: Vec<f64> = points.iter().rev().copied().collect();
                quad_from_points(spec, &rev)?
            }
        };
        max_violation = max_violation.max(quad_violation(&q, &check));
        counts.push(points.len() as f64);
        quads.push(q);
    }
    let centering = test_fns
        .iter()
        .map(|phi| {
            let terms: Vec<f64> = quads
                .iter()
                .map(|q| phi.d1(q.x()) * q.a() + 0.5 * phi.d2(q.x()) * q.gamma())
                .collect();
            (phi.name().to_string(), mean_stat(&terms))
        })
        .collect();
    let count_mean = mean_stat(&counts);
    Ok(PoissonIdentityReport {
        samples: n,
        max_violation,
        fallback_samples,
        count_variance: count_mean.variance,
        count_mean,
        centering,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn empty_configuration() {
        let spec = PoissonFunctionalSpec::mc_unit(3.0, PointFunction::Identity).unwrap();
        let q = quad_from_points(&spec, &[]).unwrap();
        assert_eq!(
            (q.x(), q.gamma(), q.a(), q.gamma_x_gammax()),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn single_point_identity() {
        let spec = PoissonFunctionalSpec::mc_unit(3.0, PointFunction::Identity).unwrap();
        let p: f64 = 0.3;
        let q = quad_from_points(&spec, &[p]).unwrap();
        assert_eq!(q.x(), p);
        assert!((q.gamma() - p * p * (1.0 - p) * (1.0 - p)).abs() < 1e-16);
        assert!((q.a() - p * (1.0 - p) * (1.0 - 2.0 * p)).abs() < 1e-16);
    }

    #[test]
    fn jet_route_agrees() {
        for h in [
            PointFunction::Identity,
            PointFunction::Sin,
            PointFunction::Polynomial,
        ] {
            let spec = PoissonFunctionalSpec::mc_unit(6.0, h).unwrap();
            let mut rng = stream(4, 0);
            for _ in 0..200 {
                let pts = sample_points(&spec, &mut rng);
                let q = quad_from_points(&spec, &pts).unwrap();
                let r = quad_via_jets(&spec, &pts).unwrap().unwrap();
                assert!(quad_violation(&q, &r) <= 1e-12);
            }
        }
    }

    #[test]
    fn linearity_in_h() {
        let spec = PoissonFunctionalSpec::mc_unit(4.0, PointFunction::Sin).unwrap();
        let scaled = spec.scaled(2.5);
        let mut r1 = stream(8, 0);
        let mut r2 = stream(8, 0);
        for _ in 0..100 {
            let q = sample_poisson_quad(&spec, &mut r1).unwrap();
            let s = sample_poisson_quad(&scaled, &mut r2).unwrap();
            assert!((s.x() - 2.5 * q.x()).abs() <= 1e-14 * q.x().abs().max(1.0));
            assert!((s.a() - 2.5 * q.a()).abs() <= 1e-14 * q.a().abs().max(1.0));
            assert!((s.gamma() - 6.25 * q.gamma()).abs() <= 1e-14 * q.gamma().max(1.0));
        }
    }

    #[test]
    fn rejects_inconsistent_derivative() {
        let base = PoissonFunctionalSpec::mc_unit(1.0, PointFunction::Identity).unwrap();
        let parts = PoissonParts {
            point_sampler: base.point_sampler.clone(),
            h: Arc::new(|p| p * p),
            h1: Arc::new(|p| p),
            h2: Arc::new(|_| 1.0),
            base_gamma: base.base_gamma.clone(),
            base_gamma_prime: base.base_gamma_prime.clone(),
            base_a: base.base_a.clone(),
        };
        assert!(matches!(
            PoissonFunctionalSpec::new("bad", 1.0, (0.0, 1.0), parts),
            Err(Error::DerivativeMismatch { name: "h1", .. })
        ));
        assert!(PoissonFunctionalSpec::mc_unit(0.0, PointFunction::Identity).is_err());
        assert!(PointFunction::parse("cubic").is_err());
    }
}
