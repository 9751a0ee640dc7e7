use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SamplerFn = Arc<dyn Fn(&mut StreamRng) -> f64 + Send + Sync>;

/// User-supplied one-dimensional error structure.
#[derive(Clone)]
pub struct CustomCoordinate {
    pub name: String,
    pub sampler: SamplerFn,
    pub gamma: ScalarFn,
    pub gamma_prime: ScalarFn,
    pub gen_a: ScalarFn,
}

impl CustomCoordinate {
    pub fn new(
        name: impl Into<String>,
        sampler: impl Fn(&mut StreamRng) -> f64 + Send + Sync + 'static,
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gen_a: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            sampler: Arc::new(sampler),
            gamma: Arc::new(gamma),
            gamma_prime: Arc::new(gamma_prime),
            gen_a: Arc::new(gen_a),
        }
    }
}

/// One base coordinate of a product error structure.
#[derive(Clone)]
pub enum CoordinateSpec {
    /// Centered Gaussian of the given variance with the Ornstein–Uhlenbeck
    /// structure: `γ(u) = v`, `a(u) = −u/2`.
    OuGaussian {
        variance: f64,
    },
    /// Uniform on `[0, 1]` with `γ(u) = u²(1−u)²`, `a(u) = u(1−u)(1−2u)`.
    McUnit,
    /// Uniform on `[0, 1]`, no error structure. Sampled but never lifted.
    Opaque,
    Custom(Arc<CustomCoordinate>),
}

impl fmt::Debug for CoordinateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OuGaussian { variance } => write!(f, "OuGaussian({variance})"),
            Self::McUnit => f.write_str("McUnit"),
            Self::Opaque => f.write_str("Opaque"),
            Self::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl CoordinateSpec {
    pub fn ou_gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ou_gaussian variance must be positive, got {variance}"
            )));
        }
        Ok(Self::OuGaussian { variance })
    }

    pub fn custom(c: CustomCoordinate) -> Self {
        Self::Custom(Arc::new(c))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::OuGaussian { .. } => "ou_gaussian",
            Self::McUnit => "mc_unit",
            Self::Opaque => "opaque",
            Self::Custom(_) => "custom",
        }
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, Self::Opaque)
    }

    pub fn gamma(&self, u: f64) -> f64 {
        match self {
            Self::OuGaussian { variance } => *variance,
            Self::McUnit => {
                let w = u * (1.0 - u);
                w * w
            }
            Self::Opaque => 0.0,
            Self::Custom(c) => (c.gamma)(u),
        }
    }

    pub fn gamma_prime(&self, u: f64) -> f64 {
        match self {
            Self::OuGaussian { .. } | Self::Opaque => 0.0,
            Self::McUnit => 2.0 * u * (1.0 - u) * (1.0 - 2.0 * u),
            Self::Custom(c) => (c.gamma_prime)(u),
        }
    }

    /// Generator applied to the identity coordinate function.
    pub fn gen_a(&self, u: f64) -> f64 {
        match self {
            Self::OuGaussian { .. } => -0.5 * u,
            Self::McUnit => u * (1.0 - u) * (1.0 - 2.0 * u),
            Self::Opaque => 0.0,
            Self::Custom(c) => (c.gen_a)(u),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Self::OuGaussian { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                variance.sqrt() * z
            }
            Self::McUnit | Self::Opaque => rng.random::<f64>(),
            Self::Custom(c) => (c.sampler)(rng),
        }
    }

    fn in_support(&self, u: f64) -> bool {
        match self {
            Self::McUnit | Self::Opaque => (0.0..=1.0).contains(&u),
            Self::OuGaussian { .. } => u.is_finite(),
            Self::Custom(_) => true,
        }
    }
}

/// A point `(u_1, …, u_m)` of the product space together with the structure
/// carried by each coordinate.
#[derive(Clone, Debug)]
pub struct BasePoint {
    coords: Vec<f64>,
    specs: Arc<[CoordinateSpec]>,
}

impl BasePoint {
    pub fn new(coords: Vec<f64>, specs: Arc<[CoordinateSpec]>) -> Result<Self> {
        if coords.len() != specs.len() {
            return Err(Error::DimensionMismatch {
                left: coords.len(),
                right: specs.len(),
            });
        }
        for (index, (u, s)) in coords.iter().zip(specs.iter()).enumerate() {
            if !s.in_support(*u) {
                return Err(Error::OutOfSupport {
                    index,
                    value: *u,
                    kind: s.kind_name(),
                });
            }
        }
        Ok(Self { coords, specs })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn specs(&self) -> &[CoordinateSpec] {
        &self.specs
    }

    pub fn shared_specs(&self) -> &Arc<[CoordinateSpec]> {
        &self.specs
    }

    pub fn spec(&self, i: usize) -> &CoordinateSpec {
        &self.specs[i]
    }
}

/// Independent draws of every coordinate from its own law.
pub fn sample_base(specs: &Arc<[CoordinateSpec]>, rng: &mut StreamRng) -> BasePoint {
    let coords = specs.iter().map(|s| s.sample(rng)).collect();
    BasePoint {
        coords,
        specs: Arc::clone(specs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{generate, stream};
    use crate::stats::mean_stat;

    #[test]
    fn mc_unit_weights() {
        let s = CoordinateSpec::McUnit;
        assert_eq!(s.gamma(0.5), 1.0 / 16.0);
        assert_eq!(s.gamma_prime(0.5), 0.0);
        assert_eq!(s.gen_a(0.25), 3.0 / 32.0);
        // a = γ′/2 for the uniform law
        for u in [0.1, 0.3, 0.77] {
            assert!((s.gen_a(u) - 0.5 * s.gamma_prime(u)).abs() < 1e-15);
        }
    }

    #[test]
    fn mc_unit_gamma_prime_matches_finite_difference() {
        let s = CoordinateSpec::McUnit;
        let h = 1e-6;
        for u in [0.05, 0.2, 0.6, 0.93] {
            let fd = (s.gamma(u + h) - s.gamma(u - h)) / (2.0 * h);
            assert!((fd - s.gamma_prime(u)).abs() < 1e-8);
        }
    }

    #[test]
    fn ou_and_opaque() {
        let s = CoordinateSpec::ou_gaussian(2.0).unwrap();
        assert_eq!(s.gamma(5.0), 2.0);
        assert_eq!(s.gamma_prime(5.0), 0.0);
        assert_eq!(s.gen_a(3.0), -1.5);
        let o = CoordinateSpec::Opaque;
        assert_eq!(
            (o.gamma(0.3), o.gamma_prime(0.3), o.gen_a(0.3)),
            (0.0, 0.0, 0.0)
        );
        assert!(CoordinateSpec::ou_gaussian(0.0).is_err());
    }

    #[test]
    fn base_point_validation() {
        let specs: Arc<[CoordinateSpec]> = vec![CoordinateSpec::McUnit].into();
        assert!(BasePoint::new(vec![1.5], Arc::clone(&specs)).is_err());
        assert!(BasePoint::new(vec![0.5, 0.1], Arc::clone(&specs)).is_err());
        assert!(BasePoint::new(vec![0.5], specs).is_ok());
    }

    #[test]
    fn sampling_is_reproducible_and_in_support() {
        let specs: Arc<[CoordinateSpec]> = vec![
            CoordinateSpec::ou_gaussian(1.0).unwrap(),
            CoordinateSpec::McUnit,
        ]
        .into();
        let a = sample_base(&specs, &mut stream(11, 0));
        let b = sample_base(&specs, &mut stream(11, 0));
        assert_eq!(a.coords(), b.coords());
        assert!((0.0..=1.0).contains(&a.coord(1)));
    }

    #[test]
    fn gaussian_sample_mean_clt_bound() {
        let spec = CoordinateSpec::ou_gaussian(1.0).unwrap();
        let n = 1_000_000;
        let xs = generate(n, 3, 4, |r| spec.sample(r));
        let m = mean_stat(&xs).mean;
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "mean {m}");
    }
}
