//! Extended Euler scheme for `Y = (X, Γ[X], A[X])` of a scalar SDE
//!
//! ```text
//! dX = σ(X, t) dB + r(X, t) dt
//! ```
//!
//! on Wiener space with the Ornstein–Uhlenbeck structure, plus a jet-based
//! oracle that computes `Γ` and `A` of the discrete scheme directly by the
//! functional calculus over the Brownian increments.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::calculus::{
    a_of, gamma_of, quad_of, BasePoint, CoordinateSpec, ErrorQuad, ErrorTriple, Jet2,
    MAX_COORDINATES,
};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

type CoefFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Names accepted by [`SdeCoefficients::builtin`].
pub const BUILTIN_COEFFICIENTS: &[&str] = &["gbm", "additive", "zero_noise"];

/// Diffusion `σ` and drift `r` with their first two space derivatives.
#[derive(Clone)]
pub struct SdeCoefficients {
    name: String,
    sigma: CoefFn,
    sigma_x: CoefFn,
    sigma_xx: CoefFn,
    r: CoefFn,
    r_x: CoefFn,
    r_xx: CoefFn,
}

impl fmt::Debug for SdeCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeCoefficients")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Values of the six coefficient functions at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub sigma: f64,
    pub sigma_x: f64,
    pub sigma_xx: f64,
    pub r: f64,
    pub r_x: f64,
    pub r_xx: f64,
}

const PROBES: usize = 10;
const DERIVATIVE_RTOL: f64 = 1e-5;

fn check_derivative(name: &'static str, f: &CoefFn, df: &CoefFn, x: f64, t: f64) -> Result<()> {
    let h = 1e-4 * x.abs().max(1.0);
    let estimated = (f(x + h, t) - f(x - h, t)) / (2.0 * h);
    let supplied = df(x, t);
    if !supplied.is_finite()
        || (estimated - supplied).abs() > DERIVATIVE_RTOL * supplied.abs().max(1.0)
    {
        return Err(Error::DerivativeMismatch {
            name,
            point: x,
            supplied,
            estimated,
        });
    }
    Ok(())
}

impl SdeCoefficients {
    /// Builds a coefficient set and checks the supplied derivatives by
    /// central differences at ten probe points spread over `x_range`
    /// (times spread over `[0, 1]`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sigma_x: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sigma_xx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        r: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        r_x: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        r_xx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        x_range: (f64, f64),
    ) -> Result<Self> {
        let c = Self {
            name: name.into(),
            sigma: Arc::new(sigma),
            sigma_x: Arc::new(sigma_x),
            sigma_xx: Arc::new(sigma_xx),
            r: Arc::new(r),
            r_x: Arc::new(r_x),
            r_xx: Arc::new(r_xx),
        };
        let (lo, hi) = x_range;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "probe range must satisfy lo < hi, got ({lo}, {hi})"
            )));
        }
        for k in 0..PROBES {
            let frac = (k as f64 + 0.5) / PROBES as f64;
            let x = lo + (hi - lo) * frac;
            let t = frac;
            check_derivative("sigma_x", &c.sigma, &c.sigma_x, x, t)?;
            check_derivative("sigma_xx", &c.sigma_x, &c.sigma_xx, x, t)?;
            check_derivative("r_x", &c.r, &c.r_x, x, t)?;
            check_derivative("r_xx", &c.r_x, &c.r_xx, x, t)?;
            let v = c.eval(x, t);
            if ![v.sigma, v.sigma_x, v.sigma_xx, v.r, v.r_x, v.r_xx]
                .iter()
                .all(|z| z.is_finite())
            {
                return Err(Error::InvalidArgument(format!(
                    "coefficients not finite at x = {x}"
                )));
            }
        }
        Ok(c)
    }

    /// Geometric Brownian motion: `σ(x) = vol·x`, `r(x) = drift·x`.
    pub fn gbm(vol: f64, drift: f64) -> Self {
        Self::new(
            "gbm",
            move |x, _| vol * x,
            move |_, _| vol,
            |_, _| 0.0,
            move |x, _| drift * x,
            move |_, _| drift,
            |_, _| 0.0,
            (0.1, 5.0),
        )
        .expect("gbm coefficients are consistent")
    }

    /// Additive noise with mean reversion: `σ = vol`, `r(x) = κ(θ − x)`.
    pub fn additive(vol: f64, kappa: f64, theta: f64) -> Self {
        Self::new(
            "additive",
            move |_, _| vol,
            |_, _| 0.0,
            |_, _| 0.0,
            move |x, _| kappa * (theta - x),
            move |_, _| -kappa,
            |_, _| 0.0,
            (-5.0, 5.0),
        )
        .expect("additive coefficients are consistent")
    }

    /// No diffusion: `σ = 0`, `r(x) = rate·x`.
    pub fn zero_noise(rate: f64) -> Self {
        Self::new(
            "zero_noise",
            |_, _| 0.0,
            |_, _| 0.0,
            |_, _| 0.0,
            move |x, _| rate * x,
            move |_, _| rate,
            |_, _| 0.0,
            (-5.0, 5.0),
        )
        .expect("zero-noise coefficients are consistent")
    }

    /// Built-in coefficient sets by name, with the default parameters
    /// `gbm(0.3, 0.05)`, `additive(0.5, 1.0, 0.0)`, `zero_noise(1.0)`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "gbm" => Ok(Self::gbm(0.3, 0.05)),
            "additive" => Ok(Self::additive(0.5, 1.0, 0.0)),
            "zero_noise" => Ok(Self::zero_noise(1.0)),
            _ => Err(Error::UnknownName {
                what: "coefficient set",
                name: name.to_string(),
                valid: BUILTIN_COEFFICIENTS.join(", "),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64, t: f64) -> CoefficientValues {
        CoefficientValues {
            sigma: (self.sigma)(x, t),
            sigma_x: (self.sigma_x)(x, t),
            sigma_xx: (self.sigma_xx)(x, t),
            r: (self.r)(x, t),
            r_x: (self.r_x)(x, t),
            r_xx: (self.r_xx)(x, t),
        }
    }
}

/// State `(X, Γ[X], A[X])` of the extended scheme at step `step`, time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub x: f64,
    pub gamma: f64,
    pub a: f64,
    pub t: f64,
    pub step: usize,
}

impl EulerState {
    pub fn initial(x0: f64) -> Self {
        Self {
            x: x0,
            gamma: 0.0,
            a: 0.0,
            t: 0.0,
            step: 0,
        }
    }

    /// False once any component is non-finite or `Γ` went negative.
    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.gamma.is_finite() && self.a.is_finite() && self.gamma >= 0.0
    }

    pub fn triple(&self) -> Result<ErrorTriple> {
        if !self.is_valid() {
            return Err(Error::Degenerate(format!(
                "invalid Euler state at step {}: ({}, {}, {})",
                self.step, self.x, self.gamma, self.a
            )));
        }
        ErrorTriple::scalar(self.x, self.gamma, self.a)
    }
}

/// One step of the extended scheme, coefficients frozen at `(X, t)`:
///
/// ```text
/// X⁺ = X + σ db + r h
/// Γ⁺ = Γ + 2σ′Γ db + (σ² + (2r′ + σ′²) Γ) h
/// A⁺ = A + (−½σ + ½σ″Γ + σ′A) db + (½r″Γ + r′A) h
/// ```
pub fn euler_triple_step(
    s: &EulerState,
    db: f64,
    h: f64,
    c: &SdeCoefficients,
) -> Result<EulerState> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {h}"
        )));
    }
    let v = c.eval(s.x, s.t);
    Ok(EulerState {
        x: s.x + v.sigma * db + v.r * h,
        gamma: s.gamma
            + 2.0 * v.sigma_x * s.gamma * db
            + (v.sigma * v.sigma + (2.0 * v.r_x + v.sigma_x * v.sigma_x) * s.gamma) * h,
        a: s.a
            + (-0.5 * v.sigma + 0.5 * v.sigma_xx * s.gamma + v.sigma_x * s.a) * db
            + (0.5 * v.r_xx * s.gamma + v.r_x * s.a) * h,
        t: s.t + h,
        step: s.step + 1,
    })
}

/// Variant of [`euler_triple_step`] whose `Γ` update is the exact square
/// field of the discrete scheme, `Γ⁺ = (1 + σ′db + r′h)² Γ + σ² h`.
/// `X` and `A` updates are identical to the displayed system.
pub fn euler_triple_step_consistent(
    s: &EulerState,
    db: f64,
    h: f64,
    c: &SdeCoefficients,
) -> Result<EulerState> {
    let mut next = euler_triple_step(s, db, h, c)?;
    let v = c.eval(s.x, s.t);
    let growth = 1.0 + v.sigma_x * db + v.r_x * h;
    next.gamma = growth * growth * s.gamma + v.sigma * v.sigma * h;
    Ok(next)
}

fn check_horizon(horizon: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "step count must be at least 1".into(),
        ));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    Ok(horizon / n as f64)
}

/// Runs the extended scheme over given increments from `(x0, 0, 0)`.
/// Stops at the first invalid state and returns it.
pub fn run_euler(
    x0: f64,
    horizon: f64,
    increments: &[f64],
    c: &SdeCoefficients,
) -> Result<EulerState> {
    run_with(x0, horizon, increments, c, euler_triple_step)
}

/// [`run_euler`] with [`euler_triple_step_consistent`].
pub fn run_euler_consistent(
    x0: f64,
    horizon: f64,
    increments: &[f64],
    c: &SdeCoefficients,
) -> Result<EulerState> {
    run_with(x0, horizon, increments, c, euler_triple_step_consistent)
}

type StepFn = fn(&EulerState, f64, f64, &SdeCoefficients) -> Result<EulerState>;

fn run_with(
    x0: f64,
    horizon: f64,
    increments: &[f64],
    c: &SdeCoefficients,
    step: StepFn,
) -> Result<EulerState> {
    let h = check_horizon(horizon, increments.len())?;
    let mut s = EulerState::initial(x0);
    for (k, db) in increments.iter().enumerate() {
        s = step(&s, *db, h, c)?;
        // exact grid times, no accumulated rounding in t
        s.t = (k + 1) as f64 * h;
        if !s.is_valid() {
            break;
        }
    }
    Ok(s)
}

/// Terminal state of one simulated path and the Brownian increments used.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerSample {
    pub state: EulerState,
    pub increments: Vec<f64>,
}

impl EulerSample {
    pub fn is_valid(&self) -> bool {
        self.state.is_valid()
    }

    pub fn triple(&self) -> Result<ErrorTriple> {
        self.state.triple()
    }
}

pub fn draw_increments(horizon: f64, n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let h = check_horizon(horizon, n)?;
    let sd = h.sqrt();
    Ok((0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Simulates one path with mesh `horizon / n` and `db_k ~ N(0, h)`.
pub fn simulate_triple(
    x0: f64,
    horizon: f64,
    n: usize,
    c: &SdeCoefficients,
    rng: &mut StreamRng,
) -> Result<EulerSample> {
    let increments = draw_increments(horizon, n, rng)?;
    let state = run_euler(x0, horizon, &increments, c)?;
    Ok(EulerSample { state, increments })
}

/// Base point of `n` Brownian increments, each an `ou_gaussian(h)` coordinate.
pub fn increment_base(horizon: f64, increments: &[f64]) -> Result<BasePoint> {
    let n = increments.len();
    let h = check_horizon(horizon, n)?;
    if n > MAX_COORDINATES {
        return Err(Error::TooManyCoordinates {
            requested: n,
            cap: MAX_COORDINATES,
        });
    }
    let spec = CoordinateSpec::ou_gaussian(h)?;
    BasePoint::new(increments.to_vec(), vec![spec; n].into())
}

/// The plain Euler recursion for `X` replayed in jet arithmetic over the
/// increments.
pub fn euler_jet(
    x0: f64,
    horizon: f64,
    increments: &[f64],
    c: &SdeCoefficients,
) -> Result<(Jet2, BasePoint)> {
    let base = increment_base(horizon, increments)?;
    let n = base.dim();
    let h = horizon / n as f64;
    let mut x = Jet2::constant(n, x0);
    for k in 0..n {
        let t = k as f64 * h;
        let v = c.eval(x.value(), t);
        let sigma = x.compose(v.sigma, v.sigma_x, v.sigma_xx);
        let drift = x.compose(v.r, v.r_x, v.r_xx);
        let db = Jet2::lift(&base, k)?;
        x = &(&x + &(&sigma * &db)) + &drift.scale(h);
    }
    Ok((x, base))
}

/// `(X_Tⁿ, Γ[X_Tⁿ], A[X_Tⁿ])` computed purely by the functional calculus on
/// the discrete scheme.
pub fn jet_oracle_triple(
    x0: f64,
    horizon: f64,
    n: usize,
    c: &SdeCoefficients,
    increments: &[f64],
) -> Result<ErrorTriple> {
    if increments.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: increments.len(),
        });
    }
    let (x, base) = euler_jet(x0, horizon, increments, c)?;
    ErrorTriple::scalar(x.value(), gamma_of(&x, &x, &base)?, a_of(&x, &base)?)
}

/// As [`jet_oracle_triple`], extended with `Γ[X, Γ[X]]`.
pub fn jet_oracle_quad(
    x0: f64,
    horizon: f64,
    c: &SdeCoefficients,
    increments: &[f64],
) -> Result<ErrorQuad> {
    let (x, base) = euler_jet(x0, horizon, increments, c)?;
    quad_of(&x, &base, None)
}

/// Exact GBM terminal value `x0·exp((drift − vol²/2)T + vol·Σ db_k)` as a jet
/// over the same increments.
pub fn gbm_exact_jet(
    x0: f64,
    vol: f64,
    drift: f64,
    horizon: f64,
    increments: &[f64],
) -> Result<(Jet2, BasePoint)> {
    let base = increment_base(horizon, increments)?;
    let n = base.dim();
    let mut b = Jet2::constant(n, 0.0);
    for k in 0..n {
        b = &b + &Jet2::lift(&base, k)?;
    }
    let expo = b.scale(vol).add_const((drift - 0.5 * vol * vol) * horizon);
    Ok((expo.exp().scale(x0), base))
}
