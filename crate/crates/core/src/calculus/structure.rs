use nalgebra::{DMatrix, DVector};

use super::coordinate::BasePoint;
use super::jet::Jet2;
use crate::error::{Error, Result};

/// `(X, Γ̲̲[X], A[X])` for an ℝ^d-valued functional.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTriple {
    x: DVector<f64>,
    gamma: DMatrix<f64>,
    a: DVector<f64>,
}

fn psd_floor(trace: f64) -> f64 {
    -1e-12 * trace.abs().max(1.0)
}

impl ErrorTriple {
    /// Validates shapes, symmetry and numerical positive semidefiniteness.
    /// Non-finite entries are accepted and reported by [`Self::is_finite`].
    pub fn new(x: DVector<f64>, gamma: DMatrix<f64>, a: DVector<f64>) -> Result<Self> {
        let d = x.len();
        if gamma.nrows() != d || gamma.ncols() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: gamma.nrows(),
            });
        }
        if a.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: a.len(),
            });
        }
        let t = Self { x, gamma, a };
        if t.is_finite() {
            for i in 0..d {
                for j in 0..i {
                    let (g1, g2) = (t.gamma[(i, j)], t.gamma[(j, i)]);
                    if (g1 - g2).abs() > 1e-12 * g1.abs().max(g2.abs()).max(1.0) {
                        return Err(Error::NotSymmetric);
                    }
                }
            }
            let floor = psd_floor(t.gamma.trace());
            let min_eig = if d == 1 {
                t.gamma[(0, 0)]
            } else {
                t.gamma.clone().symmetric_eigenvalues().min()
            };
            if min_eig < floor {
                return Err(Error::NotPsd {
                    min_eigenvalue: min_eig,
                });
            }
        }
        Ok(t)
    }

    pub fn scalar(x: f64, gamma: f64, a: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, x),
            DMatrix::from_element(1, 1, gamma),
            DVector::from_element(1, a),
        )
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn a(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
            && self.gamma.iter().all(|v| v.is_finite())
            && self.a.iter().all(|v| v.is_finite())
    }

    /// Same triple with `A[X]` offset by `delta` in every component.
    pub fn with_shifted_a(&self, delta: f64) -> Self {
        Self {
            x: self.x.clone(),
            gamma: self.gamma.clone(),
            a: self.a.add_scalar(delta),
        }
    }
}

/// A second tracked scalar `G` for conditional expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxScalar {
    pub value: f64,
    /// `Γ[X, G]`
    pub gamma_x_g: f64,
}

/// Scalar [`ErrorTriple`] extended with `Γ[X, Γ[X]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorQuad {
    triple: ErrorTriple,
    gamma_x_gammax: f64,
    aux: Option<AuxScalar>,
}

impl ErrorQuad {
    pub fn new(x: f64, gamma: f64, a: f64, gamma_x_gammax: f64) -> Result<Self> {
        Ok(Self {
            triple: ErrorTriple::scalar(x, gamma, a)?,
            gamma_x_gammax,
            aux: None,
        })
    }

    pub fn from_triple(triple: ErrorTriple, gamma_x_gammax: f64) -> Result<Self> {
        if triple.dim() != 1 {
            return Err(Error::DimensionMismatch {
                left: 1,
                right: triple.dim(),
            });
        }
        Ok(Self {
            triple,
            gamma_x_gammax,
            aux: None,
        })
    }

    pub fn with_aux(mut self, aux: AuxScalar) -> Self {
        self.aux = Some(aux);
        self
    }

    pub fn triple(&self) -> &ErrorTriple {
        &self.triple
    }

    pub fn x(&self) -> f64 {
        self.triple.x[0]
    }

    pub fn gamma(&self) -> f64 {
        self.triple.gamma[(0, 0)]
    }

    pub fn a(&self) -> f64 {
        self.triple.a[0]
    }

    pub fn gamma_x_gammax(&self) -> f64 {
        self.gamma_x_gammax
    }

    pub fn aux(&self) -> Option<&AuxScalar> {
        self.aux.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.triple.is_finite()
            && self.gamma_x_gammax.is_finite()
            && self
                .aux
                .is_none_or(|g| g.value.is_finite() && g.gamma_x_g.is_finite())
    }

    pub fn with_shifted_a(&self, delta: f64) -> Self {
        Self {
            triple: self.triple.with_shifted_a(delta),
            gamma_x_gammax: self.gamma_x_gammax,
            aux: self.aux,
        }
    }
}

fn check_base(j: &Jet2, base: &BasePoint) -> Result<()> {
    if j.dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            left: j.dim(),
            right: base.dim(),
        });
    }
    Ok(())
}

/// `Γ[X, Y] = Σ_i ∂_i X · ∂_i Y · γ_i(u_i)`.
pub fn gamma_of(jx: &Jet2, jy: &Jet2, base: &BasePoint) -> Result<f64> {
    check_base(jx, base)?;
    check_base(jy, base)?;
    Ok(jx
        .grad()
        .iter()
        .zip(jy.grad())
        .enumerate()
        .map(|(i, (gx, gy))| gx * gy * base.spec(i).gamma(base.coord(i)))
        .sum())
}

/// `A[X] = Σ_i ∂_i X · a_i(u_i) + ½ ∂²_ii X · γ_i(u_i)`.
pub fn a_of(jx: &Jet2, base: &BasePoint) -> Result<f64> {
    check_base(jx, base)?;
    Ok((0..base.dim())
        .map(|i| {
            let (s, u) = (base.spec(i), base.coord(i));
            jx.grad()[i] * s.gen_a(u) + 0.5 * jx.hess(i, i) * s.gamma(u)
        })
        .sum())
}

/// Coordinate gradient of the field `Γ[X]`:
/// `∂_j Γ[X] = Σ_i 2 ∂_i X ∂²_ij X γ_i(u_i) + (∂_j X)² γ′_j(u_j)`.
pub fn gamma_grad(jx: &Jet2, base: &BasePoint) -> Result<Vec<f64>> {
    check_base(jx, base)?;
    let m = base.dim();
    let weights: Vec<f64> = (0..m).map(|i| base.spec(i).gamma(base.coord(i))).collect();
    let g = jx.grad();
    Ok((0..m)
        .map(|j| {
            let cross: f64 = (0..m)
                .map(|i| 2.0 * g[i] * jx.hess(i, j) * weights[i])
                .sum();
            cross + g[j] * g[j] * base.spec(j).gamma_prime(base.coord(j))
        })
        .collect())
}

/// Assembles the scalar [`ErrorQuad`] of `X`, and the auxiliary data for a
/// second functional `G` when `jg` is supplied.
pub fn quad_of(jx: &Jet2, base: &BasePoint, jg: Option<&Jet2>) -> Result<ErrorQuad> {
    let gamma = gamma_of(jx, jx, base)?;
    let a = a_of(jx, base)?;
    let dgamma = gamma_grad(jx, base)?;
    let gamma_x_gammax = jx
        .grad()
        .iter()
        .zip(&dgamma)
        .enumerate()
        .map(|(j, (gx, dg))| gx * dg * base.spec(j).gamma(base.coord(j)))
        .sum();
    let mut quad = ErrorQuad::new(jx.value(), gamma, a, gamma_x_gammax)?;
    if let Some(jg) = jg {
        quad = quad.with_aux(AuxScalar {
            value: jg.value(),
            gamma_x_g: gamma_of(jx, jg, base)?,
        });
    }
    Ok(quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::CoordinateSpec;
    use std::sync::Arc;

    fn one(u: f64, spec: CoordinateSpec) -> (BasePoint, Jet2) {
        let specs: Arc<[CoordinateSpec]> = vec![spec].into();
        let b = BasePoint::new(vec![u], specs).unwrap();
        let j = Jet2::lift(&b, 0).unwrap();
        (b, j)
    }

    fn ou1() -> CoordinateSpec {
        CoordinateSpec::ou_gaussian(1.0).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let (b, u) = one(0.5, CoordinateSpec::McUnit);
        assert_eq!(gamma_of(&u, &u, &b).unwrap(), 1.0 / 16.0);
        let c = Jet2::constant(1, 4.0);
        assert_eq!(gamma_of(&c, &c, &b).unwrap(), 0.0);
        let (b, u) = one(0.0, ou1());
        let e = u.exp();
        assert_eq!(gamma_of(&e, &e, &b).unwrap(), 1.0);
    }

    #[test]
    fn a_examples() {
        let (b, u) = one(0.25, CoordinateSpec::McUnit);
        assert_eq!(a_of(&u, &b).unwrap(), 3.0 / 32.0);
        assert_eq!(a_of(&Jet2::constant(1, 2.0), &b).unwrap(), 0.0);
        let (b, u) = one(0.0, ou1());
        assert_eq!(a_of(&u.exp(), &b).unwrap(), 0.5);
    }

    #[test]
    fn gamma_grad_examples() {
        let (b, u) = one(0.7, ou1());
        assert_eq!(gamma_grad(&u, &b).unwrap(), vec![0.0]);
        let (b, u) = one(0.0, ou1());
        assert_eq!(gamma_grad(&u.exp(), &b).unwrap(), vec![2.0]);
        let (b, u) = one(0.5, CoordinateSpec::McUnit);
        assert_eq!(gamma_grad(&u, &b).unwrap(), vec![0.0]);
    }

    #[test]
    fn quad_examples() {
        let (b, u) = one(0.3, ou1());
        assert_eq!(quad_of(&u, &b, None).unwrap().gamma_x_gammax(), 0.0);
        let (b, u) = one(0.0, ou1());
        let q = quad_of(&u.exp(), &b, None).unwrap();
        assert_eq!(q.gamma_x_gammax(), 2.0);
        assert_eq!((q.x(), q.gamma(), q.a()), (1.0, 1.0, 0.5));
        let (b, u) = one(0.5, CoordinateSpec::McUnit);
        assert_eq!(quad_of(&u, &b, None).unwrap().gamma_x_gammax(), 0.0);
    }

    #[test]
    fn quad_aux_with_constant_g() {
        let (b, u) = one(0.2, ou1());
        let g = Jet2::constant(1, 1.0);
        let q = quad_of(&u.sin(), &b, Some(&g)).unwrap();
        let aux = q.aux().unwrap();
        assert_eq!(aux.value, 1.0);
        assert_eq!(aux.gamma_x_g, 0.0);
    }

    #[test]
    fn triple_validation() {
        assert!(ErrorTriple::scalar(0.0, -1.0, 0.0).is_err());
        assert!(ErrorTriple::scalar(0.0, -1e-14, 0.0).is_ok());
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            ErrorTriple::new(DVector::zeros(2), g, DVector::zeros(2)),
            Err(Error::NotPsd { .. })
        ));
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert_eq!(
            ErrorTriple::new(DVector::zeros(2), g, DVector::zeros(2)),
            Err(Error::NotSymmetric)
        );
        let nan = ErrorTriple::scalar(f64::NAN, 1.0, 0.0).unwrap();
        assert!(!nan.is_finite());
    }
}
