use std::ops::{Add, Mul, Neg, Sub};

use super::coordinate::BasePoint;
use crate::error::{Error, Result};

/// Largest number of coordinates a jet may carry. Hessians are dense.
pub const MAX_COORDINATES: usize = 64;

/// Value, gradient and Hessian of a scalar functional with respect to the
/// `m` coordinates of a base point.
///
/// Non-finite intermediates are not trapped; they propagate into the jet
/// and can be detected with [`Jet2::is_finite`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    // row-major m × m
    hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(m: usize, value: f64) -> Self {
        Self {
            value,
            grad: vec![0.0; m],
            hess: vec![0.0; m * m],
        }
    }

    /// Jet of the `i`-th coordinate function (zero-based).
    pub fn lift(base: &BasePoint, i: usize) -> Result<Self> {
        let m = base.dim();
        if m > MAX_COORDINATES {
            return Err(Error::TooManyCoordinates {
                requested: m,
                cap: MAX_COORDINATES,
            });
        }
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, len: m });
        }
        if base.spec(i).is_opaque() {
            return Err(Error::OpaqueLift { index: i });
        }
        let mut j = Self::constant(m, base.coord(i));
        j.grad[i] = 1.0;
        Ok(j)
    }

    pub fn from_parts(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Result<Self> {
        let m = grad.len();
        if hess.len() != m * m {
            return Err(Error::DimensionMismatch {
                left: m * m,
                right: hess.len(),
            });
        }
        Ok(Self { value, grad, hess })
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn hess_row(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.hess[i * m..(i + 1) * m]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// Chain rule for `φ(self)` given `φ(v)`, `φ′(v)`, `φ″(v)` at `v = self.value()`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let m = self.dim();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = Vec::with_capacity(m * m);
        for i in 0..m {
            let gi = self.grad[i];
            for j in 0..m {
                hess.push(f2 * gi * self.grad[j] + f1 * self.hess[i * m + j]);
            }
        }
        Self {
            value: f0,
            grad,
            hess,
        }
    }

    /// Applies a scalar function given its value and first two derivatives.
    pub fn apply(
        &self,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        d2f: impl Fn(f64) -> f64,
    ) -> Self {
        let v = self.value;
        self.compose(f(v), df(v), d2f(v))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            value: self.value + other.value,
            grad: zip_map(&self.grad, &other.grad, |a, b| a + b),
            hess: zip_map(&self.hess, &other.hess, |a, b| a + b),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            value: self.value - other.value,
            grad: zip_map(&self.grad, &other.grad, |a, b| a - b),
            hess: zip_map(&self.hess, &other.hess, |a, b| a - b),
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let m = self.dim();
        let (v1, v2) = (self.value, other.value);
        let grad = zip_map(&self.grad, &other.grad, |g1, g2| g1 * v2 + v1 * g2);
        let mut hess = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                hess.push(
                    self.hess[k] * v2
                        + v1 * other.hess[k]
                        + self.grad[i] * other.grad[j]
                        + other.grad[i] * self.grad[j],
                );
            }
        }
        Ok(Self {
            value: v1 * v2,
            grad,
            hess,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: c * self.value,
            grad: self.grad.iter().map(|g| c * g).collect(),
            hess: self.hess.iter().map(|h| c * h).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.value += c;
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.compose(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(&self, n: i32) -> Self {
        let v = self.value;
        let nf = f64::from(n);
        self.compose(
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
        )
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

// Operator forms panic on dimension mismatch; use the `try_*` methods when
// the dimensions are not known to agree.

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.try_add(rhs).expect("jet add")
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.try_sub(rhs).expect("jet sub")
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.try_mul(rhs).expect("jet mul")
    }
}

impl Mul<f64> for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl Add<f64> for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: f64) -> Jet2 {
        self.add_const(rhs)
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::CoordinateSpec;
    use std::sync::Arc;

    fn base(coords: &[f64], spec: CoordinateSpec) -> BasePoint {
        let specs: Arc<[CoordinateSpec]> = vec![spec; coords.len()].into();
        BasePoint::new(coords.to_vec(), specs).unwrap()
    }

    #[test]
    fn lift_examples() {
        let b = base(&[0.5], CoordinateSpec::McUnit);
        let j = Jet2::lift(&b, 0).unwrap();
        assert_eq!(j, Jet2::from_parts(0.5, vec![1.0], vec![0.0]).unwrap());

        let b = base(&[1.0, 2.0], CoordinateSpec::ou_gaussian(1.0).unwrap());
        let j = Jet2::lift(&b, 1).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.grad(), &[0.0, 1.0]);
        assert!((0..2).all(|i| j.hess_row(i).iter().all(|h| *h == 0.0)));

        assert_eq!(
            Jet2::lift(&b, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        );
    }

    #[test]
    fn lifting_opaque_is_rejected() {
        let specs: Arc<[CoordinateSpec]> =
            vec![CoordinateSpec::McUnit, CoordinateSpec::Opaque].into();
        let b = BasePoint::new(vec![0.2, 0.7], specs).unwrap();
        assert_eq!(Jet2::lift(&b, 1), Err(Error::OpaqueLift { index: 1 }));
        let msg = Jet2::lift(&b, 1).unwrap_err().to_string();
        assert!(msg.contains("coordinate 1"), "{msg}");
    }

    #[test]
    fn unary_examples() {
        let b = base(&[0.0], CoordinateSpec::ou_gaussian(1.0).unwrap());
        let u = Jet2::lift(&b, 0).unwrap();
        assert_eq!(
            u.exp(),
            Jet2::from_parts(1.0, vec![1.0], vec![1.0]).unwrap()
        );
        assert_eq!(u.apply(|x| x, |_| 1.0, |_| 0.0), u);

        let b = base(&[3.0], CoordinateSpec::ou_gaussian(1.0).unwrap());
        let u = Jet2::lift(&b, 0).unwrap();
        let sq = u.apply(|x| x * x, |x| 2.0 * x, |_| 2.0);
        assert_eq!(sq, Jet2::from_parts(9.0, vec![6.0], vec![2.0]).unwrap());
        assert_eq!(&u * &u, sq);
        assert_eq!(u.powi(2), sq);
    }

    #[test]
    fn arithmetic_examples() {
        let b = base(&[0.5, 0.5], CoordinateSpec::McUnit);
        let (u1, u2) = (Jet2::lift(&b, 0).unwrap(), Jet2::lift(&b, 1).unwrap());
        let s = &u1 + &u2;
        assert_eq!(s.value(), 1.0);
        assert_eq!(s.grad(), &[1.0, 1.0]);
        let one = Jet2::constant(2, 1.0);
        assert_eq!(&s * &one, s);
        let p = &u1 * &u2;
        assert_eq!(p.hess(0, 1), 1.0);
        assert_eq!(p.hess(1, 0), 1.0);
        assert_eq!(p.hess(0, 0), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Jet2::constant(1, 1.0);
        let b = Jet2::constant(2, 1.0);
        assert!(matches!(
            a.try_add(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            a.try_mul(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_propagates() {
        let b = base(&[0.0], CoordinateSpec::ou_gaussian(1.0).unwrap());
        let u = Jet2::lift(&b, 0).unwrap();
        assert!(!u.ln().is_finite());
        assert!(!u.recip().is_finite());
        assert!(u.exp().is_finite());
    }

    #[test]
    fn hessian_stays_symmetric() {
        let b = base(&[0.3, -0.4, 1.1], CoordinateSpec::ou_gaussian(1.0).unwrap());
        let u: Vec<Jet2> = (0..3).map(|i| Jet2::lift(&b, i).unwrap()).collect();
        let f = &(&(&u[0] * &u[1]).sin() * &u[2].exp()) + &(&u[1] * &u[2]).recip();
        for i in 0..3 {
            for j in 0..3 {
                assert!((f.hess(i, j) - f.hess(j, i)).abs() < 1e-14);
            }
        }
    }
}
