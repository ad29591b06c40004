//! Compactly supported perturbation fields ξ with pointwise derivatives.
//!
//! Conventions: `jac[(k, j)] = ∂_j ξ_k` (the matrix `Dξ`; its transpose is
//! `∇ξ`) and `hess[k][(i, j)] = ∂_i ∂_j ξ_k`.

use std::sync::Arc;

use nalgebra::Matrix3;

use crate::grid::Point;
use crate::quadrature::BallRegion;

use super::data::eye;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Point,
    pub jac: Matrix3<f64>,
    pub hess: [Matrix3<f64>; 3],
}

impl Jet {
    pub fn zero() -> Self {
        Self { value: Point::zeros(), jac: Matrix3::zeros(), hess: [Matrix3::zeros(); 3] }
    }

    pub fn div(&self) -> f64 {
        self.jac.trace()
    }

    /// `∇(div ξ)`: component `i` is `Σ_k ∂_i ∂_k ξ_k`.
    pub fn grad_div(&self) -> Point {
        let mut g = Point::zeros();
        for i in 0..3 {
            g[i] = (0..3).map(|k| self.hess[k][(i, k)]).sum();
        }
        g
    }

    /// `(ξ·∇) Dξ`, the derivative of the Jacobian along ξ.
    pub fn jac_along(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for k in 0..3 {
            for j in 0..3 {
                m[(k, j)] = (0..3).map(|i| self.value[i] * self.hess[k][(i, j)]).sum();
            }
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { value: self.value * s, jac: self.jac * s, hess: self.hess.map(|h| h * s) }
    }

    pub fn add(&self, o: &Jet) -> Self {
        let mut hess = self.hess;
        for (a, b) in hess.iter_mut().zip(&o.hess) {
            *a += b;
        }
        Self { value: self.value + o.value, jac: self.jac + o.jac, hess }
    }
}

pub trait VectorFieldSpec: Send + Sync {
    fn dim(&self) -> usize;

    fn jet(&self, x: &Point) -> Jet;

    fn value(&self, x: &Point) -> Point {
        self.jet(x).value
    }

    /// Ball outside of which the field and its derivatives vanish.
    fn support(&self) -> Option<BallRegion>;
}

/// `ξ(x) = (a + L (x - c)) · η(|x - c| / ρ)` with the normalized bump
/// `η(s) = exp(s² / (s² - 1))` for `s < 1` (so `η(0) = 1`), zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub dim: usize,
    pub center: Point,
    pub rho: f64,
    pub a: Point,
    pub lin: Matrix3<f64>,
}

impl Bump {
    /// Constant direction `v` times the bump.
    pub fn directional(dim: usize, center: Point, rho: f64, v: Point) -> Self {
        Self { dim, center, rho, a: v, lin: Matrix3::zeros() }
    }

    pub fn axis(dim: usize, center: Point, rho: f64, k: usize, amp: f64) -> Self {
        let mut v = Point::zeros();
        v[k] = amp;
        Self::directional(dim, center, rho, v)
    }

    /// `amp (x - c) η`, a local dilation about the center.
    pub fn radial(dim: usize, center: Point, rho: f64, amp: f64) -> Self {
        Self { dim, center, rho, a: Point::zeros(), lin: eye(dim) * amp }
    }

    /// `amp J (x - c) η` with `J` the rotation generator in the `(0, 1)` plane.
    pub fn rotational(dim: usize, center: Point, rho: f64, amp: f64) -> Self {
        let mut lin = Matrix3::zeros();
        lin[(0, 1)] = -amp;
        lin[(1, 0)] = amp;
        Self { dim, center, rho, a: Point::zeros(), lin }
    }

    /// `amp (x - origin) η`, a dilation about `origin` localized near `center`.
    pub fn dilation_about(dim: usize, origin: Point, center: Point, rho: f64, amp: f64) -> Self {
        Self { dim, center, rho, a: (center - origin) * amp, lin: eye(dim) * amp }
    }

    /// Bump profile, its gradient and Hessian at `x`.
    fn eta(&self, x: &Point) -> Option<(f64, Point, Matrix3<f64>)> {
        let y = x - self.center;
        let r2 = self.rho * self.rho;
        let q = y.norm_squared() / r2;
        if q >= 1.0 {
            return None;
        }
        let m = q - 1.0;
        let e = (q / m).exp();
        let e1 = -e / (m * m);
        let e2 = e * (1.0 / m.powi(4) + 2.0 / m.powi(3));
        let dq = 2.0 * y / r2;
        let grad = e1 * dq;
        let hess = e2 * dq * dq.transpose() + e1 * 2.0 / r2 * eye(self.dim);
        Some((e, grad, hess))
    }
}

impl VectorFieldSpec for Bump {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &Point) -> Jet {
        let Some((e, de, he)) = self.eta(x) else {
            return Jet::zero();
        };
        let b = self.a + self.lin * (x - self.center);
        let value = b * e;
        let jac = self.lin * e + b * de.transpose();
        let mut hess = [Matrix3::zeros(); 3];
        for (k, hk) in hess.iter_mut().enumerate().take(self.dim) {
            let lk = self.lin.row(k).transpose();
            *hk = lk * de.transpose() + de * lk.transpose() + he * b[k];
        }
        Jet { value, jac, hess }
    }

    fn support(&self) -> Option<BallRegion> {
        Some(BallRegion { center: self.center, radius: self.rho })
    }
}

/// Scalar multiple of a field.
pub struct Scaled<F> {
    pub inner: F,
    pub factor: f64,
}

impl<F: VectorFieldSpec> VectorFieldSpec for Scaled<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn jet(&self, x: &Point) -> Jet {
        self.inner.jet(x).scaled(self.factor)
    }
    fn support(&self) -> Option<BallRegion> {
        self.inner.support()
    }
}

/// Sum of fields; the support is the smallest ball around the first
/// support's center that covers all parts.
pub struct FieldSum(pub Vec<Arc<dyn VectorFieldSpec>>);

impl VectorFieldSpec for FieldSum {
    fn dim(&self) -> usize {
        self.0.first().map(|f| f.dim()).unwrap_or(2)
    }
    fn jet(&self, x: &Point) -> Jet {
        self.0.iter().fold(Jet::zero(), |acc, f| acc.add(&f.jet(x)))
    }
    fn support(&self) -> Option<BallRegion> {
        let balls: Option<Vec<BallRegion>> = self.0.iter().map(|f| f.support()).collect();
        let balls = balls?;
        let c = balls.first()?.center;
        let r = balls.iter().map(|b| (b.center - c).norm() + b.radius).fold(0.0, f64::max);
        Some(BallRegion { center: c, radius: r })
    }
}

/// Field given only pointwise; derivatives by central differences.
pub struct FdField<F> {
    pub dim: usize,
    pub f: F,
    pub eps: f64,
    pub support: Option<BallRegion>,
}

impl<F: Fn(&Point) -> Point + Send + Sync> FdField<F> {
    pub fn new(dim: usize, f: F, support: Option<BallRegion>) -> Self {
        Self { dim, f, eps: 1e-4, support }
    }
}

impl<F: Fn(&Point) -> Point + Send + Sync> VectorFieldSpec for FdField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &Point) -> Jet {
        let e = self.eps;
        let f0 = (self.f)(x);
        let unit = |k: usize| {
            let mut v = Point::zeros();
            v[k] = e;
            v
        };
        let mut jac = Matrix3::zeros();
        let mut hess = [Matrix3::zeros(); 3];
        for j in 0..self.dim {
            let (p, m) = ((self.f)(&(x + unit(j))), (self.f)(&(x - unit(j))));
            jac.set_column(j, &((p - m) / (2.0 * e)));
            let d2 = (p - 2.0 * f0 + m) / (e * e);
            for k in 0..self.dim {
                hess[k][(j, j)] = d2[k];
            }
            for i in 0..j {
                let (ui, uj) = (unit(i), unit(j));
                let mixed = ((self.f)(&(x + ui + uj)) - (self.f)(&(x + ui - uj))
                    - (self.f)(&(x - ui + uj))
                    + (self.f)(&(x - ui - uj)))
                    / (4.0 * e * e);
                for k in 0..self.dim {
                    hess[k][(i, j)] = mixed[k];
                    hess[k][(j, i)] = mixed[k];
                }
            }
        }
        Jet { value: f0, jac, hess }
    }

    fn support(&self) -> Option<BallRegion> {
        self.support
    }
}

/// The zero field.
pub struct ZeroField(pub usize);

impl VectorFieldSpec for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }
    fn jet(&self, _: &Point) -> Jet {
        Jet::zero()
    }
    fn support(&self) -> Option<BallRegion> {
        None
    }
}
