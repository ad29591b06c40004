//! Analytic problem data `f`, `g`, `Q` with exact derivatives.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};

/// Identity on the first `dim` axes.
pub fn eye(dim: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for k in 0..dim {
        m[(k, k)] = 1.0;
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarData {
    Constant(f64),
    /// `amp · exp(-|x - center|² / width²)`.
    Gaussian { amp: f64, center: Point, width: f64 },
    /// `c + slope · x`.
    Affine { c: f64, slope: Point },
    /// Sampled values without derivatives.
    Sampled(ScalarField),
}

impl ScalarData {
    pub fn value(&self, p: &Point) -> f64 {
        match self {
            ScalarData::Constant(c) => *c,
            ScalarData::Gaussian { amp, center, width } => {
                amp * (-(p - center).norm_squared() / (width * width)).exp()
            }
            ScalarData::Affine { c, slope } => c + slope.dot(p),
            ScalarData::Sampled(f) => f.interpolate(p),
        }
    }

    pub fn gradient(&self, p: &Point) -> Result<Point> {
        Ok(match self {
            ScalarData::Constant(_) => Point::zeros(),
            ScalarData::Gaussian { center, width, .. } => {
                let k = 1.0 / (width * width);
                -2.0 * k * self.value(p) * (p - center)
            }
            ScalarData::Affine { slope, .. } => *slope,
            ScalarData::Sampled(_) => return Err(Error::MissingDerivatives("sampled".into())),
        })
    }

    pub fn hessian(&self, p: &Point, dim: usize) -> Result<Matrix3<f64>> {
        Ok(match self {
            ScalarData::Constant(_) | ScalarData::Affine { .. } => Matrix3::zeros(),
            ScalarData::Gaussian { center, width, .. } => {
                let k = 1.0 / (width * width);
                let y = p - center;
                self.value(p) * (4.0 * k * k * y * y.transpose() - 2.0 * k * eye(dim))
            }
            ScalarData::Sampled(_) => return Err(Error::MissingDerivatives("sampled".into())),
        })
    }

    pub fn has_derivatives(&self) -> bool {
        !matches!(self, ScalarData::Sampled(_))
    }

    pub fn sample(&self, grid: Grid) -> ScalarField {
        match self {
            ScalarData::Sampled(f) if f.grid().same_as(&grid) => f.clone(),
            _ => ScalarField::from_fn(grid, |p| self.value(p)),
        }
    }

    pub fn scaled(&self, s: f64) -> ScalarData {
        match self {
            ScalarData::Constant(c) => ScalarData::Constant(s * c),
            ScalarData::Gaussian { amp, center, width } => {
                ScalarData::Gaussian { amp: s * amp, center: *center, width: *width }
            }
            ScalarData::Affine { c, slope } => ScalarData::Affine { c: s * c, slope: s * slope },
            ScalarData::Sampled(f) => ScalarData::Sampled(f.scaled(s)),
        }
    }
}

/// Sources `f`, `g`, the weight `Q`, and the bounds
/// `C₁ g ≤ f ≤ C₂ g`, `c_Q ≤ Q ≤ C_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub dim: usize,
    pub f: ScalarData,
    pub g: ScalarData,
    pub q: ScalarData,
    pub c1: f64,
    pub c2: f64,
    pub c_q: f64,
    pub cap_q: f64,
}

impl ProblemData {
    /// Infers the four constants from samples on `grid` and validates them.
    pub fn new(grid: &Grid, f: ScalarData, g: ScalarData, q: ScalarData) -> Result<Self> {
        let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
        let (mut c_q, mut cap_q) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..grid.node_count() {
            let p = grid.node_point(i);
            let (fv, gv, qv) = (f.value(&p), g.value(&p), q.value(&p));
            if gv > 0.0 {
                c1 = c1.min(fv / gv);
                c2 = c2.max(fv / gv);
            }
            c_q = c_q.min(qv);
            cap_q = cap_q.max(qv);
        }
        if !c1.is_finite() {
            c1 = 0.0;
        }
        let data = Self { dim: grid.dim(), f, g, q, c1, c2, c_q, cap_q };
        data.validate(grid)?;
        Ok(data)
    }

    /// Checks `0 ≤ C₁g ≤ f ≤ C₂g` and `0 < c_Q ≤ Q ≤ C_Q` on every node.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.c_q > 0.0) {
            return Err(Error::InvalidInput(format!("Q must be positive, c_Q = {}", self.c_q)));
        }
        let slack = 1e-12;
        for i in 0..grid.node_count() {
            let p = grid.node_point(i);
            let (fv, gv, qv) = (self.f.value(&p), self.g.value(&p), self.q.value(&p));
            let s = slack * (1.0 + fv.abs());
            if gv < 0.0 || self.c1 * gv > fv + s || fv > self.c2 * gv + s {
                return Err(Error::InvalidInput(format!("f/g bounds violated at {:?}", p.as_slice())));
            }
            if qv < self.c_q - slack || qv > self.cap_q + slack {
                return Err(Error::InvalidInput(format!("Q bounds violated at {:?}", p.as_slice())));
            }
        }
        Ok(())
    }

    /// The same data with `f` and `g` exchanged.
    pub fn swapped(&self) -> Self {
        let (c1, c2) = if self.c1 > 0.0 { (1.0 / self.c2, 1.0 / self.c1) } else { (0.0, f64::INFINITY) };
        Self { f: self.g.clone(), g: self.f.clone(), c1, c2, ..self.clone() }
    }
}
