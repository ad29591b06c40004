//! Node-centered scalar and vector fields.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidInput(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite field value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Wraps values without the finiteness scan; callers guarantee the length.
    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.node_count()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.node_count()] }
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let values = (0..grid.node_count())
            .into_par_iter()
            .map(|i| f(&grid.node_point(i)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.grid.node_index(ijk)]
    }

    /// Multilinear interpolation, clamped to the box.
    pub fn interpolate(&self, p: &Point) -> f64 {
        let g = &self.grid;
        let (cell, local) = g.locate(p);
        let (corners, count) = g.cell_corners(cell);
        let mut acc = 0.0;
        for (c, &node) in corners.iter().enumerate().take(count) {
            let mut w = 1.0;
            for k in 0..g.dim() {
                w *= if c & (1 << k) != 0 { local[k] } else { 1.0 - local[k] };
            }
            acc += w * self.values[node];
        }
        acc
    }

    /// Multilinear interpolant and its gradient at `p`.
    pub fn interpolate_with_gradient(&self, p: &Point) -> (f64, Point) {
        let g = &self.grid;
        let (cell, local) = g.locate(p);
        let (corners, count) = g.cell_corners(cell);
        let mut val = 0.0;
        let mut grad = Point::zeros();
        for (c, &node) in corners.iter().enumerate().take(count) {
            let u = self.values[node];
            let mut w = 1.0;
            let mut dw = Point::zeros();
            for k in 0..g.dim() {
                let (wk, dk) = if c & (1 << k) != 0 { (local[k], 1.0) } else { (1.0 - local[k], -1.0) };
                for d in dw.iter_mut().take(k) {
                    *d *= wk;
                }
                dw[k] = w * dk / g.h();
                w *= wk;
            }
            val += w * u;
            grad += dw * u;
        }
        (val, grad)
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &Self, f: F) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values =
            self.values.par_iter().zip(other.values.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nodal gradient: central differences inside, second-order one-sided
    /// differences on box faces.
    pub fn gradient(&self) -> VectorField {
        let g = self.grid;
        let dims = g.node_dims();
        let h = g.h();
        let values: Vec<Point> = (0..g.node_count())
            .into_par_iter()
            .map(|i| {
                let ijk = g.node_ijk(i);
                let mut out = Point::zeros();
                for k in 0..g.dim() {
                    let s = g.node_stride(k);
                    let v = &self.values;
                    out[k] = if ijk[k] == 0 {
                        (-3.0 * v[i] + 4.0 * v[i + s] - v[i + 2 * s]) / (2.0 * h)
                    } else if ijk[k] + 1 == dims[k] {
                        (3.0 * v[i] - 4.0 * v[i - s] + v[i - 2 * s]) / (2.0 * h)
                    } else {
                        (v[i + s] - v[i - s]) / (2.0 * h)
                    };
                }
                out
            })
            .collect();
        VectorField { grid: g, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<Point>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<Point>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidInput("vector field length does not match grid".into()));
        }
        if values.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput("non-finite vector field value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Point::zeros(); grid.node_count()] }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&Point) -> Point + Sync,
    {
        let values = (0..grid.node_count())
            .into_par_iter()
            .map(|i| f(&grid.node_point(i)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    /// One component as a scalar field.
    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid, self.values.iter().map(|p| p[k]).collect())
    }

    pub fn norm(&self) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid, self.values.iter().map(|p| p.norm()).collect())
    }
}
