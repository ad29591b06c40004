//! Uniform Cartesian grids in two or three dimensions.
//!
//! Nodes sit at `origin + h * (i, j, k)` with `0 <= i <= n[0]` and so on; a
//! grid with `n` cells per axis has `n + 1` nodes per axis. Two-dimensional
//! grids use a degenerate third axis with a single node layer, so every
//! index computation is written once for both dimensions.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// A point in space; the third component is zero on two-dimensional grids.
pub type Point = Vector3<f64>;

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: Point,
    n: [usize; 3],
    h: f64,
}

impl Grid {
    /// Builds a grid with `n[k]` cells of side `h` along each active axis.
    pub fn new(dim: usize, origin: &[f64], n: &[usize], h: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInput(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if origin.len() != dim || n.len() != dim {
            return Err(Error::InvalidInput("origin and n must have one entry per axis".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        if let Some(&bad) = n.iter().find(|&&c| c < MIN_CELLS) {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_CELLS} cells per axis, got {bad}"
            )));
        }
        let mut o = Point::zeros();
        let mut cells = [0usize; 3];
        for k in 0..dim {
            o[k] = origin[k];
            cells[k] = n[k];
        }
        Ok(Self { dim, origin: o, n: cells, h })
    }

    /// Grid covering the axis-aligned box `[lo, lo + extent]` with spacing
    /// `h`; the extent is rounded to a whole number of cells.
    pub fn covering(dim: usize, lo: &[f64], extent: &[f64], h: f64) -> Result<Self> {
        if extent.len() != dim {
            return Err(Error::InvalidInput("extent must have one entry per axis".into()));
        }
        let n: Vec<usize> = extent.iter().map(|e| (e / h).round().max(0.0) as usize).collect();
        Self::new(dim, lo, &n, h)
    }

    /// Square/cubic grid on `[-half, half]^dim` with `cells` cells per axis.
    pub fn centered(dim: usize, half: f64, cells: usize) -> Result<Self> {
        let lo = vec![-half; dim];
        let n = vec![cells; dim];
        Self::new(dim, &lo, &n, 2.0 * half / cells as f64)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Cells per axis (the unused third entry is zero in 2D).
    pub fn cells(&self) -> [usize; 3] {
        self.n
    }

    pub fn extent(&self) -> Point {
        let mut e = Point::zeros();
        for k in 0..self.dim {
            e[k] = self.n[k] as f64 * self.h;
        }
        e
    }

    /// Nodes per axis, with a single layer along the unused third axis in 2D.
    pub fn node_dims(&self) -> [usize; 3] {
        let mut m = [1usize; 3];
        for k in 0..self.dim {
            m[k] = self.n[k] + 1;
        }
        m
    }

    /// Cells per axis with a single layer along the unused third axis in 2D.
    pub fn cell_dims(&self) -> [usize; 3] {
        let mut m = [1usize; 3];
        for k in 0..self.dim {
            m[k] = self.n[k];
        }
        m
    }

    pub fn node_count(&self) -> usize {
        let m = self.node_dims();
        m[0] * m[1] * m[2]
    }

    pub fn cell_count(&self) -> usize {
        let m = self.cell_dims();
        m[0] * m[1] * m[2]
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        let m = self.node_dims();
        ijk[0] + m[0] * (ijk[1] + m[1] * ijk[2])
    }

    #[inline]
    pub fn node_ijk(&self, idx: usize) -> [usize; 3] {
        let m = self.node_dims();
        [idx % m[0], (idx / m[0]) % m[1], idx / (m[0] * m[1])]
    }

    #[inline]
    pub fn cell_index(&self, ijk: [usize; 3]) -> usize {
        let m = self.cell_dims();
        ijk[0] + m[0] * (ijk[1] + m[1] * ijk[2])
    }

    #[inline]
    pub fn cell_ijk(&self, idx: usize) -> [usize; 3] {
        let m = self.cell_dims();
        [idx % m[0], (idx / m[0]) % m[1], idx / (m[0] * m[1])]
    }

    /// Linear-index offset of one step along `axis`.
    #[inline]
    pub fn node_stride(&self, axis: usize) -> usize {
        let m = self.node_dims();
        match axis {
            0 => 1,
            1 => m[0],
            _ => m[0] * m[1],
        }
    }

    #[inline]
    pub fn node_position(&self, ijk: [usize; 3]) -> Point {
        let mut p = self.origin;
        for k in 0..self.dim {
            p[k] += ijk[k] as f64 * self.h;
        }
        p
    }

    #[inline]
    pub fn node_point(&self, idx: usize) -> Point {
        self.node_position(self.node_ijk(idx))
    }

    #[inline]
    pub fn cell_center(&self, ijk: [usize; 3]) -> Point {
        let mut p = self.origin;
        for k in 0..self.dim {
            p[k] += (ijk[k] as f64 + 0.5) * self.h;
        }
        p
    }

    /// Node indices of the `2^d` corners of a cell, in lexicographic order
    /// of the corner offsets (bit `k` of the position set means `+1` on axis `k`).
    pub fn cell_corners(&self, cell: [usize; 3]) -> ([usize; 8], usize) {
        let count = 1usize << self.dim;
        let mut out = [0usize; 8];
        for (c, slot) in out.iter_mut().enumerate().take(count) {
            let mut ijk = cell;
            for k in 0..self.dim {
                if c & (1 << k) != 0 {
                    ijk[k] += 1;
                }
            }
            *slot = self.node_index(ijk);
        }
        (out, count)
    }

    /// True when the node lies on a face of the box.
    pub fn on_box_face(&self, ijk: [usize; 3]) -> bool {
        (0..self.dim).any(|k| ijk[k] == 0 || ijk[k] == self.n[k])
    }

    /// True when `p` lies in the closed box.
    pub fn contains(&self, p: &Point) -> bool {
        let e = self.extent();
        (0..self.dim).all(|k| {
            let x = p[k] - self.origin[k];
            x >= -1e-12 * self.h && x <= e[k] + 1e-12 * self.h
        })
    }

    /// Distance from `p` to the nearest box face (negative outside).
    pub fn distance_to_faces(&self, p: &Point) -> f64 {
        let e = self.extent();
        (0..self.dim)
            .map(|k| {
                let x = p[k] - self.origin[k];
                x.min(e[k] - x)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Cell containing `p` and the local coordinates in `[0,1]^d`, clamped
    /// to the box.
    pub fn locate(&self, p: &Point) -> ([usize; 3], Point) {
        let mut cell = [0usize; 3];
        let mut local = Point::zeros();
        for k in 0..self.dim {
            let s = (p[k] - self.origin[k]) / self.h;
            let i = (s.floor().max(0.0) as usize).min(self.n[k] - 1);
            cell[k] = i;
            local[k] = (s - i as f64).clamp(0.0, 1.0);
        }
        (cell, local)
    }

    /// Nearest node to `p` (clamped to the box).
    pub fn nearest_node(&self, p: &Point) -> [usize; 3] {
        let mut ijk = [0usize; 3];
        for k in 0..self.dim {
            let s = ((p[k] - self.origin[k]) / self.h).round();
            ijk[k] = (s.max(0.0) as usize).min(self.n[k]);
        }
        ijk
    }

    /// Same box refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        let mut g = *self;
        for k in 0..self.dim {
            g.n[k] *= factor;
        }
        g.h /= factor as f64;
        g
    }

    /// Same box with doubled spacing, when every cell count is even and at
    /// least `2 * min_cells`. Bypasses the [`MIN_CELLS`] floor.
    pub(crate) fn coarsened(&self, min_cells: usize) -> Option<Self> {
        let mut g = *self;
        for k in 0..self.dim {
            if self.n[k] % 2 != 0 || self.n[k] / 2 < min_cells {
                return None;
            }
            g.n[k] /= 2;
        }
        g.h *= 2.0;
        Some(g)
    }

    /// True when both grids share dimension, origin, cell counts and spacing.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && (self.h - other.h).abs() <= 1e-14 * self.h
            && (self.origin - other.origin).norm() <= 1e-12 * self.h
    }
}
