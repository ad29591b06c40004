//! Level-set domains `Ω = {φ > 0}` with sub-cell volume fractions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};

/// Sub-samples per axis used for volume fractions of mixed cells.
pub const VOLFRAC_SUBSAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainRep {
    phi: ScalarField,
    volfrac: Vec<f64>,
}

impl DomainRep {
    pub fn new(phi: ScalarField) -> Self {
        let volfrac = volume_fractions(&phi, VOLFRAC_SUBSAMPLES);
        Self { phi, volfrac }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        Self::new(ScalarField::from_fn(grid, f))
    }

    /// Ball `{|x - c| < r}` as a signed-distance level set.
    pub fn ball(grid: Grid, center: Point, radius: f64) -> Self {
        Self::from_fn(grid, move |p| radius - (p - center).norm())
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn volfrac(&self) -> &[f64] {
        &self.volfrac
    }

    #[inline]
    pub fn inside(&self, node: usize) -> bool {
        self.phi.values()[node] > 0.0
    }

    /// Lebesgue measure estimate `h^d Σ volfrac`.
    pub fn volume(&self) -> f64 {
        self.grid().cell_volume() * self.volfrac.iter().sum::<f64>()
    }

    pub fn is_empty(&self) -> bool {
        !self.phi.values().iter().any(|&v| v > 0.0)
    }

    /// Intersection `{φ > 0} ∩ {ψ > 0}` represented by `min(φ, ψ)`.
    pub fn intersect(&self, other: &DomainRep) -> Result<DomainRep> {
        Ok(DomainRep::new(self.phi.zip_map(&other.phi, f64::min)?))
    }

    /// Union represented by `max(φ, ψ)`.
    pub fn union(&self, other: &DomainRep) -> Result<DomainRep> {
        Ok(DomainRep::new(self.phi.zip_map(&other.phi, f64::max)?))
    }

    /// Fraction of the grid edge from `inside` towards `outside` at which the
    /// linear interpolant of φ vanishes.
    #[inline]
    pub fn crossing(&self, inside: usize, outside: usize) -> f64 {
        let a = self.phi.values()[inside];
        let b = self.phi.values()[outside];
        (a / (a - b)).clamp(0.0, 1.0)
    }

    /// Volume fraction of `Ω ∩ B` per cell, by `sub^d` sub-sampling of cells
    /// whose corners are not all inside both sets.
    pub fn volfrac_in_ball(&self, center: &Point, radius: f64, sub: usize) -> Vec<f64> {
        let g = *self.grid();
        let h = g.h();
        let half_diag = 0.5 * h * (g.dim() as f64).sqrt();
        (0..g.cell_count())
            .into_par_iter()
            .map(|c| {
                let ijk = g.cell_ijk(c);
                let dist = (g.cell_center(ijk) - center).norm();
                if dist > radius + half_diag || self.volfrac[c] == 0.0 {
                    return 0.0;
                }
                if dist < radius - half_diag {
                    return self.volfrac[c];
                }
                let mut hit = 0usize;
                let total = sub.pow(g.dim() as u32);
                for s in 0..total {
                    let local = sub_point(g.dim(), s, sub);
                    let p = g.node_position(ijk) + local * h;
                    if (p - center).norm() < radius && self.phi.interpolate(&p) > 0.0 {
                        hit += 1;
                    }
                }
                hit as f64 / total as f64
            })
            .collect()
    }
}

/// Sub-cell midpoint `s` of a `sub^d` lattice in local coordinates.
pub(crate) fn sub_point(dim: usize, s: usize, sub: usize) -> Point {
    let mut local = Point::zeros();
    let mut rest = s;
    for k in 0..dim {
        local[k] = ((rest % sub) as f64 + 0.5) / sub as f64;
        rest /= sub;
    }
    local
}

fn volume_fractions(phi: &ScalarField, sub: usize) -> Vec<f64> {
    let g = *phi.grid();
    let v = phi.values();
    (0..g.cell_count())
        .into_par_iter()
        .map(|c| {
            let ijk = g.cell_ijk(c);
            let (corners, count) = g.cell_corners(ijk);
            let corners = &corners[..count];
            if corners.iter().all(|&n| v[n] > 0.0) {
                return 1.0;
            }
            if corners.iter().all(|&n| v[n] < 0.0) {
                return 0.0;
            }
            let total = sub.pow(g.dim() as u32);
            let mut hit = 0usize;
            for s in 0..total {
                let local = sub_point(g.dim(), s, sub);
                let mut val = 0.0;
                for (ci, &n) in corners.iter().enumerate() {
                    let mut w = 1.0;
                    for k in 0..g.dim() {
                        w *= if ci & (1 << k) != 0 { local[k] } else { 1.0 - local[k] };
                    }
                    val += w * v[n];
                }
                if val > 0.0 {
                    hit += 1;
                }
            }
            hit as f64 / total as f64
        })
        .collect()
}

/// Checks that two domains live on the same grid.
pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}
