//! Weiss boundary-adjusted energy and its monotonicity along radius ladders.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Point;
use crate::quadrature::{gauss_legendre, sphere_rule};

use rayon::prelude::*;

use super::check_scale;

/// Radial Gauss–Legendre nodes of the polar ball rule.
const RADIAL_NODES: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct WeissTrace {
    pub center: Point,
    pub lam: f64,
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    pub w: Vec<f64>,
    /// `∫_{∂B_1} |x·∇u_r − u_r|²`, the homogeneity defect at each radius.
    pub d: Vec<f64>,
}

impl WeissTrace {
    /// Largest increase of `W` when stepping to the next smaller radius.
    pub fn monotonicity_defect(&self) -> f64 {
        self.w.windows(2).map(|p| (p[1] - p[0]).max(0.0)).fold(0.0, f64::max)
    }

    /// `max W − min W` over the ladder.
    pub fn spread(&self) -> f64 {
        let hi = self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.w.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,weiss,homogeneity_defect")?;
        for ((r, w), d) in self.radii.iter().zip(&self.w).zip(&self.d) {
            writeln!(out, "{r:.6e},{w:.10e},{d:.6e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// `(W(u, x0, r), D(u, x0, r))` with `u` read through its positive part.
///
/// `W = r^{-d}[∫_{B_r}|∇u₊|² + Λ|{u>0} ∩ B_r|] − r^{-d-1}∫_{∂B_r} u₊²`, the
/// energy of the rescaling `u_{x0,r}` on the unit ball.
pub fn weiss_energy(u: &ScalarField, x0: &Point, lam: f64, r: f64) -> Result<(f64, f64)> {
    let g = *u.grid();
    if !(lam >= 0.0) || !lam.is_finite() {
        return Err(Error::InvalidInput(format!("Λ must be non-negative, got {lam}")));
    }
    check_scale(&g, x0, r, 1.0)?;
    let dim = g.dim();
    let rule = sphere_rule(dim);
    // Polar rule: Gauss–Legendre in ρ ∈ (0, r) times the sphere rule.
    let radial: Vec<(f64, f64)> = gauss_legendre(RADIAL_NODES)
        .into_iter()
        .map(|(t, wt)| {
            let rho = 0.5 * r * (1.0 + t);
            (rho, 0.5 * r * wt * rho.powi(dim as i32 - 1))
        })
        .collect();
    let bulk: f64 = radial
        .par_iter()
        .map(|&(rho, wr)| {
            wr * rule
                .iter()
                .map(|(w, wt)| {
                    let (val, grad) = u.interpolate_with_gradient(&(x0 + w * rho));
                    if val > 0.0 {
                        wt * (grad.norm_squared() + lam)
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let (surf, homog) = rule
        .par_iter()
        .map(|(w, wt)| {
            let y = x0 + w * r;
            let (val, grad) = u.interpolate_with_gradient(&y);
            if val > 0.0 {
                let e = r * w.dot(&grad) - val;
                (wt * val * val, wt * e * e)
            } else {
                (0.0, 0.0)
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let rd = r.powi(dim as i32);
    // Sphere sums carry r^{d-1}; the rescaling divides by r^{d+1}.
    let sphere = r.powi(dim as i32 - 1) / (rd * r);
    Ok((bulk / rd - surf * sphere, homog * sphere))
}

/// Weiss energies of `u` at `x0` over strictly decreasing radii.
pub fn weiss_trace(u: &ScalarField, x0: &Point, lam: f64, radii: &[f64]) -> Result<WeissTrace> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("empty radius ladder".into()));
    }
    if radii.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(Error::InvalidInput("radii must be strictly decreasing".into()));
    }
    let mut w = Vec::with_capacity(radii.len());
    let mut d = Vec::with_capacity(radii.len());
    for &r in radii {
        let (a, b) = weiss_energy(u, x0, lam, r)?;
        w.push(a);
        d.push(b);
    }
    Ok(WeissTrace { center: *x0, lam, radii: radii.to_vec(), w, d })
}
