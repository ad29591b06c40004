//! Boundary stability form against `½δ²𝒢` with `ξ = φ∇u` on a grid.

use crate::calculus::{one_phase_variations, FdField};
use crate::domain::DomainRep;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};
use crate::quadrature::{gauss_legendre, unit_sphere_measure, BallRegion};

use super::{mean_curvature, ConeSpec};

/// Radial test function `amp · η((2r − a − b)/(b − a))` with
/// `η(t) = exp(t²/(t² − 1))`, supported in the annulus `a < |x| < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusBump {
    pub inner: f64,
    pub outer: f64,
    pub amp: f64,
}

impl AnnulusBump {
    pub fn new(inner: f64, outer: f64, amp: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::InvalidInput(format!("annulus ({inner}, {outer}) must satisfy 0 < a < b")));
        }
        Ok(Self { inner, outer, amp })
    }

    /// `(ρ(r), ρ'(r))`.
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let (a, b) = (self.inner, self.outer);
        let t = (2.0 * r - a - b) / (b - a);
        if t.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let m = t * t - 1.0;
        let e = (t * t / m).exp();
        (self.amp * e, self.amp * e * (-2.0 * t / (m * m)) * 2.0 / (b - a))
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.radial(x.norm()).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheckOptions {
    /// Half-width of the box `[-L, L]^d`.
    pub half: f64,
    pub cells: usize,
    pub tol: f64,
}

impl CrossCheckOptions {
    pub fn standard(dim: usize) -> Self {
        Self { half: 1.25, cells: if dim == 2 { 160 } else { 48 }, tol: 1e-10 }
    }
}

/// `|C| = |S^{d−2}| ∫_0^{θ0} sin^{d−2}θ dθ`.
fn cap_measure(dim: usize, theta0: f64) -> f64 {
    let gl = gauss_legendre(32);
    let s: f64 = gl
        .iter()
        .map(|&(x, w)| {
            let t = 0.5 * theta0 * (1.0 + x);
            0.5 * theta0 * w * t.sin().powi(dim as i32 - 2)
        })
        .sum();
    unit_sphere_measure(dim - 1) * s
}

/// `∫_Ω|∇φ|² − ∫_{∂Ω} H φ²` for the radial bump by one-dimensional quadrature.
fn boundary_form(spec: &ConeSpec, phi: &AnnulusBump) -> f64 {
    let dim = spec.dim;
    let gl = gauss_legendre(8);
    let panels = 64;
    let width = (phi.outer - phi.inner) / panels as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..panels {
        for &(x, w) in &gl {
            let r = phi.inner + (k as f64 + 0.5 * (1.0 + x)) * width;
            let (p, dp) = phi.radial(r);
            let wt = 0.5 * w * width;
            a += wt * dp * dp * r.powi(dim as i32 - 1);
            b += wt * mean_curvature(spec, r) * p * p * r.powi(dim as i32 - 2);
        }
    }
    let side = unit_sphere_measure(dim - 1) * spec.theta0.sin().powi(dim as i32 - 2);
    cap_measure(dim, spec.theta0) * a - side * b
}

/// `(∫_Ω|∇φ|² − ∫_{∂Ω}Hφ², δ²𝒢(u)[φ∇u])` for the cone of `spec` in
/// `d = 2, 3`, the second from the gridded `u = r Φ(θ)` on `{θ < θ0}`.
pub fn cross_check_delta2g(spec: &ConeSpec, phi: &AnnulusBump, opts: &CrossCheckOptions) -> Result<(f64, f64)> {
    let dim = spec.dim;
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidInput(format!("gridded cross-check needs d = 2 or 3, got {dim}")));
    }
    let g = Grid::centered(dim, opts.half, opts.cells)?;
    let support = BallRegion::new(Point::zeros(), phi.outer)?;
    support.check_inside(&g)?;
    let form = boundary_form(spec, phi);
    if phi.amp == 0.0 {
        return Ok((form, 0.0));
    }
    let phase = DomainRep::from_fn(g, |x| spec.level(x));
    let u = ScalarField::from_fn(g, |x| if spec.level(x) > 0.0 { spec.u(x) } else { 0.0 });
    let xi = FdField::new(dim, |x: &Point| spec.grad_u(x) * phi.value(x), Some(support));
    let (_, d2) = one_phase_variations(&u, &phase, 1.0, &xi, opts.tol)?;
    Ok((form, d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::solve_cap;
    use std::f64::consts::FRAC_PI_2;

    fn half_space(dim: usize) -> ConeSpec {
        solve_cap(dim, FRAC_PI_2).unwrap().spec().unwrap().clone()
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let phi = AnnulusBump::new(0.3, 1.0, 0.0).unwrap();
        assert_eq!(cross_check_delta2g(&half_space(2), &phi, &CrossCheckOptions::standard(2)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn half_plane_boundary_form_dominates() {
        let spec = half_space(2);
        let opts = CrossCheckOptions::standard(2);
        let h = 2.0 * opts.half / opts.cells as f64;
        let phi = AnnulusBump::new(0.3, 1.0, 1.0).unwrap();
        let (form, d2) = cross_check_delta2g(&spec, &phi, &opts).unwrap();
        assert!(form >= 0.0 && d2 >= -10.0 * h, "{form} {d2}");
        assert!(form >= 0.5 * d2 - 10.0 * h, "{form} vs {d2}");
        let twice = AnnulusBump { amp: 2.0, ..phi };
        let (f2, g2) = cross_check_delta2g(&spec, &twice, &opts).unwrap();
        assert!((f2 - 4.0 * form).abs() < 1e-10 * f2);
        assert!((g2 - 4.0 * d2).abs() < 1e-6 * g2.abs().max(1.0), "{g2} vs {}", 4.0 * d2);
    }

    #[test]
    fn boundary_form_of_a_half_plane_is_the_dirichlet_energy() {
        // ∫_{x>0} |∇φ|² for radial φ is half of 2π ∫ ρ'² r dr.
        let phi = AnnulusBump::new(0.3, 1.0, 1.0).unwrap();
        let n = 200_000;
        let dr = 0.7 / n as f64;
        let full: f64 = (0..n)
            .map(|i| {
                let r = 0.3 + (i as f64 + 0.5) * dr;
                phi.radial(r).1.powi(2) * r * dr
            })
            .sum::<f64>()
            * std::f64::consts::PI;
        assert!((boundary_form(&half_space(2), &phi) - full).abs() < 1e-8 * full);
    }

    #[test]
    fn half_space_boundary_form_dominates_in_three_dimensions() {
        let spec = half_space(3);
        let opts = CrossCheckOptions::standard(3);
        let h = 2.0 * opts.half / opts.cells as f64;
        let phi = AnnulusBump::new(0.3, 1.0, 1.0).unwrap();
        let (form, d2) = cross_check_delta2g(&spec, &phi, &opts).unwrap();
        assert!(form >= 0.0 && d2 >= -10.0 * h, "{form} {d2}");
        assert!(form >= 0.5 * d2 - 10.0 * h, "{form} vs {d2}");
    }
}
