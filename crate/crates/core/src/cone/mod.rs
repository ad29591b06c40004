//! One-homogeneous axially symmetric cones `u = r Φ(θ)` over spherical caps,
//! their boundary curvature, the stability form and its cross-check
//! against the second variation of the one-phase energy.
//!
//! `θ` is the angle to the first coordinate axis and the cone is
//! `{θ < θ0}`.

mod check;
mod cjk;

pub use check::{cross_check_delta2g, AnnulusBump, CrossCheckOptions};
pub use cjk::{cap_modes, cjk_form, CapMode, RayleighEntry, RayleighReport, TestFamily};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Point;

/// Steps of the shooting integrator over `(0, π)`.
const SHOOT_STEPS: usize = 8192;
/// Profile intervals on `[0, θ0]`.
const PROFILE_STEPS: usize = 1024;
/// A cap is accepted when its first zero lands this close to `θ0`.
pub const SHOOTING_TOL: f64 = 1e-10;
/// Series start of the regular solution.
const THETA_START: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    pub dim: usize,
    pub theta0: f64,
    /// Degree `γ` of `u = r^γ Φ(θ)`; `1` for caps from [`solve_cap`].
    pub homogeneity: f64,
    pub thetas: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapSolution {
    Found(ConeSpec),
    /// The regular solution first vanishes at `first_zero`, if anywhere in `(0, π)`.
    NoSolution { first_zero: Option<f64> },
}

impl CapSolution {
    pub fn spec(&self) -> Option<&ConeSpec> {
        match self {
            CapSolution::Found(s) => Some(s),
            CapSolution::NoSolution { .. } => None,
        }
    }
}

fn check_cap(dim: usize, theta0: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("cone dimension must be at least 2, got {dim}")));
    }
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(Error::InvalidInput(format!("cap half-angle must lie in (0, π), got {theta0}")));
    }
    Ok(())
}

/// Right-hand side of `Φ'' + (d−2) cot θ Φ' + κ Φ = 0`.
fn rhs(dim: usize, kappa: f64, t: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -(dim as f64 - 2.0) * y[1] / t.tan() - kappa * y[0]]
}

fn rk4(dim: usize, kappa: f64, t: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = rhs(dim, kappa, t, y);
    let k2 = rhs(dim, kappa, t + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = rhs(dim, kappa, t + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = rhs(dim, kappa, t + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Regular solution near `θ = 0` from its Frobenius series `1 + a₂θ² + a₄θ⁴`.
fn series(dim: usize, kappa: f64, t: f64) -> [f64; 2] {
    let d = dim as f64;
    let a2 = -kappa / (2.0 * (d - 1.0));
    let a4 = a2 * (2.0 * (d - 2.0) / 3.0 - kappa) / (4.0 * d + 4.0);
    [1.0 + a2 * t * t + a4 * t.powi(4), 2.0 * a2 * t + 4.0 * a4 * t.powi(3)]
}

/// First zero in `(0, π)` of the regular solution.
fn first_zero(dim: usize, kappa: f64) -> Option<f64> {
    let end = std::f64::consts::PI - THETA_START;
    let h = (end - THETA_START) / SHOOT_STEPS as f64;
    let mut t = THETA_START;
    let mut y = series(dim, kappa, t);
    for _ in 0..SHOOT_STEPS {
        let next = rk4(dim, kappa, t, y, h);
        if next[0] <= 0.0 {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rk4(dim, kappa, t, y, mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(t + 0.5 * (lo + hi));
        }
        y = next;
        t += h;
    }
    None
}

/// Profile of the regular solution on `[0, θ0]`, normalized to `|Φ'(θ0)| = 1`.
fn profile(dim: usize, kappa: f64, theta0: f64, homogeneity: f64) -> ConeSpec {
    let dt = theta0 / PROFILE_STEPS as f64;
    let sub = 8;
    let mut thetas = vec![0.0];
    let mut phi = vec![1.0];
    let mut dphi = vec![0.0];
    let mut y = series(dim, kappa, dt);
    thetas.push(dt);
    phi.push(y[0]);
    dphi.push(y[1]);
    for i in 1..PROFILE_STEPS {
        let t0 = i as f64 * dt;
        for s in 0..sub {
            y = rk4(dim, kappa, t0 + s as f64 * dt / sub as f64, y, dt / sub as f64);
        }
        thetas.push((i + 1) as f64 * dt);
        phi.push(y[0]);
        dphi.push(y[1]);
    }
    let norm = dphi.last().expect("profile").abs();
    for (p, q) in phi.iter_mut().zip(dphi.iter_mut()) {
        *p /= norm;
        *q /= norm;
    }
    *phi.last_mut().expect("profile") = 0.0;
    ConeSpec { dim, theta0, homogeneity, thetas, phi, dphi }
}

/// The one-homogeneous harmonic cone over the cap `{θ < θ0}`: shoots the
/// regular solution of `Φ'' + (d−2) cot θ Φ' + (d−1) Φ = 0` and accepts the
/// cap when its first zero is within [`SHOOTING_TOL`] of `θ0`.
pub fn solve_cap(dim: usize, theta0: f64) -> Result<CapSolution> {
    check_cap(dim, theta0)?;
    let kappa = dim as f64 - 1.0;
    let zero = first_zero(dim, kappa);
    Ok(match zero {
        Some(z) if (z - theta0).abs() <= SHOOTING_TOL => CapSolution::Found(profile(dim, kappa, theta0, 1.0)),
        _ => CapSolution::NoSolution { first_zero: zero },
    })
}

/// Runs [`solve_cap`] on `n` evenly spaced half-angles in `[lo, hi]` and
/// keeps the caps that were found.
pub fn scan_caps(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Vec<ConeSpec>> {
    let mut out = Vec::new();
    for k in 0..n {
        let t = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
        if let CapSolution::Found(s) = solve_cap(dim, t)? {
            out.push(s);
        }
    }
    Ok(out)
}

/// The cap `{θ < θ0}` carrying its first Dirichlet eigenfunction: the
/// harmonic cone `r^γ Φ(θ)` of the homogeneity `γ` that this cap forces.
pub fn dirichlet_cap(dim: usize, theta0: f64) -> Result<ConeSpec> {
    check_cap(dim, theta0)?;
    let zero_of = |k: f64| first_zero(dim, k).unwrap_or(std::f64::consts::PI);
    let (mut lo, mut hi) = (1e-6, 1.0);
    while zero_of(hi) > theta0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if zero_of(mid) > theta0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);
    let d2 = dim as f64 - 2.0;
    let gamma = 0.5 * (-d2 + (d2 * d2 + 4.0 * kappa).sqrt());
    Ok(profile(dim, kappa, theta0, gamma))
}

/// Mean curvature at distance `r` from the vertex of the circular cone
/// `{θ = θ0}`, oriented towards the complement: `(d−2) cot θ0 / r`.
pub fn mean_curvature(spec: &ConeSpec, r: f64) -> f64 {
    (spec.dim as f64 - 2.0) / spec.theta0.tan() / r
}

impl ConeSpec {
    pub fn kappa(&self) -> f64 {
        self.homogeneity * (self.homogeneity + self.dim as f64 - 2.0)
    }

    pub fn is_half_space(&self) -> bool {
        (self.theta0 - std::f64::consts::FRAC_PI_2).abs() <= SHOOTING_TOL && (self.homogeneity - 1.0).abs() < 1e-12
    }

    /// `(Φ, Φ')` by cubic Hermite interpolation on `[0, θ0]` and the
    /// quadratic Taylor polynomial from the ODE beyond `θ0`.
    pub fn profile_at(&self, t: f64) -> (f64, f64) {
        let n = self.thetas.len() - 1;
        let dt = self.theta0 / n as f64;
        if t >= self.theta0 {
            let (p, q) = (self.phi[n], self.dphi[n]);
            let [_, pp] = rhs(self.dim, self.kappa(), self.theta0, [p, q]);
            let s = t - self.theta0;
            return (p + q * s + 0.5 * pp * s * s, q + pp * s);
        }
        let t = t.max(0.0);
        let i = ((t / dt) as usize).min(n - 1);
        let s = (t - i as f64 * dt) / dt;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * dt, self.dphi[i + 1] * dt);
        let s2 = s * s;
        let s3 = s2 * s;
        let val = (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
        let der = ((6.0 * s2 - 6.0 * s) * p0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * p1 + (3.0 * s2 - 2.0 * s) * m1)
            / dt;
        (val, der)
    }

    /// `θ(x)`, the angle to the first axis.
    pub fn angle(&self, x: &Point) -> f64 {
        let r = x.norm();
        if r == 0.0 {
            return 0.0;
        }
        (x[0] / r).clamp(-1.0, 1.0).acos()
    }

    /// `r^γ Φ(θ)` continued past the cap by the profile's Taylor polynomial.
    pub fn u(&self, x: &Point) -> f64 {
        let r = x.norm();
        r.powf(self.homogeneity) * self.profile_at(self.angle(x)).0
    }

    /// `∇(r^γ Φ(θ)) = r^{γ−1}(γΦ e_r + Φ' e_θ)`.
    pub fn grad_u(&self, x: &Point) -> Point {
        let r = x.norm();
        if r == 0.0 {
            return Point::zeros();
        }
        let t = self.angle(x);
        let (p, q) = self.profile_at(t);
        let er = x / r;
        let mut axis = Point::zeros();
        axis[0] = 1.0;
        let s = t.sin();
        let e_theta = if s > 1e-12 { (er * t.cos() - axis) / s } else { Point::zeros() };
        (er * (self.homogeneity * p) + e_theta * q) * r.powf(self.homogeneity - 1.0)
    }

    /// Signed distance to the cone surface, positive inside.
    pub fn level(&self, x: &Point) -> f64 {
        let t = self.angle(x);
        let r = x.norm();
        if (self.theta0 - t).abs() <= std::f64::consts::FRAC_PI_2 {
            r * (self.theta0 - t).sin()
        } else {
            (self.theta0 - t).signum() * r
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,phi,dphi")?;
        for ((t, p), q) in self.thetas.iter().zip(&self.phi).zip(&self.dphi) {
            writeln!(out, "{t:.12e},{p:.12e},{q:.12e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}
