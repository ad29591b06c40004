//! The stability form `∫_Ω|∇φ|² − ∫_{∂Ω} H φ²` on separable test functions.
//!
//! For `φ = ρ(r) Θ(θ) Y(ω)` with `Y` an `L²`-normalized spherical harmonic
//! of degree `m` on `S^{d−2}` the form splits into
//! `A ∫_C ψ² + B (∫_C |∇ψ|² − H₀ ∫_{∂C} ψ²)` with `A = ∫ρ'² r^{d−1}`,
//! `B = ∫ρ² r^{d−3}` and `H₀ = (d−2) cot θ0`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

use super::{mean_curvature, ConeSpec};

/// Finite elements on `[0, θ0]` for the cap eigenproblem.
const CAP_ELEMENTS: usize = 256;
/// Azimuthal degrees searched for the lowest modes.
const MAX_DEGREE: usize = 8;

/// Eigenfunction `Θ(θ) Y_m` of the Laplacian on the cap with natural
/// boundary condition at `θ0`, normalized in `L²(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapMode {
    pub degree: usize,
    /// `∫_C |∇ψ|²`.
    pub eigenvalue: f64,
    /// Nodal values of `Θ` on the uniform mesh of `[0, θ0]`.
    pub values: Vec<f64>,
}

impl CapMode {
    /// `Θ(θ0)² sin^{d−2} θ0 = ∫_{∂C} ψ²`.
    pub fn boundary_mass(&self, dim: usize, theta0: f64) -> f64 {
        self.values.last().copied().unwrap_or(0.0).powi(2) * theta0.sin().powi(dim as i32 - 2)
    }

    /// `Θ(t)` by linear interpolation.
    pub fn theta_value(&self, theta0: f64, t: f64) -> f64 {
        let n = self.values.len() - 1;
        let s = (t / theta0 * n as f64).clamp(0.0, n as f64);
        let i = (s as usize).min(n - 1);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }
}

/// `μ_m = m(m + d − 3)`; in 2D the even and odd modes are `m = 0, 1`, both with `μ = 0`.
fn degree_weight(dim: usize, m: usize) -> f64 {
    if dim == 2 {
        0.0
    } else {
        (m * (m + dim - 3)) as f64
    }
}

fn degrees(dim: usize) -> std::ops::RangeInclusive<usize> {
    if dim == 2 {
        0..=1
    } else {
        0..=MAX_DEGREE
    }
}

/// Modes of one azimuthal degree, lowest first.
fn modes_of_degree(dim: usize, theta0: f64, m: usize) -> Vec<CapMode> {
    let n = CAP_ELEMENTS;
    let dt = theta0 / n as f64;
    // Degrees m ≥ 1 vanish on the axis.
    let first = usize::from(m > 0);
    let size = n + 1 - first;
    let mu = degree_weight(dim, m);
    let mut k = DMatrix::<f64>::zeros(size, size);
    let mut mass = DMatrix::<f64>::zeros(size, size);
    let gl = gauss_legendre(3);
    for e in 0..n {
        for &(x, w) in &gl {
            let s = 0.5 * (1.0 + x);
            let t = (e as f64 + s) * dt;
            let wt = 0.5 * w * dt * t.sin().powi(dim as i32 - 2);
            let basis = [1.0 - s, s];
            let grad = [-1.0 / dt, 1.0 / dt];
            let sin2 = t.sin().powi(2);
            for a in 0..2 {
                for b in 0..2 {
                    let (ia, ib) = (e + a, e + b);
                    if ia < first || ib < first {
                        continue;
                    }
                    let (ra, rb) = (ia - first, ib - first);
                    k[(ra, rb)] += wt * (grad[a] * grad[b] + mu * basis[a] * basis[b] / sin2);
                    mass[(ra, rb)] += wt * basis[a] * basis[b];
                }
            }
        }
    }
    let l = mass.clone().cholesky().expect("positive mass matrix").l();
    let linv = l.clone().try_inverse().expect("invertible factor");
    let c = &linv * &k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(4)
        .map(|j| {
            let coef = linv.transpose() * eig.eigenvectors.column(j);
            let mut values = vec![0.0; first];
            values.extend(coef.iter());
            // Fix the sign so the boundary value is non-negative.
            if values[n] < 0.0 {
                values.iter_mut().for_each(|v| *v = -*v);
            }
            CapMode { degree: m, eigenvalue: eig.eigenvalues[j], values }
        })
        .collect()
}

/// The `count` lowest cap modes over all azimuthal degrees.
pub fn cap_modes(dim: usize, theta0: f64, count: usize) -> Vec<CapMode> {
    let mut all: Vec<CapMode> =
        degrees(dim).collect::<Vec<_>>().par_iter().flat_map(|&m| modes_of_degree(dim, theta0, m)).collect();
    all.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue).then(a.degree.cmp(&b.degree)));
    all.truncate(count);
    all
}

/// Radial profiles `amp · η((2r − a − b)/(b − a)) · r^s` over an annulus
/// `(a, b)`, with `η(t) = exp(t²/(t² − 1))`, times cap modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    pub inner: f64,
    pub outer: f64,
    pub exponents: Vec<f64>,
    pub modes: usize,
    pub amplitude: f64,
}

impl TestFamily {
    /// Nine exponents across `[(2−d)/2 − 1, (2−d)/2 + 1]`, eight modes,
    /// annulus `(1/2, 2)`.
    pub fn standard(dim: usize) -> Self {
        let c = (2.0 - dim as f64) / 2.0;
        Self {
            inner: 0.5,
            outer: 2.0,
            exponents: (0..9).map(|k| c - 1.0 + 0.25 * k as f64).collect(),
            modes: 8,
            amplitude: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.inner > 0.0 && self.outer > self.inner) {
            return Err(Error::InvalidInput(format!("annulus ({}, {}) must satisfy 0 < a < b", self.inner, self.outer)));
        }
        if self.exponents.is_empty() || self.modes == 0 {
            return Err(Error::InvalidInput("test family has no members".into()));
        }
        Ok(())
    }

    /// `(ρ(r), ρ'(r))` for the exponent `s`.
    pub fn radial(&self, s: f64, r: f64) -> (f64, f64) {
        let (a, b) = (self.inner, self.outer);
        let t = (2.0 * r - a - b) / (b - a);
        if t.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let m = t * t - 1.0;
        let e = (t * t / m).exp();
        let de = e * (-2.0 * t / (m * m)) * 2.0 / (b - a);
        let p = r.powf(s);
        (self.amplitude * e * p, self.amplitude * (de * p + e * s * p / r))
    }

    /// `(∫ρ'² r^{d−1}, ∫ρ² r^{d−3})` by composite Gauss–Legendre.
    pub fn radial_integrals(&self, dim: usize, s: f64) -> (f64, f64) {
        let panels = 64;
        let gl = gauss_legendre(8);
        let width = (self.outer - self.inner) / panels as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..panels {
            for &(x, w) in &gl {
                let r = self.inner + (k as f64 + 0.5 * (1.0 + x)) * width;
                let (p, dp) = self.radial(s, r);
                let wt = 0.5 * w * width;
                a += wt * dp * dp * r.powi(dim as i32 - 1);
                b += wt * p * p * r.powi(dim as i32 - 3);
            }
        }
        (a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighEntry {
    pub exponent: f64,
    pub degree: usize,
    pub mode_eigenvalue: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighReport {
    pub description: String,
    pub entries: Vec<RayleighEntry>,
    pub min_value: f64,
}

impl RayleighReport {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// A negative value certifies instability; otherwise none was found.
    pub fn verdict(&self) -> &'static str {
        if self.min_value < 0.0 {
            "unstable"
        } else {
            "no instability found"
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.description)?;
        writeln!(out, "exponent,degree,mode_eigenvalue,value")?;
        for e in &self.entries {
            writeln!(out, "{:.6e},{},{:.10e},{:.10e}", e.exponent, e.degree, e.mode_eigenvalue, e.value)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Evaluates the stability form of `spec` on every member of `family`.
pub fn cjk_form(spec: &ConeSpec, family: &TestFamily) -> Result<RayleighReport> {
    family.validate()?;
    let dim = spec.dim;
    let h0 = mean_curvature(spec, 1.0);
    let modes = cap_modes(dim, spec.theta0, family.modes);
    let mut entries = Vec::with_capacity(family.exponents.len() * modes.len());
    for &s in &family.exponents {
        let (a, b) = family.radial_integrals(dim, s);
        for m in &modes {
            let value = a + b * (m.eigenvalue - h0 * m.boundary_mass(dim, spec.theta0));
            entries.push(RayleighEntry { exponent: s, degree: m.degree, mode_eigenvalue: m.eigenvalue, value });
        }
    }
    if entries.iter().any(|e| !e.value.is_finite()) {
        return Err(Error::InvalidInput("stability form is not finite".into()));
    }
    let min_value = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let description = format!(
        "dim={dim} theta0={:.10} homogeneity={:.10}; separable family on the annulus ({}, {}) with {} exponents x {} cap modes; axially symmetric caps only, a non-negative minimum is not a stability proof",
        spec.theta0,
        spec.homogeneity,
        family.inner,
        family.outer,
        family.exponents.len(),
        modes.len()
    );
    Ok(RayleighReport { description, entries, min_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{dirichlet_cap, solve_cap};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn half_space_modes_in_three_dimensions() {
        // Neumann eigenvalues on the hemisphere: ℓ(ℓ + 1) for ℓ + m even.
        let modes = cap_modes(3, FRAC_PI_2, 6);
        let expected = [0.0, 2.0, 6.0, 6.0, 12.0, 12.0];
        for (m, e) in modes.iter().zip(expected) {
            assert!((m.eigenvalue - e).abs() < 1e-3 * e.max(1.0), "{} vs {e}", m.eigenvalue);
        }
        // The constant mode has Θ = 1/√|C| with |C| = 1 in θ-measure.
        assert!((modes[0].values[0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn arc_modes_in_two_dimensions() {
        // Neumann modes on (−θ0, θ0): (kπ / 2θ0)².
        let modes = cap_modes(2, FRAC_PI_2, 4);
        for (k, m) in modes.iter().enumerate() {
            assert!((m.eigenvalue - (k * k) as f64).abs() < 1e-3 * ((k * k) as f64).max(1.0), "{}", m.eigenvalue);
        }
    }

    #[test]
    fn half_space_values_are_non_negative_and_quadratic() {
        for dim in 2..=6 {
            let spec = solve_cap(dim, FRAC_PI_2).unwrap().spec().unwrap().clone();
            let fam = TestFamily::standard(dim);
            let rep = cjk_form(&spec, &fam).unwrap();
            assert!(rep.min_value >= 0.0, "d = {dim}: {}", rep.min_value);
            assert_eq!(rep.entries.len(), 9 * 8);
            let twice = cjk_form(&spec, &TestFamily { amplitude: 2.0, ..fam }).unwrap();
            for (a, b) in rep.values().iter().zip(twice.values()) {
                assert!((4.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn narrow_cap_is_certified_unstable() {
        // The constant mode carries H₀ ∫_{∂C} ψ² = cos θ0 / (1 − cos θ0) ≈ 21.
        let spec = dirichlet_cap(3, 0.3).unwrap();
        let rep = cjk_form(&spec, &TestFamily::standard(3)).unwrap();
        assert!(rep.min_value < 0.0);
        assert_eq!(rep.verdict(), "unstable");
    }

    /// Both integrals of the form by direct quadrature in spherical
    /// coordinates, for `φ = ρ(r) Θ(θ) cos(m(ω − α)) / √π` in 3D.
    fn direct_form(spec: &ConeSpec, fam: &TestFamily, s: f64, mode: &CapMode, alpha: f64) -> f64 {
        let (nr, nt, nw) = (400, 512, 64);
        let t0 = spec.theta0;
        let y = |w: f64| {
            if mode.degree == 0 {
                (1.0 / (2.0 * PI).sqrt(), 0.0)
            } else {
                let m = mode.degree as f64;
                ((m * (w - alpha)).cos() / PI.sqrt(), -m * (m * (w - alpha)).sin() / PI.sqrt())
            }
        };
        let dr = (fam.outer - fam.inner) / nr as f64;
        let dt = t0 / nt as f64;
        let dw = 2.0 * PI / nw as f64;
        let mut bulk = 0.0;
        let mut bdry = 0.0;
        for i in 0..nr {
            let r = fam.inner + (i as f64 + 0.5) * dr;
            let (p, dp) = fam.radial(s, r);
            for k in 0..nw {
                let w = (k as f64 + 0.5) * dw;
                let (yv, dy) = y(w);
                for j in 0..nt {
                    let t = (j as f64 + 0.5) * dt;
                    let th = mode.theta_value(t0, t);
                    let dth = (mode.theta_value(t0, t + 0.5 * dt) - mode.theta_value(t0, t - 0.5 * dt)) / dt;
                    let grad2 = (dp * th * yv).powi(2) + (p * dth * yv / r).powi(2) + (p * th * dy / (r * t.sin())).powi(2);
                    bulk += grad2 * r * r * t.sin() * dr * dt * dw;
                }
                let h = mean_curvature(spec, r);
                let th = mode.theta_value(t0, t0);
                bdry += h * (p * th * yv).powi(2) * r * t0.sin() * dr * dw;
            }
        }
        bulk - bdry
    }

    #[test]
    fn separable_form_matches_direct_quadrature_under_rotation() {
        let spec = dirichlet_cap(3, 1.2).unwrap();
        let fam = TestFamily { exponents: vec![-0.5], modes: 4, ..TestFamily::standard(3) };
        let rep = cjk_form(&spec, &fam).unwrap();
        let modes = cap_modes(3, spec.theta0, 4);
        for (e, m) in rep.entries.iter().zip(&modes) {
            for alpha in [0.0, 0.7] {
                let direct = direct_form(&spec, &fam, -0.5, m, alpha);
                assert!((direct - e.value).abs() < 1e-2 * e.value.abs().max(1.0), "m = {}: {direct} vs {}", m.degree, e.value);
            }
        }
    }
}
