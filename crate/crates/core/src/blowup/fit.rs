//! Least-squares half-plane fits of blow-up pairs.

use rayon::prelude::*;

use crate::field::ScalarField;
use crate::grid::Point;

/// Default relative fit tolerance.
pub const TAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::Singular => "singular",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPointReport {
    pub center: Point,
    /// Radius of the rescaling that was fitted.
    pub scale: f64,
    pub best_nu: Point,
    pub alpha: f64,
    pub beta: f64,
    /// Larger of the relative `L^∞(B_1)` errors of the two fits.
    pub fit_error: f64,
    pub verdict: Verdict,
}

/// Fitted directions: 256 on the circle, 1026 Fibonacci points on the sphere.
pub fn direction_grid(dim: usize) -> Vec<Point> {
    if dim == 2 {
        let n = 256;
        (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point::new(t.cos(), t.sin(), 0.0)
            })
            .collect()
    } else {
        let n = 1026;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                let s = (1.0 - z * z).sqrt();
                let a = golden * k as f64;
                Point::new(s * a.cos(), s * a.sin(), z)
            })
            .collect()
    }
}

/// Regular when the fit is within `τ` and `αβ` is within `τ Q` of `Q`;
/// singular when the fit error is at least `3τ`.
pub fn verdict(fit_error: f64, alpha: f64, beta: f64, q: f64, tau: f64) -> Verdict {
    if fit_error <= tau && (alpha * beta - q).abs() <= tau * q {
        Verdict::Regular
    } else if fit_error >= 3.0 * tau {
        Verdict::Singular
    } else {
        Verdict::Inconclusive
    }
}

/// Best `α ≥ 0` for `u ≈ α p` and the relative sup error.
fn fit_one(u: &[f64], p: &[f64], top: f64) -> (f64, f64) {
    let num: f64 = u.iter().zip(p).map(|(a, b)| a * b).sum();
    let den: f64 = p.iter().map(|b| b * b).sum();
    let alpha = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    if !(top > 0.0) {
        return (alpha, 1.0);
    }
    let err = u.iter().zip(p).map(|(a, b)| (a - alpha * b).abs()).fold(0.0, f64::max);
    (alpha, err / top)
}

/// [`halfplane_fit_with`] at the default tolerance [`TAU`].
pub fn halfplane_fit(u: &ScalarField, v: &ScalarField, q: f64) -> BoundaryPointReport {
    halfplane_fit_with(u, v, q, TAU)
}

/// Fits `u₊ ≈ α(x·ν)₊` and `v₊ ≈ β(x·ν)₊` on the nodes of `B_1` in the
/// reference grid of `u`, minimizing the larger relative error over
/// [`direction_grid`]. Ties go to the first direction.
pub fn halfplane_fit_with(u: &ScalarField, v: &ScalarField, q: f64, tau: f64) -> BoundaryPointReport {
    let g = *u.grid();
    let mut xs = Vec::new();
    let mut us = Vec::new();
    let mut vs = Vec::new();
    for i in 0..g.node_count() {
        let x = g.node_point(i);
        if x.norm() <= 1.0 {
            xs.push(x);
            us.push(u.values()[i].max(0.0));
            vs.push(v.values()[i].max(0.0));
        }
    }
    let utop = us.iter().copied().fold(0.0, f64::max);
    let vtop = vs.iter().copied().fold(0.0, f64::max);
    let dirs = direction_grid(g.dim());
    let fits: Vec<(f64, f64, f64)> = dirs
        .par_iter()
        .map(|nu| {
            let p: Vec<f64> = xs.iter().map(|x| x.dot(nu).max(0.0)).collect();
            let (a, ea) = fit_one(&us, &p, utop);
            let (b, eb) = fit_one(&vs, &p, vtop);
            (a, b, ea.max(eb))
        })
        .collect();
    let mut best = 0;
    for (k, f) in fits.iter().enumerate() {
        if f.2 < fits[best].2 {
            best = k;
        }
    }
    let (alpha, beta, fit_error) = fits[best];
    BoundaryPointReport {
        center: Point::zeros(),
        scale: 1.0,
        best_nu: dirs[best],
        alpha,
        beta,
        fit_error,
        verdict: verdict(fit_error, alpha, beta, q, tau),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::reference_grid;
    use proptest::prelude::*;

    fn plane(dim: usize, nu: Point, a: f64) -> ScalarField {
        ScalarField::from_fn(reference_grid(dim), move |x| a * x.dot(&nu).max(0.0))
    }

    #[test]
    fn exact_half_plane_is_regular() {
        let nu = direction_grid(2)[37];
        let rep = halfplane_fit(&plane(2, nu, 0.5), &plane(2, nu, 0.5), 0.25);
        assert_eq!(rep.verdict, Verdict::Regular);
        assert!(rep.fit_error < 1e-12);
        assert!((rep.best_nu - nu).norm() < 1e-12);
        assert!((rep.alpha - 0.5).abs() < 1e-12 && (rep.beta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_planes_are_singular() {
        let g = reference_grid(2);
        let u = ScalarField::from_fn(g, |x| 0.5 * x[0].abs());
        let rep = halfplane_fit(&u, &u, 0.25);
        assert_eq!(rep.verdict, Verdict::Singular, "{}", rep.fit_error);
    }

    #[test]
    fn wrong_product_is_not_regular() {
        let nu = Point::new(1.0, 0.0, 0.0);
        let rep = halfplane_fit(&plane(2, nu, 1.0), &plane(2, nu, 1.0), 0.25);
        assert!(rep.fit_error < 1e-12);
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn sphere_directions_are_unit_and_balanced() {
        let d = direction_grid(3);
        assert_eq!(d.len(), 1026);
        assert!(d.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
        assert!(d.iter().sum::<Point>().norm() < 1e-9 * d.len() as f64 + 1.0);
    }

    #[test]
    fn three_dimensional_half_space() {
        let nu = direction_grid(3)[500];
        let rep = halfplane_fit(&plane(3, nu, 0.4), &plane(3, nu, 0.625), 0.25);
        assert_eq!(rep.verdict, Verdict::Regular);
        assert!((rep.best_nu - nu).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fit_is_rotation_equivariant(k in 0usize..256, shift in 1usize..256) {
            let dirs = direction_grid(2);
            let a = halfplane_fit(&plane(2, dirs[k], 0.5), &plane(2, dirs[k], 0.5), 0.25);
            let j = (k + shift) % 256;
            let b = halfplane_fit(&plane(2, dirs[j], 0.5), &plane(2, dirs[j], 0.5), 0.25);
            let angle = 2.0 * std::f64::consts::PI * shift as f64 / 256.0;
            let rot = nalgebra::Rotation3::from_axis_angle(&Point::z_axis(), angle);
            prop_assert!((rot * a.best_nu - b.best_nu).norm() < 1e-9);
            prop_assert!((a.alpha - b.alpha).abs() < 1e-9 && a.verdict == b.verdict);
        }
    }
}
