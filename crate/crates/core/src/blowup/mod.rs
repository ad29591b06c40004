//! Blow-up analysis of free boundary points: rescalings, Weiss energies,
//! half-plane fits and regular/singular classification.

mod classify;
mod fit;
mod weiss;

pub use classify::{boundary_points, classify_boundary, dyadic_ladder, Classification, LadderRow, PointClassification};
pub use fit::{direction_grid, halfplane_fit, halfplane_fit_with, verdict, BoundaryPointReport, Verdict, TAU};
pub use weiss::{weiss_energy, weiss_trace, WeissTrace};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};
use crate::quadrature::BallRegion;

/// Half-width of the reference box `[-R, R]^d` of rescaled fields.
pub const R_TARGET: f64 = 1.0;

/// Smallest admissible scale, in cells of the source grid.
pub const MIN_SCALE_CELLS: f64 = 4.0;

/// Reference grid over `[-R_TARGET, R_TARGET]^d`: 64 cells per axis in 2D, 32 in 3D.
pub fn reference_grid(dim: usize) -> Grid {
    Grid::centered(dim, R_TARGET, if dim == 2 { 64 } else { 32 }).expect("valid reference grid")
}

/// Fails unless `B_{r·R}(x0)` lies in the grid box and `r ≥ 4h`.
pub(crate) fn check_scale(g: &Grid, x0: &Point, r: f64, reach: f64) -> Result<()> {
    let floor = MIN_SCALE_CELLS * g.h();
    if !(r >= floor * (1.0 - 1e-12)) {
        return Err(Error::ScaleBelowGrid { r, floor });
    }
    BallRegion::new(*x0, r * reach)?.check_inside(g)
}

/// `u_{x0,r}(x) = u(x0 + r x)/r` on [`reference_grid`].
pub fn rescale(u: &ScalarField, x0: &Point, r: f64) -> Result<ScalarField> {
    rescale_on(u, x0, r, &reference_grid(u.grid().dim()))
}

/// `u_{x0,r}` sampled on `reference` (a box centred at the origin) by
/// multilinear interpolation. Reference nodes outside `B_R` that fall
/// outside the source box take the clamped interpolant.
pub fn rescale_on(u: &ScalarField, x0: &Point, r: f64, reference: &Grid) -> Result<ScalarField> {
    let g = u.grid();
    if reference.dim() != g.dim() {
        return Err(Error::GridMismatch);
    }
    let reach = 0.5 * reference.extent()[0];
    check_scale(g, x0, r, reach)?;
    Ok(ScalarField::from_fn(*reference, |x| u.interpolate(&(x0 + x * r)) / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_function_is_invariant() {
        let g = Grid::centered(2, 2.0, 128).unwrap();
        let u = ScalarField::from_fn(g, |p| p[0]);
        let x0 = Point::new(0.0, 0.37, 0.0);
        let ur = rescale(&u, &x0, 0.5).unwrap();
        for (i, v) in ur.values().iter().enumerate() {
            assert!((v - ur.grid().node_point(i)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_scales_by_r() {
        let g = Grid::centered(2, 2.0, 256).unwrap();
        let u = ScalarField::from_fn(g, |p| p.norm_squared());
        let ur = rescale(&u, &Point::zeros(), 0.5).unwrap();
        let worst = ur
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - 0.5 * ur.grid().node_point(i).norm_squared()).abs())
            .fold(0.0, f64::max);
        // Interpolation error of |x|² is h²/4 per axis, divided by r.
        assert!(worst < g.h() * g.h(), "{worst}");
    }

    #[test]
    fn small_and_escaping_scales_are_rejected() {
        let g = Grid::centered(2, 1.0, 64).unwrap();
        let u = ScalarField::zeros(g);
        assert!(matches!(rescale(&u, &Point::zeros(), 2.0 * g.h()), Err(Error::ScaleBelowGrid { .. })));
        assert!(matches!(rescale(&u, &Point::new(0.8, 0.0, 0.0), 0.5), Err(Error::BallOutsideGrid { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn rescaling_composes(r in 0.3..0.8f64, s in 0.3..0.9f64, a in -0.2..0.2f64) {
            let g = Grid::centered(2, 2.0, 128).unwrap();
            let u = ScalarField::from_fn(g, |p| (1.5 * p[0]).sin() + p[1] * p[0]);
            let x0 = Point::new(a, 0.1, 0.0);
            let twice = rescale(&rescale(&u, &x0, r).unwrap(), &Point::zeros(), s).unwrap();
            let once = rescale(&u, &x0, r * s).unwrap();
            let worst = twice.values().iter().zip(once.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            // Two interpolations at spacings h/(rs) and h_ref/s on O(1) curvature.
            let bound = 4.0 * (g.h() / (r * s) + reference_grid(2).h() / s).powi(2) / (r * s) + 1e-12;
            prop_assert!(worst <= bound.max(4.0 * g.h()), "{} > {}", worst, bound);
        }
    }
}
