//! Ball and sphere quadrature on grid fields.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::domain::sub_point;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};
use crate::reduce::ordered_sum;

/// Angular nodes of the circle rule.
pub const CIRCLE_NODES: usize = 256;
/// Polar (Gauss–Legendre) and azimuthal node counts of the sphere rule.
pub const SPHERE_POLAR: usize = 16;
pub const SPHERE_AZIMUTHAL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRegion {
    pub center: Point,
    pub radius: f64,
}

impl BallRegion {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Fails unless the closed ball lies in the grid box.
    pub fn check_inside(&self, grid: &Grid) -> Result<()> {
        if grid.distance_to_faces(&self.center) + 1e-12 * grid.h() >= self.radius {
            Ok(())
        } else {
            Err(Error::BallOutsideGrid { center: self.center.into(), radius: self.radius })
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (p - self.center).norm() < self.radius
    }

    /// Measure of the ball in dimension `dim`.
    pub fn measure(&self, dim: usize) -> f64 {
        unit_ball_measure(dim) * self.radius.powi(dim as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    Volume,
    Surface,
}

/// `|B_1|` in dimension `dim`.
pub fn unit_ball_measure(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / dim as f64 * unit_ball_measure(dim - 2),
    }
}

/// `|∂B_1|` in dimension `dim`.
pub fn unit_sphere_measure(dim: usize) -> f64 {
    dim as f64 * unit_ball_measure(dim)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Fixed angular rule on the unit sphere: unit directions and weights that
/// sum to `|∂B_1|`.
pub fn sphere_rule(dim: usize) -> Vec<(Point, f64)> {
    if dim == 2 {
        let w = 2.0 * PI / CIRCLE_NODES as f64;
        (0..CIRCLE_NODES)
            .map(|k| {
                let t = (k as f64 + 0.5) * w;
                (Point::new(t.cos(), t.sin(), 0.0), w)
            })
            .collect()
    } else {
        let gl = gauss_legendre(SPHERE_POLAR);
        let dphi = 2.0 * PI / SPHERE_AZIMUTHAL as f64;
        let mut out = Vec::with_capacity(SPHERE_POLAR * SPHERE_AZIMUTHAL);
        for &(z, wz) in &gl {
            let s = (1.0 - z * z).sqrt();
            for k in 0..SPHERE_AZIMUTHAL {
                let a = (k as f64 + 0.5) * dphi;
                out.push((Point::new(s * a.cos(), s * a.sin(), z), wz * dphi));
            }
        }
        out
    }
}

/// Integral of a grid field over a ball (volume) or its boundary sphere
/// (surface). Volume mode uses cell midpoints with `4^d` sub-cell samples on
/// cells cut by the sphere; surface mode uses [`sphere_rule`] with
/// multilinear sampling.
pub fn ball_integral(field: &ScalarField, ball: &BallRegion, mode: BallMode) -> Result<f64> {
    let g = field.grid();
    ball.check_inside(g)?;
    Ok(match mode {
        BallMode::Surface => {
            let r = ball.radius;
            let scale = r.powi(g.dim() as i32 - 1);
            sphere_rule(g.dim())
                .iter()
                .map(|(w, wt)| wt * field.interpolate(&(ball.center + w * r)))
                .sum::<f64>()
                * scale
        }
        BallMode::Volume => volume_integral(g, ball, 4, |p| field.interpolate(p)),
    })
}

/// Cells whose closure meets the ball, with their lower-corner indices.
fn cells_near_ball(g: &Grid, ball: &BallRegion) -> Vec<[usize; 3]> {
    let (lo, _) = g.locate(&(ball.center - Point::repeat(ball.radius)));
    let (hi, _) = g.locate(&(ball.center + Point::repeat(ball.radius)));
    let mut out = Vec::new();
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Sub-cell midpoints (`sub^d` per cell) inside the ball.
pub fn ball_sample_points(g: &Grid, ball: &BallRegion, sub: usize) -> Vec<Point> {
    let total = sub.pow(g.dim() as u32);
    cells_near_ball(g, ball)
        .into_iter()
        .flat_map(|ijk| {
            let base = g.node_position(ijk);
            (0..total).map(move |s| base + sub_point(g.dim(), s, sub) * g.h())
        })
        .filter(|p| ball.contains(p))
        .collect()
}

/// Integral over a ball with `sub^d` midpoint samples in every cell near it;
/// for discontinuous integrands such as indicators of level sets.
pub fn sampled_ball_integral<F>(g: &Grid, ball: &BallRegion, sub: usize, f: F) -> f64
where
    F: Fn(&Point) -> f64 + Sync,
{
    let h = g.h();
    let total = sub.pow(g.dim() as u32);
    let w = g.cell_volume() / total as f64;
    let cells = cells_near_ball(g, ball);
    w * ordered_sum(cells.into_par_iter().map(|ijk| {
        let base = g.node_position(ijk);
        (0..total)
            .map(|s| base + sub_point(g.dim(), s, sub) * h)
            .filter(|p| ball.contains(p))
            .map(|p| f(&p))
            .sum::<f64>()
    }))
}

/// Midpoint-rule integral of a pointwise integrand over a ball, with
/// `sub^d` sub-cell samples on cells cut by the sphere.
pub fn volume_integral<F>(g: &Grid, ball: &BallRegion, sub: usize, f: F) -> f64
where
    F: Fn(&Point) -> f64 + Sync,
{
    let h = g.h();
    let half_diag = 0.5 * h * (g.dim() as f64).sqrt();
    let vol = g.cell_volume();
    ordered_sum((0..g.cell_count()).into_par_iter().map(|c| {
            let ijk = g.cell_ijk(c);
            let mid = g.cell_center(ijk);
            let dist = (mid - ball.center).norm();
            if dist > ball.radius + half_diag {
                0.0
            } else if dist < ball.radius - half_diag {
                vol * f(&mid)
            } else {
                let total = sub.pow(g.dim() as u32);
                let mut acc = 0.0;
                for s in 0..total {
                    let p = g.node_position(ijk) + sub_point(g.dim(), s, sub) * h;
                    if ball.contains(&p) {
                        acc += f(&p);
                    }
                }
                vol * acc / total as f64
            }
        }))
}
