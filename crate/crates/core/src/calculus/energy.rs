//! Discrete energies: `E_f`, the shape functional `F` and the one-phase `G`.

use rayon::prelude::*;

use crate::domain::{same_grid, sub_point, DomainRep};
use crate::elliptic::{default_max_iter, pcg_with, LinearOperator, Multigrid, Stencil, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};
use crate::quadrature::BallRegion;
use crate::reduce::ordered_sum;

use super::data::ProblemData;

/// Integration region for the quadrature energies.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Domain(&'a DomainRep),
    Ball(&'a BallRegion),
    Box,
}

impl Region<'_> {
    /// Membership of a cell: 0 empty, 1 full, anything else cut.
    fn cell_state(&self, g: &Grid, c: usize) -> f64 {
        match self {
            Region::Domain(d) => d.volfrac()[c],
            Region::Ball(b) => {
                let half_diag = 0.5 * g.h() * (g.dim() as f64).sqrt();
                let dist = (g.cell_center(g.cell_ijk(c)) - b.center).norm();
                if dist > b.radius + half_diag {
                    0.0
                } else if dist < b.radius - half_diag {
                    1.0
                } else {
                    0.5
                }
            }
            Region::Box => 1.0,
        }
    }

    fn contains(&self, p: &Point) -> bool {
        match self {
            Region::Domain(d) => d.phi().interpolate(p) > 0.0,
            Region::Ball(b) => b.contains(p),
            Region::Box => true,
        }
    }

    fn check(&self, g: &Grid) -> Result<()> {
        match self {
            Region::Domain(d) => same_grid(d.grid(), g),
            Region::Ball(b) => b.check_inside(g),
            Region::Box => Ok(()),
        }
    }
}

/// Sub-cell midpoint quadrature of `f(p, u(p), ∇u(p))` with the multilinear
/// interpolant of `u`: `2^d` samples in full cells, `4^d` in cut cells or
/// where `fine(cell)` asks for it.
fn cell_quadrature<F, R>(u: &ScalarField, region: &Region, fine: R, f: F) -> f64
where
    F: Fn(&Point, f64, &Point) -> f64 + Sync,
    R: Fn(usize) -> bool + Sync,
{
    let g = *u.grid();
    let h = g.h();
    let vol = g.cell_volume();
    ordered_sum((0..g.cell_count()).into_par_iter().map(|c| {
            let state = region.cell_state(&g, c);
            if state == 0.0 {
                return 0.0;
            }
            let cut = state != 1.0;
            let sub: usize = if cut || fine(c) { 4 } else { 2 };
            let total = sub.pow(g.dim() as u32);
            let base = g.node_position(g.cell_ijk(c));
            let mut acc = 0.0;
            for s in 0..total {
                let p = base + sub_point(g.dim(), s, sub) * h;
                if cut && !region.contains(&p) {
                    continue;
                }
                let (val, grad) = u.interpolate_with_gradient(&p);
                acc += f(&p, val, &grad);
            }
            vol * acc / total as f64
        }))
}

/// `E_f(u, A) = ½∫_A |∇u|² − ∫_A f u`.
pub fn energy_ef(u: &ScalarField, f: &super::data::ScalarData, region: Region) -> Result<f64> {
    region.check(u.grid())?;
    Ok(cell_quadrature(u, &region, |_| false, |p, val, grad| {
        0.5 * grad.norm_squared() - f.value(p) * val
    }))
}

/// `∫_A |∇u|² + Λ 𝟙_{u > 0}` for `u ≥ 0`.
pub fn energy_g(u: &ScalarField, lam: f64, region: Region) -> Result<f64> {
    region.check(u.grid())?;
    let floor = -1e-12 * u.max_abs().max(1.0);
    if u.min() < floor {
        return Err(Error::InvalidInput(format!("u must be non-negative, min {}", u.min())));
    }
    let g = *u.grid();
    let mixed = |c: usize| {
        let (corners, count) = g.cell_corners(g.cell_ijk(c));
        corners[..count].iter().any(|&n| u.values()[n] <= 0.0)
    };
    Ok(cell_quadrature(u, &region, mixed, |_, val, grad| {
        grad.norm_squared() + if val > 0.0 { lam } else { 0.0 }
    }))
}

/// Value of `F(Ω) = ∫(−g u_Ω) + ∫_Ω Q` and its symmetric form
/// `a(u, v) − (g, u) − (f, v) + ∫_Ω Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub value: f64,
    pub symmetric: f64,
}

/// States `u`, `v` on the unknowns of a domain stencil.
#[derive(Debug, Clone)]
pub struct StateSystem {
    pub dom: DomainRep,
    pub data: ProblemData,
    pub stencil: Stencil,
    /// `f` and `g` at the unknowns.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub tol: f64,
}

impl StateSystem {
    pub fn new(dom: &DomainRep, data: &ProblemData, tol: f64) -> Result<Self> {
        let st = Stencil::new(dom);
        if st.unknown_count() == 0 {
            return Err(Error::EmptyDomain);
        }
        let g = *dom.grid();
        let pts: Vec<Point> = st.nodes().iter().map(|&n| g.node_point(n)).collect();
        let fv: Vec<f64> = pts.par_iter().map(|p| data.f.value(p)).collect();
        let gv: Vec<f64> = pts.par_iter().map(|p| data.g.value(p)).collect();
        let vol = g.cell_volume();
        let max_iter = default_max_iter(&g);
        let mg = Multigrid::new(&st);
        let (bu, bv): (Vec<f64>, Vec<f64>) =
            (fv.iter().map(|x| vol * x).collect(), gv.iter().map(|x| vol * x).collect());
        let (u, v) = rayon::join(
            || pcg_with(&st, &mg, &bu, None, tol, max_iter),
            || pcg_with(&st, &mg, &bv, None, tol, max_iter),
        );
        Ok(Self {
            dom: dom.clone(),
            data: data.clone(),
            stencil: st,
            f: fv,
            g: gv,
            u: u?.x,
            v: v?.x,
            tol,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.dom.grid()
    }

    pub fn u_field(&self) -> ScalarField {
        self.stencil.scatter(&self.u, None)
    }

    pub fn v_field(&self) -> ScalarField {
        self.stencil.scatter(&self.v, None)
    }

    /// Points of the unknowns.
    pub fn points(&self) -> Vec<Point> {
        let g = *self.grid();
        self.stencil.nodes().iter().map(|&n| g.node_point(n)).collect()
    }

    /// `Σ_c volfrac_c q(x_c) h^d` over cells meeting Ω.
    pub fn cell_sum<F: Fn(&Point) -> f64 + Sync>(&self, q: F) -> f64 {
        let g = *self.grid();
        let vf = self.dom.volfrac();
        g.cell_volume()
            * ordered_sum(
                (0..g.cell_count())
                    .into_par_iter()
                    .filter(|&c| vf[c] > 0.0)
                    .map(|c| vf[c] * q(&g.cell_center(g.cell_ijk(c)))),
            )
    }

    pub fn q_term(&self) -> f64 {
        self.cell_sum(|p| self.data.q.value(p))
    }

    pub fn energy(&self) -> Energy {
        let st = &self.stencil;
        let gu = st.mass(&self.g, &self.u);
        let fv = st.mass(&self.f, &self.v);
        let q = self.q_term();
        let auv = st.form(&self.u, &self.v);
        let value = -gu + q;
        let symmetric = auv - gu - fv + q;
        let scale = gu.abs() + fv.abs() + auv.abs();
        if (value - symmetric).abs() > 10.0 * self.tol * scale.max(f64::MIN_POSITIVE) {
            log::warn!(
                "energy forms disagree: {value} vs {symmetric} (tol {:.1e})",
                self.tol
            );
        }
        Energy { value, symmetric }
    }
}

/// `F(Ω)` with both forms; the empty set has energy zero.
pub fn energy_f(dom: &DomainRep, data: &ProblemData) -> Result<Energy> {
    match StateSystem::new(dom, data, DEFAULT_TOL) {
        Ok(sys) => Ok(sys.energy()),
        Err(Error::EmptyDomain) => Ok(Energy { value: 0.0, symmetric: 0.0 }),
        Err(e) => Err(e),
    }
}

/// Lagrangian `a(u, v) − (g, u) − (f, v)` for an arbitrary symmetric operator.
pub(crate) fn lagrangian<A: LinearOperator>(
    op: &A,
    vol: f64,
    (u, v): (&[f64], &[f64]),
    (f, g): (&[f64], &[f64]),
) -> f64 {
    let mut au = vec![0.0; u.len()];
    op.apply(u, &mut au);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    dot(&au, v) - vol * dot(g, u) - vol * dot(f, v)
}
