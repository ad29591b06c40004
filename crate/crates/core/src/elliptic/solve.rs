use crate::domain::{same_grid, DomainRep};
use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, Point};

use super::cg::{pcg_with, LinearOperator};
use super::multigrid::Multigrid;
use super::stencil::{require_unknowns, Stencil};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Default iteration cap `50 · max cells per axis`.
pub fn default_max_iter(grid: &Grid) -> usize {
    50 * grid.cells().iter().copied().max().unwrap_or(16)
}

/// `-Δu = f` in Ω with `u = boundary_data` on ∂Ω (zero when `None`).
#[derive(Debug, Clone, Copy)]
pub struct DirichletProblem<'a> {
    pub dom: &'a DomainRep,
    pub rhs: &'a ScalarField,
    pub boundary_data: Option<&'a ScalarField>,
    pub tol: f64,
    pub max_iter: usize,
}

impl<'a> DirichletProblem<'a> {
    pub fn new(dom: &'a DomainRep, rhs: &'a ScalarField) -> Self {
        Self {
            dom,
            rhs,
            boundary_data: None,
            tol: DEFAULT_TOL,
            max_iter: default_max_iter(dom.grid()),
        }
    }

    pub fn with_boundary_data(mut self, data: &'a ScalarField) -> Self {
        self.boundary_data = Some(data);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// How `div F` enters the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivScheme {
    /// Centered differences of the nodal flux; exact for affine fluxes.
    #[default]
    Centered,
    /// `-(F, Gψ)_W`: the transpose of the gradient used by the quadratic
    /// forms, so linearized states are exact derivatives of discrete energies.
    Weak,
}

/// `-Δw = div F + s` in Ω with `w = 0` on ∂Ω.
#[derive(Debug, Clone, Copy)]
pub struct DivFormProblem<'a> {
    pub dom: &'a DomainRep,
    pub flux: &'a VectorField,
    pub source: &'a ScalarField,
    pub tol: f64,
    pub scheme: DivScheme,
}

impl<'a> DivFormProblem<'a> {
    pub fn new(dom: &'a DomainRep, flux: &'a VectorField, source: &'a ScalarField) -> Self {
        Self { dom, flux, source, tol: DEFAULT_TOL, scheme: DivScheme::Centered }
    }
}

fn check_grids(dom: &DomainRep, others: &[&Grid]) -> Result<()> {
    for g in others {
        same_grid(dom.grid(), g)?;
    }
    Ok(())
}

pub fn solve_dirichlet(p: &DirichletProblem) -> Result<ScalarField> {
    let mut grids = vec![p.rhs.grid()];
    if let Some(d) = p.boundary_data {
        grids.push(d.grid());
    }
    check_grids(p.dom, &grids)?;
    let st = Stencil::new(p.dom);
    require_unknowns(&st)?;
    let f = st.gather(p.rhs);
    let b = st.rhs(&f, p.boundary_data);
    let out = pcg_with(&st, &Multigrid::new(&st), &b, None, p.tol, p.max_iter)?;
    log::debug!("dirichlet solve: {} iterations, residual {:.2e}", out.iterations, out.residual);
    Ok(st.scatter(&out.x, p.boundary_data))
}

/// Right-hand side of the weak divergence-form problem on the unknowns:
/// `-(F, G ψ)_W + (s, ψ)_h`, with `W` the nodal quadrature weights.
pub fn divform_rhs(st: &Stencil, flux_at: &[Point], source_at: &[f64]) -> Vec<f64> {
    let vol = st.grid().cell_volume();
    let wf: Vec<Point> =
        flux_at.iter().zip(st.weights()).map(|(f, w)| f * (w * vol)).collect();
    let gt = st.gradient_transpose(&wf);
    gt.iter().zip(source_at).map(|(a, s)| -a + vol * s).collect()
}

pub fn solve_divform(p: &DivFormProblem) -> Result<ScalarField> {
    check_grids(p.dom, &[p.flux.grid(), p.source.grid()])?;
    let st = Stencil::new(p.dom);
    require_unknowns(&st)?;
    let src = st.gather(p.source);
    let b = match p.scheme {
        DivScheme::Weak => {
            let flux: Vec<Point> = st.nodes().iter().map(|&n| p.flux.values()[n]).collect();
            divform_rhs(&st, &flux, &src)
        }
        DivScheme::Centered => {
            let g = st.grid();
            let fl = p.flux.values();
            let h = g.h();
            st.nodes()
                .iter()
                .zip(&src)
                .map(|(&n, s)| {
                    let div: f64 = (0..g.dim())
                        .map(|k| {
                            let o = g.node_stride(k);
                            (fl[n + o][k] - fl[n - o][k]) / (2.0 * h)
                        })
                        .sum();
                    g.cell_volume() * (s + div)
                })
                .collect()
        }
    };
    let out = st.solve(&b, None, p.tol)?;
    Ok(st.scatter(&out.x, None))
}

/// Relative discrete residual `‖A u - b‖ / ‖b‖` (absolute when `b = 0`).
pub fn residual_check(u: &ScalarField, p: &DirichletProblem) -> Result<f64> {
    check_grids(p.dom, &[u.grid(), p.rhs.grid()])?;
    let st = Stencil::new(p.dom);
    let x = st.gather(u);
    let f = st.gather(p.rhs);
    let b = st.rhs(&f, p.boundary_data);
    let mut ax = vec![0.0; x.len()];
    st.apply(&x, &mut ax);
    let r: f64 = ax.iter().zip(&b).map(|(a, bi)| (a - bi).powi(2)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if bn > 0.0 { r / bn } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn disk_center_value() {
        let g = Grid::centered(2, 1.25, 320).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let f = ScalarField::constant(g, 1.0);
        let u = solve_dirichlet(&DirichletProblem::new(&dom, &f)).unwrap();
        let c = u.at(g.nearest_node(&Point::zeros()));
        assert!((c - 0.25).abs() < 2e-3, "{c}");
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Grid::centered(2, 1.0, 32).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 0.7);
        let f = ScalarField::zeros(g);
        let u = solve_dirichlet(&DirichletProblem::new(&dom, &f)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn slab_two_point_problem() {
        // slab {0 < x < 1} spanning the box in y, with the exact profile as
        // data on the y faces
        let g = Grid::new(2, &[0.0, 0.0], &[64, 16], 1.0 / 64.0).unwrap();
        let dom = DomainRep::from_fn(g, |_| 1.0);
        let data = ScalarField::from_fn(g, |p| p[0] * (1.0 - p[0]));
        let f = ScalarField::constant(g, 2.0);
        let u = solve_dirichlet(&DirichletProblem::new(&dom, &f).with_boundary_data(&data))
            .unwrap();
        let err = u.zip_map(&data, |a, b| (a - b).abs()).unwrap().max_abs();
        assert!(err < 1e-8, "{err}");
        assert!((u.max() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn empty_domain_is_an_error() {
        let g = Grid::centered(2, 1.0, 16).unwrap();
        let dom = DomainRep::from_fn(g, |_| -1.0);
        let f = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solve_dirichlet(&DirichletProblem::new(&dom, &f)),
            Err(Error::EmptyDomain)
        ));
    }

    #[test]
    fn residual_of_zero_guess_is_one() {
        let g = Grid::centered(2, 1.0, 32).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 0.8);
        let f = ScalarField::constant(g, 1.0);
        let p = DirichletProblem::new(&dom, &f);
        assert!((residual_check(&ScalarField::zeros(g), &p).unwrap() - 1.0).abs() < 1e-14);
        let u = solve_dirichlet(&p).unwrap();
        assert!(residual_check(&u, &p).unwrap() <= p.tol);
    }

    #[test]
    fn divform_gradient_flux_recovers_potential() {
        let g = Grid::centered(2, 1.25, 128).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        // ψ = exp(1 - 1/(1 - q)) compactly supported in |x| < 0.6
        let rho = 0.6;
        let psi = |p: &Point| {
            let q = p.norm_squared() / (rho * rho);
            if q < 1.0 {
                (1.0 - 1.0 / (1.0 - q)).exp()
            } else {
                0.0
            }
        };
        let grad = |p: &Point| {
            let q = p.norm_squared() / (rho * rho);
            if q < 1.0 {
                let e = (1.0 - 1.0 / (1.0 - q)).exp();
                -e / (1.0 - q).powi(2) * 2.0 * p / (rho * rho)
            } else {
                Point::zeros()
            }
        };
        let flux = VectorField::from_fn(g, grad);
        let src = ScalarField::zeros(g);
        let w = solve_divform(&DivFormProblem::new(&dom, &flux, &src))
            .unwrap();
        let err = (0..g.node_count())
            .map(|i| (w.values()[i] + psi(&g.node_point(i))).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn divergence_free_flux_gives_zero() {
        let g = Grid::centered(2, 1.25, 64).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let flux = VectorField::from_fn(g, |_| Point::new(1.0, 0.0, 0.0));
        let src = ScalarField::zeros(g);
        let w = solve_divform(&DivFormProblem::new(&dom, &flux, &src))
            .unwrap();
        assert!(w.max_abs() < 1e-8, "{}", w.max_abs());
    }
}
