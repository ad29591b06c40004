//! Node classification and the ghost-value Dirichlet stencil on `Ω = {φ > 0}`.
//!
//! Every unknown node has `2d` legs. A leg either reaches another unknown
//! node one spacing away, or ends on a wall: a Dirichlet point at distance
//! `θh` (`θ = 1` for box-face nodes, the linear zero crossing of φ clamped
//! below by [`THETA_MIN`] otherwise). The discrete form is
//!
//! `a(u, w) = h^{d-2} Σ_i w_i Σ_legs (u_i - u_leg) / θ_leg`
//!
//! which only touches the diagonal at cut edges and stays symmetric.

use rayon::prelude::*;

use crate::domain::DomainRep;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};

use super::cg::{pcg_with, CgOutcome, LinearOperator};
use super::multigrid::Multigrid;
use super::solve::default_max_iter;

/// Smallest wall distance, as a fraction of `h`.
pub const THETA_MIN: f64 = 1e-3;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Interior node of Ω carrying an unknown.
    Unknown(u32),
    /// Node of Ω on a box face; its value is prescribed.
    Fixed,
    /// Node with `φ ≤ 0`.
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leg {
    Node(u32),
    /// Dirichlet point at distance `theta * h`; its value interpolates the
    /// boundary data between the unknown node and node `far`.
    Wall { theta: f64, far: u32 },
}

#[derive(Debug, Clone)]
pub struct Stencil {
    grid: Grid,
    class: Vec<NodeClass>,
    nodes: Vec<usize>,
    legs: Vec<[Leg; 6]>,
    diag: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
    phi: ScalarField,
}

impl Stencil {
    pub fn new(dom: &DomainRep) -> Self {
        let g = *dom.grid();
        let dim = g.dim();
        let dims = g.node_dims();
        let phi = dom.phi().values();

        let mut class = vec![NodeClass::Outside; g.node_count()];
        let mut nodes = Vec::new();
        for i in 0..g.node_count() {
            if phi[i] <= 0.0 {
                continue;
            }
            let ijk = g.node_ijk(i);
            if g.on_box_face(ijk) {
                class[i] = NodeClass::Fixed;
                continue;
            }
            class[i] = NodeClass::Unknown(nodes.len() as u32);
            nodes.push(i);
        }

        let legs: Vec<[Leg; 6]> = nodes
            .par_iter()
            .map(|&i| {
                let mut out = [Leg::Node(NONE); 6];
                for k in 0..dim {
                    let s = g.node_stride(k);
                    for (side, j) in [i - s, i + s].into_iter().enumerate() {
                        debug_assert!(g.node_ijk(j)[k] < dims[k]);
                        out[2 * k + side] = match class[j] {
                            NodeClass::Unknown(id) => Leg::Node(id),
                            NodeClass::Fixed => Leg::Wall { theta: 1.0, far: j as u32 },
                            NodeClass::Outside => {
                                Leg::Wall { theta: dom.crossing(i, j).max(THETA_MIN), far: j as u32 }
                            }
                        };
                    }
                }
                out
            })
            .collect();

        let scale = g.h().powi(dim as i32 - 2);
        let diag = legs
            .par_iter()
            .map(|l| {
                scale
                    * l[..2 * dim]
                        .iter()
                        .map(|leg| match leg {
                            Leg::Node(_) => 1.0,
                            Leg::Wall { theta, .. } => 1.0 / theta,
                        })
                        .sum::<f64>()
            })
            .collect();

        let mut weights = vec![0.0; nodes.len()];
        let vf = dom.volfrac();
        for c in 0..g.cell_count() {
            if vf[c] == 0.0 {
                continue;
            }
            let (corners, count) = g.cell_corners(g.cell_ijk(c));
            let ids: Vec<u32> = corners[..count]
                .iter()
                .filter_map(|&n| match class[n] {
                    NodeClass::Unknown(id) => Some(id),
                    _ => None,
                })
                .collect();
            if ids.is_empty() {
                continue;
            }
            let share = vf[c] / ids.len() as f64;
            for id in ids {
                weights[id as usize] += share;
            }
        }

        Self { grid: g, class, nodes, legs, diag, weights, scale, phi: dom.phi().clone() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn class(&self) -> &[NodeClass] {
        &self.class
    }

    /// Grid node of each unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn legs(&self) -> &[[Leg; 6]] {
        &self.legs
    }

    pub fn unknown_count(&self) -> usize {
        self.nodes.len()
    }

    /// Level set the stencil was built from.
    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    /// Solves `A x = b` by multigrid-preconditioned CG.
    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<CgOutcome> {
        pcg_with(self, &Multigrid::new(self), b, x0, tol, default_max_iter(&self.grid))
    }

    /// Off-diagonal magnitude `h^{d-2}` of node legs.
    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Quadrature weight of each unknown: its share of the volume fractions
    /// of the cells around it, in units of `h^d`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Interface value on a wall leg of unknown `id`.
    #[inline]
    pub fn wall_value(&self, id: usize, theta: f64, far: u32, data: Option<&[f64]>) -> f64 {
        match data {
            None => 0.0,
            Some(g) => (1.0 - theta) * g[self.nodes[id]] + theta * g[far as usize],
        }
    }

    /// Restriction of a grid field to the unknowns.
    pub fn gather(&self, field: &ScalarField) -> Vec<f64> {
        self.nodes.iter().map(|&n| field.values()[n]).collect()
    }

    /// Grid field with `x` on the unknowns, the boundary data on fixed nodes
    /// and zero outside.
    pub fn scatter(&self, x: &[f64], data: Option<&ScalarField>) -> ScalarField {
        let mut v = vec![0.0; self.grid.node_count()];
        for (n, c) in self.class.iter().enumerate() {
            if let (NodeClass::Fixed, Some(d)) = (c, data) {
                v[n] = d.values()[n];
            }
        }
        for (id, &n) in self.nodes.iter().enumerate() {
            v[n] = x[id];
        }
        ScalarField::from_vec_unchecked(self.grid, v)
    }

    /// Right-hand side `h^d f_i + h^{d-2} Σ_walls g_Γ / θ`.
    pub fn rhs(&self, f: &[f64], data: Option<&ScalarField>) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        let dim = self.grid.dim();
        let data = data.map(|d| d.values());
        (0..self.nodes.len())
            .into_par_iter()
            .map(|id| {
                let mut b = vol * f[id];
                for leg in &self.legs[id][..2 * dim] {
                    if let Leg::Wall { theta, far } = *leg {
                        b += self.scale * self.wall_value(id, theta, far, data) / theta;
                    }
                }
                b
            })
            .collect()
    }

    /// Nodal gradient at every unknown from fits through the two legs of each
    /// axis (see [`axis_coeffs`]). Wall legs carry the boundary data (zero if `None`).
    pub fn gradient(&self, x: &[f64], data: Option<&ScalarField>) -> Vec<Point> {
        let h = self.grid.h();
        let dim = self.grid.dim();
        let data = data.map(|d| d.values());
        (0..self.nodes.len())
            .into_par_iter()
            .map(|id| {
                let mut gr = Point::zeros();
                for k in 0..dim {
                    let (a, um) = self.leg_point(id, 2 * k, x, data);
                    let (b, up) = self.leg_point(id, 2 * k + 1, x, data);
                    let (cm, c0, cp) = axis_coeffs(a, b, h);
                    gr[k] = cm * um + c0 * x[id] + cp * up;
                }
                gr
            })
            .collect()
    }

    /// Transpose of the linear part of [`Stencil::gradient`]: returns
    /// `Σ_i ⟨y_i, ∂(G x)_i / ∂x⟩` for every unknown.
    pub fn gradient_transpose(&self, y: &[Point]) -> Vec<f64> {
        let h = self.grid.h();
        let dim = self.grid.dim();
        let mut out = vec![0.0; self.nodes.len()];
        for id in 0..self.nodes.len() {
            for k in 0..dim {
                let (a, jm) = self.leg_target(id, 2 * k);
                let (b, jp) = self.leg_target(id, 2 * k + 1);
                let (cm, c0, cp) = axis_coeffs(a, b, h);
                let yk = y[id][k];
                out[id] += c0 * yk;
                if let Some(j) = jm {
                    out[j] += cm * yk;
                }
                if let Some(j) = jp {
                    out[j] += cp * yk;
                }
            }
        }
        out
    }

    fn leg_point(&self, id: usize, slot: usize, x: &[f64], data: Option<&[f64]>) -> (f64, f64) {
        match self.legs[id][slot] {
            Leg::Node(j) => (1.0, x[j as usize]),
            Leg::Wall { theta, far } => (theta, self.wall_value(id, theta, far, data)),
        }
    }

    fn leg_target(&self, id: usize, slot: usize) -> (f64, Option<usize>) {
        match self.legs[id][slot] {
            Leg::Node(j) => (1.0, Some(j as usize)),
            Leg::Wall { theta, .. } => (theta, None),
        }
    }

    /// Discrete Dirichlet form `a(x, y)` of the linear part.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        ax.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Lumped mass pairing `h^d Σ x_i y_i`.
    pub fn mass(&self, x: &[f64], y: &[f64]) -> f64 {
        self.grid.cell_volume() * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Wall legs shorter than this fraction of `h` drop the centre node from
/// the gradient fit, which keeps `G` bounded by `O(1/h)`.
pub const SHORT_LEG: f64 = 0.5;

/// Derivative weights on `(u-, u0, u+)` for legs of length `a h`, `b h`:
/// the quadratic fit, or the chord between the leg ends when a leg is short.
#[inline]
pub fn axis_coeffs(a: f64, b: f64, h: f64) -> (f64, f64, f64) {
    if a.min(b) < SHORT_LEG {
        let s = 1.0 / ((a + b) * h);
        (-s, 0.0, s)
    } else {
        quad_coeffs(a * h, b * h)
    }
}

/// Coefficients of the derivative at 0 of the quadratic through
/// `(-a, u-)`, `(0, u0)`, `(b, u+)`.
#[inline]
pub fn quad_coeffs(a: f64, b: f64) -> (f64, f64, f64) {
    (-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b)))
}

impl LinearOperator for Stencil {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dim = self.grid.dim();
        y.par_iter_mut().enumerate().for_each(|(id, yi)| {
            let mut acc = self.diag[id] * x[id];
            for leg in &self.legs[id][..2 * dim] {
                if let Leg::Node(j) = *leg {
                    acc -= self.scale * x[j as usize];
                }
            }
            *yi = acc;
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}

/// Fails with `EmptyDomain` when the stencil has no unknowns.
pub(crate) fn require_unknowns(st: &Stencil) -> Result<()> {
    if st.unknown_count() == 0 {
        Err(Error::EmptyDomain)
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_coeffs_reduce_to_central_difference() {
        let (a, b, c) = quad_coeffs(0.1, 0.1);
        assert!((a + 5.0).abs() < 1e-12 && b.abs() < 1e-12 && (c - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quad_coeffs_exact_on_quadratics() {
        let (a, b) = (0.3, 0.07);
        let (cm, c0, cp) = quad_coeffs(a, b);
        let f = |x: f64| 1.0 + 2.0 * x - 5.0 * x * x;
        assert!((cm * f(-a) + c0 * f(0.0) + cp * f(b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn operator_is_symmetric() {
        let g = Grid::centered(2, 1.2, 32).unwrap();
        let dom = DomainRep::ball(g, Point::new(0.05, -0.02, 0.0), 0.93);
        let st = Stencil::new(&dom);
        let n = st.unknown_count();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64).cos()).collect();
        assert!((st.form(&x, &y) - st.form(&y, &x)).abs() < 1e-10);
    }

    #[test]
    fn gradient_transpose_is_adjoint() {
        let g = Grid::centered(2, 1.2, 32).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 0.91);
        let st = Stencil::new(&dom);
        let n = st.unknown_count();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<Point> =
            (0..n).map(|i| Point::new((i as f64).cos(), (i as f64 * 0.5).sin(), 0.0)).collect();
        let gx = st.gradient(&x, None);
        let lhs: f64 = gx.iter().zip(&y).map(|(a, b)| a.dot(b)).sum();
        let gty = st.gradient_transpose(&y);
        let rhs: f64 = gty.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn weights_sum_to_volume_interior() {
        let g = Grid::centered(2, 1.5, 64).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let st = Stencil::new(&dom);
        let total: f64 = st.weights().iter().sum::<f64>() * g.cell_volume();
        assert!((total - dom.volume()).abs() < 4.0 * g.h());
    }

    #[test]
    fn near_crossings_clamp_theta() {
        let g = Grid::new(2, &[0.0, 0.0], &[16, 16], 1.0 / 16.0).unwrap();
        // interface 1e-5 h to the right of the node column i = 8
        let x0 = 0.5 + 1e-5 / 16.0;
        let dom = DomainRep::from_fn(g, |p| x0 - p[0]);
        let st = Stencil::new(&dom);
        let NodeClass::Unknown(id) = st.class()[g.node_index([8, 5, 0])] else { panic!() };
        assert!(st.legs()[id as usize]
            .iter()
            .any(|l| matches!(l, Leg::Wall { theta, .. } if *theta == THETA_MIN)));
    }
}
