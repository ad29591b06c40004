//! First and second variations of `F` and of the one-phase functional `G`.
//!
//! All discrete variations are exact derivatives of the discrete energies
//! pulled back to the fixed grid: with `A_t = J⁻¹J⁻ᵀ det J`, `J = DΦ_t`,
//! `F_h(t) = a(u_t, v_t) + b_{A_t − I}(u_t, v_t) − (g_t, u_t) − (f_t, v_t) + Q_t`
//! where `b_N(u, w) = h^d Σ_i w_i (Gu)_i·N_i (Gw)_i`.

use std::io::Write;
use std::path::Path;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::domain::DomainRep;
use crate::elliptic::{
    boundary_gradient_norms, crossings, default_max_iter, divform_rhs, pcg_with, Multigrid,
    surface_sum, LinearOperator, NodeClass, Stencil,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Point;
use crate::reduce::ordered_sum;

use super::data::{eye, ProblemData, ScalarData};
use super::energy::{energy_f, lagrangian, StateSystem};
use super::flow::{advect_domain, FlowMap};
use super::vfield::{Jet, VectorFieldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Second-order source formula. `Corrected` is the `t²` coefficient of
/// `w(Φ_t) det DΦ_t`; `AsPrinted` drops its `½∇w·(Dξ)ξ` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondOrderForm {
    #[default]
    Corrected,
    AsPrinted,
}

/// `δA` or `δ²A` from a jet of ξ.
pub fn delta_a_jet(jet: &Jet, dim: usize, order: Order) -> Matrix3<f64> {
    let m = jet.jac;
    let mt = m.transpose();
    let div = jet.div();
    let id = eye(dim);
    match order {
        Order::First => -m - mt + id * div,
        Order::Second => {
            let along = jet.jac_along();
            m * mt + 0.5 * (m * m) + 0.5 * (mt * mt) - 0.5 * (along + along.transpose())
                - (m + mt) * div
                + id * (0.5 * (div * div + jet.value.dot(&jet.grad_div())))
        }
    }
}

pub fn delta_a(spec: &dyn VectorFieldSpec, x: &Point, order: Order) -> Matrix3<f64> {
    delta_a_jet(&spec.jet(x), spec.dim(), order)
}

/// `δw` or `δ²w` of a density `w` from a jet of ξ.
pub fn delta_f_jet(
    w: &ScalarData,
    jet: &Jet,
    x: &Point,
    dim: usize,
    order: Order,
    form: SecondOrderForm,
) -> Result<f64> {
    if jet.value == Point::zeros() && jet.jac == Matrix3::zeros() {
        return Ok(0.0);
    }
    let val = w.value(x);
    let grad = w.gradient(x)?;
    let div = jet.div();
    let xi = jet.value;
    Ok(match order {
        Order::First => grad.dot(&xi) + val * div,
        Order::Second => {
            let hess = w.hessian(x, dim)?;
            let transport = match form {
                SecondOrderForm::Corrected => 0.5 * grad.dot(&(jet.jac * xi)),
                SecondOrderForm::AsPrinted => 0.0,
            };
            0.5 * xi.dot(&(hess * xi))
                + transport
                + 0.5 * val * (div * div + xi.dot(&jet.grad_div()))
                + grad.dot(&xi) * div
        }
    })
}

pub fn delta_f(
    w: &ScalarData,
    spec: &dyn VectorFieldSpec,
    x: &Point,
    order: Order,
    form: SecondOrderForm,
) -> Result<f64> {
    delta_f_jet(w, &spec.jet(x), x, spec.dim(), order, form)
}

/// `b_N(x, y) = h^d Σ_i w_i (Gx)_i · N_i (Gy)_i`.
pub(crate) fn bform(st: &Stencil, n: &[Matrix3<f64>], gx: &[Point], gy: &[Point]) -> f64 {
    let vol = st.grid().cell_volume();
    vol * ordered_sum((0..gx.len()).into_par_iter().map(|i| st.weights()[i] * gx[i].dot(&(n[i] * gy[i]))))
}

fn mat_vec(n: &[Matrix3<f64>], g: &[Point]) -> Vec<Point> {
    n.iter().zip(g).map(|(m, x)| m * x).collect()
}

/// Jets of ξ and the matrices `δA`, `δ²A` at every unknown.
pub(crate) struct NodalVariation {
    pub jets: Vec<Jet>,
    pub da: Vec<Matrix3<f64>>,
    pub d2a: Vec<Matrix3<f64>>,
}

impl NodalVariation {
    pub fn new(st: &Stencil, spec: &dyn VectorFieldSpec) -> Self {
        let g = *st.grid();
        let dim = g.dim();
        let jets: Vec<Jet> = st.nodes().par_iter().map(|&n| spec.jet(&g.node_point(n))).collect();
        let da = jets.iter().map(|j| delta_a_jet(j, dim, Order::First)).collect();
        let d2a = jets.iter().map(|j| delta_a_jet(j, dim, Order::Second)).collect();
        Self { jets, da, d2a }
    }

    fn source(
        &self,
        st: &Stencil,
        w: &ScalarData,
        order: Order,
        form: SecondOrderForm,
    ) -> Result<Vec<f64>> {
        let g = *st.grid();
        st.nodes()
            .par_iter()
            .zip(&self.jets)
            .map(|(&n, jet)| delta_f_jet(w, jet, &g.node_point(n), g.dim(), order, form))
            .collect()
    }
}

/// Solves `a(x, ψ) = −(F, Gψ)_W + (s, ψ)` on the unknowns.
fn solve_weak(st: &Stencil, flux: &[Point], src: &[f64], tol: f64) -> Result<Vec<f64>> {
    let b = divform_rhs(st, flux, src);
    Ok(st.solve(&b, None, tol)?.x)
}

/// Linearized state `δu` (first order) or `δ²u` (second order) of
/// `−Δu = w`, `u = 0` on ∂Ω, along ξ.
pub fn linearized_state(
    u: &ScalarField,
    dom: &DomainRep,
    w: &ScalarData,
    spec: &dyn VectorFieldSpec,
    order: Order,
) -> Result<ScalarField> {
    crate::domain::same_grid(u.grid(), dom.grid())?;
    let st = Stencil::new(dom);
    if st.unknown_count() == 0 {
        return Err(Error::EmptyDomain);
    }
    let tol = 1e-12;
    let nv = NodalVariation::new(&st, spec);
    let gu = st.gradient(&st.gather(u), None);
    let src1 = nv.source(&st, w, Order::First, SecondOrderForm::Corrected)?;
    let du = solve_weak(&st, &mat_vec(&nv.da, &gu), &src1, tol)?;
    let x = match order {
        Order::First => du,
        Order::Second => {
            let gdu = st.gradient(&du, None);
            let flux: Vec<Point> = (0..gu.len()).map(|i| nv.da[i] * gdu[i] + nv.d2a[i] * gu[i]).collect();
            let src2 = nv.source(&st, w, Order::Second, SecondOrderForm::Corrected)?;
            solve_weak(&st, &flux, &src2, tol)?
        }
    };
    Ok(st.scatter(&x, None))
}

/// `δF` by volume quadrature and by the boundary integral
/// `∫_{∂Ω} (ν·ξ)(Q − |∇u||∇v|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstVariation {
    pub volume: f64,
    pub surface: f64,
}

impl StateSystem {
    fn variation_cell_sum(&self, spec: &dyn VectorFieldSpec, w: &ScalarData, order: Order) -> Result<f64> {
        self.variation_cell_sum_form(spec, w, order, SecondOrderForm::Corrected)
    }

    fn variation_cell_sum_form(
        &self,
        spec: &dyn VectorFieldSpec,
        w: &ScalarData,
        order: Order,
        form: SecondOrderForm,
    ) -> Result<f64> {
        let g = *self.grid();
        let vf = self.dom.volfrac();
        let vals: Result<Vec<f64>> = (0..g.cell_count())
            .into_par_iter()
            .filter(|&c| vf[c] > 0.0)
            .map(|c| {
                let x = g.cell_center(g.cell_ijk(c));
                Ok(vf[c] * delta_f_jet(w, &spec.jet(&x), &x, g.dim(), order, form)?)
            })
            .collect();
        Ok(g.cell_volume() * vals?.iter().sum::<f64>())
    }

    /// Volume form of `δF` for precomputed nodal data.
    fn first_value(&self, nv: &NodalVariation, spec: &dyn VectorFieldSpec, gu: &[Point], gv: &[Point]) -> Result<f64> {
        let st = &self.stencil;
        let df = nv.source(st, &self.data.f, Order::First, SecondOrderForm::Corrected)?;
        let dg = nv.source(st, &self.data.g, Order::First, SecondOrderForm::Corrected)?;
        let dq = self.variation_cell_sum(spec, &self.data.q, Order::First)?;
        Ok(bform(st, &nv.da, gu, gv) - st.mass(&dg, &self.u) - st.mass(&df, &self.v) + dq)
    }

    /// `δF(Ω)[ξ]` in volume and surface form.
    pub fn first_variation(&self, spec: &dyn VectorFieldSpec) -> Result<FirstVariation> {
        let nv = NodalVariation::new(&self.stencil, spec);
        let gu = self.stencil.gradient(&self.u, None);
        let gv = self.stencil.gradient(&self.v, None);
        let volume = self.first_value(&nv, spec, &gu, &gv)?;
        Ok(FirstVariation { volume, surface: self.surface_first_variation(spec) })
    }

    /// `Σ_crossings h^{d−1} (ν·ξ)(Q − |∇u||∇v|)|ν_k|`.
    pub fn surface_first_variation(&self, spec: &dyn VectorFieldSpec) -> f64 {
        let g = *self.grid();
        let cs = crossings(&self.dom);
        let (uf, vf) = (self.u_field(), self.v_field());
        let gu = boundary_gradient_norms(&cs, &uf, &self.stencil);
        let gv = boundary_gradient_norms(&cs, &vf, &self.stencil);
        let terms = cs.iter().enumerate().map(|(i, c)| {
            let nk = c.normal[c.axis].abs();
            if nk < 1e-3 {
                return 0.0;
            }
            let xi = spec.value(&c.point);
            c.normal.dot(&xi) * (self.data.q.value(&c.point) - gu[i] * gv[i]) * nk
        });
        surface_sum(g.h(), g.dim(), terms)
    }

    /// `δ²F` with the options' source form; returns `(δ²F, δu, δv, δF)`.
    fn second_order(
        &self,
        spec: &dyn VectorFieldSpec,
        form: SecondOrderForm,
    ) -> Result<(f64, Vec<f64>, Vec<f64>, f64)> {
        let nv = NodalVariation::new(&self.stencil, spec);
        let st = &self.stencil;
        let (first, du, dv) = self.first_order_with(&nv, spec)?;
        let gu = st.gradient(&self.u, None);
        let gv = st.gradient(&self.v, None);
        let d2f = nv.source(st, &self.data.f, Order::Second, form)?;
        let d2g = nv.source(st, &self.data.g, Order::Second, form)?;
        let d2q = self.variation_cell_sum_form(spec, &self.data.q, Order::Second, form)?;
        let second = bform(st, &nv.d2a, &gu, &gv) - st.form(&du, &dv) - st.mass(&d2g, &self.u)
            - st.mass(&d2f, &self.v)
            + d2q;
        Ok((second, du, dv, first))
    }

    fn first_order_with(&self, nv: &NodalVariation, spec: &dyn VectorFieldSpec) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let st = &self.stencil;
        let gu = st.gradient(&self.u, None);
        let gv = st.gradient(&self.v, None);
        let value = self.first_value(nv, spec, &gu, &gv)?;
        let df = nv.source(st, &self.data.f, Order::First, SecondOrderForm::Corrected)?;
        let dg = nv.source(st, &self.data.g, Order::First, SecondOrderForm::Corrected)?;
        let (du, dv) = rayon::join(
            || solve_weak(st, &mat_vec(&nv.da, &gu), &df, self.tol),
            || solve_weak(st, &mat_vec(&nv.da, &gv), &dg, self.tol),
        );
        Ok((value, du?, dv?))
    }

    /// Discrete energy of `Φ_t(Ω)` pulled back to the fixed grid.
    pub fn pullback_energy(&self, spec: &dyn VectorFieldSpec, t: f64) -> Result<f64> {
        let st = &self.stencil;
        let g = *self.grid();
        let dim = g.dim();
        let flow = FlowMap::new(spec);
        let pulled = |x: &Point| -> Result<(Point, f64, Matrix3<f64>)> {
            let (y, j) = flow.map_with_jacobian(x, t);
            let det = j.determinant();
            let inv = j.try_inverse().ok_or_else(|| {
                Error::InvalidInput(format!("flow map singular at t = {t}"))
            })?;
            let mut n = inv * inv.transpose() * det - Matrix3::identity();
            for k in dim..3 {
                n.set_row(k, &nalgebra::RowVector3::zeros());
                n.set_column(k, &nalgebra::Vector3::zeros());
            }
            Ok((y, det, n))
        };
        let nodal: Result<Vec<(Point, f64, Matrix3<f64>)>> =
            st.nodes().par_iter().map(|&n| pulled(&g.node_point(n))).collect();
        let nodal = nodal?;
        let ft: Vec<f64> = nodal.iter().map(|(y, det, _)| self.data.f.value(y) * det).collect();
        let gt: Vec<f64> = nodal.iter().map(|(y, det, _)| self.data.g.value(y) * det).collect();
        let n: Vec<Matrix3<f64>> = nodal.into_iter().map(|(_, _, n)| n).collect();
        let op = PerturbedOp { st, n: &n };
        let mg = Multigrid::new(st);
        let vol = g.cell_volume();
        let max_iter = default_max_iter(&g);
        let bu: Vec<f64> = ft.iter().map(|x| vol * x).collect();
        let bv: Vec<f64> = gt.iter().map(|x| vol * x).collect();
        let (ut, vt) = rayon::join(
            || pcg_with(&op, &mg, &bu, Some(&self.u), self.tol, max_iter),
            || pcg_with(&op, &mg, &bv, Some(&self.v), self.tol, max_iter),
        );
        let (ut, vt) = (ut?.x, vt?.x);
        let vf = self.dom.volfrac();
        let q = ordered_sum((0..g.cell_count()).into_par_iter().filter(|&c| vf[c] > 0.0).map(|c| {
            let x = g.cell_center(g.cell_ijk(c));
            let (y, j) = flow.map_with_jacobian(&x, t);
            vf[c] * self.data.q.value(&y) * j.determinant()
        })) * vol;
        Ok(lagrangian(&op, vol, (&ut, &vt), (&ft, &gt)) + q)
    }
}

/// `a(x, y) + b_N(x, y)` as an operator on the unknowns.
pub(crate) struct PerturbedOp<'a> {
    pub st: &'a Stencil,
    pub n: &'a [Matrix3<f64>],
}

impl LinearOperator for PerturbedOp<'_> {
    fn len(&self) -> usize {
        self.st.unknown_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.st.apply(x, y);
        let vol = self.st.grid().cell_volume();
        let gx = self.st.gradient(x, None);
        let w = self.st.weights();
        let flux: Vec<Point> = (0..gx.len())
            .into_par_iter()
            .map(|i| if self.n[i] == Matrix3::zeros() { Point::zeros() } else { self.n[i] * gx[i] * (w[i] * vol) })
            .collect();
        let gt = self.st.gradient_transpose(&flux);
        y.iter_mut().zip(gt).for_each(|(a, b)| *a += b);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.st.diagonal()
    }
}

/// How `F(Φ_t(Ω))` is evaluated along the Taylor ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaylorMode {
    /// Pulled back to the fixed grid: the exact discrete energy of `Φ_t(Ω)`.
    #[default]
    Pullback,
    /// Re-solved on the advected level set `φ ∘ Φ_{−t}`.
    Advected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationOptions {
    /// Strictly decreasing step sizes.
    pub ladder: Vec<f64>,
    pub mode: TaylorMode,
    pub form: SecondOrderForm,
    pub tol: f64,
}

impl Default for VariationOptions {
    fn default() -> Self {
        Self { ladder: vec![0.04, 0.02, 0.01], mode: TaylorMode::Pullback, form: SecondOrderForm::Corrected, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorRow {
    pub t: f64,
    pub energy: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone)]
pub struct VariationReport {
    pub f0: f64,
    pub delta_f: f64,
    pub delta2_f: f64,
    pub delta_u: ScalarField,
    pub delta_v: ScalarField,
    pub taylor: Vec<TaylorRow>,
}

impl VariationReport {
    /// `log₂(R(t)/R(t/2))` for consecutive ladder entries.
    pub fn remainder_exponents(&self) -> Vec<f64> {
        self.taylor.windows(2).map(|w| (w[0].remainder / w[1].remainder).log2()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "kind,t,energy,remainder,f0,delta_f,delta2_f")?;
        for r in &self.taylor {
            writeln!(out, "ladder,{},{},{},,,", r.t, r.energy, r.remainder)?;
        }
        writeln!(out, "summary,,,,{},{},{}", self.f0, self.delta_f, self.delta2_f)?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

pub fn first_variation(dom: &DomainRep, data: &ProblemData, spec: &dyn VectorFieldSpec) -> Result<FirstVariation> {
    StateSystem::new(dom, data, 1e-12)?.first_variation(spec)
}

pub fn second_variation(
    dom: &DomainRep,
    data: &ProblemData,
    spec: &dyn VectorFieldSpec,
    opts: &VariationOptions,
) -> Result<VariationReport> {
    if opts.ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("Taylor ladder must be strictly decreasing".into()));
    }
    let sys = StateSystem::new(dom, data, opts.tol)?;
    sys.second_variation(spec, opts)
}

impl StateSystem {
    pub fn second_variation(&self, spec: &dyn VectorFieldSpec, opts: &VariationOptions) -> Result<VariationReport> {
        let (delta2_f, du, dv, delta_f) = self.second_order(spec, opts.form)?;
        let st = &self.stencil;
        let f0 = match opts.mode {
            TaylorMode::Pullback => lagrangian(st, self.grid().cell_volume(), (&self.u, &self.v), (&self.f, &self.g)) + self.q_term(),
            TaylorMode::Advected => self.energy().value,
        };
        let taylor = opts
            .ladder
            .iter()
            .map(|&t| {
                let energy = match opts.mode {
                    TaylorMode::Pullback => self.pullback_energy(spec, t)?,
                    TaylorMode::Advected => energy_f(&advect_domain(&self.dom, spec, t), &self.data)?.value,
                };
                let remainder = (energy - f0 - t * delta_f - t * t * delta2_f).abs();
                Ok(TaylorRow { t, energy, remainder })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VariationReport {
            f0,
            delta_f,
            delta2_f,
            delta_u: st.scatter(&du, None),
            delta_v: st.scatter(&dv, None),
            taylor,
        })
    }
}

/// Boundary data of a one-phase state: `u` on fixed (box-face) nodes,
/// zero elsewhere.
fn fixed_data(st: &Stencil, u: &ScalarField) -> ScalarField {
    let vals = st
        .class()
        .iter()
        .zip(u.values())
        .map(|(c, &v)| if *c == NodeClass::Fixed { v } else { 0.0 })
        .collect();
    ScalarField::new(*u.grid(), vals).expect("finite data")
}

/// `(δG(u)[ξ], δ²G(u)[ξ])` for `G(u) = ∫|∇u|² + Λ|{u > 0}|` on the positive
/// phase `phase`, with `δ²G` the full second derivative
/// `2∫∇u·δ²A∇u − 2∫|∇δu|² + Λ∫_Ω ((div ξ)² + ξ·∇div ξ)`.
pub fn one_phase_variations(
    u: &ScalarField,
    phase: &DomainRep,
    lam: f64,
    spec: &dyn VectorFieldSpec,
    tol: f64,
) -> Result<(f64, f64)> {
    crate::domain::same_grid(u.grid(), phase.grid())?;
    let st = Stencil::new(phase);
    if st.unknown_count() == 0 {
        return Err(Error::EmptyDomain);
    }
    let data = fixed_data(&st, u);
    let x = st.gather(u);
    let b = st.rhs(&vec![0.0; x.len()], Some(&data));
    let mut ax = vec![0.0; x.len()];
    st.apply(&x, &mut ax);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let r: Vec<f64> = ax.iter().zip(&b).map(|(a, c)| a - c).collect();
    let res = norm(&r) / norm(&b).max(f64::MIN_POSITIVE);
    if res > 100.0 * tol {
        return Err(Error::NotHarmonic(res));
    }
    let nv = NodalVariation::new(&st, spec);
    let gu = st.gradient(&x, Some(&data));
    let g = *st.grid();
    let vf = phase.volfrac();
    let (m1, m2) = (0..g.cell_count())
        .into_par_iter()
        .filter(|&c| vf[c] > 0.0)
        .map(|c| {
            let p = g.cell_center(g.cell_ijk(c));
            let jet = spec.jet(&p);
            let div = jet.div();
            (vf[c] * div, vf[c] * (div * div + jet.value.dot(&jet.grad_div())))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let vol = g.cell_volume();
    let first = bform(&st, &nv.da, &gu, &gu) + lam * m1 * vol;
    let zeros = vec![0.0; x.len()];
    let du = solve_weak(&st, &mat_vec(&nv.da, &gu), &zeros, tol)?;
    let second = 2.0 * bform(&st, &nv.d2a, &gu, &gu) - 2.0 * st.form(&du, &du) + lam * m2 * vol;
    Ok((first, second))
}

#[cfg(test)]
mod tests;
