//! Outward and inward almost-minimality margins of a computed state.

use crate::calculus::{energy_ef, ProblemData, Region, StateSystem};
use crate::domain::DomainRep;
use crate::elliptic::Stencil;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::{sampled_ball_integral, BallRegion};

/// Truncation levels `t` of the inward competitors `(u − rt)⁺`.
pub const INWARD_LEVELS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outward,
    Inward,
}

/// State `u` of a domain, reused across probes.
#[derive(Debug, Clone)]
pub struct Probe<'a> {
    dom: &'a DomainRep,
    data: &'a ProblemData,
    u: ScalarField,
    tol: f64,
}

impl<'a> Probe<'a> {
    pub fn new(dom: &'a DomainRep, data: &'a ProblemData, tol: f64) -> Result<Self> {
        let u = StateSystem::new(dom, data, tol)?.u_field();
        Ok(Self { dom, data, u, tol })
    }

    pub fn state(&self) -> &ScalarField {
        &self.u
    }

    fn positive_measure(&self, w: &ScalarField, ball: &BallRegion) -> f64 {
        sampled_ball_integral(w.grid(), ball, 4, |p| if w.interpolate(p) > 0.0 { 1.0 } else { 0.0 })
    }

    /// `E_f(h, B) + (C₂C_Q/2)|B∖Ω| − E_f(u, B)` with `h` the `E_f`-minimizer
    /// in `B` equal to `u` on ∂B.
    fn outward(&self, ball: &BallRegion) -> Result<f64> {
        let g = *self.u.grid();
        let bdom = DomainRep::ball(g, ball.center, ball.radius);
        let st = Stencil::new(&bdom);
        if st.unknown_count() == 0 {
            return Err(Error::ScaleBelowGrid { r: ball.radius, floor: g.h() });
        }
        let f: Vec<f64> = st.nodes().iter().map(|&n| self.data.f.value(&g.node_point(n))).collect();
        let b = st.rhs(&f, Some(&self.u));
        let x0 = st.gather(&self.u);
        let out = st.solve(&b, Some(&x0), self.tol)?;
        let mut rep = self.u.clone();
        for (id, &n) in st.nodes().iter().enumerate() {
            rep.values_mut()[n] = out.x[id];
        }
        let e_rep = energy_ef(&rep, &self.data.f, Region::Ball(ball))?;
        let e_u = energy_ef(&self.u, &self.data.f, Region::Ball(ball))?;
        let inside = self.dom.volfrac_in_ball(&ball.center, ball.radius, 4).iter().sum::<f64>() * g.cell_volume();
        let outside = (ball.measure(g.dim()) - inside).max(0.0);
        Ok(e_rep + 0.5 * self.data.c2 * self.data.cap_q * outside - e_u)
    }

    /// `min_t E_f(φ_t, B) − E_f(u, B) − (C₁c_Q/2)(|{u>0}∩B| − |{φ_t>0}∩B|)`
    /// with `φ_t = η(u − rt)⁺ + (1 − η)u`, `η = 1` on `B_{r/2}` and zero on ∂B.
    fn inward(&self, ball: &BallRegion) -> Result<f64> {
        let e_u = energy_ef(&self.u, &self.data.f, Region::Ball(ball))?;
        let m_u = self.positive_measure(&self.u, ball);
        let r = ball.radius;
        let g = *self.u.grid();
        let credit = 0.5 * self.data.c1 * self.data.c_q;
        let mut best = f64::INFINITY;
        for t in INWARD_LEVELS {
            let cut = ScalarField::from_fn(g, |p| {
                let val = self.u.interpolate(p);
                let eta = (2.0 * (1.0 - (p - ball.center).norm() / r)).clamp(0.0, 1.0);
                eta * (val - r * t).max(0.0) + (1.0 - eta) * val
            });
            let e_cut = energy_ef(&cut, &self.data.f, Region::Ball(ball))?;
            let lost = m_u - self.positive_measure(&cut, ball);
            best = best.min(e_cut - e_u - credit * lost);
        }
        Ok(best)
    }

    pub fn margin(&self, ball: &BallRegion, direction: Direction) -> Result<f64> {
        ball.check_inside(self.u.grid())?;
        match direction {
            Direction::Outward => self.outward(ball),
            Direction::Inward => self.inward(ball),
        }
    }
}

/// Margin of the outward or inward minimality inequality in `ball`;
/// `≥ −tolerance` means it holds.
pub fn minimality_probe(dom: &DomainRep, data: &ProblemData, ball: &BallRegion, direction: Direction) -> Result<f64> {
    ball.check_inside(dom.grid())?;
    Probe::new(dom, data, crate::elliptic::DEFAULT_TOL)?.margin(ball, direction)
}
