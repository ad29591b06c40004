//! Level-set shape descent for the general, Bernoulli and heat problems.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::calculus::{ProblemData, ScalarData};
use crate::domain::{same_grid, DomainRep};
use crate::elliptic::{boundary_gradient_norms, crossings, default_max_iter, pcg_with, Crossing, Leg, Multigrid, NodeClass, Stencil};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::reduce::ordered_sum;

use super::levelset::{advance, extend_speed, reinitialize};

/// Sweeps of the speed extension.
pub const EXTENSION_SWEEPS: usize = 10;
/// Step halvings before giving up on a step.
pub const MAX_HALVINGS: usize = 8;
/// Width of the band along the box faces that heat mode never moves, in cells.
pub const HEAT_FACE_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// `V = |∇u||∇v| − Q`.
    General,
    /// `g = f/(2λ²)`: one solve, `V = |∇u|²/(2λ²) − Q`.
    Bernoulli { lam: f64 },
    /// `u = φ`, `v = 1` on the box faces, `u = v = 0` on `D∖Ω`;
    /// `F = ∫∇u·∇v + Λ|Ω|`, `V = |∇u||∇v| − Λ`.
    Heat { boundary: ScalarData, lam: f64 },
}

#[derive(Debug, Clone)]
pub struct OptimizeConfig {
    pub mode: Mode,
    /// `f`, `g`, `Q`; heat mode ignores them.
    pub data: ProblemData,
    pub init: DomainRep,
    /// Design region `D` as a level set; the box when `None`.
    pub container: Option<DomainRep>,
    /// Largest front displacement per step, in cells.
    pub step: f64,
    pub max_steps: usize,
    pub reinit_every: usize,
    /// Stop once `max |V|` on the free boundary falls below this.
    pub stop_tol: f64,
    /// Relative residual of the state solves.
    pub tol: f64,
    /// Grids of spacing `2h, 4h, …` solved first, each warm-starting the next.
    pub coarse_levels: usize,
}

impl OptimizeConfig {
    pub fn new(mode: Mode, data: ProblemData, init: DomainRep) -> Self {
        Self {
            mode,
            data,
            init,
            container: None,
            step: 0.5,
            max_steps: 400,
            reinit_every: 10,
            stop_tol: 1e-3,
            tol: 1e-9,
            coarse_levels: 0,
        }
    }

    /// The same problem on the grid of spacing `2h`, or `None` when no
    /// coarse level is requested or the coarse grid cannot carry it.
    fn coarse(&self) -> Option<Self> {
        if self.coarse_levels == 0 {
            return None;
        }
        let cg = self.init.grid().coarsened(crate::grid::MIN_CELLS)?;
        let sample = |d: &DomainRep| DomainRep::new(ScalarField::from_fn(cg, |p| d.phi().interpolate(p)));
        let c = Self {
            init: sample(&self.init),
            container: self.container.as_ref().map(sample),
            coarse_levels: self.coarse_levels - 1,
            ..self.clone()
        };
        c.validate().ok().map(|_| c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if !(self.step > 0.0 && self.step <= 1.0) {
            return bad("step must lie in (0, 1]");
        }
        if self.reinit_every == 0 {
            return bad("reinit_every must be positive");
        }
        if !(self.stop_tol > 0.0 && self.tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.init.is_empty() {
            return bad("initial domain is empty");
        }
        if let Some(c) = &self.container {
            same_grid(c.grid(), self.init.grid())?;
        }
        match &self.mode {
            Mode::General => self.data.validate(self.init.grid()),
            Mode::Bernoulli { lam } => {
                if *lam <= 0.0 {
                    return bad("lambda must be positive");
                }
                self.data.validate(self.init.grid())
            }
            Mode::Heat { boundary, lam } => {
                if *lam <= 0.0 {
                    return bad("Lambda must be positive");
                }
                let g = *self.init.grid();
                let band = HEAT_FACE_BAND * g.h();
                for i in 0..g.node_count() {
                    let p = g.node_point(i);
                    if g.on_box_face(g.node_ijk(i)) && boundary.value(&p) <= 0.0 {
                        return bad("heat boundary data must be positive");
                    }
                    if g.distance_to_faces(&p) <= band && !self.init.inside(i) {
                        return bad("heat mode needs the initial domain to contain the face band");
                    }
                }
                Ok(())
            }
        }
    }
}

/// One row of the descent trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptRecord {
    /// Grid spacing of the level the step ran on.
    pub h: f64,
    pub step: usize,
    pub energy: f64,
    pub volume: f64,
    /// `max |V|` over the free part of ∂Ω.
    pub max_speed: f64,
    pub dt: f64,
    pub halvings: usize,
}

#[derive(Debug, Clone, Default)]
pub struct OptTrace {
    pub records: Vec<OptRecord>,
    pub converged: bool,
}

impl OptTrace {
    pub fn last(&self) -> Option<&OptRecord> {
        self.records.last()
    }

    /// Largest energy increase between consecutive records of one level.
    pub fn worst_increase(&self) -> f64 {
        self.records
            .windows(2)
            .filter(|w| w[0].h == w[1].h)
            .map(|w| w[1].energy - w[0].energy)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "h,step,energy,volume,max_speed,dt,halvings")?;
        for r in &self.records {
            writeln!(
                out,
                "{:.6e},{},{:.12e},{:.12e},{:.6e},{:.6e},{}",
                r.h, r.step, r.energy, r.volume, r.max_speed, r.dt, r.halvings
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// States, energy and boundary speeds of one domain.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub dom: DomainRep,
    pub stencil: Stencil,
    pub u: ScalarField,
    pub v: ScalarField,
    pub energy: f64,
    pub crossings: Vec<Crossing>,
    /// `V` per crossing.
    pub speed: Vec<f64>,
    /// Crossings where `D` or the heat face band blocks growth.
    pub pinned: Vec<bool>,
    /// `max |∇u||∇v|` over the free crossings; bounds the stable step.
    pub flux: f64,
}

impl Snapshot {
    /// `max |V|` over the free boundary; pinned crossings only count when
    /// they want to recede.
    pub fn max_speed(&self) -> f64 {
        self.speed
            .iter()
            .zip(&self.pinned)
            .map(|(&v, &p)| if p { (-v).max(0.0) } else { v.abs() })
            .fold(0.0, f64::max)
    }
}

fn face_data(g: &Grid, f: impl Fn(&crate::grid::Point) -> f64 + Sync) -> ScalarField {
    ScalarField::from_fn(*g, |p| if g.distance_to_faces(p) <= 1e-12 * g.h() { f(p) } else { 0.0 })
}

fn solve_state(
    st: &Stencil,
    mg: &Multigrid,
    rhs: &[f64],
    data: Option<&ScalarField>,
    guess: Option<&ScalarField>,
    tol: f64,
) -> Result<ScalarField> {
    let b = st.rhs(rhs, data);
    let x0 = guess.map(|u| st.gather(u));
    let out = pcg_with(st, mg, &b, x0.as_deref(), tol, default_max_iter(st.grid()))?;
    Ok(st.scatter(&out.x, data))
}

/// `a(u, v)` including the wall data: `h^{d−2} Σ_edges (u_i − u_j)(v_i − v_j)/θ`.
fn full_form(st: &Stencil, u: &ScalarField, v: &ScalarField) -> f64 {
    let g = st.grid();
    let scale = g.h().powi(g.dim() as i32 - 2);
    let (uv, vv) = (u.values(), v.values());
    let legs = st.legs();
    let nodes = st.nodes();
    let class = st.class();
    scale
        * ordered_sum((0..nodes.len()).into_par_iter().map(|id| {
            let i = nodes[id];
            let mut acc = 0.0;
            for leg in &legs[id][..2 * g.dim()] {
                match *leg {
                    Leg::Node(j) => {
                        let j = nodes[j as usize];
                        acc += 0.5 * (uv[i] - uv[j]) * (vv[i] - vv[j]);
                    }
                    Leg::Wall { theta, far } => {
                        // Fixed neighbours carry the face data, interface walls zero.
                        let far = far as usize;
                        let (uw, vw) = match class[far] {
                            NodeClass::Fixed => (uv[far], vv[far]),
                            _ => (0.0, 0.0),
                        };
                        acc += (uv[i] - uw) * (vv[i] - vw) / theta;
                    }
                }
            }
            acc
        }))
}

fn cell_integral(dom: &DomainRep, q: &ScalarData) -> f64 {
    let g = *dom.grid();
    let vf = dom.volfrac();
    g.cell_volume()
        * ordered_sum(
            (0..g.cell_count())
                .into_par_iter()
                .filter(|&c| vf[c] > 0.0)
                .map(|c| vf[c] * q.value(&g.cell_center(g.cell_ijk(c)))),
        )
}

/// Solves the states of `dom`, warm-started from `prev`, and evaluates the
/// energy and the boundary speeds.
pub fn evaluate(cfg: &OptimizeConfig, dom: &DomainRep, prev: Option<&Snapshot>, step: usize) -> Result<Snapshot> {
    let st = Stencil::new(dom);
    if st.unknown_count() == 0 {
        return Err(Error::StepCollapse(step));
    }
    let g = *dom.grid();
    let mg = Multigrid::new(&st);
    let pts: Vec<_> = st.nodes().iter().map(|&n| g.node_point(n)).collect();
    let sample = |d: &ScalarData| -> Vec<f64> { pts.iter().map(|p| d.value(p)).collect() };
    let (gu, gv) = (prev.map(|s| &s.u), prev.map(|s| &s.v));
    let (u, v, energy) = match &cfg.mode {
        Mode::General => {
            let (f, gdat) = (sample(&cfg.data.f), sample(&cfg.data.g));
            let (u, v) = rayon::join(
                || solve_state(&st, &mg, &f, None, gu, cfg.tol),
                || solve_state(&st, &mg, &gdat, None, gv, cfg.tol),
            );
            let (u, v) = (u?, v?);
            let e = -st.mass(&gdat, &st.gather(&u)) + cell_integral(dom, &cfg.data.q);
            (u, v, e)
        }
        Mode::Bernoulli { lam } => {
            let f = sample(&cfg.data.f);
            let u = solve_state(&st, &mg, &f, None, gu, cfg.tol)?;
            let k = 1.0 / (2.0 * lam * lam);
            let e = -k * st.mass(&f, &st.gather(&u)) + cell_integral(dom, &cfg.data.q);
            let v = u.scaled(k);
            (u, v, e)
        }
        Mode::Heat { boundary, lam } => {
            let zero = vec![0.0; st.unknown_count()];
            let (bu, bv) = (face_data(&g, |p| boundary.value(p)), face_data(&g, |_| 1.0));
            let (u, v) = rayon::join(
                || solve_state(&st, &mg, &zero, Some(&bu), gu, cfg.tol),
                || solve_state(&st, &mg, &zero, Some(&bv), gv, cfg.tol),
            );
            let (u, v) = (u?, v?);
            let e = full_form(&st, &u, &v) + lam * dom.volume();
            (u, v, e)
        }
    };
    let cs = crossings(dom);
    let (nu, nv) = rayon::join(|| boundary_gradient_norms(&cs, &u, &st), || boundary_gradient_norms(&cs, &v, &st));
    let band = HEAT_FACE_BAND * g.h();
    let mut speed = Vec::with_capacity(cs.len());
    let mut pinned = Vec::with_capacity(cs.len());
    let mut flux = 0.0f64;
    for (c, (a, b)) in cs.iter().zip(nu.iter().zip(&nv)) {
        let (q, pin) = match &cfg.mode {
            Mode::Heat { lam, .. } => (*lam, g.distance_to_faces(&c.point) <= band),
            _ => {
                let pin = cfg.container.as_ref().is_some_and(|d| d.phi().interpolate(&c.point) < g.h());
                (cfg.data.q.value(&c.point), pin)
            }
        };
        let vel = a * b - q;
        if !pin {
            flux = flux.max(a * b);
        }
        speed.push(if pin && matches!(cfg.mode, Mode::Heat { .. }) { 0.0 } else { vel });
        pinned.push(pin);
    }
    Ok(Snapshot { dom: dom.clone(), stencil: st, u, v, energy, crossings: cs, speed, pinned, flux })
}

/// Nodal speeds on both ends of every cut edge, averaged over the edges.
fn seeds(snap: &Snapshot) -> Vec<(usize, f64)> {
    let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for (c, &v) in snap.crossings.iter().zip(&snap.speed) {
        for n in [c.node, c.outside] {
            let e = acc.entry(n).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(n, (s, k))| (n, s / k as f64)).collect()
}

/// Descends `F` by moving ∂Ω with normal speed `V`. Returns the final
/// domain and the per-step trace.
pub fn optimize(cfg: &OptimizeConfig) -> Result<(DomainRep, OptTrace)> {
    let (dom, trace, _) = optimize_with_state(cfg)?;
    Ok((dom, trace))
}

/// As [`optimize`], also returning the last snapshot.
pub fn optimize_with_state(cfg: &OptimizeConfig) -> Result<(DomainRep, OptTrace, Snapshot)> {
    cfg.validate()?;
    let g = *cfg.init.grid();
    let mut trace = OptTrace::default();
    let init = match cfg.coarse() {
        Some(coarse) => {
            let (dom, t, _) = optimize_with_state(&coarse)?;
            trace.records = t.records;
            let up = ScalarField::from_fn(g, |p| dom.phi().interpolate(p));
            reinitialize(&up)
        }
        None => cfg.init.phi().clone(),
    };
    descend(cfg, init, trace)
}

fn descend(cfg: &OptimizeConfig, init: ScalarField, mut trace: OptTrace) -> Result<(DomainRep, OptTrace, Snapshot)> {
    let g = *init.grid();
    trace.converged = false;
    let h = g.h();
    let etol = 10.0 * (h * h + cfg.tol);
    let clip = |phi: ScalarField| -> ScalarField {
        match &cfg.container {
            Some(d) => phi.zip_map(d.phi(), f64::min).expect("same grid"),
            None => phi,
        }
    };
    let start = DomainRep::new(clip(init));
    let mut cur = evaluate(cfg, &start, None, 0)?;
    let mut gain = 1.0;
    trace.records.push(OptRecord {
        h,
        step: 0,
        energy: cur.energy,
        volume: cur.dom.volume(),
        max_speed: cur.max_speed(),
        dt: 0.0,
        halvings: 0,
    });
    for k in 1..=cfg.max_steps {
        let vmax = cur.max_speed();
        if vmax < cfg.stop_tol {
            trace.converged = true;
            break;
        }
        let mut ext = extend_speed(cur.dom.phi(), &seeds(&cur), EXTENSION_SWEEPS);
        if matches!(cfg.mode, Mode::Heat { .. }) {
            for (i, v) in ext.iter_mut().enumerate() {
                if g.distance_to_faces(&g.node_point(i)) <= HEAT_FACE_BAND * h {
                    *v = 0.0;
                }
            }
        }
        let top = ext.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            trace.converged = true;
            break;
        }
        // Grid-scale ripples relax at rate ~ |∇u||∇v|/h, so the step is
        // bounded by the flux as well as by the speed.
        let mut dt = gain * cfg.step * h / top.max(cur.flux);
        let mut accepted = None;
        for halvings in 0..=MAX_HALVINGS {
            let mut phi = clip(advance(cur.dom.phi(), &ext, dt));
            if k % cfg.reinit_every == 0 {
                phi = clip(reinitialize(&phi));
            }
            let dom = DomainRep::new(phi);
            if dom.is_empty() {
                return Err(Error::StepCollapse(k));
            }
            let next = evaluate(cfg, &dom, Some(&cur), k)?;
            if next.energy <= cur.energy + etol {
                accepted = Some((next, halvings));
                break;
            }
            dt *= 0.5;
        }
        let Some((next, halvings)) = accepted else {
            return Err(Error::NoDescent { step: k, halvings: MAX_HALVINGS });
        };
        // The front overshot when the new speeds point back against the old ones.
        let old = ScalarField::from_vec_unchecked(g, ext);
        let turn: f64 = next
            .crossings
            .iter()
            .zip(&next.speed)
            .zip(&next.pinned)
            .filter(|(_, &p)| !p)
            .map(|((c, v), _)| v * old.interpolate(&c.point) * c.normal[c.axis].abs())
            .sum();
        if turn < 0.0 {
            gain = (gain * 0.5).max(1.0 / 64.0);
        }
        log::debug!("step {k}: energy {:.6e}, dt {dt:.3e}, gain {gain}", next.energy);
        cur = next;
        trace.records.push(OptRecord {
            h,
            step: k,
            energy: cur.energy,
            volume: cur.dom.volume(),
            max_speed: cur.max_speed(),
            dt,
            halvings,
        });
    }
    trace.converged = cur.max_speed() < cfg.stop_tol || trace.converged;
    Ok((cur.dom.clone(), trace, cur))
}
