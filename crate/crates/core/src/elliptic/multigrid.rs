//! Geometric multigrid V-cycle used as a CG preconditioner.
//!
//! Coarse levels rediscretize the level set injected onto every other node;
//! transfers are multilinear prolongation and its transpose. Red-black
//! Gauss–Seidel smoothing runs red→black before and black→red after the
//! coarse correction, so the cycle is symmetric.

use std::borrow::Cow;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::domain::DomainRep;
use crate::field::ScalarField;
use crate::grid::Grid;

use super::cg::Preconditioner;
use super::stencil::{Leg, NodeClass, Stencil};

/// Coarsening stops before a level would have fewer cells per axis.
const MIN_COARSE_CELLS: usize = 4;
/// Largest coarsest system factored densely.
const DIRECT_LIMIT: usize = 1200;
/// Smoothing sweeps before and after the coarse correction.
const SWEEPS: usize = 2;
/// Symmetric sweeps replacing the direct solve on large coarsest levels.
const COARSE_SWEEPS: usize = 40;

/// Fine-to-coarse weights, stored both ways.
#[derive(Debug, Clone)]
struct Transfer {
    /// Per fine unknown: coarse ids and weights.
    fine: Vec<Vec<(u32, f64)>>,
    /// Per coarse unknown: fine ids and weights.
    coarse: Vec<Vec<(u32, f64)>>,
}

impl Transfer {
    fn new(fine: &Stencil, coarse: &Stencil) -> Self {
        let fg = *fine.grid();
        let cg = *coarse.grid();
        let dim = fg.dim();
        let class = coarse.class();
        let rows: Vec<Vec<(u32, f64)>> = fine
            .nodes()
            .par_iter()
            .map(|&n| {
                let ijk = fg.node_ijk(n);
                let mut opts: [Vec<(usize, f64)>; 3] = Default::default();
                for k in 0..3 {
                    opts[k] = if k >= dim {
                        vec![(0, 1.0)]
                    } else if ijk[k] % 2 == 0 {
                        vec![(ijk[k] / 2, 1.0)]
                    } else {
                        vec![(ijk[k] / 2, 0.5), (ijk[k] / 2 + 1, 0.5)]
                    };
                }
                let mut row = Vec::with_capacity(8);
                for &(a, wa) in &opts[0] {
                    for &(b, wb) in &opts[1] {
                        for &(c, wc) in &opts[2] {
                            if let NodeClass::Unknown(id) = class[cg.node_index([a, b, c])] {
                                row.push((id, wa * wb * wc));
                            }
                        }
                    }
                }
                row
            })
            .collect();
        let mut cols = vec![Vec::new(); coarse.unknown_count()];
        for (i, row) in rows.iter().enumerate() {
            for &(j, w) in row {
                cols[j as usize].push((i as u32, w));
            }
        }
        Self { fine: rows, coarse: cols }
    }

    fn restrict(&self, r: &[f64]) -> Vec<f64> {
        self.coarse.par_iter().map(|col| col.iter().map(|&(i, w)| w * r[i as usize]).sum()).collect()
    }

    fn prolong_add(&self, e: &[f64], x: &mut [f64]) {
        x.par_iter_mut()
            .zip(self.fine.par_iter())
            .for_each(|(xi, row)| *xi += row.iter().map(|&(j, w)| w * e[j as usize]).sum::<f64>());
    }
}

#[derive(Debug, Clone)]
struct Level<'a> {
    st: Cow<'a, Stencil>,
    /// Unknowns by parity of `i + j + k`.
    colors: [Vec<u32>; 2],
}

impl<'a> Level<'a> {
    fn new(st: Cow<'a, Stencil>) -> Self {
        let g = *st.grid();
        let mut colors = [Vec::new(), Vec::new()];
        for (id, &n) in st.nodes().iter().enumerate() {
            let ijk = g.node_ijk(n);
            colors[(ijk[0] + ijk[1] + ijk[2]) % 2].push(id as u32);
        }
        Self { st, colors }
    }

    fn len(&self) -> usize {
        self.st.unknown_count()
    }

    /// Gauss–Seidel update of one colour; the other colour is read only.
    fn relax(&self, color: usize, b: &[f64], x: &mut [f64]) {
        let st = &self.st;
        let dim = st.grid().dim();
        let (legs, diag, scale) = (st.legs(), st.diag(), st.scale());
        let xr: &[f64] = x;
        let new: Vec<f64> = self.colors[color]
            .par_iter()
            .map(|&id| {
                let id = id as usize;
                let mut acc = b[id];
                for leg in &legs[id][..2 * dim] {
                    if let Leg::Node(j) = *leg {
                        acc += scale * xr[j as usize];
                    }
                }
                acc / diag[id]
            })
            .collect();
        for (&id, v) in self.colors[color].iter().zip(new) {
            x[id as usize] = v;
        }
    }

    fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let st = &self.st;
        let dim = st.grid().dim();
        let (legs, diag, scale) = (st.legs(), st.diag(), st.scale());
        (0..self.len())
            .into_par_iter()
            .map(|id| {
                let mut ax = diag[id] * x[id];
                for leg in &legs[id][..2 * dim] {
                    if let Leg::Node(j) = *leg {
                        ax -= scale * x[j as usize];
                    }
                }
                b[id] - ax
            })
            .collect()
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let st = &self.st;
        let dim = st.grid().dim();
        let mut a = DMatrix::zeros(n, n);
        for id in 0..n {
            a[(id, id)] = st.diag()[id];
            for leg in &st.legs()[id][..2 * dim] {
                if let Leg::Node(j) = *leg {
                    a[(id, j as usize)] = -st.scale();
                }
            }
        }
        a
    }
}

/// V-cycle preconditioner for the Dirichlet stencil of a level-set domain.
#[derive(Debug, Clone)]
pub struct Multigrid<'a> {
    levels: Vec<Level<'a>>,
    transfers: Vec<Transfer>,
    direct: Option<Cholesky<f64, Dyn>>,
}

impl<'a> Multigrid<'a> {
    pub fn new(st: &'a Stencil) -> Self {
        let phi = st.phi();
        let mut levels = vec![Level::new(Cow::Borrowed(st))];
        let mut transfers = Vec::new();
        loop {
            let fine = &levels.last().expect("one level").st;
            let fg = *fine.grid();
            let Some(cg) = fg.coarsened(MIN_COARSE_CELLS) else { break };
            let coarse = Stencil::new(&DomainRep::new(inject(phi, &cg)));
            if coarse.unknown_count() == 0 {
                break;
            }
            transfers.push(Transfer::new(fine, &coarse));
            levels.push(Level::new(Cow::Owned(coarse)));
            if levels.last().map_or(0, Level::len) <= DIRECT_LIMIT / 4 {
                break;
            }
        }
        let last = levels.last().expect("one level");
        let direct = (last.len() <= DIRECT_LIMIT).then(|| last.dense().cholesky()).flatten();
        Self { levels, transfers, direct }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn cycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        let lev = &self.levels[l];
        let mut x = vec![0.0; lev.len()];
        if l + 1 == self.levels.len() {
            if let Some(ch) = &self.direct {
                return ch.solve(&DVector::from_column_slice(b)).as_slice().to_vec();
            }
            for _ in 0..COARSE_SWEEPS {
                lev.relax(0, b, &mut x);
                lev.relax(1, b, &mut x);
                lev.relax(1, b, &mut x);
                lev.relax(0, b, &mut x);
            }
            return x;
        }
        for _ in 0..SWEEPS {
            lev.relax(0, b, &mut x);
            lev.relax(1, b, &mut x);
        }
        let r = lev.residual(b, &x);
        let t = &self.transfers[l];
        let e = self.cycle(l + 1, &t.restrict(&r));
        t.prolong_add(&e, &mut x);
        for _ in 0..SWEEPS {
            lev.relax(1, b, &mut x);
            lev.relax(0, b, &mut x);
        }
        x
    }
}

/// `φ` injected onto the nodes of the coarser grid `cg`.
fn inject(phi: &ScalarField, cg: &Grid) -> ScalarField {
    let fg = *phi.grid();
    let ratio = (cg.h() / fg.h()).round() as usize;
    let v = phi.values();
    let values = (0..cg.node_count())
        .into_par_iter()
        .map(|i| {
            let c = cg.node_ijk(i);
            v[fg.node_index([ratio * c[0], ratio * c[1], ratio * c[2]])]
        })
        .collect();
    ScalarField::from_vec_unchecked(*cg, values)
}

impl Preconditioner for Multigrid<'_> {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.cycle(0, r));
    }
}
