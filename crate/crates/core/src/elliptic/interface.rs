//! Zero crossings of φ on grid edges and one-sided gradients there.

use crate::domain::DomainRep;
use crate::field::ScalarField;
use crate::grid::Point;

use super::stencil::{NodeClass, Stencil};

/// A grid edge from an interior node to an exterior node, cut by `{φ = 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Node with `φ > 0`.
    pub node: usize,
    pub outside: usize,
    pub axis: usize,
    /// `+1` when the exterior node lies at `+e_axis`.
    pub dir: i8,
    pub theta: f64,
    pub point: Point,
    /// Outward unit normal `-∇φ/|∇φ|`, linearly interpolated along the edge.
    pub normal: Point,
}

/// All cut edges whose interior endpoint is not on a box face.
pub fn crossings(dom: &DomainRep) -> Vec<Crossing> {
    let g = *dom.grid();
    let phi = dom.phi().values();
    let grad = dom.phi().gradient();
    let mut out = Vec::new();
    for i in 0..g.node_count() {
        if phi[i] <= 0.0 {
            continue;
        }
        let ijk = g.node_ijk(i);
        if g.on_box_face(ijk) {
            continue;
        }
        for k in 0..g.dim() {
            let s = g.node_stride(k);
            for (dir, j) in [(-1i8, i - s), (1i8, i + s)] {
                if phi[j] > 0.0 {
                    continue;
                }
                let theta = dom.crossing(i, j);
                let mut point = g.node_point(i);
                point[k] += f64::from(dir) * theta * g.h();
                let gp = grad.values()[i] * (1.0 - theta) + grad.values()[j] * theta;
                let n = gp.norm();
                let normal = if n > 0.0 { -gp / n } else { Point::zeros() };
                out.push(Crossing { node: i, outside: j, axis: k, dir, theta, point, normal });
            }
        }
    }
    out
}

/// Inward derivative `∂_s u` at the crossing along the edge direction
/// (pointing into Ω), from the quadratic through the crossing value and the
/// next two nodes inside at least `h/2` from it. Falls back to a linear
/// difference when Ω is one node thick there.
pub fn inward_derivative(c: &Crossing, u: &ScalarField, st: &Stencil, boundary: f64) -> f64 {
    let g = st.grid();
    let h = g.h();
    let class = st.class();
    let dims = g.node_dims();
    let mut ijk = g.node_ijk(c.node);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(2);
    let mut dist = c.theta * h;
    while pts.len() < 2 {
        let n = g.node_index(ijk);
        match class[n] {
            NodeClass::Unknown(_) | NodeClass::Fixed if dist >= 0.5 * h => {
                pts.push((dist, u.values()[n] - boundary))
            }
            NodeClass::Unknown(_) | NodeClass::Fixed => {}
            NodeClass::Outside => break,
        }
        let next = ijk[c.axis] as isize - c.dir as isize;
        if next < 0 || next as usize >= dims[c.axis] {
            break;
        }
        ijk[c.axis] = next as usize;
        dist += h;
    }
    match pts.as_slice() {
        [(s1, u1), (s2, u2)] => (u1 * s2 * s2 - u2 * s1 * s1) / (s1 * s2 * (s2 - s1)),
        [(s1, u1)] => u1 / s1,
        _ => 0.0,
    }
}

/// `|∇u|` at a crossing, from the inward axis derivative and the normal.
pub fn gradient_norm(c: &Crossing, u: &ScalarField, st: &Stencil) -> f64 {
    let nk = c.normal[c.axis].abs();
    inward_derivative(c, u, st, 0.0).abs() / nk.max(1e-3)
}

/// `|∇u|` for every crossing, each taken from the best-aligned crossing
/// (largest `|ν_k|`) of the same interior node.
pub fn boundary_gradient_norms(cs: &[Crossing], u: &ScalarField, st: &Stencil) -> Vec<f64> {
    let mut out = vec![0.0; cs.len()];
    let mut start = 0;
    while start < cs.len() {
        let node = cs[start].node;
        let end = start + cs[start..].iter().take_while(|c| c.node == node).count();
        let best = (start..end)
            .max_by(|&a, &b| cs[a].normal[cs[a].axis].abs().total_cmp(&cs[b].normal[cs[b].axis].abs()))
            .unwrap_or(start);
        let value = gradient_norm(&cs[best], u, st);
        out[start..end].iter_mut().for_each(|o| *o = value);
        start = end;
    }
    out
}

/// `∫_{∂Ω} F dS ≈ Σ_k Σ_{crossings on axis k} F |ν_k| h^{d-1}`, given the
/// products `F |ν_k|` per crossing.
pub fn surface_sum<I: IntoIterator<Item = f64>>(h: f64, dim: usize, weighted: I) -> f64 {
    h.powi(dim as i32 - 1) * weighted.into_iter().sum::<f64>()
}
