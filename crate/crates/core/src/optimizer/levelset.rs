//! Level-set kernels: upwind advection, speed extension and redistancing.

use rayon::prelude::*;

use crate::field::ScalarField;
use crate::grid::Grid;

/// One-sided differences `(D⁻φ, D⁺φ)` along `k`; a missing side counts as zero.
#[inline]
fn one_sided(g: &Grid, phi: &[f64], i: usize, k: usize) -> (f64, f64) {
    let ijk = g.node_ijk(i);
    let s = g.node_stride(k);
    let h = g.h();
    let last = g.node_dims()[k] - 1;
    let dm = if ijk[k] > 0 { (phi[i] - phi[i - s]) / h } else { 0.0 };
    let dp = if ijk[k] < last { (phi[i + s] - phi[i]) / h } else { 0.0 };
    (dm, dp)
}

/// Explicit step of `φ_t = V |∇φ|` (Osher–Sethian upwinding). `V > 0`
/// grows `{φ > 0}`.
pub fn advance(phi: &ScalarField, speed: &[f64], dt: f64) -> ScalarField {
    let g = *phi.grid();
    let p = phi.values();
    let values = (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let v = speed[i];
            if v == 0.0 {
                return p[i];
            }
            let (mut grow, mut shrink) = (0.0, 0.0);
            for k in 0..g.dim() {
                let (dm, dp) = one_sided(&g, p, i, k);
                grow += dm.min(0.0).powi(2) + dp.max(0.0).powi(2);
                shrink += dp.min(0.0).powi(2) + dm.max(0.0).powi(2);
            }
            if v > 0.0 {
                p[i] + dt * v * grow.sqrt()
            } else {
                p[i] + dt * v * shrink.sqrt()
            }
        })
        .collect();
    ScalarField::from_vec_unchecked(g, values)
}

/// Unsigned distance to `{φ = 0}` at nodes with a sign change to an axis
/// neighbour, from the linear crossings: `1/√(Σ_k 1/d_k²)`.
fn interface_distance(g: &Grid, phi: &[f64], i: usize) -> Option<f64> {
    let ijk = g.node_ijk(i);
    let mut inv = 0.0;
    let mut hit = false;
    if phi[i] == 0.0 {
        return Some(0.0);
    }
    for k in 0..g.dim() {
        let s = g.node_stride(k);
        let last = g.node_dims()[k] - 1;
        let mut best = f64::INFINITY;
        for (ok, j) in [(ijk[k] > 0, i.wrapping_sub(s)), (ijk[k] < last, i + s)] {
            if ok && phi[j] * phi[i] <= 0.0 {
                best = best.min(phi[i] / (phi[i] - phi[j]) * g.h());
            }
        }
        if best.is_finite() {
            hit = true;
            inv += 1.0 / (best * best).max(1e-300);
        }
    }
    hit.then(|| 1.0 / inv.sqrt())
}

/// Nodes adjacent to the zero level.
pub fn interface_nodes(phi: &ScalarField) -> Vec<usize> {
    let g = *phi.grid();
    let p = phi.values();
    (0..g.node_count())
        .into_par_iter()
        .filter(|&i| interface_distance(&g, p, i).is_some())
        .collect()
}

/// Iteration orders of the `2^d` Gauss–Seidel sweeps.
fn sweep_order(g: &Grid, dirs: usize) -> impl Iterator<Item = usize> + '_ {
    let m = g.node_dims();
    let total = g.node_count();
    (0..total).map(move |t| {
        let mut ijk = [t % m[0], (t / m[0]) % m[1], t / (m[0] * m[1])];
        for (k, c) in ijk.iter_mut().enumerate() {
            if dirs & (1 << k) != 0 {
                *c = m[k] - 1 - *c;
            }
        }
        g.node_index(ijk)
    })
}

/// Godunov update of the eikonal equation from the sorted axis minima.
fn eikonal_update(mut a: Vec<f64>, h: f64) -> f64 {
    a.sort_by(f64::total_cmp);
    let mut u = a[0] + h;
    for m in 2..=a.len() {
        if u <= a[m - 1] {
            break;
        }
        let s: f64 = a[..m].iter().sum();
        let s2: f64 = a[..m].iter().map(|x| x * x).sum();
        let disc = s * s - m as f64 * (s2 - h * h);
        u = (s + disc.max(0.0).sqrt()) / m as f64;
    }
    u
}

/// Redistancing to signed distance by fast sweeping. Nodes next to the zero
/// level keep their crossing-based distance, so the interface stays put.
pub fn reinitialize(phi: &ScalarField) -> ScalarField {
    let g = *phi.grid();
    let p = phi.values();
    let h = g.h();
    let mut d: Vec<f64> = (0..g.node_count())
        .into_par_iter()
        .map(|i| interface_distance(&g, p, i).unwrap_or(f64::INFINITY))
        .collect();
    let frozen: Vec<bool> = d.iter().map(|x| x.is_finite()).collect();
    if !frozen.iter().any(|&f| f) {
        return phi.clone();
    }
    let m = g.node_dims();
    for _ in 0..2 {
        for dirs in 0..(1usize << g.dim()) {
            for i in sweep_order(&g, dirs) {
                if frozen[i] {
                    continue;
                }
                let ijk = g.node_ijk(i);
                let mut a = Vec::with_capacity(3);
                for k in 0..g.dim() {
                    let s = g.node_stride(k);
                    let lo = if ijk[k] > 0 { d[i - s] } else { f64::INFINITY };
                    let hi = if ijk[k] + 1 < m[k] { d[i + s] } else { f64::INFINITY };
                    let v = lo.min(hi);
                    if v.is_finite() {
                        a.push(v);
                    }
                }
                if !a.is_empty() {
                    d[i] = d[i].min(eikonal_update(a, h));
                }
            }
        }
    }
    let values = d
        .iter()
        .zip(p)
        .map(|(&dist, &s)| if s > 0.0 { dist } else if s < 0.0 { -dist } else { 0.0 })
        .collect();
    ScalarField::from_vec_unchecked(g, values)
}

/// Extends `seeds` (node, value) off the interface by Jacobi sweeps of
/// `∇V · ∇φ = 0`: each node averages its upwind neighbours (smaller `|φ|`)
/// with weights `|∂_k φ|`. Nodes the sweeps do not reach get zero.
pub fn extend_speed(phi: &ScalarField, seeds: &[(usize, f64)], sweeps: usize) -> Vec<f64> {
    let g = *phi.grid();
    let p = phi.values();
    let m = g.node_dims();
    let mut v = vec![0.0; g.node_count()];
    let mut known = vec![false; g.node_count()];
    let mut fixed = vec![false; g.node_count()];
    for &(i, val) in seeds {
        v[i] = val;
        known[i] = true;
        fixed[i] = true;
    }
    for _ in 0..sweeps {
        let next: Vec<(f64, bool)> = (0..g.node_count())
            .into_par_iter()
            .map(|i| {
                if fixed[i] {
                    return (v[i], true);
                }
                let ijk = g.node_ijk(i);
                let (mut num, mut den) = (0.0, 0.0);
                for k in 0..g.dim() {
                    let s = g.node_stride(k);
                    for (ok, j) in [(ijk[k] > 0, i.wrapping_sub(s)), (ijk[k] + 1 < m[k], i + s)] {
                        if ok && known[j] && p[j].abs() < p[i].abs() {
                            let w = (p[i] - p[j]).abs();
                            num += w * v[j];
                            den += w;
                        }
                    }
                }
                if den > 0.0 {
                    (num / den, true)
                } else {
                    (v[i], known[i])
                }
            })
            .collect();
        for (i, (val, k)) in next.into_iter().enumerate() {
            v[i] = val;
            known[i] = k;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Point;

    fn circle(r: f64, n: usize) -> ScalarField {
        let g = Grid::centered(2, 1.5, n).unwrap();
        ScalarField::from_fn(g, move |p| r - p.norm())
    }

    #[test]
    fn uniform_speed_moves_circle_by_vt() {
        let phi = circle(0.6, 128);
        let speed = vec![1.0; phi.grid().node_count()];
        let mut cur = phi;
        for _ in 0..10 {
            cur = advance(&cur, &speed, 0.01);
        }
        let at = cur.interpolate(&Point::new(0.7, 0.0, 0.0));
        assert!(at.abs() < 2e-3, "{at}");
    }

    #[test]
    fn reinit_restores_distance_and_keeps_zero_level() {
        let g = Grid::centered(2, 1.5, 96).unwrap();
        let squashed = ScalarField::from_fn(g, |p| (0.8 - p.norm()) * (1.0 + 3.0 * p[0].powi(2)));
        let re = reinitialize(&squashed);
        for p in [Point::new(0.3, 0.1, 0.0), Point::new(-1.2, 0.4, 0.0), Point::new(0.0, 1.3, 0.0)] {
            let exact = 0.8 - p.norm();
            assert!((re.interpolate(&p) - exact).abs() < 2.0 * g.h(), "{p:?}");
        }
        let on = Point::new(0.8, 0.0, 0.0);
        assert!(re.interpolate(&on).abs() < 0.1 * g.h());
    }

    #[test]
    fn extension_is_constant_along_normals() {
        let phi = circle(0.7, 96);
        let g = *phi.grid();
        let seeds: Vec<(usize, f64)> = interface_nodes(&phi)
            .into_iter()
            .map(|i| {
                let q = g.node_point(i);
                (i, q[1].atan2(q[0]).cos())
            })
            .collect();
        let v = extend_speed(&phi, &seeds, 10);
        let probe = g.node_index(g.nearest_node(&Point::new(0.7 + 6.0 * g.h(), 0.0, 0.0)));
        assert!((v[probe] - 1.0).abs() < 0.05, "{}", v[probe]);
        let far = g.node_index(g.nearest_node(&Point::new(1.45, 1.45, 0.0)));
        assert_eq!(v[far], 0.0);
    }

    #[test]
    fn eikonal_update_matches_diagonal_plane() {
        let h = 0.1;
        let u = eikonal_update(vec![0.0, 0.0], h);
        assert!((u - h / 2f64.sqrt()).abs() < 1e-12);
    }
}
