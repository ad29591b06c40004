//! Flow maps `∂_t Φ_t = ξ(Φ_t)` and their Jacobians.

use nalgebra::Matrix3;

use crate::domain::DomainRep;
use crate::field::ScalarField;
use crate::grid::Point;

use super::vfield::VectorFieldSpec;

/// Classical RK4 integration of the flow with a fixed number of steps.
pub struct FlowMap<'a> {
    pub spec: &'a dyn VectorFieldSpec,
    pub steps: usize,
}

impl<'a> FlowMap<'a> {
    pub fn new(spec: &'a dyn VectorFieldSpec) -> Self {
        Self { spec, steps: 16 }
    }

    fn outside_support(&self, x: &Point, t: f64) -> bool {
        match self.spec.support() {
            // ξ vanishes there, so the trajectory is stationary
            Some(b) => (x - b.center).norm() >= b.radius * (1.0 + 1e-12),
            None => t == 0.0,
        }
    }

    /// `Φ_t(x)`.
    pub fn map(&self, x: &Point, t: f64) -> Point {
        self.map_with_jacobian(x, t).0
    }

    /// `Φ_t(x)` and `DΦ_t(x)`.
    pub fn map_with_jacobian(&self, x: &Point, t: f64) -> (Point, Matrix3<f64>) {
        if t == 0.0 || self.outside_support(x, t) {
            return (*x, Matrix3::identity());
        }
        let dt = t / self.steps as f64;
        let mut y = *x;
        let mut jm = Matrix3::identity();
        let rhs = |y: &Point, jm: &Matrix3<f64>| {
            let jet = self.spec.jet(y);
            (jet.value, jet.jac * jm)
        };
        for _ in 0..self.steps {
            let (k1, l1) = rhs(&y, &jm);
            let (k2, l2) = rhs(&(y + 0.5 * dt * k1), &(jm + 0.5 * dt * l1));
            let (k3, l3) = rhs(&(y + 0.5 * dt * k2), &(jm + 0.5 * dt * l2));
            let (k4, l4) = rhs(&(y + dt * k3), &(jm + dt * l3));
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            jm += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        (y, jm)
    }
}

/// `Ω_t = Φ_t(Ω)` as the level set `φ ∘ Φ_{-t}`, sampled at the nodes.
pub fn advect_domain(dom: &DomainRep, spec: &dyn VectorFieldSpec, t: f64) -> DomainRep {
    let flow = FlowMap::new(spec);
    let phi = dom.phi();
    let g = *dom.grid();
    let vals: Vec<f64> = (0..g.node_count())
        .map(|i| {
            let p = g.node_point(i);
            let back = flow.map(&p, -t);
            // nodes the flow does not move keep their exact value
            if back == p {
                phi.values()[i]
            } else {
                phi.interpolate(&back)
            }
        })
        .collect();
    DomainRep::new(ScalarField::new(g, vals).expect("finite level set"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::vfield::Bump;
    use crate::grid::Grid;

    #[test]
    fn identity_at_time_zero_and_outside_support() {
        let b = Bump::axis(2, Point::zeros(), 0.5, 0, 1.0);
        let f = FlowMap::new(&b);
        let x = Point::new(0.1, 0.2, 0.0);
        assert_eq!(f.map(&x, 0.0), x);
        let far = Point::new(0.9, 0.0, 0.0);
        assert_eq!(f.map(&far, 0.3), far);
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let b = Bump::rotational(2, Point::new(0.1, 0.0, 0.0), 0.8, 1.5);
        let f = FlowMap::new(&b);
        let x = Point::new(0.3, -0.2, 0.0);
        let y = f.map(&f.map(&x, 0.2), -0.2);
        assert!((x - y).norm() < 1e-9);
    }

    #[test]
    fn jacobian_matches_differences_and_liouville() {
        let b = Bump::radial(2, Point::zeros(), 0.9, 0.8);
        let f = FlowMap::new(&b);
        let x = Point::new(0.2, 0.3, 0.0);
        let t = 0.1;
        let (_, jm) = f.map_with_jacobian(&x, t);
        let e = 1e-6;
        for j in 0..2 {
            let mut d = Point::zeros();
            d[j] = e;
            let col = (f.map(&(x + d), t) - f.map(&(x - d), t)) / (2.0 * e);
            for k in 0..2 {
                assert!((col[k] - jm[(k, j)]).abs() < 1e-7);
            }
        }
        assert!((jm[(2, 2)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn advected_disk_translates() {
        let g = Grid::centered(2, 1.5, 96).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 0.5);
        // ξ ≈ e₁ on the disk, so its centroid moves by about t
        let b = Bump::axis(2, Point::zeros(), 1.4, 0, 1.0);
        let t = 0.05;
        let moved = advect_domain(&dom, &b, t);
        assert!((moved.volume() - dom.volume()).abs() < 0.02 * dom.volume());
        let c: f64 = (0..g.cell_count())
            .map(|c| moved.volfrac()[c] * g.cell_center(g.cell_ijk(c))[0])
            .sum::<f64>()
            * g.cell_volume()
            / moved.volume();
        assert!(c > 0.5 * t && c < 1.5 * t, "{c}");
    }
}
