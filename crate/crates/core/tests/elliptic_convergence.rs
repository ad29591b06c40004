use std::f64::consts::PI;

use shapelab::elliptic::{solve_dirichlet, DirichletProblem, NodeClass, Stencil};
use shapelab::{DomainRep, Grid, Point, ScalarField};

fn exact(p: &Point) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

/// Max errors (interior |x| < 0.8, boundary band |x| ≥ 0.8) at spacing h.
fn errors(h: f64) -> (f64, f64) {
    let cells = (2.5 / h).round() as usize;
    let g = Grid::centered(2, 1.25, cells).unwrap();
    let dom = DomainRep::ball(g, Point::zeros(), 1.0);
    let f = ScalarField::from_fn(g, |p| 2.0 * PI * PI * exact(p));
    let data = ScalarField::from_fn(g, exact);
    let u = solve_dirichlet(&DirichletProblem::new(&dom, &f).with_boundary_data(&data)).unwrap();
    let st = Stencil::new(&dom);
    let (mut inner, mut band) = (0.0f64, 0.0f64);
    for (n, c) in st.class().iter().enumerate() {
        if let NodeClass::Unknown(_) = c {
            let p = g.node_point(n);
            let e = (u.values()[n] - exact(&p)).abs();
            if p.norm() < 0.8 {
                inner = inner.max(e);
            } else {
                band = band.max(e);
            }
        }
    }
    (inner, band)
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let e: Vec<(f64, f64)> = [64.0, 128.0, 256.0].iter().map(|n| errors(1.0 / n)).collect();
    for w in e.windows(2) {
        let ri = w[0].0 / w[1].0;
        let rb = w[0].1 / w[1].1;
        assert!(ri >= 1.9, "interior ratio {ri} ({e:?})");
        assert!(rb >= 1.0, "band ratio {rb} ({e:?})");
    }
}
