use shapelab::calculus::{
    advect_domain, linearized_state, Bump, FlowMap, Order, ProblemData, ScalarData, StateSystem,
    TaylorMode, VariationOptions, VectorFieldSpec,
};
use shapelab::elliptic::{solve_dirichlet, DirichletProblem};
use shapelab::{DomainRep, Grid, Point, ScalarField};

/// Radius of the stationary ball for `f = g = exp(−4|x|²)`, `Q = 1/64`:
/// the root of `1 − exp(−4R²) = R` near 1, by bisection.
fn gaussian_radius() -> f64 {
    let (mut lo, mut hi) = (0.5f64, 1.2f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - (-4.0 * mid * mid).exp() > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gaussian_data(g: &Grid) -> ProblemData {
    let gauss = ScalarData::Gaussian { amp: 1.0, center: Point::zeros(), width: 0.5 };
    ProblemData::new(g, gauss.clone(), gauss, ScalarData::Constant(1.0 / 64.0)).unwrap()
}

fn bump_family(r: f64, count: usize) -> Vec<Bump> {
    (0..count)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64 + 0.3;
            let c = Point::new(r * a.cos(), r * a.sin(), 0.0);
            let rho = 0.3 + 0.1 * (k % 3) as f64;
            match k % 4 {
                0 => Bump::radial(2, c, rho, 1.0),
                1 => Bump::directional(2, c, rho, Point::new(a.cos(), a.sin(), 0.0)),
                2 => Bump::axis(2, c, rho, k % 2, 1.0),
                _ => Bump::rotational(2, c, rho, 1.0),
            }
        })
        .collect()
}

#[test]
fn linearized_state_matches_transport_quotient() {
    let g = Grid::centered(2, 1.0, 256).unwrap();
    let dom = DomainRep::from_fn(g, |p| 0.3 - p[0]);
    let one = ScalarField::constant(g, 1.0);
    let u = solve_dirichlet(&DirichletProblem::new(&dom, &one).with_tol(1e-12)).unwrap();
    let b = Bump::axis(2, Point::new(0.3, 0.1, 0.0), 0.4, 0, 1.0);
    let du = linearized_state(&u, &dom, &ScalarData::Constant(1.0), &b, Order::First).unwrap();
    let flow = FlowMap::new(&b);
    let mut errs = Vec::new();
    for t in [0.02, 0.01] {
        let moved = advect_domain(&dom, &b, t);
        let ut = solve_dirichlet(&DirichletProblem::new(&moved, &one).with_tol(1e-12)).unwrap();
        let mut worst = 0.0f64;
        for n in 0..g.node_count() {
            if dom.phi().values()[n] < 4.0 * g.h() {
                continue;
            }
            let q = (ut.interpolate(&flow.map(&g.node_point(n), t)) - u.values()[n]) / t;
            worst = worst.max((q - du.values()[n]).abs());
        }
        // O(t) from the quotient plus O(h) from the two discrete domains
        assert!(worst < t + g.h(), "t = {t}: {worst}");
        errs.push(worst);
    }
    assert!(errs[1] < errs[0]);
}

#[test]
fn volume_and_surface_forms_agree() {
    let mut gaps = Vec::new();
    for cells in [96, 192] {
        let g = Grid::centered(2, 1.5, cells).unwrap();
        let dom = DomainRep::ball(g, Point::new(0.05, -0.02, 0.0), 0.7);
        let sys = StateSystem::new(&dom, &gaussian_data(&g), 1e-12).unwrap();
        let b = Bump::directional(2, Point::new(0.6, 0.3, 0.0), 0.5, Point::new(1.0, 0.5, 0.0));
        let fv = sys.first_variation(&b).unwrap();
        assert!(fv.volume.abs() > 1e-3);
        gaps.push((fv.volume - fv.surface).abs() / fv.volume.abs());
    }
    assert!(gaps.iter().all(|&e| e < 0.05), "{gaps:?}");
    assert!(gaps[1] < gaps[0] * 0.9 || gaps[1] < 5e-3, "{gaps:?}");
}

#[test]
fn stationary_ball_is_a_stable_critical_point() {
    let g = Grid::centered(2, 1.5, 192).unwrap();
    let h = g.h();
    let r = gaussian_radius();
    let dom = DomainRep::ball(g, Point::zeros(), r);
    let sys = StateSystem::new(&dom, &gaussian_data(&g), 1e-12).unwrap();
    let opts = VariationOptions { ladder: vec![], ..Default::default() };
    for b in bump_family(r, 20) {
        let rep = sys.second_variation(&b, &opts).unwrap();
        assert!(rep.delta_f.abs() < 10.0 * h, "δF = {}", rep.delta_f);
        assert!(rep.delta2_f > -10.0 * h, "δ²F = {}", rep.delta2_f);
    }
}

#[test]
fn advected_ladder_tracks_the_pullback() {
    let g = Grid::centered(2, 1.5, 128).unwrap();
    let dom = DomainRep::ball(g, Point::zeros(), 0.8);
    let sys = StateSystem::new(&dom, &gaussian_data(&g), 1e-12).unwrap();
    let b = Bump::radial(2, Point::new(0.8, 0.0, 0.0), 0.4, 1.0);
    let pull = sys.second_variation(&b, &VariationOptions::default()).unwrap();
    let adv = sys
        .second_variation(&b, &VariationOptions { mode: TaylorMode::Advected, ..Default::default() })
        .unwrap();
    for (p, a) in pull.taylor.iter().zip(&adv.taylor) {
        let dp = p.energy - pull.f0;
        let da = a.energy - adv.f0;
        assert!((dp - da).abs() < 0.2 * dp.abs() + 1e-4, "{p:?} {a:?}");
    }
    assert!(b.support().is_some());
}
