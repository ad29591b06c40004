use shapelab::calculus::{ProblemData, ScalarData};
use shapelab::optimizer::{optimize, optimize_with_state, Mode, OptimizeConfig};
use shapelab::{DomainRep, Grid, Point};

/// Root of `1 − exp(−4R²) = R` near 1: the stationary radius for
/// `f = g = exp(−4|x|²)`, `Q = 1/64`.
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

fn gaussian(center: Point, amp: f64) -> ScalarData {
    ScalarData::Gaussian { amp, center, width: 0.5 }
}

fn gaussian_config(g: Grid, center: Point) -> OptimizeConfig {
    let data = ProblemData::new(&g, gaussian(center, 1.0), gaussian(center, 1.0), ScalarData::Constant(1.0 / 64.0)).unwrap();
    let mut cfg = OptimizeConfig::new(Mode::General, data, DomainRep::ball(g, center, 0.8));
    cfg.stop_tol = 1e-9;
    cfg.max_steps = 120;
    cfg.coarse_levels = 1;
    cfg
}

fn radius(dom: &DomainRep) -> f64 {
    (dom.volume() / std::f64::consts::PI).sqrt()
}

#[test]
fn gaussian_descent_finds_the_stationary_ball() {
    let g = Grid::centered(2, 1.5, 128).unwrap();
    let cfg = gaussian_config(g, Point::zeros());
    let (dom, trace) = optimize(&cfg).unwrap();
    let r = radius(&dom);
    assert!((r - gaussian_radius()).abs() < 2.0 * g.h(), "{r} vs {}", gaussian_radius());
    let h = g.h();
    assert!(trace.worst_increase() <= 10.0 * (h * h + cfg.tol), "{}", trace.worst_increase());
    assert!(trace.records.iter().all(|r| r.energy.is_finite()));
    // Coarse records come first.
    assert!(trace.records[0].h > h && trace.last().unwrap().h == h);
}

#[test]
fn bernoulli_mode_matches_general_mode() {
    // f = 2λ²g with λ = 1; Q = 1/32 keeps the stationary radius of the
    // Gaussian test.
    let g = Grid::centered(2, 1.5, 128).unwrap();
    let q = ScalarData::Constant(1.0 / 32.0);
    let data = ProblemData::new(&g, gaussian(Point::zeros(), 2.0), gaussian(Point::zeros(), 1.0), q).unwrap();
    let init = DomainRep::ball(g, Point::zeros(), 0.8);
    let mut general = OptimizeConfig::new(Mode::General, data.clone(), init.clone());
    general.stop_tol = 1e-9;
    general.max_steps = 120;
    general.coarse_levels = 1;
    let bernoulli = OptimizeConfig { mode: Mode::Bernoulli { lam: 1.0 }, ..general.clone() };
    let (a, _) = optimize(&general).unwrap();
    let (b, _) = optimize(&bernoulli).unwrap();
    let sym = a.phi().values().iter().zip(b.phi().values()).filter(|(x, y)| (**x > 0.0) != (**y > 0.0)).count() as f64
        * g.cell_volume();
    assert!(sym <= 0.05 * a.volume(), "{sym} vs {}", a.volume());
    assert!((radius(&b) - gaussian_radius()).abs() < 2.0 * g.h());
}

#[test]
fn translation_by_a_grid_vector_is_exact() {
    // The shift is a multiple of every multigrid coarsening, so both runs
    // see the same hierarchy.
    let g = Grid::centered(2, 2.5, 160).unwrap();
    let (si, sj) = (32usize, 0usize);
    let shift = Point::new(si as f64 * g.h(), sj as f64 * g.h(), 0.0);
    let mut a = gaussian_config(g, Point::zeros());
    let mut b = gaussian_config(g, shift);
    a.max_steps = 30;
    b.max_steps = 30;
    let (da, ta) = optimize(&a).unwrap();
    let (db, tb) = optimize(&b).unwrap();
    assert_eq!(ta.records.len(), tb.records.len());
    let m = g.node_dims();
    let mut compared = 0;
    for j in 0..m[1] - sj {
        for i in 0..m[0] - si {
            let pa = da.phi().at([i, j, 0]);
            let pb = db.phi().at([i + si, j + sj, 0]);
            if pa.abs() < 0.3 {
                assert_eq!(pa.to_bits(), pb.to_bits(), "node ({i}, {j})");
                compared += 1;
            }
        }
    }
    assert!(compared > 100);
}

#[test]
fn larger_q_shrinks_the_optimum() {
    let g = Grid::centered(2, 1.5, 64).unwrap();
    let mut radii = Vec::new();
    for q in [1.0 / 64.0, 1.0 / 48.0] {
        let mut cfg = gaussian_config(g, Point::zeros());
        cfg.data = ProblemData::new(&g, gaussian(Point::zeros(), 1.0), gaussian(Point::zeros(), 1.0), ScalarData::Constant(q))
            .unwrap();
        radii.push(radius(&optimize(&cfg).unwrap().0));
    }
    assert!(radii[1] < radii[0] - 2.0 * g.h(), "{radii:?}");
}

#[test]
fn heat_mode_balances_flux_against_lambda() {
    // Hole K of radius ρ in the unit box with u = v = 1 on the faces:
    // |∇u|² = Λ on ∂K, a radial minimum for ρ > R/e.
    let g = Grid::centered(2, 1.0, 96).unwrap();
    let c = ScalarData::Constant(1.0);
    let data = ProblemData::new(&g, c.clone(), c.clone(), c.clone()).unwrap();
    let init = DomainRep::from_fn(g, |p| p.norm() - 0.5);
    let mut cfg = OptimizeConfig::new(Mode::Heat { boundary: c, lam: 8.0 }, data, init);
    cfg.stop_tol = 1e-9;
    cfg.max_steps = 80;
    let (dom, trace, snap) = optimize_with_state(&cfg).unwrap();
    let first = trace.records[0].energy;
    assert!(trace.last().unwrap().energy < first);
    assert!(trace.worst_increase() <= 10.0 * (g.h() * g.h() + cfg.tol));
    // The hole stays away from the faces and the mean flux settles near Λ.
    let free: Vec<f64> = snap.speed.iter().zip(&snap.pinned).filter(|(_, &p)| !p).map(|(v, _)| *v).collect();
    let mean = free.iter().sum::<f64>() / free.len() as f64;
    assert!(mean.abs() < 0.1 * 8.0, "{mean}");
    let hole = 4.0 - dom.volume();
    assert!(hole > 0.5 && hole < 2.0, "{hole}");
}
