//! Level-set descent for Gaussian data; the optimum is the ball whose
//! radius solves `1 − exp(−4R²) = R`.

use shapelab::calculus::{ProblemData, ScalarData};
use shapelab::optimizer::{optimize, Mode, OptimizeConfig};
use shapelab::{DomainRep, Grid, Point};

fn main() -> shapelab::Result<()> {
    let g = Grid::centered(2, 1.5, 128)?;
    let gauss = ScalarData::Gaussian { amp: 1.0, center: Point::zeros(), width: 0.5 };
    let data = ProblemData::new(&g, gauss.clone(), gauss, ScalarData::Constant(1.0 / 64.0))?;
    let mut cfg = OptimizeConfig::new(Mode::General, data, DomainRep::ball(g, Point::zeros(), 0.8));
    cfg.stop_tol = 1e-9;
    cfg.max_steps = 120;
    cfg.coarse_levels = 1;
    let (dom, trace) = optimize(&cfg)?;
    for r in trace.records.iter().step_by(20) {
        println!("h = {:.4}  step {:3}  F = {:.8}  max|V| = {:.2e}", r.h, r.step, r.energy, r.max_speed);
    }
    println!("radius = {:.5}", (dom.volume() / std::f64::consts::PI).sqrt());
    Ok(())
}
