//! Regularity diagnostics and minimality margins on the Gaussian ball.

use shapelab::calculus::{ProblemData, ScalarData};
use shapelab::optimizer::minimality::Probe;
use shapelab::optimizer::{diagnostics, DiagnosticsOptions, Direction};
use shapelab::{BallRegion, DomainRep, Grid, Point};

fn main() -> shapelab::Result<()> {
    let g = Grid::centered(2, 1.5, 128)?;
    let gauss = ScalarData::Gaussian { amp: 1.0, center: Point::zeros(), width: 0.5 };
    let data = ProblemData::new(&g, gauss.clone(), gauss, ScalarData::Constant(1.0 / 64.0))?;
    let dom = DomainRep::ball(g, Point::zeros(), 0.978);
    let rep = diagnostics(&dom, &data, &DiagnosticsOptions::default());
    for r in &rep.rows {
        println!(
            "r = {:.4}  nondegeneracy = {:.4}  density = [{:.3}, {:.3}]  level slope = {:.3}",
            r.r, r.nondegeneracy, r.density_min, r.density_max, r.level_slope
        );
    }
    let probe = Probe::new(&dom, &data, 1e-10)?;
    let ball = BallRegion::new(Point::new(0.978, 0.0, 0.0), 0.2)?;
    for dir in [Direction::Outward, Direction::Inward] {
        println!("{dir:?} margin = {:.3e}", probe.margin(&ball, dir)?);
    }
    Ok(())
}
