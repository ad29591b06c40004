//! Torsion problem on the unit disk against the exact `(1 − |x|²)/4`.

use shapelab::calculus::{ProblemData, ScalarData, StateSystem};
use shapelab::{DomainRep, Grid, Point};

fn main() -> shapelab::Result<()> {
    for n in [64, 128, 256] {
        let g = Grid::centered(2, 1.25, n)?;
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let one = ScalarData::Constant(1.0);
        let data = ProblemData::new(&g, one.clone(), one, ScalarData::Constant(0.25))?;
        let u = StateSystem::new(&dom, &data, 1e-10)?.u_field();
        let err = (0..g.node_count())
            .filter(|&i| dom.inside(i))
            .map(|i| (u.values()[i] - (1.0 - g.node_point(i).norm_squared()) / 4.0).abs())
            .fold(0.0, f64::max);
        println!("h = {:.5}  max error = {err:.3e}", g.h());
    }
    Ok(())
}
