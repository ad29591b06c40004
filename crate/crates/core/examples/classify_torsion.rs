//! Blow-up classification of boundary points of the torsion disk.

use shapelab::blowup::{boundary_points, classify_boundary};
use shapelab::calculus::{ProblemData, ScalarData};
use shapelab::{DomainRep, Grid, Point};

fn main() -> shapelab::Result<()> {
    let g = Grid::centered(2, 1.25, 160)?;
    let dom = DomainRep::ball(g, Point::zeros(), 1.0);
    let one = ScalarData::Constant(1.0);
    let data = ProblemData::new(&g, one.clone(), one, ScalarData::Constant(0.25))?;
    let cls = classify_boundary(&dom, &data, &boundary_points(&dom, 6), &[], 1e-10)?;
    println!("lambda = {:.6}", cls.lambda);
    for r in cls.reports() {
        println!(
            "x0 = ({:+.3}, {:+.3})  nu = ({:+.3}, {:+.3})  alpha*beta = {:.4}  fit = {:.3}  {}",
            r.center[0], r.center[1], r.best_nu[0], r.best_nu[1], r.alpha * r.beta, r.fit_error, r.verdict.as_str()
        );
    }
    Ok(())
}
