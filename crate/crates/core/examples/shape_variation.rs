//! First and second variation of the radial energy along a bump, with the
//! Taylor remainder ladder.

use shapelab::calculus::{second_variation, Bump, ProblemData, ScalarData, VariationOptions};
use shapelab::{DomainRep, Grid, Point};

fn main() -> shapelab::Result<()> {
    let g = Grid::centered(2, 2.0, 128)?;
    let one = ScalarData::Constant(1.0);
    let data = ProblemData::new(&g, one.clone(), one, ScalarData::Constant(0.25))?;
    let dom = DomainRep::ball(g, Point::zeros(), 0.8);
    let xi = Bump::radial(2, Point::new(0.8, 0.0, 0.0), 0.5, 1.0);
    let rep = second_variation(&dom, &data, &xi, &VariationOptions::default())?;
    println!("F = {:.8}  dF = {:.6e}  d2F = {:.6e}", rep.f0, rep.delta_f, rep.delta2_f);
    for (row, e) in rep.taylor.iter().zip(std::iter::once(f64::NAN).chain(rep.remainder_exponents())) {
        println!("t = {:.4}  remainder = {:.3e}  exponent = {e:.2}", row.t, row.remainder);
    }
    Ok(())
}
