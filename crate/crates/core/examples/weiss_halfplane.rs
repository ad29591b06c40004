//! Weiss energy of the half-plane solution `u = x₁⁺` is `Λ|B₁|/2` at every scale.

use shapelab::blowup::weiss_trace;
use shapelab::{Grid, Point, ScalarField};

fn main() -> shapelab::Result<()> {
    let g = Grid::centered(2, 1.0, 256)?;
    let u = ScalarField::from_fn(g, |p| p[0]);
    let radii: Vec<f64> = (0..6).map(|k| 0.6 * 0.75f64.powi(k)).collect();
    let tr = weiss_trace(&u, &Point::zeros(), 1.0, &radii)?;
    for ((r, w), d) in tr.radii.iter().zip(&tr.w).zip(&tr.d) {
        println!("r = {r:.4}  W = {w:.6}  D = {d:.2e}");
    }
    println!("pi/2 = {:.6}  spread = {:.2e}", std::f64::consts::FRAC_PI_2, tr.spread());
    Ok(())
}
