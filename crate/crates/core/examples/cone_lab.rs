//! One-homogeneous cones over caps, and the stability form on the
//! half-space and on a narrow Dirichlet cap.

use shapelab::cone::{cjk_form, dirichlet_cap, scan_caps, solve_cap, TestFamily};

fn main() -> shapelab::Result<()> {
    for d in 2..=6 {
        let found = scan_caps(d, 0.1, 3.0, 59)?;
        let half = solve_cap(d, std::f64::consts::FRAC_PI_2)?;
        let spec = half.spec().expect("half-space");
        let rep = cjk_form(spec, &TestFamily::standard(d))?;
        println!("d = {d}: caps on the scan grid = {}, half-space min = {:.4e} ({})", found.len(), rep.min_value, rep.verdict());
    }
    let narrow = dirichlet_cap(3, 0.3)?;
    let rep = cjk_form(&narrow, &TestFamily::standard(3))?;
    println!("d = 3, theta0 = 0.3: homogeneity {:.3}, min = {:.4e} ({})", narrow.homogeneity, rep.min_value, rep.verdict());
    Ok(())
}
