//! Lipschitz, non-degeneracy, density and level-set measurements at the free boundary.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::calculus::{ProblemData, StateSystem};
use crate::domain::DomainRep;
use crate::elliptic::crossings;
use crate::error::Result;
use crate::field::ScalarField;
use crate::grid::Point;
use crate::quadrature::{ball_sample_points, sampled_ball_integral, BallRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOptions {
    /// Boundary points sampled evenly along the crossing list.
    pub points: usize,
    /// Largest radius of the dyadic ladder `4h, 8h, …`.
    pub r_max: f64,
    /// Thresholds `t` of the level-set measure `|{0 < u < rt} ∩ B_r|`.
    pub t_values: Vec<f64>,
    pub tol: f64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { points: 16, r_max: 0.25, t_values: vec![0.1, 0.2, 0.3, 0.4], tol: 1e-10 }
    }
}

/// Worst values over the sampled points at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRow {
    pub r: f64,
    /// `min_x sup_{B_r(x)} u / r`.
    pub nondegeneracy: f64,
    pub density_min: f64,
    pub density_max: f64,
    /// Mean over points of the least-squares slope of
    /// `|{0 < u < rt} ∩ B_r| / |B_r|` against `t`, with `{u > 0}` read
    /// from the level set.
    pub level_slope: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub empty: bool,
    pub points: Vec<Point>,
    /// `max |u_i − u_j| / h` over grid edges.
    pub lipschitz: f64,
    pub rows: Vec<ScaleRow>,
    pub violations: Vec<String>,
}

impl DiagnosticsReport {
    pub fn min_nondegeneracy(&self) -> f64 {
        self.rows.iter().map(|r| r.nondegeneracy).fold(f64::INFINITY, f64::min)
    }

    pub fn density_range(&self) -> (f64, f64) {
        self.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.density_min), hi.max(r.density_max))
        })
    }

    pub fn row_at(&self, r: f64) -> Option<&ScaleRow> {
        self.rows.iter().min_by(|a, b| (a.r - r).abs().total_cmp(&(b.r - r).abs()))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,nondegeneracy,density_min,density_max,level_slope,samples,lipschitz")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.6e}",
                r.r, r.nondegeneracy, r.density_min, r.density_max, r.level_slope, r.samples, self.lipschitz
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

fn lipschitz(u: &ScalarField) -> f64 {
    let g = *u.grid();
    let m = g.node_dims();
    let v = u.values();
    (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let ijk = g.node_ijk(i);
            (0..g.dim())
                .filter(|&k| ijk[k] + 1 < m[k])
                .map(|k| (v[i + g.node_stride(k)] - v[i]).abs() / g.h())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_{B} u` over `4^d` sub-samples per cell of the interpolant.
fn ball_sup(u: &ScalarField, ball: &BallRegion) -> f64 {
    ball_sample_points(u.grid(), ball, 4)
        .iter()
        .map(|p| u.interpolate(p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Least-squares slope through the origin of `m(t)` against `t`.
fn slope(ts: &[f64], ms: &[f64]) -> f64 {
    let num: f64 = ts.iter().zip(ms).map(|(t, m)| t * m).sum();
    let den: f64 = ts.iter().map(|t| t * t).sum();
    num / den
}

/// Measures the regularity constants of the state `u` of `dom` at sampled
/// boundary points over a dyadic radius ladder.
pub fn diagnostics(dom: &DomainRep, data: &ProblemData, opts: &DiagnosticsOptions) -> DiagnosticsReport {
    let mut report = DiagnosticsReport::default();
    let sys = match StateSystem::new(dom, data, opts.tol) {
        Ok(s) => s,
        Err(e) => {
            report.empty = dom.is_empty();
            report.violations.push(if report.empty { "empty domain".into() } else { format!("state solve: {e}") });
            return report;
        }
    };
    let u = sys.u_field();
    let g = *dom.grid();
    let h = g.h();
    let cs = crossings(dom);
    let count = opts.points.min(cs.len()).max(1);
    report.points = (0..count).map(|i| cs[i * cs.len() / count].point).collect();
    report.lipschitz = lipschitz(&u);
    let dim = g.dim();

    let mut r = 4.0 * h;
    while r <= opts.r_max * (1.0 + 1e-12) {
        let balls: Vec<BallRegion> = report
            .points
            .iter()
            .filter_map(|p| BallRegion::new(*p, r).ok())
            .filter(|b| b.check_inside(&g).is_ok())
            .collect();
        if balls.is_empty() {
            break;
        }
        let per: Vec<(f64, f64, f64)> = balls
            .par_iter()
            .map(|b| {
                let meas = b.measure(dim);
                let nd = ball_sup(&u, b) / r;
                let vf = dom.volfrac_in_ball(&b.center, r, 4);
                let density = vf.iter().sum::<f64>() * g.cell_volume() / meas;
                let ms: Vec<f64> = opts
                    .t_values
                    .iter()
                    .map(|t| {
                        let top = r * t;
                        sampled_ball_integral(&g, b, 4, |p| {
                            let inside = dom.phi().interpolate(p) > 0.0;
                            let val = u.interpolate(p);
                            if inside && val < top { 1.0 } else { 0.0 }
                        }) / meas
                    })
                    .collect();
                (nd, density, slope(&opts.t_values, &ms))
            })
            .collect();
        let row = ScaleRow {
            r,
            nondegeneracy: per.iter().map(|x| x.0).fold(f64::INFINITY, f64::min),
            density_min: per.iter().map(|x| x.1).fold(f64::INFINITY, f64::min),
            density_max: per.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
            level_slope: per.iter().map(|x| x.2).sum::<f64>() / per.len() as f64,
            samples: per.len(),
        };
        if !(row.nondegeneracy > 0.0) {
            report.violations.push(format!("non-degeneracy ratio {:.3e} at r = {r:.3e}", row.nondegeneracy));
        }
        if !(row.density_min > 0.0 && row.density_max < 1.0) {
            report
                .violations
                .push(format!("density [{:.3}, {:.3}] at r = {r:.3e}", row.density_min, row.density_max));
        }
        if !(row.level_slope.is_finite() && row.level_slope > 0.0) {
            report.violations.push(format!("level-set slope {:.3e} at r = {r:.3e}", row.level_slope));
        }
        report.rows.push(row);
        r *= 2.0;
    }
    if !report.lipschitz.is_finite() {
        report.violations.push("Lipschitz quotient not finite".into());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::ScalarData;
    use crate::grid::Grid;

    #[test]
    fn empty_domain_is_flagged() {
        let g = Grid::centered(2, 1.0, 32).unwrap();
        let dom = DomainRep::from_fn(g, |_| -1.0);
        let c = ScalarData::Constant(1.0);
        let data = ProblemData::new(&g, c.clone(), c.clone(), ScalarData::Constant(0.25)).unwrap();
        let rep = diagnostics(&dom, &data, &DiagnosticsOptions::default());
        assert!(rep.empty);
        assert!(rep.rows.is_empty());
        assert_eq!(rep.violations, vec!["empty domain".to_string()]);
    }

    #[test]
    fn slope_fit_is_exact_on_lines() {
        let ts = [0.1, 0.2, 0.4];
        let ms = [0.3, 0.6, 1.2];
        assert!((slope(&ts, &ms) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn torsion_disk_has_half_densities_and_linear_growth() {
        // u = (1 − |x|²)/4 on B_1 with f = 1: |∇u| = 1/2 on the circle.
        let g = Grid::centered(2, 1.25, 160).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let c = ScalarData::Constant(1.0);
        let data = ProblemData::new(&g, c.clone(), c.clone(), ScalarData::Constant(0.25)).unwrap();
        let opts = DiagnosticsOptions { r_max: 0.25, ..Default::default() };
        let rep = diagnostics(&dom, &data, &opts);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert!((rep.lipschitz - 0.5).abs() < 0.03, "{}", rep.lipschitz);
        let (lo, hi) = rep.density_range();
        assert!(lo > 0.4 && hi < 0.6, "{lo} {hi}");
        assert!(rep.min_nondegeneracy() > 0.4, "{}", rep.min_nondegeneracy());
        // |{0 < u < rt} ∩ B_r| ≈ 2r · rt/|∇u| in 2D, so the slope is 4/π.
        let s = rep.row_at(0.25).unwrap().level_slope;
        assert!((s - 4.0 / std::f64::consts::PI).abs() < 0.2, "{s}");
    }
}
