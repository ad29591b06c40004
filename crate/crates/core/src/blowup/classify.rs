//! Blow-up classification of free boundary points of a computed domain.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::calculus::{ProblemData, StateSystem};
use crate::domain::DomainRep;
use crate::elliptic::crossings;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Point;

use super::fit::{halfplane_fit_with, BoundaryPointReport, Verdict, TAU};
use super::weiss::{weiss_trace, WeissTrace};
use super::rescale;

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub r: f64,
    pub weiss: f64,
    pub homogeneity: f64,
    pub fit: BoundaryPointReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointClassification {
    /// Fit at the radius with the smallest homogeneity defect.
    pub report: BoundaryPointReport,
    pub trace: WeissTrace,
    pub ladder: Vec<LadderRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub points: Vec<PointClassification>,
    /// Median of `u/v` in the band `h < φ < 4h`.
    pub lambda: f64,
    /// `max(u/v) / min(u/v)` in the same band.
    pub ratio_spread: f64,
}

impl Classification {
    pub fn reports(&self) -> Vec<&BoundaryPointReport> {
        self.points.iter().map(|p| &p.report).collect()
    }

    pub fn all_regular(&self) -> bool {
        self.points.iter().all(|p| p.report.verdict == Verdict::Regular)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "point,x,y,z,r,weiss,homogeneity,nu_x,nu_y,nu_z,alpha,beta,fit_error,verdict")?;
        for (k, p) in self.points.iter().enumerate() {
            let c = p.report.center;
            let rows = p.ladder.iter().map(|l| (l.r, l.weiss, l.homogeneity, &l.fit, "")).chain(std::iter::once((
                p.report.scale,
                f64::NAN,
                f64::NAN,
                &p.report,
                "best",
            )));
            for (r, w, d, fit, tag) in rows {
                let n = fit.best_nu;
                let verdict = if tag.is_empty() { fit.verdict.as_str().to_string() } else { format!("{tag}:{}", fit.verdict.as_str()) };
                writeln!(
                    out,
                    "{k},{:.8e},{:.8e},{:.8e},{r:.6e},{w:.8e},{d:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{verdict}",
                    c[0], c[1], c[2], n[0], n[1], n[2], fit.alpha, fit.beta, fit.fit_error
                )?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// `r_max, r_max/2, …` down to `4h`.
pub fn dyadic_ladder(r_max: f64, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= super::MIN_SCALE_CELLS * h * (1.0 - 1e-12) {
        out.push(r);
        r *= 0.5;
    }
    out
}

/// `count` free boundary points spread evenly along the crossing list.
pub fn boundary_points(dom: &DomainRep, count: usize) -> Vec<Point> {
    let cs = crossings(dom);
    if cs.is_empty() || count == 0 {
        return Vec::new();
    }
    let count = count.min(cs.len());
    (0..count).map(|i| cs[i * cs.len() / count].point).collect()
}

/// `u` continued across the free boundary: exterior nodes next to `Ω` take
/// `φ · Σu_j / Σφ_j` over interior axis neighbours, so `u` changes sign
/// where `φ` does.
fn extend(u: &ScalarField, dom: &DomainRep) -> ScalarField {
    let g = *u.grid();
    let m = g.node_dims();
    let phi = dom.phi().values();
    let v = u.values();
    let values = (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            if phi[i] > 0.0 {
                return v[i];
            }
            let ijk = g.node_ijk(i);
            let (mut su, mut sp) = (0.0, 0.0);
            for k in 0..g.dim() {
                let s = g.node_stride(k);
                for j in [(ijk[k] > 0).then(|| i - s), (ijk[k] + 1 < m[k]).then(|| i + s)].into_iter().flatten() {
                    if phi[j] > 0.0 {
                        su += v[j];
                        sp += phi[j];
                    }
                }
            }
            if sp > 0.0 {
                phi[i] * su / sp
            } else {
                0.0
            }
        })
        .collect();
    ScalarField::from_vec_unchecked(g, values)
}

/// Median and max/min of `u/v` over nodes with `h < φ < 4h`.
fn ratio_stats(u: &ScalarField, v: &ScalarField, dom: &DomainRep) -> Result<(f64, f64)> {
    let h = dom.grid().h();
    let mut r: Vec<f64> = dom
        .phi()
        .values()
        .iter()
        .zip(u.values().iter().zip(v.values()))
        .filter(|(p, (_, b))| **p > h && **p < 4.0 * h && **b > 0.0)
        .map(|(_, (a, b))| a / b)
        .collect();
    if r.is_empty() {
        return Err(Error::EmptyDomain);
    }
    r.sort_by(f64::total_cmp);
    let med = r[r.len() / 2];
    Ok((med, r[r.len() - 1] / r[0]))
}

/// Classifies free boundary `points` of `dom` from the states `u`, `v`.
///
/// At each point the Weiss energy with `Λ = λQ(x0)` is traced over `radii`
/// (a [`dyadic_ladder`] from `0.25` when empty), every rescaling is fitted
/// by half-planes, and the fit at the most homogeneous radius is reported.
pub fn classify_boundary(
    dom: &DomainRep,
    data: &ProblemData,
    points: &[Point],
    radii: &[f64],
    tol: f64,
) -> Result<Classification> {
    let g = *dom.grid();
    let h = g.h();
    if points.is_empty() {
        return Err(Error::InvalidInput("no boundary points".into()));
    }
    for p in points {
        if !g.contains(p) || dom.phi().interpolate(p).abs() > h {
            return Err(Error::InvalidInput(format!("point {:?} is not on the free boundary", p.as_slice())));
        }
    }
    let radii = if radii.is_empty() { dyadic_ladder(0.25, h) } else { radii.to_vec() };
    let sys = StateSystem::new(dom, data, tol)?;
    let (u0, v0) = (sys.u_field(), sys.v_field());
    let (lambda, ratio_spread) = ratio_stats(&u0, &v0, dom)?;
    let u = extend(&u0, dom);
    let v = extend(&v0, dom);
    let mut out = Vec::with_capacity(points.len());
    for x0 in points {
        let q = data.q.value(x0);
        let trace = weiss_trace(&u, x0, lambda * q, &radii)?;
        let mut ladder = Vec::with_capacity(radii.len());
        for (k, &r) in radii.iter().enumerate() {
            let mut fit = halfplane_fit_with(&rescale(&u, x0, r)?, &rescale(&v, x0, r)?, q, TAU);
            fit.center = *x0;
            fit.scale = r;
            ladder.push(LadderRow { r, weiss: trace.w[k], homogeneity: trace.d[k], fit });
        }
        let best = (0..ladder.len())
            .min_by(|&a, &b| ladder[a].homogeneity.total_cmp(&ladder[b].homogeneity))
            .expect("non-empty ladder");
        out.push(PointClassification { report: ladder[best].fit.clone(), trace, ladder });
    }
    Ok(Classification { points: out, lambda, ratio_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::ScalarData;
    use crate::grid::Grid;

    #[test]
    fn ladder_stops_at_four_cells() {
        let l = dyadic_ladder(0.25, 1.0 / 128.0);
        assert_eq!(l, vec![0.25, 0.125, 0.0625, 0.03125]);
    }

    #[test]
    fn extension_is_linear_across_a_flat_front() {
        let g = Grid::centered(2, 1.0, 64).unwrap();
        let dom = DomainRep::from_fn(g, |p| p[0] + 0.013);
        let u = ScalarField::from_fn(g, |p| (p[0] + 0.013).max(0.0) * 0.7);
        let e = extend(&u, &dom);
        for i in 0..g.node_count() {
            let x = g.node_point(i)[0] + 0.013;
            if x > -g.h() {
                assert!((e.values()[i] - 0.7 * x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn torsion_disk_points_are_regular() {
        // f = g = 1 on B_1 with Q = 1/4: u = v = (1 − |x|²)/4, |∇u| = 1/2.
        let g = Grid::centered(2, 1.25, 160).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let c = ScalarData::Constant(1.0);
        let data = ProblemData::new(&g, c.clone(), c, ScalarData::Constant(0.25)).unwrap();
        let pts = boundary_points(&dom, 6);
        let cls = classify_boundary(&dom, &data, &pts, &[], 1e-10).unwrap();
        assert!((cls.lambda - 1.0).abs() < 1e-6, "{}", cls.lambda);
        for p in &cls.points {
            let r = &p.report;
            assert_eq!(r.verdict, Verdict::Regular, "{r:?}");
            let n = r.center.normalize();
            assert!((r.best_nu + n).norm() < 0.05, "{:?} vs {:?}", r.best_nu, n);
            assert!((r.alpha * r.beta - 0.25).abs() < 0.025);
        }
        let mut buf = Vec::new();
        cls.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 6 * 4);
    }

    #[test]
    fn interior_points_are_rejected() {
        let g = Grid::centered(2, 1.25, 64).unwrap();
        let dom = DomainRep::ball(g, Point::zeros(), 1.0);
        let c = ScalarData::Constant(1.0);
        let data = ProblemData::new(&g, c.clone(), c, ScalarData::Constant(0.25)).unwrap();
        assert!(classify_boundary(&dom, &data, &[Point::zeros()], &[], 1e-10).is_err());
    }
}
