//! Experiment driver behind the `shapelab` binary.

pub mod config;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blowup::{classify_boundary, dyadic_ladder, rescale};
use crate::calculus::{second_variation, StateSystem, VariationOptions};
use crate::cone::{cjk_form, cross_check_delta2g, dirichlet_cap, solve_cap, AnnulusBump, CapSolution, CrossCheckOptions, TestFamily};
use crate::domain::DomainRep;
use crate::elliptic::crossings;
use crate::error::{Error, Result};
use crate::grid::Point;
use crate::io::{save_fld, write_table};
use crate::optimizer::minimality::Probe;
use crate::optimizer::{diagnostics, optimize, DiagnosticsOptions, Direction};
use crate::quadrature::{unit_ball_measure, BallRegion};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Optimize,
    Variation,
    Blowup,
    Classify,
    Cone,
    Diagnose,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Solve,
        Command::Optimize,
        Command::Variation,
        Command::Blowup,
        Command::Classify,
        Command::Cone,
        Command::Diagnose,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Optimize => "optimize",
            Command::Variation => "variation",
            Command::Blowup => "blowup",
            Command::Classify => "classify",
            Command::Cone => "cone",
            Command::Diagnose => "diagnose",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand `{s}`")))
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

/// Files written by one run, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutputs {
    pub directory: PathBuf,
    pub files: Vec<String>,
    /// `(key, value)` rows of `summary.csv`.
    pub summary: Vec<(String, String)>,
}

impl RunOutputs {
    fn file(&mut self, name: impl Into<String>) -> PathBuf {
        let name = name.into();
        let p = self.directory.join(&name);
        self.files.push(name);
        p
    }

    fn put(&mut self, key: &str, value: impl fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn put_f(&mut self, key: &str, value: f64) {
        self.put(key, format!("{value:.12e}"));
    }
}

/// Seeded sampler shared by every randomized step of a run.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` distinct free boundary points drawn from the crossing list.
pub fn sample_boundary_points(dom: &DomainRep, count: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let cs = crossings(dom);
    let count = count.min(cs.len());
    rand::seq::index::sample(rng, cs.len(), count).into_iter().map(|i| cs[i].point).collect()
}

/// `count` balls centered on free boundary points with radii uniform in
/// `[4h, r_max]`, redrawn until they fit in the box.
pub fn sample_balls(dom: &DomainRep, count: usize, r_max: f64, rng: &mut ChaCha8Rng) -> Result<Vec<BallRegion>> {
    let g = dom.grid();
    let cs = crossings(dom);
    if cs.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let lo = 4.0 * g.h();
    if r_max < lo {
        return Err(Error::ScaleBelowGrid { r: r_max, floor: lo });
    }
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(Error::InvalidInput("no sampled ball fits inside the box".into()));
        }
        let c = cs[rng.gen_range(0..cs.len())].point;
        let r = rng.gen_range(lo..=r_max);
        let ball = BallRegion::new(c, r)?;
        if ball.check_inside(g).is_ok() {
            out.push(ball);
        }
    }
    Ok(out)
}

fn write_summary(out: &mut RunOutputs) -> Result<()> {
    let rows: Vec<Vec<String>> = out.summary.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    let p = out.file("summary.csv");
    write_table(&p, &["key", "value"], &rows)
}

fn write_manifest(cfg: &RunConfig, cmd: Command, out: &RunOutputs, status: &str) -> Result<()> {
    let mut m = cfg.clone();
    m.manifest = Some(config::ManifestSection {
        subcommand: cmd.to_string(),
        version: env!("CARGO_PKG_VERSION").into(),
        status: status.into(),
        outputs: out.files.clone(),
    });
    std::fs::write(out.directory.join(MANIFEST), m.to_toml()?)?;
    Ok(())
}

/// Validates `cfg` for `cmd`, runs it and writes its artifacts and a manifest
/// into `cfg.output.directory`. Nothing is written when validation fails; a
/// numerical failure still leaves a manifest recording it.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunOutputs> {
    cfg.validate_for(cmd.as_str())?;
    let mut cfg = cfg.clone();
    cfg.manifest = None;
    let dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    let mut out = RunOutputs { directory: dir, ..Default::default() };
    log::info!("{cmd}: writing to {}", out.directory.display());
    let res = match cmd {
        Command::Solve => run_solve(&cfg, &mut out),
        Command::Optimize => run_optimize(&cfg, &mut out),
        Command::Variation => run_variation(&cfg, &mut out),
        Command::Blowup => run_blowup(&cfg, &mut out),
        Command::Classify => run_classify(&cfg, &mut out),
        Command::Cone => run_cone(&cfg, &mut out),
        Command::Diagnose => run_diagnose(&cfg, &mut out),
    }
    .and_then(|_| write_summary(&mut out));
    match res {
        Ok(()) => {
            write_manifest(&cfg, cmd, &out, "ok")?;
            Ok(out)
        }
        Err(e) => {
            write_manifest(&cfg, cmd, &out, &format!("failed: {e}"))?;
            Err(e)
        }
    }
}

/// Loads `path` and runs it, optionally redirecting the output directory.
pub fn run_file(cmd: Command, path: &Path, out_dir: Option<&Path>) -> Result<RunOutputs> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(d) = out_dir {
        cfg.output.directory = if d.is_absolute() { d.to_path_buf() } else { std::env::current_dir()?.join(d) };
    }
    run(cmd, &cfg)
}

fn run_solve(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let dom = cfg.domain()?;
    let sys = StateSystem::new(&dom, &cfg.problem()?, cfg.optimize.tol)?;
    save_fld(&sys.u_field(), &out.file("u.fld"))?;
    save_fld(&sys.v_field(), &out.file("v.fld"))?;
    let e = sys.energy();
    out.put_f("energy", e.value);
    out.put_f("energy_symmetric", e.symmetric);
    out.put_f("volume", dom.volume());
    out.put_f("h", dom.grid().h());
    Ok(())
}

/// Radius of the ball with the volume of `dom`.
pub fn equivalent_radius(dom: &DomainRep) -> f64 {
    let d = dom.grid().dim();
    (dom.volume() / unit_ball_measure(d)).powf(1.0 / d as f64)
}

fn run_optimize(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let oc = cfg.optimize_config()?;
    let (dom, trace) = optimize(&oc)?;
    trace.save_csv(&out.file("opt_trace.csv"))?;
    save_fld(dom.phi(), &out.file("final.fld"))?;
    let last = trace.last().copied();
    out.put("converged", trace.converged);
    out.put("steps", trace.records.len());
    out.put_f("energy", last.map_or(f64::NAN, |r| r.energy));
    out.put_f("max_speed", last.map_or(f64::NAN, |r| r.max_speed));
    out.put_f("volume", dom.volume());
    out.put_f("radius", equivalent_radius(&dom));
    out.put_f("h", dom.grid().h());
    Ok(())
}

fn run_variation(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let v = &cfg.variation;
    let dom = cfg.domain()?;
    let field = cfg.field()?;
    let opts = VariationOptions { ladder: v.ladder.clone(), tol: v.tol, ..Default::default() };
    let rep = second_variation(&dom, &cfg.problem()?, &field, &opts)?;
    rep.save_csv(&out.file("variation.csv"))?;
    let h = dom.grid().h();
    let bound = 10.0 * (h + v.tol);
    out.put_f("energy", rep.f0);
    out.put_f("delta_f", rep.delta_f);
    out.put_f("delta2_f", rep.delta2_f);
    for (k, e) in rep.remainder_exponents().iter().enumerate() {
        out.put(&format!("exponent_{k}"), format!("{e:.6}"));
    }
    out.put_f("stationarity_bound", bound);
    out.put("stationary", rep.delta_f.abs() <= bound);
    Ok(())
}

fn blowup_ladder(cfg: &RunConfig, h: f64) -> Vec<f64> {
    if cfg.blowup.radii.is_empty() {
        dyadic_ladder(cfg.blowup.r_max, h)
    } else {
        cfg.blowup.radii.clone()
    }
}

fn run_blowup(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let dom = cfg.domain()?;
    let data = cfg.problem()?;
    let b = &cfg.blowup;
    let mut rng = rng(b.seed);
    let points = sample_boundary_points(&dom, b.points, &mut rng);
    let radii = blowup_ladder(cfg, dom.grid().h());
    let cls = classify_boundary(&dom, &data, &points, &radii, b.tol)?;
    let u = StateSystem::new(&dom, &data, b.tol)?.u_field();
    let mut rows = Vec::new();
    for (k, p) in cls.points.iter().enumerate() {
        p.trace.save_csv(&out.file(format!("weiss_{k}.csv")))?;
        let r = p.report.scale;
        save_fld(&rescale(&u, &p.report.center, r)?, &out.file(format!("blowup_{k}.fld")))?;
        let c = p.report.center;
        rows.push(vec![
            k.to_string(),
            format!("{:.8e}", c[0]),
            format!("{:.8e}", c[1]),
            format!("{:.8e}", c[2]),
            format!("{r:.6e}"),
            format!("{:.6e}", p.trace.monotonicity_defect()),
            format!("{:.6e}", p.trace.spread()),
        ]);
    }
    write_table(&out.file("blowup_points.csv"), &["point", "x", "y", "z", "best_r", "monotonicity_defect", "weiss_spread"], &rows)?;
    out.put("seed", b.seed);
    out.put("points", cls.points.len());
    out.put_f("lambda", cls.lambda);
    out.put_f(
        "max_monotonicity_defect",
        cls.points.iter().map(|p| p.trace.monotonicity_defect()).fold(0.0, f64::max),
    );
    Ok(())
}

fn run_classify(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let dom = cfg.domain()?;
    let b = &cfg.blowup;
    let mut rng = rng(b.seed);
    let points = sample_boundary_points(&dom, b.points, &mut rng);
    let radii = blowup_ladder(cfg, dom.grid().h());
    let cls = classify_boundary(&dom, &cfg.problem()?, &points, &radii, b.tol)?;
    cls.save_csv(&out.file("classification.csv"))?;
    let count = |s: &str| cls.points.iter().filter(|p| p.report.verdict.as_str() == s).count();
    out.put("seed", b.seed);
    out.put("points", cls.points.len());
    out.put("regular", count("regular"));
    out.put("singular", count("singular"));
    out.put("inconclusive", count("inconclusive"));
    out.put_f("lambda", cls.lambda);
    out.put_f("ratio_spread", cls.ratio_spread);
    Ok(())
}

fn run_cone(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let c = &cfg.cone;
    let mut rows = Vec::new();
    let mut found = 0;
    for k in 0..c.samples {
        let t = if c.samples == 1 {
            c.theta0_min
        } else {
            c.theta0_min + (c.theta0_max - c.theta0_min) * k as f64 / (c.samples - 1) as f64
        };
        let (status, zero) = match solve_cap(c.dim, t)? {
            CapSolution::Found(_) => {
                found += 1;
                ("found".to_string(), String::new())
            }
            CapSolution::NoSolution { first_zero } => {
                ("none".to_string(), first_zero.map_or(String::new(), |z| format!("{z:.12e}")))
            }
        };
        let dc = dirichlet_cap(c.dim, t)?;
        let rep = cjk_form(&dc, &TestFamily::standard(c.dim))?;
        rows.push(vec![
            format!("{t:.12e}"),
            status,
            zero,
            format!("{:.12e}", dc.homogeneity),
            format!("{:.10e}", rep.min_value),
            rep.verdict().into(),
        ]);
    }
    write_table(
        &out.file("cone_scan.csv"),
        &["theta0", "one_homogeneous", "first_zero", "dirichlet_homogeneity", "dirichlet_cjk_min", "dirichlet_verdict"],
        &rows,
    )?;
    let half = solve_cap(c.dim, FRAC_PI_2)?;
    let spec = half.spec().ok_or_else(|| Error::InvalidInput("half-space cap was not found".into()))?;
    spec.save_csv(&out.file("cone_profile.csv"))?;
    let rep = cjk_form(spec, &TestFamily::standard(c.dim))?;
    rep.save_csv(&out.file("cjk.csv"))?;
    out.put("dim", c.dim);
    out.put("one_homogeneous_caps", found);
    out.put_f("half_space_cjk_min", rep.min_value);
    out.put("half_space_verdict", rep.verdict());
    if c.dim <= 3 {
        let mut opts = CrossCheckOptions::standard(c.dim);
        if c.cells > 0 {
            opts.cells = c.cells;
        }
        let phi = AnnulusBump::new(c.inner, c.outer, 1.0)?;
        let (form, d2) = cross_check_delta2g(spec, &phi, &opts)?;
        let h = 2.0 * opts.half / opts.cells as f64;
        write_table(
            &out.file("cross_check.csv"),
            &["h", "boundary_form", "delta2_g", "margin"],
            &[vec![format!("{h:.6e}"), format!("{form:.10e}"), format!("{d2:.10e}"), format!("{:.10e}", form - 0.5 * d2)]],
        )?;
        out.put_f("cross_check_margin", form - 0.5 * d2);
    }
    Ok(())
}

fn run_diagnose(cfg: &RunConfig, out: &mut RunOutputs) -> Result<()> {
    let dom = cfg.domain()?;
    let data = cfg.problem()?;
    let b = &cfg.blowup;
    let opts = DiagnosticsOptions { points: b.points, r_max: b.r_max, tol: b.tol, ..Default::default() };
    let rep = diagnostics(&dom, &data, &opts);
    if rep.empty {
        return Err(Error::EmptyDomain);
    }
    rep.save_csv(&out.file("diagnostics.csv"))?;
    let mut rng = rng(b.seed);
    let balls = sample_balls(&dom, b.balls, b.r_max, &mut rng)?;
    let probe = Probe::new(&dom, &data, b.tol)?;
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    for (k, ball) in balls.iter().enumerate() {
        for (dir, name) in [(Direction::Outward, "outward"), (Direction::Inward, "inward")] {
            let m = probe.margin(ball, dir)?;
            worst = worst.min(m);
            rows.push(vec![
                k.to_string(),
                format!("{:.8e}", ball.center[0]),
                format!("{:.8e}", ball.center[1]),
                format!("{:.8e}", ball.center[2]),
                format!("{:.6e}", ball.radius),
                name.into(),
                format!("{m:.10e}"),
            ]);
        }
    }
    write_table(&out.file("minimality.csv"), &["ball", "x", "y", "z", "r", "direction", "margin"], &rows)?;
    let (lo, hi) = rep.density_range();
    out.put("seed", b.seed);
    out.put_f("lipschitz", rep.lipschitz);
    out.put_f("min_nondegeneracy", rep.min_nondegeneracy());
    out.put_f("density_min", lo);
    out.put_f("density_max", hi);
    out.put_f("min_margin", worst);
    out.put("violations", rep.violations.len());
    for v in &rep.violations {
        log::warn!("{v}");
    }
    Ok(())
}
