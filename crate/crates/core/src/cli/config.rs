//! Run configuration: a TOML document with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calculus::{Bump, ProblemData, ScalarData, VectorFieldSpec};
use crate::domain::DomainRep;
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::io::load_fld;
use crate::optimizer::{Mode, OptimizeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub data: DataSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub variation: VariationSection,
    #[serde(default)]
    pub blowup: BlowupSection,
    #[serde(default)]
    pub cone: ConeSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Written by runs; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    /// Cells per axis.
    pub n: usize,
    /// Half-width of the box `[-box, box]^dim`.
    #[serde(rename = "box")]
    pub half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataPreset {
    Constant { value: f64 },
    Gaussian { amp: f64, width: f64, #[serde(default)] center: Vec<f64> },
    Affine { c: f64, slope: Vec<f64> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainPreset {
    Ball { radius: f64, #[serde(default)] center: Vec<f64> },
    /// `{x : φ(x) > 0}` for a stored level set.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub f: DataPreset,
    pub g: DataPreset,
    #[serde(rename = "Q")]
    pub q: DataPreset,
    /// Domain for `solve`, `variation`, `blowup`, `classify`, `diagnose`
    /// and the initial domain of `optimize`.
    pub domain: DomainPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    /// `general`, `bernoulli` or `heat`.
    pub mode: String,
    /// `λ` of the Bernoulli mode, `Λ` of the heat mode.
    pub lam: f64,
    pub step: f64,
    pub max_steps: usize,
    pub reinit_every: usize,
    pub stop_tol: f64,
    pub tol: f64,
    pub coarse_levels: usize,
    pub container: Option<DomainPreset>,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            mode: "general".into(),
            lam: 1.0,
            step: 0.5,
            max_steps: 400,
            reinit_every: 10,
            stop_tol: 1e-3,
            tol: 1e-9,
            coarse_levels: 0,
            container: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariationSection {
    /// `bump-e1`, `bump-e2`, `bump-e3`, `bump-radial` or `bump-rotational`.
    pub field: String,
    pub center: Vec<f64>,
    pub rho: f64,
    pub amp: f64,
    pub ladder: Vec<f64>,
    pub tol: f64,
}

impl Default for VariationSection {
    fn default() -> Self {
        Self {
            field: "bump-e1".into(),
            center: vec![1.0, 0.0],
            rho: 0.5,
            amp: 1.0,
            ladder: vec![0.04, 0.02, 0.01],
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupSection {
    /// Boundary points drawn from the crossing list.
    pub points: usize,
    /// Radius ladder; a dyadic ladder from `r_max` when empty.
    pub radii: Vec<f64>,
    pub r_max: f64,
    pub tau: f64,
    /// Seed of the point and ball sampler.
    pub seed: u64,
    /// Random balls of the minimality probe in `diagnose`.
    pub balls: usize,
    pub tol: f64,
}

impl Default for BlowupSection {
    fn default() -> Self {
        Self { points: 8, radii: Vec::new(), r_max: 0.25, tau: 0.1, seed: 1, balls: 10, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeSection {
    pub dim: usize,
    pub theta0_min: f64,
    pub theta0_max: f64,
    pub samples: usize,
    /// Annulus of the test functions.
    pub inner: f64,
    pub outer: f64,
    /// Cells per axis of the gridded cross-check (`d ≤ 3`).
    pub cells: usize,
}

impl Default for ConeSection {
    fn default() -> Self {
        Self {
            dim: 3,
            theta0_min: 0.2,
            theta0_max: 3.0,
            samples: 29,
            inner: 0.3,
            outer: 1.0,
            cells: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSection {
    pub subcommand: String,
    pub version: String,
    pub status: String,
    pub outputs: Vec<String>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_data(base: &Path, d: &mut DataPreset) {
    if let DataPreset::File { path } = d {
        resolve(base, path);
    }
}

fn resolve_domain(base: &Path, d: &mut DomainPreset) {
    if let DomainPreset::File { path } = d {
        resolve(base, path);
    }
}

fn point(dim: usize, v: &[f64], what: &str) -> Result<Point> {
    if v.is_empty() {
        return Ok(Point::zeros());
    }
    if v.len() != dim {
        return Err(Error::Config(format!("{what} needs {dim} coordinates, got {}", v.len())));
    }
    let mut p = Point::zeros();
    p.as_mut_slice()[..dim].copy_from_slice(v);
    Ok(p)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::fs::canonicalize(if base.as_os_str().is_empty() { Path::new(".") } else { &base })?;
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve_data(base, &mut self.data.f);
        resolve_data(base, &mut self.data.g);
        resolve_data(base, &mut self.data.q);
        resolve_domain(base, &mut self.data.domain);
        if let Some(c) = &mut self.optimize.container {
            resolve_domain(base, c);
        }
        resolve(base, &mut self.output.directory);
    }

    /// The resolved configuration as TOML, without the manifest section.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::centered(self.grid.dim, self.grid.half, self.grid.n)
    }

    pub fn scalar(&self, d: &DataPreset) -> Result<ScalarData> {
        let g = self.grid()?;
        let dim = g.dim();
        Ok(match d {
            DataPreset::Constant { value } => ScalarData::Constant(*value),
            DataPreset::Gaussian { amp, width, center } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
                }
                ScalarData::Gaussian { amp: *amp, width: *width, center: point(dim, center, "gaussian center")? }
            }
            DataPreset::Affine { c, slope } => ScalarData::Affine { c: *c, slope: point(dim, slope, "affine slope")? },
            DataPreset::File { path } => {
                let f = load_fld(path)?;
                if !f.grid().same_as(&g) {
                    return Err(Error::GridMismatch);
                }
                ScalarData::Sampled(f)
            }
        })
    }

    pub fn problem(&self) -> Result<ProblemData> {
        let g = self.grid()?;
        ProblemData::new(&g, self.scalar(&self.data.f)?, self.scalar(&self.data.g)?, self.scalar(&self.data.q)?)
    }

    pub fn domain_from(&self, d: &DomainPreset) -> Result<DomainRep> {
        let g = self.grid()?;
        match d {
            DomainPreset::Ball { radius, center } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
                }
                Ok(DomainRep::ball(g, point(g.dim(), center, "ball center")?, *radius))
            }
            DomainPreset::File { path } => {
                let phi = load_fld(path)?;
                if !phi.grid().same_as(&g) {
                    return Err(Error::GridMismatch);
                }
                Ok(DomainRep::new(phi))
            }
        }
    }

    pub fn domain(&self) -> Result<DomainRep> {
        self.domain_from(&self.data.domain)
    }

    pub fn optimize_config(&self) -> Result<OptimizeConfig> {
        let o = &self.optimize;
        let mode = match o.mode.as_str() {
            "general" => Mode::General,
            "bernoulli" => Mode::Bernoulli { lam: o.lam },
            "heat" => Mode::Heat { boundary: self.scalar(&self.data.f)?, lam: o.lam },
            other => return Err(Error::Config(format!("unknown optimize mode `{other}`"))),
        };
        let mut cfg = OptimizeConfig::new(mode, self.problem()?, self.domain()?);
        cfg.step = o.step;
        cfg.max_steps = o.max_steps;
        cfg.reinit_every = o.reinit_every;
        cfg.stop_tol = o.stop_tol;
        cfg.tol = o.tol;
        cfg.coarse_levels = o.coarse_levels;
        cfg.container = o.container.as_ref().map(|c| self.domain_from(c)).transpose()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn field(&self) -> Result<Bump> {
        let v = &self.variation;
        let dim = self.grid.dim;
        let c = point(dim, &v.center, "variation center")?;
        if !(v.rho > 0.0) {
            return Err(Error::Config(format!("variation rho must be positive, got {}", v.rho)));
        }
        let b = match v.field.as_str() {
            "bump-e1" => Bump::axis(dim, c, v.rho, 0, v.amp),
            "bump-e2" => Bump::axis(dim, c, v.rho, 1, v.amp),
            "bump-e3" if dim == 3 => Bump::axis(dim, c, v.rho, 2, v.amp),
            "bump-radial" => Bump::radial(dim, c, v.rho, v.amp),
            "bump-rotational" => Bump::rotational(dim, c, v.rho, v.amp),
            other => return Err(Error::Config(format!("unknown variation field `{other}`"))),
        };
        if let Some(s) = b.support() {
            s.check_inside(&self.grid()?)?;
        }
        Ok(b)
    }

    /// Checks every section a subcommand reads before anything is written.
    pub fn validate_for(&self, sub: &str) -> Result<()> {
        self.grid()?;
        match sub {
            "cone" => {
                let c = &self.cone;
                if c.dim < 2 || !(c.theta0_min > 0.0 && c.theta0_max < std::f64::consts::PI && c.theta0_min <= c.theta0_max) {
                    return Err(Error::Config("cone section needs dim ≥ 2 and 0 < theta0_min ≤ theta0_max < π".into()));
                }
                if c.samples == 0 || !(c.inner > 0.0 && c.outer > c.inner) {
                    return Err(Error::Config("cone section needs samples > 0 and 0 < inner < outer".into()));
                }
                Ok(())
            }
            "optimize" => self.optimize_config().map(|_| ()),
            "variation" => {
                self.problem()?;
                self.domain()?;
                self.field().map(|_| ())
            }
            "blowup" | "classify" | "diagnose" => {
                let b = &self.blowup;
                if b.points == 0 || !(b.tau > 0.0 && b.r_max > 0.0 && b.tol > 0.0) {
                    return Err(Error::Config("blowup section needs points > 0 and positive tau, r_max, tol".into()));
                }
                self.problem()?;
                self.domain().map(|_| ())
            }
            "solve" => {
                self.problem()?;
                self.domain().map(|_| ())
            }
            other => Err(Error::Config(format!("unknown subcommand `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RADIAL: &str = r#"
[grid]
dim = 2
n = 64
box = 2.0

[data]
f = { kind = "constant", value = 1.0 }
g = { kind = "constant", value = 1.0 }
Q = { kind = "constant", value = 0.25 }
domain = { kind = "ball", radius = 1.5 }
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::parse(RADIAL).unwrap();
        assert_eq!(cfg.grid.n, 64);
        assert_eq!(cfg.optimize, OptimizeSection::default());
        cfg.validate_for("optimize").unwrap();
        assert!((cfg.domain().unwrap().volume() - std::f64::consts::PI * 2.25).abs() < 0.05);
    }

    #[test]
    fn unknown_keys_and_missing_sizes_are_rejected() {
        let extra = RADIAL.replace("box = 2.0", "box = 2.0\ncolour = 3");
        assert!(matches!(RunConfig::parse(&extra), Err(Error::Config(_))));
        let missing = RADIAL.replace("n = 64\n", "");
        assert!(RunConfig::parse(&missing).is_err());
        let bad_preset = RADIAL.replace("value = 0.25", "value = 0.25, sigma = 1");
        assert!(RunConfig::parse(&bad_preset).is_err());
    }

    #[test]
    fn manifest_round_trips() {
        let mut cfg = RunConfig::parse(RADIAL).unwrap();
        cfg.manifest = Some(ManifestSection {
            subcommand: "solve".into(),
            version: "0".into(),
            status: "ok".into(),
            outputs: vec!["u.fld".into()],
        });
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_coordinates_are_config_errors() {
        let cfg = RunConfig::parse(&RADIAL.replace("radius = 1.5", "radius = 1.5, center = [0, 0, 0]")).unwrap();
        assert!(cfg.domain().unwrap_err().is_validation());
    }
}
