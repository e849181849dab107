//! The JSON run configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use selfsim::field::{io, Grid2D, ScalarField};
use selfsim::gas::{GasLaw, LawVariant};
use selfsim::linalg::LinearMethod;
use selfsim::potential::{quiescent, EpsilonSchedule, PicardParams, PotentialProblem};
use selfsim::quasipotential::QuasiConfig;
use selfsim::vorticity::TransportParams;
use selfsim::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct GasSection {
    pub a: f64,
    pub gamma: f64,
    #[serde(default)]
    pub rho_floor: f64,
    #[serde(default)]
    pub variant: LawVariant,
}

impl GasSection {
    pub fn law(&self) -> Result<GasLaw> {
        GasLaw::new(self.a, self.gamma, self.rho_floor, self.variant)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridSection {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)
    }
}

/// One additive term of an expression-table profile.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// `−|ξ|²/2 + K`.
    Quiescent {
        #[serde(rename = "K")]
        k: f64,
    },
    /// `amp · sin(kx·π·ξ₁) · sin(ky·π·ξ₂)`.
    SinSin {
        amp: f64,
        kx: f64,
        ky: f64,
    },
    Constant {
        value: f64,
    },
}

impl Term {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Term::Quiescent { k } => -0.5 * (x * x + y * y) + k,
            Term::SinSin { amp, kx, ky } => amp * (kx * PI * x).sin() * (ky * PI * y).sin(),
            Term::Constant { value } => value,
        }
    }
}

/// A scalar profile on the whole grid; frame values are boundary data.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Quiescent {
        #[serde(rename = "K")]
        k: f64,
    },
    File {
        path: PathBuf,
    },
    ExpressionTable {
        terms: Vec<Term>,
    },
}

impl Profile {
    /// Relative paths resolve against `base` (the config file's directory).
    pub fn field(&self, grid: Grid2D, base: &Path) -> Result<ScalarField> {
        let f = match self {
            Profile::Quiescent { k } => quiescent(grid, *k),
            Profile::File { path } => {
                let f = io::read_field(base.join(path))?.into_scalar()?;
                if f.grid != grid {
                    return Err(Error::DimensionMismatch(format!(
                        "{} does not live on the configured grid",
                        path.display()
                    )));
                }
                f
            }
            Profile::ExpressionTable { terms } => {
                if terms.is_empty() {
                    return Err(Error::Config("expression-table needs at least one term".into()));
                }
                ScalarField::from_fn(grid, |x, y| terms.iter().map(|t| t.eval(x, y)).sum())
            }
        };
        if !f.is_finite() {
            return Err(Error::Config("boundary profile is not finite".into()));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub relax_theta: f64,
    pub tol_fixed_point: f64,
    pub max_iters: usize,
    pub lin_tol: f64,
    pub lin_max_iters: Option<usize>,
    pub linear: LinearMethod,
    pub eps0: f64,
    pub ratio: f64,
    pub eps_min: f64,
    pub c2_floor: f64,
    #[serde(rename = "cap_M")]
    pub cap_m: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = PicardParams::default();
        let s = EpsilonSchedule::default();
        Self {
            relax_theta: p.relax_theta,
            tol_fixed_point: p.tol_fixed_point,
            max_iters: p.max_iters,
            lin_tol: p.lin_tol,
            lin_max_iters: p.lin_max_iters,
            linear: p.linear,
            eps0: s.eps0,
            ratio: s.ratio,
            eps_min: s.eps_min,
            c2_floor: 1e-8,
            cap_m: 1e6,
        }
    }
}

impl SolverSection {
    pub fn picard(&self) -> Result<PicardParams> {
        let p = PicardParams {
            relax_theta: self.relax_theta,
            tol_fixed_point: self.tol_fixed_point,
            max_iters: self.max_iters,
            lin_tol: self.lin_tol,
            lin_max_iters: self.lin_max_iters,
            linear: self.linear,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn schedule(&self) -> Result<EpsilonSchedule> {
        let s = EpsilonSchedule {
            eps0: self.eps0,
            ratio: self.ratio,
            eps_min: self.eps_min,
        };
        s.stages()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct QuasiSection {
    pub delta_targets: Vec<f64>,
    #[serde(default = "default_outer_tol")]
    pub outer_tol: f64,
    #[serde(default = "default_outer_max_iters")]
    pub outer_max_iters: usize,
    #[serde(default)]
    pub newton: bool,
    pub zeta_b: Profile,
    #[serde(default)]
    pub f_anchor: (usize, usize),
    #[serde(default)]
    pub f_constant: f64,
    #[serde(default = "default_sonic_margin")]
    pub sonic_margin: f64,
}

fn default_outer_tol() -> f64 {
    1e-8
}

fn default_outer_max_iters() -> usize {
    50
}

fn default_sonic_margin() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn contains(self, g: &Grid2D, i: usize, j: usize) -> bool {
        match self {
            Side::Left => i == 0,
            Side::Right => i == g.nx - 1,
            Side::Bottom => j == 0,
            Side::Top => j == g.ny - 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SideValue {
    pub side: Side,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TransportSection {
    /// Constant data per side; later entries win at shared corners.
    pub inflow: Vec<SideValue>,
    /// CSV with `i,j,value` rows, applied after `inflow`.
    pub inflow_csv: Option<PathBuf>,
    pub step: Option<f64>,
    pub max_len: f64,
    pub tol_inflow: f64,
}

impl Default for TransportSection {
    fn default() -> Self {
        let t = TransportParams::default();
        Self {
            inflow: Vec::new(),
            inflow_csv: None,
            step: t.step,
            max_len: t.max_len,
            tol_inflow: t.tol_inflow,
        }
    }
}

impl TransportSection {
    pub fn params(&self, threads: usize) -> TransportParams {
        TransportParams {
            step: self.step,
            max_len: self.max_len,
            tol_inflow: self.tol_inflow,
            threads,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub phi_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            phi_path: None,
            report_path: None,
            csv: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    pub gas: GasSection,
    pub grid: GridSection,
    pub boundary: Option<Profile>,
    #[serde(default)]
    pub solver: SolverSection,
    pub quasi: Option<QuasiSection>,
    #[serde(default)]
    pub transport: TransportSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

/// A parsed config plus the keys it ignored.
#[derive(Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub unknown: Vec<String>,
}

/// Parse a config document, collecting unknown keys instead of failing.
pub fn parse(text: &str, base: &Path) -> Result<Loaded> {
    let mut unknown = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| Error::Config(format!("config: {e}")))?;
    config.base = base.to_path_buf();
    Ok(Loaded { config, unknown })
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, &base)
}

impl RunConfig {
    pub fn boundary_field(&self, grid: Grid2D) -> Result<ScalarField> {
        self.boundary
            .as_ref()
            .ok_or_else(|| Error::Config("missing `boundary` section".into()))?
            .field(grid, &self.base)
    }

    pub fn problem(&self) -> Result<PotentialProblem> {
        let grid = self.grid.grid()?;
        let mut p = PotentialProblem::new(self.gas.law()?, self.boundary_field(grid)?)?;
        p.c2_floor = self.solver.c2_floor;
        p.cap_m = self.solver.cap_m;
        p.validate()?;
        Ok(p)
    }

    pub fn quasi_config(&self, grid: Grid2D, threads: usize) -> Result<QuasiConfig> {
        let q = self
            .quasi
            .as_ref()
            .ok_or_else(|| Error::Config("missing `quasi` section".into()))?;
        let mut c = QuasiConfig::new(q.delta_targets.clone(), q.zeta_b.field(grid, &self.base)?);
        c.outer_tol = q.outer_tol;
        c.outer_max_iters = q.outer_max_iters;
        c.newton = q.newton;
        c.f_anchor = q.f_anchor;
        c.f_constant = q.f_constant;
        c.sonic_margin = q.sonic_margin;
        c.transport = self.transport.params(threads);
        c.strict = self.strict;
        c.validate(&grid)?;
        Ok(c)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.resolve(&self.output.dir).join(name)
    }
}
