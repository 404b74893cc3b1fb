//! Scenario files (TOML).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use harnack_core::estimates::{LiouvilleMode, PathMesh, Scope};
use harnack_core::nonlinearity::{make_catalog_entry, Coefficients, NonlinearitySpec};
use harnack_core::solver::SolverOptions;
use harnack_core::{BakryEmery, Expr, Family, Geometry, Var, WarpTopology};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub equation: EquationConfig,
    #[serde(default)]
    pub estimates: EstimatesConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    ConformalTorus,
    Warped,
}

/// `m` as a number or the string `"infinity"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MValue {
    Number(f64),
    Text(String),
}

impl MValue {
    fn to_bakry_emery(&self) -> Result<BakryEmery, HarnessError> {
        match self {
            MValue::Number(m) => Ok(BakryEmery::Finite(*m)),
            MValue::Text(s) if s == "infinity" || s == "inf" => Ok(BakryEmery::Infinite),
            MValue::Text(s) => Err(HarnessError::Config(format!("geometry.m: expected a number or \"infinity\", got '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub family: FamilyName,
    /// Torus dimension (1 or 2); warped surfaces are always 2.
    pub n: Option<usize>,
    /// Conformal factor `σ(t)` of the torus.
    pub sigma: Option<String>,
    /// Period of the torus chart.
    pub length: Option<f64>,
    pub warp: Option<String>,
    pub topology: Option<WarpTopology>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    #[serde(default = "zero_string")]
    pub potential: String,
    pub m: MValue,
}

fn zero_string() -> String {
    "0".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nt: usize,
    pub t_end: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Parabolic,
    Elliptic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    #[serde(default = "zero_string")]
    pub q: String,
    /// Initial datum as an expression in `x`.
    pub initial: Option<String>,
    /// Initial datum as a one-column CSV with header `u0`.
    pub initial_csv: Option<PathBuf>,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub mode: Mode,
}

impl Default for EquationConfig {
    fn default() -> Self {
        EquationConfig {
            q: zero_string(),
            initial: None,
            initial_csv: None,
            nonlinearity: NonlinearityConfig::default(),
            mode: Mode::Parabolic,
        }
    }
}

/// Catalog entry name plus its coefficient block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    #[serde(default = "zero_entry")]
    pub entry: String,
    pub a: Option<String>,
    pub b: Option<String>,
    pub c: Option<String>,
    pub p: Option<String>,
    pub exp_p: Option<f64>,
    pub exp_q: Option<f64>,
    pub expr: Option<String>,
}

impl NonlinearityConfig {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            p: self.p.clone(),
            exp_p: self.exp_p,
            exp_q: self.exp_q,
            expr: self.expr.clone(),
        }
    }
}

fn zero_entry() -> String {
    "zero".into()
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig {
            entry: zero_entry(),
            a: None,
            b: None,
            c: None,
            p: None,
            exp_p: None,
            exp_q: None,
            expr: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    SoupletZhang,
    Hamilton,
    EllipticHarnack,
    LiYau,
    ParabolicHarnack,
    HamiltonGlobal,
    HarnackInterpolation,
    FGamma,
    Liouville,
}

impl EstimateKind {
    pub fn needs_time(self) -> bool {
        self != EstimateKind::Liouville
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesConfig {
    pub select: Vec<EstimateKind>,
    pub lambda: f64,
    /// Sweep for the differential Harnack check; empty means `[lambda]`.
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `ε` of the elliptic differential Harnack bound.
    pub epsilon: f64,
    /// Centre node and radius of a local scope; both or neither.
    pub x0: Option<usize>,
    pub radius: Option<f64>,
    pub d: Option<f64>,
    /// Constant of the elliptic Harnack check; `C_min` of the local
    /// gradient bound when absent.
    pub elliptic_constant: Option<f64>,
    /// Fixed constant for the implied-constant checks.
    pub constant: Option<f64>,
    pub elliptic_slices: usize,
    pub interpolation_s: Vec<f64>,
    /// Random pairs of the parabolic Harnack check.
    pub pairs: usize,
    /// Random pairs of the interpolation check (each tried at every `s`).
    pub interpolation_pairs: usize,
    pub path_stride: usize,
    pub path_slices: usize,
    pub liouville_mode: LiouvilleMode,
    pub oscillation_tol: f64,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        EstimatesConfig {
            select: Vec::new(),
            lambda: 1.5,
            lambdas: Vec::new(),
            epsilons: vec![0.1, 0.5, 0.9],
            epsilon: 0.5,
            x0: None,
            radius: None,
            d: None,
            elliptic_constant: None,
            constant: None,
            elliptic_slices: 16,
            interpolation_s: vec![0.5, 1.0, 2.0],
            pairs: 50,
            interpolation_pairs: 100,
            path_stride: 2,
            path_slices: 16,
            liouville_mode: LiouvilleMode::GradientBound,
            oscillation_tol: 1e-6,
        }
    }
}

impl EstimatesConfig {
    pub fn scope(&self) -> Result<Scope, HarnessError> {
        match (self.x0, self.radius) {
            (None, None) => Ok(Scope::Global),
            (Some(x0), Some(radius)) => Ok(Scope::Local { x0, radius }),
            _ => Err(HarnessError::Config(
                "estimates.x0 and estimates.radius must be given together".into(),
            )),
        }
    }

    pub fn lambda_sweep(&self) -> Vec<f64> {
        if self.lambdas.is_empty() {
            vec![self.lambda]
        } else {
            self.lambdas.clone()
        }
    }

    pub fn path_mesh(&self) -> PathMesh {
        PathMesh {
            stride: self.path_stride,
            slices: self.path_slices,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// `τ = c_tol (Δx² + Δt)`.
    pub c_tol: f64,
    pub rhs_scale: f64,
    pub theta_samples: usize,
    pub theta_max_slices: usize,
    pub harnack_rel_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            c_tol: 10.0,
            rhs_scale: 1.0,
            theta_samples: 64,
            theta_max_slices: 64,
            harnack_rel_tol: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Time levels written to the solution CSV, endpoints included.
    pub snapshots: usize,
    /// Smallest-margin points written per report to the margins CSV.
    pub margin_rows: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            snapshots: 11,
            margin_rows: 2000,
        }
    }
}

fn expr(field: &str, src: &str, allowed: &[Var]) -> Result<Expr, HarnessError> {
    Expr::parse_with(src, allowed).map_err(|e| HarnessError::Config(format!("{field}: {e}")))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        // CSV paths are relative to the scenario file.
        if let (Some(csv), Some(dir)) = (&cfg.equation.initial_csv, path.parent()) {
            if csv.is_relative() {
                cfg.equation.initial_csv = Some(dir.join(csv));
            }
        }
        Ok(cfg)
    }

    /// Checks everything that does not need the solution.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(HarnessError::Config(format!(
                "name '{}' must be nonempty and use only letters, digits, '-' and '_'",
                self.name
            )));
        }
        let e = &self.equation;
        if e.initial.is_some() == e.initial_csv.is_some() {
            return Err(HarnessError::Config(
                "exactly one of equation.initial and equation.initial_csv is required".into(),
            ));
        }
        self.estimates.scope()?;
        if e.mode == Mode::Elliptic {
            if let Some(k) = self.estimates.select.iter().find(|k| k.needs_time()) {
                return Err(HarnessError::Config(format!(
                    "estimate {k:?} needs a parabolic solution"
                )));
            }
        }
        if e.mode == Mode::Parabolic && self.estimates.select.contains(&EstimateKind::Liouville) {
            return Err(HarnessError::Config("the constancy check needs mode = \"elliptic\"".into()));
        }
        let est = &self.estimates;
        if est.lambda_sweep().iter().any(|&l| !(l > 1.0)) {
            return Err(HarnessError::Config("lambda must exceed 1".into()));
        }
        if est.epsilons.is_empty() || est.epsilons.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(HarnessError::Config("epsilons must lie in (0, 1)".into()));
        }
        if !(est.epsilon > 0.0 && est.epsilon < 1.0) {
            return Err(HarnessError::Config("epsilon must lie in (0, 1)".into()));
        }
        if est.path_stride == 0 || est.path_slices == 0 {
            return Err(HarnessError::Config("path mesh must be nonempty".into()));
        }
        Ok(())
    }

    pub fn build_geometry(&self) -> Result<Geometry, HarnessError> {
        let g = &self.geometry;
        let missing = |f: &str| HarnessError::Config(format!("geometry.{f} is required for this family"));
        let family = match g.family {
            FamilyName::ConformalTorus => Family::ConformalTorus {
                n: g.n.ok_or_else(|| missing("n"))?,
                sigma: expr("geometry.sigma", g.sigma.as_deref().unwrap_or("1"), &[Var::T])?,
                length: g.length.unwrap_or(2.0 * PI),
            },
            FamilyName::Warped => {
                if g.n.is_some_and(|n| n != 2) {
                    return Err(HarnessError::Config("warped surfaces have n = 2".into()));
                }
                Family::Warped {
                    warp: expr("geometry.warp", g.warp.as_deref().ok_or_else(|| missing("warp"))?, &[Var::T, Var::X])?,
                    topology: g.topology.ok_or_else(|| missing("topology"))?,
                    r_min: g.r_min.unwrap_or(0.0),
                    r_max: g.r_max.ok_or_else(|| missing("r_max"))?,
                }
            }
        };
        let f = expr("geometry.potential", &g.potential, &[Var::T, Var::X])?;
        let gr = &self.grid;
        Geometry::new(family, f, gr.nx, gr.nt, gr.t_end, g.m.to_bakry_emery()?)
            .map_err(|e| HarnessError::Config(format!("geometry: {e}")))
    }

    pub fn build_q(&self) -> Result<Expr, HarnessError> {
        expr("equation.q", &self.equation.q, &[Var::T, Var::X])
    }

    pub fn build_sigma(&self) -> Result<NonlinearitySpec, HarnessError> {
        let n = &self.equation.nonlinearity;
        make_catalog_entry(&n.entry, &n.coefficients())
            .map_err(|e| HarnessError::Config(format!("equation.nonlinearity: {e}")))
    }

    pub fn initial_values(&self, geom: &Geometry) -> Result<Vec<f64>, HarnessError> {
        let e = &self.equation;
        if let Some(src) = &e.initial {
            let u0 = expr("equation.initial", src, &[Var::X])?;
            return Ok(harnack_core::solver::sample_initial(geom, &u0));
        }
        let path = e.initial_csv.as_ref().expect("validated");
        let text = std::fs::read_to_string(path)
            .map_err(|err| HarnessError::Config(format!("{}: {err}", path.display())))?;
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("u0") {
            return Err(HarnessError::Config(format!("{}: header must be 'u0'", path.display())));
        }
        let values = lines
            .enumerate()
            .map(|(k, l)| {
                l.parse::<f64>()
                    .map_err(|_| HarnessError::Config(format!("{}: row {}: not a number", path.display(), k + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != geom.grid().nx {
            return Err(HarnessError::Config(format!(
                "{}: {} values for {} nodes",
                path.display(),
                values.len(),
                geom.grid().nx
            )));
        }
        Ok(values)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
