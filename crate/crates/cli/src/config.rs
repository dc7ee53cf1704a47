//! Run configuration: defaults, JSON file, command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use flatlab::problem::manufactured_rhs;
use flatlab::regularity::DoublingConfig;
use flatlab::{
    ClosedForm, EllipticOperator, EllipticityConstants, Error, OperatorKind, Preset, ProblemSpec,
    Result, SolveOptions,
};
use serde::{Deserialize, Serialize};

/// Every knob of every command. Unset optional values are filled in by
/// [`RunConfig::resolve`] and written back, so emitted summaries carry the
/// values actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,

    pub dim: usize,
    pub gamma: f64,
    /// `neg-laplacian`, `pucci-minus` or `pucci-plus`.
    pub operator: String,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub p: Vec<f64>,
    /// Boundary preset (see the preset table).
    pub boundary: String,
    /// Right-hand side preset, or `manufactured` for the constant making
    /// `|x|^{1+1/(1+γ)}` exact.
    pub f: String,
    /// Constant right-hand side; overrides `f` when set.
    pub f_const: Option<f64>,
    pub n: usize,
    pub stencil_w: usize,

    /// Defaults to `1e-8 · max(1, ‖f‖∞)`.
    pub tol: Option<f64>,
    pub max_iters: usize,

    /// Field analysed by regularity, flatness and doubling: `solve` (solve the
    /// configured problem), `preset:<name>` (sample a preset) or
    /// `file:<path>` (a solution CSV written by `solve`).
    pub field: String,
    /// Multiplier applied to the analysed field.
    pub field_scale: f64,
    pub rho: f64,
    #[serde(rename = "K")]
    pub k: usize,
    /// Defaults to `0.8 / (1 + γ)`.
    pub alpha: Option<f64>,
    pub center: Vec<f64>,
    pub eps0: f64,
    /// Rescale `u` and `f` by `κ` before the flatness measurements.
    pub normalize: bool,
    pub betas: Vec<f64>,
    pub holder_radius: f64,
    pub sweep_gamma: Option<Vec<f64>>,

    pub r: f64,
    pub x0: Vec<f64>,
    #[serde(rename = "L1")]
    pub l1: f64,
    /// Defaults to `(4/r)²`.
    #[serde(rename = "L2")]
    pub l2: Option<f64>,
    pub omega0: f64,
    pub a0: f64,

    /// Absolute touching tolerance; defaults to `10 h`.
    pub tol_visc: Option<f64>,

    pub out_dir: PathBuf,
    pub seed: u64,
    pub cases: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            dim: 2,
            gamma: 0.0,
            operator: "neg-laplacian".into(),
            lambda: 1.0,
            big_lambda: 1.0,
            p: vec![0.0, 0.0],
            boundary: "zero".into(),
            f: "zero".into(),
            f_const: None,
            n: 65,
            stencil_w: 2,
            tol: None,
            max_iters: 1_000_000,
            field: "solve".into(),
            field_scale: 1.0,
            rho: 0.5,
            k: 6,
            alpha: None,
            center: vec![0.0, 0.0],
            eps0: 0.1,
            normalize: true,
            betas: vec![0.25, 0.5, 0.75],
            holder_radius: 0.5,
            sweep_gamma: None,
            r: 0.5,
            x0: vec![0.0, 0.0],
            l1: 1.0,
            l2: None,
            omega0: 0.5,
            a0: 1.0,
            tol_visc: None,
            out_dir: PathBuf::from("."),
            seed: 0,
            cases: 1000,
        }
    }
}

/// Command-line overrides; each flag replaces the corresponding config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub operator: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "Lambda", alias = "big-lambda")]
    pub big_lambda: Option<f64>,
    /// Slope p, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub boundary: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f_const: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub stencil_w: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub field_scale: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "K", alias = "k")]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub holder_radius: Option<f64>,
    /// Manufactured-solution sweep over these γ values (regularity only).
    #[arg(long, value_delimiter = ',')]
    pub sweep_gamma: Option<Vec<f64>>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long = "L1", alias = "l1")]
    pub l1: Option<f64>,
    #[arg(long = "L2", alias = "l2")]
    pub l2: Option<f64>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub tol_visc: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cases: Option<usize>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $( if let Some(v) = &$ov.$field { $cfg.$field = v.clone(); } )*
    };
}

impl RunConfig {
    /// Defaults, then the file named by `--config`, then the flags.
    pub fn load(command: &str, ov: &Overrides) -> Result<RunConfig> {
        let mut cfg = match &ov.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if !cfg.command.is_empty() && cfg.command != command {
            return Err(cfg_err(format!(
                "config file is for command '{}', not '{command}'",
                cfg.command
            )));
        }
        cfg.command = command.to_string();
        apply!(
            cfg, ov, dim, gamma, operator, lambda, big_lambda, p, boundary, f, n, stencil_w,
            max_iters, field, field_scale, rho, k, center, eps0, normalize, betas, holder_radius,
            r, x0, l1, omega0, a0, out_dir, seed, cases
        );
        if ov.f_const.is_some() {
            cfg.f_const = ov.f_const;
        }
        if ov.tol.is_some() {
            cfg.tol = ov.tol;
        }
        if ov.alpha.is_some() {
            cfg.alpha = ov.alpha;
        }
        if ov.sweep_gamma.is_some() {
            cfg.sweep_gamma = ov.sweep_gamma.clone();
        }
        if ov.l2.is_some() {
            cfg.l2 = ov.l2;
        }
        if ov.tol_visc.is_some() {
            cfg.tol_visc = ov.tol_visc;
        }
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| cfg_err(format!("invalid config {}: {e}", path.display())))
    }

    /// Validates and fills the defaults that depend on other fields.
    pub fn resolve(&mut self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(cfg_err(format!("dim must be 1, 2 or 3 (got {})", self.dim)));
        }
        for (name, v) in [("p", &mut self.p), ("center", &mut self.center), ("x0", &mut self.x0)] {
            if v.len() > self.dim {
                return Err(cfg_err(format!("{name} has more than dim = {} components", self.dim)));
            }
            v.resize(self.dim, 0.0);
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(cfg_err(format!("gamma must be finite and >= 0 (got {})", self.gamma)));
        }
        let alpha = self.alpha.unwrap_or(0.8 / (1.0 + self.gamma));
        self.alpha = Some(alpha);
        if self.l2.is_none() && self.r > 0.0 {
            self.l2 = Some((4.0 / self.r).powi(2));
        }
        if !(self.field_scale.is_finite()) {
            return Err(cfg_err("field_scale must be finite"));
        }
        self.operator()?;
        self.boundary_form()?;
        let spec = self.problem()?;
        let grid = spec.grid()?;
        if self.tol.is_none() {
            let fmax = spec.rhs.sample(&grid).max_abs();
            self.tol = Some(1e-8 * fmax.max(1.0));
        }
        if self.tol_visc.is_none() {
            self.tol_visc = Some(10.0 * grid.h());
        }
        if let Some(sw) = &self.sweep_gamma {
            if sw.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return Err(cfg_err("sweep_gamma values must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.8 / (1.0 + self.gamma))
    }

    pub fn operator(&self) -> Result<EllipticOperator> {
        let kind: OperatorKind = self.operator.parse()?;
        let c = EllipticityConstants::new(self.lambda, self.big_lambda)?;
        Ok(EllipticOperator::new(kind, c))
    }

    fn boundary_form(&self) -> Result<ClosedForm> {
        Ok(ClosedForm::new(self.boundary.parse::<Preset>()?))
    }

    fn rhs_form(&self, op: &EllipticOperator) -> Result<ClosedForm> {
        if let Some(c) = self.f_const {
            if !c.is_finite() {
                return Err(cfg_err("f_const must be finite"));
            }
            return Ok(ClosedForm::constant(c));
        }
        if self.f == "manufactured" {
            return Ok(ClosedForm::constant(manufactured_rhs(self.dim, self.gamma, op)));
        }
        Ok(ClosedForm::new(self.f.parse::<Preset>()?))
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let op = self.operator()?;
        let mut spec = ProblemSpec::new(op, self.gamma, self.boundary_form()?, self.n)
            .with_rhs(self.rhs_form(&op)?)
            .with_drift(&self.p);
        spec.dim = self.dim;
        spec.stencil_radius = self.stencil_w;
        spec.validate()?;
        Ok(spec)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iters: self.max_iters, ..SolveOptions::default() }
    }

    pub fn doubling(&self) -> DoublingConfig {
        DoublingConfig {
            r: self.r,
            x0: flatlab::grid::point(&self.x0),
            l1: self.l1,
            l2: self.l2,
            omega0: self.omega0,
            a0: self.a0,
        }
    }
}
