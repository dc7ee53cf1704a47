//! The experiment commands. Each writes its result files into `out_dir` and
//! returns their paths.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use flatlab::regularity::{
    doubling_certify, flatness_iterate, flatness_step, measure, oscillation_profile, MeasureOptions,
    OscillationProfile,
};
use flatlab::solver::kappa_normalize;
use flatlab::viscosity::{default_catalogue, equivalence, touching_check, TouchingOptions};
use flatlab::{
    grid, solve, ClosedForm, Error, Grid, NodeKind, Preset, ProblemSpec, Result, ScalarField,
    SolveReport,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, write_json, Table};
use crate::suite;

/// Nodes closer than this to the origin are left out of reported errors
/// against a reference function.
pub const ERROR_CORE_RADIUS: f64 = 0.1;

pub fn run_command(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match cfg.command.as_str() {
        "solve" => cmd_solve(cfg),
        "regularity" => cmd_regularity(cfg),
        "flatness" => cmd_flatness(cfg),
        "doubling" => cmd_doubling(cfg),
        "equivalence" => cmd_equivalence(cfg),
        "proptest" => cmd_proptest(cfg),
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    }
}

fn axis_names(dim: usize, names: [&str; 3]) -> Vec<String> {
    names[..dim].iter().map(|s| s.to_string()).collect()
}

/// `0` interior, `1` boundary band, `2` outside the computational domain.
fn mask_code(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Interior => "0",
        NodeKind::Boundary => "1",
        NodeKind::Exterior => "2",
    }
}

fn field_table(u: &ScalarField) -> Table {
    let grid = u.grid();
    let dim = grid.dim();
    let mut header = axis_names(dim, ["i", "j", "k"]);
    header.extend(axis_names(dim, ["x", "y", "z"]));
    header.push("u".into());
    header.push("mask".into());
    let mut table = Table::new(&header);
    for idx in 0..grid.len() {
        let m = grid.multi_index(idx);
        let x = grid.coords(idx);
        let mut row: Vec<String> = m[..dim].iter().map(|v| v.to_string()).collect();
        row.extend(x[..dim].iter().map(|&v| num(v)));
        row.push(num(u.get(idx)));
        row.push(mask_code(grid.kind(idx)).into());
        table.row(&row);
    }
    table
}

/// Max of `|u - g|` over interior nodes with `|x| >= 0.1`.
fn deviation_from(u: &ScalarField, g: &ClosedForm) -> f64 {
    let grid = u.grid();
    grid.interior()
        .iter()
        .filter(|&&i| grid::norm(&grid.coords(i)) >= ERROR_CORE_RADIUS)
        .map(|&i| (u.get(i) - g.eval(&grid.coords(i)[..grid.dim()])).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    #[serde(flatten)]
    report: &'a SolveReport,
    /// Max of `|u - g|` over interior nodes with `|x| >= 0.1`, where `g` is
    /// the boundary function; the solution error when `g` solves the problem.
    boundary_function_deviation: f64,
    nodes: usize,
    interior_nodes: usize,
    h: f64,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.problem()?;
    let (u, report) = solve(&spec, &cfg.solve_options())?;
    let grid = u.grid();
    let summary = SolveSummary {
        report: &report,
        boundary_function_deviation: deviation_from(&u, &spec.boundary),
        nodes: grid.len(),
        interior_nodes: grid.interior().len(),
        h: grid.h(),
    };
    let csv = field_table(&u).write(&cfg.out_dir, "solution.csv")?;
    let json = write_json(cfg, "solve.json", &summary)?;
    Ok(vec![csv, json])
}

/// A field to analyse together with the right-hand side it solves.
pub struct LoadedField {
    pub u: ScalarField,
    pub f: ScalarField,
    pub solve: Option<SolveReport>,
}

/// Resolves the `field` setting. A solve that does not converge is a
/// numerical error here, since the measurements would describe the iterate.
/// `field_scale = k` multiplies `u` by `k` and `f` by `k|k|^γ`.
pub fn load_field(cfg: &RunConfig) -> Result<LoadedField> {
    let spec = cfg.problem()?;
    let grid = spec.grid()?;
    let f = spec.rhs.sample(&grid);
    let (u, solve) = if cfg.field == "solve" {
        let (u, rep) = solve(&spec, &cfg.solve_options())?;
        if !rep.converged {
            return Err(Error::Numerical(format!(
                "solve stopped after {} sweeps at residual {:e} (tol {:e})",
                rep.iterations, rep.final_residual, rep.tol
            )));
        }
        (u, Some(rep))
    } else if let Some(name) = cfg.field.strip_prefix("preset:") {
        let preset: Preset = name.parse()?;
        (ClosedForm::new(preset).sample(&grid), None)
    } else if let Some(path) = cfg.field.strip_prefix("file:") {
        (read_field(&grid, Path::new(path))?, None)
    } else {
        return Err(Error::Config(format!(
            "field must be 'solve', 'preset:<name>' or 'file:<path>' (got '{}')",
            cfg.field
        )));
    };
    let k = cfg.field_scale;
    Ok(LoadedField {
        u: u.scaled(k),
        f: f.scaled(k * k.abs().powf(cfg.gamma)),
        solve,
    })
}

/// Reads a field written by `solve` on the same grid.
pub fn read_field(grid: &Arc<Grid>, path: &Path) -> Result<ScalarField> {
    let bad = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let dim = grid.dim();
    let index_cols: Vec<usize> = ["i", "j", "k"][..dim].iter().map(|c| col(c)).collect::<Result<_>>()?;
    let u_col = col("u")?;
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut m = [0usize; grid::MAX_DIM];
        for (k, &c) in index_cols.iter().enumerate() {
            m[k] = rec[c]
                .parse()
                .map_err(|_| bad(format!("bad index '{}'", &rec[c])))?;
            if m[k] >= grid.n() {
                return Err(bad(format!("index {} outside a grid with n = {}", m[k], grid.n())));
            }
        }
        let v: f64 = rec[u_col].parse().map_err(|_| bad(format!("bad value '{}'", &rec[u_col])))?;
        let idx = grid.index(&m);
        if values[idx].is_nan() {
            seen += 1;
        }
        values[idx] = v;
    }
    if seen != grid.len() {
        return Err(bad(format!(
            "{seen} distinct nodes, but the configured grid (dim {dim}, n {}) has {}",
            grid.n(),
            grid.len()
        )));
    }
    ScalarField::from_values(grid, values)
}

fn profile_table(profile: &OscillationProfile, dim: usize, used: &[usize]) -> Table {
    let mut header: Vec<String> = vec!["k".into(), "r".into(), "phi".into()];
    header.extend((1..=dim).map(|k| format!("p{k}")));
    header.push("nodes".into());
    header.push("used".into());
    let mut table = Table::new(&header);
    for e in &profile.entries {
        let mut row = vec![e.k.to_string(), num(e.r), num(e.phi)];
        row.extend(e.p[..dim].iter().map(|&v| num(v)));
        row.push(e.nodes.to_string());
        row.push(used.contains(&e.k).to_string());
        table.row(&row);
    }
    table
}

fn measure_options(cfg: &RunConfig) -> MeasureOptions {
    let center = grid::point(&cfg.center);
    MeasureOptions {
        center,
        rho: cfg.rho,
        k_max: cfg.k,
        betas: cfg.betas.clone(),
        holder_radius: cfg.holder_radius,
        alpha: cfg.alpha(),
        centers: vec![center],
    }
}

#[derive(Serialize)]
struct SweepRow {
    gamma: f64,
    alpha_expected: f64,
    alpha: f64,
    stderr: f64,
    within_tolerance: bool,
    iterations: usize,
    boundary_function_deviation: f64,
}

#[derive(Serialize)]
struct SweepSummary {
    /// Allowed `|α - 1/(1+γ)|`.
    tolerance: f64,
    rows: Vec<SweepRow>,
    all_within: bool,
}

/// Allowed deviation of a swept exponent from `1/(1+γ)`.
pub const SWEEP_TOLERANCE: f64 = 0.1;

pub fn cmd_regularity(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if let Some(gammas) = &cfg.sweep_gamma {
        return regularity_sweep(cfg, gammas);
    }
    let field = load_field(cfg)?;
    let opts = measure_options(cfg);
    let dim = field.u.grid().dim();
    let profile = oscillation_profile(&field.u, &opts.center, opts.rho, opts.k_max)?;
    let outcome = measure(&field.u, &opts);
    let used = outcome.as_ref().map(|(_, r)| r.used_scales.clone()).unwrap_or_default();
    let csv = profile_table(&profile, dim, &used).write(&cfg.out_dir, "profile.csv")?;
    let (_, report) = outcome?;
    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        report: &'a flatlab::regularity::RegularityReport,
        solve: Option<&'a SolveReport>,
    }
    let json = write_json(cfg, "regularity.json", &Summary { report: &report, solve: field.solve.as_ref() })?;
    Ok(vec![csv, json])
}

/// Manufactured problems `u = |x|^{1+α}`, `α = 1/(1+γ)`, one per `γ`.
fn regularity_sweep(cfg: &RunConfig, gammas: &[f64]) -> Result<Vec<PathBuf>> {
    let base = cfg.problem()?;
    let opts = measure_options(cfg);
    let mut rows = Vec::new();
    let mut failure = None;
    for &gamma in gammas {
        let alpha_expected = 1.0 / (1.0 + gamma);
        let spec = manufactured_spec(&base, gamma)?;
        let mut solve_opts = cfg.solve_options();
        solve_opts.tol = None;
        let (u, rep) = solve(&spec, &solve_opts)?;
        if !rep.converged {
            failure = Some(Error::Numerical(format!("gamma {gamma}: solve did not converge")));
            break;
        }
        match measure(&u, &opts) {
            Ok((_, report)) => rows.push(SweepRow {
                gamma,
                alpha_expected,
                alpha: report.alpha,
                stderr: report.stderr,
                within_tolerance: (report.alpha - alpha_expected).abs() <= SWEEP_TOLERANCE,
                iterations: rep.iterations,
                boundary_function_deviation: deviation_from(&u, &spec.boundary),
            }),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let mut table = Table::new(&["gamma", "alpha_expected", "alpha", "stderr", "within_tolerance"]);
    for r in &rows {
        table.row(&[
            num(r.gamma),
            num(r.alpha_expected),
            num(r.alpha),
            num(r.stderr),
            r.within_tolerance.to_string(),
        ]);
    }
    let csv = table.write(&cfg.out_dir, "sweep.csv")?;
    if let Some(e) = failure {
        return Err(e);
    }
    let all_within = rows.iter().all(|r| r.within_tolerance);
    let summary = SweepSummary { tolerance: SWEEP_TOLERANCE, rows, all_within };
    let json = write_json(cfg, "regularity.json", &summary)?;
    Ok(vec![csv, json])
}

/// `base` with boundary `|x|^{1+α}`, `α = 1/(1+γ)`, and the matching
/// constant right-hand side.
pub fn manufactured_spec(base: &ProblemSpec, gamma: f64) -> Result<ProblemSpec> {
    let alpha = 1.0 / (1.0 + gamma);
    let c = flatlab::problem::manufactured_rhs(base.dim, gamma, &base.operator);
    let mut spec = base.clone().with_gamma(gamma).with_rhs(ClosedForm::constant(c));
    spec.boundary = ClosedForm::new(Preset::RadialPower(alpha));
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_flatness(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let alpha = cfg.alpha();
    let cap = 1.0 / (1.0 + cfg.gamma);
    if !(alpha > 0.0 && alpha < cap) {
        return Err(Error::Config(format!(
            "alpha must satisfy 0 < alpha < 1/(1+gamma) = {cap} (got {alpha})"
        )));
    }
    let field = load_field(cfg)?;
    let (u, f, kappa) = if cfg.normalize {
        let kn = kappa_normalize(&field.u, &field.f, cfg.eps0, cfg.gamma)?;
        (kn.u, kn.f, Some(kn.kappa).filter(|k| k.is_finite()))
    } else {
        (field.u, field.f, None)
    };
    let p = grid::point(&cfg.p);
    let step = flatness_step(&u, &p, cfg.rho)?;
    let trace = flatness_iterate(&u, Some(&f), cfg.gamma, cfg.rho, alpha, cfg.k)?;

    let dim = u.grid().dim();
    let mut header: Vec<String> = vec!["k".into(), "r".into()];
    header.extend((1..=dim).map(|k| format!("p{k}")));
    header.extend(["osc", "bound", "bound_ok", "rescaled_osc", "rescaled_f", "nodes"].map(String::from));
    let mut table = Table::new(&header);
    for row in &trace.rows {
        let mut rec = vec![row.k.to_string(), num(row.r)];
        rec.extend(row.p[..dim].iter().map(|&v| num(v)));
        rec.extend([
            num(row.osc),
            num(row.bound),
            row.bound_ok.to_string(),
            num(row.rescaled_osc),
            num(row.rescaled_f),
            row.nodes.to_string(),
        ]);
        table.row(&rec);
    }
    let csv = table.write(&cfg.out_dir, "flatness.csv")?;

    #[derive(Serialize)]
    struct Summary<'a> {
        /// `null` when no rescaling was done (disabled, or `u ≡ 0 ≡ f`).
        kappa: Option<f64>,
        u_max: f64,
        f_max: f64,
        step: &'a flatlab::regularity::FlatnessStep,
        trace: &'a flatlab::regularity::FlatnessTrace,
        all_pass: bool,
    }
    let summary = Summary {
        kappa,
        u_max: u.max_abs(),
        f_max: f.max_abs(),
        step: &step,
        trace: &trace,
        all_pass: trace.all_pass,
    };
    let json = write_json(cfg, "flatness.json", &summary)?;
    Ok(vec![csv, json])
}

pub fn cmd_doubling(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dc = cfg.doubling();
    dc.validate()?;
    let field = load_field(cfg)?;
    let cert = doubling_certify(&field.u, &dc)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        cert: &'a flatlab::regularity::DoublingCertificate,
        s0: f64,
        #[serde(rename = "L2")]
        l2: f64,
    }
    let json = write_json(cfg, "doubling.json", &Summary { cert: &cert, s0: dc.s0(), l2: dc.l2() })?;
    Ok(vec![json])
}

pub fn cmd_equivalence(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.problem()?;
    let opts = cfg.solve_options();
    let eq = equivalence(&spec, &opts)?;
    let grid = eq.degenerate.grid();
    let h = grid.h();
    let tol = eq.degenerate_report.tol.max(eq.uniform_report.tol);
    let bound = 5.0 * h * h + 2.0 * tol;

    let tests = default_catalogue(grid.dim());
    let touching = touching_check(
        &eq.degenerate,
        spec.gamma,
        &spec.drift,
        &spec.operator,
        None,
        &tests,
        &TouchingOptions { tol_visc: cfg.tol_visc, strict: true },
    )?;
    let dim = grid.dim();
    let mut header: Vec<String> = vec!["node".into()];
    header.extend(axis_names(dim, ["x", "y", "z"]));
    header.extend(["test", "label", "slope", "side", "slack", "violation"].map(String::from));
    let mut table = Table::new(&header);
    for ev in &touching.events {
        let mut rec = vec![ev.node.to_string()];
        rec.extend(ev.x[..dim].iter().map(|&v| num(v)));
        rec.extend([
            ev.test.to_string(),
            tests[ev.test].label.clone(),
            match ev.slope {
                flatlab::viscosity::SlopeChoice::Zero => "zero".to_string(),
                flatlab::viscosity::SlopeChoice::Gradient => "gradient".to_string(),
            },
            ev.side.as_str().to_string(),
            num(ev.slack),
            (ev.slack < -touching.tol_visc).to_string(),
        ]);
        table.row(&rec);
    }
    let csv = table.write(&cfg.out_dir, "touching.csv")?;

    #[derive(Serialize)]
    struct Summary<'a> {
        max_gap: f64,
        /// `5h² + 2·tol`.
        bound: f64,
        within_bound: bool,
        h: f64,
        degenerate: &'a SolveReport,
        uniform: &'a SolveReport,
        touching_tests: usize,
        touching_events: usize,
        touching_violations: usize,
        tol_visc: f64,
    }
    let summary = Summary {
        max_gap: eq.max_gap,
        bound,
        within_bound: eq.max_gap <= bound,
        h,
        degenerate: &eq.degenerate_report,
        uniform: &eq.uniform_report,
        touching_tests: tests.len(),
        touching_events: touching.events.len(),
        touching_violations: touching.violations.len(),
        tol_visc: touching.tol_visc,
    };
    let json = write_json(cfg, "equivalence.json", &summary)?;
    Ok(vec![csv, json])
}

pub fn cmd_proptest(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let report = suite::run(cfg.seed, cfg.cases)?;
    let json = write_json(cfg, "proptest.json", &report)?;
    if !report.pass {
        return Err(Error::Numerical(format!("property suite failed: {report:?}")));
    }
    Ok(vec![json])
}
