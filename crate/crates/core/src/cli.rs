//! Config-driven studies: projection verification, elasticity projection
//! verification, single solves and solver convergence studies, written out
//! as `errors.csv`, `diagnostics.csv` and `rates.txt`.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::elasticity::{elastic_level, ElasticLevel};
use crate::error::{Error, Result};
use crate::fields::ProblemId;
use crate::mesh::{random_star_polygon, MeshFamily, MeshSpec, PolyMesh};
use crate::projection::{projection_level, ProjectionLevel, StudyOptions};
use crate::rates::{fitted_rate, RateCheck};
use crate::solver::{error_report, scheme_residuals, solve, SolverOptions};

/// Identity residual tolerance for polynomial data.
pub const POLY_IDENTITY_TOL: f64 = 1e-10;
/// Identity residual tolerance for smooth non-polynomial data.
pub const SMOOTH_IDENTITY_TOL: f64 = 1e-9;
pub const ENERGY_TOL: f64 = 1e-9;
pub const SCHEME_TOL: f64 = 1e-10;
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Errors below this are treated as exact reproduction; no slope is fitted.
pub const EXACT_TOL: f64 = 1e-10;
/// Largest condensed system whose spectrum is checked densely.
pub const SPD_CHECK_LIMIT: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Command {
    ProjectVerify,
    ElasticVerify,
    Solve,
    Converge,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::ProjectVerify => "project-verify",
            Command::ElasticVerify => "elastic-verify",
            Command::Solve => "solve",
            Command::Converge => "converge",
        })
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "project-verify" => Ok(Command::ProjectVerify),
            "elastic-verify" => Ok(Command::ElasticVerify),
            "solve" => Ok(Command::Solve),
            "converge" => Ok(Command::Converge),
            other => Err(Error::Input(format!(
                "unknown command '{other}' (expected project-verify, elastic-verify, solve or converge)"
            ))),
        }
    }
}

impl TryFrom<String> for Command {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Command> for String {
    fn from(c: Command) -> String {
        c.to_string()
    }
}

/// A structured mesh family, or `pentagon`: one random star-shaped pentagon
/// per level, halved in size at each level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Mesh(MeshFamily),
    Pentagon,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Mesh(m) => m.fmt(f),
            Family::Pentagon => f.write_str("pentagon"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "pentagon" {
            Ok(Family::Pentagon)
        } else {
            s.parse().map(Family::Mesh).map_err(|_| {
                Error::Input(format!(
                    "unknown mesh family '{s}' (expected quad, triangle, distorted-quad, hexagon or pentagon)"
                ))
            })
        }
    }
}

impl TryFrom<String> for Family {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

fn default_base() -> usize {
    4
}
fn default_levels() -> usize {
    4
}
fn default_seed() -> u64 {
    7
}
fn default_k() -> usize {
    1
}
fn default_tau_c() -> f64 {
    1.0
}
fn default_family() -> Family {
    Family::Mesh(MeshFamily::Quad)
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a study needs. Field names double as the TOML keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub command: Command,
    #[serde(default = "default_family")]
    pub family: Family,
    /// Cells per direction on the coarsest level.
    #[serde(default = "default_base")]
    pub base: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    /// `tau = tau_c / h_K`.
    #[serde(default = "default_tau_c")]
    pub tau_c: f64,
    /// Defaults to `elastic-trig` for `elastic-verify` and `trig` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exactness: Option<usize>,
    #[serde(default)]
    pub include_coarsest: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl StudyConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            family: default_family(),
            base: default_base(),
            levels: default_levels(),
            seed: default_seed(),
            k: default_k(),
            tau_c: default_tau_c(),
            problem: None,
            exactness: None,
            include_coarsest: false,
            out: default_out(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let location = e.span().map_or_else(
                || "config".to_string(),
                |span| {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    format!("line {line}, column {col}")
                },
            );
            Error::Parse {
                location,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn problem(&self) -> ProblemId {
        self.problem.unwrap_or(match self.command {
            Command::ElasticVerify => ProblemId::ElasticTrig,
            _ => ProblemId::Trig,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::Input("levels must be at least 1".into()));
        }
        if self.levels > 8 {
            return Err(Error::Input(format!("levels must be at most 8, got {}", self.levels)));
        }
        if self.base < 1 {
            return Err(Error::Input("base must be at least 1".into()));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(Error::Input(format!("tau_c must be positive and finite, got {}", self.tau_c)));
        }
        if self.k > 8 {
            return Err(Error::Input(format!("k must be at most 8, got {}", self.k)));
        }
        let elastic = self.command == Command::ElasticVerify;
        if elastic && self.k < 1 {
            return Err(Error::Input("elastic-verify needs k >= 1".into()));
        }
        if elastic != self.problem().is_elastic() {
            return Err(Error::Input(format!(
                "problem '{}' does not fit command '{}'",
                self.problem(),
                self.command
            )));
        }
        if self.command == Command::Converge && self.levels < 3 {
            return Err(Error::Input(format!(
                "converge needs at least 3 levels, got {}",
                self.levels
            )));
        }
        if self.family == Family::Pentagon && matches!(self.command, Command::Solve | Command::Converge) {
            return Err(Error::Input("the pentagon family is a single cell; use it with the verify commands".into()));
        }
        if let Some(q) = self.exactness {
            // the primal mass matrix needs degree 2(k+1)
            if q < 2 * (self.k + 1) || q > 40 {
                return Err(Error::Input(format!(
                    "exactness must lie in {}..=40 for k = {}, got {q}",
                    2 * (self.k + 1),
                    self.k
                )));
            }
        }
        Ok(())
    }

    /// One line of JSON recording the config, for file headers.
    pub fn header(&self) -> String {
        format!(
            "# hdgplus {} config: {}",
            env!("CARGO_PKG_VERSION"),
            serde_json::to_string(self).expect("config serializes")
        )
    }

    pub fn meshes(&self) -> Result<Vec<PolyMesh>> {
        (0..self.levels)
            .map(|l| match self.family {
                Family::Mesh(f) => MeshSpec::new(f, self.base).with_seed(self.seed).refined(l).generate(),
                Family::Pentagon => {
                    let r = 0.5 / self.base as f64 / (1u64 << l) as f64;
                    random_star_polygon(5, Point2::new(0.5, 0.5), r, self.seed)
                }
            })
            .collect()
    }
}

/// One pass/fail line of `rates.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub passed: bool,
}

impl Check {
    fn bound(name: &str, value: f64, tol: f64) -> Self {
        Self {
            label: format!("{name} = {value:.3e} (<= {tol:.0e})"),
            passed: value <= tol,
        }
    }

    fn rate(r: &RateCheck) -> Self {
        Self {
            label: r.describe(),
            passed: r.passed(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<4} {}", if self.passed { "PASS" } else { "FAIL" }, self.label)
    }
}

/// What a study produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// Informational lines of `rates.txt` without a verdict.
    pub notes: Vec<String>,
    pub errors_csv: String,
    pub diagnostics_csv: String,
    pub rates_txt: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("errors.csv"), &self.errors_csv)?;
        std::fs::write(dir.join("diagnostics.csv"), &self.diagnostics_csv)?;
        std::fs::write(dir.join("rates.txt"), &self.rates_txt)?;
        Ok(())
    }
}

struct Table {
    text: String,
}

impl Table {
    fn new(cfg: &StudyConfig, columns: &[&str]) -> Self {
        let mut text = cfg.header();
        text.push('\n');
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, level: usize, ints: &[usize], floats: &[f64]) {
        let mut cells = vec![level.to_string()];
        cells.extend(ints.iter().map(usize::to_string));
        // NaN marks a quantity that does not apply at this level
        cells.extend(floats.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v:.16e}") }));
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

/// A slope check, or an exactness check when every error vanishes.
fn rate_or_exact(name: &str, h: &[f64], e: &[f64], include_coarsest: bool, check: impl Fn(f64) -> RateCheck) -> Result<Check> {
    let worst = e.iter().fold(0.0_f64, |m, v| m.max(*v));
    if worst <= EXACT_TOL {
        return Ok(Check {
            label: format!("{name}: reproduced exactly (max error {worst:.3e})"),
            passed: true,
        });
    }
    Ok(Check::rate(&check(fitted_rate(h, e, include_coarsest)?)))
}

fn is_polynomial(p: ProblemId) -> bool {
    matches!(p, ProblemId::Poly(_))
}

fn geometry_stats(mesh: &PolyMesh) -> Result<(f64, usize)> {
    let gamma = mesh
        .geometries()?
        .iter()
        .map(|g| g.shape_regularity().gamma_k)
        .fold(0.0, f64::max);
    Ok((gamma, mesh.max_face_count()))
}

fn rates_text(cfg: &StudyConfig, checks: &[Check], notes: &[String]) -> String {
    let mut s = cfg.header();
    s.push('\n');
    for n in notes {
        let _ = writeln!(s, "     {n}");
    }
    for c in checks {
        let _ = writeln!(s, "{c}");
    }
    let ok = checks.iter().all(|c| c.passed);
    let _ = writeln!(s, "status: {}", if ok { "PASS" } else { "FAIL" });
    s
}

fn project_verify(cfg: &StudyConfig, meshes: &[PolyMesh]) -> Result<Outcome> {
    let problem = cfg.problem().scalar()?;
    let opts = StudyOptions {
        k: cfg.k,
        tau_c: cfg.tau_c,
        exactness: cfg.exactness,
        include_coarsest: cfg.include_coarsest,
    };
    let (q, f, u) = (&*problem.q, &*problem.f, &*problem.u);
    let levels: Vec<ProjectionLevel> = meshes
        .iter()
        .map(|m| projection_level(m, &opts, q, f, u))
        .collect::<Result<_>>()?;

    let mut errors = Table::new(
        cfg,
        &["level", "n_cells", "h_max", "q_proj_error", "u_proj_error", "delta_plus", "delta_minus", "identity_residual"],
    );
    let mut diag = Table::new(cfg, &["level", "n_cells", "max_faces", "max_gamma"]);
    for (i, (l, m)) in levels.iter().zip(meshes).enumerate() {
        errors.row(i, &[l.n_cells], &[l.h_max, l.q_error, l.u_error, l.delta_plus, l.delta_minus, l.identity_residual]);
        let (gamma, faces) = geometry_stats(m)?;
        diag.row(i, &[l.n_cells, faces], &[gamma]);
    }

    let tol = if is_polynomial(cfg.problem()) { POLY_IDENTITY_TOL } else { SMOOTH_IDENTITY_TOL };
    let worst = levels.iter().map(|l| l.identity_residual).fold(0.0, f64::max);
    let mut checks = vec![Check::bound("max projection identity residual", worst, tol)];
    let mut notes = Vec::new();
    if matches!(cfg.family, Family::Mesh(_)) && levels.len() >= 3 {
        let k = cfg.k as f64;
        let h: Vec<f64> = levels.iter().map(|l| l.h_max).collect();
        let col = |f: fn(&ProjectionLevel) -> f64| levels.iter().map(f).collect::<Vec<_>>();
        let ic = cfg.include_coarsest;
        checks.push(rate_or_exact("flux projection error", &h, &col(|l| l.q_error), ic, |s| {
            RateCheck::within("flux projection error", s, k + 1.0, 0.2)
        })?);
        checks.push(rate_or_exact("primal projection error", &h, &col(|l| l.u_error), ic, |s| {
            RateCheck::within("primal projection error", s, k + 2.0, 0.2)
        })?);
        checks.push(rate_or_exact("scaled boundary remainder", &h, &col(|l| l.delta_plus), ic, |s| {
            RateCheck::within("scaled boundary remainder", s, k + 1.0, 0.25)
        })?);
    } else {
        notes.push("no slopes fitted (needs a mesh family and at least 3 levels)".into());
    }
    Ok(finish(cfg, checks, notes, errors, diag))
}

fn elastic_verify(cfg: &StudyConfig, meshes: &[PolyMesh]) -> Result<Outcome> {
    let problem = cfg.problem().elastic()?;
    let opts = StudyOptions {
        k: cfg.k,
        tau_c: cfg.tau_c,
        exactness: cfg.exactness,
        include_coarsest: cfg.include_coarsest,
    };
    let levels: Vec<ElasticLevel> = meshes
        .iter()
        .map(|m| elastic_level(m, &opts, &*problem.sigma, &*problem.div_sigma, &*problem.u))
        .collect::<Result<_>>()?;

    let mut errors = Table::new(
        cfg,
        &[
            "level",
            "n_cells",
            "h_max",
            "sigma_error",
            "scaled_u_error",
            "scaled_delta",
            "total",
            "identity_residual",
            "rigid_residual",
        ],
    );
    let mut diag = Table::new(cfg, &["level", "n_cells", "max_faces", "max_gamma"]);
    for (i, (l, m)) in levels.iter().zip(meshes).enumerate() {
        errors.row(
            i,
            &[l.n_cells],
            &[l.h_max, l.sigma_error, l.scaled_u_error, l.scaled_delta, l.total(), l.identity_residual, l.rigid_residual],
        );
        let (gamma, faces) = geometry_stats(m)?;
        diag.row(i, &[l.n_cells, faces], &[gamma]);
    }
    let worst = |f: fn(&ElasticLevel) -> f64| levels.iter().map(f).fold(0.0, f64::max);
    let mut checks = vec![
        Check::bound("max elasticity identity residual", worst(|l| l.identity_residual), SMOOTH_IDENTITY_TOL),
        Check::bound(
            "max rigid-motion residual",
            worst(|l| l.rigid_residual),
            crate::elasticity::RIGID_MOTION_TOL,
        ),
    ];
    let mut notes = Vec::new();
    if matches!(cfg.family, Family::Mesh(_)) && levels.len() >= 3 {
        let h: Vec<f64> = levels.iter().map(|l| l.h_max).collect();
        let e: Vec<f64> = levels.iter().map(|l| l.total()).collect();
        let k = cfg.k as f64;
        checks.push(rate_or_exact("combined elasticity error", &h, &e, cfg.include_coarsest, |s| {
            RateCheck::within("combined elasticity error", s, k + 1.0, 0.2)
        })?);
    } else {
        notes.push("no slopes fitted (needs a mesh family and at least 3 levels)".into());
    }
    Ok(finish(cfg, checks, notes, errors, diag))
}

fn solver_runs(cfg: &StudyConfig, meshes: &[PolyMesh]) -> Result<Outcome> {
    let problem = cfg.problem().scalar()?;
    let data = problem.data();
    let opts = SolverOptions {
        k: cfg.k,
        tau_c: cfg.tau_c,
        exactness: cfg.exactness,
        ..SolverOptions::new(cfg.k)
    };
    let mut errors = Table::new(
        cfg,
        &[
            "level",
            "n_cells",
            "h_max",
            "q_error",
            "u_error",
            "trace_error",
            "proj_q_error",
            "proj_u_error",
            "q_proj_error",
            "delta_norm",
            "jump",
            "qk",
            "energy_lhs",
            "energy_rhs",
            "energy_bound",
            "energy_residual",
        ],
    );
    let mut diag = Table::new(
        cfg,
        &[
            "level",
            "n_cells",
            "max_faces",
            "condensed_size",
            "max_gamma",
            "asymmetry",
            "min_eigenvalue",
            "scheme_residual",
        ],
    );
    let mut reports = Vec::new();
    let mut worst_energy = 0.0_f64;
    let mut worst_scheme = 0.0_f64;
    let mut worst_asym = 0.0_f64;
    let mut bound_ok = true;
    let mut spd_ok = true;
    let mut spd_checked = 0;
    for (i, mesh) in meshes.iter().enumerate() {
        let sol = solve(mesh, &data, &opts)?;
        let r = error_report(mesh, &sol, &problem)?;
        let scheme = scheme_residuals(mesh, &sol, &data).max();
        let asym = sol.condensed.asymmetry();
        let n = sol.condensed.size();
        let min_eig = (n > 0 && n <= SPD_CHECK_LIMIT).then(|| sol.condensed.min_eigenvalue());
        if let Some(m) = min_eig {
            spd_checked += 1;
            spd_ok &= m > 0.0;
        }
        let e = r.energy;
        worst_energy = worst_energy.max(e.relative_residual());
        worst_scheme = worst_scheme.max(scheme);
        worst_asym = worst_asym.max(asym);
        bound_ok &= e.bound_holds();
        errors.row(
            i,
            &[r.n_cells],
            &[
                r.h_max,
                r.q_error,
                r.u_error,
                r.trace_error,
                r.proj_q_error,
                r.proj_u_error,
                r.q_proj_error,
                r.delta_norm,
                r.jump,
                r.qk.unwrap_or(f64::NAN),
                e.lhs,
                e.rhs,
                e.bound,
                e.relative_residual(),
            ],
        );
        let (gamma, faces) = geometry_stats(mesh)?;
        diag.row(i, &[r.n_cells, faces, n], &[gamma, asym, min_eig.unwrap_or(f64::NAN), scheme]);
        reports.push(r);
    }
    // the identity residual is relative to lhs, which vanishes for exact
    // solutions; then both sides must vanish instead
    let exact = reports.iter().all(|r| r.energy.lhs <= 1e-20);
    let mut checks = vec![if exact {
        let worst = reports.iter().map(|r| r.energy.rhs.abs()).fold(0.0, f64::max);
        Check::bound("energy identity sides (exact solution)", worst, 1e-20)
    } else {
        Check::bound("max energy identity residual", worst_energy, ENERGY_TOL)
    }];
    checks.push(Check {
        label: "energy bound lhs <= |kappa^-1/2 (Pi q - q)|^2 + |tau^-1/2 delta|^2 on every level".into(),
        passed: bound_ok,
    });
    checks.push(Check::bound("max scheme residual", worst_scheme, SCHEME_TOL));
    checks.push(Check::bound("max condensed asymmetry", worst_asym, SYMMETRY_TOL));
    checks.push(Check {
        label: format!("condensed matrix positive definite ({spd_checked} levels checked)"),
        passed: spd_ok,
    });
    let mut notes = Vec::new();
    if cfg.command == Command::Converge {
        let k = cfg.k as f64;
        let h: Vec<f64> = reports.iter().map(|r| r.h_max).collect();
        let col = |f: fn(&crate::solver::ErrorReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
        let ic = cfg.include_coarsest;
        checks.push(rate_or_exact("flux error", &h, &col(|r| r.q_error), ic, |s| {
            RateCheck::within("flux error", s, k + 1.0, 0.2)
        })?);
        checks.push(rate_or_exact("primal error", &h, &col(|r| r.u_error), ic, |s| {
            RateCheck::within("primal error", s, k + 2.0, 0.2)
        })?);
        let trace = col(|r| r.trace_error);
        if cfg.k >= 1 {
            checks.push(rate_or_exact("trace error", &h, &trace, ic, |s| {
                RateCheck::at_least("trace error", s, k + 1.8)
            })?);
        } else if trace.iter().any(|v| *v > EXACT_TOL) {
            notes.push(format!("trace error slope {:.3}", fitted_rate(&h, &trace, ic)?));
        }
        if cfg.k == 0 {
            let qk = col(|r| r.qk.unwrap_or(0.0));
            if qk.iter().any(|v| *v > EXACT_TOL) {
                notes.push(format!("boundary flux term slope {:.3}", fitted_rate(&h, &qk, ic)?));
            }
        }
        let pq = col(|r| r.proj_q_error);
        let pu = col(|r| r.proj_u_error);
        if pq.iter().chain(&pu).any(|v| *v > EXACT_TOL) {
            notes.push(format!(
                "projected flux error slope {:.3}, projected primal error slope {:.3}",
                fitted_rate(&h, &pq, ic)?,
                fitted_rate(&h, &pu, ic)?
            ));
        }
    }
    Ok(finish(cfg, checks, notes, errors, diag))
}

fn finish(cfg: &StudyConfig, checks: Vec<Check>, notes: Vec<String>, errors: Table, diag: Table) -> Outcome {
    let rates_txt = rates_text(cfg, &checks, &notes);
    Outcome {
        checks,
        notes,
        errors_csv: errors.text,
        diagnostics_csv: diag.text,
        rates_txt,
    }
}

/// Runs a validated study without touching the filesystem.
pub fn run(cfg: &StudyConfig) -> Result<Outcome> {
    cfg.validate()?;
    let meshes = cfg.meshes()?;
    match cfg.command {
        Command::ProjectVerify => project_verify(cfg, &meshes),
        Command::ElasticVerify => elastic_verify(cfg, &meshes),
        Command::Solve | Command::Converge => solver_runs(cfg, &meshes),
    }
}

/// Command-line flags; any flag overrides the same key of `--config`.
#[derive(Debug, Parser)]
#[command(name = "hdgplus", version, about = "HDG+ projection checks and diffusion convergence studies")]
pub struct Args {
    /// TOML file with the study keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// project-verify, elastic-verify, solve or converge.
    #[arg(long)]
    pub cmd: Option<String>,
    /// Polynomial degree of the flux space.
    #[arg(long)]
    pub k: Option<usize>,
    /// quad, triangle, distorted-quad, hexagon or pentagon.
    #[arg(long)]
    pub family: Option<String>,
    /// Cells per side on the coarsest level.
    #[arg(long)]
    pub base: Option<usize>,
    /// Number of meshes, each twice as fine as the last.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Seed for distorted and random meshes.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stabilisation constant c in tau = c / h_K.
    #[arg(long = "tau-c")]
    pub tau_c: Option<f64>,
    /// trig, poly-<p>, varkappa or elastic-trig.
    #[arg(long)]
    pub problem: Option<String>,
    /// Quadrature exactness override.
    #[arg(long)]
    pub exactness: Option<usize>,
    /// Keep the coarsest level in the slope fit.
    #[arg(long)]
    pub include_coarsest: bool,
    /// Directory for errors.csv, diagnostics.csv and rates.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Args {
    pub fn into_config(self) -> Result<StudyConfig> {
        let mut cfg = match (&self.config, &self.cmd) {
            (Some(path), _) => StudyConfig::from_toml_file(path)?,
            (None, Some(cmd)) => StudyConfig::new(cmd.parse()?),
            (None, None) => return Err(Error::Input("either --config or --cmd is required".into())),
        };
        if let Some(c) = &self.cmd {
            cfg.command = c.parse()?;
        }
        if let Some(f) = &self.family {
            cfg.family = f.parse()?;
        }
        if let Some(p) = &self.problem {
            cfg.problem = Some(p.parse()?);
        }
        cfg.k = self.k.unwrap_or(cfg.k);
        cfg.base = self.base.unwrap_or(cfg.base);
        cfg.levels = self.levels.unwrap_or(cfg.levels);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.tau_c = self.tau_c.unwrap_or(cfg.tau_c);
        cfg.exactness = self.exactness.or(cfg.exactness);
        cfg.include_coarsest |= self.include_coarsest;
        if let Some(o) = self.out {
            cfg.out = o;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Caps the worker threads at `HDGPLUS_THREADS` when it is set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("HDGPLUS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Input(format!("HDGPLUS_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Input(format!("cannot size the thread pool: {e}")))
}

/// Parses `argv`, runs the study, writes the files and returns the exit
/// code: 0 when every check passes, 1 on a failed check or numerical
/// error, 2 on bad usage or configuration.
pub fn main_with<I, T>(argv: I, stdout: &mut impl std::io::Write, stderr: &mut impl std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let cfg = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    if let Err(e) = outcome.write(&cfg.out) {
        let _ = writeln!(stderr, "error: {e}");
        return 1;
    }
    let _ = write!(stdout, "{}", outcome.rates_txt);
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        let _ = writeln!(stderr, "failed: {}", c.label);
    }
    outcome.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in [Command::ProjectVerify, Command::ElasticVerify, Command::Solve, Command::Converge] {
            assert_eq!(c.to_string().parse::<Command>().unwrap(), c);
        }
        for f in ["quad", "triangle", "distorted-quad", "hexagon", "pentagon"] {
            assert_eq!(f.parse::<Family>().unwrap().to_string(), f);
        }
        assert!("bogus".parse::<Command>().is_err());
    }

    #[test]
    fn toml_defaults_and_overrides() {
        let cfg = StudyConfig::from_toml_str("command = \"converge\"\nk = 0\nfamily = \"hexagon\"\n").unwrap();
        assert_eq!(cfg.k, 0);
        assert_eq!(cfg.family, Family::Mesh(MeshFamily::Hexagon));
        assert_eq!(cfg.levels, 4);
        assert_eq!(cfg.problem(), ProblemId::Trig);
        let round = StudyConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn schema_errors_are_located() {
        let e = StudyConfig::from_toml_str("command = \"solve\"\nlevles = 3\n").unwrap_err();
        match e {
            Error::Parse { location, message } => {
                assert!(location.starts_with("line 2"), "{location}");
                assert!(message.contains("levles"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = StudyConfig::new(Command::ElasticVerify);
        c.k = 0;
        assert!(c.validate().is_err());
        let mut c = StudyConfig::new(Command::Solve);
        c.tau_c = 0.0;
        assert!(c.validate().is_err());
        let mut c = StudyConfig::new(Command::Converge);
        c.levels = 2;
        assert!(c.validate().is_err());
        let mut c = StudyConfig::new(Command::Solve);
        c.problem = Some(ProblemId::ElasticTrig);
        assert!(c.validate().is_err());
        let mut c = StudyConfig::new(Command::Solve);
        c.family = Family::Pentagon;
        assert!(c.validate().is_err());
    }

    #[test]
    fn pentagon_family_halves_the_cell() {
        let mut c = StudyConfig::new(Command::ProjectVerify);
        c.family = Family::Pentagon;
        c.levels = 3;
        let m = c.meshes().unwrap();
        assert!(m.iter().all(|m| m.n_cells() == 1 && m.cells[0].len() == 5));
        assert!((m[0].h_max() / m[1].h_max() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flags_override_config_keys() {
        let args = Args::try_parse_from(["hdgplus", "--cmd", "solve", "--k", "2", "--tau-c", "3.5"]).unwrap();
        let cfg = args.into_config().unwrap();
        assert_eq!((cfg.command, cfg.k, cfg.tau_c), (Command::Solve, 2, 3.5));
    }
}
