//! The `fracpme` command line: `solve`, `bounds`, `sweep` and `validate`.
//!
//! Settings come from defaults, then a JSON file given by `--config`, then
//! flags, each overriding the last. Exit codes: 0 success, 1 configuration
//! error, 2 solver failure, 3 validation failure.

use crate::bounds::{beta0, eta2, f_minus, f_plus, g1, g2, BoundsReport, ProblemParams};
use crate::ekoperator::{EkOperator, EkQuadrature, Profile};
use crate::pde_oracle::{compare_self_similar, PdeConfig, PdeField};
use crate::shooting::{in_eta_bracket, shoot, solve_anchored, ShootConfig, ShootMethod, ShootingResult};
use crate::volterra::{residual_eq2, SolverConfig};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BetaRange {
    /// `None` means `β₀/2`.
    pub beta_min: Option<f64>,
    /// `None` means `2β₀`.
    pub beta_max: Option<f64>,
    pub beta_count: usize,
}

impl Default for BetaRange {
    fn default() -> Self {
        Self {
            beta_min: None,
            beta_max: None,
            beta_count: 31,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub ms: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            alphas: vec![0.25, 0.5, 0.75],
            ms: vec![1.5, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleOptions {
    pub enabled: bool,
    pub nx: usize,
    pub nt: usize,
    pub max_distance: f64,
    pub exponent_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            enabled: false,
            nx: 512,
            nt: 2048,
            max_distance: 5e-2,
            exponent_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub alpha: f64,
    pub m: f64,
    pub grid_step: Option<f64>,
    pub picard_tol: f64,
    pub shoot_tol: f64,
    pub output_dir: PathBuf,
    pub output_format: OutputFormat,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
    /// Also write `plotdata.csv` with the envelopes at `β*`.
    pub plotdata: bool,
    pub bounds: BetaRange,
    pub sweep: SweepGrid,
    pub oracle: OracleOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            alpha: 0.5,
            m: 2.0,
            grid_step: None,
            picard_tol: s.picard_tol,
            shoot_tol: ShootConfig::default().shoot_tol,
            output_dir: PathBuf::from("."),
            output_format: OutputFormat::Csv,
            jobs: None,
            plotdata: false,
            bounds: BetaRange::default(),
            sweep: SweepGrid::default(),
            oracle: OracleOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.alpha, self.m)
    }

    pub fn shoot_config(&self) -> ShootConfig {
        ShootConfig {
            solver: SolverConfig {
                grid_step: self.grid_step,
                picard_tol: self.picard_tol,
                ..SolverConfig::default()
            },
            shoot_tol: self.shoot_tol,
            ..ShootConfig::default()
        }
    }

    /// Every violated constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if let Err(e) = self.params() {
            bad.push(e.to_string());
        }
        bad.extend(self.shoot_config().violations());
        if !(self.shoot_tol > 0.0) {
            bad.push(format!("shoot_tol must be positive, got {}", self.shoot_tol));
        }
        if self.jobs == Some(0) {
            bad.push("jobs must be at least 1".into());
        }
        let r = &self.bounds;
        if r.beta_count < 2 {
            bad.push(format!("bounds.beta_count must be at least 2, got {}", r.beta_count));
        }
        for (name, v) in [("beta_min", r.beta_min), ("beta_max", r.beta_max)] {
            if matches!(v, Some(b) if !(b > 0.0 && b.is_finite())) {
                bad.push(format!("bounds.{name} must be positive, got {}", v.unwrap_or_default()));
            }
        }
        if let (Some(lo), Some(hi)) = (r.beta_min, r.beta_max) {
            if !(hi > lo) {
                bad.push(format!("bounds.beta_max ({hi}) must exceed bounds.beta_min ({lo})"));
            }
        }
        if self.sweep.alphas.is_empty() || self.sweep.ms.is_empty() {
            bad.push("sweep.alphas and sweep.ms must be non-empty".into());
        }
        for &a in &self.sweep.alphas {
            for &m in &self.sweep.ms {
                if let Err(e) = ProblemParams::new(a, m) {
                    bad.push(format!("sweep cell (alpha={a}, m={m}): {e}"));
                }
            }
        }
        let o = &self.oracle;
        let pde = PdeConfig {
            nx: o.nx,
            nt: o.nt,
            ..PdeConfig::default()
        };
        bad.extend(pde.violations().into_iter().map(|s| format!("oracle.{s}")));
        if !(o.max_distance > 0.0) || !(o.exponent_tol > 0.0) {
            bad.push("oracle thresholds must be positive".into());
        }
        bad
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracpme", version, about = "Self-similar solutions of the time-fractional porous medium equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find β* and the profile; writes profile.csv, result.json, timing.json.
    Solve(SolveArgs),
    /// Tabulate β₀, η₁, η₂, f₊, f₋ over a range of β; writes bounds.csv.
    Bounds(BoundsArgs),
    /// Solve over an (α, m) grid; writes sweep.csv and per-cell results.
    Sweep(SweepArgs),
    /// Residual, refinement and optional PDE checks; writes validation.json.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub picard_tol: Option<f64>,
    #[arg(long)]
    pub shoot_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON file of settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write plotdata.csv with g₁, g₂ at β*.
    #[arg(long)]
    pub plotdata: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub beta_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run the PDE cross-check.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub oracle_nx: Option<usize>,
    #[arg(long)]
    pub oracle_nt: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if self.grid_step.is_some() {
            c.grid_step = self.grid_step;
        }
        if let Some(v) = self.picard_tol {
            c.picard_tol = v;
        }
        if let Some(v) = self.shoot_tol {
            c.shoot_tol = v;
        }
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.format {
            c.output_format = v;
        }
        if self.jobs.is_some() {
            c.jobs = self.jobs;
        }
        Ok(c)
    }
}

impl Command {
    /// Final configuration after file and flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        match self {
            Command::Solve(a) => {
                let mut c = a.common.resolve()?;
                c.plotdata |= a.plotdata;
                Ok(c)
            }
            Command::Bounds(a) => {
                let mut c = a.common.resolve()?;
                if a.beta_min.is_some() {
                    c.bounds.beta_min = a.beta_min;
                }
                if a.beta_max.is_some() {
                    c.bounds.beta_max = a.beta_max;
                }
                if let Some(n) = a.beta_count {
                    c.bounds.beta_count = n;
                }
                Ok(c)
            }
            Command::Sweep(a) => {
                let mut c = a.common.resolve()?;
                if let Some(v) = &a.alphas {
                    c.sweep.alphas = v.clone();
                }
                if let Some(v) = &a.ms {
                    c.sweep.ms = v.clone();
                }
                Ok(c)
            }
            Command::Validate(a) => {
                let mut c = a.common.resolve()?;
                c.oracle.enabled |= a.oracle;
                if let Some(n) = a.oracle_nx {
                    c.oracle.nx = n;
                }
                if let Some(n) = a.oracle_nt {
                    c.oracle.nt = n;
                }
                Ok(c)
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let config = match cli.command.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let bad = config.violations();
    if !bad.is_empty() {
        eprintln!("error: invalid configuration:");
        for b in &bad {
            eprintln!("  - {b}");
        }
        return EXIT_CONFIG;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.jobs {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = pool.install(|| {
        std::fs::create_dir_all(&config.output_dir)?;
        match &cli.command {
            Command::Solve(_) => cmd_solve(&config),
            Command::Bounds(_) => cmd_bounds(&config),
            Command::Sweep(_) => cmd_sweep(&config),
            Command::Validate(_) => cmd_validate(&config),
        }
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParams(_) | Error::Json(_) => EXIT_CONFIG,
                _ => EXIT_SOLVER,
            }
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Rows as a JSON array of objects keyed by `header`.
fn write_table(dir: &Path, stem: &str, format: OutputFormat, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    match format {
        OutputFormat::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            write_csv(&path, header, rows)?;
            Ok(path)
        }
        OutputFormat::Json => {
            let path = dir.join(format!("{stem}.json"));
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| {
                    header
                        .iter()
                        .zip(r)
                        .map(|(k, v)| {
                            let val = if v.is_empty() {
                                serde_json::Value::Null
                            } else if let Ok(x) = v.parse::<f64>() {
                                json!(x)
                            } else {
                                json!(v)
                            };
                            (k.to_string(), val)
                        })
                        .collect()
                })
                .collect();
            write_json(&path, &objs)?;
            Ok(path)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterations {
    pub picard_solves: usize,
    pub picard_total: usize,
    pub anchored: Option<usize>,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub status: String,
    pub error: Option<String>,
    pub alpha: f64,
    pub m: f64,
    pub beta_star: Option<f64>,
    pub eta_star: Option<f64>,
    pub flux_residual: Option<f64>,
    pub beta0: f64,
    /// At `β*`; absent when `β* < β₀`.
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub method: Option<ShootMethod>,
    pub grid_step: Option<f64>,
    pub iterations: Option<Iterations>,
    pub bracket_consistent: Option<bool>,
    pub beta_extrapolated: Option<f64>,
    pub notes: Vec<String>,
}

impl ResultRecord {
    fn converged(p: &ProblemParams, r: &ShootingResult) -> Result<Self> {
        let b = BoundsReport::evaluate(r.beta_star, p)?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            status: "converged".into(),
            error: None,
            alpha: p.alpha(),
            m: p.m(),
            beta_star: Some(r.beta_star),
            eta_star: Some(r.eta_star),
            flux_residual: Some(r.flux_residual),
            beta0: r.beta0,
            eta1: b.eta1,
            eta2: Some(b.eta2),
            method: Some(r.method),
            grid_step: Some(r.grid_step()),
            iterations: Some(Iterations {
                picard_solves: r.picard_diagnostics.len(),
                picard_total: r.picard_diagnostics.iter().map(|(_, d)| d.iterations).sum(),
                anchored: r.anchored.map(|a| a.0),
            }),
            bracket_consistent: r.bracket_consistent,
            beta_extrapolated: r.beta_extrapolated,
            notes: r.notes.clone(),
        })
    }

    fn failed(p: &ProblemParams, e: &Error) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            status: "failed".into(),
            error: Some(e.to_string()),
            alpha: p.alpha(),
            m: p.m(),
            beta_star: None,
            eta_star: None,
            flux_residual: None,
            beta0: beta0(p),
            eta1: None,
            eta2: None,
            method: None,
            grid_step: None,
            iterations: None,
            bracket_consistent: None,
            beta_extrapolated: None,
            notes: Vec::new(),
        }
    }
}

/// `eta, U, Y, IU` rows of a converged profile.
pub fn profile_rows(profile: &Profile, p: &ProblemParams) -> Result<Vec<Vec<String>>> {
    let op = EkOperator::shared(p.alpha(), EkQuadrature::default())?;
    let u = profile.to_u(p.m());
    let iu = op.apply_grid(&u)?;
    Ok(u.values()
        .iter()
        .zip(&iu)
        .enumerate()
        .map(|(i, (&v, &w))| {
            vec![
                fmt_f64(u.node(i)),
                fmt_f64(v),
                fmt_f64(v.powf(p.m() + 1.0)),
                fmt_f64(w),
            ]
        })
        .collect())
}

const PROFILE_HEADER: [&str; 4] = ["eta", "U", "Y", "IU"];

/// Writes the result and profile of one solve into `dir`.
fn write_solution(dir: &Path, format: OutputFormat, p: &ProblemParams, r: &ShootingResult) -> Result<ResultRecord> {
    write_table(dir, "profile", format, &PROFILE_HEADER, &profile_rows(&r.profile, p)?)?;
    let rec = ResultRecord::converged(p, r)?;
    write_json(&dir.join("result.json"), &rec)?;
    Ok(rec)
}

fn write_timing(dir: &Path, command: &str, started: Instant) -> Result<()> {
    write_json(
        &dir.join("timing.json"),
        &json!({ "command": command, "wall_seconds": started.elapsed().as_secs_f64() }),
    )
}

pub fn cmd_solve(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let p = config.params()?;
    let dir = &config.output_dir;
    let code = match shoot(&p, &config.shoot_config()) {
        Ok(r) => {
            write_solution(dir, config.output_format, &p, &r)?;
            if config.plotdata {
                write_plotdata(dir, &p, &r)?;
            }
            info!("beta* = {}, eta* = {}", r.beta_star, r.eta_star);
            EXIT_OK
        }
        Err(e) => {
            error!("solve failed: {e}");
            write_json(&dir.join("result.json"), &ResultRecord::failed(&p, &e))?;
            EXIT_SOLVER
        }
    };
    write_timing(dir, "solve", started)?;
    Ok(code)
}

fn write_plotdata(dir: &Path, p: &ProblemParams, r: &ShootingResult) -> Result<()> {
    let b = r.beta_star;
    let end = 1.25 * r.eta_star.max(eta2(b, p)?);
    let n = 400;
    let rows: Vec<Vec<String>> = (0..=n)
        .map(|i| {
            let x = end * i as f64 / n as f64;
            vec![fmt_f64(x), fmt_f64(g1(x, b, p)), fmt_f64(g2(x, b, p)), fmt_f64(r.profile.value_at(x))]
        })
        .collect();
    write_csv(&dir.join("plotdata.csv"), &["eta", "g1", "g2", "U"], &rows)
}

/// The `β` values tabulated by `bounds`: an even grid with `β₀` inserted.
pub fn bounds_betas(config: &RunConfig, p: &ProblemParams) -> Vec<f64> {
    let b0 = beta0(p);
    let lo = config.bounds.beta_min.unwrap_or(0.5 * b0);
    let hi = config.bounds.beta_max.unwrap_or(2.0 * b0);
    let n = config.bounds.beta_count;
    let mut betas: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    if b0 > lo && b0 < hi && !betas.contains(&b0) {
        betas.push(b0);
        betas.sort_by(f64::total_cmp);
    }
    betas
}

pub fn cmd_bounds(config: &RunConfig) -> Result<i32> {
    let p = config.params()?;
    let rows = bounds_betas(config, &p)
        .into_iter()
        .map(|b| {
            let r = BoundsReport::evaluate(b, &p)?;
            Ok(vec![
                fmt_f64(r.beta),
                fmt_f64(r.beta0),
                fmt_opt(r.eta1),
                fmt_f64(r.eta2),
                fmt_opt(r.f_plus),
                fmt_f64(r.f_minus),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_table(
        &config.output_dir,
        "bounds",
        config.output_format,
        &["beta", "beta0", "eta1", "eta2", "f_plus", "f_minus"],
        &rows,
    )?;
    Ok(EXIT_OK)
}

/// Directory name of a sweep cell.
pub fn cell_dir_name(alpha: f64, m: f64) -> String {
    format!("alpha_{alpha}_m_{m}")
}

pub fn cmd_sweep(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let cells: Vec<(f64, f64)> = config
        .sweep
        .alphas
        .iter()
        .flat_map(|&a| config.sweep.ms.iter().map(move |&m| (a, m)))
        .collect();
    let mut seen = BTreeSet::new();
    let unique: Vec<(f64, f64)> = cells
        .iter()
        .copied()
        .filter(|&(a, m)| seen.insert((a.to_bits(), m.to_bits())))
        .collect();
    let shoot_cfg = config.shoot_config();
    let root = config.output_dir.join("cells");
    let solved: Vec<((f64, f64), std::result::Result<ResultRecord, String>)> = unique
        .par_iter()
        .map(|&(a, m)| {
            let run = || -> Result<std::result::Result<ResultRecord, String>> {
                let p = ProblemParams::new(a, m)?;
                let dir = root.join(cell_dir_name(a, m));
                std::fs::create_dir_all(&dir)?;
                Ok(match shoot(&p, &shoot_cfg) {
                    Ok(r) => Ok(write_solution(&dir, config.output_format, &p, &r)?),
                    Err(e) => {
                        write_json(&dir.join("result.json"), &ResultRecord::failed(&p, &e))?;
                        Err(e.to_string())
                    }
                })
            };
            ((a, m), run().unwrap_or_else(|e| Err(e.to_string())))
        })
        .collect();
    let lookup = |a: f64, m: f64| {
        solved
            .iter()
            .find(|((x, y), _)| x.to_bits() == a.to_bits() && y.to_bits() == m.to_bits())
            .map(|(_, r)| r)
            .expect("every cell was solved")
    };
    let mut rows = Vec::new();
    for &(a, m) in &cells {
        let p = ProblemParams::new(a, m)?;
        let row = match lookup(a, m) {
            Ok(rec) => {
                let (bs, es) = (rec.beta_star.unwrap_or(f64::NAN), rec.eta_star.unwrap_or(f64::NAN));
                let h = rec.grid_step.unwrap_or(0.0);
                let (lower, upper) = in_eta_bracket(bs, es, h, &p)?;
                vec![
                    a.to_string(),
                    m.to_string(),
                    "converged".into(),
                    fmt_f64(bs),
                    fmt_f64(es),
                    fmt_opt(rec.flux_residual),
                    fmt_f64(rec.beta0),
                    (bs >= rec.beta0).to_string(),
                    (lower && upper.unwrap_or(true)).to_string(),
                    rec.bracket_consistent.map(|b| b.to_string()).unwrap_or_default(),
                    String::new(),
                ]
            }
            Err(msg) => vec![
                a.to_string(),
                m.to_string(),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                fmt_f64(beta0(&p)),
                String::new(),
                String::new(),
                String::new(),
                format!("\"{}\"", msg.replace('"', "'")),
            ],
        };
        rows.push(row);
    }
    let header = [
        "alpha",
        "m",
        "status",
        "beta_star",
        "eta_star",
        "flux_residual",
        "beta0",
        "above_beta0",
        "eta_bracket",
        "bracket_consistent",
        "error",
    ];
    write_table(&config.output_dir, "sweep", config.output_format, &header, &rows)?;
    for &m in &config.sweep.ms {
        let trend: Vec<String> = config
            .sweep
            .alphas
            .iter()
            .filter_map(|&a| lookup(a, m).as_ref().ok().and_then(|r| r.eta_star).map(|e| format!("{a}:{e:.6}")))
            .collect();
        info!("eta*(alpha) at m = {m}: {}", trend.join(" "));
    }
    write_timing(&config.output_dir, "sweep", started)?;
    let any_ok = solved.iter().any(|(_, r)| r.is_ok());
    Ok(if any_ok { EXIT_OK } else { EXIT_SOLVER })
}

/// One entry of `validation.json`. `passed` is absent for checks that do not
/// apply to this run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub measured: serde_json::Value,
    pub threshold: String,
}

fn check(name: &str, passed: Option<bool>, measured: serde_json::Value, threshold: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        measured,
        threshold: threshold.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub schema_version: u32,
    pub alpha: f64,
    pub m: f64,
    pub beta_star: f64,
    pub eta_star: f64,
    pub passed: bool,
    /// Gate the exit code.
    pub checks: Vec<Check>,
    /// Reported only.
    pub observations: Vec<Check>,
}

/// `(cells, β*, η*, residual_eq2)` on successive refinements.
pub type RefinementRow = (usize, f64, f64, f64);

/// Anchored solves on `N/4, N/2, N, 2N` cells.
pub fn refinement_study(p: &ProblemParams, shoot_cfg: &ShootConfig) -> Result<Vec<RefinementRow>> {
    let n = shoot_cfg.cells(p)?;
    [n / 4, n / 2, n, 2 * n]
        .into_iter()
        .map(|c| {
            let s = solve_anchored(
                p,
                c,
                shoot_cfg.anchored_tol,
                shoot_cfg.solver.max_picard_iters,
                shoot_cfg.solver.quadrature,
            )?;
            let r = residual_eq2(&s.profile, p)?;
            Ok((c, s.beta_star, s.eta_star, r))
        })
        .collect()
}

/// `|x₁ - x₂| / |x₂ - x₃|` for three successive refinements.
pub fn richardson_ratio(x1: f64, x2: f64, x3: f64) -> f64 {
    (x1 - x2).abs() / (x2 - x3).abs()
}

pub fn cmd_validate(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let p = config.params()?;
    let dir = &config.output_dir;
    let shoot_cfg = config.shoot_config();
    let r = match shoot(&p, &shoot_cfg) {
        Ok(r) => r,
        Err(e) => {
            error!("validate: solve failed: {e}");
            write_json(&dir.join("validation.json"), &ResultRecord::failed(&p, &e))?;
            write_timing(dir, "validate", started)?;
            return Ok(EXIT_SOLVER);
        }
    };
    let h = r.grid_step();
    let mut checks = Vec::new();
    let mut obs = Vec::new();

    let (lower, upper) = in_eta_bracket(r.beta_star, r.eta_star, h, &p)?;
    checks.push(check(
        "eta_bracket_lower",
        Some(lower),
        json!({ "eta_star": r.eta_star, "eta2": eta2(r.beta_star, &p)? }),
        "eta2(beta*) - h <= eta*",
    ));
    checks.push(check(
        "eta_bracket_upper",
        upper,
        json!({ "eta_star": r.eta_star }),
        "eta* <= eta1(beta*) + h, when beta* >= beta0",
    ));
    checks.push(check(
        "flux_residual",
        Some(r.flux_residual.abs() <= config.shoot_tol),
        json!(r.flux_residual),
        format!("|flux| <= {:e}", config.shoot_tol),
    ));
    let u = r.profile.values();
    let shape_ok = u[0] == 1.0
        && u.iter().all(|v| (0.0..=1.0).contains(v))
        && u.windows(2).all(|w| w[1] <= w[0])
        && u[u.len() - 1] == 0.0;
    checks.push(check(
        "profile_shape",
        Some(shape_ok),
        json!({ "u0": u[0], "u_end": u[u.len() - 1] }),
        "U(0) = 1, 0 <= U <= 1, nonincreasing, U(eta*) = 0",
    ));

    let study = refinement_study(&p, &shoot_cfg)?;
    let res: Vec<f64> = study.iter().map(|s| s.3).collect();
    checks.push(check(
        "residual_eq2_decreasing",
        Some(res.windows(2).all(|w| w[1] < w[0])),
        json!(study.iter().map(|s| json!({ "cells": s.0, "residual": s.3 })).collect::<Vec<_>>()),
        "strictly decreasing over three refinements",
    ));
    let (b, e): (Vec<f64>, Vec<f64>) = study[1..].iter().map(|s| (s.1, s.2)).unzip();
    let rb = richardson_ratio(b[0], b[1], b[2]);
    let re = richardson_ratio(e[0], e[1], e[2]);
    let (db, de) = ((b[1] - b[2]).abs(), (e[1] - e[2]).abs());
    checks.push(check(
        "self_convergence",
        Some(rb >= 3.0 && re >= 3.0 && db <= 1e-4 && de <= 1e-4),
        json!({
            "cells": study[1..].iter().map(|s| s.0).collect::<Vec<_>>(),
            "beta_star": b, "eta_star": e,
            "ratio_beta": rb, "ratio_eta": re,
            "change_beta": db, "change_eta": de,
        }),
        "Richardson ratio >= 3 and change at default resolution <= 1e-4",
    ));

    if config.oracle.enabled {
        let o = &config.oracle;
        let field = PdeField::run(
            &p,
            &PdeConfig {
                nx: o.nx,
                nt: o.nt,
                ..PdeConfig::default()
            },
        )?;
        let levels = field.latest_levels(3);
        let dist = compare_self_similar(&field, &r.profile, &levels);
        let t_end = field.time(field.nt);
        let expo = field.front_exponent(0.1 * t_end)?;
        checks.push(check(
            "oracle_distance",
            Some(dist <= o.max_distance),
            json!({ "distance": dist, "levels": levels, "nx": o.nx, "nt": o.nt }),
            format!("<= {:e}", o.max_distance),
        ));
        checks.push(check(
            "oracle_front_exponent",
            Some((expo - 0.5 * p.alpha()).abs() <= o.exponent_tol),
            json!(expo),
            format!("within {} of alpha/2 = {}", o.exponent_tol, 0.5 * p.alpha()),
        ));
    }

    obs.push(check(
        "beta_star_at_least_beta0",
        Some(r.beta_star >= r.beta0),
        json!({ "beta_star": r.beta_star, "beta0": r.beta0 }),
        "beta* >= beta0",
    ));
    let fm = f_minus(r.beta_star, &p)?;
    let fp = if r.beta_star >= r.beta0 {
        Some(f_plus(r.beta_star, &p)?)
    } else {
        None
    };
    obs.push(check(
        "flux_bracket",
        fp.map(|fp| fm - 1e-6 <= 0.0 && 0.0 <= fp + 1e-6),
        json!({ "f_minus": fm, "f_plus": fp }),
        "f_minus(beta*) - 1e-6 <= 0 <= f_plus(beta*) + 1e-6",
    ));
    obs.push(check(
        "bracket_consistent",
        r.bracket_consistent,
        json!({ "beta_extrapolated": r.beta_extrapolated, "history": r.bracket_history.last() }),
        "anchored beta* agrees with the continuation in beta",
    ));

    let passed = checks.iter().all(|c| c.passed != Some(false));
    write_json(
        &dir.join("validation.json"),
        &ValidationRecord {
            schema_version: SCHEMA_VERSION,
            alpha: p.alpha(),
            m: p.m(),
            beta_star: r.beta_star,
            eta_star: r.eta_star,
            passed,
            checks,
            observations: obs,
        },
    )?;
    write_timing(dir, "validate", started)?;
    Ok(if passed { EXIT_OK } else { EXIT_VALIDATION })
}
