//! Command-line front end: spectra, trajectories, the reference-table report,
//! tuning runs and profile dumps.
//!
//! Every command reads a [`RunConfig`] assembled from an optional TOML file
//! overlaid by flags, then writes its result to stdout or `--output`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use drumhead::profiles::{builtin, BUILTIN_NAMES};
use drumhead::report::{reference_modes, Report};
use drumhead::shooting::{Shooter, MAX_CIRCLES, MAX_ORDER};
use drumhead::spectrum::ratio_table;
use drumhead::tuner::{tune, Template, TuneFile, TuneProblem};
use drumhead::{DensityProfile, Error, ModeId, Scheme, SearchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "drumhead",
    version,
    about = "Normal modes of radially loaded circular membranes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve modes and print (mode, kappa, ratio) rows
    Spectrum,
    /// Integrate once and write r, R, dR
    Trajectory,
    /// Compare computed ratios with the reference table
    Report,
    /// Fit loading parameters and write the result as a profile
    Tune,
    /// Sample a density profile
    ProfileDump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

/// Command-line flags. Every field is optional so that unset flags fall
/// through to the config file and then to the defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// TOML file with any of these options; flags win
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Profile file or built-in name (uniform | default-rings | default-continuous)
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub mmax: Option<u32>,
    #[arg(long, global = true)]
    pub cmax: Option<u32>,
    /// Base mode as m,c
    #[arg(long, global = true)]
    pub base: Option<String>,
    #[arg(long, global = true)]
    pub base_value: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Integrator order, 2 or 4
    #[arg(long, global = true)]
    pub order: Option<u32>,
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true)]
    pub kmin: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<f64>,
    #[arg(long, global = true)]
    pub dk: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Order for `trajectory`
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Wavenumber for `trajectory`
    #[arg(long, global = true)]
    pub kprime: Option<f64>,
    /// Tune specification file
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Template for `tune` without a spec: continuous or rings
    #[arg(long, global = true)]
    pub template: Option<String>,
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Sample count for `profile-dump`
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Also write the tuning trace as CSV
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
}

impl Flags {
    /// Fields set here replace those in `base`.
    fn overlay(self, base: Flags) -> Flags {
        macro_rules! pick {
            ($($f:ident),*) => { Flags { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            config, profile, mmax, cmax, base, base_value, format, output, order, step, kmin, kmax,
            dk, seed, m, kprime, spec, template, budget, count, trace
        )
    }
}

/// Fully resolved options for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub profile: String,
    /// Explicit mode grid; `None` means the reference-table modes.
    pub grid: Option<(u32, u32)>,
    pub base: ModeId,
    pub base_value: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub search: SearchConfig,
    pub seed: Option<u64>,
    pub m: Option<u32>,
    pub kprime: Option<f64>,
    pub spec: Option<PathBuf>,
    pub template: Option<String>,
    pub budget: Option<usize>,
    pub count: usize,
    pub trace: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            CliError::Solver(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, CliError> {
        let flags = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                let file: Flags = toml::from_str(&text)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                flags.overlay(file)
            }
            None => flags,
        };

        let defaults = SearchConfig::default();
        let scheme = Scheme::from_order(flags.order.unwrap_or(2))?;
        let search = SearchConfig {
            step: flags.step.unwrap_or(defaults.step),
            scheme,
            kappa_min: flags.kmin.unwrap_or(defaults.kappa_min),
            kappa_max: flags.kmax.unwrap_or(defaults.kappa_max),
            kappa_step: flags.dk.unwrap_or(defaults.kappa_step),
            ..defaults
        };
        search.validate()?;

        let grid = match (flags.mmax, flags.cmax) {
            (None, None) => None,
            (m, c) => {
                let (m, c) = (m.unwrap_or(4), c.unwrap_or(2));
                if m > MAX_ORDER || c > MAX_CIRCLES {
                    return Err(config_err(format!(
                        "mode grid limited to mmax <= {MAX_ORDER}, cmax <= {MAX_CIRCLES}"
                    )));
                }
                Some((m, c))
            }
        };
        let base: ModeId = match &flags.base {
            Some(s) => s.parse()?,
            None => ModeId::new(0, 0),
        };
        if base.diameters > MAX_ORDER || base.circles > MAX_CIRCLES {
            return Err(config_err(format!("base mode {base} is out of range")));
        }
        let base_value = flags.base_value.unwrap_or(1.0);
        if !(base_value > 0.0 && base_value.is_finite()) {
            return Err(config_err(format!(
                "base value must be positive, got {base_value}"
            )));
        }
        if let Some(k) = flags.kprime {
            if !(k > 0.0 && k.is_finite()) {
                return Err(config_err(format!("kprime must be positive, got {k}")));
            }
        }
        let count = flags.count.unwrap_or(201);
        if count < 2 {
            return Err(config_err("count must be at least 2"));
        }
        if command == Command::Trajectory && (flags.m.is_none() || flags.kprime.is_none()) {
            return Err(config_err("trajectory needs --m and --kprime"));
        }
        Ok(RunConfig {
            command,
            profile: flags.profile.unwrap_or_else(|| "uniform".into()),
            grid,
            base,
            base_value,
            format: flags.format.unwrap_or_default(),
            output: flags.output,
            search,
            seed: flags.seed,
            m: flags.m,
            kprime: flags.kprime,
            spec: flags.spec,
            template: flags.template,
            budget: flags.budget,
            count,
            trace: flags.trace,
        })
    }

    /// Modes to print, reference-table modes first in table order, the rest
    /// by eigenvalue once solved.
    fn modes(&self) -> Vec<ModeId> {
        match self.grid {
            None => reference_modes(),
            Some((m_max, c_max)) => {
                let mut modes: Vec<ModeId> = reference_modes()
                    .into_iter()
                    .filter(|m| m.diameters <= m_max && m.circles <= c_max)
                    .collect();
                for m in 0..=m_max {
                    for c in 0..=c_max {
                        let id = ModeId::new(m, c);
                        if !modes.contains(&id) {
                            modes.push(id);
                        }
                    }
                }
                modes
            }
        }
    }
}

pub fn load_profile(name: &str) -> Result<DensityProfile, CliError> {
    if let Some(p) = builtin(name) {
        return Ok(p);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(config_err(format!(
            "`{name}` is neither a profile file nor a built-in ({})",
            BUILTIN_NAMES.join(" | ")
        )));
    }
    Ok(DensityProfile::load(path)?)
}

/// Parses `args` and runs the command. Diagnostics go to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::resolve(cli.command, cli.flags).and_then(|cfg| execute(&cfg)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let text = match cfg.command {
        Command::Spectrum => cmd_spectrum(cfg)?,
        Command::Trajectory => cmd_trajectory(cfg)?,
        Command::Report => cmd_report(cfg)?,
        Command::Tune => cmd_tune(cfg)?,
        Command::ProfileDump => cmd_profile_dump(cfg)?,
    };
    emit(cfg.output.as_deref(), &text)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| config_err(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| config_err(format!("stdout: {e}")))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct SpectrumRow {
    mode: String,
    m: u32,
    c: u32,
    kappa: f64,
    ratio: f64,
    nodes: usize,
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let profile = load_profile(&cfg.profile)?;
    let mut wanted = cfg.modes();
    let mut solve = wanted.clone();
    if !solve.contains(&cfg.base) {
        solve.push(cfg.base);
    }
    let shooter = Shooter::new(&profile, cfg.search)?;
    let results = shooter.modes(&solve)?;
    let table = ratio_table(&results, cfg.base, cfg.base_value)?;

    // modes outside the reference table follow in eigenvalue order
    let reference = reference_modes();
    let split = wanted.iter().filter(|m| reference.contains(m)).count();
    let kappa = |m: &ModeId| table.get(*m).map(|e| e.kappa).unwrap_or(f64::NAN);
    wanted[split..].sort_by(|a, b| kappa(a).total_cmp(&kappa(b)).then(a.cmp(b)));

    let rows: Vec<SpectrumRow> = wanted
        .iter()
        .map(|&mode| {
            let entry = table.get(mode).expect("every wanted mode was solved");
            let nodes = results
                .iter()
                .find(|r| r.mode == mode)
                .map_or(0, |r| r.nodes);
            SpectrumRow {
                mode: mode.to_string(),
                m: mode.diameters,
                c: mode.circles,
                kappa: entry.kappa,
                ratio: entry.ratio,
                nodes,
            }
        })
        .collect();

    Ok(match cfg.format {
        Format::Text => {
            let mut out = format!(
                "# profile {}; base {} = {}\n{:<7} {:>12} {:>9}\n",
                cfg.profile, cfg.base, cfg.base_value, "mode", "kappa", "ratio"
            );
            for r in &rows {
                let _ = writeln!(out, "{:<7} {:>12.6} {:>9.4}", r.mode, r.kappa, r.ratio);
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("m,c,kappa,ratio,nodes\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{:.10},{:.10},{}",
                    r.m, r.c, r.kappa, r.ratio, r.nodes
                );
            }
            out
        }
        Format::Json => to_json(&rows)?,
    })
}

#[derive(Debug, Clone, Serialize)]
struct TrajectoryRow {
    r: f64,
    #[serde(rename = "R")]
    value: f64,
    #[serde(rename = "dR")]
    slope: f64,
}

pub fn cmd_trajectory(cfg: &RunConfig) -> Result<String, CliError> {
    let profile = load_profile(&cfg.profile)?;
    let (m, kprime) = (
        cfg.m.ok_or_else(|| config_err("trajectory needs --m"))?,
        cfg.kprime
            .ok_or_else(|| config_err("trajectory needs --kprime"))?,
    );
    let shooter = Shooter::new(&profile, cfg.search)?;
    let trajectory = shooter.trajectory(m, kprime)?;
    if cfg.format == Format::Json {
        let rows: Vec<TrajectoryRow> = trajectory
            .states
            .iter()
            .map(|s| TrajectoryRow {
                r: s.r,
                value: s.value,
                slope: s.slope,
            })
            .collect();
        return to_json(&rows);
    }
    let mut out = String::with_capacity(48 * trajectory.states.len());
    out.push_str("r,R,dR\n");
    for s in &trajectory.states {
        let _ = writeln!(out, "{:e},{:e},{:e}", s.r, s.value, s.slope);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct ReportRowOut {
    row: usize,
    mode: String,
    oracle: f64,
    unloaded: f64,
    unloaded_reference: f64,
    continuous: f64,
    continuous_reference: f64,
    rings: f64,
    rings_reference: f64,
    suspected_misprint: bool,
}

pub fn cmd_report(cfg: &RunConfig) -> Result<String, CliError> {
    let get = |name: &str| builtin(name).expect("built-in profile");
    let report = Report::build(
        &get("uniform"),
        &get("default-continuous"),
        &get("default-rings"),
        &cfg.search,
    )?;
    if cfg.format == Format::Text {
        return Ok(report.render());
    }
    let rows: Vec<ReportRowOut> = report
        .rows
        .iter()
        .map(|r| ReportRowOut {
            row: r.index,
            mode: r.reference.mode.to_string(),
            oracle: r.oracle,
            unloaded: r.unloaded,
            unloaded_reference: r.reference.unloaded,
            continuous: r.continuous,
            continuous_reference: r.reference.continuous,
            rings: r.rings,
            rings_reference: r.reference.rings,
            suspected_misprint: r.suspected_misprint(),
        })
        .collect();
    if cfg.format == Format::Json {
        return to_json(&rows);
    }
    let mut out = String::from(
        "row,m,c,oracle,unloaded,unloaded_reference,continuous,continuous_reference,rings,rings_reference,suspected_misprint\n",
    );
    for (r, src) in rows.iter().zip(&report.rows) {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{:.6},{},{:.6},{},{}",
            r.row,
            src.reference.mode.diameters,
            src.reference.mode.circles,
            r.oracle,
            r.unloaded,
            r.unloaded_reference,
            r.continuous,
            r.continuous_reference,
            r.rings,
            r.rings_reference,
            r.suspected_misprint
        );
    }
    Ok(out)
}

fn tune_problem(cfg: &RunConfig) -> Result<(TuneProblem, u64), CliError> {
    let (mut problem, mut seed) = match &cfg.spec {
        Some(path) => TuneFile::load(path)?.problem()?,
        None => {
            let template = match cfg.template.as_deref().unwrap_or("continuous") {
                "continuous" | "continuous-log-exp" => Template::ContinuousLogExp,
                "rings" | "step-rings" => Template::StepRings { rings: 3 },
                other => {
                    return Err(config_err(format!(
                        "unknown template `{other}` (continuous | rings)"
                    )))
                }
            };
            (TuneProblem::new(template), 0)
        }
    };
    if cfg.spec.is_some() && cfg.template.is_some() {
        return Err(config_err("--template conflicts with --spec"));
    }
    if let Some(b) = cfg.budget {
        problem.budget = b;
    }
    if let Some(s) = cfg.seed {
        seed = s;
    }
    problem.validate()?;
    Ok((problem, seed))
}

pub fn cmd_tune(cfg: &RunConfig) -> Result<String, CliError> {
    let (problem, seed) = tune_problem(cfg)?;
    let outcome = tune(&problem, seed)?;
    let profile = outcome.profile(&problem)?;
    let evaluation = problem.evaluate(&outcome.best)?;
    eprintln!(
        "{} evaluations, objective {:.6}, fundamental {:.4}{}",
        outcome.trace.len(),
        outcome.objective,
        evaluation.fundamental,
        if outcome.budget_exhausted {
            " (budget exhausted)"
        } else {
            ""
        }
    );
    for (mode, ratio, target) in &evaluation.ratios {
        eprintln!("  {mode} {ratio:.4} (target {target})");
    }
    if let Some(path) = &cfg.trace {
        let names = problem.template.parameter_names();
        let mut csv = format!("evaluation,objective,{}\n", names.join(","));
        for (i, e) in outcome.trace.iter().enumerate() {
            let params: Vec<String> = e.params.iter().map(|p| format!("{p:e}")).collect();
            let _ = writeln!(csv, "{},{:e},{}", i + 1, e.objective, params.join(","));
        }
        std::fs::write(path, csv).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    }
    Ok(profile.to_toml_string())
}

#[derive(Debug, Clone, Serialize)]
struct SampleRow {
    r: f64,
    rho: f64,
}

pub fn cmd_profile_dump(cfg: &RunConfig) -> Result<String, CliError> {
    let profile = load_profile(&cfg.profile)?;
    let samples = profile.samples(cfg.count)?;
    Ok(match cfg.format {
        Format::Json => to_json(
            &samples
                .iter()
                .map(|&(r, rho)| SampleRow { r, rho })
                .collect::<Vec<_>>(),
        )?,
        Format::Csv | Format::Text => {
            let mut out = String::from("r,rho\n");
            for (r, rho) in samples {
                let _ = writeln!(out, "{r:e},{rho:e}");
            }
            out
        }
    })
}

fn to_json<T: Serialize>(rows: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(rows).map_err(|e| config_err(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: &[&str]) -> Result<RunConfig, CliError> {
        let cli =
            Cli::try_parse_from(std::iter::once("drumhead").chain(args.iter().copied())).unwrap();
        RunConfig::resolve(cli.command, cli.flags)
    }

    #[test]
    fn defaults() {
        let cfg = resolve(&["spectrum"]).unwrap();
        assert_eq!(cfg.profile, "uniform");
        assert_eq!(cfg.base, ModeId::new(0, 0));
        assert_eq!(cfg.search, SearchConfig::default());
        assert_eq!(cfg.modes(), reference_modes());
    }

    #[test]
    fn grid_keeps_reference_order_first() {
        let cfg = resolve(&["spectrum", "--mmax", "1", "--cmax", "1"]).unwrap();
        let modes = cfg.modes();
        assert_eq!(
            &modes[..3],
            &[ModeId::new(0, 0), ModeId::new(1, 0), ModeId::new(0, 1)]
        );
        assert_eq!(modes.len(), 4);
    }

    #[test]
    fn bad_options_are_config_errors() {
        for args in [
            &["spectrum", "--base", "x"][..],
            &["spectrum", "--order", "3"],
            &["spectrum", "--step", "0.5"],
            &["spectrum", "--kmin", "5", "--kmax", "2"],
            &["spectrum", "--mmax", "11"],
            &["trajectory", "--m", "0"],
        ] {
            assert_eq!(
                resolve(args).unwrap_err().exit_code(),
                EXIT_CONFIG,
                "{args:?}"
            );
        }
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "profile = \"default-rings\"\nbase = \"1,0\"\nbase_value = 2.0\norder = 4\n",
        )
        .unwrap();
        let cfg = resolve(&[
            "spectrum",
            "--config",
            path.to_str().unwrap(),
            "--order",
            "2",
        ])
        .unwrap();
        assert_eq!(cfg.profile, "default-rings");
        assert_eq!(cfg.base, ModeId::new(1, 0));
        assert_eq!(cfg.search.scheme, Scheme::Midpoint);

        std::fs::write(&path, "colour = 1\n").unwrap();
        assert!(resolve(&["spectrum", "--config", path.to_str().unwrap()]).is_err());
    }

    #[test]
    fn unknown_profile_is_config_error() {
        assert_eq!(
            load_profile("no-such-profile").unwrap_err().exit_code(),
            EXIT_CONFIG
        );
        assert!(load_profile("default-continuous").is_ok());
    }
}
