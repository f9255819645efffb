//! Command-line front end: each pipeline is a subcommand emitting CSV or
//! JSON with a stable schema.
//!
//! Exit codes: 0 on success, 2 for configuration problems (bad flags, bad
//! well files, impossible pipeline combinations), 3 for numerical failures
//! (the offending ξ or Ω is named in the message).

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::action_angle::aa_data;
use crate::fitting::{
    fit_geometry, fit_global_barrier, fit_global_inflection, fit_l2, fit_report, fit_taylor,
    fit_taylor_numeric, normal_form, FitPolynomial, FitReport, FitScheme, NormalForm,
};
use crate::potentials::{
    translate_well, AnyWell, ElectrostaticWell, Potential, QuarticWell, TranslatedWell, WellConfig,
    WellGeometry,
};
use crate::resonance::{
    combined_escape_curve_with_margin, rm_grid, EscapeCurve, ForcingParams, Mechanism,
    MAXIMUM_LEVEL_MARGIN,
};
use crate::simulator::{integrate_orbit, sweep, EscapeCriterion, SimConfig, SweepResult};

/// CLI failure, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files, or pipeline combinations; exits 2.
    Config(String),
    /// The computation itself failed; exits 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

fn cfg(msg: impl fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

fn num(msg: impl fmt::Display) -> CliError {
    CliError::Numerical(msg.to_string())
}

type CliResult<T> = Result<T, CliError>;

/// Escape thresholds for harmonically forced potential wells.
#[derive(Parser, Debug)]
#[command(name = "escape", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic escape-threshold curve, optionally with brute-force rows
    EscapeCurve(EscapeCurveArgs),
    /// Conservation-law values on the phase cylinder plus the LPT contour
    RmGrid(RmGridArgs),
    /// One forced orbit trace, a phase scan, or critical-force bisection
    Simulate(SimulateArgs),
    /// Polynomial reductions of a well with fit diagnostics
    Fit(FitArgs),
    /// Action, frequency, and resonant Fourier coefficient over energies
    AaTable(AaTableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    /// Escape when the coordinate crosses an exit line
    Hitting,
    /// Escape when the energy exceeds the threshold level
    Energy,
}

impl From<CriterionArg> for EscapeCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Hitting => EscapeCriterion::FirstHitting,
            CriterionArg::Energy => EscapeCriterion::Energy,
        }
    }
}

fn parse_fit_scheme(s: &str) -> Result<FitScheme, String> {
    match s {
        "barrier" => Ok(FitScheme::GlobalBarrier),
        "inflection" => Ok(FitScheme::GlobalInflection),
        "l2" => Ok(FitScheme::L2),
        _ => s
            .strip_prefix("taylor:")
            .and_then(|n| n.parse::<u32>().ok())
            .map(FitScheme::Taylor)
            .ok_or_else(|| {
                format!("unknown fit scheme {s:?}; expected barrier|inflection|l2|taylor:N")
            }),
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
pub struct IoArgs {
    /// Well description JSON file
    #[arg(long, value_name = "FILE")]
    pub well: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    /// Output path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Cap on worker threads for parallel sweeps
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EscapeCurveArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Frequency grid START:END:STEP (physical frame for fitted wells)
    #[arg(long, value_name = "RANGE")]
    pub omega: String,
    /// Reduce a realistic well by this scheme before the analytic pass
    #[arg(long, value_parser = parse_fit_scheme, value_name = "SCHEME")]
    pub fit: Option<FitScheme>,
    /// Override the maximum-line level margin
    #[arg(long, value_name = "DELTA")]
    pub delta: Option<f64>,
    /// Append brute-force critical forces on the same grid
    #[arg(long)]
    pub with_simulation: bool,
    /// Simulation horizon in forcing periods
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub horizon: u32,
    /// Escape criterion for the simulation rows
    #[arg(long, value_enum, default_value_t = CriterionArg::Hitting)]
    pub criterion: CriterionArg,
    /// Forcing phase
    #[arg(long, default_value_t = 0.0, value_name = "X")]
    pub psi: f64,
    /// Initial guess for the simulated critical-force bracket
    #[arg(long, default_value_t = 0.05, value_name = "F")]
    pub f: f64,
}

#[derive(Args, Debug)]
pub struct RmGridArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Forcing amplitude (normal frame for fitted wells)
    #[arg(long, value_name = "F")]
    pub f: f64,
    /// Forcing frequency (normal frame for fitted wells)
    #[arg(long, value_name = "OMEGA")]
    pub omega: f64,
    /// Reduce a realistic well first (quartic schemes only)
    #[arg(long, value_parser = parse_fit_scheme, value_name = "SCHEME")]
    pub fit: Option<FitScheme>,
    /// Phase samples over [0, 2π]
    #[arg(long, default_value_t = 181, value_name = "N")]
    pub n_theta: usize,
    /// Energy samples inside (0, E_thres)
    #[arg(long, default_value_t = 120, value_name = "N")]
    pub n_xi: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Frequency: single value, or a grid with --bisect
    #[arg(long, value_name = "RANGE")]
    pub omega: String,
    /// Forcing amplitude: single value (trace/scan) or bisection guess
    #[arg(long, value_name = "RANGE")]
    pub f: String,
    /// Forcing phase
    #[arg(long, default_value_t = 0.0, value_name = "X")]
    pub psi: f64,
    /// Verdict scan over this phase grid instead of one trace
    #[arg(long, value_name = "RANGE", conflicts_with_all = ["bisect", "psi"])]
    pub psi_grid: Option<String>,
    /// Bisect the critical force over the frequency grid
    #[arg(long)]
    pub bisect: bool,
    /// Horizon in forcing periods
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub horizon: u32,
    #[arg(long, value_enum, default_value_t = CriterionArg::Hitting)]
    pub criterion: CriterionArg,
    /// Simulate the fitted well instead of the source well
    #[arg(long, value_parser = parse_fit_scheme, value_name = "SCHEME")]
    pub fit: Option<FitScheme>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Single scheme; all of barrier, inflection, l2, taylor:4 when omitted
    #[arg(long, value_parser = parse_fit_scheme, value_name = "SCHEME")]
    pub fit: Option<FitScheme>,
}

#[derive(Args, Debug)]
pub struct AaTableArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Energy grid START:END:STEP (normal frame for fitted wells)
    #[arg(long, value_name = "RANGE")]
    pub xi: String,
    /// Reduce a realistic well first (quartic schemes only)
    #[arg(long, value_parser = parse_fit_scheme, value_name = "SCHEME")]
    pub fit: Option<FitScheme>,
}

/// Parse "VALUE" or "START:END:STEP" into an ascending grid.
pub fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let parse = |p: &str| -> CliResult<f64> {
        p.trim()
            .parse::<f64>()
            .map_err(|_| cfg(format!("cannot parse {p:?} as a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![parse(one)?]),
        [start, end, step] => {
            let (a, b, h) = (parse(start)?, parse(end)?, parse(step)?);
            if !(h > 0.0) {
                return Err(cfg(format!("range step must be positive, got {h}")));
            }
            if b < a {
                return Err(cfg(format!("range end {b} precedes start {a}")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * h).collect())
        }
        _ => Err(cfg(format!(
            "range {s:?} must be VALUE or START:END:STEP"
        ))),
    }
}

fn single_value(s: &str, what: &str) -> CliResult<f64> {
    let v = parse_range(s)?;
    if v.len() != 1 {
        return Err(cfg(format!(
            "{what} takes a single value here, got a {}-point grid",
            v.len()
        )));
    }
    Ok(v[0])
}

fn init_jobs(jobs: Option<usize>) -> CliResult<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(cfg("--jobs must be at least 1"));
        }
        // a second initialization in the same process is fine to ignore
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    Ok(())
}

fn load_config(path: &Path) -> CliResult<WellConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg(format!("cannot read well file {}: {e}", path.display())))?;
    let config = WellConfig::parse(&text)
        .map_err(|e| cfg(format!("bad well file {}: {e}", path.display())))?;
    // surface semantic problems (missing parameters, no barrier) with the
    // file name attached, before any pipeline runs
    config
        .build()
        .map_err(|e| cfg(format!("bad well file {}: {e}", path.display())))?;
    Ok(config)
}

/// Any well the simulator may be pointed at.
enum CliWell {
    Quartic(QuarticWell),
    Electrostatic(TranslatedWell<ElectrostaticWell>),
    Fitted(FitPolynomial),
}

impl Potential for CliWell {
    fn v(&self, q: f64) -> f64 {
        match self {
            CliWell::Quartic(w) => w.v(q),
            CliWell::Electrostatic(w) => w.v(q),
            CliWell::Fitted(w) => w.v(q),
        }
    }
    fn dv(&self, q: f64) -> f64 {
        match self {
            CliWell::Quartic(w) => w.dv(q),
            CliWell::Electrostatic(w) => w.dv(q),
            CliWell::Fitted(w) => w.dv(q),
        }
    }
    fn d2v(&self, q: f64) -> f64 {
        match self {
            CliWell::Quartic(w) => w.d2v(q),
            CliWell::Electrostatic(w) => w.d2v(q),
            CliWell::Fitted(w) => w.d2v(q),
        }
    }
}

// the source well in its simulation frame (translated for electrostatic)
fn resolve_source(config: &WellConfig) -> CliResult<(CliWell, WellGeometry)> {
    let geo = config.geometry().map_err(cfg)?;
    let well = match config.build().map_err(cfg)? {
        AnyWell::Quartic(w) => CliWell::Quartic(w),
        AnyWell::Electrostatic(w) => CliWell::Electrostatic(translate_well(&w)),
    };
    Ok((well, geo))
}

// run one fit scheme against the source well over its trapped interval
fn build_fit(config: &WellConfig, scheme: FitScheme) -> CliResult<FitPolynomial> {
    let (source, geo) = resolve_source(config)?;
    let (q_min, q_max) = (geo.q_low, geo.q_thres);
    let fit = match scheme {
        FitScheme::GlobalBarrier => fit_global_barrier(&source, q_min, q_max),
        FitScheme::GlobalInflection => fit_global_inflection(&source, q_min, q_max),
        FitScheme::L2 => fit_l2(&source, q_min, q_max),
        FitScheme::Taylor(order) => match &source {
            CliWell::Electrostatic(w) => fit_taylor(w, order),
            _ => fit_taylor_numeric(&source, order).map(|mut f| {
                f.source_barrier = Some(geo.q_thres);
                f
            }),
        },
    };
    fit.map_err(|e| num(format!("{} fit failed: {e}", scheme)))
}

// the well the simulator runs on, honoring --fit
fn resolve_sim_well(config: &WellConfig, fit: Option<FitScheme>) -> CliResult<(CliWell, WellGeometry)> {
    match fit {
        None => resolve_source(config),
        Some(scheme) => {
            let fitted = build_fit(config, scheme)?;
            let geo = fit_geometry(&fitted)
                .map_err(|e| num(format!("{} fit geometry failed: {e}", scheme)))?;
            Ok((CliWell::Fitted(fitted), geo))
        }
    }
}

// the quartic well the analytic machinery runs on, with its threshold level
// and the scaling bridge back to the caller's frame
fn resolve_normal(
    config: &WellConfig,
    fit: Option<FitScheme>,
) -> CliResult<(QuarticWell, f64, Option<NormalForm>)> {
    match (config.build().map_err(cfg)?, fit) {
        (AnyWell::Quartic(w), None) => {
            let geo = config.geometry().map_err(cfg)?;
            Ok((w, geo.e_thres, None))
        }
        (AnyWell::Electrostatic(_), None) => Err(cfg(
            "the analytic machinery needs a quartic well; pass --fit barrier|inflection|l2 \
             (or --with-simulation for a brute-force-only curve)",
        )),
        (_, Some(FitScheme::Taylor(_))) => Err(cfg(
            "taylor fits have no closed-form machinery; simulate them instead \
             (escape-curve --with-simulation, or the simulate command)",
        )),
        (_, Some(scheme)) => {
            let fitted = build_fit(config, scheme)?;
            let nf = normal_form(&fitted)
                .map_err(|e| num(format!("{} fit has no normal form: {e}", scheme)))?;
            let geo = nf
                .well
                .geometry()
                .map_err(|e| num(format!("fitted well geometry failed: {e}")))?;
            Ok((nf.well, geo.e_thres, Some(nf)))
        }
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| cfg(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// grid.csv -> grid.lpt.csv; grid -> grid.lpt
fn lpt_path(p: &Path) -> PathBuf {
    match p.extension() {
        Some(ext) => p.with_extension(format!("lpt.{}", ext.to_string_lossy())),
        None => p.with_extension("lpt"),
    }
}

fn mechanism_name(m: Mechanism) -> &'static str {
    match m {
        Mechanism::Saddle => "saddle",
        Mechanism::Maximum => "maximum",
        Mechanism::Simulation => "simulation",
    }
}

fn warn_failures(failures: &[(f64, String)]) {
    for (omega, why) in failures {
        eprintln!("warning: no bracket at omega = {omega}: {why}");
    }
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::EscapeCurve(args) => cmd_escape_curve(args),
        Command::RmGrid(args) => cmd_rm_grid(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::AaTable(args) => cmd_aa_table(args),
    }
}

fn cmd_escape_curve(args: EscapeCurveArgs) -> CliResult<()> {
    init_jobs(args.io.jobs)?;
    let config = load_config(&args.io.well)?;
    let omegas = parse_range(&args.omega)?;
    let margin = match args.delta {
        Some(d) if !(d > 0.0 && d < 1.0) => {
            return Err(cfg(format!("--delta {d} outside (0, 1)")))
        }
        Some(d) => d,
        None => MAXIMUM_LEVEL_MARGIN,
    };

    // analytic branch, unless the pipeline is simulation-only
    let taylor_fit = matches!(args.fit, Some(FitScheme::Taylor(_)));
    let sim_only = taylor_fit
        || (matches!(config.build().map_err(cfg)?, AnyWell::Electrostatic(_))
            && args.fit.is_none());
    if sim_only && !args.with_simulation {
        return Err(cfg(
            "this pipeline has no analytic branch; pass --with-simulation",
        ));
    }
    let analytic: Option<EscapeCurve> = if sim_only {
        None
    } else {
        let (well, e_thres, nf) = resolve_normal(&config, args.fit)?;
        let omegas_n: Vec<f64> = match &nf {
            Some(nf) => omegas.iter().map(|&o| nf.omega_normal(o)).collect(),
            None => omegas.clone(),
        };
        let mut curve = combined_escape_curve_with_margin(&well, e_thres, &omegas_n, margin)
            .map_err(|e| num(format!("escape curve failed: {e}")))?;
        if let Some(nf) = &nf {
            for p in &mut curve.points {
                p.omega = nf.omega_phys(p.omega);
                p.f_crit = nf.f_phys(p.f_crit);
                p.xi = p.xi.map(|x| nf.e_phys(x));
            }
            curve.dip = curve.dip.map(|mut d| {
                d.omega = nf.omega_phys(d.omega);
                d.f_crit = nf.f_phys(d.f_crit);
                d.xi = d.xi.map(|x| nf.e_phys(x));
                d
            });
        }
        Some(curve)
    };

    // brute-force rows: the fitted well for taylor fits, the source otherwise
    let simulated: Option<SweepResult> = if args.with_simulation {
        let (well, geo) = if taylor_fit {
            resolve_sim_well(&config, args.fit)?
        } else {
            resolve_source(&config)?
        };
        let params = ForcingParams::new(0.0, omegas[0])
            .map_err(cfg)?
            .with_psi(args.psi);
        let mut sim = SimConfig::new(params);
        sim.horizon_periods = args.horizon;
        sim.criterion = args.criterion.into();
        let res = sweep(&well, &geo, &omegas, &sim, args.f);
        warn_failures(&res.failures);
        if res.rows.is_empty() {
            return Err(num(format!(
                "no simulated bracket on the whole grid [{}, {}]",
                omegas[0],
                omegas[omegas.len() - 1]
            )));
        }
        Some(res)
    } else {
        None
    };

    match args.io.format {
        OutFormat::Csv => {
            let mut s = String::from("omega,f_crit,mechanism\n");
            if let Some(c) = &analytic {
                for p in &c.points {
                    s += &format!("{},{},{}\n", p.omega, p.f_crit, mechanism_name(p.mechanism));
                }
            }
            if let Some(sim) = &simulated {
                for r in &sim.rows {
                    s += &format!(
                        "{},{},simulation\n",
                        r.omega,
                        0.5 * (r.f_crit_low + r.f_crit_high)
                    );
                }
            }
            write_output(&args.io.out, &s)
        }
        OutFormat::Json => {
            let value = serde_json::json!({
                "analytic": analytic,
                "simulation": simulated.as_ref().map(|s| &s.rows),
            });
            write_output(&args.io.out, &format!("{:#}\n", value))
        }
    }
}

fn cmd_rm_grid(args: RmGridArgs) -> CliResult<()> {
    init_jobs(args.io.jobs)?;
    let config = load_config(&args.io.well)?;
    let (well, e_thres, _) = resolve_normal(&config, args.fit)?;
    let params = ForcingParams::new(args.f, args.omega)
        .map_err(cfg)?;
    let grid = rm_grid(&well, &params, e_thres, args.n_theta, args.n_xi)
        .map_err(|e| num(format!("rm grid failed: {e}")))?;
    match args.io.format {
        OutFormat::Csv => {
            let out = args.io.out.as_ref().ok_or_else(|| {
                cfg("rm-grid --format csv needs --out (the LPT contour goes to a sibling file)")
            })?;
            let mut s = String::from("theta,xi,C\n");
            for (i, &theta) in grid.thetas.iter().enumerate() {
                for (j, &xi) in grid.xis.iter().enumerate() {
                    s += &format!("{},{},{}\n", theta, xi, grid.c[i * grid.xis.len() + j]);
                }
            }
            write_output(&Some(out.clone()), &s)?;
            let mut s = String::from("theta,xi\n");
            for (theta, xi) in &grid.lpt {
                s += &format!("{},{}\n", theta, xi);
            }
            write_output(&Some(lpt_path(out)), &s)
        }
        OutFormat::Json => {
            write_output(&args.io.out, &format!("{:#}\n", serde_json::json!(grid)))
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    init_jobs(args.io.jobs)?;
    let config = load_config(&args.io.well)?;
    let (well, geo) = resolve_sim_well(&config, args.fit)?;
    let omegas = parse_range(&args.omega)?;
    if args.bisect {
        let f_guess = single_value(&args.f, "--f (bisection guess)")?;
        let params = ForcingParams::new(0.0, omegas[0])
            .map_err(cfg)?
            .with_psi(args.psi);
        let mut sim = SimConfig::new(params);
        sim.horizon_periods = args.horizon;
        sim.criterion = args.criterion.into();
        let res = sweep(&well, &geo, &omegas, &sim, f_guess);
        warn_failures(&res.failures);
        if res.rows.is_empty() {
            return Err(num(format!(
                "no bracket anywhere on the grid starting at omega = {}",
                omegas[0]
            )));
        }
        return match args.io.format {
            OutFormat::Csv => {
                let mut s =
                    String::from("omega,f_crit_low,f_crit_high,horizon_periods,criterion\n");
                for r in &res.rows {
                    s += &format!(
                        "{},{},{},{},{}\n",
                        r.omega, r.f_crit_low, r.f_crit_high, r.horizon_periods, r.criterion
                    );
                }
                write_output(&args.io.out, &s)
            }
            OutFormat::Json => {
                let value = serde_json::json!({"rows": res.rows, "failures": res.failures});
                write_output(&args.io.out, &format!("{:#}\n", value))
            }
        };
    }

    // single-orbit modes
    if omegas.len() != 1 {
        return Err(cfg("a frequency grid needs --bisect; a trace takes one --omega"));
    }
    let f = single_value(&args.f, "--f")?;
    let base = ForcingParams::new(f, omegas[0]).map_err(cfg)?;

    if let Some(psi_grid) = &args.psi_grid {
        let psis = parse_range(psi_grid)?;
        let mut rows = Vec::new();
        for &psi in &psis {
            let mut sim = SimConfig::new(base.with_psi(psi));
            sim.horizon_periods = args.horizon;
            sim.criterion = args.criterion.into();
            let r = integrate_orbit(&well, &geo, &sim)
                .map_err(|e| num(format!("orbit at psi = {psi} failed: {e}")))?;
            rows.push((psi, r));
        }
        return match args.io.format {
            OutFormat::Csv => {
                let mut s = String::from("psi,escaped,t_escape,max_energy\n");
                for (psi, r) in &rows {
                    s += &format!(
                        "{},{},{},{}\n",
                        psi,
                        r.escaped,
                        r.t_escape.map_or(String::new(), |t| t.to_string()),
                        r.max_energy
                    );
                }
                write_output(&args.io.out, &s)
            }
            OutFormat::Json => {
                let value: Vec<_> = rows
                    .iter()
                    .map(|(psi, r)| serde_json::json!({"psi": psi, "result": r}))
                    .collect();
                write_output(&args.io.out, &format!("{:#}\n", serde_json::json!(value)))
            }
        };
    }

    let mut sim = SimConfig::new(base.with_psi(args.psi));
    sim.horizon_periods = args.horizon;
    sim.criterion = args.criterion.into();
    sim.trace = true;
    let r = integrate_orbit(&well, &geo, &sim)
        .map_err(|e| num(format!("orbit at omega = {} failed: {e}", omegas[0])))?;
    match r.t_escape {
        Some(t) => eprintln!("escaped at t = {t}"),
        None => eprintln!("trapped for {} forcing periods", args.horizon),
    }
    match args.io.format {
        OutFormat::Csv => {
            let mut s = String::from("t,q,p,E\n");
            for p in r.trace.as_deref().unwrap_or(&[]) {
                s += &format!("{},{},{},{}\n", p.t, p.q, p.p, p.e);
            }
            write_output(&args.io.out, &s)
        }
        OutFormat::Json => write_output(&args.io.out, &format!("{:#}\n", serde_json::json!(r))),
    }
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    init_jobs(args.io.jobs)?;
    let config = load_config(&args.io.well)?;
    let (source, geo) = resolve_source(&config)?;
    let schemes = match args.fit {
        Some(s) => vec![s],
        None => vec![
            FitScheme::GlobalBarrier,
            FitScheme::GlobalInflection,
            FitScheme::L2,
            FitScheme::Taylor(4),
        ],
    };
    let mut reports: Vec<FitReport> = Vec::new();
    for scheme in schemes {
        let fit = build_fit(&config, scheme)?;
        let report = fit_report(&source, &fit, geo.q_low, geo.q_thres)
            .map_err(|e| num(format!("{} fit report failed: {e}", scheme)))?;
        reports.push(report);
    }
    match args.io.format {
        OutFormat::Csv => {
            let mut s = String::from("scheme,degree,coeff\n");
            for r in &reports {
                for (i, c) in r.coeffs.iter().enumerate() {
                    s += &format!("{},{},{}\n", r.scheme, i + 2, c);
                }
            }
            write_output(&args.io.out, &s)
        }
        OutFormat::Json => {
            write_output(&args.io.out, &format!("{:#}\n", serde_json::json!(reports)))
        }
    }
}

fn cmd_aa_table(args: AaTableArgs) -> CliResult<()> {
    init_jobs(args.io.jobs)?;
    let config = load_config(&args.io.well)?;
    let (well, _, _) = resolve_normal(&config, args.fit)?;
    let xis = parse_range(&args.xi)?;
    let mut rows = Vec::with_capacity(xis.len());
    for &xi in &xis {
        let aa = aa_data(&well, xi).map_err(|e| num(format!("aa data at xi = {xi}: {e}")))?;
        rows.push(aa);
    }
    match args.io.format {
        OutFormat::Csv => {
            let mut s = String::from("xi,J,Omega,G,k,gamma2\n");
            for a in &rows {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    a.xi, a.j, a.omega_nat, a.g, a.k, a.gamma2
                );
            }
            write_output(&args.io.out, &s)
        }
        OutFormat::Json => {
            write_output(&args.io.out, &format!("{:#}\n", serde_json::json!(rows)))
        }
    }
}
