//! Command-line front end: argument parsing, dispatch and output files.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::characteristic::{
    critical_speeds, envelope_bounds, gamma_of_z, gamma_zero, implicit_l, tangency_solve,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    asymptotics_experiment, cross_validation, extinction_experiment, fisher_sanity,
    fundamental_experiment, moving_frame_bridge_check, logdrift_fit, mckean_experiment,
    spreading_experiment, AsymptoticsConfig, BridgeConfig, CrossValidationConfig, ExtinctionConfig,
    FisherConfig, FundamentalConfig, McKeanConfig, SpreadingConfig, Verdict, NOISE_FLOOR,
};
use crate::fundamental::gamma_h_grid;
use crate::grid::Field;
use crate::kernels::Kernel;
use crate::level_set::LevelSetTrace;
use crate::linear_solver::{initial_mass, solve_linear, rescaled_mass_diagnostic, rescaled_mass_limit, universal_bound_diagnostic};
use crate::nonlinear_solver::{KppProblem, KppStepper};
use crate::output::{csv, diagnostics_csv, level_sets_csv, num, snapshots_csv, write_atomic, write_json};
use crate::verify::run_suite;

#[derive(Debug, Parser)]
#[command(name = "delayfront", version, about = "Delayed non-local KPP fronts: speeds, solvers and experiments")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Only errors are printed.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical speeds c*± and decay rates λ*± of the KPP equation.
    Speeds,
    /// Tangency point, decay pair and the implicit function l(z) of the linear equation.
    Char,
    /// Spectral solution of the linear delayed equation with D(t), S(t) diagnostics.
    SimulateLinear,
    /// Fundamental solution: gate, residual, approximate identity and snapshots.
    Fundamental,
    /// Nonlinear KPP run with snapshots and level sets.
    SimulateKpp,
    /// Packaged study; uses desk defaults for anything not in the config.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
    },
    /// Invariant suite.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    Mckean,
    Extinction,
    Spreading,
    Bridge,
    Logdrift,
    Asymptotics,
    Fisher,
    CrossValidation,
}

/// What a finished run reports to the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Diagnostic,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass | Outcome::Diagnostic => 0,
            Outcome::Fail => 2,
        }
    }
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Self {
        if v.passed() {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

fn verdict_label(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Diagnostic => "diagnostic",
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn text(&self, file: &str, body: &str) -> Result<()> {
        write_atomic(&self.path(file), body.as_bytes())
    }

    /// Writes `{name, params, metrics, verdict}` and echoes a summary line.
    fn report<P: Serialize, M: Serialize>(&self, name: &str, params: &P, metrics: &M, outcome: Outcome) -> Result<Outcome> {
        let doc = json!({
            "name": name,
            "params": params,
            "metrics": metrics,
            "verdict": verdict_label(outcome),
        });
        write_json(&self.path(&format!("{name}.json")), &doc)?;
        if !self.quiet {
            println!("{name}: {} ({})", verdict_label(outcome), self.path(&format!("{name}.json")).display());
        }
        Ok(outcome)
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx {
        cfg,
        out,
        quiet: cli.quiet,
    };
    let needs_config = !matches!(cli.command, Command::Experiment { .. } | Command::Verify);
    if needs_config && cli.config.is_none() {
        return Err(Error::Config("this subcommand needs --config PATH".into()));
    }
    match cli.command {
        Command::Speeds => speeds(&ctx),
        Command::Char => characteristic(&ctx),
        Command::SimulateLinear => simulate_linear(&ctx),
        Command::Fundamental => fundamental(&ctx),
        Command::SimulateKpp => simulate_kpp(&ctx),
        Command::Experiment { name } => experiment(&ctx, name),
        Command::Verify => verify(&ctx),
    }
}

fn speeds(ctx: &Ctx) -> Result<Outcome> {
    let kernel = ctx.cfg.kernel()?;
    let gp = ctx.cfg.gprime0()?;
    let h = ctx.cfg.delay()?;
    let s = critical_speeds(&kernel, gp, h)?;
    ctx.report("speeds", &json!({"kernel": kernel, "gprime0": gp, "h": h}), &s, Outcome::Diagnostic)
}

fn characteristic(ctx: &Ctx) -> Result<Outcome> {
    let params = ctx.cfg.params()?;
    let kernel = ctx.cfg.kernel()?;
    let tang = tangency_solve(&params, &kernel)?;
    let pair = gamma_zero(&params, &kernel, 0.0)?;
    if let Some(range) = ctx.cfg.z_range {
        let zs = range.values();
        let rows = zs
            .iter()
            .map(|&z| gamma_of_z(&params, &kernel, z).map(|g| [num(z), num(g)]))
            .collect::<Result<Vec<_>>>()?;
        ctx.text("gamma.csv", &csv("z,gamma", rows))?;
        let env = zs.iter().map(|&y| {
            let (lo, hi) = envelope_bounds(&params, &pair, &kernel, y);
            [num(y), num(lo), num(implicit_l(&params, &pair, &kernel, y)), num(hi)]
        });
        ctx.text("envelope.csv", &csv("y,lower,l,upper", env))?;
    }
    ctx.report(
        "char",
        &json!({"params": params, "kernel": kernel}),
        &json!({"tangency": tang, "decay_pair": pair}),
        Outcome::Diagnostic,
    )
}

fn simulate_linear(ctx: &Ctx) -> Result<Outcome> {
    let params = ctx.cfg.params()?;
    let kernel = ctx.cfg.kernel()?;
    let grid = ctx.cfg.grid()?;
    let time = ctx.cfg.time()?;
    let hist = ctx.cfg.initial()?.history(&grid, params.h, time.n_h);
    let times = time.output_times();
    let sol = solve_linear(&params, &kernel, &grid, &hist, &times)?;
    ctx.text("snapshots.csv", &snapshots_csv(&grid, &sol.fields))?;
    let pair = gamma_zero(&params, &kernel, 0.0)?;
    let s = universal_bound_diagnostic(&sol, &pair);
    let mass = initial_mass(&grid, &hist);
    // D needs a tangency; without one only S is meaningful.
    let (tang, d, limit) = match tangency_solve(&params, &kernel) {
        Ok(t) => (Some(t), rescaled_mass_diagnostic(&sol, &t, 0.0), Some(rescaled_mass_limit(mass, t.sigma_m))),
        Err(e) => {
            log::warn!("no tangency, D(t) written as nan: {e}");
            let nan = s.iter().map(|p| crate::linear_solver::DiagnosticPoint { t: p.t, value: f64::NAN }).collect();
            (None, nan, None)
        }
    };
    ctx.text("diagnostics.csv", &diagnostics_csv(&d, &s))?;
    ctx.report(
        "simulate_linear",
        &json!({"params": params, "kernel": kernel, "grid": grid, "time": time, "initial": ctx.cfg.initial}),
        &json!({"mass": mass, "limit": limit, "tangency": tang, "decay_pair": pair, "edge_warnings": sol.edge_warnings}),
        Outcome::Diagnostic,
    )
}

fn fundamental(ctx: &Ctx) -> Result<Outcome> {
    let fc = match (&ctx.cfg.fundamental, ctx.cfg.params) {
        (Some(f), _) => f.clone(),
        (None, Some(p)) => {
            let desk = FundamentalConfig::desk();
            FundamentalConfig {
                kernel: ctx.cfg.kernel()?,
                m: p.m,
                p: p.p,
                h: p.h,
                snapshot_times: ctx.cfg.times.clone().unwrap_or(desk.snapshot_times.clone()),
                ..desk
            }
        }
        (None, None) => return Err(Error::Config("missing field `params` (or `fundamental`)".into())),
    };
    let rep = fundamental_experiment(&fc)?;
    if let Some(table) = &rep.table {
        let slices = fc
            .snapshot_times
            .iter()
            .map(|&t| gamma_h_grid(table, t, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let mut body = String::from("t,x,u\n");
        for s in &slices {
            for (x, u) in s.xs.iter().zip(&s.values) {
                body.push_str(&format!("{},{},{}\n", num(s.t), num(*x), num(*u)));
            }
        }
        ctx.text("gamma.csv", &body)?;
    }
    ctx.report("fundamental", &fc, &rep, rep.verdict.into())
}

fn simulate_kpp(ctx: &Ctx) -> Result<Outcome> {
    let kernel = ctx.cfg.kernel()?;
    let g = ctx.cfg.birth()?;
    let h = ctx.cfg.delay()?;
    let grid = ctx.cfg.grid()?;
    let time = ctx.cfg.time()?;
    let beta = ctx.cfg.beta.unwrap_or(0.5 * g.kappa());
    let problem = KppProblem::kpp(kernel, g, grid, h)?.with_floor(NOISE_FLOOR * g.kappa())?;
    let n_h = if h > 0.0 { time.n_h } else { 0 };
    let hist = ctx.cfg.initial()?.history(&grid, h, n_h);
    let mut st = KppStepper::new(&problem, &hist, time.step(h))?;
    let mut trace = LevelSetTrace::new(beta);
    let mut fields: Vec<Field> = vec![st.field()];
    trace.record(&grid, &st.field());
    for t in time.output_times() {
        st.advance_to(t)?;
        let f = st.field();
        trace.record(&grid, &f);
        fields.push(f);
    }
    ctx.text("snapshots.csv", &snapshots_csv(&grid, &fields))?;
    ctx.text("level_sets.csv", &level_sets_csv(&trace))?;
    let speeds = critical_speeds(&kernel, g.gprime0(), h).ok();
    ctx.report(
        "simulate_kpp",
        &json!({"kernel": kernel, "birth": g, "h": h, "grid": grid, "time": time, "beta": beta, "initial": ctx.cfg.initial}),
        &json!({"kappa": g.kappa(), "speeds": speeds, "clamps": st.clamps(), "dt": st.dt()}),
        Outcome::Diagnostic,
    )
}

fn drift_csv(m: &[(f64, f64)], mstar: &[(f64, f64)]) -> String {
    // Both series skip the same unattained times for a two-sided level set.
    csv("t,M,M_star", m.iter().zip(mstar).map(|(a, b)| [num(a.0), num(a.1), num(b.1)]))
}

fn experiment(ctx: &Ctx, name: ExperimentName) -> Result<Outcome> {
    let c = &ctx.cfg;
    match name {
        ExperimentName::Mckean => {
            let cfg = c.mckean.clone().unwrap_or_else(McKeanConfig::desk);
            let r = mckean_experiment(&cfg)?;
            ctx.text("level_sets.csv", &level_sets_csv(&r.trace))?;
            ctx.text("drift.csv", &drift_csv(&r.m_series(), &r.mstar_series()))?;
            ctx.report("mckean", &cfg, &r, r.verdict.into())
        }
        ExperimentName::Logdrift => {
            let cfg = c.mckean.clone().unwrap_or_else(McKeanConfig::desk);
            let r = mckean_experiment(&cfg)?;
            ctx.text("level_sets.csv", &level_sets_csv(&r.trace))?;
            let fit = logdrift_fit(&r.trace, r.speeds.c_plus, r.speeds.lambda_plus)?;
            ctx.report("logdrift", &cfg, &json!({"speeds": r.speeds, "fit": fit}), Outcome::Diagnostic)
        }
        ExperimentName::Extinction => {
            let cfg = c.extinction.clone().unwrap_or_else(ExtinctionConfig::desk);
            let r = extinction_experiment(&cfg)?;
            ctx.text("sup.csv", &csv("t,sup", r.sup_series.iter().map(|p| [num(p.0), num(p.1)])))?;
            ctx.report("extinction", &cfg, &r, r.verdict.into())
        }
        ExperimentName::Spreading => {
            let cfg = c.spreading.clone().unwrap_or_else(SpreadingConfig::desk);
            let r = spreading_experiment(&cfg)?;
            ctx.report("spreading", &cfg, &r, r.verdict.into())
        }
        ExperimentName::Bridge => {
            let cfg = match &c.bridge {
                Some(b) => b.clone(),
                None => BridgeConfig::desk(Kernel::gaussian(0.0, 1.0, 1.0)?),
            };
            let r = moving_frame_bridge_check(&cfg)?;
            ctx.report("bridge", &cfg, &r, r.verdict.into())
        }
        ExperimentName::Asymptotics => {
            let cfg = c.asymptotics.clone().unwrap_or_else(AsymptoticsConfig::desk);
            let r = asymptotics_experiment(&cfg)?;
            ctx.text(
                "diagnostics.csv",
                &csv("t,D,S", r.series.iter().map(|p| [num(p.0), num(p.1), num(p.2)])),
            )?;
            ctx.report("asymptotics", &cfg, &r, r.verdict.into())
        }
        ExperimentName::Fisher => {
            let cfg = FisherConfig::desk();
            let r = fisher_sanity(&cfg)?;
            ctx.report("fisher", &cfg, &r, r.verdict.into())
        }
        ExperimentName::CrossValidation => {
            let cfg = c.cross_validation.clone().unwrap_or_else(CrossValidationConfig::desk);
            let r = cross_validation(&cfg)?;
            ctx.report("cross_validation", &cfg, &r, r.verdict.into())
        }
    }
}

fn verify(ctx: &Ctx) -> Result<Outcome> {
    let checks = run_suite();
    if !ctx.quiet {
        for c in &checks {
            println!("{:<24} {}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
        }
    }
    let outcome = if checks.iter().all(|c| c.passed) {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    ctx.report("verify", &Value::Null, &checks, outcome)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
