use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use msperiodic::config::{resolve, ConfigSource, Overrides, ResolvedConfig};
use msperiodic::micro::{solve_periodic, stationary_guess};
use msperiodic::report::{self, Metadata, OutputDir, Summary};
use msperiodic::resolved::{periodic_initial, projected_steps, run_resolved, MAX_RESOLVED_STEPS};
use msperiodic::study::{self, epsilon_scaling_of_ck, fit_convergence, speedup_estimate, tolp_sensitivity};
use msperiodic::{run_multiscale, Error, FastState, PeriodicMethod};

const OUT_ENV: &str = "MSPERIODIC_OUT";

mod exit {
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NON_CONVERGENCE: u8 = 3;
    pub const DOMAIN_EXHAUSTED: u8 = 4;
    pub const INFEASIBLE_COST: u8 = 5;
}

#[derive(Parser)]
#[command(name = "msperiodic", version, about = "Multiscale solver for slow-fast systems with periodic fast forcing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fully resolved reference run
    RunResolved(Common),
    /// Multiscale run (AB2 macro steps over periodic micro solves)
    RunMultiscale(Common),
    /// Periodic solution of the fast problem at a frozen slow value
    SolvePeriodic {
        #[command(flatten)]
        common: Common,
        /// Frozen slow value (defaults to u0)
        #[arg(long)]
        u: Option<f64>,
    },
    /// Convergence sweep over the study grid with power-law fits
    Converge(Common),
    /// Fit U(k,K) = U* + C_k k^q_k + C_K K^q_K to a sweep table
    Fit {
        #[command(flatten)]
        common: Common,
        /// CSV with columns k, K and U_T
        #[arg(long)]
        input: PathBuf,
    },
    /// Fast-step counts of resolved and multiscale runs
    Speedup {
        #[command(flatten)]
        common: Common,
        /// Cycles per macro step; measured by a multiscale run when absent
        #[arg(long)]
        n_period: Option<f64>,
    },
    /// Sensitivity of U(T) to the periodicity tolerance
    TolpStudy(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Built-in problem (scalar-default, modal-default)
    #[arg(long)]
    preset: Option<String>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Horizon T
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Macro step size
    #[arg(long = "K", conflicts_with = "macro_steps")]
    macro_step: Option<f64>,
    /// Number of macro steps
    #[arg(long = "N")]
    macro_steps: Option<usize>,
    /// Micro steps per period (k = 1/M)
    #[arg(long = "M")]
    micro_steps: Option<usize>,
    /// Periodicity tolerance
    #[arg(long)]
    tolp: Option<f64>,
    /// Periodic solver: fixed-point | averaged
    #[arg(long)]
    method: Option<PeriodicMethod>,
    /// Storage stride of resolved trajectories
    #[arg(long)]
    stride: Option<usize>,
    /// Worker threads for sweeps
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: $MSPERIODIC_OUT/<command> or ./msperiodic-out/<command>)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            epsilon: self.epsilon,
            t_end: self.t_end,
            macro_steps: self.macro_steps,
            macro_step_size: self.macro_step,
            micro_steps: self.micro_steps,
            tol_p: self.tolp,
            method: self.method,
            stride: self.stride,
            workers: self.workers,
        }
    }

    fn out_dir(&self, command: &str) -> PathBuf {
        match &self.out {
            Some(p) => p.clone(),
            None => std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("msperiodic-out"))
                .join(command),
        }
    }
}

/// Resolved configuration plus the output directory holding its echo.
struct Session {
    command: &'static str,
    cfg: ResolvedConfig,
    config_text: Option<(String, String)>,
    out: OutputDir,
    echo_hash: String,
    started: Instant,
}

impl Session {
    fn open(command: &'static str, common: &Common) -> msperiodic::Result<Self> {
        let config_text = match &common.config {
            Some(p) => Some((p.display().to_string(), std::fs::read_to_string(p)?)),
            None => None,
        };
        let source = config_text.as_ref().map(|(name, text)| ConfigSource { name, text });
        let cfg = resolve(source, &common.overrides())?;
        let out = OutputDir::create(common.out_dir(command))?;
        let echo = cfg.to_toml();
        out.write_text("config.toml", &echo)?;
        info!("resolved config written to {}", out.path("config.toml").display());
        Ok(Self {
            command,
            cfg,
            config_text,
            out,
            echo_hash: report::config_hash(&echo),
            started: Instant::now(),
        })
    }

    fn source(&self) -> Option<ConfigSource<'_>> {
        self.config_text.as_ref().map(|(name, text)| ConfigSource { name, text })
    }

    fn finish(&self, summary: &Summary, cn_steps: u64) -> msperiodic::Result<()> {
        self.out.write_text("summary.txt", &summary.render())?;
        let meta = Metadata {
            command: self.command.to_string(),
            config_hash: self.echo_hash.clone(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            cn_steps,
        };
        self.out.write_text("metadata.txt", &meta.render())?;
        print!("{}", summary.render());
        println!("output: {}", self.out.root().display());
        Ok(())
    }
}

fn run_resolved_cmd(common: &Common) -> msperiodic::Result<u8> {
    let s = Session::open("run-resolved", common)?;
    let p = s.cfg.problem()?;
    let v0 = if p.system.is_unforced() {
        FastState::zeros(p.system.dim())
    } else {
        periodic_initial(&p.system, p.scale.u0(), p.micro_grid)?
    };
    let traj = run_resolved(&p.system, &p.scale, p.micro_grid, &v0, p.stride)?;
    s.out
        .write_with("resolved.csv", |buf| report::write_resolved_csv(buf, &traj))?;
    s.finish(&report::summarize_resolved(&traj), traj.steps)?;
    Ok(if traj.is_completed() { 0 } else { exit::DOMAIN_EXHAUSTED })
}

fn run_multiscale_cmd(common: &Common) -> msperiodic::Result<u8> {
    let s = Session::open("run-multiscale", common)?;
    let p = s.cfg.problem()?;
    let traj = run_multiscale(&p.system, &p.scale, p.macro_grid, p.micro_grid, &p.psolver)?;
    s.out.write_with("macro.csv", |buf| report::write_macro_csv(buf, &traj))?;
    s.finish(&report::summarize_macro(&traj), traj.cn_steps)?;
    Ok(if traj.is_completed() { 0 } else { exit::DOMAIN_EXHAUSTED })
}

fn solve_periodic_cmd(common: &Common, u: Option<f64>) -> msperiodic::Result<u8> {
    let s = Session::open("solve-periodic", common)?;
    let p = s.cfg.problem()?;
    let u = u.unwrap_or(p.scale.u0());
    p.scale.check_u(u)?;
    let guess = stationary_guess(&p.system, u, p.micro_grid)?;
    let sol = solve_periodic(&p.system, u, &guess, p.micro_grid, &p.psolver)?;
    s.out.write_with("periodic.csv", |buf| report::write_micro_csv(buf, &sol))?;
    let mut summary = Summary::new();
    summary
        .push_f64("u", u)
        .push("method", p.psolver.method())
        .push("cycles_used", sol.cycles_used())
        .push_f64("residual", sol.periodicity_residual())
        .push_f64("averaged_reaction", msperiodic::micro::averaged_reaction(&p.system, u, &sol)?);
    s.finish(&summary, (sol.cycles_used() * p.micro_grid.steps()) as u64)?;
    Ok(0)
}

fn converge_cmd(common: &Common) -> msperiodic::Result<u8> {
    let s = Session::open("converge", common)?;
    let plan = s.cfg.study_plan_located(s.source())?;
    let table = plan.run(s.cfg.run.workers)?;
    s.out.write_with("study.csv", |buf| report::write_study_csv(buf, &table.rows))?;

    let mut summary = Summary::new();
    let mut report_text = String::new();
    let mut fits = Vec::new();
    for (eps, reference) in &table.references {
        if let Some(r) = reference {
            summary.push_f64(format!("eps_{}.u_ref", report::fmt_f64(*eps)), r.limit);
            if let Some(order) = r.order {
                summary.push_f64(format!("eps_{}.u_ref_order", report::fmt_f64(*eps)), order);
            }
        }
        for &tol in &plan.tolerances {
            let key = format!("eps_{}.tol_{}", report::fmt_f64(*eps), report::fmt_f64(tol));
            match fit_convergence(&table.samples(*eps, tol)) {
                Ok(fit) => {
                    report_text.push_str(&format!("== epsilon {eps}, tol_P {tol}\n"));
                    report_text.push_str(&report::fit_report(&fit));
                    report_text.push('\n');
                    for (k, v) in report::summarize_fit(&fit).render().lines().filter_map(|l| l.split_once('=')) {
                        summary.push(format!("{key}.{k}"), v);
                    }
                    if reference.is_some() {
                        let plateau = (fit.u_star - reference.expect("checked").limit).abs();
                        summary.push_f64(format!("{key}.fit_plateau"), plateau);
                    }
                    fits.push((*eps, tol, fit));
                }
                Err(e) => {
                    summary.push(format!("{key}.fit_error"), e);
                }
            }
        }
    }
    for &tol in &plan.tolerances {
        let at_tol: Vec<_> = fits.iter().filter(|f| f.1 == tol).collect();
        for w in at_tol.windows(2) {
            let (small, large) = (w[0], w[1]);
            let ratio = epsilon_scaling_of_ck(&large.2, &small.2)?;
            summary.push_f64(
                format!(
                    "ck_ratio.eps_{}_over_{}.tol_{}",
                    report::fmt_f64(large.0),
                    report::fmt_f64(small.0),
                    report::fmt_f64(tol)
                ),
                ratio,
            );
        }
    }
    s.out.write_text("fit.txt", &report_text)?;
    let cn: u64 = table.rows.iter().map(|r| r.e_ms).sum();
    s.finish(&summary, cn)?;
    Ok(0)
}

fn fit_cmd(common: &Common, input: &Path) -> msperiodic::Result<u8> {
    let s = Session::open("fit", common)?;
    let samples = report::read_study_samples(std::fs::File::open(input)?)?;
    let fit = fit_convergence(&samples)?;
    s.out.write_text("fit.txt", &report::fit_report(&fit))?;
    s.finish(&report::summarize_fit(&fit), 0)?;
    Ok(0)
}

fn speedup_cmd(common: &Common, n_period: Option<f64>) -> msperiodic::Result<u8> {
    let s = Session::open("speedup", common)?;
    let p = s.cfg.problem()?;
    let k = p.micro_grid.step();
    let kk = p.macro_grid.step_size();
    let mut summary = Summary::new();
    let (est, cn) = match n_period {
        Some(n) => (speedup_estimate(k, kk, p.scale.epsilon(), n, p.scale.t_end())?, 0),
        None => {
            let traj = run_multiscale(&p.system, &p.scale, p.macro_grid, p.micro_grid, &p.psolver)?;
            summary
                .push_f64("n_period", traj.mean_cycles())
                .push("measured_cn_steps", traj.cn_steps);
            (study::speedup_of_run(&traj, &p.scale, p.macro_grid)?, traj.cn_steps)
        }
    };
    for (key, value) in report::summarize_speedup(&est).render().lines().filter_map(|l| l.split_once('=')) {
        summary.push(key, value);
    }
    let projected = projected_steps(&p.scale, p.micro_grid);
    summary
        .push_f64("resolved_projected_steps", projected)
        .push("resolved_feasible", projected <= MAX_RESOLVED_STEPS);
    s.finish(&summary, cn)?;
    Ok(0)
}

fn tolp_cmd(common: &Common) -> msperiodic::Result<u8> {
    let s = Session::open("tolp-study", common)?;
    let p = s.cfg.problem()?;
    let tolerances = &s.cfg.study.tolp_values;
    let rows = tolp_sensitivity(
        &p.system,
        &p.scale,
        p.macro_grid,
        p.micro_grid,
        &p.psolver,
        tolerances,
        p.workers,
    )?;
    s.out.write_with("tolp.csv", |buf| report::write_tolp_csv(buf, &rows))?;
    let mut summary = Summary::new();
    for r in &rows {
        summary.push_f64(format!("difference.tol_{}", report::fmt_f64(r.tol_p)), r.difference);
    }
    s.finish(&summary, rows.iter().map(|r| r.cn_steps).sum())?;
    Ok(0)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Invariant { .. } | Error::DimensionMismatch { .. } | Error::Domain { .. } => {
            exit::CONFIG
        }
        Error::NonConvergence { .. } | Error::IntegratorFailure { .. } => exit::NON_CONVERGENCE,
        Error::DomainExhausted { .. } => exit::DOMAIN_EXHAUSTED,
        Error::InfeasibleCost { .. } => exit::INFEASIBLE_COST,
        _ => exit::OTHER,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunResolved(c) => run_resolved_cmd(c),
        Command::RunMultiscale(c) => run_multiscale_cmd(c),
        Command::SolvePeriodic { common, u } => solve_periodic_cmd(common, *u),
        Command::Converge(c) => converge_cmd(c),
        Command::Fit { common, input } => fit_cmd(common, input),
        Command::Speedup { common, n_period } => speedup_cmd(common, *n_period),
        Command::TolpStudy(c) => tolp_cmd(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
