//! `funbandit` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad config or flags,
//! 3 a budget too small for the schedule, 4 a vacuous bound.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use funbandit::bounds::{self, BoundConstants, BoundError, QFunction};
use funbandit::config::ConfigDocument;
use funbandit::harness::{sweep_budgets, FailureKind, HarnessError, RunOptions};
use funbandit::report;
use funbandit::Schedule;

const WORKERS_ENV: &str = "FUNBANDIT_WORKERS";

#[derive(Parser)]
#[command(name = "funbandit", version, about = "Functional best-arm identification with Batch Elimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment described by a config file.
    Run(RunArgs),
    /// Evaluate a closed-form error bound.
    Bound(Box<BoundArgs>),
    /// Print an elimination schedule.
    Schedule(ScheduleArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Fill `wall_time_ms`. Makes the output vary between runs.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Sr,
    Sh,
}

impl Policy {
    fn schedule(self, arms: usize) -> Result<Schedule, Failure> {
        match self {
            Policy::Sr => Schedule::successive_rejects(arms),
            Policy::Sh => Schedule::sequential_halving(arms),
        }
        .map_err(|e| Failure::Usage(e.to_string()))
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Functional {
    Mean,
    Mv,
    Var,
    Avar,
    Entropy,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long = "K")]
    arms: usize,
    #[arg(long, value_enum)]
    policy: Policy,
    /// Budget used to show per-round pull counts.
    #[arg(long = "T")]
    budget: Option<u64>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    functional: Functional,
    #[arg(long = "K")]
    arms: usize,
    #[arg(long = "T")]
    budget: f64,
    /// Smallest gap between the best arm and the others.
    #[arg(long = "d")]
    gap: f64,
    #[arg(long, value_enum, default_value_t = Policy::Sr)]
    schedule: Policy,
    #[arg(long)]
    lambda: Option<f64>,
    /// Lower end of the reward support (mean-variance).
    #[arg(long = "A")]
    lower: Option<f64>,
    /// Upper end of the reward support (mean-variance).
    #[arg(long = "B")]
    upper: Option<f64>,
    /// Bound on |reward| (average value-at-risk).
    #[arg(long = "M")]
    reward_bound: Option<f64>,
    /// Largest gap, for the regret bounds of the mean case.
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Density at the quantile (value-at-risk).
    #[arg(long)]
    pdf: Option<f64>,
    /// Density derivative at the quantile (value-at-risk).
    #[arg(long)]
    pdf_deriv: Option<f64>,
    /// Estimator bias bound, overriding the computed one.
    #[arg(long = "V")]
    bias: Option<f64>,
    /// Estimator variance bound, overriding the computed one.
    #[arg(long = "W")]
    variance: Option<f64>,
    #[arg(long = "C1", default_value_t = 0.0)]
    order_c1: f64,
    #[arg(long = "C2", default_value_t = 0.0)]
    order_c2: f64,
    #[arg(long = "c1", default_value_t = 0.0)]
    entropy_c1: f64,
    #[arg(long = "c2", default_value_t = 0.0)]
    entropy_c2: f64,
    #[arg(long = "c4", default_value_t = 0.0)]
    entropy_c4: f64,
    #[arg(long = "c5", default_value_t = 0.0)]
    entropy_c5: f64,
    #[arg(long = "M-knn")]
    knn_scale: Option<f64>,
    #[arg(long = "D")]
    density_max: Option<f64>,
    #[arg(long = "D-prime")]
    density_slope_max: Option<f64>,
    /// Samples per arm; defaults to floor(T/H).
    #[arg(long = "N")]
    samples: Option<u64>,
    /// Neighbour count of the k-NN entropy estimator.
    #[arg(long = "k", default_value_t = 1)]
    neighbours: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

impl BoundArgs {
    fn constants(&self) -> BoundConstants {
        BoundConstants {
            order_c1: self.order_c1,
            order_c2: self.order_c2,
            entropy_c1: self.entropy_c1,
            entropy_c2: self.entropy_c2,
            entropy_c4: self.entropy_c4,
            entropy_c5: self.entropy_c5,
            knn_scale: self.knn_scale,
            density_max: self.density_max,
            density_slope_max: self.density_slope_max,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Budget(String),
    Vacuous(String),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Vacuous(_) => 4,
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::BiasDominates { .. } | BoundError::SampleConditionUnmet { .. } => Failure::Vacuous(e.to_string()),
            BoundError::DomainError(_) | BoundError::MissingConstant(_) => Failure::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Bound(args) => cmd_bound(&args),
        Command::Schedule(args) => cmd_schedule(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(m) | Failure::Budget(m) | Failure::Vacuous(m) => eprintln!("error: {m}"),
                Failure::Internal(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(failure.code())
        }
    }
}

fn workers_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Failure::Usage(format!("{WORKERS_ENV}: {e}"))),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}"))),
        },
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let workers = workers_from_env()?;
    let mut doc = ConfigDocument::load(&args.config).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(seed) = args.seed {
        doc.seed = seed;
    }
    let config = doc.into_experiment().map_err(|e| Failure::Usage(e.to_string()))?;
    let opts = RunOptions {
        workers,
        record_timing: args.record_timing,
    };
    let report = sweep_budgets(&config, opts).map_err(|e| match e {
        HarnessError::InvalidConfig(m) => Failure::Usage(m),
        other => Failure::Internal(other.into()),
    })?;

    let text = match args.format {
        Format::Csv => report::to_csv(&report),
        Format::Json => report::to_json(&report).context("encoding report")?,
    };
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout")?,
    }

    let failures: Vec<_> = report
        .rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| (r.budget, f)))
        .collect();
    if let Some((budget, f)) = failures.iter().find(|(_, f)| f.kind == FailureKind::InsufficientBudget) {
        return Err(Failure::Budget(format!("T = {budget}: {}", f.message)));
    }
    if let Some((budget, f)) = failures.first() {
        return Err(Failure::Internal(anyhow::anyhow!("T = {budget}: {}", f.message)));
    }
    Ok(())
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

fn require(value: Option<f64>, flag: &str, functional: &str) -> Result<f64, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--{flag} is required for --functional {functional}")))
}

fn cmd_bound(args: &BoundArgs) -> Result<(), Failure> {
    let schedule = args.schedule.schedule(args.arms)?;
    let h = schedule.h();
    let k = args.arms;
    let t = args.budget;
    if !(t.is_finite() && t > h as f64) {
        return Err(Failure::Usage(format!("--T {t} must exceed H = {h}")));
    }
    let pulls = args.samples.unwrap_or((t / h as f64).floor() as u64);
    let consts = args.constants();
    consts.validate()?;

    let mut extra: Vec<(&str, f64)> = Vec::new();
    let raw = match args.functional {
        Functional::Mean => {
            let q = QFunction::mean();
            let raw = bounds::generic_error_bound(h, k, t, args.gap, &q)?;
            if let Some(gamma_max) = args.gamma_max {
                let (regret, pac) = bounds::regret_and_pac_bounds(h, k, t, args.gap, gamma_max, args.delta, &q)?;
                extra.push(("regret_bound", regret));
                extra.push(("pac_regret_bound", pac));
            }
            extra.push(("sample_complexity", bounds::sample_complexity_mean(args.delta, h, k, args.gap)?));
            raw
        }
        Functional::Mv => {
            let lambda = require(args.lambda, "lambda", "mv")?;
            let a = require(args.lower, "A", "mv")?;
            let b = require(args.upper, "B", "mv")?;
            bounds::mv_error_bound(h, k, t, args.gap, lambda, a, b)?
        }
        Functional::Var => {
            let (v, w) = match (args.bias, args.variance) {
                (Some(v), Some(w)) => (v.abs(), w),
                _ => {
                    let lambda = require(args.lambda, "lambda", "var")?;
                    let pdf = require(args.pdf, "pdf", "var")?;
                    let deriv = require(args.pdf_deriv, "pdf-deriv", "var")?;
                    let (v, w) = bounds::var_bias_variance(lambda, pulls, pdf, deriv, &consts)?;
                    (args.bias.map_or(v, f64::abs), args.variance.unwrap_or(w))
                }
            };
            extra.push(("V", v));
            extra.push(("W", w));
            bounds::var_error_bound(h, k, t, args.gap, v, w)?
        }
        Functional::Avar => {
            let lambda = require(args.lambda, "lambda", "avar")?;
            let m = require(args.reward_bound, "M", "avar")?;
            extra.push(("lambda_prime", bounds::lambda_prime(pulls, lambda)));
            bounds::avar_error_bound(h, k, t, args.gap, lambda, m, &consts)?
        }
        Functional::Entropy => {
            bounds::entropy_error_bound(h, k, t, args.gap, pulls, &consts, args.neighbours, args.dim)?
        }
    };

    let mut text = format!(
        "H = {h}\nN = {pulls}\nbound_raw = {}\nbound = {}\n",
        report::format_number(raw),
        report::format_number(bounds::clamp_probability(raw))
    );
    for (key, value) in extra {
        text.push_str(&format!("{key} = {}\n", report::format_number(value)));
    }
    io::stdout().write_all(text.as_bytes()).context("writing stdout")?;
    Ok(())
}

fn cmd_schedule(args: &ScheduleArgs) -> Result<(), Failure> {
    let schedule = args.policy.schedule(args.arms)?;
    let join = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut text = format!(
        "L = {}\nx = {}\nH = {}\nsurvivors = {}\n",
        schedule.rounds(),
        join(schedule.eliminations()),
        schedule.h(),
        join(&schedule.survivor_counts()),
    );
    if let Some(budget) = args.budget {
        let per_arm = schedule.pulls_per_round(budget);
        if per_arm == 0 {
            return Err(Failure::Usage(format!("--T {budget} is below H = {}", schedule.h())));
        }
        let per_round: Vec<usize> = schedule
            .survivor_counts()
            .iter()
            .map(|&s| s * per_arm as usize)
            .collect();
        text.push_str(&format!(
            "pulls_per_arm = {per_arm}\npulls_per_round = {}\ntotal_pulls = {}\n",
            join(&per_round),
            schedule.total_pulls(budget)
        ));
    }
    io::stdout().write_all(text.as_bytes()).context("writing stdout")?;
    Ok(())
}
