//! Command-line front end: deterministic runs, trace verification, the
//! figure-shaped replication, and multi-seed sweeps.
//!
//! Reports are line-oriented `key = value` text on stdout. Exit code 0 means
//! every requested check passed, 1 means at least one failed, 2 means the
//! command itself could not run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use autotelic::config::RunConfig;
use autotelic::plot::fig3_svg;
use autotelic::runner::{crossing_stats, run, run_to_file, sweep, RunSummary};
use autotelic::safety::InvariantReport;
use autotelic::trace::{fmt_float, read_trace};
use autotelic::verify::{run_checks, VerifyParams, REGISTRY};

#[derive(Parser)]
#[command(name = "autotelic", version, about = "Deterministic autotelic-loop simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the loop once and write the trace CSV.
    Run {
        /// TOML config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Step-count override.
        #[arg(long)]
        steps: Option<u64>,
        /// Trace CSV destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit recorded traces against the check registry.
    Verify {
        /// Trace CSV path; repeat for multiple traces.
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
        /// Comma-separated check names; defaults to the full registry.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        /// Trigger threshold the traces ran with.
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
    },
    /// 150-step replication of the information-gain figure.
    Fig3 {
        /// TOML config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// SVG destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run consecutive seeds and report the aggregate verdict.
    Sweep {
        /// TOML config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of consecutive seeds, starting at the config seed.
        #[arg(long)]
        seeds: u64,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            RunConfig::load(p).with_context(|| format!("loading config {}", p.display()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn opt_step(value: Option<u64>) -> String {
    value.map(|t| t.to_string()).unwrap_or_else(|| "none".into())
}

fn summary_text(s: &RunSummary, audits: &[(u64, InvariantReport)]) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    line("run.steps", s.steps.to_string());
    line("run.seed", s.seed.to_string());
    line("run.cumulative_reward", fmt_float(s.cumulative_reward));
    line("run.fired_steps", s.fired_steps.to_string());
    line("run.modifications_applied", s.modifications_applied.to_string());
    line("run.rule_swaps", s.rule_swaps.to_string());
    line("run.crossing_step", opt_step(s.crossing_step));
    line("run.initial_capability", fmt_float(s.initial_capability));
    line("run.final_capability", fmt_float(s.final_capability));
    line("run.negative_capability_sum", fmt_float(s.negative_capability_sum));
    line("run.goals_active", s.goals_active.to_string());
    line("run.goals_noise", s.goals_noise.to_string());
    line("run.goals_discarded", s.goals_discarded.to_string());
    line("run.goal_batches", s.batch_stats.batches.to_string());
    line("run.goal_batches_eligible", s.batch_stats.eligible.to_string());
    line("run.goal_batches_satisfied", s.batch_stats.satisfied.to_string());
    line("run.goal_batches_veto_only", s.batch_stats.veto_only.to_string());
    line("run.k_max", fmt_float(s.k_max));
    line("run.beta_hat", fmt_float(s.beta_hat));
    line("run.gamma_hat", fmt_float(s.gamma_hat));
    line("run.alpha_star", fmt_float(s.alpha_star));
    line("run.audits_in_region", s.audits_in_region.to_string());
    line("run.audits_total", s.audits_total.to_string());
    if let Some((t, a)) = audits.last() {
        line("audit.last.step", t.to_string());
        line("audit.last.clip_ok", a.clip_ok.to_string());
        line("audit.last.toll_ok", a.toll_ok.to_string());
        line("audit.last.alpha_ok", a.alpha_ok.to_string());
        line("audit.last.caps_ok", a.caps_ok.to_string());
        line("audit.last.in_region", a.in_region.to_string());
        line("audit.last.worst_clip_excess", fmt_float(a.worst_clip_excess));
        line("audit.last.toll_l1", fmt_float(a.toll_l1));
        line("audit.last.toll_bound", fmt_float(a.toll_bound));
    }
    for (i, w) in s.warnings.iter().enumerate() {
        line(&format!("warning.{i}"), w.clone());
    }
    out
}

fn cmd_run(
    config: &Option<PathBuf>,
    seed: Option<u64>,
    steps: Option<u64>,
    out: &Path,
) -> Result<ExitCode> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(n) = steps {
        cfg.run.steps = n;
    }
    let output = run_to_file(&cfg, out)?;
    print!("{}", summary_text(&output.summary, &output.audits));
    println!("run.trace = {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(traces: &[PathBuf], checks: &Option<Vec<String>>, gamma: f64) -> Result<ExitCode> {
    let mut parsed = Vec::with_capacity(traces.len());
    for p in traces {
        let rows = read_trace(p).with_context(|| format!("reading trace {}", p.display()))?;
        parsed.push(rows);
    }
    let names: Vec<&str> = match checks {
        Some(list) => list.iter().map(String::as_str).collect(),
        None => REGISTRY.to_vec(),
    };
    let params = VerifyParams { gamma, ..VerifyParams::default() };
    let report = run_checks(&parsed, &names, &params)?;
    print!("{}", report.to_text());
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_fig3(config: &Option<PathBuf>, out: &Path) -> Result<ExitCode> {
    let mut cfg = load_config(config)?;
    if cfg.run.steps < 150 {
        bail!("fig3 needs run.steps >= 150, got {}", cfg.run.steps);
    }
    cfg.run.steps = 150;
    let output = run(&cfg)?;
    let (crossing, rate) = crossing_stats(&output.rows, cfg.run.gamma);
    let svg = fig3_svg(&output.rows, cfg.run.gamma)?;
    std::fs::write(out, svg).with_context(|| format!("writing plot {}", out.display()))?;
    println!("fig3.crossing_step = {}", opt_step(crossing));
    println!("fig3.post_crossing_activity_rate = {}", fmt_float(rate));
    println!("fig3.plot = {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(config: &Option<PathBuf>, seeds: u64) -> Result<ExitCode> {
    if seeds == 0 {
        bail!("sweep needs at least one seed");
    }
    let cfg = load_config(config)?;
    let summaries = sweep(&cfg, seeds)?;
    let mut good = 0usize;
    let mut worst_neg = 0.0f64;
    let mut all_in_region = true;
    for s in &summaries {
        let ended_up = s.final_capability >= s.initial_capability;
        if ended_up {
            good += 1;
        }
        worst_neg = worst_neg.max(s.negative_capability_sum);
        all_in_region &= s.audits_in_region == s.audits_total;
        let tag = format!("sweep.seed{}", s.seed);
        println!("{tag}.final_capability = {}", fmt_float(s.final_capability));
        println!("{tag}.initial_capability = {}", fmt_float(s.initial_capability));
        println!("{tag}.negative_capability_sum = {}", fmt_float(s.negative_capability_sum));
        println!("{tag}.cumulative_reward = {}", fmt_float(s.cumulative_reward));
        println!("{tag}.crossing_step = {}", opt_step(s.crossing_step));
        println!("{tag}.in_region = {}", s.audits_in_region == s.audits_total);
    }
    let needed = (0.8 * seeds as f64).ceil() as usize;
    let pass = good >= needed && worst_neg <= 2.0 && all_in_region;
    println!("sweep.seeds = {seeds}");
    println!("sweep.ended_at_or_above = {good}");
    println!("sweep.needed = {needed}");
    println!("sweep.worst_negative_sum = {}", fmt_float(worst_neg));
    println!("sweep.all_in_region = {all_in_region}");
    println!("sweep.pass = {pass}");
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Run { config, seed, steps, out } => cmd_run(config, *seed, *steps, out),
        Cmd::Verify { traces, checks, gamma } => cmd_verify(traces, checks, *gamma),
        Cmd::Fig3 { config, out } => cmd_fig3(config, out),
        Cmd::Sweep { config, seeds } => cmd_sweep(config, *seeds),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
