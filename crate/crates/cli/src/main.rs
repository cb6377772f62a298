//! `adpp`: run the experiment pipeline from the command line.
//!
//! Typical use is `simulate`, then `empirics`, `bounds` and `compare` on the
//! same configuration; `lp` and `preset-dump` stand alone.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use adpp_core::bounds::DetectionExponent;
use adpp_core::config::{load_config, preset_by_name, ExperimentConfig};
use adpp_core::format::fmt_num;
use adpp_core::pipeline;

#[derive(Parser, Debug)]
#[command(
    name = "adpp",
    version,
    about = "Approximate drift-plus-penalty simulation and bound evaluation"
)]
struct Cli {
    /// JSON configuration; the sensor3 preset when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Number of independent runs in each ensemble.
    #[arg(long, global = true, value_name = "N")]
    runs: Option<usize>,
    /// Number of slots per run.
    #[arg(long, global = true, value_name = "N")]
    horizon: Option<usize>,
    /// Directory for the CSV outputs.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Detection-bound exponent.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate every sweep point and write the trace files.
    Simulate,
    /// Solve the LP under the limit distribution and each covering member.
    Lp,
    /// Evaluate the closed-form bounds (uses traces when present).
    Bounds,
    /// Estimate error rates, gaps and mixing coefficients from the traces.
    Empirics,
    /// Join empirical values with their bounds into compare.csv.
    Compare,
    /// Print a preset as a fully expanded configuration document.
    PresetDump {
        #[arg(default_value = "sensor3")]
        name: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Default,
    Literal,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p).with_context(|| format!("loading {}", p.display()))?,
        None => preset_by_name("sensor3")?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.runs {
        anyhow::ensure!(n >= 1, "--runs must be at least 1");
        cfg.runs = n;
    }
    if let Some(t) = cli.horizon {
        anyhow::ensure!(t >= 1, "--horizon must be at least 1");
        cfg.horizon = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    match cli.mode {
        Some(Mode::Default) => cfg.modes.detection = DetectionExponent::Hoeffding,
        Some(Mode::Literal) => cfg.modes.detection = DetectionExponent::Literal,
        None => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Command::PresetDump { name } = &cli.command {
        let cfg = preset_by_name(name)?;
        println!("{}", serde_json::to_string_pretty(&cfg.to_json())?);
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = load(cli)?;
    log::info!("{} -> {} ({})", cfg.name, cfg.out.display(), cfg.modes);
    match cli.command {
        Command::Simulate => {
            for p in pipeline::cmd_simulate(&cfg)? {
                println!(
                    "{:<18} tail utility {}  tail penalties [{}]  queue violations {}",
                    p.label,
                    fmt_num(p.tail_utility),
                    p.tail_penalty
                        .iter()
                        .map(|x| fmt_num(*x))
                        .collect::<Vec<_>>()
                        .join(", "),
                    p.queue_violations
                );
            }
        }
        Command::Lp => {
            let r = pipeline::cmd_lp(&cfg)?;
            println!("optimal cost {}  utility {}", fmt_num(r.value), fmt_num(r.utility()));
            println!("support {:?}", r.support);
        }
        Command::Bounds => {
            let table = pipeline::cmd_bounds(&cfg)?;
            if let Some(r) = table.last() {
                println!(
                    "t={}  pe_up {}  psi {}  q_up {}  theta {}",
                    r.t,
                    fmt_num(r.pe_up),
                    fmt_num(r.psi),
                    fmt_num(r.q_up),
                    r.theta.map_or("NA".into(), fmt_num)
                );
            }
            println!("wrote {} rows to {}", table.len(), cfg.out.join("bounds.csv").display());
        }
        Command::Empirics => {
            let (_, summary) = pipeline::cmd_empirics(&cfg)?;
            print!("{summary}");
        }
        Command::Compare => {
            let rep = pipeline::cmd_compare(&cfg)?;
            print!("{}", pipeline::render_compare(&rep));
            let failed = (1..=7).filter(|&c| !rep.criterion_ok(c)).collect::<Vec<u8>>();
            if !failed.is_empty() {
                eprintln!("checks not satisfied for criteria {failed:?}");
                return Ok(ExitCode::from(1));
            }
        }
        Command::PresetDump { .. } => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
