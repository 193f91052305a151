use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delay_consensus::experiment::{
    admissible_table, cmd_admissible, cmd_control_effort, cmd_rate_sweep, cmd_simulate, cmd_split_report,
    effort_tables, rate_sweep_tables, render, simulate_tables, split_table, ExperimentConfig, Table, TauGrid,
};
use delay_consensus::{Error, Result};

#[derive(Parser)]
#[command(name = "delaycons", version, about = "Delay-accelerated average consensus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Largest admissible delay for each split factor.
    Admissible,
    /// Network rate against delay, with landmark rows.
    RateSweep,
    /// Closed-loop runs with the sampled sinusoid reference.
    Simulate,
    /// Running maximum control effort of zero-input runs.
    ControlEffort,
    /// Robustness, speed and effort summary per split factor.
    SplitReport,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Edge-list file (`i j [w]` per line).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Comma-separated split factors.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    k: Option<Vec<f64>>,
    /// Comma-separated delays, or `auto`.
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    horizon: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    dt_max: Option<f64>,
}

fn parse_tau(s: &str) -> Result<TauGrid> {
    if s.trim().eq_ignore_ascii_case("auto") {
        return Ok(TauGrid::default());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("--tau {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()
        .map(TauGrid::Values)
}

fn config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(g) = &c.graph {
        cfg.graph = Some(g.clone());
    }
    if let Some(a) = c.alpha {
        cfg.alpha = a;
    }
    if let Some(k) = &c.k {
        cfg.k = k.clone();
    }
    if let Some(t) = &c.tau {
        cfg.tau = parse_tau(t)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(h) = c.horizon {
        cfg.horizon = h;
    }
    if let Some(d) = c.dt_max {
        cfg.dt_max = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, tables: &[Table], show: &[&Table]) -> Result<()> {
    for t in tables {
        let path = t.write_to(&cfg.out)?;
        log::info!("wrote {}", path.display());
    }
    for t in show {
        print!("{}", render(t));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(&cli.common)?;
    match cli.command {
        Command::Admissible => {
            let t = admissible_table(&cmd_admissible(&cfg)?);
            emit(&cfg, std::slice::from_ref(&t), &[&t])
        }
        Command::RateSweep => {
            let (curve, marks) = rate_sweep_tables(&cmd_rate_sweep(&cfg)?);
            emit(&cfg, &[curve.clone(), marks.clone()], &[&marks])
        }
        Command::Simulate => {
            let tables = simulate_tables(&cmd_simulate(&cfg)?);
            let summary = tables.last().unwrap().clone();
            emit(&cfg, &tables, &[&summary])
        }
        Command::ControlEffort => {
            let (long, summary) = effort_tables(&cmd_control_effort(&cfg)?);
            emit(&cfg, &[long, summary.clone()], &[&summary])
        }
        Command::SplitReport => {
            let t = split_table(&cmd_split_report(&cfg)?);
            emit(&cfg, std::slice::from_ref(&t), &[&t])
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
