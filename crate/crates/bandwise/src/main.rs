use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bandwise::config::{parse_mode, parse_policies, ExperimentConfig};
use bandwise::{experiment, Result};

#[derive(Parser)]
#[command(name = "bandwise", version, about = "Energy-aware multiband band assignment experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Synthesize the channel trace.
    Generate(Overrides),
    /// Fit forecasters and write the error table.
    Train(Overrides),
    /// Run the policies over the evaluation region.
    Run(Overrides),
    /// Summarize the frames table into power and CDF tables.
    Report(Overrides),
    /// generate, train, run and report in order.
    All(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed_trace: Option<u64>,
    #[arg(long)]
    seed_train: Option<u64>,
    #[arg(long)]
    seed_run: Option<u64>,
    /// Comma-separated policy names.
    #[arg(long)]
    policy: Option<String>,
    /// Comma-separated target sum rates in bit/s per frame.
    #[arg(long)]
    target_rate: Option<String>,
    #[arg(long)]
    frame_slots: Option<usize>,
    /// Switching cost.
    #[arg(long)]
    nu: Option<f64>,
    /// Forecast quantity: rate or channel.
    #[arg(long)]
    mode: Option<String>,
    /// Do not discount THz forecasts.
    #[arg(long)]
    no_discount: bool,
    /// Experiment directory.
    #[arg(long, default_value = "bandwise-out")]
    out: PathBuf,
}

impl Overrides {
    /// Defaults, then the config file, then flags.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed_trace {
            cfg.seed_trace = v;
        }
        if let Some(v) = self.seed_train {
            cfg.seed_train = v;
        }
        if let Some(v) = self.seed_run {
            cfg.seed_run = v;
        }
        if let Some(v) = &self.policy {
            cfg.policies = parse_policies(v)?;
        }
        if let Some(v) = &self.target_rate {
            cfg.set("frame.target_rates", v)?;
        }
        if let Some(v) = self.frame_slots {
            cfg.frame_slots = v;
        }
        if let Some(v) = self.nu {
            cfg.switching_cost = v;
        }
        if let Some(v) = &self.mode {
            cfg.mode = parse_mode(v)?;
        }
        if self.no_discount {
            cfg.discount = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(verb: Verb) -> Result<()> {
    match verb {
        Verb::Generate(o) => {
            let trace = experiment::generate(&o.resolve()?, &o.out)?;
            println!("wrote {} UEs × {} slots to {}", trace.ue_count(), trace.slots_per_ue(), o.out.display());
        }
        Verb::Train(o) => {
            let (errors, _) = experiment::train(&o.resolve()?, &o.out)?;
            println!("wrote {} error rows to {}", errors.len(), o.out.display());
        }
        Verb::Run(o) => {
            let runs = experiment::run(&o.resolve()?, &o.out)?;
            println!("ran {} policy/target pairs into {}", runs.len(), o.out.display());
        }
        Verb::Report(o) => {
            o.resolve()?;
            for s in experiment::report(&o.out)? {
                println!(
                    "{:<17} {:>12} bps  {:>9.2} mW  miss {:.3}",
                    s.policy.name(),
                    s.target,
                    s.avg_power_mw,
                    s.miss_fraction
                );
            }
        }
        Verb::All(o) => {
            let out = experiment::run_all(&o.resolve()?, &o.out)?;
            println!("{} summary rows in {}", out.summary.len(), o.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse().verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
