use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use femtopc::experiments::{self, ExperimentConfig};
use femtopc::table::Table;

#[derive(Parser)]
#[command(name = "femtopc", version, about = "Two-tier femtocell power control simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for trial parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct Single {
    /// Femtocell count.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Index into the configured `(D, D_f)` positions.
    #[arg(long, default_value_t = 0)]
    position: usize,
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Per-tier SINR contours.
    Contour,
    /// Link budget against the path-loss exponent and its CDF over random drops.
    Linkbudget,
    /// One traced run of utility-based SINR adaptation.
    Adapt {
        #[command(flatten)]
        single: Single,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
    },
    /// One run of cellular link-quality protection.
    Protect {
        #[command(flatten)]
        single: Single,
    },
    /// Monte Carlo: equilibrium SINRs per (a, b).
    #[command(name = "mc-exp1")]
    McExp1,
    /// Monte Carlo: adaptation with link-quality protection.
    #[command(name = "mc-exp2")]
    McExp2,
    /// The fixed 16-femtocell protection scenario.
    Table2,
    /// Print the effective configuration as TOML.
    Config,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, table: &Table) -> Result<()> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    table.write_csv(BufWriter::new(file))?;
    eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = &cli.common.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    match cli.command {
        Command::Contour => write(out, "contour.csv", &experiments::contour_experiment(&cfg)?)?,
        Command::Linkbudget => {
            write(out, "link_budget_alpha.csv", &experiments::link_budget_vs_alpha(&cfg)?)?;
            write(out, "link_budget_cdf.csv", &experiments::link_budget_cdf(&cfg)?)?;
        }
        Command::Adapt { single, a, b } => {
            let (result, trace) = experiments::adapt_single(&cfg, single.n, single.position, a, b, single.trial)?;
            write(out, "adapt_trace.csv", &trace)?;
            write(out, "adapt_result.csv", &experiments::trial_one_table(&[result]))?;
        }
        Command::Protect { single } => {
            let (result, epochs) = experiments::protect_single(&cfg, single.n, single.position, single.trial)?;
            write(out, "protect_epochs.csv", &epochs)?;
            write(out, "protect_result.csv", &experiments::trial_two_table(&[result]))?;
        }
        Command::McExp1 => {
            let (rows, table) = experiments::experiment_one(&cfg)?;
            write(out, "mc_exp1_trials.csv", &table)?;
            write(out, "mc_exp1_summary.csv", &experiments::summarize_one(&rows))?;
        }
        Command::McExp2 => {
            let (rows, table) = experiments::experiment_two(&cfg)?;
            let t = &cfg.targets;
            let reference = 0.5 * (t.gamma_f_min_db + t.gamma_f_max_db);
            write(out, "mc_exp2_trials.csv", &table)?;
            write(out, "mc_exp2_summary.csv", &experiments::summarize_two(&rows, reference))?;
        }
        Command::Table2 => {
            let report = experiments::table2_scenario(&cfg)?;
            write(out, "table2_users.csv", &report.users_table())?;
            write(out, "table2_summary.csv", &report.summary_table())?;
            write(out, "table2_epochs.csv", &report.outcome.trace_table())?;
            write(out, "table2_layout.csv", &report.geometry.to_table())?;
            write(out, "table2_gains.csv", &report.gains.to_table())?;
        }
        Command::Config => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
