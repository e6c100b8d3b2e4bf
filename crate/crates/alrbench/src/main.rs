use std::path::PathBuf;

use alr_core::metrics::RankCriterion;
use alr_core::strategy::{expand_strategy_grid, StrategyFilter};
use alrbench::campaign::run_campaign;
use alrbench::config::CampaignConfig;
use alrbench::export::{export_results, format_ranking, rank, read_csv};
use alrbench::registry::load_registry;
use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alrbench", version, about = "Seeded benchmark campaigns for active-learning reliability strategies")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and export results.csv, ranking.txt and plotdata.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Skip cells already present in the output directory.
        #[arg(long)]
        resume: bool,
        /// Parallel cells; overrides the config.
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long, env = "ALR_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Rank the strategies of a results table.
    Rank {
        #[arg(long, default_value = "neval")]
        criterion: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the ids of the strategy grid.
    ListStrategies,
    /// Print the problem registry.
    ListProblems {
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Command::Run { config, resume, jobs, output_dir } => {
            let mut cfg = CampaignConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            let s = run_campaign(&cfg, resume)?;
            eprintln!("{} cells run, {} reused, {} failed", s.executed, s.skipped, s.failures.len());
            for (k, why) in &s.failures {
                eprintln!("  failed {}: {why}", k.label());
            }
            export_results(&s.records, &s.output_dir)?;
            println!("{}", s.output_dir.display());
        }
        Command::Rank { criterion, input } => {
            let Some(c) = RankCriterion::from_code(&criterion) else {
                bail!("unknown criterion `{criterion}` (neval, relerr, delta)");
            };
            let f = std::fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let records = read_csv(f)?;
            print!("{}", format_ranking(&rank(&records, c)?));
        }
        Command::ListStrategies => {
            for s in expand_strategy_grid(&StrategyFilter::default()) {
                println!("{s}");
            }
        }
        Command::ListProblems { registry } => {
            let problems = match registry {
                Some(p) => load_registry(&p)?,
                None => alr_core::problems::registry(),
            };
            println!("{:>3}  {:<22} {:>4}  {:>9}  {:>6}  {}", "id", "name", "M", "pf_ref", "beta", "status");
            for p in problems {
                let status = if p.is_runnable() { "runnable" } else { "stub" };
                println!("{:>3}  {:<22} {:>4}  {:>9.3e}  {:>6.3}  {status}", p.id, p.name, p.dim, p.pf_ref, p.beta_ref);
            }
        }
    }
    Ok(())
}
