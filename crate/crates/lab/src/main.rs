use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::Parser;

use sclwp_lab::{run_to_dir, ExperimentConfig, REGISTRY};

/// Run one registered experiment and write its artifacts.
#[derive(Debug, Parser)]
#[command(name = "sclwp", version)]
struct Cli {
    #[arg(value_parser = PossibleValuesParser::new(REGISTRY))]
    experiment: String,
    /// TOML config; defaults of the experiment otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; `<root>/<experiment>` otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output root used when `--out` is absent.
    #[arg(long, env = "SCLWP_OUT_ROOT", default_value = "runs")]
    out_root: PathBuf,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for this run.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Tiny profile for quick checks.
    #[arg(long)]
    smoke: bool,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", p.display()))?;
            let c = ExperimentConfig::from_toml(&text)?;
            if c.experiment != cli.experiment {
                anyhow::bail!("config is for `{}`, not `{}`", c.experiment, cli.experiment);
            }
            c
        }
        None => ExperimentConfig::defaults(&cli.experiment)?,
    };
    if cli.smoke {
        cfg.smoke();
    }
    if let Some(s) = cli.seed {
        cfg.noise.base_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        return match cfg.to_toml() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        };
    }
    let dir = cli.out.clone().unwrap_or_else(|| cli.out_root.join(&cfg.experiment));
    match run_to_dir(&cfg, &dir, cli.threads.map(|n| n as usize)) {
        Ok(report) => {
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!("{}: {verdict} ({})", cfg.experiment, report.dir.display());
            for c in &report.outcome.certificates {
                println!("  {}: {}", c.title, if c.passed() { "pass" } else { "fail" });
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
