//! `click-homodyne`: run any stage of the click-counting homodyne pipeline
//! on a scenario file, or regenerate the data behind a figure.

mod commands;
mod config;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueHint};

use crate::config::{PhaseGrid, ScenarioConfig};
use crate::figures::Figure;
use crate::output::{Format, Output};

/// Caps the worker threads used for parallel grid evaluation.
const THREADS_ENV: &str = "CLICK_HOMODYNE_THREADS";

#[derive(Parser)]
#[command(
    name = "click-homodyne",
    version,
    about = "Balanced homodyne detection with click-counting detector arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML); the built-in default scenario is used when absent.
    #[arg(long, global = true, value_hint = ValueHint::FilePath)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_hint = ValueHint::FilePath)]
    out: Option<PathBuf>,
    /// RNG seed for Monte Carlo sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of simulated shots for Monte Carlo sampling.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Highest moment order to evaluate.
    #[arg(long, global = true)]
    max_order: Option<usize>,
    /// LO phases as start:stop:count, e.g. 0:2pi:65 (both ends included).
    #[arg(long, global = true)]
    phase_grid: Option<PhaseGrid>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Joint and difference click statistics.
    Clicks,
    /// Normally ordered moments of the click quadrature.
    Moments,
    /// Normally ordered variance and principal minors of the matrix of moments.
    Witness,
    /// Variance averaged over Gaussian LO noise.
    Noise,
    /// Finite-shot sampling with bootstrap errors.
    Montecarlo,
    /// Data behind one of the figures, from an embedded preset.
    Figure {
        #[arg(value_enum)]
        name: Figure,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Clicks => "clicks".into(),
            Command::Moments => "moments".into(),
            Command::Witness => "witness".into(),
            Command::Noise => "noise".into(),
            Command::Montecarlo => "montecarlo".into(),
            Command::Figure { name } => format!("figure {}", name.name()),
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::parse(&text, &path.display().to_string())?
        }
        None => ScenarioConfig::parse(include_str!("../presets/default.toml"), "default scenario")?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = cli.shots {
        if shots == 0 {
            bail!("--shots must be at least 1");
        }
        cfg.shots = Some(shots);
    }
    if let Some(m) = cli.max_order {
        cfg.max_order = Some(m);
    }
    if let Some(grid) = cli.phase_grid {
        cfg.lo.phase_grid = grid;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Output> {
    let command = cli.command.name();
    if let Command::Figure { name } = cli.command {
        let unused = [
            ("--config", cli.config.is_some()),
            ("--seed", cli.seed.is_some()),
            ("--shots", cli.shots.is_some()),
            ("--max-order", cli.max_order.is_some()),
        ];
        if let Some((flag, _)) = unused.iter().find(|(_, given)| *given) {
            bail!("{flag} does not apply to figure presets");
        }
        let cfg = name.config(cli.phase_grid)?;
        let tables = name.run(&cfg)?;
        let header = format!("# sweep: {}\n{}", name.sweep(), cfg.to_toml());
        return Ok(Output::new(&command, header, tables));
    }
    let cfg = load_config(cli)?;
    let tables = match cli.command {
        Command::Clicks => commands::clicks(&cfg)?,
        Command::Moments => commands::moments(&cfg)?,
        Command::Witness => commands::witness(&cfg)?,
        Command::Noise => commands::noise(&cfg)?,
        Command::Montecarlo => commands::montecarlo(&cfg)?,
        Command::Figure { .. } => unreachable!("handled above"),
    };
    Ok(Output::new(&command, cfg.to_toml(), tables))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|()| run(&cli))
        .and_then(|output| {
            let text = output.render(cli.format);
            match &cli.out {
                Some(path) => std::fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
