use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrt::commands::{self, Output};
use mrt::config::RunConfig;
use mrt::validate::validate;

/// Multilevel resonant tunneling rates of an rf-SQUID flux qubit.
#[derive(Debug, Parser)]
#[command(name = "mrt", version)]
struct Cli {
    /// TOML run configuration; omitted keys take the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Drop the charge-noise terms.
    #[arg(long, global = true)]
    flux_only: bool,
    /// Levels per well (right-well channels 1, 3, …).
    #[arg(long, global = true)]
    channels: Option<usize>,
    /// Refine the frequency grid where the integrand is unresolved.
    #[arg(long, global = true)]
    refine: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energies, currents and tunneling amplitudes of the well states.
    Levels,
    /// Escape rate Γ₀ and its channels over the bias range.
    Sweep,
    /// Hybrid spectrum of one ordered pair of states.
    Spectra {
        /// Pair as `m,n` of state labels.
        #[arg(long, default_value = "0,1")]
        pair: String,
    },
    /// Master-equation populations starting from one state.
    Dynamics {
        /// Final time in μs; overrides the config.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Invariant checks of every layer.
    Validate,
}

// 1 for invariant failures, 2 for everything the user can fix in the config
fn exit_code(e: &anyhow::Error) -> u8 {
    let integration = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<mrt_core::Error>(),
            Some(mrt_core::Error::Integration(_))
        )
    });
    if integration {
        1
    } else {
        2
    }
}

fn run(cli: &Cli) -> anyhow::Result<Output> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.options.flux_only |= cli.flux_only;
    cfg.options.refine |= cli.refine;
    if let Some(k) = cli.channels {
        cfg.options.channels = k;
    }
    cfg.validate()?;
    match &cli.command {
        Command::Levels => commands::levels(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Spectra { pair } => commands::spectra(&cfg, commands::parse_pair(pair)?),
        Command::Dynamics { t_max } => commands::dynamics(&cfg, *t_max),
        Command::Validate => validate(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &out.text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(out.text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(2);
    }
    if out.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
