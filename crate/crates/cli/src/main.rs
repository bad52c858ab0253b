use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dynakernel::session::{server, ScenarioConfig, Session, SessionError};
use dynakernel::{to_tikz, TikzOptions};
use log::info;

#[derive(Parser)]
#[command(
    name = "dynakernel",
    version,
    about = "Event-driven simulator for distributed algorithms on dynamic networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario, headless or behind a live-editing socket.
    Run(RunArgs),
    /// Run a scenario to a tick and export the topology.
    Export(ExportArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Address to serve the wire protocol on.
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    /// Run without a server, as fast as possible.
    #[arg(long)]
    headless: bool,
    /// Stop after this many ticks (overrides the scenario's run_limit).
    #[arg(long)]
    ticks: Option<u64>,
    /// Write every event as one JSON line.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replay a recorded command file (`{"tick":N,"cmd":...}` per line).
    #[arg(long)]
    commands: Option<PathBuf>,
    /// Record the commands applied during this run.
    #[arg(long)]
    record_commands: Option<PathBuf>,
    /// Start the live session paused.
    #[arg(long)]
    paused: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tikz,
}

#[derive(clap::Args)]
struct ExportArgs {
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    at_tick: u64,
    #[arg(long, value_enum, default_value = "tikz")]
    format: Format,
    /// Coordinate divisor.
    #[arg(long, default_value_t = 50.0)]
    scale: f64,
    #[arg(long, default_value_t = 2)]
    decimals: usize,
    /// Fill nodes from their "color" property.
    #[arg(long)]
    fill: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    commands: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn open_session(
    path: &PathBuf,
    seed: Option<u64>,
    commands: Option<&PathBuf>,
) -> Result<Session, SessionError> {
    let text = fs::read_to_string(path)?;
    let mut config = ScenarioConfig::parse(&text)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mut session = Session::new(config)?;
    if let Some(cmds) = commands {
        session.load_script(&fs::read_to_string(cmds)?)?;
    }
    Ok(session)
}

fn create(path: &PathBuf) -> Result<Box<dyn Write + Send>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn run(args: RunArgs) -> Result<()> {
    let mut session = open_session(&args.scenario, args.seed, args.commands.as_ref())?;
    if let Some(ticks) = args.ticks {
        session.set_run_limit(Some(ticks));
    }
    if let Some(path) = &args.trace_out {
        session.set_trace(create(path)?)?;
    }
    if let Some(path) = &args.record_commands {
        session.set_recorder(create(path)?);
    }
    if args.headless {
        if session.run_limit().is_none() {
            bail!("a headless run needs --ticks or a scenario run_limit");
        }
        session.run_to_limit();
        session.flush()?;
        let diag = session.simulation().diagnostics();
        info!(
            "stopped at t={} ({} messages delivered, {} dropped, {} hook failures)",
            session.current_time(),
            diag.delivered_messages,
            diag.dropped_envelopes,
            diag.hook_failures.len()
        );
        return Ok(());
    }
    let bounded = session.run_limit().is_some();
    // the outbox only matters for clients that have not connected yet
    session.take_outbox();
    if !args.paused {
        session.resume();
    }
    let handle = server::serve(session, args.listen.as_str())?;
    eprintln!("serving on {}", handle.local_addr());
    if bounded {
        handle.wait_finished();
        handle.shutdown();
    } else {
        loop {
            std::thread::park();
        }
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    if !(args.scale.is_finite() && args.scale > 0.0) {
        bail!("--scale must be positive");
    }
    let mut session = open_session(&args.scenario, args.seed, args.commands.as_ref())?;
    session.step(args.at_tick);
    let text = match args.format {
        Format::Tikz => to_tikz(
            session.simulation().topology(),
            &TikzOptions {
                scale: args.scale,
                decimal_places: args.decimals,
                fill_from_color: args.fill,
                ..TikzOptions::default()
            },
        ),
    };
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(args) => run(args),
        Cmd::Export(args) => export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<SessionError>()
                .is_some_and(|e| matches!(e, SessionError::Config { .. }))
            {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
