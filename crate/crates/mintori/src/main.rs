use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mintori::commands::{cmd_construct, cmd_export_clifford, cmd_info, cmd_scan, cmd_verify, configure_threads, Setup};
use mintori::config::RunConfig;
use mintori::CliError;

#[derive(Parser)]
#[command(name = "mintori", version, about = "Torus-invariant minimal Lagrangian tori in CP^n")]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of scan levels (overrides `scan.levels`).
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Largest denominator of rational targets (overrides `search.q_max`).
    #[arg(long, global = true)]
    qmax: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the manifold, polytope, frame and Killing witness.
    Info,
    /// Scan the holonomy over the levels of f.
    Scan,
    /// Find the p/q periodic orbit, mesh the torus and certify it.
    Construct {
        #[arg(long, allow_negative_numbers = true)]
        p: i64,
        #[arg(long)]
        q: u32,
    },
    /// Recompute the defects of a mesh file.
    Verify {
        mesh: PathBuf,
    },
    /// Write the Clifford torus mesh.
    ExportClifford,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(l) = cli.levels {
        cfg.scan.levels = l;
    }
    if let Some(q) = cli.qmax {
        cfg.search.q_max = q;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = load(cli)?;
    let mut out = std::io::stdout().lock();
    match &cli.command {
        Command::Info => cmd_info(cfg, &mut out),
        Command::Scan => cmd_scan(&Setup::new(cfg)?, &mut out).map(|_| ()),
        Command::Construct { p, q } => cmd_construct(&Setup::new(cfg)?, *p, *q, &mut out).map(|_| ()),
        Command::Verify { mesh } => cmd_verify(&Setup::new(cfg)?, mesh, &mut out).map(|_| ()),
        Command::ExportClifford => cmd_export_clifford(&cfg, &mut out).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mintori: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
