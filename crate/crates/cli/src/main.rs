use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::info;

use nfdm_cli::bounds::{write_bounds, write_history};
use nfdm_cli::causality::write_waveforms;
use nfdm_cli::report::write_rows;
use nfdm_cli::{demo_causality, run_bounds, run_selftest, run_sweep, ExperimentConfig, Fault};

#[derive(Parser, Debug)]
#[command(name = "nfdm", version, about = "NFDM burst simulator: sweeps, bounds and demonstrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// CSV output path (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the configured master seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for burst-level parallelism
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Log progress to stderr
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo sweep over the configured powers and detectors
    Simulate {
        config: PathBuf,
        /// Leave the wall_time_s column empty so reruns give identical bytes
        #[arg(long)]
        no_timing: bool,
    },
    /// Semianalytic bounds and the cost of direct error counting
    Bounds {
        config: PathBuf,
        /// Also write the per-sequence running means here
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Two waveforms sharing a symbol prefix
    DemoCausality { config: PathBuf },
    /// Small-scale invariant checks
    Selftest {
        /// Corrupt a tolerance on purpose to see the failure path
        #[arg(long, value_parser = ["glme-tolerance"])]
        fault: Option<String>,
    },
}

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
    Selftest,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Validation)?;
    let mut cfg = ExperimentConfig::parse(&text)
        .map_err(|e| Failure::Validation(anyhow::anyhow!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn output(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn runtime<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Runtime(e.into()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, no_timing } => {
            let cfg = load(&config, cli.seed)?;
            let rows = runtime(run_sweep(&cfg, !no_timing))?;
            let mut out = runtime(output(&cli.out))?;
            runtime(write_rows(&mut out, &rows))?;
            runtime(out.flush())?;
        }
        Command::Bounds { config, history } => {
            let cfg = load(&config, cli.seed)?;
            let rows = runtime(run_bounds(&cfg))?;
            for r in &rows {
                info!(
                    "P_s = {} dBm: triple stable after {} sequences, counting used {} bursts ({:.1}×)",
                    r.ps_dbm, r.sequences, r.counting_bursts, r.burst_ratio()
                );
            }
            let mut out = runtime(output(&cli.out))?;
            runtime(write_bounds(&mut out, &rows))?;
            runtime(out.flush())?;
            if let Some(path) = history {
                let mut h = runtime(output(&Some(path)))?;
                runtime(write_history(&mut h, &rows))?;
                runtime(h.flush())?;
            }
        }
        Command::DemoCausality { config } => {
            let cfg = load(&config, cli.seed)?;
            let (modem, demo) = runtime(demo_causality(&cfg))?;
            let mut out = runtime(output(&cli.out))?;
            runtime(write_waveforms(&mut out, &modem, &demo))?;
            runtime(out.flush())?;
            eprintln!(
                "prefix {}: deviation on t <= t_{} = {:.3e}, after = {:.3e}",
                demo.prefix_len, demo.prefix_len, demo.deviation_before, demo.deviation_after
            );
            if !demo.holds() {
                return Err(Failure::Runtime(anyhow::anyhow!("prefix property violated")));
            }
        }
        Command::Selftest { fault } => {
            let fault = fault.map(|_| Fault::GlmeTolerance);
            let results = run_selftest(fault);
            let mut ok = true;
            for r in &results {
                println!("{:<26} {:<4} {:>8.3} s  {}", r.name, if r.passed { "ok" } else { "FAIL" }, r.seconds, r.detail);
                ok &= r.passed;
            }
            if !ok {
                return Err(Failure::Selftest);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Selftest) => ExitCode::from(3),
    }
}
