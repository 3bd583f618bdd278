use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use relaybeam::harness::{self, GridFile, Overrides, Scenario};
use relaybeam::Mac;

#[derive(Parser)]
#[command(
    name = "relaybeam",
    version,
    about = "Beamwidth optimization for relay-assisted mmWave small cells"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario over several Monte Carlo runs.
    Simulate(SimulateArgs),
    /// Run a grid of scenarios and write a combined summary.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML file. Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// MAC strategy: tdma or all-on.
    #[arg(long)]
    mac: Option<Mac>,
    #[arg(long = "nominal-aues")]
    nominal_aues: Option<usize>,
    /// Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    inertia: Option<f64>,
    #[arg(long)]
    cognitive: Option<f64>,
    #[arg(long)]
    social: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid TOML file.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut scenario = match &args.config {
        Some(path) => Scenario::from_file(path)?,
        None => Scenario::default(),
    };
    Overrides {
        mac: args.mac,
        nominal_aues: args.nominal_aues,
        runs: args.runs,
        particles: args.particles,
        iterations: args.iters,
        inertia: args.inertia,
        cognitive: args.cognitive,
        social: args.social,
        seed: args.seed,
    }
    .apply(&mut scenario);
    scenario.validate()?;

    let result = harness::run_scenario(&scenario).context("scenario failed")?;
    harness::write_run(&result, &args.out)?;
    let s = &result.summary;
    println!(
        "{}: {} anchors, {} clients, {} runs in {:.1}s",
        result.name,
        result.effective_aues,
        result.effective_cues,
        result.runs.len(),
        result.wall_clock_seconds
    );
    println!(
        "  throughput/UE {:.4} -> {:.4} Gbps ({:+.2}%)",
        s.throughput_gbps.initial, s.throughput_gbps.final_, s.throughput_gbps.percent
    );
    if let (Some(i), Some(q)) = (s.interference_dbm, s.sinr_db) {
        println!(
            "  anchor interference {:.2} -> {:.2} dBm ({:+.2}%), SINR {:.2} -> {:.2} dB ({:+.2}%)",
            i.initial, i.final_, i.percent, q.initial, q.final_, q.percent
        );
    }
    println!("  results in {}", args.out.display());
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let (grid, dir) = GridFile::from_file(&args.grid)?;
    let scenarios = grid.scenarios(&dir)?;
    let entries = harness::sweep(&scenarios, &args.out)?;
    let mut ok = true;
    for e in &entries {
        match &e.result {
            Ok(r) => println!(
                "{:<14} anchors {:>3}  throughput/UE {:.4} -> {:.4} Gbps ({:+.2}%)",
                e.name,
                r.effective_aues,
                r.summary.throughput_gbps.initial,
                r.summary.throughput_gbps.final_,
                r.summary.throughput_gbps.percent
            ),
            Err(err) => {
                ok = false;
                eprintln!("{:<14} failed: {err}", e.name);
            }
        }
    }
    println!("summary in {}", args.out.join("summary.csv").display());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Sweep(a) => sweep(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
