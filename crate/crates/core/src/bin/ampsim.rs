use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use ampsim::config::ScenarioConfig;
use ampsim::presets;
use ampsim::runner::{self, OUT_ENV};

#[derive(Parser)]
#[command(name = "ampsim", version, about = "Packet-level simulator for ECN multipath congestion control")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file (or `preset:<name>`) into a result directory.
    Run {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Result directory; `<output root>/<scenario name>` by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Default output root.
        #[arg(long, env = OUT_ENV, default_value = "runs")]
        root: PathBuf,
    },
    /// Run every point of a parameter grid, e.g. `classes.mp.subflows=2..8`.
    Sweep {
        config: String,
        #[arg(long, default_value = "")]
        grid: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = OUT_ENV, default_value = "runs")]
        root: PathBuf,
    },
    /// Recompute a run directory's summary and compare it with the stored one.
    Verify { run_dir: PathBuf },
    /// List or print the built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    /// Print a preset as a scenario file.
    Show {
        name: String,
    },
}

fn load(spec: &str) -> anyhow::Result<ScenarioConfig> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return presets::get(name).with_context(|| format!("no preset named `{name}` (see `ampsim presets list`)"));
    }
    Ok(ScenarioConfig::load(Path::new(spec))?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { config, seed, out, root } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| root.join(&cfg.name));
            let t0 = Instant::now();
            let res = runner::run_scenario(&cfg, &dir)?;
            println!(
                "{}: {} flows, {} jobs, {} events, simulated {:.3}s in {:.2}s wall -> {}",
                cfg.name,
                res.flows.len(),
                res.jobs.len(),
                res.stats.events,
                res.end_time.as_secs_f64(),
                t0.elapsed().as_secs_f64(),
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep { config, grid, parallel, out, root } => {
            let cfg = load(&config)?;
            let dims = runner::parse_grid(&grid)?;
            for p in runner::grid_points(&dims) {
                runner::point_config(&cfg, &p)?
                    .validate()
                    .with_context(|| format!("grid point {}", runner::point_label(&p)))?;
            }
            let dir = out.unwrap_or_else(|| root.join(format!("{}-sweep", cfg.name)));
            let outcomes = runner::run_sweep(&cfg, &dims, parallel, &dir)?;
            let failed = outcomes.iter().filter(|o| o.error.is_some()).count();
            for o in &outcomes {
                match &o.error {
                    None => println!("ok     {}", o.dir.display()),
                    Some(e) => println!("failed {}: {e}", o.dir.display()),
                }
            }
            println!(
                "{} points, {failed} failed; index in {}",
                outcomes.len(),
                dir.join(runner::SWEEP_INDEX).display()
            );
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Verify { run_dir } => {
            let r = runner::verify(&run_dir)?;
            for (scope, metric, stored, fresh) in &r.mismatches {
                println!("mismatch {scope} {metric}: stored `{stored}` recomputed `{fresh}`");
            }
            if r.ok() {
                println!("{}: {} summary rows reproduced exactly", run_dir.display(), r.rows);
                Ok(ExitCode::SUCCESS)
            } else {
                if r.mismatches.is_empty() {
                    println!("summary values agree but the file bytes differ");
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Cmd::Presets { action: PresetCmd::List } => {
            let cat = presets::catalog();
            let w = cat.iter().map(|e| e.name.len()).max().unwrap_or(0);
            for e in cat {
                println!("{:<w$}  {}", e.name, e.about);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Presets { action: PresetCmd::Show { name } } => {
            let Some(cfg) = presets::get(&name) else { bail!("no preset named `{name}`") };
            print!("{}", cfg.to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}
