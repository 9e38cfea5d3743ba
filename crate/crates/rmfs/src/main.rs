use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rmfs::config::{load_preset, FileConfig};
use rmfs::results::{read_results, write_summary, ResultsWriter};
use rmfs::runner::run_plan;
use rmfs::trace::TraceWriter;
use rmfs_core::engine::{run, run_traced, RunConfig};
use rmfs_core::experiments::{enumerate_rcs, enumerate_ws, summarize, ExperimentPlan};
use rmfs_core::metrics::{upper_bound, UpperBoundTimes};

#[derive(Parser)]
#[command(name = "rmfs", version, about = "Robotic mobile fulfillment system simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named experiment preset.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print its measures as JSON.
    Run {
        #[command(flatten)]
        source: Source,
        /// Write the event trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write metrics.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment plan and write results.csv and summary.json.
    Plan {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = default_parallelism())]
        parallelism: usize,
        #[arg(long)]
        repetitions: Option<u32>,
    },
    /// List rule configurations or warehouse scenarios.
    Enumerate {
        #[arg(long, conflicts_with = "ws", required_unless_present = "ws")]
        rcs: bool,
        #[arg(long)]
        ws: bool,
    },
    /// Upper bound on units picked per hour.
    Bound {
        #[arg(long)]
        stations: u32,
        /// Robot time per unit at the station, seconds.
        #[arg(long)]
        t_pick: f64,
        /// Time to swap the robot at the access point, seconds.
        #[arg(long)]
        t_move_up: f64,
        /// Picker handling time per unit, seconds.
        #[arg(long)]
        t_handle: f64,
        /// Units picked per pod visit.
        #[arg(long, default_value_t = 1.0)]
        ipo: f64,
    },
    /// Aggregate an existing results CSV into summary JSON.
    Summarize {
        results: PathBuf,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn single_config(source: &Source) -> anyhow::Result<RunConfig> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), _) => FileConfig::load(path)?.run_config(),
        (None, Some(name)) => load_preset(name)?.template,
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = source.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn plan_of(source: &Source, repetitions: Option<u32>) -> anyhow::Result<ExperimentPlan> {
    let mut plan = match (&source.config, &source.preset) {
        (Some(path), _) => FileConfig::load(path)?.plan(),
        (None, Some(name)) => load_preset(name)?,
        (None, None) => bail!("plan needs --config or --preset"),
    };
    if let Some(seed) = source.seed {
        plan.seed = seed;
    }
    if let Some(r) = repetitions {
        plan.repetitions = r;
    }
    Ok(plan)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn run_one(source: Source, trace: Option<PathBuf>, out: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let cfg = single_config(&source)?;
    let outcome = match &trace {
        Some(path) => {
            let mut w = TraceWriter::new(create(path)?);
            let o = run_traced(&cfg, &mut w);
            w.finish().with_context(|| format!("writing {}", path.display()))?;
            o?
        }
        None => run(&cfg)?,
    };
    let report = serde_json::json!({
        "rules": cfg.rules.to_string(),
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "horizon": cfg.horizon,
        "metrics": outcome.metrics,
        "stats": outcome.stats,
        "trace_hash": format!("{:016x}", outcome.trace_hash),
    });
    let text = serde_json::to_string_pretty(&report)?;
    writeln!(std::io::stdout().lock(), "{text}")?;
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("metrics.json"), text + "\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_many(source: Source, out: PathBuf, parallelism: usize, repetitions: Option<u32>) -> anyhow::Result<ExitCode> {
    let plan = plan_of(&source, repetitions)?;
    std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut csv = ResultsWriter::new(create(&out.join("results.csv"))?);
    let total = plan.len();
    let mut done = 0;
    let mut write_err = None;
    let records = run_plan(&plan, parallelism, |r| {
        done += 1;
        if let Some(e) = &r.error {
            eprintln!("[{done}/{total}] {} seed {} failed: {e}", r.rc, r.seed);
        }
        if write_err.is_none() {
            write_err = csv.write(r).err();
        }
    })?;
    if let Some(e) = write_err {
        bail!("writing results: {e}");
    }
    csv.into_inner()?.flush()?;
    let mut summary_out = create(&out.join("summary.json"))?;
    write_summary(&summarize(&records), &mut summary_out)?;
    summary_out.flush()?;

    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    eprintln!("{} runs, {} failed, results in {}", records.len(), failed.len(), out.display());
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for r in failed {
            eprintln!("failed: {} {:?} seed {}: {}", r.rc, r.ws, r.seed, r.error.as_deref().unwrap_or(""));
        }
        Ok(ExitCode::from(2))
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { source, trace, out } => run_one(source, trace, out),
        Command::Plan { source, out, parallelism, repetitions } => run_many(source, out, parallelism, repetitions),
        Command::Enumerate { rcs, ws } => {
            let mut stdout = std::io::stdout().lock();
            if rcs {
                for rc in enumerate_rcs() {
                    writeln!(stdout, "{rc}")?;
                }
            }
            if ws {
                for w in enumerate_ws() {
                    writeln!(
                        stdout,
                        "{} {} {} {} {:?}",
                        w.pick_stations, w.robots_per_station, w.sku_count, w.return_share, w.order_size
                    )?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound { stations, t_pick, t_move_up, t_handle, ipo } => {
            let t = UpperBoundTimes {
                t_pick,
                t_handle,
                t_drive_in: t_move_up,
                t_turn_out: 0.0,
                t_drive_out: 0.0,
                ipo,
                pick_stations: stations,
            };
            writeln!(std::io::stdout().lock(), "{}", upper_bound(&t))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Summarize { results, out } => {
            let file = File::open(&results).with_context(|| format!("cannot open {}", results.display()))?;
            let summary = summarize(&read_results(std::io::BufReader::new(file))?);
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    write_summary(&summary, &mut w)?;
                    w.flush()?;
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    write_summary(&summary, &mut stdout)?;
                    writeln!(stdout)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    use std::io::ErrorKind::BrokenPipe;
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == BrokenPipe)
            || c.downcast_ref::<serde_json::Error>().is_some_and(|e| e.io_error_kind() == Some(BrokenPipe))
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
