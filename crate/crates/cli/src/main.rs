mod config;
mod error;
mod track_demo;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eyecontact::harness::io::{read_results_csv, write_outputs, write_report};
use eyecontact::harness::stats::{overall_ratio, success_ratio};
use eyecontact::harness::{run_experiment, run_trial_traced, BodySource, ExperimentConfig};
use eyecontact::human::{derive_response_table, TABLE2_MEANS};
use eyecontact::trace::JsonlSink;
use eyecontact::{Method, ResponseTable, RobotAction, ViewingSituation};

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;
use crate::track_demo::run_track_demo;

#[derive(Debug, Parser)]
#[command(
    name = "eyecontact",
    version,
    about = "Simulate a robot catching a person's attention and making eye contact"
)]
struct Cli {
    /// JSON run configuration; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides base_seed (or the trial seed for `simulate`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides output_dir.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for experiments.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Write per-trial JSONL traces next to experiment results.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial and stream its trace to stdout as JSON lines.
    Simulate {
        /// Defaults to the first configured method.
        #[arg(long)]
        method: Option<Method>,
        /// Defaults to the first configured situation.
        #[arg(long)]
        situation: Option<ViewingSituation>,
    },
    /// Run every method x situation cell and write results, summary, stats
    /// and chart data.
    Experiment,
    /// Print the per-action response probabilities derived from the
    /// built-in success ratios.
    Calibrate,
    /// Track a walking, turning body and report tracker error statistics.
    TrackDemo,
    /// Recompute summary, stats and chart data from a results CSV.
    Report { results: PathBuf },
}

struct Context {
    config: RunConfig,
    base_dir: PathBuf,
    out_dir: PathBuf,
}

fn load(cli: &Cli) -> Result<Context, CliError> {
    let (mut config, base_dir) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (parse_config(&text)?, base)
        }
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    config.trace |= cli.trace;
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok(Context { config, base_dir, out_dir })
}

fn simulate(ctx: &Context, method: Option<Method>, situation: Option<ViewingSituation>) -> Result<(), CliError> {
    let scenario = ctx.config.load_scenario(&ctx.base_dir)?;
    let method = method.unwrap_or(ctx.config.methods[0]);
    let situation = situation.unwrap_or(ctx.config.situations[0]);
    if scenario.paintings_for(situation).is_empty() {
        return Err(CliError::Validation(format!("situation: scenario maps no painting to {situation}")));
    }
    let stdout = io::stdout();
    let mut sink = JsonlSink::new(io::BufWriter::new(stdout.lock()));
    let run = run_trial_traced(
        &scenario,
        method,
        situation,
        &ResponseTable::default(),
        ctx.config.base_seed,
        &ctx.config.trial,
        &mut sink,
    )?;
    sink.finish()?;
    eprintln!("{}", serde_json::to_string(&run.record).map_err(io::Error::from)?);
    Ok(())
}

fn experiment(ctx: &Context) -> Result<(), CliError> {
    let scenario = ctx.config.load_scenario(&ctx.base_dir)?;
    for s in &ctx.config.situations {
        if scenario.paintings_for(*s).is_empty() {
            return Err(CliError::Validation(format!("situations: scenario maps no painting to {s}")));
        }
    }
    let config = ExperimentConfig {
        scenario,
        methods: ctx.config.methods.clone(),
        situations: ctx.config.situations.clone(),
        n_per_cell: ctx.config.n_per_cell,
        base_seed: ctx.config.base_seed,
        table: ResponseTable::default(),
        trial: ctx.config.trial.clone(),
    };
    let records = run_experiment(&config)?;
    write_outputs(&ctx.out_dir, &records)?;
    if ctx.config.trace {
        let dir = ctx.out_dir.join("traces");
        fs::create_dir_all(&dir)?;
        for r in &records {
            let file = io::BufWriter::new(fs::File::create(dir.join(format!("trial_{:05}.jsonl", r.trial_id)))?);
            let mut sink = JsonlSink::new(file);
            run_trial_traced(
                &config.scenario,
                r.method,
                r.situation,
                &config.table,
                r.seed,
                &config.trial,
                &mut sink,
            )?;
            sink.finish()?;
        }
    }
    let mut out = io::stdout().lock();
    for c in success_ratio(&records)? {
        writeln!(
            out,
            "{} {:<5} n={} success={:.4} sd={:.4}",
            c.method, c.situation, c.n, c.mean_success, c.sd_success
        )?;
    }
    if config.situations.len() == 4 {
        for m in &config.methods {
            writeln!(out, "{m} overall={:.4}", overall_ratio(&records, *m)?)?;
        }
    }
    writeln!(out, "wrote {} records to {}", records.len(), ctx.out_dir.display())?;
    Ok(())
}

fn calibrate() -> Result<(), CliError> {
    let table = derive_response_table(&TABLE2_MEANS)?;
    let actions = [RobotAction::HT, RobotAction::HS, RobotAction::RT];
    let rows: Vec<serde_json::Value> = actions
        .iter()
        .map(|a| {
            let p: Vec<f64> = ViewingSituation::ALL.iter().map(|s| table.get(*a, *s)).collect();
            serde_json::json!({ "action": a.code(), "p": p })
        })
        .collect();
    let situations: Vec<String> = ViewingSituation::ALL.iter().map(ToString::to_string).collect();
    let text =
        serde_json::to_string_pretty(&serde_json::json!({ "situations": situations, "response_table": rows })).map_err(io::Error::from)?;
    println!("{text}");
    Ok(())
}

fn track_demo(ctx: &Context) -> Result<(), CliError> {
    let filter = match ctx.config.trial.body {
        BodySource::ParticleFilter(f) => f,
        BodySource::GroundTruth => return Err(CliError::Validation("trial.body: track-demo needs the particle filter".into())),
    };
    let report = run_track_demo(&ctx.config.track_demo, filter, ctx.config.trial.laser, ctx.config.base_seed)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(io::Error::from)?);
    Ok(())
}

fn report(ctx: &Context, results: &Path) -> Result<(), CliError> {
    let file = fs::File::open(results).map_err(|e| CliError::Validation(format!("{}: {e}", results.display())))?;
    let records = read_results_csv(file).map_err(|e| CliError::Validation(format!("{}: {e}", results.display())))?;
    write_report(&ctx.out_dir, &records).map_err(|e| match e {
        eyecontact::Error::Io(e) => CliError::Runtime(e.to_string()),
        other => CliError::Validation(format!("{}: {other}", results.display())),
    })?;
    println!("wrote summary.csv, stats.json and chart.json to {}", ctx.out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let ctx = load(&cli)?;
    match &cli.command {
        Command::Simulate { method, situation } => simulate(&ctx, *method, *situation),
        Command::Experiment => experiment(&ctx),
        Command::Calibrate => calibrate(),
        Command::TrackDemo => track_demo(&ctx),
        Command::Report { results } => report(&ctx, results),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
