//! Command-line front end: plan a single scenario, run the simulation
//! harness, import ray-trace CSV data, or re-emit a stored report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamplan::arraysim::dft_codebook;
use beamplan::error::{Error, Result};
use beamplan::harness::{emit_report, run_experiment, ExperimentConfig, MethodKind, ReportFormat};
use beamplan::planner::solve;
use beamplan::stochastic::{build_scenario, derive_process, import_raytrace_csv, Scenario};

#[derive(Parser)]
#[command(name = "beamplan", version, about = "Trajectory-aware beam-search planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration file (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the plan as JSON.
    Plan {
        #[command(flatten)]
        config: ConfigArgs,
        /// Use a stored scenario (JSON, e.g. from `import`) instead of the
        /// synthetic generator.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Run the multi-trajectory experiment and write report files.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for report files.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Comma-separated methods (proposed,exhaustive,greedy,fixed).
        #[arg(long)]
        methods: Option<String>,
        /// Override the configured trajectory count.
        #[arg(long)]
        trajectories: Option<usize>,
        /// File set to emit: csv (CSV tables + JSON) or json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Convert a ray-trace CSV file into a scenario JSON document.
    Import {
        /// Input CSV (location_index,path_rank,aod_deg,aoa_deg,gain_db).
        #[arg(long)]
        input: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-emit report files from a stored report.json.
    Report {
        /// Stored report.json.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&body)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&body)?)
}

fn parse_methods(spec: &str) -> Result<Vec<MethodKind>> {
    let methods = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(MethodKind::parse)
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("method list is empty".into()));
    }
    Ok(methods)
}

fn cmd_plan(config: ConfigArgs, scenario_path: Option<PathBuf>) -> Result<()> {
    let config = load_config(&config)?;
    config.validate()?;
    let scenario = match scenario_path {
        Some(path) => load_scenario(&path)?,
        None => build_scenario(&config.scenario, config.seed)?,
    };
    let f_book = dft_codebook(config.books.n_bs, config.books.bs_beams)?;
    let w_book = dft_codebook(config.books.n_ue, config.books.ue_beams)?;
    let path_count = scenario
        .path_count()
        .ok_or_else(|| Error::InvalidArgument("scenario has inconsistent path counts".into()))?;
    let blockage = config.blockage.to_model(path_count)?;
    let process = derive_process(
        &scenario,
        &blockage,
        &f_book,
        &w_book,
        config.planner.l,
        config.planner.state_cap,
    )?;
    let plan = solve(&process, &config.planner, process.m())?;
    println!("{}", serde_json::to_string_pretty(&plan.to_doc(&process))?);
    Ok(())
}

fn cmd_simulate(
    config: ConfigArgs,
    out_dir: PathBuf,
    methods: Option<String>,
    trajectories: Option<usize>,
    format: String,
) -> Result<()> {
    let mut config = load_config(&config)?;
    if let Some(spec) = methods {
        config.methods = parse_methods(&spec)?;
    }
    if let Some(t) = trajectories {
        config.trajectories = t;
    }
    let format = ReportFormat::parse(&format)?;
    let report = run_experiment(&config)?;
    let files = emit_report(&report, format, &out_dir)?;
    for m in &report.methods {
        println!(
            "{}: mean K = {:.3}, pre-setup = {:.1}, run-time = {:.1}",
            m.method.name(),
            m.mean_k,
            m.presetup_mean,
            m.runtime_mean
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_import(input: PathBuf, output: Option<PathBuf>) -> Result<()> {
    let scenario = import_raytrace_csv(&input)?;
    let body = serde_json::to_string_pretty(&scenario)?;
    match output {
        Some(path) => {
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            println!("wrote {}", path.display());
        }
        None => println!("{body}"),
    }
    Ok(())
}

fn cmd_report(input: PathBuf, out_dir: PathBuf, format: String) -> Result<()> {
    let body = std::fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
    let report: beamplan::harness::Report = serde_json::from_str(&body)?;
    let format = ReportFormat::parse(&format)?;
    let files = emit_report(&report, format, &out_dir)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan { config, scenario } => cmd_plan(config, scenario),
        Command::Simulate {
            config,
            out_dir,
            methods,
            trajectories,
            format,
        } => cmd_simulate(config, out_dir, methods, trajectories, format),
        Command::Import { input, output } => cmd_import(input, output),
        Command::Report {
            input,
            out_dir,
            format,
        } => cmd_report(input, out_dir, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
