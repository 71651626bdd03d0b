use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aris_core::harness::{self, Application, Experiment, ExperimentConfig, Params};
use aris_core::ReflectionMode;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

/// Reflection design experiments for absorptive and phase-only surfaces.
#[derive(Debug, Parser)]
#[command(name = "aris-opt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radar/communication interference suppression sweeps.
    RadarComm(RunArgs),
    /// Device-to-device max-min SINR sweeps.
    D2d(RunArgs),
    /// Secrecy-rate sweeps.
    Pls(RunArgs),
    /// Every sweep.
    All(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Aris,
    Conventional,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<ReflectionMode> {
        match self {
            ModeArg::Aris => vec![ReflectionMode::Absorptive],
            ModeArg::Conventional => vec![ReflectionMode::Conventional],
            ModeArg::Both => vec![ReflectionMode::Absorptive, ReflectionMode::Conventional],
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment file (TOML); repeat for several. Without one the built-in sweeps run.
    #[arg(long, value_name = "PATH")]
    config: Vec<PathBuf>,
    /// Monte-Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed of the per-trial streams.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = "results")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Overrides a fixed parameter, e.g. `--set elements=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Skip the SVG charts.
    #[arg(long)]
    no_plots: bool,
}

/// A config file; anything left out comes from the experiment's built-in sweep.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Experiment,
    name: Option<String>,
    sweep: Option<Vec<f64>>,
    trials: Option<usize>,
    base_seed: Option<u64>,
    modes: Option<Vec<ReflectionMode>>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::preset(file.experiment);
    if let Some(name) = file.name {
        cfg.name = name;
    }
    if let Some(sweep) = file.sweep {
        cfg.sweep = sweep;
    }
    if let Some(trials) = file.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = file.base_seed {
        cfg.base_seed = seed;
    }
    if let Some(modes) = file.modes {
        cfg.modes = modes;
    }
    if !file.params.is_empty() {
        let mut merged = toml::Table::try_from(&cfg.params).map_err(runtime)?;
        merged.extend(file.params);
        cfg.params = Params::deserialize(toml::Value::Table(merged)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(cfg)
}

fn wanted(command: &Command) -> (Option<Application>, &RunArgs) {
    match command {
        Command::RadarComm(a) => (Some(Application::RadarComm), a),
        Command::D2d(a) => (Some(Application::D2D), a),
        Command::Pls(a) => (Some(Application::Pls), a),
        Command::All(a) => (None, a),
    }
}

/// Configs after file and flag layers, in run order.
fn resolve(command: &Command) -> Result<Vec<ExperimentConfig>, Failure> {
    let (app, args) = wanted(command);
    let mut configs = if args.config.is_empty() {
        Experiment::ALL
            .into_iter()
            .filter(|e| app.is_none_or(|a| e.application() == a))
            .map(ExperimentConfig::preset)
            .collect()
    } else {
        args.config.iter().map(|p| load_config(p)).collect::<Result<Vec<_>, _>>()?
    };
    for cfg in &mut configs {
        if let Some(a) = app.filter(|&a| cfg.experiment.application() != a) {
            return Err(usage(format!("experiment '{}' does not belong to the {a:?} subcommand", cfg.experiment)));
        }
        if let Some(t) = args.trials {
            cfg.trials = t;
        }
        if let Some(s) = args.seed {
            cfg.base_seed = s;
        }
        if let Some(m) = args.mode {
            cfg.modes = m.modes();
        }
        for kv in &args.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.params.set(k.trim(), v).map_err(usage)?;
        }
        cfg.validate().map_err(usage)?;
    }
    Ok(configs)
}

fn run(command: &Command) -> Result<(), Failure> {
    let configs = resolve(command)?;
    let (_, args) = wanted(command);
    std::fs::create_dir_all(&args.out_dir).map_err(|e| runtime(format!("cannot create {}: {e}", args.out_dir.display())))?;
    for cfg in &configs {
        println!("# {}", cfg.name);
        print!("{}", toml::to_string(cfg).map_err(runtime)?);
        println!();
    }
    let mut empty_rows = Vec::new();
    for cfg in &configs {
        let result = harness::run_experiment(cfg).map_err(runtime)?;
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
        let csv = args.out_dir.join(format!("{}.csv", cfg.name));
        harness::write_csv(&result, &csv).map_err(runtime)?;
        if !args.no_plots {
            harness::write_svg(&result, &args.out_dir, &cfg.name).map_err(runtime)?;
        }
        let time: f64 = result.rows.iter().step_by(cfg.modes.len()).map(|r| r.wall_time).sum();
        println!("wrote {} ({time:.1} s)", csv.display());
        empty_rows.extend(
            result
                .rows
                .iter()
                .filter(|r| r.trials_ok == 0)
                .map(|r| format!("{} at {} = {} ({})", cfg.name, cfg.experiment.sweep_param(), r.sweep_value, r.mode.as_str())),
        );
    }
    if empty_rows.is_empty() {
        Ok(())
    } else {
        Err(runtime(format!("every trial failed for: {}", empty_rows.join("; "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}\n\nRun 'aris-opt --help' for usage."),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
