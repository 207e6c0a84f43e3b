//! `zsk`: dataset generation, benchmarking, timing, single fits and statistics.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 data or
//! dimension error, 3 runtime failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zsk::config::{ExperimentConfig, Source, SEED_ENV};
use zsk::data::{load_dataset, load_dataset_dir, load_instances, load_side_info};
use zsk::datagen::{generate, save_synth, Family, SynthSpec};
use zsk::evaluation::report::{stats_from_scores, stats_json, write_benchmark_report, write_timing_report};
use zsk::evaluation::{run_benchmark, run_timing};
use zsk::kernels::PointSet;
use zsk::methods::{Method, ZeroShotRegressor};
use zsk::persist::{load_model, save_model};
use zsk::svr::SvrConfig;
use zsk::{Result, ZskError};

#[derive(Parser)]
#[command(name = "zsk", version, about = "Zero-shot regression with side information")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset, or every synthetic dataset of a config.
    Generate(GenerateArgs),
    /// Run the zero-shot benchmark described by a config file.
    Benchmark {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the timing study on the config's timing grid.
    Timing {
        config: PathBuf,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one regressor and save it.
    Fit(FitArgs),
    /// Predict with a saved regressor.
    Predict(PredictArgs),
    /// Recompute Friedman ranks and Nemenyi critical differences from a scores.csv.
    Stats {
        scores: PathBuf,
        /// Also write the statistics to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// R (linear dependence on side information) or S (similarity to prototypes).
    #[arg(long, required_unless_present = "config")]
    family: Option<Family>,
    /// Number of targets m_o.
    #[arg(long, required_unless_present = "config")]
    targets: Option<usize>,
    /// Side-information size a_s.
    #[arg(long, required_unless_present = "config")]
    sideinfo: Option<usize>,
    /// Instances per target n_o.
    #[arg(long, default_value_t = 500)]
    instances: usize,
    /// Feature count a_x.
    #[arg(long, default_value_t = 50)]
    features: usize,
    /// Prototype count for the S family.
    #[arg(long, default_value_t = 10)]
    prototypes: usize,
    /// Seed; falls back to ZSK_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (a parent directory when used with --config).
    #[arg(long)]
    out: PathBuf,
    /// Generate every synthetic dataset listed in this config instead.
    #[arg(long, conflicts_with_all = ["family", "targets", "sideinfo", "seed"])]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory holding instances.csv and sideinfo.csv.
    #[arg(long, conflicts_with_all = ["instances", "sideinfo"])]
    data: Option<PathBuf>,
    #[arg(long, requires = "sideinfo")]
    instances: Option<PathBuf>,
    #[arg(long, requires = "instances")]
    sideinfo: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// BL_L, BL_Q, SR_E, SR_M, MPLC, DSIL, DSIL_Phi, DSIL_KPhi or DSIL_KQ.
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = SvrConfig::default().c)]
    c: f64,
    #[arg(long, default_value_t = SvrConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = SvrConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SvrConfig::default().max_passes)]
    max_passes: usize,
    /// Where to write the model.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Instance CSV (`target,x1..` with optional trailing `y`).
    #[arg(long)]
    instances: PathBuf,
    /// Side-information CSV covering every target in the instance file.
    #[arg(long)]
    sideinfo: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok().filter(|s| !s.trim().is_empty())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply_seed_override(env_seed().as_deref())?;
    Ok(cfg)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    if let Some(config) = &a.config {
        let cfg = load_config(config)?;
        let mut n = 0;
        for (name, src) in cfg.expand_sources() {
            if let Source::Synth(spec) = src {
                let dir = a.out.join(sanitize(&name));
                save_synth(&generate(&spec)?, &spec, &dir)?;
                println!("{}", dir.display());
                n += 1;
            }
        }
        if n == 0 {
            return Err(ZskError::Config("config lists no synthetic datasets".into()));
        }
        return Ok(());
    }
    let seed = match (a.seed, env_seed()) {
        (Some(s), _) => s,
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| ZskError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer")))?,
        (None, None) => return Err(ZskError::Config(format!("a seed is required (--seed or {SEED_ENV})"))),
    };
    let spec = SynthSpec {
        family: a.family.expect("required by clap"),
        m_o: a.targets.expect("required by clap"),
        a_s: a.sideinfo.expect("required by clap"),
        n_o: a.instances,
        a_x: a.features,
        seed,
        d_prototypes: a.prototypes,
    };
    spec.validate().map_err(|e| ZskError::Config(e.to_string()))?;
    save_synth(&generate(&spec)?, &spec, &a.out)?;
    println!("{}", a.out.display());
    Ok(())
}

/// Directory-safe form of a dataset name such as `R^{10,5}`.
fn sanitize(name: &str) -> String {
    name.chars()
        .filter_map(|c| match c {
            '^' | '{' | '}' => None,
            ',' => Some('_'),
            c if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' => Some(c),
            _ => Some('_'),
        })
        .collect()
}

fn cmd_benchmark(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(config)?;
    cfg.validate_for_benchmark()?;
    let datasets = cfg.materialize_datasets()?;
    let report = run_benchmark(&datasets, &cfg.methods, &cfg.benchmark_config())?;
    let dir = out.unwrap_or_else(|| cfg.output_dir());
    for p in write_benchmark_report(&report, &dir)? {
        println!("{}", p.display());
    }
    if report.cells.iter().all(|c| c.rel_mse.is_none()) {
        return Err(ZskError::Degenerate("every benchmark cell failed; see report.md".into()));
    }
    Ok(())
}

fn cmd_timing(config: &Path, repeats: Option<usize>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(r) = repeats {
        cfg.timing.repeats = r;
    }
    let opts = cfg.timing_options()?;
    let grid = cfg.timing_grid();
    grid.validate().map_err(|e| ZskError::Config(e.to_string()))?;
    let cells = zsk::datagen::generate_timing_grid(&grid)?;
    let report = run_timing(&cells, &cfg.timing_methods(), &opts)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir());
    for p in write_timing_report(&report, &dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let ds = match (&a.data.data, &a.data.instances, &a.data.sideinfo) {
        (Some(dir), _, _) => load_dataset_dir(dir)?,
        (None, Some(i), Some(s)) => load_dataset(i, s)?,
        _ => return Err(ZskError::Config("give --data DIR or --instances FILE --sideinfo FILE".into())),
    };
    let cfg = SvrConfig {
        c: a.c,
        epsilon: a.epsilon,
        tol: a.tol,
        max_passes: a.max_passes,
    };
    let model = ZeroShotRegressor::fit(&ds, a.method, &cfg)?;
    save_model(&model, &a.model)?;
    println!(
        "fitted {} on {} rows ({} targets, a_x={}, a_s={}) -> {}",
        a.method,
        ds.n_rows(),
        ds.target_count(),
        ds.a_x(),
        ds.a_s(),
        a.model.display()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let table = load_side_info(&a.sideinfo)?;
    let inst = load_instances(&a.instances, false)?;
    if inst.a_x != model.a_x() {
        return Err(ZskError::DimensionMismatch {
            what: "instance features a_x".into(),
            expected: model.a_x(),
            actual: inst.a_x,
        });
    }
    if table.dim() != model.a_s() {
        return Err(ZskError::DimensionMismatch {
            what: "side information a_s".into(),
            expected: model.a_s(),
            actual: table.dim(),
        });
    }
    let mut points = PointSet::with_capacity(inst.a_x, table.dim(), inst.n_rows());
    for (i, id) in inst.target_ids.iter().enumerate() {
        let s = table.get(id).ok_or_else(|| ZskError::UnknownTarget(id.clone()))?;
        points.push(inst.row(i), s)?;
    }
    let pred = model.predict_points(&points)?;
    let mut text = String::from("target,prediction\n");
    for (id, p) in inst.target_ids.iter().zip(&pred) {
        let field = if id.contains([',', '"', '\n']) {
            format!("\"{}\"", id.replace('"', "\"\""))
        } else {
            id.clone()
        };
        text.push_str(&format!("{field},{p}\n"));
    }
    match a.out {
        Some(path) => fs::write(&path, text).map_err(|e| ZskError::io(&path, e))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| ZskError::io("<stdout>", e))?,
    }
    Ok(())
}

fn cmd_stats(scores: &Path, out: Option<PathBuf>) -> Result<()> {
    let (methods, stats, note) = stats_from_scores(scores)?;
    let text = stats_json(&methods, stats.as_ref(), note.as_deref())?;
    if let Some(path) = out {
        fs::write(&path, &text).map_err(|e| ZskError::io(&path, e))?;
    }
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Benchmark { config, out } => cmd_benchmark(&config, out),
        Command::Timing { config, repeats, out } => cmd_timing(&config, repeats, out),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Stats { scores, out } => cmd_stats(&scores, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
