mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dmkde::pipeline::{self, report};
use dmkde::{Error, Stage};

use config::{RunConfig, CONFIG_KEYS};

#[derive(Parser, Debug)]
#[command(name = "dmkde", version, about = "Density matrix kernel density estimation experiments", after_long_help = CONFIG_KEYS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set experiment.gamma=0.25`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `experiment.data.path`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Shorthand for `experiment.data.label_column`.
    #[arg(long)]
    label_column: Option<String>,
    /// Shorthand for `output.dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train adaptive Fourier features; writes params.json and loss.csv.
    #[command(after_long_help = CONFIG_KEYS)]
    TrainAff(Common),
    /// 1-D mixture density estimation; writes density.csv and summary.json.
    #[command(after_long_help = CONFIG_KEYS)]
    DensityEstimate(Common),
    /// Anomaly detection; writes report.json, per-sample CSVs and table.txt.
    #[command(after_long_help = CONFIG_KEYS)]
    Detect(Common),
    /// Grid sweep over embedding, d, gamma and state; writes sweep.csv.
    #[command(after_long_help = CONFIG_KEYS)]
    Sweep(Common),
}

enum Failure {
    Config(String),
    Pipeline(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Pipeline(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "[config] {m}"),
            Failure::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(p) = &common.data {
        overrides.push(format!(
            "experiment.data.path={}",
            toml::Value::String(p.display().to_string())
        ));
    }
    if let Some(c) = &common.label_column {
        overrides.push(format!(
            "experiment.data.label_column={}",
            toml::Value::String(c.clone())
        ));
    }
    if let Some(o) = &common.out {
        overrides.push(format!("output.dir={}", toml::Value::String(o.display().to_string())));
    }
    config::load(common.config.as_deref(), &overrides).map_err(Failure::Config)
}

fn require_data(cfg: &RunConfig) -> CliResult {
    if cfg.experiment.data.path.as_os_str().is_empty() {
        return Err(Failure::Config(
            "no dataset: set experiment.data.path or pass --data".into(),
        ));
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).at(Stage::Output))?;
    let file = File::create(dir.join(name)).map_err(|e| Error::from(e).at(Stage::Output))?;
    Ok(BufWriter::new(file))
}

fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> dmkde::Result<()>) -> CliResult {
    let mut w = create(dir, name)?;
    f(&mut w).map_err(|e| e.at(Stage::Output))?;
    w.flush().map_err(|e| Error::from(e).at(Stage::Output))?;
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str) -> CliResult {
    write_with(dir, name, |w| Ok(w.write_all(text.as_bytes())?))
}

fn train_aff(cfg: &RunConfig) -> CliResult {
    require_data(cfg)?;
    let exp = &cfg.experiment;
    exp.validate().map_err(|e| e.at(Stage::Preprocessing))?;
    let dataset = pipeline::load_csv(&exp.data).map_err(|e| e.at(Stage::Ingestion))?;
    let samples = if cfg.train_aff.use_split {
        pipeline::prepare(&dataset, exp)?.train.samples().to_vec()
    } else if exp.standardize {
        pipeline::standardize(&dataset).0.samples().to_vec()
    } else {
        dataset.samples().to_vec()
    };
    let aff = exp
        .training
        .aff_config(exp.dim_features, exp.gamma, exp.gamma_s, exp.seed);
    let trained = dmkde::train_aff(&samples, &aff).map_err(|e| e.at(Stage::Training))?;
    let dir = &cfg.output.dir;
    write_text(
        dir,
        "params.json",
        &(trained.params.to_json().map_err(|e| e.at(Stage::Output))? + "\n"),
    )?;
    write_with(dir, "loss.csv", |w| report::write_loss_csv(w, &trained.history))?;
    println!(
        "trained d={} for {} epochs: loss {:.6} -> best {:.6} (epoch {})",
        exp.dim_features,
        aff.epochs,
        trained.initial_loss(),
        trained.best_loss(),
        trained.best_epoch
    );
    Ok(())
}

fn density_estimate(cfg: &RunConfig) -> CliResult {
    let curves = pipeline::run_density_experiment(&cfg.density)?;
    let dir = &cfg.output.dir;
    write_with(dir, "density.csv", |w| report::write_density_csv(w, &curves))?;
    let summary = serde_json::json!({
        "l1_pure": curves.l1_pure,
        "l1_mixed": curves.l1_mixed,
        "constant_pure": curves.constant_pure,
        "constant_mixed": curves.constant_mixed,
        "grid_points": curves.x.len(),
        "train_size": curves.training_samples.len(),
        "config": &cfg.density,
    });
    write_text(
        dir,
        "summary.json",
        &(report::to_json(&summary).map_err(|e| e.at(Stage::Output))? + "\n"),
    )?;
    println!(
        "L1 to true pdf: pure {:.6}, mixed {:.6}",
        curves.l1_pure, curves.l1_mixed
    );
    Ok(())
}

fn detect(cfg: &RunConfig) -> CliResult {
    require_data(cfg)?;
    let exp = &cfg.experiment;
    let states = cfg.states.clone().unwrap_or_else(|| vec![exp.state]);
    let dataset = pipeline::load_csv(&exp.data).map_err(|e| e.at(Stage::Ingestion))?;
    let outcomes = pipeline::run_states(&dataset, exp, &states)?;
    let dir = &cfg.output.dir;
    for o in &outcomes {
        for run in &o.runs {
            let name = format!("samples_{}_r{}.csv", o.state.as_str(), run.repeat);
            write_with(dir, &name, |w| report::write_detection_csv(w, run))?;
        }
    }
    let doc = serde_json::json!({ "config": exp, "outcomes": &outcomes });
    write_text(
        dir,
        "report.json",
        &(report::to_json(&doc).map_err(|e| e.at(Stage::Output))? + "\n"),
    )?;
    let table = report::format_table(&outcomes);
    write_text(dir, "table.txt", &table)?;
    print!("{table}");
    Ok(())
}

fn sweep(cfg: &RunConfig) -> CliResult {
    require_data(cfg)?;
    let dataset = pipeline::load_csv(&cfg.experiment.data).map_err(|e| e.at(Stage::Ingestion))?;
    let rows = pipeline::run_sweep(&dataset, &cfg.experiment, &cfg.sweep).map_err(|e| e.at(Stage::Preprocessing))?;
    write_with(&cfg.output.dir, "sweep.csv", |w| report::write_sweep_csv(w, &rows))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} configurations, {} failed", rows.len(), failed);
    if failed == rows.len() {
        let first = rows[0].error.clone().unwrap_or_default();
        return Err(Failure::Config(format!(
            "every sweep configuration failed; first error: {first}"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig) -> CliResult) = match &cli.command {
        Command::TrainAff(c) => (c, train_aff),
        Command::DensityEstimate(c) => (c, density_estimate),
        Command::Detect(c) => (c, detect),
        Command::Sweep(c) => (c, sweep),
    };
    match load_config(common).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
