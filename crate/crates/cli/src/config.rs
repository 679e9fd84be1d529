//! TOML run configuration and `--set key.path=value` overrides.

use std::path::{Path, PathBuf};

use dmkde::pipeline::{DensityExperimentConfig, ExperimentConfig, StateKind, SweepGrid};
use serde::{Deserialize, Serialize};

pub const CONFIG_KEYS: &str = "\
CONFIG KEYS (TOML file via --config, or --set key.path=value):

  Keys are grouped by TOML table. `states` is top-level.

  experiment.data.path               labelled CSV file (required by detect, sweep, train-aff)
  experiment.data.label_column       label header name or zero-based index (default label)
  experiment.data.outlier_label      label value marking outliers (default 1)
  experiment.data.normal_label       if set, any other label value is an error
  experiment.data.delimiter          field delimiter (default ,)
  experiment.standardize             z-score features with training statistics (default true)
  experiment.split.train_frac        (default 0.6)
  experiment.split.val_frac          (default 0.2)
  experiment.split.test_frac         (default 0.2)
  experiment.split.stratified        keep class proportions per partition (default true)
  experiment.split.seed              (default 0)
  experiment.embedding               rff | aff (default aff)
  experiment.state                   pure | mixed (default mixed)
  experiment.dim_features            number of Fourier features d (default 4)
  experiment.gamma                   kernel parameter of the feature map (default 0.0078125)
  experiment.gamma_s                 kernel parameter of the AFF pair labels (default 0.015625)
  experiment.training.epochs         (default 50)
  experiment.training.batch_size     (default 64)
  experiment.training.learning_rate  (default 0.001)
  experiment.training.beta1          (default 0.9)
  experiment.training.beta2          (default 0.999)
  experiment.training.epsilon        (default 1e-8)
  experiment.params_path             reuse a feature map written by train-aff
  experiment.backend                 classical | simulator-exact | simulator-shots (default classical)
  experiment.shots                   shots per circuit for simulator-shots (default 8192)
  experiment.seed                    seed of repeat 0; repeat r uses seed + r (default 0)
  experiment.repeats                 (default 1)
  experiment.outlier_rate            validation quantile used as threshold (default 0.096)

  states                             detect: state kinds to run, e.g. (default \"pure\", \"mixed\")
                                     (defaults to [experiment.state])
  train_aff.use_split                train on the training partition only (default true)

  density.mixture.mean1 / mean2      (default -2.0 / 2.0)
  density.mixture.sigma1 / sigma2    (default 1.0 / 1.0)
  density.mixture.weight1            (default 0.5)
  density.train_size                 (default 1000)
  density.grid_points                (default 250)
  density.margin_sigmas              grid extends this many sigmas past the means (default 3.0)
  density.embedding                  rff | aff (default rff)
  density.dim_features               (default 16)
  density.gamma                      (default 1.0)
  density.gamma_s                    (default 1.0)
  density.training.*                 as experiment.training.*
  density.backend                    (default classical)
  density.shots                      (default 8192)
  density.seed                       (default 0)

  sweep.embeddings                   (default [\"rff\"])
  sweep.dims                         (default [4])
  sweep.gammas                       (default 2^-10 .. 2^0)
  sweep.states                       (default [\"mixed\"])

  output.dir                         directory for all written files (default out)
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainAffSection {
    pub use_split: bool,
}

impl Default for TrainAffSection {
    fn default() -> Self {
        TrainAffSection { use_split: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub states: Option<Vec<StateKind>>,
    pub train_aff: TrainAffSection,
    pub density: DensityExperimentConfig,
    pub sweep: SweepGrid,
    pub output: OutputSection,
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `key.path=value` to `doc`, creating intermediate tables.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override `{assignment}` is not of the form key.path=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override key `{key}` has an empty component"));
    }
    let (last, parents) = parts.split_last().expect("non-empty");
    let mut table = doc;
    for p in parents {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| format!("override key `{key}`: `{p}` is not a table"))?;
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, String> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            text.parse::<toml::Table>()
                .map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    RunConfig::deserialize(toml::Value::Table(doc)).map_err(|e| format!("invalid config: {e}"))
}
