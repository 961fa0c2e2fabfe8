//! Experiment configuration: a JSON document describing the dataset, models,
//! training template, and the (cost x loss kind x repetition) grid.

use crate::error::{Error, Result};
use crate::loss::{BinaryLossKind, CostSpec};
use crate::model::{ModelKind, ModelSpec, DEFAULT_HIDDEN_DIMS};
use crate::oracle::SyntheticSpec;
use crate::train::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Experiment,
    VerifyTheory,
    IncreasingN,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Experiment => "experiment",
            Mode::VerifyTheory => "verify-theory",
            Mode::IncreasingN => "increasing-n",
        })
    }
}

/// Model architecture as configured; the input width is taken from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_model_kind")]
    pub kind: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
}

fn default_model_kind() -> ModelKind {
    ModelKind::Mlp
}

fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN_DIMS.to_vec()
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { kind: default_model_kind(), hidden_dims: default_hidden() }
    }
}

impl ModelConfig {
    pub fn to_spec(&self, input_dim: usize) -> ModelSpec {
        match self.kind {
            ModelKind::Linear => ModelSpec::linear(input_dim),
            ModelKind::Mlp => ModelSpec::mlp(input_dim, self.hidden_dims.clone()),
        }
    }
}

/// Where the data comes from: a CSV file that gets split per repetition, or a
/// synthetic distribution that gets resampled per repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetConfig {
    Csv {
        path: PathBuf,
        target_column: String,
        #[serde(default)]
        cost_column: Option<String>,
        #[serde(default)]
        name: Option<String>,
    },
    Synthetic {
        spec: SyntheticSpec,
        n_train: usize,
        n_val: usize,
        n_test: usize,
        #[serde(default)]
        name: Option<String>,
    },
}

impl DatasetConfig {
    pub fn name(&self) -> String {
        match self {
            DatasetConfig::Csv { path, name, .. } => name.clone().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into())
            }),
            DatasetConfig::Synthetic { name, .. } => {
                name.clone().unwrap_or_else(|| "synthetic".into())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.6, val: 0.2, test: 0.2 }
    }
}

impl SplitRatios {
    pub fn as_tuple(&self) -> (f64, f64, f64) {
        (self.train, self.val, self.test)
    }
}

/// Sweep sizes for verify-theory mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    /// Random (mu, var, c) cases per loss kind for the pointwise minimizer
    /// checks.
    #[serde(default = "default_pointwise_cases")]
    pub pointwise_cases: usize,
    /// Random samples per loss kind for the regret-transfer sweep.
    #[serde(default = "default_regret_samples")]
    pub regret_samples: usize,
    /// Whether to run the synthetic recovery probe (train a pair on the
    /// built-in heteroscedastic benchmark and compare decisions against the
    /// optimal rule).
    #[serde(default = "default_true")]
    pub bayes_probe: bool,
    #[serde(default = "default_probe_train")]
    pub probe_n_train: usize,
    #[serde(default = "default_probe_epochs")]
    pub probe_epochs: usize,
    #[serde(default = "default_probe_slow_start")]
    pub probe_slow_start: usize,
    #[serde(default = "default_probe_agreement")]
    pub probe_min_agreement: f64,
}

fn default_pointwise_cases() -> usize {
    500
}
fn default_regret_samples() -> usize {
    10_000
}
fn default_true() -> bool {
    true
}
fn default_probe_train() -> usize {
    2000
}
fn default_probe_epochs() -> usize {
    300
}
fn default_probe_slow_start() -> usize {
    60
}
fn default_probe_agreement() -> f64 {
    0.9
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            pointwise_cases: default_pointwise_cases(),
            regret_samples: default_regret_samples(),
            bayes_probe: default_true(),
            probe_n_train: default_probe_train(),
            probe_epochs: default_probe_epochs(),
            probe_slow_start: default_probe_slow_start(),
            probe_min_agreement: default_probe_agreement(),
        }
    }
}

/// Which output formats to emit next to the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFormats {
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default = "default_true")]
    pub json: bool,
}

impl Default for OutputFormats {
    fn default() -> Self {
        OutputFormats { csv: true, json: true }
    }
}

fn default_repetitions() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_loss_kinds() -> Vec<BinaryLossKind> {
    vec![BinaryLossKind::Mae]
}

/// The top-level experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub model_h: ModelConfig,
    #[serde(default)]
    pub model_r: ModelConfig,
    /// Training template; its `loss_kind`, `cost`, and `seed` fields are
    /// overwritten per grid cell.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub costs: Vec<CostSpec>,
    #[serde(default = "default_loss_kinds")]
    pub loss_kinds: Vec<BinaryLossKind>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub split: SplitRatios,
    /// Z-score features with train-split statistics. Defaults to true for
    /// CSV datasets and false for synthetic ones.
    #[serde(default)]
    pub standardize: Option<bool>,
    /// Train-subset fractions for increasing-n mode.
    #[serde(default)]
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub verify: VerifySettings,
    /// Worker pool size; the RCR_JOBS environment variable overrides it.
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Also write one per-cell training-history CSV per grid cell.
    #[serde(default)]
    pub emit_history: bool,
    #[serde(default)]
    pub formats: OutputFormats,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn standardize_enabled(&self) -> bool {
        self.standardize
            .unwrap_or(matches!(&self.dataset, Some(DatasetConfig::Csv { .. })))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.repetitions == 0 {
            return Err(Error::Invalid { what: "config", reason: "repetitions must be >= 1".into() });
        }
        for cost in &self.costs {
            cost.validate()?;
        }
        match self.mode {
            Mode::Experiment | Mode::IncreasingN => {
                if self.dataset.is_none() {
                    return Err(Error::Invalid {
                        what: "config",
                        reason: format!("mode {} requires a dataset", self.mode),
                    });
                }
                if self.costs.is_empty() {
                    return Err(Error::Invalid {
                        what: "config",
                        reason: "costs must be non-empty".into(),
                    });
                }
                if self.loss_kinds.is_empty() {
                    return Err(Error::Invalid {
                        what: "config",
                        reason: "loss_kinds must be non-empty".into(),
                    });
                }
                let (a, b, c) = self.split.as_tuple();
                if !(a > 0.0 && b > 0.0 && c > 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
                    return Err(Error::Invalid {
                        what: "config",
                        reason: "split ratios must be positive and sum to 1".into(),
                    });
                }
                if self.mode == Mode::IncreasingN {
                    if self.fractions.is_empty() {
                        return Err(Error::Invalid {
                            what: "config",
                            reason: "increasing-n mode needs a non-empty fractions list".into(),
                        });
                    }
                    for &f in &self.fractions {
                        if !(f > 0.0 && f <= 1.0) {
                            return Err(Error::Invalid {
                                what: "config",
                                reason: format!("fractions must lie in (0, 1], got {f}"),
                            });
                        }
                    }
                }
            }
            Mode::VerifyTheory => {
                if self.verify.pointwise_cases == 0
                    && self.verify.regret_samples == 0
                    && !self.verify.bayes_probe
                {
                    return Err(Error::Invalid {
                        what: "config",
                        reason: "nothing to verify: all sweep sizes are zero".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_synthetic_config_parses() {
        let text = r#"{
            "dataset": {"synthetic": {
                "spec": {"x_dim": 1, "x_lo": [-3.0], "x_hi": [3.0],
                         "mean": {"sine": {"amplitude": 2.0, "frequency": 1.0}},
                         "var": {"step": {"threshold": 0.0, "low": 1.0, "high": 25.0}}},
                "n_train": 100, "n_val": 50, "n_test": 50
            }},
            "costs": [3.0, "per_example"],
            "loss_kinds": ["mae", "logistic"],
            "repetitions": 2
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.costs.len(), 2);
        assert_eq!(cfg.costs[0], CostSpec::Constant(3.0));
        assert_eq!(cfg.costs[1], CostSpec::PerExample);
        assert_eq!(cfg.loss_kinds, vec![BinaryLossKind::Mae, BinaryLossKind::Logistic]);
        assert_eq!(cfg.mode, Mode::Experiment);
        assert!(cfg.validate().is_ok());
        assert!(!cfg.standardize_enabled(), "synthetic datasets default to raw features");
        assert_eq!(cfg.dataset.unwrap().name(), "synthetic");
    }

    #[test]
    fn csv_config_defaults() {
        let text = r#"{
            "dataset": {"csv": {"path": "data/foo.csv", "target_column": "y"}},
            "costs": [1.0]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(cfg.standardize_enabled());
        assert_eq!(cfg.dataset.as_ref().unwrap().name(), "foo");
        assert_eq!(cfg.train.batch_size, 1024);
        assert_eq!(cfg.train.epochs, 1000);
        assert_eq!(cfg.train.slow_start_epochs, 200);
        assert_eq!(cfg.train.lr_grid, vec![0.1, 0.01, 0.001]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn mode_specific_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.mode = Mode::Experiment;
        assert!(cfg.validate().is_err(), "experiment mode without dataset must fail");

        cfg.mode = Mode::VerifyTheory;
        assert!(cfg.validate().is_ok());
        cfg.verify.pointwise_cases = 0;
        cfg.verify.regret_samples = 0;
        cfg.verify.bayes_probe = false;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("nothing to verify"), "{err}");
    }

    #[test]
    fn increasing_n_needs_valid_fractions() {
        let text = r#"{
            "dataset": {"csv": {"path": "x.csv", "target_column": "y"}},
            "costs": [1.0],
            "mode": "increasing-n"
        }"#;
        let mut cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(cfg.validate().is_err());
        cfg.fractions = vec![0.2, 1.0];
        assert!(cfg.validate().is_ok());
        cfg.fractions = vec![0.0];
        assert!(cfg.validate().is_err());
        cfg.fractions = vec![1.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"costs": [1.0], "bogus_field": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }
}
