//! Experiment configuration (`promil-config/1`), a TOML document.
//!
//! ```toml
//! schema = "promil-config/1"
//! seed = 0
//!
//! [data]
//! source = "synthetic"          # or "mnist"
//! n_bags = 1000
//! threshold_qstar = 0.3
//! feature_dim = 2
//! class_separation = 6.0
//! noise_std = 1.0
//! label_rule = "percentage"
//! split = [0.5, 0.2, 0.3]
//!
//! [net]
//! hidden_dims = []
//! activation = "relu"
//!
//! [train]
//! learning_rate = 1e-4
//! q_init = "random"
//!
//! [eval]
//! head = "promil"
//!
//! [sweep]
//! repeats = 5
//! methods = ["promil", "max", "mean"]
//!
//! [output]
//! dataset = "dataset.json"
//! ```
//!
//! Every section and field is optional; missing values take their defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bagdata::{LabelRule, SyntheticSpec};
use crate::error::{Error, Result};
use crate::heads::Head;
use crate::net::{Activation, NetArch};
use crate::train::TrainConfig;

pub const CONFIG_SCHEMA: &str = "promil-config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Synthetic,
    Mnist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub n_bags: usize,
    pub bag_size_mean: f64,
    pub bag_size_std: f64,
    pub threshold_qstar: f64,
    pub feature_dim: usize,
    pub class_separation: f64,
    pub noise_std: f64,
    pub label_rule: LabelRule,
    pub rebalance: bool,
    /// `(train, validation, test)` fractions.
    pub split: [f64; 3],
    pub mnist_train_images: Option<PathBuf>,
    pub mnist_train_labels: Option<PathBuf>,
    pub mnist_test_images: Option<PathBuf>,
    pub mnist_test_labels: Option<PathBuf>,
    /// Number of MNIST test bags; train and validation bags come from the
    /// training images, test bags from the test images.
    pub mnist_test_bags: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self {
            source: DataSource::Synthetic,
            n_bags: s.n_bags,
            bag_size_mean: s.bag_size_mean,
            bag_size_std: s.bag_size_std,
            threshold_qstar: s.threshold_qstar,
            feature_dim: s.feature_dim,
            class_separation: s.class_separation,
            noise_std: s.noise_std,
            label_rule: s.label_rule,
            rebalance: s.rebalance,
            split: [0.5, 0.2, 0.3],
            mnist_train_images: None,
            mnist_train_labels: None,
            mnist_test_images: None,
            mnist_test_labels: None,
            mnist_test_bags: 500,
        }
    }
}

impl DataConfig {
    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_bags: self.n_bags,
            bag_size_mean: self.bag_size_mean,
            bag_size_std: self.bag_size_std,
            threshold_qstar: self.threshold_qstar,
            feature_dim: self.feature_dim,
            class_separation: self.class_separation,
            noise_std: self.noise_std,
            label_rule: self.label_rule,
            rebalance: self.rebalance,
        }
    }

    fn validate(&self) -> Result<()> {
        self.synthetic_spec().validate().map_err(|e| match e {
            Error::Config { field, msg } => Error::config(format!("data.{field}"), msg),
            other => other,
        })?;
        let total: f64 = self.split.iter().sum();
        if self.split.iter().any(|f| !(*f >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "data.split",
                "fractions must be nonnegative and sum to 1",
            ));
        }
        if self.split[0] == 0.0 || self.split[1] == 0.0 {
            return Err(Error::config(
                "data.split",
                "train and validation fractions must be positive",
            ));
        }
        if self.source == DataSource::Mnist {
            for (name, p) in [
                ("data.mnist_train_images", &self.mnist_train_images),
                ("data.mnist_train_labels", &self.mnist_train_labels),
                ("data.mnist_test_images", &self.mnist_test_images),
                ("data.mnist_test_labels", &self.mnist_test_labels),
            ] {
                match p {
                    None => return Err(Error::config(name, "required when source = \"mnist\"")),
                    Some(p) if !p.is_file() => {
                        return Err(Error::config(name, format!("{} is not a file", p.display())))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden_dims: Vec::new(),
            activation: Activation::Relu,
        }
    }
}

impl NetConfig {
    pub fn arch(&self, input_dim: usize) -> NetArch {
        NetArch {
            input_dim,
            hidden_dims: self.hidden_dims.clone(),
            activation: self.activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub head: Head,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { head: Head::Promil }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Threshold,
    BagSize,
    NBags,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Threshold => "threshold",
            SweepAxis::BagSize => "bag_size",
            SweepAxis::NBags => "n_bags",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(SweepAxis::Threshold),
            "bag_size" => Ok(SweepAxis::BagSize),
            "n_bags" => Ok(SweepAxis::NBags),
            other => Err(Error::domain(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub repeats: usize,
    pub methods: Vec<Head>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Threshold,
            values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            repeats: 5,
            methods: Head::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub log: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub sweep: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dataset: "dataset.json".into(),
            model: "model.json".into(),
            log: None,
            report: None,
            sweep: "sweep.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: default_schema(),
            seed: 0,
            data: DataConfig::default(),
            net: NetConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let offset = e.span().map(|s| s.start as u64).unwrap_or(0);
            Error::Parse {
                offset,
                msg: e.message().to_string(),
            }
        })?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(Error::config(
                "schema",
                format!("expected `{CONFIG_SCHEMA}`, found `{}`", cfg.schema),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Training settings with the experiment seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.train_config().validate().map_err(|e| match e {
            Error::Config { field, msg } => Error::config(format!("train.{field}"), msg),
            other => other,
        })?;
        if self.net.hidden_dims.contains(&0) {
            return Err(Error::config("net.hidden_dims", "every layer width must be positive"));
        }
        if self.sweep.repeats == 0 {
            return Err(Error::config("sweep.repeats", "must be positive"));
        }
        if self.sweep.methods.is_empty() {
            return Err(Error::config("sweep.methods", "must name at least one method"));
        }
        Ok(())
    }
}
