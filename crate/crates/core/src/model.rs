//! A trained classifier plus its quantile level, and the `promil-model/1`
//! file that stores it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bagdata::Bag;
use crate::bernstein::{QuantileParam, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::heads::{score, BagScore, Head};
use crate::net::{forward_bag, NetArch, NetParams};

pub const MODEL_SCHEMA: &str = "promil-model/1";

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: NetParams,
    pub q: QuantileParam,
    pub eps: f64,
    /// Head the model was trained with.
    pub head: Head,
}

impl Model {
    pub fn new(net: NetParams, q: QuantileParam, head: Head) -> Self {
        Self {
            net,
            q,
            eps: DEFAULT_EPS,
            head,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.net.arch.input_dim
    }

    pub fn instance_predictions(&self, bag: &Bag) -> Result<Vec<f64>> {
        Ok(forward_bag(&self.net, bag)?.0)
    }

    pub fn score_bag(&self, bag: &Bag, head: Head) -> Result<BagScore> {
        let preds = self.instance_predictions(bag)?;
        score(head, &preds, self.q.q(), self.eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub val_metric: String,
    /// Wall-clock time of the save; not part of any reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saved_at_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub arch: NetArch,
    pub head: Head,
    pub eps: f64,
    /// Layer by layer, weights (row-major) then biases.
    pub params: Vec<f64>,
    pub q_raw: f64,
    pub q: f64,
    pub training: TrainingMeta,
}

impl ModelFile {
    pub fn from_model(model: &Model, training: TrainingMeta) -> Self {
        Self {
            schema: MODEL_SCHEMA.to_string(),
            arch: model.net.arch.clone(),
            head: model.head,
            eps: model.eps,
            params: model.net.flatten(),
            q_raw: model.q.raw(),
            q: model.q.q(),
            training,
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        if self.schema != MODEL_SCHEMA {
            return Err(Error::Format(format!(
                "unsupported model schema `{}`, expected `{MODEL_SCHEMA}`",
                self.schema
            )));
        }
        self.arch.validate()?;
        let net = NetParams::from_flat(&self.arch, &self.params)
            .map_err(|e| Error::Format(e.to_string()))?;
        if !net.is_finite() || !self.q_raw.is_finite() {
            return Err(Error::Numerical("model file holds non-finite parameters".into()));
        }
        Ok(Model {
            net,
            q: QuantileParam::from_raw(self.q_raw),
            eps: self.eps,
            head: self.head,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: 0,
            msg: format!("line {} column {}: {e}", e.line(), e.column()),
        })?;
        if file.schema != MODEL_SCHEMA {
            return Err(Error::Format(format!(
                "unsupported model schema `{}`, expected `{MODEL_SCHEMA}`",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
