//! On-disk dataset container (`bagdata/1`), a single JSON document:
//!
//! ```text
//! {
//!   "schema": "bagdata/1",
//!   "source": "synthetic" | "mnist",
//!   "spec": { ...SyntheticSpec... },
//!   "seed": 7,
//!   "encoding": "f64" | "u8",
//!   "bags": [ { "id", "label", "instances" | "pixels",
//!               "hidden_instance_labels"?, "positive_fraction"? } ],
//!   "partition": { "train": [ids], "validation": [ids], "test": [ids] }
//! }
//! ```
//!
//! With `"encoding": "u8"` each instance is stored as a hex string of bytes
//! and decoded as `byte / 255`; this keeps image datasets compact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bag, SyntheticSpec};
use crate::error::{Error, Result};

pub const DATASET_SCHEMA: &str = "bagdata/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceEncoding {
    F64,
    U8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub source: String,
    pub spec: SyntheticSpec,
    pub seed: u64,
    pub encoding: InstanceEncoding,
    pub bags: Vec<Bag>,
    pub partition: Option<Partition>,
}

#[derive(Serialize, Deserialize)]
struct StoredBag {
    id: String,
    label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instances: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pixels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden_instance_labels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positive_fraction: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    schema: String,
    source: String,
    spec: SyntheticSpec,
    seed: u64,
    encoding: InstanceEncoding,
    bags: Vec<StoredBag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Partition>,
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn from_hex(s: &str) -> Result<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return Err(Error::Format("odd-length pixel string".into()));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&s[i..i + 2], 16)
                .map_err(|_| Error::Format(format!("bad hex byte `{}`", &s[i..i + 2])))
        })
        .collect()
}

fn to_binary(flag: bool) -> u8 {
    u8::from(flag)
}

fn from_binary(v: u8, what: &str) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Format(format!("{what} must be 0 or 1, got {other}"))),
    }
}

impl DatasetFile {
    fn encode_bag(&self, bag: &Bag) -> Result<StoredBag> {
        let (instances, pixels) = match self.encoding {
            InstanceEncoding::F64 => (Some(bag.instances.clone()), None),
            InstanceEncoding::U8 => {
                let px = bag
                    .instances
                    .iter()
                    .map(|x| {
                        let bytes = x
                            .iter()
                            .map(|&v| {
                                let b = (v * 255.0).round();
                                if (0.0..=255.0).contains(&b) && b / 255.0 == v {
                                    Ok(b as u8)
                                } else {
                                    Err(Error::Format(format!(
                                        "bag {}: value {v} is not a byte / 255",
                                        bag.id
                                    )))
                                }
                            })
                            .collect::<Result<Vec<u8>>>()?;
                        Ok(to_hex(&bytes))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (None, Some(px))
            }
        };
        Ok(StoredBag {
            id: bag.id.clone(),
            label: to_binary(bag.label),
            instances,
            pixels,
            hidden_instance_labels: bag
                .hidden_instance_labels
                .as_ref()
                .map(|h| h.iter().map(|&x| to_binary(x)).collect()),
            positive_fraction: bag.positive_fraction,
        })
    }

    fn decode_bag(encoding: InstanceEncoding, s: StoredBag) -> Result<Bag> {
        let instances = match (encoding, s.instances, s.pixels) {
            (InstanceEncoding::F64, Some(x), _) => x,
            (InstanceEncoding::U8, _, Some(px)) => px
                .iter()
                .map(|h| Ok(from_hex(h)?.into_iter().map(|b| b as f64 / 255.0).collect()))
                .collect::<Result<Vec<_>>>()?,
            _ => {
                return Err(Error::Format(format!(
                    "bag {} lacks instance data for encoding {encoding:?}",
                    s.id
                )))
            }
        };
        let hidden = s
            .hidden_instance_labels
            .map(|h| {
                h.into_iter()
                    .map(|v| from_binary(v, "hidden_instance_labels"))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let bag = Bag {
            id: s.id,
            instances,
            label: from_binary(s.label, "label")?,
            hidden_instance_labels: hidden,
            positive_fraction: s.positive_fraction,
        };
        bag.validate()?;
        Ok(bag)
    }

    pub fn to_json(&self) -> Result<String> {
        let stored = Stored {
            schema: DATASET_SCHEMA.to_string(),
            source: self.source.clone(),
            spec: self.spec.clone(),
            seed: self.seed,
            encoding: self.encoding,
            bags: self
                .bags
                .iter()
                .map(|b| self.encode_bag(b))
                .collect::<Result<_>>()?,
            partition: self.partition.clone(),
        };
        serde_json::to_string(&stored).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stored: Stored = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: 0,
            msg: format!("line {} column {}: {e}", e.line(), e.column()),
        })?;
        if stored.schema != DATASET_SCHEMA {
            return Err(Error::Format(format!(
                "unsupported dataset schema `{}`, expected `{DATASET_SCHEMA}`",
                stored.schema
            )));
        }
        let encoding = stored.encoding;
        let bags = stored
            .bags
            .into_iter()
            .map(|b| Self::decode_bag(encoding, b))
            .collect::<Result<Vec<_>>>()?;
        let dim = bags.first().and_then(Bag::dim);
        if bags.iter().any(|b| b.dim() != dim) {
            return Err(Error::Format("bags disagree on feature dimension".into()));
        }
        Ok(Self {
            source: stored.source,
            spec: stored.spec,
            seed: stored.seed,
            encoding,
            bags,
            partition: stored.partition,
        })
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

    pub fn feature_dim(&self) -> Option<usize> {
        self.bags.first().and_then(Bag::dim)
    }
}
