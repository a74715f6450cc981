//! Bag-level scoring: the quantile head and the max / mean baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bernstein::{estimate_quantile, SortedPredictions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Promil,
    Max,
    Mean,
}

impl Head {
    pub const ALL: [Head; 3] = [Head::Promil, Head::Max, Head::Mean];

    pub fn as_str(self) -> &'static str {
        match self {
            Head::Promil => "promil",
            Head::Max => "max",
            Head::Mean => "mean",
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "promil" => Ok(Head::Promil),
            "max" => Ok(Head::Max),
            "mean" => Ok(Head::Mean),
            other => Err(Error::domain(format!("unknown head `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagScore {
    pub score: f64,
    /// Estimate at level `1 - q` (quantile head only).
    pub aux_score: Option<f64>,
    /// Sorting permutation (quantile head only).
    pub permutation: Option<Vec<usize>>,
}

impl BagScore {
    fn plain(score: f64) -> Self {
        Self {
            score,
            aux_score: None,
            permutation: None,
        }
    }
}

fn nonempty(predictions: &[f64]) -> Result<()> {
    if predictions.is_empty() {
        Err(Error::domain("cannot score an empty bag"))
    } else {
        Ok(())
    }
}

/// Sorts the predictions and evaluates the estimator at `q` and at `1 - q`.
pub fn promil_score(predictions: &[f64], q: f64, eps: f64) -> Result<BagScore> {
    nonempty(predictions)?;
    let sorted = SortedPredictions::from_unsorted(predictions)?;
    let score = estimate_quantile(&sorted, q, eps)?;
    let aux = estimate_quantile(&sorted, 1.0 - q, eps)?;
    Ok(BagScore {
        score,
        aux_score: Some(aux),
        permutation: Some(sorted.permutation().to_vec()),
    })
}

pub fn max_score(predictions: &[f64]) -> Result<BagScore> {
    nonempty(predictions)?;
    let max = predictions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BagScore::plain(max))
}

pub fn mean_score(predictions: &[f64]) -> Result<BagScore> {
    nonempty(predictions)?;
    let mean = predictions.iter().sum::<f64>() / predictions.len() as f64;
    Ok(BagScore::plain(mean))
}

/// Scores a bag with `head`; `q` is ignored by the baselines.
pub fn score(head: Head, predictions: &[f64], q: f64, eps: f64) -> Result<BagScore> {
    match head {
        Head::Promil => promil_score(predictions, q, eps),
        Head::Max => max_score(predictions),
        Head::Mean => mean_score(predictions),
    }
}

/// Positive iff the score is strictly greater than one half.
pub fn decide(score: f64) -> bool {
    score > 0.5
}
