//! Bag-level evaluation: rank AUC and balanced accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bagdata::Bag;
use crate::error::{Error, Result};
use crate::heads::{decide, Head};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(pred: &[bool], labels: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &y) in pred.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn balanced_accuracy(&self) -> Result<f64> {
        let pos = self.tp + self.fn_;
        let neg = self.tn + self.fp;
        if pos == 0 || neg == 0 {
            return Err(Error::domain("balanced accuracy needs both classes"));
        }
        Ok(0.5 * (self.tp as f64 / pos as f64 + self.tn as f64 / neg as f64))
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auc: f64,
    pub balanced_accuracy: f64,
    /// Plain accuracy, reported next to the balanced one.
    pub accuracy: f64,
    pub confusion: Confusion,
    pub n_bags: usize,
}

fn check_classes(labels: &[bool]) -> Result<(usize, usize)> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::domain("both classes must be present"));
    }
    Ok((n_pos, n_neg))
}

/// Mann-Whitney AUC: the probability that a random positive scores above a
/// random negative, ties counted one half. Computed from midranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::domain("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numerical("NaN score".into()));
    }
    let (n_pos, n_neg) = check_classes(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        pos_rank_sum += midrank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

pub fn balanced_accuracy(pred_labels: &[bool], labels: &[bool]) -> Result<f64> {
    if pred_labels.len() != labels.len() {
        return Err(Error::domain("predictions and labels differ in length"));
    }
    Confusion::from_predictions(pred_labels, labels).balanced_accuracy()
}

/// Bag scores for every bag under `head`, in input order.
pub fn score_bags(model: &Model, bags: &[Bag], head: Head) -> Result<Vec<f64>> {
    bags.par_iter()
        .map(|b| model.score_bag(b, head).map(|s| s.score))
        .collect()
}

pub fn evaluate(model: &Model, bags: &[Bag], head: Head) -> Result<EvalResult> {
    if bags.is_empty() {
        return Err(Error::domain("nothing to evaluate"));
    }
    let scores = score_bags(model, bags, head)?;
    let labels: Vec<bool> = bags.iter().map(|b| b.label).collect();
    let pred: Vec<bool> = scores.iter().map(|&s| decide(s)).collect();
    let confusion = Confusion::from_predictions(&pred, &labels);
    Ok(EvalResult {
        auc: auc(&scores, &labels)?,
        balanced_accuracy: confusion.balanced_accuracy()?,
        accuracy: confusion.accuracy(),
        confusion,
        n_bags: bags.len(),
    })
}
