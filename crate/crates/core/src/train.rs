//! Training: the bag cost, its gradients, Adam, and the epoch loop with early
//! stopping.
//!
//! Each step takes one bag, runs every instance through the network, scores
//! the bag with the selected head, and back-propagates the bag cost into the
//! network and (for the quantile head) into the raw quantile parameter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bagdata::{Bag, DatasetSplit};
use crate::bernstein::{quantile_gradients, QuantileParam, SortedPredictions, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::heads::Head;
use crate::metrics::auc;
use crate::model::Model;
use crate::net::{backward_bag, forward_bag, init_params, NetArch, NetParamGrads, NetParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValMetric {
    Auc,
    Loss,
}

impl ValMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            ValMetric::Auc => "auc",
            ValMetric::Loss => "loss",
        }
    }
}

/// Which quantity the negative-label term of the quantile cost is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeBranch {
    /// The `1 - q` estimate of the complementary scores `1 - c_i`. This equals
    /// `1 - c_q`, so the cost is binary cross-entropy on `c_q`.
    Complement,
    /// The `1 - q` estimate of the predictions themselves.
    SameList,
}

/// Initial quantile level: a fixed value or a draw from `U[0.1, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QInit {
    Fixed(f64),
    Keyword(QInitKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QInitKeyword {
    Random,
}

impl QInit {
    pub const RANDOM: QInit = QInit::Keyword(QInitKeyword::Random);
    pub const RANDOM_RANGE: (f64, f64) = (0.1, 0.5);

    fn sample(self, rng: &mut ChaCha8Rng) -> Result<QuantileParam> {
        match self {
            QInit::Fixed(q) => QuantileParam::from_q(q),
            QInit::Keyword(QInitKeyword::Random) => {
                let (lo, hi) = Self::RANDOM_RANGE;
                QuantileParam::from_q(rng.random_range(lo..=hi))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Smallest change in the validation metric that counts as improvement.
    pub min_delta: f64,
    pub eps_clamp: f64,
    pub q_init: QInit,
    pub seed: u64,
    pub val_metric: ValMetric,
    pub head: Head,
    pub negative_branch: NegativeBranch,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.99,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 1e-5,
            max_epochs: 100,
            patience: 15,
            min_delta: 1e-4,
            eps_clamp: DEFAULT_EPS,
            q_init: QInit::RANDOM,
            seed: 0,
            val_metric: ValMetric::Auc,
            head: Head::Promil,
            negative_branch: NegativeBranch::Complement,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta2", "must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::config("adam_eps", "must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config("weight_decay", "must be nonnegative"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs", "must be positive"));
        }
        if !(self.eps_clamp > 0.0 && self.eps_clamp < 0.5) {
            return Err(Error::config("eps_clamp", "must lie in (0, 0.5)"));
        }
        if let QInit::Fixed(q) = self.q_init {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::config("q_init", "must lie inside (0, 1) or be \"random\""));
            }
        }
        Ok(())
    }
}

fn check_label(y: f64) -> Result<()> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("label {y} is not binary")))
    }
}

/// `-y log(c_q) - (1 - y) log(c_{1-q})`.
pub fn promil_cost(c_q: f64, c_1mq: f64, y: f64) -> Result<f64> {
    check_label(y)?;
    let pos = if y == 1.0 { -c_q.ln() } else { 0.0 };
    let neg = if y == 0.0 { -c_1mq.ln() } else { 0.0 };
    Ok(pos + neg)
}

/// Partial derivatives of [`promil_cost`] with respect to `c_q` and `c_{1-q}`.
pub fn cost_gradients(c_q: f64, c_1mq: f64, y: f64) -> Result<(f64, f64)> {
    check_label(y)?;
    Ok((-y / c_q, -(1.0 - y) / c_1mq))
}

fn bce(score: f64, y: f64, eps: f64) -> (f64, f64) {
    let s = score.clamp(eps, 1.0 - eps);
    let cost = -(y * s.ln() + (1.0 - y) * (1.0 - s).ln());
    let grad = if score > eps && score < 1.0 - eps {
        -y / s + (1.0 - y) / (1.0 - s)
    } else {
        0.0
    };
    (cost, grad)
}

/// Bag cost and its derivative with respect to every instance prediction
/// (original order) and to `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrad {
    pub cost: f64,
    pub upstream: Vec<f64>,
    pub grad_q: f64,
}

/// Cost of one bag given its instance predictions.
pub fn head_cost(
    head: Head,
    branch: NegativeBranch,
    predictions: &[f64],
    q: f64,
    y: f64,
    eps: f64,
) -> Result<CostGrad> {
    check_label(y)?;
    if predictions.is_empty() {
        return Err(Error::domain("empty bag"));
    }
    let n = predictions.len();
    match head {
        Head::Promil => {
            let sorted = SortedPredictions::from_unsorted(predictions)?;
            let at_q = quantile_gradients(&sorted, q, eps)?;
            let neg_list = match branch {
                NegativeBranch::Complement => sorted.complement(),
                NegativeBranch::SameList => sorted.clone(),
            };
            let at_1mq = quantile_gradients(&neg_list, 1.0 - q, eps)?;
            let cost = promil_cost(at_q.value, at_1mq.value, y)?;
            let (d_cq, d_c1mq) = cost_gradients(at_q.value, at_1mq.value, y)?;

            let mut upstream = sorted.scatter(
                &at_q.grad_values.iter().map(|g| d_cq * g).collect::<Vec<_>>(),
            );
            let neg_up = neg_list.scatter(
                &at_1mq.grad_values.iter().map(|g| d_c1mq * g).collect::<Vec<_>>(),
            );
            let sign = match branch {
                NegativeBranch::Complement => -1.0,
                NegativeBranch::SameList => 1.0,
            };
            for (u, g) in upstream.iter_mut().zip(&neg_up) {
                *u += sign * g;
            }
            // The second estimate is taken at 1 - q.
            let grad_q = d_cq * at_q.grad_q - d_c1mq * at_1mq.grad_q;
            Ok(CostGrad {
                cost,
                upstream,
                grad_q,
            })
        }
        Head::Max => {
            let (arg, &max) = predictions
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("nonempty");
            let (cost, g) = bce(max, y, eps);
            let mut upstream = vec![0.0; n];
            upstream[arg] = g;
            Ok(CostGrad {
                cost,
                upstream,
                grad_q: 0.0,
            })
        }
        Head::Mean => {
            let mean = predictions.iter().sum::<f64>() / n as f64;
            let (cost, g) = bce(mean, y, eps);
            Ok(CostGrad {
                cost,
                upstream: vec![g / n as f64; n],
                grad_q: 0.0,
            })
        }
    }
}

fn label_value(bag: &Bag) -> f64 {
    if bag.label {
        1.0
    } else {
        0.0
    }
}

/// Full gradient of one bag's cost.
#[derive(Debug, Clone)]
pub struct BagGradients {
    pub cost: f64,
    pub net: NetParamGrads,
    /// Derivative with respect to the raw (unconstrained) quantile parameter.
    pub raw_q: f64,
    /// Derivative with respect to each instance prediction, bag order.
    pub upstream: Vec<f64>,
}

pub fn bag_gradients(
    net: &NetParams,
    q: &QuantileParam,
    bag: &Bag,
    cfg: &TrainConfig,
) -> Result<BagGradients> {
    let (preds, trace) = forward_bag(net, bag)?;
    let cg = head_cost(
        cfg.head,
        cfg.negative_branch,
        &preds,
        q.q(),
        label_value(bag),
        cfg.eps_clamp,
    )?;
    if !cg.cost.is_finite() {
        return Err(Error::Numerical(format!("cost is {} on bag {}", cg.cost, bag.id)));
    }
    let grads = backward_bag(net, &trace, &cg.upstream)?;
    Ok(BagGradients {
        cost: cg.cost,
        net: grads,
        raw_q: cg.grad_q * q.dq_draw(),
        upstream: cg.upstream,
    })
}

/// Cost of one bag, forward pass only.
pub fn bag_cost(net: &NetParams, q: &QuantileParam, bag: &Bag, cfg: &TrainConfig) -> Result<f64> {
    let (preds, _) = forward_bag(net, bag)?;
    Ok(head_cost(
        cfg.head,
        cfg.negative_branch,
        &preds,
        q.q(),
        label_value(bag),
        cfg.eps_clamp,
    )?
    .cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub m: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl From<&TrainConfig> for AdamHyper {
    fn from(c: &TrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.adam_eps,
            weight_decay: c.weight_decay,
        }
    }
}

/// One bias-corrected Adam step at step count `t >= 1`. When `decay` is set
/// the parameter also shrinks by `lr * weight_decay * param` (decoupled).
pub fn adam_update(param: &mut f64, grad: f64, moments: &mut Moments, hp: &AdamHyper, t: u64, decay: bool) {
    debug_assert!(t >= 1);
    moments.m = hp.beta1 * moments.m + (1.0 - hp.beta1) * grad;
    moments.v = hp.beta2 * moments.v + (1.0 - hp.beta2) * grad * grad;
    let m_hat = moments.m / (1.0 - hp.beta1.powi(t as i32));
    let v_hat = moments.v / (1.0 - hp.beta2.powi(t as i32));
    let mut step = m_hat / (v_hat.sqrt() + hp.eps);
    if decay {
        step += hp.weight_decay * *param;
    }
    *param -= hp.learning_rate * step;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub net: NetParams,
    pub q: QuantileParam,
    net_moments: Vec<Moments>,
    q_moments: Moments,
    pub step: u64,
    pub epoch: usize,
}

impl TrainState {
    pub fn new(net: NetParams, q: QuantileParam) -> Self {
        let n = net.num_params();
        Self {
            net,
            q,
            net_moments: vec![Moments::default(); n],
            q_moments: Moments::default(),
            step: 0,
            epoch: 0,
        }
    }

    /// Fresh network and quantile level drawn from `cfg.seed`.
    pub fn init(arch: &NetArch, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let net = init_params(arch, cfg.seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_9a17);
        let q = cfg.q_init.sample(&mut rng)?;
        Ok(Self::new(net, q))
    }

    pub fn model(&self, head: Head, eps: f64) -> Model {
        Model {
            net: self.net.clone(),
            q: self.q,
            eps,
            head,
        }
    }

    fn apply(&mut self, grads: &BagGradients, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step;
        let hp = AdamHyper::from(cfg);
        let flat_grads = grads.net.flatten();
        let mut i = 0;
        let moments = &mut self.net_moments;
        self.net.for_each_mut(|is_weight, p| {
            adam_update(p, flat_grads[i], &mut moments[i], &hp, t, is_weight);
            i += 1;
        });
        if cfg.head == Head::Promil {
            let mut raw = self.q.raw();
            adam_update(&mut raw, grads.raw_q, &mut self.q_moments, &hp, t, false);
            self.q.set_raw(raw);
        }
    }
}

/// One training iteration on a single bag. Returns the bag cost before the
/// update.
pub fn bag_step(state: &mut TrainState, bag: &Bag, cfg: &TrainConfig) -> Result<f64> {
    let grads = bag_gradients(&state.net, &state.q, bag, cfg)?;
    state.apply(&grads, cfg);
    if !state.net.is_finite() || !state.q.raw().is_finite() {
        return Err(Error::Numerical(format!("parameters diverged on bag {}", bag.id)));
    }
    let q = state.q.q();
    debug_assert!(q > 0.0 && q < 1.0);
    Ok(grads.cost)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_cost: f64,
    pub val_auc: f64,
    pub val_loss: f64,
    pub q: f64,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub epochs_run: usize,
    pub history: Vec<EpochRecord>,
}

/// Validation AUC and mean cost of `model` under the training head.
pub fn validation_scores(model: &Model, bags: &[Bag], cfg: &TrainConfig) -> Result<(f64, f64)> {
    let rows: Vec<(f64, f64)> = bags
        .par_iter()
        .map(|b| {
            let preds = model.instance_predictions(b)?;
            let cg = head_cost(
                cfg.head,
                cfg.negative_branch,
                &preds,
                model.q.q(),
                label_value(b),
                cfg.eps_clamp,
            )?;
            let s = crate::heads::score(cfg.head, &preds, model.q.q(), cfg.eps_clamp)?;
            Ok((s.score, cg.cost))
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let labels: Vec<bool> = bags.iter().map(|b| b.label).collect();
    let loss = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    Ok((auc(&scores, &labels)?, loss))
}

/// Epoch loop with a seeded shuffle and batch size one. After every epoch the
/// validation metric is computed; the best snapshot is kept and training
/// stops once `patience` epochs pass without improvement.
pub fn train(mut state: TrainState, split: &DatasetSplit, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::domain("empty training split"));
    }
    if split.validation.is_empty() {
        return Err(Error::domain("empty validation split"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x0dd_ba11));
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let mut best: Option<(f64, TrainState)> = None;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut history = Vec::new();

    while state.epoch < cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            total += bag_step(&mut state, &split.train[i], cfg)?;
        }
        state.epoch += 1;

        let model = state.model(cfg.head, cfg.eps_clamp);
        let (val_auc, val_loss) = validation_scores(&model, &split.validation, cfg)?;
        let metric = match cfg.val_metric {
            ValMetric::Auc => val_auc,
            ValMetric::Loss => -val_loss,
        };
        if !metric.is_finite() {
            return Err(Error::Numerical("validation metric is not finite".into()));
        }
        let improved = best
            .as_ref()
            .is_none_or(|(b, _)| metric > b + cfg.min_delta);
        if improved {
            best = Some((metric, state.clone()));
            best_epoch = state.epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        history.push(EpochRecord {
            epoch: state.epoch,
            train_cost: total / order.len() as f64,
            val_auc,
            val_loss,
            q: state.q.q(),
            improved,
        });
        if since_best >= cfg.patience {
            break;
        }
    }

    let (metric, snapshot) = best.expect("at least one epoch ran");
    let best_val_metric = match cfg.val_metric {
        ValMetric::Auc => metric,
        ValMetric::Loss => -metric,
    };
    Ok(TrainedModel {
        model: snapshot.model(cfg.head, cfg.eps_clamp),
        best_epoch,
        best_val_metric,
        epochs_run: state.epoch,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bagdata::{generate_synthetic, split_dataset, SyntheticSpec};
    use crate::net::Activation;

    #[test]
    fn cost_examples() {
        assert_eq!(promil_cost(1.0, 0.3, 1.0).unwrap(), 0.0);
        assert_eq!(promil_cost(0.2, 1.0, 0.0).unwrap(), 0.0);
        assert!((promil_cost(0.5, 0.8, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((promil_cost(0.5, 0.8, 1.0).unwrap() - 0.693147).abs() < 1e-6);
        assert!(promil_cost(0.5, 0.5, 0.5).is_err());
        assert!(cost_gradients(0.5, 0.5, 2.0).is_err());
    }

    #[test]
    fn cost_gradient_examples() {
        assert_eq!(cost_gradients(0.3, 0.6, 0.0).unwrap().0, 0.0);
        assert_eq!(cost_gradients(0.5, 0.6, 1.0).unwrap().0, -2.0);
        for &(cq, c1, y) in &[(0.3, 0.8, 1.0), (0.71, 0.12, 0.0), (0.05, 0.95, 1.0), (0.4, 0.33, 0.0)] {
            let (dq, d1) = cost_gradients(cq, c1, y).unwrap();
            let h = 1e-7;
            let nq = (promil_cost(cq + h, c1, y).unwrap() - promil_cost(cq - h, c1, y).unwrap()) / (2.0 * h);
            let n1 = (promil_cost(cq, c1 + h, y).unwrap() - promil_cost(cq, c1 - h, y).unwrap()) / (2.0 * h);
            for (a, n) in [(dq, nq), (d1, n1)] {
                let err = (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
                assert!(a == n || err < 1e-6, "{a} vs {n}");
            }
        }
    }

    #[test]
    fn single_instance_upstream() {
        for branch in [NegativeBranch::Complement, NegativeBranch::SameList] {
            for y in [0.0, 1.0] {
                let cg = head_cost(Head::Promil, branch, &[0.37], 0.3, y, DEFAULT_EPS).unwrap();
                let (dq, d1) = cost_gradients(
                    0.37,
                    if branch == NegativeBranch::Complement { 0.63 } else { 0.37 },
                    y,
                )
                .unwrap();
                let sign = if branch == NegativeBranch::Complement { -1.0 } else { 1.0 };
                assert!((cg.upstream[0] - (dq + sign * d1)).abs() < 1e-12);
                assert!(cg.grad_q.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn complement_branch_is_bce_on_cq() {
        let preds = [0.2, 0.9, 0.55, 0.4, 0.71];
        let q = 0.35;
        let sorted = SortedPredictions::from_unsorted(&preds).unwrap();
        let cq = crate::bernstein::estimate_quantile(&sorted, q, DEFAULT_EPS).unwrap();
        let cg = head_cost(Head::Promil, NegativeBranch::Complement, &preds, q, 0.0, DEFAULT_EPS).unwrap();
        assert!((cg.cost + (1.0 - cq).ln()).abs() < 1e-12);
    }

    #[test]
    fn adam_examples() {
        let hp = AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        };
        let mut p = 1.5;
        let mut m = Moments::default();
        adam_update(&mut p, 0.0, &mut m, &hp, 1, true);
        assert_eq!(p, 1.5);

        // t = 1: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        let g = 0.02;
        let mut p = 0.0;
        let mut m = Moments::default();
        adam_update(&mut p, g, &mut m, &hp, 1, false);
        assert!((p + 1e-3 * g / (g + 1e-8)).abs() < 1e-15);
        let first = p;
        adam_update(&mut p, g, &mut m, &hp, 2, false);
        assert!(p < first);

        let hp = AdamHyper { weight_decay: 0.1, ..hp };
        let mut w = 2.0;
        adam_update(&mut w, 0.0, &mut Moments::default(), &hp, 1, true);
        assert!((w - (2.0 - 1e-3 * 0.1 * 2.0)).abs() < 1e-15);
    }

    fn tiny_setup() -> (NetArch, DatasetSplit) {
        let spec = SyntheticSpec {
            n_bags: 60,
            ..SyntheticSpec::default()
        };
        let bags = generate_synthetic(&spec, 3).unwrap();
        let split = split_dataset(bags, [0.6, 0.2, 0.2], 3).unwrap();
        (
            NetArch {
                input_dim: 2,
                hidden_dims: vec![4],
                activation: Activation::Tanh,
            },
            split,
        )
    }

    #[test]
    fn patience_zero_stops_after_first_epoch() {
        let (arch, split) = tiny_setup();
        let cfg = TrainConfig {
            patience: 0,
            max_epochs: 5,
            ..TrainConfig::default()
        };
        let t = train(TrainState::init(&arch, &cfg).unwrap(), &split, &cfg).unwrap();
        assert_eq!(t.epochs_run, 1);
        assert_eq!(t.best_epoch, 1);
    }

    #[test]
    fn identical_seeds_identical_models() {
        let (arch, split) = tiny_setup();
        let cfg = TrainConfig {
            max_epochs: 3,
            patience: 3,
            learning_rate: 1e-2,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(TrainState::init(&arch, &cfg).unwrap(), &split, &cfg).unwrap();
        let b = train(TrainState::init(&arch, &cfg).unwrap(), &split, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn baselines_leave_q_untouched() {
        let (arch, split) = tiny_setup();
        for head in [Head::Max, Head::Mean] {
            let cfg = TrainConfig {
                head,
                max_epochs: 2,
                patience: 2,
                learning_rate: 1e-2,
                ..TrainConfig::default()
            };
            let s = TrainState::init(&arch, &cfg).unwrap();
            let q0 = s.q;
            let t = train(s, &split, &cfg).unwrap();
            assert_eq!(t.model.q, q0);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "learning_rate"));
        let cfg = TrainConfig {
            q_init: QInit::Fixed(1.2),
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn q_init_parses_keyword_or_number() {
        #[derive(Deserialize)]
        struct W {
            q_init: QInit,
        }
        let w: W = toml::from_str("q_init = \"random\"").unwrap();
        assert_eq!(w.q_init, QInit::RANDOM);
        let w: W = toml::from_str("q_init = 0.25").unwrap();
        assert_eq!(w.q_init, QInit::Fixed(0.25));
    }
}
