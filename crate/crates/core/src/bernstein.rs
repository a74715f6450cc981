//! Bernstein polynomial quantile estimator over sorted predictions.
//!
//! For ascending values `p_0 <= p_1 <= ... <= p_n` and a level `q` in (0, 1)
//! the estimate is
//!
//! ```text
//! p_q = sum_k C(n, k) * q^(n-k) * (1-q)^k * p_k
//! ```
//!
//! The index weights are the Binomial(n, 1-q) probabilities, so the estimate
//! puts its mass around the `n * (1 - q)`-th order statistic: small `q` tends
//! to the maximum and `q` close to one tends to the minimum.
//!
//! Everything is evaluated in log space. Binomial coefficients come from the
//! log-gamma function and the weighted sum is a single `logsumexp`, which keeps
//! the estimator finite for bags with tens of thousands of instances.

use crate::error::{Error, Result};

/// Lower clamp applied to each value before taking its logarithm.
pub const DEFAULT_EPS: f64 = 1e-7;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(sum(exp(xs)))`, shifted by the maximum. Returns `-inf` for an empty
/// slice or when every term is `-inf`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Predictions in ascending order together with the permutation that maps a
/// sorted position back to the index of the instance in its bag.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedPredictions {
    values: Vec<f64>,
    permutation: Vec<usize>,
}

impl SortedPredictions {
    /// Stable ascending sort. Ties keep their original relative order so the
    /// permutation is deterministic.
    pub fn from_unsorted(preds: &[f64]) -> Result<Self> {
        check_unit_interval(preds)?;
        let mut permutation: Vec<usize> = (0..preds.len()).collect();
        permutation.sort_by(|&a, &b| preds[a].total_cmp(&preds[b]));
        let values = permutation.iter().map(|&i| preds[i]).collect();
        Ok(Self {
            values,
            permutation,
        })
    }

    /// Wraps values that are already ascending; the permutation is the identity.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        check_unit_interval(&values)?;
        if let Some(k) = values.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::domain(format!(
                "values not ascending at position {}: {} > {}",
                k,
                values[k],
                values[k + 1]
            )));
        }
        let permutation = (0..values.len()).collect();
        Ok(Self {
            values,
            permutation,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Polynomial degree `n`, one less than the number of values.
    pub fn degree(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// Routes per-sorted-position quantities back to original instance order.
    pub fn scatter(&self, sorted: &[f64]) -> Vec<f64> {
        assert_eq!(sorted.len(), self.values.len());
        let mut out = vec![0.0; sorted.len()];
        for (pos, &orig) in self.permutation.iter().enumerate() {
            out[orig] = sorted[pos];
        }
        out
    }

    /// The complementary scores `1 - v`, again in ascending order.
    pub fn complement(&self) -> Self {
        let values = self.values.iter().rev().map(|v| 1.0 - v).collect();
        let permutation = self.permutation.iter().rev().copied().collect();
        Self {
            values,
            permutation,
        }
    }
}

fn check_unit_interval(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::domain(format!(
            "prediction {} at index {} is outside [0, 1]",
            values[i], i
        ))),
        None => Ok(()),
    }
}

const RAW_LIMIT: f64 = 36.0;

/// A quantile level kept strictly inside (0, 1) through a logistic squashing
/// of an unconstrained raw value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileParam {
    raw: f64,
}

impl QuantileParam {
    pub fn from_raw(raw: f64) -> Self {
        Self { raw }
    }

    pub fn from_q(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("q = {q} is not inside (0, 1)")));
        }
        Ok(Self { raw: logit(q) })
    }

    pub fn raw(&self) -> f64 {
        self.raw
    }

    pub fn set_raw(&mut self, raw: f64) {
        self.raw = raw;
    }

    /// Beyond |raw| = 36 the logistic rounds to 0 or 1 in double precision,
    /// so the raw value is saturated there.
    pub fn q(&self) -> f64 {
        logistic(self.raw.clamp(-RAW_LIMIT, RAW_LIMIT))
    }

    /// `dq / draw = q (1 - q)`.
    pub fn dq_draw(&self) -> f64 {
        let q = self.q();
        q * (1.0 - q)
    }
}

/// Log-probabilities `log C(n,k) + (n-k) log q + k log(1-q)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWeights(Vec<f64>);

impl LogWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn weights(&self) -> Vec<f64> {
        self.0.iter().map(|lw| lw.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `log C(n, k)` from log-gamma differences.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let (n, k) = (n as f64, k as f64);
    Ok(libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0))
}

pub fn bernstein_log_weights(n: usize, q: f64) -> Result<LogWeights> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "q = {q} is not inside (0, 1); use estimate_quantile_limit at the boundary"
        )));
    }
    let log_q = q.ln();
    let log_1mq = (-q).ln_1p();
    let lgamma_n = libm::lgamma(n as f64 + 1.0);
    let weights = (0..=n)
        .map(|k| {
            let log_binom = if k == 0 || k == n {
                0.0
            } else {
                lgamma_n - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
            };
            log_binom + (n - k) as f64 * log_q + k as f64 * log_1mq
        })
        .collect();
    Ok(LogWeights(weights))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

fn nonempty(preds: &SortedPredictions) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::domain("quantile of an empty prediction list"));
    }
    Ok(())
}

/// Evaluates the estimator at level `q`. Values below `eps` are raised to
/// `eps` before their logarithm is taken.
pub fn estimate_quantile(preds: &SortedPredictions, q: f64, eps: f64) -> Result<f64> {
    nonempty(preds)?;
    check_eps(eps)?;
    let log_w = bernstein_log_weights(preds.degree(), q)?;
    let terms: Vec<f64> = log_w
        .as_slice()
        .iter()
        .zip(preds.values())
        .map(|(lw, &v)| lw + v.max(eps).ln())
        .collect();
    Ok(logsumexp(&terms).exp())
}

/// Value of the estimator and its partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrad {
    pub value: f64,
    /// Derivative with respect to each sorted value, in sorted order.
    pub grad_values: Vec<f64>,
    pub grad_q: f64,
}

/// Analytic gradients of [`estimate_quantile`].
///
/// The derivative with respect to `p_k` is the weight `w_k` itself (zero for
/// clamped entries). The derivative with respect to `q` is
/// `sum_k w_k p_k ((n-k)/q - k/(1-q))`.
pub fn quantile_gradients(preds: &SortedPredictions, q: f64, eps: f64) -> Result<QuantileGrad> {
    nonempty(preds)?;
    check_eps(eps)?;
    let n = preds.degree();
    let log_w = bernstein_log_weights(n, q)?;
    let terms: Vec<f64> = log_w
        .as_slice()
        .iter()
        .zip(preds.values())
        .map(|(lw, &v)| lw + v.max(eps).ln())
        .collect();
    let value = logsumexp(&terms).exp();

    let mut grad_values = Vec::with_capacity(n + 1);
    let mut grad_q = 0.0;
    for (k, (&lw, &v)) in log_w.as_slice().iter().zip(preds.values()).enumerate() {
        let w = lw.exp();
        grad_values.push(if v > eps { w } else { 0.0 });
        let score = (n - k) as f64 / q - k as f64 / (1.0 - q);
        grad_q += w * v.max(eps) * score;
    }
    Ok(QuantileGrad {
        value,
        grad_values,
        grad_q,
    })
}

/// The estimator at `q = 0` or `q = 1` using `0^0 = 1`: only the maximum
/// (`q = 0`) or the minimum (`q = 1`) keeps a nonzero weight.
pub fn estimate_quantile_limit(preds: &SortedPredictions, q: f64) -> Result<f64> {
    nonempty(preds)?;
    let values = preds.values();
    if q == 0.0 {
        Ok(values[values.len() - 1])
    } else if q == 1.0 {
        Ok(values[0])
    } else {
        Err(Error::domain(format!("limit requested at interior q = {q}")))
    }
}

/// Dispatches to the interior estimator or to the boundary limit.
pub fn estimate_quantile_closed(preds: &SortedPredictions, q: f64, eps: f64) -> Result<f64> {
    if q == 0.0 || q == 1.0 {
        estimate_quantile_limit(preds, q)
    } else {
        estimate_quantile(preds, q, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(v: &[f64]) -> SortedPredictions {
        SortedPredictions::from_sorted(v.to_vec()).unwrap()
    }

    fn log_factorial(n: u64) -> f64 {
        (1..=n).map(|i| (i as f64).ln()).sum()
    }

    #[test]
    fn log_binomial_examples() {
        assert_eq!(log_binomial(5, 0).unwrap(), 0.0);
        assert_eq!(log_binomial(1, 1).unwrap(), 0.0);
        assert!((log_binomial(5, 2).unwrap() - 10f64.ln()).abs() < 1e-13);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_matches_factorial_sums() {
        for n in 0..60u64 {
            for k in 0..=n {
                let exact = log_factorial(n) - log_factorial(k) - log_factorial(n - k);
                let got = log_binomial(n, k).unwrap();
                assert!((got - exact).abs() < 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn log_weights_examples() {
        assert_eq!(bernstein_log_weights(0, 0.3).unwrap().as_slice(), &[0.0]);
        let w = bernstein_log_weights(1, 0.5).unwrap();
        for lw in w.as_slice() {
            assert!((lw - 0.5f64.ln()).abs() < 1e-15);
        }
        // 0.3^2, 2 * 0.3 * 0.7, 0.7^2
        let w = bernstein_log_weights(2, 0.3).unwrap().weights();
        for (got, want) in w.iter().zip([0.09, 0.42, 0.49]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn log_weights_reject_boundary() {
        assert!(bernstein_log_weights(3, 0.0).is_err());
        assert!(bernstein_log_weights(3, 1.0).is_err());
        assert!(bernstein_log_weights(3, f64::NAN).is_err());
    }

    #[test]
    fn log_weights_normalised() {
        for n in 0..=200 {
            for i in 0..=10 {
                let q = if i == 0 { 0.01 } else if i == 10 { 0.99 } else { i as f64 / 10.0 };
                let lse = logsumexp(bernstein_log_weights(n, q).unwrap().as_slice());
                assert!(lse.abs() < 1e-10, "n={n} q={q} lse={lse}");
            }
        }
    }

    #[test]
    fn estimate_examples() {
        assert!((estimate_quantile(&sorted(&[0.7]), 0.4, DEFAULT_EPS).unwrap() - 0.7).abs() < 1e-15);
        for q in [0.05, 0.3, 0.77] {
            let v = estimate_quantile(&sorted(&[0.4; 4]), q, DEFAULT_EPS).unwrap();
            assert!((v - 0.4).abs() < 1e-14);
        }
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let v = estimate_quantile(&sorted(&grid), 0.3, DEFAULT_EPS).unwrap();
        assert!((v - 0.7).abs() < 1e-12, "{v}");
    }

    #[test]
    fn estimate_known_value() {
        // C(2,k) 0.25^(2-k) 0.75^k: 0.0625 * 0.1 + 0.375 * 0.2 + 0.5625 * 0.9
        let v = estimate_quantile(&sorted(&[0.1, 0.2, 0.9]), 0.25, DEFAULT_EPS).unwrap();
        assert!((v - 0.5875).abs() < 1e-14, "{v}");
    }

    #[test]
    fn empty_is_an_error() {
        let empty = sorted(&[]);
        assert!(estimate_quantile(&empty, 0.5, DEFAULT_EPS).is_err());
        assert!(quantile_gradients(&empty, 0.5, DEFAULT_EPS).is_err());
        assert!(estimate_quantile_limit(&empty, 0.0).is_err());
    }

    #[test]
    fn limits() {
        let p = sorted(&[0.1, 0.5, 0.9]);
        assert_eq!(estimate_quantile_limit(&p, 0.0).unwrap(), 0.9);
        assert_eq!(estimate_quantile_limit(&p, 1.0).unwrap(), 0.1);
        assert_eq!(estimate_quantile_limit(&sorted(&[0.33]), 0.0).unwrap(), 0.33);
        assert!(estimate_quantile_limit(&p, 0.5).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = quantile_gradients(&sorted(&[0.7]), 0.4, DEFAULT_EPS).unwrap();
        assert_eq!(g.grad_values, vec![1.0]);
        assert_eq!(g.grad_q, 0.0);

        let g = quantile_gradients(&sorted(&[0.6; 7]), 0.35, DEFAULT_EPS).unwrap();
        assert!(g.grad_q.abs() < 1e-13, "{}", g.grad_q);
    }

    #[test]
    fn clamped_values_get_zero_gradient() {
        let g = quantile_gradients(&sorted(&[0.0, 1e-9, 0.5]), 0.4, DEFAULT_EPS).unwrap();
        assert_eq!(g.grad_values[0], 0.0);
        assert_eq!(g.grad_values[1], 0.0);
        assert!(g.grad_values[2] > 0.0);
        let v = estimate_quantile(&sorted(&[0.0, 1e-9, 0.5]), 0.4, DEFAULT_EPS).unwrap();
        assert!((g.value - v).abs() < 1e-15);
    }

    #[test]
    fn sorting_records_stable_permutation() {
        let s = SortedPredictions::from_unsorted(&[0.5, 0.1, 0.5, 0.2]).unwrap();
        assert_eq!(s.values(), &[0.1, 0.2, 0.5, 0.5]);
        assert_eq!(s.permutation(), &[1, 3, 0, 2]);
        assert_eq!(s.scatter(&[10.0, 20.0, 30.0, 40.0]), vec![30.0, 10.0, 40.0, 20.0]);
    }

    #[test]
    fn rejects_out_of_range_and_unsorted() {
        assert!(SortedPredictions::from_unsorted(&[0.2, 1.5]).is_err());
        assert!(SortedPredictions::from_unsorted(&[f64::NAN]).is_err());
        assert!(SortedPredictions::from_sorted(vec![0.3, 0.2]).is_err());
    }

    #[test]
    fn complement_reverses() {
        let s = SortedPredictions::from_unsorted(&[0.5, 0.1, 0.8]).unwrap();
        let c = s.complement();
        assert_eq!(c.values(), &[0.19999999999999996, 0.5, 0.9]);
        assert_eq!(c.permutation(), &[2, 0, 1]);
    }

    #[test]
    fn quantile_param_interior() {
        for raw in [-1e300, -800.0, -30.0, 0.0, 30.0, 40.0, 1e300] {
            let q = QuantileParam::from_raw(raw).q();
            assert!(q > 0.0 && q < 1.0, "raw={raw} q={q}");
        }
        let p = QuantileParam::from_q(0.3).unwrap();
        assert!((p.q() - 0.3).abs() < 1e-15);
        assert!(QuantileParam::from_q(1.0).is_err());
    }

    #[test]
    fn logsumexp_edge_cases() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = logsumexp(&[1234.0, 1232.0]);
        assert!((v - 1234.126928011042972496444).abs() < 1e-12);
    }
}
