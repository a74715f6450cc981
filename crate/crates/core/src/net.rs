//! Instance classifier: a small fully connected network ending in a single
//! logistic unit, with a hand-written backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bagdata::Bag;
use crate::bernstein::logistic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetArch {
    pub input_dim: usize,
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
}

impl NetArch {
    pub fn logistic_regression(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: Vec::new(),
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("input_dim", "must be positive"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::config("hidden_dims", "every layer width must be positive"));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every dense layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(1);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// One dense layer. `weights` is row-major with shape `fan_out x fan_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.fan_in)
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub arch: NetArch,
    pub layers: Vec<Layer>,
}

/// Gradients share the parameter layout.
pub type NetParamGrads = NetParams;

impl NetParams {
    pub fn zeros(arch: &NetArch) -> Self {
        let layers = arch
            .layer_shapes()
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        Self {
            arch: arch.clone(),
            layers,
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Weights then biases, layer by layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    /// Inverse of [`NetParams::flatten`].
    pub fn from_flat(arch: &NetArch, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(arch);
        if flat.len() != params.num_params() {
            return Err(Error::domain(format!(
                "expected {} parameters, got {}",
                params.num_params(),
                flat.len()
            )));
        }
        let mut rest = flat;
        for l in &mut params.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(params)
    }

    /// Visits every scalar parameter as `(is_weight, &mut value)`.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(bool, &mut f64)) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| f(true, w));
            l.biases.iter_mut().for_each(|b| f(false, b));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_shape(&self) -> Result<()> {
        let shapes = self.arch.layer_shapes();
        let ok = shapes.len() == self.layers.len()
            && shapes.iter().zip(&self.layers).all(|(&(i, o), l)| {
                l.fan_in == i && l.fan_out == o && l.weights.len() == i * o && l.biases.len() == o
            });
        if ok {
            Ok(())
        } else {
            Err(Error::domain("parameter shapes do not match the architecture"))
        }
    }

    fn add_assign(&mut self, other: &NetParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.biases.iter_mut().zip(&b.biases).for_each(|(x, y)| *x += y);
        }
    }
}

/// Uniform weights in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
pub fn init_params(arch: &NetArch, seed: u64) -> Result<NetParams> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetParams::zeros(arch);
    for l in &mut params.layers {
        let bound = 1.0 / (l.fan_in as f64).sqrt();
        for w in &mut l.weights {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(params)
}

/// Per-layer values cached for one instance.
#[derive(Debug, Clone)]
struct InstanceTrace {
    /// Input to each layer; `inputs[0]` is the instance itself.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Vec<f64>>,
    output: f64,
}

#[derive(Debug, Clone)]
pub struct BagForwardTrace {
    arch: NetArch,
    instances: Vec<InstanceTrace>,
}

impl BagForwardTrace {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn predictions(&self) -> Vec<f64> {
        self.instances.iter().map(|t| t.output).collect()
    }
}

// Keeps outputs strictly inside (0, 1) once the logistic saturates.
fn squash(z: f64) -> f64 {
    logistic(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn trace_instance(params: &NetParams, x: &[f64]) -> Result<InstanceTrace> {
    if x.len() != params.arch.input_dim {
        return Err(Error::domain(format!(
            "instance has {} features, network expects {}",
            x.len(),
            params.arch.input_dim
        )));
    }
    let act = params.arch.activation;
    let last = params.layers.len() - 1;
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(last);
    let mut current = x.to_vec();
    for layer in &params.layers[..last] {
        let z = layer.affine(&current);
        let a = z.iter().map(|&v| act.apply(v)).collect();
        inputs.push(std::mem::replace(&mut current, a));
        pre.push(z);
    }
    let z = params.layers[last].affine(&current)[0];
    inputs.push(current);
    Ok(InstanceTrace {
        inputs,
        pre,
        output: squash(z),
    })
}

pub fn forward_instance(params: &NetParams, x: &[f64]) -> Result<f64> {
    params.check_shape()?;
    Ok(trace_instance(params, x)?.output)
}

pub fn forward_bag(params: &NetParams, bag: &Bag) -> Result<(Vec<f64>, BagForwardTrace)> {
    forward_instances(params, &bag.instances)
}

pub fn forward_instances(
    params: &NetParams,
    instances: &[Vec<f64>],
) -> Result<(Vec<f64>, BagForwardTrace)> {
    if instances.is_empty() {
        return Err(Error::domain("empty bag"));
    }
    params.check_shape()?;
    let traces = instances
        .iter()
        .map(|x| trace_instance(params, x))
        .collect::<Result<Vec<_>>>()?;
    let trace = BagForwardTrace {
        arch: params.arch.clone(),
        instances: traces,
    };
    Ok((trace.predictions(), trace))
}

/// Gradients of `sum_i upstream[i] * c_i` with respect to every parameter.
pub fn backward_bag(
    params: &NetParams,
    trace: &BagForwardTrace,
    upstream: &[f64],
) -> Result<NetParamGrads> {
    params.check_shape()?;
    if trace.arch != params.arch {
        return Err(Error::domain("trace was recorded with a different architecture"));
    }
    if upstream.len() != trace.len() {
        return Err(Error::domain(format!(
            "upstream has {} entries for a bag of {}",
            upstream.len(),
            trace.len()
        )));
    }
    let act = params.arch.activation;
    let mut grads = NetParams::zeros(&params.arch);
    let mut scratch = NetParams::zeros(&params.arch);
    for (t, &up) in trace.instances.iter().zip(upstream) {
        if up == 0.0 {
            continue;
        }
        let c = t.output;
        let mut delta = vec![up * c * (1.0 - c)];
        for li in (0..params.layers.len()).rev() {
            let layer = &params.layers[li];
            let g = &mut scratch.layers[li];
            let input = &t.inputs[li];
            for (o, &d) in delta.iter().enumerate() {
                g.biases[o] = d;
                for (w, &x) in g.weights[o * layer.fan_in..(o + 1) * layer.fan_in]
                    .iter_mut()
                    .zip(input)
                {
                    *w = d * x;
                }
            }
            if li == 0 {
                break;
            }
            let z = &t.pre[li - 1];
            delta = (0..layer.fan_in)
                .map(|j| {
                    let back: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(o, &d)| d * layer.weights[o * layer.fan_in + j])
                        .sum();
                    back * act.derivative(z[j], input[j])
                })
                .collect();
        }
        grads.add_assign(&scratch);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(input_dim: usize, hidden: &[usize], activation: Activation) -> NetArch {
        NetArch {
            input_dim,
            hidden_dims: hidden.to_vec(),
            activation,
        }
    }

    fn random_bag(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn init_is_deterministic() {
        let a = arch(4, &[8, 3], Activation::Tanh);
        assert_eq!(init_params(&a, 7).unwrap(), init_params(&a, 7).unwrap());
        assert_ne!(init_params(&a, 0).unwrap(), init_params(&a, 1).unwrap());
    }

    #[test]
    fn logistic_regression_shape() {
        let p = init_params(&NetArch::logistic_regression(3), 0).unwrap();
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0].weights.len(), 3);
        assert_eq!(p.layers[0].biases, vec![0.0]);
    }

    #[test]
    fn zero_params_give_one_half() {
        let p = NetParams::zeros(&arch(3, &[4], Activation::Relu));
        assert_eq!(forward_instance(&p, &[1.0, -2.0, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn logistic_regression_value() {
        let mut p = NetParams::zeros(&NetArch::logistic_regression(2));
        p.layers[0].weights = vec![1.0, 0.0];
        let c = forward_instance(&p, &[2.0, 5.0]).unwrap();
        assert!((c - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!((c - 0.880797).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        let p = NetParams::zeros(&NetArch::logistic_regression(2));
        assert!(forward_instance(&p, &[1.0]).is_err());
        assert!(forward_instances(&p, &[]).is_err());
    }

    #[test]
    fn outputs_strictly_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = arch(3, &[5], Activation::Relu);
        for s in 0..1000 {
            let mut p = init_params(&a, s).unwrap();
            p.for_each_mut(|_, v| *v *= 50.0);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-100.0..100.0)).collect();
            let c = forward_instance(&p, &x).unwrap();
            assert!(c > 0.0 && c < 1.0, "{c}");
        }
    }

    #[test]
    fn bag_forward_matches_instances_and_permutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = init_params(&arch(4, &[6], Activation::Tanh), 2).unwrap();
        let bag = random_bag(&mut rng, 3, 4);
        let (preds, trace) = forward_instances(&p, &bag).unwrap();
        assert_eq!(trace.len(), 3);
        for (x, c) in bag.iter().zip(&preds) {
            assert_eq!(forward_instance(&p, x).unwrap(), *c);
        }
        let rev: Vec<_> = bag.iter().rev().cloned().collect();
        let (rp, _) = forward_instances(&p, &rev).unwrap();
        assert_eq!(rp, preds.iter().rev().copied().collect::<Vec<_>>());
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = init_params(&arch(3, &[4], Activation::Relu), 0).unwrap();
        let (_, trace) = forward_instances(&p, &random_bag(&mut rng, 4, 3)).unwrap();
        let g = backward_bag(&p, &trace, &[0.0; 4]).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
        assert!(backward_bag(&p, &trace, &[0.0; 3]).is_err());
    }

    #[test]
    fn single_instance_closed_form() {
        let mut p = NetParams::zeros(&NetArch::logistic_regression(2));
        p.layers[0].weights = vec![0.3, -0.7];
        p.layers[0].biases = vec![0.1];
        let x = vec![1.5, 0.4];
        let (preds, trace) = forward_instances(&p, std::slice::from_ref(&x)).unwrap();
        let c = preds[0];
        let up = -1.7;
        let g = backward_bag(&p, &trace, &[up]).unwrap();
        for (gw, xi) in g.layers[0].weights.iter().zip(&x) {
            assert!((gw - up * c * (1.0 - c) * xi).abs() < 1e-15);
        }
        assert!((g.layers[0].biases[0] - up * c * (1.0 - c)).abs() < 1e-15);
    }

    fn weighted_output(p: &NetParams, bag: &[Vec<f64>], up: &[f64]) -> f64 {
        bag.iter()
            .zip(up)
            .map(|(x, u)| u * forward_instance(p, x).unwrap())
            .sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let configs: [(usize, &[usize], Activation); 4] = [
            (2, &[], Activation::Relu),
            (5, &[7], Activation::Tanh),
            (8, &[16, 8], Activation::Tanh),
            (3, &[6, 4], Activation::Relu),
        ];
        for (seed, (dim, hidden, act)) in configs.into_iter().enumerate() {
            let p = init_params(&arch(dim, hidden, act), seed as u64).unwrap();
            let bag = random_bag(&mut rng, 3, dim);
            let up: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (_, trace) = forward_instances(&p, &bag).unwrap();
            let analytic = backward_bag(&p, &trace, &up).unwrap().flatten();
            let flat = p.flatten();
            let h = 1e-6;
            for i in 0..flat.len() {
                let mut plus = flat.clone();
                plus[i] += h;
                let mut minus = flat.clone();
                minus[i] -= h;
                let fp = weighted_output(&NetParams::from_flat(&p.arch, &plus).unwrap(), &bag, &up);
                let fm = weighted_output(&NetParams::from_flat(&p.arch, &minus).unwrap(), &bag, &up);
                let numeric = (fp - fm) / (2.0 * h);
                let err = (analytic[i] - numeric).abs() / numeric.abs().max(analytic[i].abs()).max(1e-6);
                assert!(err < 1e-4, "param {i}: analytic {} numeric {numeric}", analytic[i]);
            }
        }
    }

    #[test]
    fn flatten_round_trip() {
        let p = init_params(&arch(3, &[4, 2], Activation::Relu), 5).unwrap();
        assert_eq!(NetParams::from_flat(&p.arch, &p.flatten()).unwrap(), p);
        assert!(NetParams::from_flat(&p.arch, &[0.0; 3]).is_err());
    }
}
