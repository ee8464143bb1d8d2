//! Fully-connected networks: forward passes, inverted dropout, and exact
//! reverse-mode parameter gradients.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scale of the self-normalizing exponential linear unit.
pub const SELU_LAMBDA: f64 = 1.0507009873554805;
/// Negative-side saturation of the self-normalizing exponential linear unit.
pub const SELU_ALPHA: f64 = 1.6732632423543772;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("forward cache does not match this network")]
    StaleCache,
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("non-finite parameter in layer {0}")]
    NonFiniteParameter(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Selu,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 4] =
        [Activation::Selu, Activation::Relu, Activation::Tanh, Activation::Sigmoid];

    /// Value and derivative at `x`. At the kink of selu the derivative is
    /// taken from the right (λ); relu uses 0.
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Selu => {
                if x > 0.0 {
                    (SELU_LAMBDA * x, SELU_LAMBDA)
                } else if x == 0.0 {
                    (0.0, SELU_LAMBDA)
                } else {
                    let e = x.exp();
                    (SELU_LAMBDA * SELU_ALPHA * (e - 1.0), SELU_LAMBDA * SELU_ALPHA * e)
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                (s, s * (1.0 - s))
            }
        }
    }

    #[inline]
    fn value(self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Selu => "selu",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "selu" => Ok(Activation::Selu),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(format!("unknown activation `{other}` (selu|relu|tanh|sigmoid)")),
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Bias on hidden layers; the output layer always has one.
    pub bias: bool,
    /// Per-node drop probability on hidden layers.
    pub dropout: f64,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.hidden.contains(&0) {
            return Err(NetworkError::InvalidConfig("hidden widths must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NetworkError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NetworkError::InvalidConfig("input and output dims must be >= 1".into()));
        }
        Ok(())
    }

    /// `(out, in)` shape of every weight matrix, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }

    fn layer_has_bias(&self, layer: usize) -> bool {
        self.bias || layer == self.hidden.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`.
    pub weight: Array2<f64>,
    pub bias: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    config: NetworkConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Intermediate values of one forward pass, consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input seen by each layer (after activation and dropout of the previous one).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Array2<f64>>,
    /// Inverted-dropout masks per hidden layer, `{0, 1/(1-p)}` valued.
    masks: Vec<Option<Array2<f64>>>,
}

impl ForwardCache {
    pub fn masks(&self) -> &[Option<Array2<f64>>] {
        &self.masks
    }

    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: l.bias.as_ref().map(|b| Array1::zeros(b.len())),
                })
                .collect(),
        }
    }

    /// Same ordering as [`Network::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            if let (Some(x), Some(y)) = (a.bias.as_mut(), b.bias.as_ref()) {
                *x += y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weight.iter().all(|v| v.is_finite())
                && l.bias.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()))
        })
    }
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weight.iter());
        if let Some(b) = &l.bias {
            out.extend(b.iter());
        }
    }
    out
}

impl Network {
    /// LeCun-normal weights (variance `1/fan_in`), zero biases.
    pub fn init<R: Rng + ?Sized>(config: NetworkConfig, rng: &mut R) -> Result<Self, NetworkError> {
        config.validate()?;
        let layers = config
            .layer_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (out, inp))| {
                let normal = Normal::new(0.0, (1.0 / inp as f64).sqrt()).expect("positive sd");
                let weight = Array2::from_shape_simple_fn((out, inp), || normal.sample(rng));
                let bias = config.layer_has_bias(i).then(|| Array1::zeros(out));
                Layer { weight, bias }
            })
            .collect();
        Ok(Network { layers, config })
    }

    /// All parameters zero.
    pub fn zeros(config: NetworkConfig) -> Result<Self, NetworkError> {
        config.validate()?;
        let layers = config
            .layer_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (out, inp))| Layer {
                weight: Array2::zeros((out, inp)),
                bias: config.layer_has_bias(i).then(|| Array1::zeros(out)),
            })
            .collect();
        Ok(Network { layers, config })
    }

    /// Builds a network from explicit layers, checking shapes and finiteness.
    pub fn from_layers(config: NetworkConfig, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(NetworkError::ShapeMismatch(format!(
                "expected {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (i, (layer, &(out, inp))) in layers.iter().zip(&shapes).enumerate() {
            if layer.weight.dim() != (out, inp) {
                return Err(NetworkError::ShapeMismatch(format!(
                    "layer {i}: weight {:?}, expected {:?}",
                    layer.weight.dim(),
                    (out, inp)
                )));
            }
            match (&layer.bias, config.layer_has_bias(i)) {
                (Some(b), true) if b.len() == out => {}
                (None, false) => {}
                _ => {
                    return Err(NetworkError::ShapeMismatch(format!("layer {i}: bias shape")));
                }
            }
            let finite = layer.weight.iter().all(|v| v.is_finite())
                && layer.bias.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(NetworkError::NonFiniteParameter(i));
            }
        }
        Ok(Network { layers, config })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.as_ref().map_or(0, |b| b.len())).sum()
    }

    /// Flattened parameters: per layer, row-major weights then bias.
    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    /// A copy of this network with parameters replaced from a flat vector.
    pub fn with_parameters(&self, params: &[f64]) -> Result<Network, NetworkError> {
        if params.len() != self.n_parameters() {
            return Err(NetworkError::ShapeMismatch(format!(
                "{} parameters, expected {}",
                params.len(),
                self.n_parameters()
            )));
        }
        let mut net = self.clone();
        let mut it = params.iter().copied();
        for l in &mut net.layers {
            l.weight.iter_mut().for_each(|w| *w = it.next().unwrap());
            if let Some(b) = &mut l.bias {
                b.iter_mut().for_each(|v| *v = it.next().unwrap());
            }
        }
        Ok(net)
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weight.iter().all(|v| v.is_finite())
                && l.bias.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()))
        })
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), NetworkError> {
        if x.ncols() != self.config.input_dim {
            return Err(NetworkError::ShapeMismatch(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    fn affine(layer: &Layer, input: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = input.dot(&layer.weight.t());
        if let Some(b) = &layer.bias {
            z += b;
        }
        z
    }

    /// Forward pass. In train mode hidden activations are masked with inverted
    /// dropout; in eval mode `rng` is never touched.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array2<f64>, ForwardCache), NetworkError> {
        self.check_input(&x)?;
        let n_hidden = self.config.hidden.len();
        let p = self.config.dropout;
        let act = self.config.activation;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(n_hidden),
            masks: Vec::with_capacity(n_hidden),
        };
        let mut current = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = Self::affine(layer, &current.view());
            cache.inputs.push(current);
            if i == n_hidden {
                return Ok((z, cache));
            }
            let mut a = z.mapv(|v| act.value(v));
            let mask = if mode == Mode::Train && p > 0.0 {
                let keep = 1.0 / (1.0 - p);
                let m = Array2::from_shape_simple_fn(a.raw_dim(), || {
                    if rng.random::<f64>() < p {
                        0.0
                    } else {
                        keep
                    }
                });
                a *= &m;
                Some(m)
            } else {
                None
            };
            cache.pre.push(z);
            cache.masks.push(mask);
            current = a;
        }
        unreachable!("output layer returns")
    }

    /// Eval-mode forward without bookkeeping: link-scale outputs.
    pub fn predict_link(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NetworkError> {
        self.check_input(&x)?;
        let n_hidden = self.config.hidden.len();
        let act = self.config.activation;
        let mut current = Self::affine(&self.layers[0], &x);
        for layer in &self.layers[1..=n_hidden] {
            current.mapv_inplace(|v| act.value(v));
            current = Self::affine(layer, &current.view());
        }
        Ok(current)
    }

    /// Exact parameter gradients of `sum(grad_output ⊙ output)` through the
    /// function evaluated by the matching [`Network::forward`] call.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: ArrayView2<f64>,
    ) -> Result<Gradients, NetworkError> {
        let n_layers = self.layers.len();
        if cache.inputs.len() != n_layers || cache.pre.len() != n_layers - 1 {
            return Err(NetworkError::StaleCache);
        }
        for (layer, input) in self.layers.iter().zip(&cache.inputs) {
            if input.ncols() != layer.weight.ncols() {
                return Err(NetworkError::StaleCache);
            }
        }
        let n = cache.inputs[0].nrows();
        if grad_output.dim() != (n, self.config.output_dim) {
            return Err(NetworkError::ShapeMismatch(format!(
                "grad_output {:?}, expected {:?}",
                grad_output.dim(),
                (n, self.config.output_dim)
            )));
        }

        let act = self.config.activation;
        let mut grads = Vec::with_capacity(n_layers);
        let mut delta = grad_output.to_owned();
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let weight = delta.t().dot(&cache.inputs[l]);
            let bias = layer.bias.as_ref().map(|_| delta.sum_axis(Axis(0)));
            grads.push(Layer { weight, bias });
            if l == 0 {
                break;
            }
            let mut d_input = delta.dot(&layer.weight);
            if let Some(mask) = &cache.masks[l - 1] {
                d_input *= mask;
            }
            Zip::from(&mut d_input)
                .and(&cache.pre[l - 1])
                .for_each(|d, &z| *d *= act.eval(z).1);
            delta = d_input;
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(hidden: Vec<usize>, input: usize, output: usize) -> NetworkConfig {
        NetworkConfig {
            hidden,
            activation: Activation::Selu,
            bias: true,
            dropout: 0.0,
            input_dim: input,
            output_dim: output,
        }
    }

    #[test]
    fn activation_values() {
        assert_eq!(Activation::Selu.eval(0.0), (0.0, 1.0507009873554805));
        assert_eq!(Activation::Selu.eval(1.0), (1.0507009873554805, 1.0507009873554805));
        assert_eq!(Activation::Relu.eval(-1.0), (0.0, 0.0));
        assert_eq!(Activation::Sigmoid.eval(0.0), (0.5, 0.25));
        assert_eq!(Activation::Tanh.eval(0.0), (0.0, 1.0));
        let (v, d) = Activation::Selu.eval(-1.0);
        assert!((v - SELU_LAMBDA * SELU_ALPHA * ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((d - SELU_LAMBDA * SELU_ALPHA * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn init_shapes_default_architecture() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::init(config(vec![50, 50], 19, 1), &mut rng).unwrap();
        let shapes: Vec<_> = net.layers().iter().map(|l| l.weight.dim()).collect();
        assert_eq!(shapes, vec![(50, 19), (50, 50), (1, 50)]);
        assert!(net.layers().iter().all(|l| l.bias.as_ref().unwrap().iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_is_deterministic() {
        let a = Network::init(config(vec![5, 3], 4, 2), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = Network::init(config(vec![5, 3], 4, 2), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_hidden_layers_is_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Network::init(config(vec![], 3, 2), &mut rng).unwrap();
        assert_eq!(net.layers().len(), 1);
        assert_eq!(net.layers()[0].weight.dim(), (2, 3));
    }

    #[test]
    fn hidden_bias_flag_respected_output_keeps_bias() {
        let mut cfg = config(vec![4], 2, 1);
        cfg.bias = false;
        let net = Network::init(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(net.layers()[0].bias.is_none());
        assert!(net.layers()[1].bias.is_some());
    }

    #[test]
    fn invalid_configs() {
        assert!(config(vec![0], 1, 1).validate().is_err());
        let mut c = config(vec![2], 1, 1);
        c.dropout = 1.0;
        assert!(c.validate().is_err());
        assert!(config(vec![2], 0, 1).validate().is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::zeros(config(vec![3, 3], 2, 1)).unwrap();
        let x = array![[1.0, -2.0], [3.5, 0.1]];
        assert_eq!(net.predict_link(x.view()).unwrap(), Array2::<f64>::zeros((2, 1)));
    }

    #[test]
    fn dropout_zero_train_equals_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::init(config(vec![6, 4], 3, 2), &mut rng).unwrap();
        let x = array![[0.1, 0.2, -0.3], [1.0, -1.0, 0.5]];
        let (train, _) = net.forward(x.view(), Mode::Train, &mut rng).unwrap();
        let eval = net.predict_link(x.view()).unwrap();
        assert_eq!(train, eval);
    }

    #[test]
    fn masks_take_two_values() {
        let mut cfg = config(vec![16], 2, 1);
        cfg.dropout = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::init(cfg, &mut rng).unwrap();
        let x = Array2::from_elem((8, 2), 0.5);
        let (_, cache) = net.forward(x.view(), Mode::Train, &mut rng).unwrap();
        let mask = cache.masks()[0].as_ref().unwrap();
        assert!(mask.iter().all(|&m| m == 0.0 || m == 1.0 / 0.75));
    }

    #[test]
    fn single_linear_layer_gradient() {
        let mut net = Network::zeros(config(vec![], 2, 1)).unwrap();
        net.layers_mut()[0].weight = array![[0.3, -0.7]];
        let x = array![[1.0, 2.0], [-1.0, 0.5]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, cache) = net.forward(x.view(), Mode::Train, &mut rng).unwrap();
        let g = array![[2.0], [3.0]];
        let grads = net.backward(&cache, g.view()).unwrap();
        assert_eq!(grads.layers[0].weight, array![[2.0 - 3.0, 4.0 + 1.5]]);
        assert_eq!(grads.layers[0].bias.as_ref().unwrap(), &array![5.0]);
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::init(config(vec![4, 4], 3, 2), &mut rng).unwrap();
        let x = Array2::from_elem((3, 3), 0.2);
        let (_, cache) = net.forward(x.view(), Mode::Train, &mut rng).unwrap();
        let grads = net.backward(&cache, Array2::zeros((3, 2)).view()).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn stale_cache_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = Network::init(config(vec![4], 3, 1), &mut rng).unwrap();
        let b = Network::init(config(vec![4, 4], 3, 1), &mut rng).unwrap();
        let x = Array2::zeros((2, 3));
        let (_, cache) = a.forward(x.view(), Mode::Train, &mut rng).unwrap();
        assert_eq!(b.backward(&cache, Array2::zeros((2, 1)).view()), Err(NetworkError::StaleCache));
    }

    #[test]
    fn shape_mismatch_on_input() {
        let net = Network::zeros(config(vec![2], 3, 1)).unwrap();
        assert!(matches!(
            net.predict_link(Array2::zeros((1, 2)).view()),
            Err(NetworkError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn gradients_additive_over_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Network::init(config(vec![5, 3], 2, 1), &mut rng).unwrap();
        let x = array![[0.3, -1.2], [0.8, 0.4]];
        let g = array![[0.7], [-1.1]];
        let (_, both) = net.forward(x.view(), Mode::Eval, &mut rng).unwrap();
        let total = net.backward(&both, g.view()).unwrap().flatten();
        let mut sum = vec![0.0; total.len()];
        for r in 0..2 {
            let (_, c) = net.forward(x.slice(ndarray::s![r..r + 1, ..]), Mode::Eval, &mut rng).unwrap();
            let part = net.backward(&c, g.slice(ndarray::s![r..r + 1, ..])).unwrap().flatten();
            sum.iter_mut().zip(part).for_each(|(s, p)| *s += p);
        }
        for (a, b) in total.iter().zip(&sum) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = Network::init(config(vec![3], 2, 2), &mut rng).unwrap();
        let p = net.parameters();
        assert_eq!(p.len(), net.n_parameters());
        assert_eq!(net.with_parameters(&p).unwrap(), net);
    }
}
