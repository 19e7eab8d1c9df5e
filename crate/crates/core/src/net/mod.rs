//! Fully connected networks with input derivatives and exact parameter Jacobians.
//!
//! Every neuron carries its value, input gradient and input Laplacian. The
//! Laplacian is propagated directly: a linear layer maps the Laplacians of its
//! inputs linearly, and an activation contributes `s''(a) |grad a|^2 + s'(a) lap a`.
//! Parameter Jacobians come from reverse accumulation through that extended pass.

mod tape;

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use tape::{Adjoints, GramMethod, Tape};

const SELU_LAMBDA: f64 = 1.0507009873554805;
const SELU_ALPHA: f64 = 1.6732632423543772;
const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
    LeakyRelu,
    Elu,
    Selu,
}

impl Activation {
    pub const ALL: [Activation; 6] = [
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::Relu,
        Activation::LeakyRelu,
        Activation::Elu,
        Activation::Selu,
    ];

    /// Whether second-order quantities (Laplacian and its Jacobian) are supported.
    pub fn is_smooth(self) -> bool {
        !matches!(self, Activation::Relu | Activation::LeakyRelu)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Elu => "elu",
            Activation::Selu => "selu",
        }
    }

    /// Value and first three derivatives at `x`.
    #[inline]
    pub fn eval(self, x: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let d1 = 1.0 - t * t;
                [t, d1, -2.0 * t * d1, -2.0 * d1 * (1.0 - 3.0 * t * t)]
            }
            Activation::Sigmoid => {
                let s = if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                };
                let d1 = s * (1.0 - s);
                [s, d1, d1 * (1.0 - 2.0 * s), d1 * (1.0 - 6.0 * s + 6.0 * s * s)]
            }
            Activation::Relu => {
                if x > 0.0 {
                    [x, 1.0, 0.0, 0.0]
                } else {
                    [0.0, 0.0, 0.0, 0.0]
                }
            }
            Activation::LeakyRelu => {
                if x > 0.0 {
                    [x, 1.0, 0.0, 0.0]
                } else {
                    [LEAKY_SLOPE * x, LEAKY_SLOPE, 0.0, 0.0]
                }
            }
            Activation::Elu => {
                if x >= 0.0 {
                    [x, 1.0, 0.0, 0.0]
                } else {
                    let e = x.exp();
                    [e - 1.0, e, e, e]
                }
            }
            Activation::Selu => {
                if x >= 0.0 {
                    [SELU_LAMBDA * x, SELU_LAMBDA, 0.0, 0.0]
                } else {
                    let e = SELU_LAMBDA * SELU_ALPHA * x.exp();
                    [SELU_LAMBDA * SELU_ALPHA * x.exp_m1(), e, e, e]
                }
            }
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown activation {s:?}")))
    }
}

/// Which input derivatives a forward pass carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Laplacian,
}

impl Order {
    /// Rows per point in the batched layout: value, `d` gradient components, Laplacian.
    pub fn components(self, d: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Gradient => 1 + d,
            Order::Laplacian => 2 + d,
        }
    }
}

/// MLP weights and biases. Hidden layers apply the activation; the output layer is affine.
///
/// Flat parameter order: layer by layer, weights row-major (`out x in`) then biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config("a network needs at least input and output sizes".into()));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::Config("layer sizes must be positive".into()));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::Config("output dimension must be 1".into()));
    }
    Ok(())
}

/// Input dimension `d`, `depth` hidden layers of `width`, scalar output.
pub fn mlp_sizes(d: usize, width: usize, depth: usize) -> Vec<usize> {
    let mut s = vec![d];
    s.extend(std::iter::repeat(width).take(depth));
    s.push(1);
    s
}

/// Uniform `[-sqrt(1/fan_in), sqrt(1/fan_in)]` weights and biases.
///
/// Layer `l` draws from ChaCha20 stream `l` of `seed`: all weights row-major, then biases.
/// Each draw is `(next_u64 >> 11) * 2^-53` mapped affinely onto the interval.
pub fn init_kaiming_uniform(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<NetworkParams> {
    validate_sizes(layer_sizes)?;
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for (l, w) in layer_sizes.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (1.0 / fan_in as f64).sqrt();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(l as u64);
        let mut draw = || {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            bound * (2.0 * u - 1.0)
        };
        let wl = Array2::from_shape_fn((fan_out, fan_in), |_| draw());
        let bl = Array1::from_shape_fn(fan_out, |_| draw());
        weights.push(wl);
        biases.push(bl);
    }
    Ok(NetworkParams {
        layer_sizes: layer_sizes.to_vec(),
        activation,
        seed,
        weights,
        biases,
    })
}

#[derive(Serialize, Deserialize)]
struct ParamHeader {
    layer_sizes: Vec<usize>,
    activation: Activation,
    seed: u64,
    n_params: usize,
}

impl NetworkParams {
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            seed: 0,
            weights: layer_sizes.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect(),
            biases: layer_sizes.windows(2).map(|w| Array1::zeros(w[1])).collect(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Flat offset of layer `l`'s first weight; its biases follow the `out x in` weights.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.layer_sizes[..=l].windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", self.n_params(), theta.len())));
        }
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = theta[k];
                k += 1;
            }
            for v in b.iter_mut() {
                *v = theta[k];
                k += 1;
            }
        }
        Ok(())
    }

    pub fn from_flat(&self, theta: &[f64]) -> Result<Self> {
        let mut p = self.clone();
        p.set_flat(theta)?;
        Ok(p)
    }

    /// Writes the flat vector as little-endian `f64` to `path` and a JSON header to `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.n_params());
        for v in self.flatten() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes)?;
        let header = ParamHeader {
            layer_sizes: self.layer_sizes.clone(),
            activation: self.activation,
            seed: self.seed,
            n_params: self.n_params(),
        };
        let mut f = fs::File::create(header_path(path))?;
        writeln!(f, "{}", serde_json::to_string_pretty(&header).expect("header serializes"))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(header_path(path))?;
        let header: ParamHeader =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad parameter header: {e}")))?;
        let bytes = fs::read(path)?;
        if bytes.len() != 8 * header.n_params {
            return Err(Error::Shape(format!(
                "parameter file holds {} bytes, header expects {} parameters",
                bytes.len(),
                header.n_params
            )));
        }
        let theta: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut p = Self::zeros(&header.layer_sizes, header.activation)?;
        p.seed = header.seed;
        p.set_flat(&theta)?;
        Ok(p)
    }
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Network value and input derivatives at one point, with their parameter Jacobians.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub lap: Option<f64>,
    pub jac_value: Vec<f64>,
    /// `d` rows of length `P`.
    pub jac_grad: Vec<Vec<f64>>,
    pub jac_lap: Option<Vec<f64>>,
}

pub fn eval_with_derivatives(params: &NetworkParams, point: &[f64], order: Order) -> Result<PointEval> {
    let mut v = batch_eval(params, &[point.to_vec()], order)?;
    Ok(v.pop().expect("one point"))
}

/// Pointwise [`eval_with_derivatives`] over a list, order preserved.
///
/// `Order::Value` leaves `grad` and `jac_grad` empty.
pub fn batch_eval(params: &NetworkParams, points: &[Vec<f64>], order: Order) -> Result<Vec<PointEval>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let tape = Tape::forward(params, points, order)?;
    let n = points.len();
    let d = params.input_dim();
    let nc = order.components(d);
    let jac = |c: usize| -> Array2<f64> {
        let mut seed = Array2::zeros((n, nc));
        seed.column_mut(c).fill(1.0);
        tape.jacobian(&tape.adjoints(&seed))
    };
    let jv = jac(0);
    let jg: Vec<Array2<f64>> = if order >= Order::Gradient { (1..=d).map(jac).collect() } else { Vec::new() };
    let jl = (order == Order::Laplacian).then(|| jac(1 + d));
    Ok((0..n)
        .map(|i| PointEval {
            value: tape.value(i),
            grad: if order >= Order::Gradient { tape.grad(i) } else { Vec::new() },
            lap: (order == Order::Laplacian).then(|| tape.lap(i)),
            jac_value: jv.row(i).to_vec(),
            jac_grad: jg.iter().map(|j| j.row(i).to_vec()).collect(),
            jac_lap: jl.as_ref().map(|j| j.row(i).to_vec()),
        })
        .collect())
}
