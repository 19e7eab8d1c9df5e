//! Boundary-function families with closed-form derivatives, feature metrics and grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `[x(1-x)]^a`
    Power,
    /// `x^p`; vanishes only at `x = 0`.
    PowerAsym,
    /// `sin^a(pi x)`
    Trig,
    /// `x(1-x) / (1 + a x(1-x))`
    Rational,
    /// `x(1-x) exp(-a x(1-x))`
    Exponential,
    /// `tanh(a x) tanh(a (1-x))`
    Tanh,
    /// `[x(1-x)]^a [y(1-y)]^b`
    #[serde(rename = "mixed_power_2d")]
    MixedPower2D,
    /// `[x(1-x) y(1-y)]^a`
    #[serde(rename = "power_2d")]
    Power2D,
    #[serde(rename = "tanh_2d")]
    Tanh2D,
    /// `[x(1-x) y(1-y) z(1-z)]^a`
    #[serde(rename = "mixed_power_sym_3d")]
    MixedPowerSym3D,
    /// `[x(1-x)]^a [y(1-y)]^b [z(1-z)]^c`
    #[serde(rename = "mixed_power_asym_3d")]
    MixedPowerAsym3D,
    #[serde(rename = "tanh_3d")]
    Tanh3D,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Power,
        Family::PowerAsym,
        Family::Trig,
        Family::Rational,
        Family::Exponential,
        Family::Tanh,
        Family::MixedPower2D,
        Family::Power2D,
        Family::Tanh2D,
        Family::MixedPowerSym3D,
        Family::MixedPowerAsym3D,
        Family::Tanh3D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::PowerAsym => "power_asym",
            Family::Trig => "trig",
            Family::Rational => "rational",
            Family::Exponential => "exponential",
            Family::Tanh => "tanh",
            Family::MixedPower2D => "mixed_power_2d",
            Family::Power2D => "power_2d",
            Family::Tanh2D => "tanh_2d",
            Family::MixedPowerSym3D => "mixed_power_sym_3d",
            Family::MixedPowerAsym3D => "mixed_power_asym_3d",
            Family::Tanh3D => "tanh_3d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Family::Power | Family::PowerAsym | Family::Trig | Family::Rational | Family::Exponential | Family::Tanh => 1,
            Family::MixedPower2D | Family::Power2D | Family::Tanh2D => 2,
            Family::MixedPowerSym3D | Family::MixedPowerAsym3D | Family::Tanh3D => 3,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            Family::MixedPower2D => 2,
            Family::MixedPowerAsym3D => 3,
            _ => 1,
        }
    }

    /// Whether `B` vanishes on the whole boundary.
    pub fn is_homogeneous(self) -> bool {
        self != Family::PowerAsym
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown boundary family {s:?}")))
    }
}

/// One-dimensional factor of a product boundary function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    Power(f64),
    PowerAsym(f64),
    Trig(f64),
    Rational(f64),
    Exponential(f64),
    Tanh(f64),
}

/// `c * x^e`, skipping the power when `c == 0` so that `0 * inf` never arises.
#[inline]
fn term(c: f64, x: f64, e: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x.powf(e)
    }
}

impl Factor {
    /// `(f, f', f'')` at `x`.
    pub fn eval(self, x: f64) -> [f64; 3] {
        let u = x * (1.0 - x);
        let du = 1.0 - 2.0 * x;
        let ddu = -2.0;
        match self {
            Factor::Power(a) => {
                let y = 1.0 - x;
                let f = x.powf(a) * y.powf(a);
                let f1 = if a == 1.0 { du } else { a * x.powf(a - 1.0) * y.powf(a - 1.0) * du };
                let f2 = term(a * (a - 1.0), x, a - 2.0) * y.powf(a) - 2.0 * a * a * x.powf(a - 1.0) * y.powf(a - 1.0)
                    + x.powf(a) * term(a * (a - 1.0), y, a - 2.0);
                [f, f1, f2]
            }
            Factor::PowerAsym(p) => [x.powf(p), term(p, x, p - 1.0), term(p * (p - 1.0), x, p - 2.0)],
            Factor::Trig(a) => {
                let pi = std::f64::consts::PI;
                let s = (pi * x.min(1.0 - x)).sin().max(0.0);
                let c = (pi * x).cos();
                let f = s.powf(a);
                let f1 = a * pi * term(1.0, s, a - 1.0) * c;
                let f2 = a * pi * pi * (term(a - 1.0, s, a - 2.0) * c * c - f);
                [f, f1, f2]
            }
            Factor::Rational(a) => {
                let q = 1.0 + a * u;
                [u / q, du / (q * q), (ddu * q - 2.0 * a * du * du) / (q * q * q)]
            }
            Factor::Exponential(a) => {
                let e = (-a * u).exp();
                let au = a * u;
                [u * e, e * du * (1.0 - au), e * (ddu * (1.0 - au) - a * du * du * (2.0 - au))]
            }
            Factor::Tanh(a) => {
                let p = (a * x).tanh();
                let q = (a * (1.0 - x)).tanh();
                let p1 = a * (1.0 - p * p);
                let q1 = -a * (1.0 - q * q);
                let p2 = -2.0 * a * a * p * (1.0 - p * p);
                let q2 = -2.0 * a * a * q * (1.0 - q * q);
                [p * q, p1 * q + p * q1, p2 * q + 2.0 * p1 * q1 + p * q2]
            }
        }
    }

    pub fn is_symmetric(self) -> bool {
        !matches!(self, Factor::PowerAsym(_))
    }
}

/// Offset function `A`, which carries the Dirichlet data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Offset {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `value + slope . x`
    Affine { value: f64, slope: Vec<f64> },
}

/// Value, gradient and Laplacian of a scalar field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub lap: f64,
}

impl Offset {
    pub fn eval(&self, x: &[f64]) -> FieldEval {
        let d = x.len();
        match self {
            Offset::Zero => FieldEval {
                value: 0.0,
                grad: vec![0.0; d],
                lap: 0.0,
            },
            Offset::Constant { value } => FieldEval {
                value: *value,
                grad: vec![0.0; d],
                lap: 0.0,
            },
            Offset::Affine { value, slope } => FieldEval {
                value: value + slope.iter().zip(x).map(|(s, xi)| s * xi).sum::<f64>(),
                grad: slope.clone(),
                lap: 0.0,
            },
        }
    }
}

/// Boundary pair `(A, B)` with `B = scale * prod_k f_k(x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub family: Family,
    pub params: Vec<f64>,
    pub dim: usize,
    pub offset: Offset,
    pub scale: f64,
    factors: Vec<Factor>,
}

pub fn make_pair(family: Family, params: &[f64], dim: usize) -> Result<BoundaryPair> {
    if dim != family.dim() {
        return Err(Error::Config(format!("family {family} is {}-dimensional, not {dim}", family.dim())));
    }
    if params.len() != family.n_params() {
        return Err(Error::Config(format!(
            "family {family} takes {} parameter(s), got {}",
            family.n_params(),
            params.len()
        )));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Config("boundary parameters must be finite".into()));
    }
    let positive = |p: f64, what: &str| {
        if p > 0.0 {
            Ok(p)
        } else {
            Err(Error::Config(format!("{what} must be positive for family {family}, got {p}")))
        }
    };
    let factors = match family {
        Family::Power => vec![Factor::Power(positive(params[0], "exponent")?)],
        Family::PowerAsym => vec![Factor::PowerAsym(positive(params[0], "exponent")?)],
        Family::Trig => vec![Factor::Trig(positive(params[0], "exponent")?)],
        Family::Rational => {
            // 1 + a x(1-x) stays positive on [0,1] iff a > -4
            if params[0] <= -4.0 {
                return Err(Error::Config(format!("rational parameter must exceed -4, got {}", params[0])));
            }
            vec![Factor::Rational(params[0])]
        }
        Family::Exponential => vec![Factor::Exponential(params[0])],
        Family::Tanh => vec![Factor::Tanh(positive(params[0], "steepness")?)],
        Family::Power2D => vec![Factor::Power(positive(params[0], "exponent")?); 2],
        Family::MixedPower2D => vec![
            Factor::Power(positive(params[0], "exponent")?),
            Factor::Power(positive(params[1], "exponent")?),
        ],
        Family::Tanh2D => vec![Factor::Tanh(positive(params[0], "steepness")?); 2],
        Family::MixedPowerSym3D => vec![Factor::Power(positive(params[0], "exponent")?); 3],
        Family::MixedPowerAsym3D => vec![
            Factor::Power(positive(params[0], "exponent")?),
            Factor::Power(positive(params[1], "exponent")?),
            Factor::Power(positive(params[2], "exponent")?),
        ],
        Family::Tanh3D => vec![Factor::Tanh(positive(params[0], "steepness")?); 3],
    };
    Ok(BoundaryPair {
        family,
        params: params.to_vec(),
        dim,
        offset: Offset::Zero,
        scale: 1.0,
        factors,
    })
}

impl BoundaryPair {
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_offset(mut self, offset: Offset) -> Self {
        self.offset = offset;
        self
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Short label such as `power(0.5)` or `mixed_power_2d(1,2)`.
    pub fn label(&self) -> String {
        let p: Vec<String> = self.params.iter().map(|v| format!("{v}")).collect();
        format!("{}({})", self.family, p.join(","))
    }

    /// Whether `B(x) == B(1 - x)` axis-wise.
    pub fn is_symmetric(&self) -> bool {
        self.factors.iter().all(|f| f.is_symmetric())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)[0]).product::<f64>()
    }

    /// `B`, `grad B` and `lap B` by the product rule over the axis factors.
    pub fn eval(&self, x: &[f64]) -> FieldEval {
        assert_eq!(x.len(), self.dim, "point dimension");
        let fs: Vec<[f64; 3]> = self.factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)).collect();
        let others = |k: usize| -> f64 {
            fs.iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, f)| f[0])
                .product()
        };
        let value = self.scale * fs.iter().map(|f| f[0]).product::<f64>();
        let grad = (0..self.dim).map(|k| self.scale * fs[k][1] * others(k)).collect();
        let lap = self.scale * (0..self.dim).map(|k| fs[k][2] * others(k)).sum::<f64>();
        FieldEval { value, grad, lap }
    }

    pub fn eval_offset(&self, x: &[f64]) -> FieldEval {
        self.offset.eval(x)
    }
}

/// Geometric features of `B` sampled on a point set, in the order given.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryFeatures {
    pub grad_l2: f64,
    pub tv: f64,
    pub gini: f64,
    pub dyn_range: f64,
    pub curv_l2: f64,
    pub b2_max: f64,
    pub b2_tv: f64,
    /// Sample ordering used by the total variations.
    pub ordering: &'static str,
}

pub fn features(pair: &BoundaryPair, points: &[Vec<f64>]) -> BoundaryFeatures {
    let evals: Vec<FieldEval> = points.iter().map(|p| pair.eval(p)).collect();
    let b: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let grad_sq: Vec<f64> = evals.iter().map(|e| e.grad.iter().map(|g| g * g).sum()).collect();
    let lap: Vec<f64> = evals.iter().map(|e| e.lap).collect();
    features_from_samples(&b, &grad_sq, &lap)
}

/// Features from sampled `B`, `|grad B|^2` and `lap B`.
pub fn features_from_samples(b: &[f64], grad_sq: &[f64], lap: &[f64]) -> BoundaryFeatures {
    let min = b.iter().copied().fold(f64::INFINITY, f64::min);
    let max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    BoundaryFeatures {
        grad_l2: grad_sq.iter().sum::<f64>().sqrt(),
        tv: total_variation(b),
        gini: gini(b),
        dyn_range: if min > 0.0 { max / min } else { f64::INFINITY },
        curv_l2: lap.iter().map(|v| v * v).sum::<f64>().sqrt(),
        b2_max: lap.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        b2_tv: total_variation(lap),
        ordering: "lexicographic",
    }
}

pub fn total_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// `sum_ij |v_i - v_j| / (2 N sum_i v_i)`; zero for constant samples.
pub fn gini(v: &[f64]) -> f64 {
    let n = v.len();
    let total: f64 = v.iter().sum();
    if n == 0 || total == 0.0 {
        return 0.0;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let pair_sum: f64 = 2.0
        * sorted
            .iter()
            .enumerate()
            .map(|(i, x)| (2.0 * i as f64 - nf + 1.0) * x)
            .sum::<f64>();
    pair_sum / (2.0 * nf * total)
}

/// Placement of grid nodes along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// `i / (n - 1)`, `i = 0..n`: includes both endpoints.
    Inclusive,
    /// `i / (n + 1)`, `i = 1..=n`: uniform interior nodes.
    #[default]
    Open,
    /// `(i + 0.5) / n`: cell midpoints.
    Midpoint,
}

pub fn axis_nodes(n: usize, mode: GridMode) -> Result<Vec<f64>> {
    let min = if mode == GridMode::Inclusive { 2 } else { 1 };
    if n < min {
        return Err(Error::Config(format!("{mode:?} grids need at least {min} points per axis, got {n}")));
    }
    Ok(match mode {
        GridMode::Inclusive => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        GridMode::Open => (1..=n).map(|i| i as f64 / (n + 1) as f64).collect(),
        GridMode::Midpoint => (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
    })
}

/// Tensor grid on `[0,1]^dim`, lexicographic with the first axis varying slowest.
pub fn grid(dim: usize, n_per_axis: usize, mode: GridMode) -> Result<Vec<Vec<f64>>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Config(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    let nodes = axis_nodes(n_per_axis, mode)?;
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

/// Inclusive grid when `include_boundary`, open interior grid otherwise.
pub fn uniform_grid(dim: usize, n_per_axis: usize, include_boundary: bool) -> Result<Vec<Vec<f64>>> {
    grid(dim, n_per_axis, if include_boundary { GridMode::Inclusive } else { GridMode::Open })
}

/// Points on every face of `[0,1]^dim`, `n` inclusive nodes along the free axes.
pub fn boundary_samples(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for p in grid(dim, n, GridMode::Inclusive)? {
        if p.iter().any(|&x| x == 0.0 || x == 1.0) {
            out.push(p);
        }
    }
    Ok(out)
}
