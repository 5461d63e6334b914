use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RapidError, Result};
use crate::io::Tensor;

/// Widths of the autoencoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedDims {
    /// Number of latent queries `l`.
    pub latent: usize,
    /// Input feature width `d`.
    pub d: usize,
    /// Compressed width `d′`.
    pub d_prime: usize,
    /// Number of conv stages `u` in the inner encoder (and decoder).
    pub stages: usize,
}

impl Default for EmbedDims {
    fn default() -> Self {
        Self {
            latent: 4,
            d: 10,
            d_prime: 4,
            stages: 2,
        }
    }
}

impl EmbedDims {
    pub fn validate(&self) -> Result<()> {
        if self.latent == 0 || self.d == 0 || self.d_prime == 0 || self.stages == 0 {
            return Err(RapidError::Config(format!(
                "embedding sizes must be positive: {self:?}"
            )));
        }
        if self.d_prime > self.d {
            return Err(RapidError::Config(format!(
                "compressed width d' = {} exceeds d = {}",
                self.d_prime, self.d
            )));
        }
        Ok(())
    }

    /// Channel widths from `d` down to `d′`, linearly interpolated; `stages + 1` entries.
    pub fn widths(&self) -> Vec<usize> {
        let u = self.stages;
        (0..=u).map(|i| (self.d * (u - i) + self.d_prime * i) / u).collect()
    }
}

/// Affine map applied row-wise: `y = x Wᵀ + b`, with `W` shaped `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn identity(n: usize) -> Self {
        Self {
            weight: Array2::eye(n),
            bias: Array1::zeros(n),
        }
    }

    pub fn zeros(out: usize, inp: usize) -> Self {
        Self {
            weight: Array2::zeros((out, inp)),
            bias: Array1::zeros(out),
        }
    }

    /// Uniform in `±1/√in`, zero bias.
    pub fn seeded(out: usize, inp: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inp as f64).sqrt();
        Self {
            weight: Array2::from_shape_simple_fn((out, inp), || rng.random_range(-bound..=bound)),
            bias: Array1::zeros(out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.in_dim() {
            return Err(RapidError::contract(format!(
                "linear layer expects width {}, got {}",
                self.in_dim(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.weight.t()) + &self.bias)
    }
}

/// Inference-mode batch normalization with fixed statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub eps: f64,
}

impl BatchNorm {
    /// Exactly the identity map.
    pub fn unit(n: usize) -> Self {
        Self {
            mean: Array1::zeros(n),
            var: Array1::ones(n),
            gamma: Array1::ones(n),
            beta: Array1::zeros(n),
            eps: 0.0,
        }
    }

    /// Freshly initialized layer: unit statistics with the usual epsilon.
    pub fn standard(n: usize) -> Self {
        Self {
            eps: 1e-5,
            ..Self::unit(n)
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.width();
        if self.var.len() != n || self.gamma.len() != n || self.beta.len() != n {
            return Err(RapidError::contract("batch-norm parameter lengths differ"));
        }
        if self.var.iter().any(|&v| !(v + self.eps > 0.0)) {
            return Err(RapidError::contract("batch-norm variance must be positive"));
        }
        Ok(())
    }

    pub fn apply(&self, mut x: Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.width() {
            return Err(RapidError::contract(format!(
                "batch norm expects width {}, got {}",
                self.width(),
                x.ncols()
            )));
        }
        for mut row in x.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / (self.var[c] + self.eps).sqrt() * self.gamma[c] + self.beta[c];
            }
        }
        Ok(x)
    }
}

/// One `BatchNorm ∘ Conv` stage; the conv is 1×1 over voxels, i.e. linear in channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub linear: Linear,
    pub norm: BatchNorm,
}

impl Stage {
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.norm.apply(self.linear.apply(x)?)
    }
}

/// The nonlinearity between the two depthwise convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    /// Tanh approximation of GELU.
    #[default]
    Gelu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Gelu => {
                let c = (2.0 / std::f64::consts::PI).sqrt();
                0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
            }
        }
    }
}

/// Every parameter of the autoencoder.
///
/// Depthwise kernels are `27 × d′`, one row per offset of the 3×3×3
/// neighborhood in `(dx, dy, dz)` lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub dims: EmbedDims,
    /// Latent queries `L`, `l × d`.
    pub latent: Array2<f64>,
    pub encode_key: Linear,
    pub encode_value: Linear,
    pub decode_query: Linear,
    pub decode_key: Linear,
    pub decode_value: Linear,
    pub down: Vec<Stage>,
    pub dw_kernels: [Array2<f64>; 2],
    pub dw_bias: [Array1<f64>; 2],
    pub activation: Activation,
    pub up: Vec<Stage>,
}

pub(crate) const NEIGHBORHOOD: usize = 27;
pub(crate) const CENTER_TAP: usize = 13;

impl WeightSet {
    /// Random projections and kernels, unit batch-norm statistics.
    pub fn seeded(dims: EmbedDims, activation: Activation, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = dims.d;
        let widths = dims.widths();
        let stage = |inp: usize, out: usize, rng: &mut ChaCha8Rng| Stage {
            linear: Linear::seeded(out, inp, rng),
            norm: BatchNorm::standard(out),
        };
        let latent = Array2::from_shape_simple_fn((dims.latent, d), || rng.random_range(-1.0..1.0));
        let encode_key = Linear::seeded(d, d, &mut rng);
        let encode_value = Linear::seeded(d, d, &mut rng);
        let decode_query = Linear::seeded(d, d, &mut rng);
        let decode_key = Linear::seeded(d, d, &mut rng);
        let decode_value = Linear::seeded(d, d, &mut rng);
        let down = widths.windows(2).map(|w| stage(w[0], w[1], &mut rng)).collect();
        let up = widths.windows(2).rev().map(|w| stage(w[1], w[0], &mut rng)).collect();
        let bound = 1.0 / (NEIGHBORHOOD as f64).sqrt();
        let mut kernel =
            || Array2::from_shape_simple_fn((NEIGHBORHOOD, dims.d_prime), || rng.random_range(-bound..=bound));
        let dw_kernels = [kernel(), kernel()];
        Ok(Self {
            dims,
            latent,
            encode_key,
            encode_value,
            decode_query,
            decode_key,
            decode_value,
            down,
            dw_kernels,
            dw_bias: [Array1::zeros(dims.d_prime), Array1::zeros(dims.d_prime)],
            activation,
            up,
        })
    }

    /// Identity projections and stages with unit batch norm, identity
    /// activation and center-tap depthwise kernels. Requires `d′ = d`.
    pub fn identity(dims: EmbedDims) -> Result<Self> {
        dims.validate()?;
        if dims.d_prime != dims.d {
            return Err(RapidError::Config("identity weights need d' = d".into()));
        }
        let d = dims.d;
        let stage = || Stage {
            linear: Linear::identity(d),
            norm: BatchNorm::unit(d),
        };
        let mut tap = Array2::zeros((NEIGHBORHOOD, d));
        tap.row_mut(CENTER_TAP).fill(1.0);
        Ok(Self {
            dims,
            latent: Array2::from_shape_fn((dims.latent, d), |(i, j)| f64::from(u8::from(i % d == j))),
            encode_key: Linear::identity(d),
            encode_value: Linear::identity(d),
            decode_query: Linear::identity(d),
            decode_key: Linear::identity(d),
            decode_value: Linear::identity(d),
            down: (0..dims.stages).map(|_| stage()).collect(),
            dw_kernels: [tap.clone(), tap],
            dw_bias: [Array1::zeros(d), Array1::zeros(d)],
            activation: Activation::Identity,
            up: (0..dims.stages).map(|_| stage()).collect(),
        })
    }

    /// Checks that every shape agrees with `dims`.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims;
        dims.validate()?;
        let d = dims.d;
        let bad = |what: &str| Err(RapidError::contract(format!("weight `{what}` has the wrong shape")));
        if self.latent.dim() != (dims.latent, d) {
            return bad("latent");
        }
        for (name, lin) in [
            ("encode.key", &self.encode_key),
            ("encode.value", &self.encode_value),
            ("decode.query", &self.decode_query),
            ("decode.key", &self.decode_key),
            ("decode.value", &self.decode_value),
        ] {
            if lin.weight.dim() != (d, d) || lin.bias.len() != d {
                return bad(name);
            }
        }
        let mut width = d;
        for s in &self.down {
            if s.linear.in_dim() != width
                || s.linear.bias.len() != s.linear.out_dim()
                || s.norm.width() != s.linear.out_dim()
            {
                return bad("down stage");
            }
            s.norm.validate()?;
            width = s.linear.out_dim();
        }
        if width != dims.d_prime {
            return Err(RapidError::contract(format!(
                "inner encoder ends at width {width}, expected d' = {}",
                dims.d_prime
            )));
        }
        for (k, b) in self.dw_kernels.iter().zip(&self.dw_bias) {
            if k.dim() != (NEIGHBORHOOD, width) || b.len() != width {
                return bad("depthwise kernel");
            }
        }
        for s in &self.up {
            if s.linear.in_dim() != width
                || s.linear.bias.len() != s.linear.out_dim()
                || s.norm.width() != s.linear.out_dim()
            {
                return bad("up stage");
            }
            s.norm.validate()?;
            width = s.linear.out_dim();
        }
        if width != d {
            return Err(RapidError::contract(format!(
                "inner decoder ends at width {width}, expected d = {d}"
            )));
        }
        Ok(())
    }

    /// Flattens into named tensors for the weight container.
    pub fn to_tensors(&self) -> Vec<Tensor> {
        let mut out = Vec::new();
        let mut mat = |name: String, a: &Array2<f64>| {
            out.push(Tensor {
                name,
                shape: vec![a.nrows(), a.ncols()],
                data: a.iter().copied().collect(),
            });
        };
        mat("latent".into(), &self.latent);
        for (name, lin) in self.projections() {
            mat(format!("{name}.weight"), &lin.weight);
        }
        for (prefix, stages) in [("down", &self.down), ("up", &self.up)] {
            for (i, s) in stages.iter().enumerate() {
                mat(format!("{prefix}.{i}.weight"), &s.linear.weight);
            }
        }
        for (i, k) in self.dw_kernels.iter().enumerate() {
            mat(format!("dwconv.{}.kernel", i + 1), k);
        }
        let mut vec = |name: String, a: &Array1<f64>| {
            out.push(Tensor {
                name,
                shape: vec![a.len()],
                data: a.to_vec(),
            });
        };
        for (name, lin) in self.projections() {
            vec(format!("{name}.bias"), &lin.bias);
        }
        for (prefix, stages) in [("down", &self.down), ("up", &self.up)] {
            for (i, s) in stages.iter().enumerate() {
                vec(format!("{prefix}.{i}.bias"), &s.linear.bias);
                vec(format!("{prefix}.{i}.bn.mean"), &s.norm.mean);
                vec(format!("{prefix}.{i}.bn.var"), &s.norm.var);
                vec(format!("{prefix}.{i}.bn.gamma"), &s.norm.gamma);
                vec(format!("{prefix}.{i}.bn.beta"), &s.norm.beta);
                vec(format!("{prefix}.{i}.bn.eps"), &Array1::from_elem(1, s.norm.eps));
            }
        }
        for (i, b) in self.dw_bias.iter().enumerate() {
            vec(format!("dwconv.{}.bias", i + 1), b);
        }
        out
    }

    fn projections(&self) -> [(&'static str, &Linear); 5] {
        [
            ("encode.key", &self.encode_key),
            ("encode.value", &self.encode_value),
            ("decode.query", &self.decode_query),
            ("decode.key", &self.decode_key),
            ("decode.value", &self.decode_value),
        ]
    }

    /// Rebuilds a weight set from named tensors; sizes are inferred from shapes.
    pub fn from_tensors(tensors: &[Tensor], activation: Activation) -> Result<Self> {
        let find = |name: &str| -> Result<&Tensor> {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| RapidError::Format(format!("weight file lacks tensor `{name}`")))
        };
        let mat = |name: &str| -> Result<Array2<f64>> {
            let t = find(name)?;
            match t.shape[..] {
                [r, c] => Ok(Array2::from_shape_vec((r, c), t.data.clone()).expect("shape checked")),
                _ => Err(RapidError::Format(format!("tensor `{name}` is not a matrix"))),
            }
        };
        let vec = |name: &str| -> Result<Array1<f64>> {
            let t = find(name)?;
            match t.shape[..] {
                [_] => Ok(Array1::from(t.data.clone())),
                _ => Err(RapidError::Format(format!("tensor `{name}` is not a vector"))),
            }
        };
        let linear = |name: &str| -> Result<Linear> {
            Ok(Linear {
                weight: mat(&format!("{name}.weight"))?,
                bias: vec(&format!("{name}.bias"))?,
            })
        };
        let stages = |prefix: &str| -> Result<Vec<Stage>> {
            let mut out = Vec::new();
            while tensors
                .iter()
                .any(|t| t.name == format!("{prefix}.{}.weight", out.len()))
            {
                let p = format!("{prefix}.{}", out.len());
                let eps = vec(&format!("{p}.bn.eps"))?;
                out.push(Stage {
                    linear: linear(&p)?,
                    norm: BatchNorm {
                        mean: vec(&format!("{p}.bn.mean"))?,
                        var: vec(&format!("{p}.bn.var"))?,
                        gamma: vec(&format!("{p}.bn.gamma"))?,
                        beta: vec(&format!("{p}.bn.beta"))?,
                        eps: eps.first().copied().unwrap_or(0.0),
                    },
                });
            }
            Ok(out)
        };
        let latent = mat("latent")?;
        let down = stages("down")?;
        let kernels = [mat("dwconv.1.kernel")?, mat("dwconv.2.kernel")?];
        let dims = EmbedDims {
            latent: latent.nrows(),
            d: latent.ncols(),
            d_prime: kernels[0].ncols(),
            stages: down.len(),
        };
        let set = Self {
            dims,
            latent,
            encode_key: linear("encode.key")?,
            encode_value: linear("encode.value")?,
            decode_query: linear("decode.query")?,
            decode_key: linear("decode.key")?,
            decode_value: linear("decode.value")?,
            down,
            dw_kernels: kernels,
            dw_bias: [vec("dwconv.1.bias")?, vec("dwconv.2.bias")?],
            activation,
            up: stages("up")?,
        };
        set.validate()?;
        Ok(set)
    }
}
