use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected network with all parameters in one flat vector, laid out
/// per layer as a row-major `out x in` weight block followed by the biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub params: Vec<f64>,
}

/// Layer outputs recorded by [`Mlp::forward_trace`]; `outputs[0]` is the input.
#[derive(Debug, Clone)]
pub struct Trace {
    outputs: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().expect("trace has at least the input")
    }
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` initialization; the last layer uses
    /// `±final_scale` so initial outputs start near zero.
    pub fn new<R: Rng>(sizes: &[usize], hidden: Activation, output: Activation, final_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let mut params = Vec::with_capacity(Self::count(sizes));
        let layers = sizes.len() - 1;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if l + 1 == layers {
                final_scale
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            for _ in 0..fan_out * fan_in + fan_out {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Mlp {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params,
        }
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().expect("sizes are non-empty")
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let mut offset = 0;
        for l in 0..self.sizes.len() - 1 {
            a = self.layer(l, offset, &a);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        a
    }

    fn layer(&self, l: usize, offset: usize, x: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        debug_assert_eq!(x.len(), n_in);
        let w = &self.params[offset..offset + n_in * n_out];
        let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        let act = self.activation(l);
        (0..n_out)
            .map(|o| {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = row.iter().zip(x).fold(b[o], |s, (wi, xi)| s + wi * xi);
                act.apply(z)
            })
            .collect()
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        let mut outputs = Vec::with_capacity(self.sizes.len());
        outputs.push(x.to_vec());
        let mut offset = 0;
        for l in 0..self.sizes.len() - 1 {
            let next = self.layer(l, offset, outputs.last().expect("non-empty"));
            outputs.push(next);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        Trace { outputs }
    }

    /// Backpropagates `d_out` (gradient w.r.t. the network output) through a
    /// recorded pass, adding parameter gradients into `grad` and returning the
    /// gradient w.r.t. the input.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let y = &trace.outputs[l + 1];
            let x = &trace.outputs[l];
            let act = self.activation(l);
            for (d, &yo) in delta.iter_mut().zip(y) {
                *d *= act.slope(yo);
            }
            let off = offsets[l];
            let w = &self.params[off..off + n_in * n_out];
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g += d * xi;
                }
                grad[off + n_in * n_out + o] += d;
                for (di, wi) in d_in.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *di += d * wi;
                }
            }
            delta = d_in;
        }
        delta
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `self <- tau * online + (1 - tau) * self`
    pub fn soft_update(&mut self, online: &Mlp, tau: f64) {
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Gradient-descent step on `params`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
