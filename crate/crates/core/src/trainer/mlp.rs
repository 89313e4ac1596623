use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hidden widths of the certificate network.
pub const DEFAULT_HIDDEN: [usize; 3] = [64, 64, 32];
pub const LEAKY_SLOPE: f64 = 0.01;

/// Dense layer, `weights` row-major `rows x cols` (output x input).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Fully connected network `V(x1, x2, q, t)` with LeakyReLU hidden units and
/// a linear scalar output.
///
/// Input layout: `x1 / scale`, `x2 / scale`, one-hot `q`, `t / T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T = f64> {
    pub state_dim: usize,
    pub num_q: usize,
    pub horizon: usize,
    pub slope: T,
    /// Per-coordinate input scaling for the state components.
    pub input_scale: Vec<T>,
    pub layers: Vec<Layer<T>>,
}

/// Activations kept for the backward pass.
pub struct Cache<T> {
    batch: usize,
    /// Input to each layer, then the network output.
    acts: Vec<Vec<T>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<T>>,
}

impl<T> Cache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("nonempty")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl<T: Real> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        num_q: usize,
        horizon: usize,
        hidden: &[usize],
        input_scale: Vec<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        let mut m = Self::zeros(state_dim, num_q, horizon, hidden, input_scale)?;
        for l in &mut m.layers {
            let limit = (6.0 / (l.rows + l.cols) as f64).sqrt();
            for w in &mut l.weights {
                *w = T::lit(rng.random_range(-limit..=limit));
            }
        }
        Ok(m)
    }

    pub fn zeros(state_dim: usize, num_q: usize, horizon: usize, hidden: &[usize], input_scale: Vec<f64>) -> Result<Self> {
        if input_scale.len() != state_dim {
            return Err(Error::Dimension { what: "input scale", expected: state_dim, got: input_scale.len() });
        }
        if input_scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Config("input scale must be positive".into()));
        }
        if horizon == 0 || num_q == 0 || hidden.contains(&0) {
            return Err(Error::Config("network needs T >= 1, |Q| >= 1 and nonzero hidden widths".into()));
        }
        let mut dims = vec![2 * state_dim + num_q + 1];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|p| Layer { rows: p[1], cols: p[0], weights: vec![T::zero(); p[0] * p[1]], bias: vec![T::zero(); p[1]] })
            .collect();
        Ok(Self {
            state_dim,
            num_q,
            horizon,
            slope: T::lit(LEAKY_SLOPE),
            input_scale: input_scale.into_iter().map(T::lit).collect(),
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        2 * self.state_dim + self.num_q + 1
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_dim();
        for (i, l) in self.layers.iter().enumerate() {
            if l.cols != width || l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return Err(Error::Format(format!("layer {i} has inconsistent shape")));
            }
            width = l.rows;
        }
        if width != 1 || self.input_scale.len() != self.state_dim {
            return Err(Error::Format("network output must be scalar".into()));
        }
        if !self.params().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(())
    }

    /// Writes the input encoding of `(x1, x2, q, t)` into `out`.
    pub fn encode(&self, x1: &[f64], x2: &[f64], q: usize, t: usize, out: &mut [T]) {
        let d = self.state_dim;
        for i in 0..d {
            out[i] = T::lit(x1[i]) / self.input_scale[i];
            out[d + i] = T::lit(x2[i]) / self.input_scale[i];
        }
        for k in 0..self.num_q {
            out[2 * d + k] = if k == q { T::one() } else { T::zero() };
        }
        out[2 * d + self.num_q] = T::lit(t as f64 / self.horizon as f64);
    }

    pub fn eval(&self, x1: &[f64], x2: &[f64], q: usize, t: usize) -> T {
        let mut input = vec![T::zero(); self.input_dim()];
        self.encode(x1, x2, q, t, &mut input);
        self.forward(&input, 1)[0]
    }

    /// Outputs for `batch` encoded inputs stored row-major.
    pub fn forward(&self, inputs: &[T], batch: usize) -> Vec<T> {
        let mut cache = self.forward_cache(inputs, batch);
        cache.acts.pop().expect("nonempty")
    }

    pub fn forward_cache(&self, inputs: &[T], batch: usize) -> Cache<T> {
        assert_eq!(inputs.len(), batch * self.input_dim(), "input buffer size");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(inputs.to_vec());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let a = acts.last().expect("nonempty");
            let mut z = Vec::with_capacity(batch * l.rows);
            for _ in 0..batch {
                z.extend_from_slice(&l.bias);
            }
            T::gemm(batch, l.cols, l.rows, T::one(), a, l.cols, 1, &l.weights, 1, l.cols, T::one(), &mut z, l.rows, 1);
            let out = if i == last { z.clone() } else { z.iter().map(|&v| if v > T::zero() { v } else { self.slope * v }).collect() };
            pre.push(z);
            acts.push(out);
        }
        Cache { batch, acts, pre }
    }

    /// Adds `sum_b dout[b] * d output[b] / d params` to `grad` (flat layout
    /// of [`Mlp::params`]).
    pub fn backward(&self, cache: &Cache<T>, dout: &[T], grad: &mut [T]) {
        let batch = cache.batch;
        assert_eq!(dout.len(), batch);
        assert_eq!(grad.len(), self.num_params());
        let last = self.layers.len() - 1;
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }
        let mut da = dout.to_vec();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let mut dz = da;
            if i != last {
                for (g, z) in dz.iter_mut().zip(&cache.pre[i]) {
                    if *z <= T::zero() {
                        *g *= self.slope;
                    }
                }
            }
            let (gw, gb) = grad[offsets[i]..offsets[i] + l.weights.len() + l.bias.len()].split_at_mut(l.weights.len());
            T::gemm(l.rows, batch, l.cols, T::one(), &dz, 1, l.rows, &cache.acts[i], l.cols, 1, T::one(), gw, l.cols, 1);
            for row in dz.chunks_exact(l.rows) {
                for (b, g) in gb.iter_mut().zip(row) {
                    *b += *g;
                }
            }
            if i > 0 {
                let mut prev = vec![T::zero(); batch * l.cols];
                T::gemm(batch, l.rows, l.cols, T::one(), &dz, l.rows, 1, &l.weights, l.cols, 1, T::zero(), &mut prev, l.cols, 1);
                da = prev;
            } else {
                da = Vec::new();
            }
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer, weights then biases.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.num_params());
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        let c = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        Mlp {
            state_dim: self.state_dim,
            num_q: self.num_q,
            horizon: self.horizon,
            slope: U::lit(self.slope.as_f64()),
            input_scale: c(&self.input_scale),
            layers: self
                .layers
                .iter()
                .map(|l| Layer { rows: l.rows, cols: l.cols, weights: c(&l.weights), bias: c(&l.bias) })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn net() -> Mlp<f64> {
        Mlp::new(1, 3, 10, &DEFAULT_HIDDEN, vec![4.0], &mut stream_rng(1, 0)).unwrap()
    }

    fn dot_recompute(m: &Mlp<f64>, input: &[f64]) -> f64 {
        let mut a = input.to_vec();
        for (i, l) in m.layers.iter().enumerate() {
            a = (0..l.rows)
                .map(|r| {
                    let z = l.bias[r] + (0..l.cols).map(|c| l.weights[r * l.cols + c] * a[c]).sum::<f64>();
                    if i + 1 == m.layers.len() || z > 0.0 { z } else { 0.01 * z }
                })
                .collect();
        }
        a[0]
    }

    #[test]
    fn batched_forward_matches_dot_products() {
        let m = net();
        let mut rng = stream_rng(2, 0);
        let batch = 7;
        let mut inputs = vec![0.0; batch * m.input_dim()];
        for (b, row) in inputs.chunks_exact_mut(m.input_dim()).enumerate() {
            m.encode(&[rng.random_range(-4.0..4.0)], &[rng.random_range(-4.0..4.0)], b % 3, b, row);
        }
        let out = m.forward(&inputs, batch);
        for (b, row) in inputs.chunks_exact(m.input_dim()).enumerate() {
            assert!((out[b] - dot_recompute(&m, row)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_give_the_final_bias() {
        let mut m = Mlp::<f64>::zeros(2, 2, 5, &DEFAULT_HIDDEN, vec![1.0, 1.0]).unwrap();
        m.layers.last_mut().unwrap().bias[0] = 0.25;
        assert_eq!(m.eval(&[1.0, -3.0], &[0.5, 0.5], 1, 3), 0.25);
    }

    #[test]
    fn positive_cone_is_affine() {
        let mut m = net();
        let mut rng = stream_rng(3, 0);
        for l in &mut m.layers {
            for w in &mut l.weights {
                *w = rng.random_range(0.0..0.2);
            }
            for b in &mut l.bias {
                *b = rng.random_range(0.0..0.1);
            }
        }
        // Compose the affine map explicitly.
        let n_in = m.input_dim();
        let mut a: Vec<Vec<f64>> = (0..n_in).map(|i| (0..n_in).map(|j| f64::from(i == j)).collect()).collect();
        let mut c = vec![0.0; n_in];
        for l in &m.layers {
            let na: Vec<Vec<f64>> =
                (0..l.rows).map(|r| (0..n_in).map(|j| (0..l.cols).map(|k| l.weights[r * l.cols + k] * a[k][j]).sum()).collect()).collect();
            let nc: Vec<f64> = (0..l.rows).map(|r| l.bias[r] + (0..l.cols).map(|k| l.weights[r * l.cols + k] * c[k]).sum::<f64>()).collect();
            a = na;
            c = nc;
        }
        let x1 = [rng.random_range(0.0..4.0)];
        let x2 = [rng.random_range(0.0..4.0)];
        let mut input = vec![0.0; n_in];
        m.encode(&x1, &x2, 2, 7, &mut input);
        let want = c[0] + (0..n_in).map(|j| a[0][j] * input[j]).sum::<f64>();
        assert!((m.eval(&x1, &x2, 2, 7) - want).abs() < 1e-10);
    }

    #[test]
    fn permuting_hidden_units_preserves_output() {
        let m = net();
        let mut p = m.clone();
        let (i, j) = (3, 17);
        let width = p.layers[0].cols;
        for c in 0..width {
            p.layers[0].weights.swap(i * width + c, j * width + c);
        }
        p.layers[0].bias.swap(i, j);
        let next_cols = p.layers[1].cols;
        for r in 0..p.layers[1].rows {
            p.layers[1].weights.swap(r * next_cols + i, r * next_cols + j);
        }
        for (x, q) in [(0.3, 0), (-2.0, 1), (3.9, 2)] {
            assert!((m.eval(&[x], &[-x], q, 4) - p.eval(&[x], &[-x], q, 4)).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let m = net();
        let mut inputs = vec![0.0; 3 * m.input_dim()];
        for (b, row) in inputs.chunks_exact_mut(m.input_dim()).enumerate() {
            m.encode(&[b as f64 - 1.0], &[0.5 * b as f64], b, 2 * b, row);
        }
        let dout = [1.0, -0.5, 2.0];
        let cache = m.forward_cache(&inputs, 3);
        let mut grad = vec![0.0; m.num_params()];
        m.backward(&cache, &dout, &mut grad);
        let base = m.params();
        let objective = |p: &[f64]| {
            let mut n = m.clone();
            n.set_params(p);
            n.forward(&inputs, 3).iter().zip(&dout).map(|(o, d)| o * d).sum::<f64>()
        };
        let mut rng = stream_rng(4, 0);
        for _ in 0..30 {
            let k = rng.random_range(0..base.len());
            let h = 1e-6;
            let (mut up, mut dn) = (base.clone(), base.clone());
            up[k] += h;
            dn[k] -= h;
            let fd = (objective(&up) - objective(&dn)) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {k}: fd {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn single_precision_tracks_double() {
        let m = net();
        let s: Mlp<f32> = m.cast();
        let a = m.eval(&[1.5], &[-0.5], 1, 3);
        let b = s.eval(&[1.5], &[-0.5], 1, 3);
        assert!((a - f64::from(b)).abs() < 1e-5);
        assert_eq!(s.cast::<f64>().num_params(), m.num_params());
    }
}
