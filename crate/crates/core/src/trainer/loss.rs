use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::certify::CertMode;
use crate::error::{Error, Result};
use crate::poss::Distribution;
use crate::product::{ProductState, VerificationStructure};
use crate::scalar::Real;
use crate::system::System;

/// Floor on the detached magnitudes used for dynamic normalization.
pub const NORM_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda_term: f64,
    pub lambda_rec: f64,
    pub lambda_beta: f64,
    /// Adversary draws per point.
    pub n_adversary: usize,
    /// Inner `w1` draws per adversary draw, shared across the batch.
    pub m_inner: usize,
    pub alpha: f64,
    /// Truncation of the disturbance law, in standard deviations.
    pub sigmas: f64,
    pub mode: CertMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_term: 1.5,
            lambda_rec: 1.0,
            lambda_beta: 2.5,
            n_adversary: 30,
            m_inner: 16,
            alpha: 1.0,
            sigmas: 3.0,
            mode: CertMode::Universal,
        }
    }
}

/// A training point: product state `(x1, x2, q)` at time `s < T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainPoint {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub q: u32,
    pub s: usize,
}

/// A batch with its random draws and successors fixed, so repeated loss
/// evaluations use common random numbers.
#[derive(Clone, Debug)]
pub struct PreparedBatch {
    pub points: Vec<TrainPoint>,
    /// `succ1[b][m] = f(x1_b, w1_m)`.
    pub succ1: Vec<Vec<Vec<f64>>>,
    /// `succ2[b][i] = f(x2_b, w2_{b,i})`.
    pub succ2: Vec<Vec<Vec<f64>>>,
    /// `delta(q_b, L(x1_b, x2_b))`.
    pub next_q: Vec<u32>,
    /// Terminal target `1_G(x1_b, x2_b, q_b)`.
    pub accepting: Vec<bool>,
    pub horizon: usize,
}

impl PreparedBatch {
    pub fn new<S: System, R: Rng + ?Sized>(
        vs: &VerificationStructure<S>,
        dist: &Distribution,
        points: Vec<TrainPoint>,
        cfg: &LossConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let w1s: Vec<Vec<f64>> = (0..cfg.m_inner.max(1)).map(|_| dist.sample_truncated(rng, cfg.sigmas)).collect();
        let sys = vs.system();
        let mut succ1 = Vec::with_capacity(points.len());
        let mut succ2 = Vec::with_capacity(points.len());
        let mut next_q = Vec::with_capacity(points.len());
        let mut accepting = Vec::with_capacity(points.len());
        for p in &points {
            succ1.push(w1s.iter().map(|w| sys.step(&p.x1, w)).collect::<Result<Vec<_>>>()?);
            let mut row = Vec::with_capacity(cfg.n_adversary);
            for _ in 0..cfg.n_adversary.max(1) {
                row.push(sys.step(&p.x2, &dist.sample_truncated(rng, cfg.sigmas))?);
            }
            succ2.push(row);
            next_q.push(vs.dfa().next(p.q, vs.label(&p.x1, &p.x2)?));
            accepting.push(vs.is_accepting(&ProductState::new(p.x1.clone(), p.x2.clone(), p.q))?);
        }
        Ok(Self { points, succ1, succ2, next_q, accepting, horizon: vs.horizon() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Raw loss components and what the gradient needs to know about them.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub term: f64,
    pub rec: f64,
    pub beta_loss: f64,
    /// Selected adversary draw per point.
    pub chosen: Vec<usize>,
    /// Whether the recursion hinge is active per point.
    pub rec_active: Vec<bool>,
    /// Whether the terminal hinge is active per point.
    pub term_active: Vec<bool>,
}

impl Forward {
    pub fn components(&self) -> [f64; 3] {
        [self.term, self.rec, self.beta_loss]
    }

    /// Detached magnitudes with the floor applied.
    pub fn norms(&self) -> [f64; 3] {
        self.components().map(|c| c.abs().max(NORM_FLOOR))
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 { x } else { x.exp().ln_1p() }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `Softplus(-beta) - 0.01 ReLU(beta)`.
pub fn beta_loss(beta: f64) -> f64 {
    softplus(-beta) - 0.01 * relu(beta)
}

/// Evaluates the three raw loss components on `batch`.
pub fn forward<T: Real>(mlp: &Mlp<T>, beta: f64, batch: &PreparedBatch, cfg: &LossConfig) -> Result<Forward> {
    let width = mlp.input_dim();
    let b_len = batch.len();
    if b_len == 0 {
        return Err(Error::EmptySet);
    }
    let m = batch.succ1[0].len();
    let n = batch.succ2[0].len();
    let rows_per = 2 + n * m;
    let mut inputs = vec![T::zero(); b_len * rows_per * width];
    for (b, p) in batch.points.iter().enumerate() {
        let base = b * rows_per;
        let mut put = |r: usize, x1: &[f64], x2: &[f64], q: usize, t: usize| {
            mlp.encode(x1, x2, q, t, &mut inputs[(base + r) * width..(base + r + 1) * width]);
        };
        put(0, &p.x1, &p.x2, p.q as usize, p.s);
        put(1, &p.x1, &p.x2, p.q as usize, batch.horizon);
        for i in 0..n {
            for k in 0..m {
                put(2 + i * m + k, &batch.succ1[b][k], &batch.succ2[b][i], batch.next_q[b] as usize, p.s + 1);
            }
        }
    }
    let out = mlp.forward(&inputs, b_len * rows_per);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network output during loss evaluation".into()));
    }
    let mut term = 0.0;
    let mut rec = 0.0;
    let mut chosen = Vec::with_capacity(b_len);
    let mut rec_active = Vec::with_capacity(b_len);
    let mut term_active = Vec::with_capacity(b_len);
    for b in 0..b_len {
        let o = &out[b * rows_per..(b + 1) * rows_per];
        let vt = o[1].as_f64();
        let excess = if batch.accepting[b] { vt - 1.0 } else { vt };
        term += relu(excess);
        term_active.push(excess > 0.0);
        let mut best = 0;
        let mut best_e = f64::NAN;
        for i in 0..n {
            let e = o[2 + i * m..2 + (i + 1) * m].iter().map(|v| v.as_f64()).sum::<f64>() / m as f64;
            let better = match cfg.mode {
                CertMode::Universal => e < best_e,
                CertMode::Existential => e > best_e,
            };
            if i == 0 || better {
                best = i;
                best_e = e;
            }
        }
        let r = o[0].as_f64() / cfg.alpha + beta - best_e;
        rec += relu(r);
        rec_active.push(r > 0.0);
        chosen.push(best);
    }
    Ok(Forward {
        term: term / b_len as f64,
        rec: rec / b_len as f64,
        beta_loss: beta_loss(beta),
        chosen,
        rec_active,
        term_active,
    })
}

/// Gradient of `sum_k coeffs[k] * L_k` with respect to the network
/// parameters and `beta`, at the adversary selection recorded in `fwd`.
pub fn gradient<T: Real>(
    mlp: &Mlp<T>,
    beta: f64,
    batch: &PreparedBatch,
    fwd: &Forward,
    coeffs: [f64; 3],
    cfg: &LossConfig,
) -> (Vec<T>, f64) {
    let width = mlp.input_dim();
    let b_len = batch.len() as f64;
    let m = batch.succ1[0].len();
    let mut inputs = Vec::new();
    let mut dout = Vec::new();
    let mut push = |x1: &[f64], x2: &[f64], q: usize, t: usize, g: f64| {
        let start = inputs.len();
        inputs.resize(start + width, T::zero());
        mlp.encode(x1, x2, q, t, &mut inputs[start..]);
        dout.push(T::lit(g));
    };
    let mut gbeta = 0.0;
    for (b, p) in batch.points.iter().enumerate() {
        if fwd.term_active[b] && coeffs[0] != 0.0 {
            push(&p.x1, &p.x2, p.q as usize, batch.horizon, coeffs[0] / b_len);
        }
        if fwd.rec_active[b] && coeffs[1] != 0.0 {
            let c = coeffs[1] / b_len;
            gbeta += c;
            push(&p.x1, &p.x2, p.q as usize, p.s, c / cfg.alpha);
            let i = fwd.chosen[b];
            for k in 0..m {
                push(&batch.succ1[b][k], &batch.succ2[b][i], batch.next_q[b] as usize, p.s + 1, -c / m as f64);
            }
        }
    }
    gbeta += coeffs[2] * (-sigmoid(-beta) - if beta > 0.0 { 0.01 } else { 0.0 });
    let mut grad = vec![T::zero(); mlp.num_params()];
    if !dout.is_empty() {
        let cache = mlp.forward_cache(&inputs, dout.len());
        mlp.backward(&cache, &dout, &mut grad);
    }
    (grad, gbeta)
}

/// Loss with dynamic normalization: `sum_k lambda_k L_k / sg(|L_k|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub components: [f64; 3],
    pub norms: [f64; 3],
}

pub fn normalized_coeffs(cfg: &LossConfig, norms: [f64; 3]) -> [f64; 3] {
    [cfg.lambda_term / norms[0], cfg.lambda_rec / norms[1], cfg.lambda_beta / norms[2]]
}

/// Total loss and its gradient.
pub fn loss_and_grad<T: Real>(
    mlp: &Mlp<T>,
    beta: f64,
    batch: &PreparedBatch,
    cfg: &LossConfig,
) -> Result<(LossValue, Vec<T>, f64)> {
    let fwd = forward(mlp, beta, batch, cfg)?;
    let norms = fwd.norms();
    let coeffs = normalized_coeffs(cfg, norms);
    let components = fwd.components();
    let total: f64 = components.iter().zip(&coeffs).map(|(l, c)| l * c).sum();
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("training loss (components {components:?})")));
    }
    let (grad, gbeta) = gradient(mlp, beta, batch, &fwd, coeffs, cfg);
    Ok((LossValue { total, components, norms }, grad, gbeta))
}
