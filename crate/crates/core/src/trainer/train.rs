use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, LossConfig, PreparedBatch, TrainPoint};
use super::mlp::{Mlp, DEFAULT_HIDDEN};
use crate::certify::{
    bound, calibrate, grid_pairs, validate_dense, BoundReport, CertMode, Certificate, CheckReport, CheckSettings, InnerRule,
    Query, DEFAULT_SCAN_PER_DIM, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::poss::Distribution;
use crate::product::{ProductState, VerificationStructure};
use crate::region::{BoxRegion, StateRegion};
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Real;
use crate::system::{State, System};

/// Grid checks run on the trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Points per dimension of the validation grid.
    pub per_dim: usize,
    /// Points per dimension of the grid used to fit `beta` and the offset.
    pub calibrate_per_dim: usize,
    /// Adversary candidates per dimension.
    pub candidates: usize,
    /// Quadrature nodes per dimension; 0 switches to Monte Carlo.
    pub quadrature_nodes: usize,
    pub mc_samples: usize,
    pub tol: f64,
    /// Extra room left below the fitted `beta`.
    pub slack: f64,
    /// Initial-set scan for the bound, per dimension.
    pub scan_per_dim: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            per_dim: 50,
            calibrate_per_dim: 80,
            candidates: 21,
            quadrature_nodes: 9,
            mc_samples: 30,
            tol: DEFAULT_TOLERANCE,
            slack: 1e-4,
            scan_per_dim: DEFAULT_SCAN_PER_DIM,
            seed: 0,
        }
    }
}

impl ValidationConfig {
    pub fn settings(&self, dist: &Distribution, sigmas: f64, horizon: usize) -> CheckSettings {
        CheckSettings {
            candidates: dist.candidates(self.candidates, sigmas),
            inner: if self.quadrature_nodes > 0 {
                InnerRule::Quadrature(dist.quadrature(self.quadrature_nodes, sigmas))
            } else {
                InnerRule::MonteCarlo { samples: self.mc_samples }
            },
            seed: self.seed,
            tol: self.tol,
            t_range: (0, horizon),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Optimizer steps, one minibatch each.
    pub epochs: usize,
    /// Trajectory pairs rolled out for the dataset.
    pub dataset_size: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_final: f64,
    pub momentum: f64,
    /// Global gradient norm ceiling.
    pub grad_clip: f64,
    pub lambda_term: f64,
    pub lambda_rec: f64,
    pub lambda_beta: f64,
    pub n_adversary: usize,
    pub m_inner: usize,
    pub seed: u64,
    pub beta_init: f64,
    /// Share of dataset points taken from trajectories; the rest are
    /// uniform over the domain.
    pub trajectory_fraction: f64,
    pub hidden: Vec<usize>,
    pub sigmas: f64,
    /// Regression steps fitting a warm-start certificate before training.
    pub warm_start_steps: usize,
    pub warm_start_lr: f64,
    /// Steps between checkpoint validations (0: validate only at the end).
    pub eval_every: usize,
    /// Steps between bound estimates in the log.
    pub log_every: usize,
    /// Stop once a validated certificate reaches this bound.
    pub target_p: Option<f64>,
    pub validation: ValidationConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let l = LossConfig::default();
        Self {
            epochs: 2000,
            dataset_size: 100_000,
            batch_size: 256,
            lr: 1e-3,
            lr_final: 1e-5,
            momentum: 0.9,
            grad_clip: 10.0,
            lambda_term: l.lambda_term,
            lambda_rec: l.lambda_rec,
            lambda_beta: l.lambda_beta,
            n_adversary: l.n_adversary,
            m_inner: l.m_inner,
            seed: 0,
            beta_init: 0.0,
            trajectory_fraction: 0.7,
            hidden: DEFAULT_HIDDEN.to_vec(),
            sigmas: l.sigmas,
            warm_start_steps: 0,
            warm_start_lr: 1e-2,
            eval_every: 0,
            log_every: 50,
            target_p: None,
            validation: ValidationConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("dataset_size", self.dataset_size),
            ("batch_size", self.batch_size),
            ("n_adversary", self.n_adversary),
            ("m_inner", self.m_inner),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("training.{name} must be positive")));
            }
        }
        let reals = [
            ("lr", self.lr),
            ("lr_final", self.lr_final),
            ("grad_clip", self.grad_clip),
            ("lambda_term", self.lambda_term),
            ("lambda_rec", self.lambda_rec),
            ("lambda_beta", self.lambda_beta),
            ("sigmas", self.sigmas),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("training.{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.momentum) || !(0.0..=1.0).contains(&self.trajectory_fraction) {
            return Err(Error::Config("training.momentum and training.trajectory_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn loss_config(&self, mode: CertMode) -> LossConfig {
        LossConfig {
            lambda_term: self.lambda_term,
            lambda_rec: self.lambda_rec,
            lambda_beta: self.lambda_beta,
            n_adversary: self.n_adversary,
            m_inner: self.m_inner,
            alpha: 1.0,
            sigmas: self.sigmas,
            mode,
        }
    }

    /// Cosine decay from `lr` to `lr_final` over the run.
    pub fn learning_rate(&self, step: usize) -> f64 {
        let frac = if self.epochs > 1 { step as f64 / (self.epochs - 1) as f64 } else { 1.0 };
        self.lr_final + 0.5 * (self.lr - self.lr_final) * (1.0 + (PI * frac).cos())
    }
}

fn uniform_in_box<R: Rng + ?Sized>(b: &BoxRegion, rng: &mut R) -> State {
    b.lo.iter().zip(&b.hi).map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l }).collect()
}

fn uniform_in_region<R: Rng + ?Sized>(r: &StateRegion, rng: &mut R) -> State {
    let b = &r.boxes()[rng.random_range(0..r.boxes().len())];
    uniform_in_box(b, rng)
}

/// Product points along rolled-out trajectory pairs (both initial states
/// uniform on the initial set, both disturbances drawn from the truncated
/// law) plus uniform points over `domain`.
pub fn generate_dataset<S: System>(
    vs: &VerificationStructure<S>,
    dist: &Distribution,
    domain: &BoxRegion,
    cfg: &TrainConfig,
) -> Result<Vec<TrainPoint>> {
    let horizon = vs.horizon();
    let mut rng = stream_rng(derive_seed(cfg.seed, "dataset"), 0);
    let traj_points = cfg.dataset_size * horizon;
    let uniform_points = if cfg.trajectory_fraction > 0.0 {
        ((traj_points as f64) * (1.0 - cfg.trajectory_fraction) / cfg.trajectory_fraction).round() as usize
    } else {
        traj_points
    };
    let mut out = Vec::with_capacity(traj_points + uniform_points);
    if cfg.trajectory_fraction > 0.0 {
        for _ in 0..cfg.dataset_size {
            let mut v = vs.initial_state(&uniform_in_region(vs.initial(), &mut rng), &uniform_in_region(vs.initial(), &mut rng));
            for s in 0..horizon {
                let ProductState::Live { x1, x2, q } = &v else { break };
                out.push(TrainPoint { x1: x1.clone(), x2: x2.clone(), q: *q, s });
                let (w1, w2) = (dist.sample_truncated(&mut rng, cfg.sigmas), dist.sample_truncated(&mut rng, cfg.sigmas));
                v = vs.step(&v, &w1, &w2)?;
            }
        }
    }
    let nq = vs.num_automaton_states() as u32;
    for _ in 0..uniform_points {
        out.push(TrainPoint {
            x1: uniform_in_box(domain, &mut rng),
            x2: uniform_in_box(domain, &mut rng),
            q: rng.random_range(0..nq),
            s: rng.random_range(0..horizon),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub total: f64,
    pub term: f64,
    pub rec: f64,
    pub beta_loss: f64,
    pub beta: f64,
    pub bound_estimate: Option<f64>,
}

pub fn log_csv(rows: &[LogRow]) -> String {
    let mut out = String::from("epoch,L_total,L_term,L_rec,L_beta,beta,bound_estimate\n");
    for r in rows {
        let b = r.bound_estimate.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{b}", r.epoch, r.total, r.term, r.rec, r.beta_loss, r.beta);
    }
    out
}

pub struct TrainOutcome<T> {
    pub certificate: Certificate<T>,
    pub log: Vec<LogRow>,
    /// Validation passed and, when a target is set, the bound reached it.
    pub certified: bool,
    pub report: Option<CheckReport>,
    pub bound: Option<BoundReport>,
    pub steps: usize,
    /// Network and `beta` as trained, before calibration.
    pub raw_beta: f64,
}

struct Momentum<T> {
    v: Vec<T>,
    vb: f64,
}

impl<T: Real> Momentum<T> {
    fn new(n: usize) -> Self {
        Self { v: vec![T::zero(); n], vb: 0.0 }
    }

    fn step(&mut self, params: &mut [T], beta: Option<&mut f64>, grad: &mut [T], gbeta: f64, lr: f64, mu: f64, clip: f64) {
        let norm = (grad.iter().map(|g| g.as_f64().powi(2)).sum::<f64>() + gbeta * gbeta).sqrt();
        let scale = if norm > clip { clip / norm } else { 1.0 };
        let (mu_t, lr_t, scale_t) = (T::lit(mu), T::lit(lr), T::lit(scale));
        for ((p, v), g) in params.iter_mut().zip(&mut self.v).zip(grad.iter()) {
            *v = mu_t * *v + scale_t * *g;
            *p -= lr_t * *v;
        }
        if let Some(beta) = beta {
            self.vb = mu * self.vb + scale * gbeta;
            *beta -= lr * self.vb;
        }
    }
}

/// Regression of the network onto `target` at uniform domain points.
pub fn warm_start<S: System, T: Real>(
    mlp: &mut Mlp<T>,
    target: &Certificate<f64>,
    vs: &VerificationStructure<S>,
    domain: &BoxRegion,
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut rng = stream_rng(derive_seed(cfg.seed, "warm-start"), 0);
    let mut opt = Momentum::new(mlp.num_params());
    let nq = vs.num_automaton_states();
    let horizon = vs.horizon();
    let width = mlp.input_dim();
    let mut last = f64::NAN;
    for step in 0..cfg.warm_start_steps {
        let pts: Vec<(State, State, usize, usize)> = (0..cfg.batch_size)
            .map(|_| (uniform_in_box(domain, &mut rng), uniform_in_box(domain, &mut rng), rng.random_range(0..nq), rng.random_range(0..=horizon)))
            .collect();
        let queries: Vec<Query> = pts.iter().map(|(a, b, q, t)| Query { x1: a, x2: b, q: *q, t: *t }).collect();
        let y = target.eval_many(&queries)?;
        let mut inputs = vec![T::zero(); pts.len() * width];
        for ((a, b, q, t), row) in pts.iter().zip(inputs.chunks_exact_mut(width)) {
            mlp.encode(a, b, *q, *t, row);
        }
        let cache = mlp.forward_cache(&inputs, pts.len());
        let n = pts.len() as f64;
        let mut mse = 0.0;
        let dout: Vec<T> = cache
            .output()
            .iter()
            .zip(&y)
            .map(|(o, y)| {
                let e = o.as_f64() - y;
                mse += e * e / n;
                T::lit(2.0 * e / n)
            })
            .collect();
        let mut grad = vec![T::zero(); mlp.num_params()];
        mlp.backward(&cache, &dout, &mut grad);
        let mut params = mlp.params();
        let frac = step as f64 / cfg.warm_start_steps.max(1) as f64;
        let lr = cfg.lr_final + 0.5 * (cfg.warm_start_lr - cfg.lr_final) * (1.0 + (PI * frac).cos());
        opt.step(&mut params, None, &mut grad, 0.0, lr, cfg.momentum, cfg.grad_clip);
        mlp.set_params(&params);
        last = mse;
    }
    Ok(last)
}

fn input_scale(domain: &BoxRegion) -> Vec<f64> {
    domain.lo.iter().zip(&domain.hi).map(|(l, h)| (l.abs().max(h.abs())).max(1e-9)).collect()
}

/// Calibrates, validates and bounds a snapshot of the network.
pub fn assess<S: System, T: Real>(
    mlp: &Mlp<T>,
    beta: f64,
    vs: &VerificationStructure<S>,
    dist: &Distribution,
    domain: &BoxRegion,
    cfg: &TrainConfig,
) -> Result<(Certificate<T>, CheckReport, BoundReport)> {
    let mode = CertMode::from(vs.quantifier());
    let mut cert = Certificate::from_mlp(mlp.clone(), mode, beta, vs.dfa().hash());
    let v = &cfg.validation;
    let settings = v.settings(dist, cfg.sigmas, vs.horizon());
    let calibration = CheckSettings { seed: derive_seed(v.seed, "calibration"), ..settings.clone() };
    calibrate(&mut cert, vs, &grid_pairs(domain, v.calibrate_per_dim), &calibration, v.slack)?;
    let report = validate_dense(&cert, vs, domain, v.per_dim, &settings)?;
    let scan = vs.initial().grid(v.scan_per_dim);
    let b = bound(&cert, vs, &scan, &scan)?;
    Ok((cert, report, b))
}

/// Trains a network certificate for `vs`.
///
/// Every step draws a minibatch, takes a momentum step on the dynamically
/// normalized loss, and decays the learning rate. At checkpoints and at the
/// end the network is calibrated (`beta` and a constant offset fitted on a
/// calibration grid), validated on the dense grid and bounded; the best
/// validated snapshot is returned.
pub fn train<S: System, T: Real>(
    vs: &VerificationStructure<S>,
    dist: &Distribution,
    domain: &BoxRegion,
    cfg: &TrainConfig,
    warm: Option<&Certificate<f64>>,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let mode = CertMode::from(vs.quantifier());
    let loss_cfg = cfg.loss_config(mode);
    let horizon = vs.horizon();
    let mut init_rng = stream_rng(derive_seed(cfg.seed, "init"), 0);
    let mut mlp: Mlp<T> = Mlp::new(vs.system().state_dim(), vs.num_automaton_states(), horizon, &cfg.hidden, input_scale(domain), &mut init_rng)?;
    if let Some(target) = warm {
        let mse = warm_start(&mut mlp, target, vs, domain, cfg)?;
        log::info!("warm start finished, mse {mse:.3e}");
    }
    let data = generate_dataset(vs, dist, domain, cfg)?;
    log::info!("dataset: {} points", data.len());
    let mut beta = cfg.beta_init;
    let mut opt = Momentum::new(mlp.num_params());
    let mut log_rows = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(Certificate<T>, CheckReport, BoundReport)> = None;
    let mut steps = 0;
    let scan_x0 = vs.initial().grid(21);
    let scan_companions = vs.initial().grid(cfg.validation.scan_per_dim);
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(derive_seed(cfg.seed, "batch"), epoch as u64);
        let points: Vec<TrainPoint> = (0..cfg.batch_size).map(|_| data[rng.random_range(0..data.len())].clone()).collect();
        let batch = PreparedBatch::new(vs, dist, points, &loss_cfg, &mut rng)?;
        let (value, mut grad, gbeta) = loss_and_grad(&mlp, beta, &batch, &loss_cfg)?;
        let mut params = mlp.params();
        opt.step(&mut params, Some(&mut beta), &mut grad, gbeta, cfg.learning_rate(epoch), cfg.momentum, cfg.grad_clip);
        if !params.iter().all(|p| p.is_finite()) || !beta.is_finite() {
            return Err(Error::NonFinite(format!("parameters after step {epoch}")));
        }
        mlp.set_params(&params);
        steps = epoch + 1;
        let bound_estimate = if cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0 {
            let cert = Certificate::from_mlp(mlp.clone(), mode, beta, String::new());
            Some(bound(&cert, vs, &scan_x0, &scan_companions)?.overall)
        } else {
            None
        };
        log_rows.push(LogRow {
            epoch,
            total: value.total,
            term: value.components[0],
            rec: value.components[1],
            beta_loss: value.components[2],
            beta,
            bound_estimate,
        });
        if let Some(b) = bound_estimate {
            log::info!("step {epoch}: loss {:.4} term {:.3e} rec {:.3e} beta {beta:.4} bound~{b:.4}", value.total, value.components[0], value.components[1]);
        }
        let checkpoint = cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0 && epoch + 1 < cfg.epochs;
        if checkpoint {
            let snap = assess(&mlp, beta, vs, dist, domain, cfg)?;
            log::info!("checkpoint {epoch}: {} bound {:.4}", snap.1.status, snap.2.overall);
            let done = snap.1.passed() && cfg.target_p.is_some_and(|p| snap.2.overall >= p);
            keep_best(&mut best, snap);
            if done {
                break;
            }
        }
    }
    if best.as_ref().is_none_or(|(_, r, b)| !(r.passed() && cfg.target_p.is_none_or(|p| b.overall >= p))) {
        let snap = assess(&mlp, beta, vs, dist, domain, cfg)?;
        log::info!("final: {} bound {:.4}", snap.1.status, snap.2.overall);
        keep_best(&mut best, snap);
    }
    let (certificate, report, b) = best.expect("at least one assessment");
    let certified = report.passed() && cfg.target_p.is_none_or(|p| b.overall >= p);
    Ok(TrainOutcome { certificate, log: log_rows, certified, report: Some(report), bound: Some(b), steps, raw_beta: beta })
}

fn keep_best<T>(best: &mut Option<(Certificate<T>, CheckReport, BoundReport)>, snap: (Certificate<T>, CheckReport, BoundReport)) {
    let better = match best {
        None => true,
        Some((_, r, b)) => (snap.1.passed(), snap.2.overall) > (r.passed(), b.overall),
    };
    if better {
        *best = Some(snap);
    }
}
