use obscert::certify::CertMode;
use obscert::hyperprops::PropertySpec;
use obscert::poss::Poss;
use obscert::presets::scalar_square;
use obscert::product::VerificationStructure;
use obscert::region::BoxRegion;
use obscert::rng::stream_rng;
use obscert::trainer::{
    beta_loss, forward, generate_dataset, gradient, loss_and_grad, normalized_coeffs, train, LossConfig, Mlp,
    PreparedBatch, TrainConfig, TrainPoint, ValidationConfig,
};
use rand::Rng;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn case_study() -> VerificationStructure<Poss> {
    let m = scalar_square();
    let f = PropertySpec::CurrentDetect { eps: 0.5, lam: 0.8, p: 0.95 }.to_formula().unwrap();
    let initial = m.initial().clone();
    VerificationStructure::new(m, &f, None, initial, None).unwrap()
}

fn small_cfg(mode: CertMode) -> LossConfig {
    LossConfig { n_adversary: 5, m_inner: 4, mode, ..Default::default() }
}

fn batch(vs: &VerificationStructure<Poss>, cfg: &LossConfig, seed: u64, size: usize) -> PreparedBatch {
    let mut rng = stream_rng(seed, 0);
    let nq = vs.num_automaton_states() as u32;
    let points = (0..size)
        .map(|_| TrainPoint {
            x1: vec![rng.random_range(-4.0..4.0)],
            x2: vec![rng.random_range(-4.0..4.0)],
            q: rng.random_range(0..nq),
            s: rng.random_range(0..vs.horizon()),
        })
        .collect();
    PreparedBatch::new(vs, vs.system().disturbance(), points, cfg, &mut rng).unwrap()
}

fn network(vs: &VerificationStructure<Poss>, seed: u64) -> Mlp {
    let mut rng = stream_rng(seed, 1);
    Mlp::new(1, vs.num_automaton_states(), vs.horizon(), &[16, 16, 8], vec![4.0], &mut rng).unwrap()
}

fn weighted(f: &obscert::trainer::Forward, c: [f64; 3]) -> f64 {
    f.components().iter().zip(c).map(|(l, c)| l * c).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central differences of `sum_k c_k L_k` along one parameter (or `beta` when
/// `idx` is `None`). Probes where the adversary selection or a hinge flips
/// inside the stencil are skipped, and so are probes straddling a LeakyReLU
/// kink: along one coordinate the loss is piecewise linear, so away from kinks
/// both one-sided differences agree to rounding.
fn probe(mlp: &Mlp, beta: f64, b: &PreparedBatch, cfg: &LossConfig, c: [f64; 3], idx: Option<usize>) -> Option<(f64, f64)> {
    let base = forward(mlp, beta, b, cfg).unwrap();
    let (g, gb) = gradient(mlp, beta, b, &base, c, cfg);
    let eval = |sign: f64| {
        let mut m = mlp.clone();
        let mut bt = beta;
        match idx {
            Some(i) => {
                let mut p = m.params();
                p[i] += sign * H;
                m.set_params(&p);
            }
            None => bt += sign * H,
        }
        forward(&m, bt, b, cfg).unwrap()
    };
    let (plus, minus) = (eval(1.0), eval(-1.0));
    let (lp, l0, lm) = (weighted(&plus, c), weighted(&base, c), weighted(&minus, c));
    if idx.is_some() && rel_err((lp - l0) / H, (l0 - lm) / H) > 1e-5 {
        return None;
    }
    let stable = |f: &obscert::trainer::Forward| {
        f.chosen == base.chosen && f.rec_active == base.rec_active && f.term_active == base.term_active
    };
    if !stable(&plus) || !stable(&minus) {
        return None;
    }
    let numeric = (weighted(&plus, c) - weighted(&minus, c)) / (2.0 * H);
    let analytic = match idx {
        Some(i) => g[i],
        None => gb,
    };
    Some((analytic, numeric))
}

#[test]
fn gradients_match_central_differences_per_component() {
    let vs = case_study();
    for mode in [CertMode::Universal, CertMode::Existential] {
        let cfg = small_cfg(mode);
        let b = batch(&vs, &cfg, 3, 24);
        let mlp = network(&vs, 5);
        let beta = 0.2;
        let fwd = forward(&mlp, beta, &b, &cfg).unwrap();
        let weights = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], normalized_coeffs(&cfg, fwd.norms())];
        let mut rng = stream_rng(17, mode as u64);
        for c in weights {
            let mut done = 0;
            let mut tries = 0;
            while done < 20 {
                tries += 1;
                assert!(tries < 200, "too many probes straddle a kink");
                let idx = if done == 0 { None } else { Some(rng.random_range(0..mlp.num_params())) };
                if let Some((a, n)) = probe(&mlp, beta, &b, &cfg, c, idx) {
                    assert!(rel_err(a, n) <= REL_TOL, "{mode:?} weights {c:?} param {idx:?}: analytic {a} numeric {n}");
                    done += 1;
                }
            }
        }
    }
}

#[test]
fn directional_derivatives_match_over_all_parameters() {
    let vs = case_study();
    let cfg = small_cfg(CertMode::Universal);
    let b = batch(&vs, &cfg, 8, 32);
    let mlp = network(&vs, 9);
    let beta = -0.1;
    let fwd = forward(&mlp, beta, &b, &cfg).unwrap();
    let c = normalized_coeffs(&cfg, fwd.norms());
    let (g, gb) = gradient(&mlp, beta, &b, &fwd, c, &cfg);
    let mut rng = stream_rng(21, 0);
    let mut checked = 0;
    for _ in 0..60 {
        let dir: Vec<f64> = (0..mlp.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let db: f64 = rng.random_range(-1.0..1.0);
        let at = |s: f64| {
            let mut m = mlp.clone();
            let p: Vec<f64> = m.params().iter().zip(&dir).map(|(p, d)| p + s * H * d).collect();
            m.set_params(&p);
            forward(&m, beta + s * H * db, &b, &cfg).unwrap()
        };
        let (plus, minus) = (at(1.0), at(-1.0));
        if plus.chosen != fwd.chosen || minus.chosen != fwd.chosen || plus.rec_active != fwd.rec_active {
            continue;
        }
        let numeric = (weighted(&plus, c) - weighted(&minus, c)) / (2.0 * H);
        let analytic: f64 = g.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>() + gb * db;
        assert!(rel_err(analytic, numeric) <= REL_TOL, "analytic {analytic} numeric {numeric}");
        checked += 1;
        if checked == 20 {
            break;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn closed_form_losses_of_the_zero_network() {
    let vs = case_study();
    let cfg = small_cfg(CertMode::Universal);
    let b = batch(&vs, &cfg, 1, 16);
    let zero = Mlp::zeros(1, vs.num_automaton_states(), vs.horizon(), &[8, 8], vec![4.0]).unwrap();
    let f = forward(&zero, 0.0, &b, &cfg).unwrap();
    assert_eq!(f.term, 0.0);
    assert_eq!(f.rec, 0.0);
    assert!((f.beta_loss - std::f64::consts::LN_2).abs() < 1e-12);
    let f = forward(&zero, -1.0, &b, &cfg).unwrap();
    assert_eq!(f.rec, 0.0);
    assert!((f.beta_loss - 1.313_261_687_518_222_8).abs() < 1e-12);
    // A constant network at 1 violates every non-accepting terminal point by 1.
    let mut one = zero.clone();
    let last = one.layers.last_mut().unwrap();
    last.bias[0] = 1.0;
    let f = forward(&one, 0.0, &b, &cfg).unwrap();
    let rejecting = b.accepting.iter().filter(|a| !**a).count() as f64 / b.len() as f64;
    assert!((f.term - rejecting).abs() < 1e-12);
    assert!((beta_loss(2.0) - ((-2.0f64).exp().ln_1p() - 0.02)).abs() < 1e-15);
}

#[test]
fn components_are_nonnegative_and_flag_violations() {
    let vs = case_study();
    let cfg = small_cfg(CertMode::Universal);
    for seed in 0..5 {
        let b = batch(&vs, &cfg, 100 + seed, 16);
        let mlp = network(&vs, seed);
        for beta in [-0.5, 0.0, 0.5] {
            let f = forward(&mlp, beta, &b, &cfg).unwrap();
            assert!(f.term >= 0.0 && f.rec >= 0.0);
            assert_eq!(f.term > 0.0, f.term_active.iter().any(|a| *a));
            assert_eq!(f.rec > 0.0, f.rec_active.iter().any(|a| *a));
        }
    }
}

#[test]
fn normalized_contributions_do_not_depend_on_scale() {
    let cfg = LossConfig::default();
    let raw = [0.3, 2.0, 0.7];
    let lambdas = [cfg.lambda_term, cfg.lambda_rec, cfg.lambda_beta];
    for scale in [1e-3, 0.5, 1.0, 40.0, 1e4] {
        for k in 0..3 {
            let mut comps = raw;
            comps[k] *= scale;
            let norms = comps.map(|c: f64| c.abs().max(obscert::trainer::NORM_FLOOR));
            let coeffs = normalized_coeffs(&cfg, norms);
            assert!((coeffs[k] * comps[k] - lambdas[k]).abs() < 1e-12);
        }
    }
    // End to end: the reported total equals the sum of lambdas over positive components.
    let vs = case_study();
    let lc = small_cfg(CertMode::Universal);
    let b = batch(&vs, &lc, 4, 32);
    let mlp = network(&vs, 4);
    let (v, _, _) = loss_and_grad(&mlp, 0.3, &b, &lc).unwrap();
    let expected: f64 = v.components.iter().zip(lambdas).filter(|(c, _)| **c > 1e-8).map(|(_, l)| l).sum();
    assert!((v.total - expected).abs() < 1e-9, "{v:?}");
}

#[test]
fn f32_gradients_track_f64() {
    let vs = case_study();
    let cfg = small_cfg(CertMode::Universal);
    let b = batch(&vs, &cfg, 6, 16);
    let mlp = network(&vs, 6);
    let (v64, g64, gb64) = loss_and_grad(&mlp, 0.1, &b, &cfg).unwrap();
    let (v32, g32, gb32) = loss_and_grad(&mlp.cast::<f32>(), 0.1, &b, &cfg).unwrap();
    assert!((v64.total - v32.total).abs() < 1e-3);
    assert!((gb64 - gb32).abs() < 1e-3);
    let num: f64 = g64.iter().zip(&g32).map(|(a, b)| (a - *b as f64).powi(2)).sum::<f64>().sqrt();
    let den: f64 = g64.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(num / den.max(1e-12) < 1e-3);
}

#[test]
fn dataset_mixes_trajectories_and_uniform_points() {
    let vs = case_study();
    let cfg = TrainConfig { dataset_size: 200, trajectory_fraction: 0.7, ..Default::default() };
    let domain = BoxRegion::symmetric(1, 4.0);
    let data = generate_dataset(&vs, vs.system().disturbance(), &domain, &cfg).unwrap();
    let traj = 200 * vs.horizon();
    assert_eq!(data.len(), traj + (traj as f64 * 0.3 / 0.7).round() as usize);
    assert!(data.iter().all(|p| p.s < vs.horizon() && (p.q as usize) < vs.num_automaton_states()));
    assert!(data[..traj].iter().step_by(vs.horizon()).all(|p| p.s == 0 && p.x1[0].abs() <= 2.0));
    assert_eq!(data, generate_dataset(&vs, vs.system().disturbance(), &domain, &cfg).unwrap());
}

fn tiny_train_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 6,
        dataset_size: 50,
        batch_size: 16,
        n_adversary: 3,
        m_inner: 2,
        hidden: vec![8, 8],
        seed,
        log_every: 3,
        validation: ValidationConfig { per_dim: 5, calibrate_per_dim: 5, candidates: 3, quadrature_nodes: 3, scan_per_dim: 5, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let vs = case_study();
    let domain = BoxRegion::symmetric(1, 4.0);
    let dist = vs.system().disturbance().clone();
    let a = train::<_, f64>(&vs, &dist, &domain, &tiny_train_cfg(2), None).unwrap();
    let b = train::<_, f64>(&vs, &dist, &domain, &tiny_train_cfg(2), None).unwrap();
    let c = train::<_, f64>(&vs, &dist, &domain, &tiny_train_cfg(3), None).unwrap();
    let params = |o: &obscert::trainer::TrainOutcome<f64>| match &o.certificate.backing {
        obscert::certify::Backing::Mlp(m) => m.params(),
        _ => unreachable!(),
    };
    assert_eq!(params(&a).iter().map(|v| v.to_bits()).collect::<Vec<_>>(), params(&b).iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.certificate.beta.to_bits(), b.certificate.beta.to_bits());
    assert_eq!(a.log, b.log);
    assert_ne!(params(&a), params(&c));
    assert_eq!(a.log.len(), 6);
    assert!(a.log[2].bound_estimate.is_some() && a.log[0].bound_estimate.is_none());
}

#[test]
fn empty_target_yields_a_nonpositive_bound() {
    let m = scalar_square();
    let f = obscert::ltlf::parse("forall s2. false").unwrap();
    let initial = m.initial().clone();
    let vs = VerificationStructure::new(m, &f, None, initial, None).unwrap();
    let domain = BoxRegion::symmetric(1, 4.0);
    let dist = vs.system().disturbance().clone();
    let out = train::<_, f64>(&vs, &dist, &domain, &tiny_train_cfg(0), None).unwrap();
    let b = out.bound.unwrap();
    assert!(b.overall <= 0.0, "{}", b.overall);
    assert!(out.report.unwrap().passed());
}
