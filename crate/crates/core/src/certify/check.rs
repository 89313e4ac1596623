use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{Certificate, Query};
use crate::error::Result;
use crate::oracle::ValueTable;
use crate::product::{ProductState, VerificationStructure};
use crate::region::{tensor_product, BoxRegion};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::system::{State, System};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// How the expectation over `w1` is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRule {
    /// Fixed nodes and weights (weights sum to 1).
    Quadrature(Vec<(Vec<f64>, f64)>),
    /// `samples` draws from the system's disturbance law per point.
    MonteCarlo { samples: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSettings {
    /// Finite `w2` set for the inf/sup.
    pub candidates: Vec<Vec<f64>>,
    pub inner: InnerRule,
    pub seed: u64,
    pub tol: f64,
    /// Inclusive time range to check.
    pub t_range: (usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationSummary {
    pub checked: usize,
    pub violations: usize,
    /// Smallest signed margin seen (negative means violated).
    pub worst_margin: f64,
}

impl ViolationSummary {
    fn empty() -> Self {
        Self { checked: 0, violations: 0, worst_margin: f64::INFINITY }
    }

    fn record(&mut self, margin: f64, tol: f64) {
        self.checked += 1;
        if margin < -tol {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    fn merge(mut self, other: &Self) -> Self {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeMargins {
    pub t: usize,
    pub terminal: Option<ViolationSummary>,
    pub recursion: Option<ViolationSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub terminal: ViolationSummary,
    pub recursion: ViolationSummary,
    pub points_checked: usize,
    pub grid_per_dim: Option<usize>,
    pub num_candidates: usize,
    pub inner: String,
    pub seed: u64,
    pub tol: f64,
    /// "validated (quadrature)" or "validated (statistical)" when clean.
    pub status: String,
    pub per_t: Vec<TimeMargins>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.terminal.violations == 0 && self.recursion.violations == 0
    }

    pub fn total_violations(&self) -> usize {
        self.terminal.violations + self.recursion.violations
    }

    /// `t, terminal_worst, terminal_violations, recursion_worst, recursion_violations`.
    pub fn margins_csv(&self) -> String {
        let mut out = String::from("t,terminal_worst,terminal_violations,recursion_worst,recursion_violations\n");
        let cell = |s: &Option<ViolationSummary>| match s {
            Some(s) => (format!("{}", s.worst_margin), s.violations.to_string()),
            None => (String::new(), String::new()),
        };
        for m in &self.per_t {
            let (tw, tv) = cell(&m.terminal);
            let (rw, rv) = cell(&m.recursion);
            let _ = writeln!(out, "{},{tw},{tv},{rw},{rv}", m.t);
        }
        out
    }
}

/// Checks `V(v, T) <= 1_G(v)` at every `(x1, x2)` pair and automaton state.
pub fn check_terminal<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    pairs: &[(State, State)],
    tol: f64,
) -> Result<ViolationSummary> {
    let horizon = cert.horizon;
    let nq = vs.num_automaton_states();
    let parts: Vec<ViolationSummary> = pairs
        .par_iter()
        .map(|(x1, x2)| {
            let queries: Vec<Query> = (0..nq).map(|q| Query { x1, x2, q, t: horizon }).collect();
            let values = cert.eval_many(&queries)?;
            let mut s = ViolationSummary::empty();
            for (q, v) in values.into_iter().enumerate() {
                let acc = vs.is_accepting(&ProductState::new(x1.clone(), x2.clone(), q as u32))?;
                s.record(f64::from(u8::from(acc)) - v, tol);
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().fold(ViolationSummary::empty(), |a, b| a.merge(b)))
}

/// Per-time recursion summaries over `pairs`.
///
/// For each pair, automaton state and `t` in range (`t >= 1`), the statistic
/// is the min (universal) or max (existential) over candidates of the inner
/// expectation of `V(v', t)`; the margin is that minus `V(v, t-1)/alpha + beta`.
pub fn check_recursion<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    pairs: &[(State, State)],
    settings: &CheckSettings,
) -> Result<Vec<(usize, ViolationSummary)>> {
    let nq = vs.num_automaton_states();
    let (t_lo, t_hi) = (settings.t_range.0.max(1), settings.t_range.1.min(cert.horizon));
    if t_lo > t_hi {
        return Ok(Vec::new());
    }
    let times: Vec<usize> = (t_lo..=t_hi).collect();
    let parts: Vec<Vec<ViolationSummary>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x1, x2))| {
            let (w1s, weights): (Vec<Vec<f64>>, Vec<f64>) = match &settings.inner {
                InnerRule::Quadrature(rule) => rule.iter().cloned().unzip(),
                InnerRule::MonteCarlo { samples } => {
                    let mut rng = stream_rng(settings.seed, i as u64);
                    let m = (*samples).max(1);
                    ((0..m).map(|_| vs.system().sample_disturbance(&mut rng)).collect(), vec![1.0 / m as f64; m])
                }
            };
            let mut out = vec![ViolationSummary::empty(); times.len()];
            for q in 0..nq {
                let v = ProductState::new(x1.clone(), x2.clone(), q as u32);
                // successors[j][k]
                let mut succ: Vec<Vec<ProductState>> = Vec::with_capacity(settings.candidates.len());
                for w2 in &settings.candidates {
                    succ.push(w1s.iter().map(|w1| vs.step(&v, w1, w2)).collect::<Result<_>>()?);
                }
                for (ti, &t) in times.iter().enumerate() {
                    let mut queries = vec![Query { x1, x2, q, t: t - 1 }];
                    for row in &succ {
                        for s in row {
                            if let ProductState::Live { x1, x2, q } = s {
                                queries.push(Query { x1, x2, q: *q as usize, t });
                            }
                        }
                    }
                    let values = cert.eval_many(&queries)?;
                    let current = values[0];
                    let mut next = values[1..].iter();
                    let mut stat: Option<f64> = None;
                    for row in &succ {
                        let mut e = 0.0;
                        for (s, w) in row.iter().zip(&weights) {
                            if !s.is_sink() {
                                e += w * next.next().expect("one value per live successor");
                            }
                        }
                        stat = Some(stat.map_or(e, |b| cert.mode.pick(b, e)));
                    }
                    let stat = stat.unwrap_or(0.0);
                    out[ti].record(stat - (current / cert.alpha + cert.beta), settings.tol);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(ti, &t)| (t, parts.iter().fold(ViolationSummary::empty(), |a, p| a.merge(&p[ti]))))
        .collect())
}

/// All `(x1, x2)` pairs from a `per_dim`-per-axis grid over `domain`.
pub fn grid_pairs(domain: &BoxRegion, per_dim: usize) -> Vec<(State, State)> {
    let nodes = domain.grid(per_dim);
    let mut out = Vec::with_capacity(nodes.len() * nodes.len());
    for a in &nodes {
        for b in &nodes {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

/// All pairs over a set of nodes.
pub fn node_pairs(nodes: &[State]) -> Vec<(State, State)> {
    tensor_product(&[(0..nodes.len()).map(|i| i as f64).collect(), (0..nodes.len()).map(|i| i as f64).collect()])
        .into_iter()
        .map(|p| (nodes[p[0] as usize].clone(), nodes[p[1] as usize].clone()))
        .collect()
}

fn summarize<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    pairs: &[(State, State)],
    settings: &CheckSettings,
    grid_per_dim: Option<usize>,
) -> Result<CheckReport> {
    let (t_lo, t_hi) = settings.t_range;
    let terminal = if t_lo <= cert.horizon && cert.horizon <= t_hi {
        check_terminal(cert, vs, pairs, settings.tol)?
    } else {
        ViolationSummary::empty()
    };
    let rec = check_recursion(cert, vs, pairs, settings)?;
    let recursion = rec.iter().fold(ViolationSummary::empty(), |a, (_, s)| a.merge(s));
    let per_t = (t_lo..=t_hi.min(cert.horizon))
        .map(|t| TimeMargins {
            t,
            terminal: (t == cert.horizon).then(|| terminal.clone()),
            recursion: rec.iter().find(|(u, _)| *u == t).map(|(_, s)| s.clone()),
        })
        .collect();
    let (inner, kind) = match &settings.inner {
        InnerRule::Quadrature(r) => (format!("quadrature ({} nodes)", r.len()), "quadrature"),
        InnerRule::MonteCarlo { samples } => (format!("monte carlo ({samples} samples)"), "statistical"),
    };
    let mut report = CheckReport {
        terminal,
        recursion,
        points_checked: pairs.len(),
        grid_per_dim,
        num_candidates: settings.candidates.len(),
        inner,
        seed: settings.seed,
        tol: settings.tol,
        status: String::new(),
        per_t,
    };
    report.status = if report.passed() { format!("validated ({kind})") } else { format!("{} violations", report.total_violations()) };
    Ok(report)
}

/// Terminal and recursion checks over explicit pairs.
pub fn check_pairs<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    pairs: &[(State, State)],
    settings: &CheckSettings,
) -> Result<CheckReport> {
    summarize(cert, vs, pairs, settings, None)
}

/// Terminal and recursion checks on a uniform `per_dim` grid over `domain`
/// for both copies.
pub fn validate_dense<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    domain: &BoxRegion,
    per_dim: usize,
    settings: &CheckSettings,
) -> Result<CheckReport> {
    summarize(cert, vs, &grid_pairs(domain, per_dim), settings, Some(per_dim))
}

/// Table-backed certificate `max(u_t - delta, 0)` with `alpha = 1` and
/// `beta` set to the worst (nonpositive) recursion residual over `pairs`.
pub fn table_to_certificate<S: System, T: Real>(
    table: ValueTable<T>,
    delta: f64,
    vs: &VerificationStructure<S>,
    pairs: &[(State, State)],
    settings: &CheckSettings,
) -> Result<Certificate<T>> {
    let mut cert = Certificate::from_table(table, delta, vs.dfa().hash());
    let settings = CheckSettings { t_range: (1, cert.horizon), ..settings.clone() };
    let worst = check_recursion(&cert, vs, pairs, &settings)?
        .iter()
        .map(|(_, s)| s.worst_margin)
        .fold(f64::INFINITY, f64::min);
    cert.beta = if worst.is_finite() { worst.min(0.0) } else { 0.0 };
    cert.validate()?;
    Ok(cert)
}

/// Shifts the certificate so the terminal condition holds on `pairs`, then
/// sets `beta` to the worst recursion residual there, less `slack`.
pub fn calibrate<S: System, T: Real>(
    cert: &mut Certificate<T>,
    vs: &VerificationStructure<S>,
    pairs: &[(State, State)],
    settings: &CheckSettings,
    slack: f64,
) -> Result<()> {
    let term = check_terminal(cert, vs, pairs, 0.0)?;
    if term.worst_margin < 0.0 {
        cert.offset -= term.worst_margin - slack;
    }
    cert.beta = 0.0;
    let settings = CheckSettings { t_range: (1, cert.horizon), ..settings.clone() };
    let worst = check_recursion(cert, vs, pairs, &settings)?
        .iter()
        .map(|(_, s)| s.worst_margin)
        .fold(f64::INFINITY, f64::min);
    if worst.is_finite() {
        cert.beta = worst - slack;
    }
    Ok(())
}
