use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{CertMode, Certificate, Query};
use crate::error::{Error, Result};
use crate::product::VerificationStructure;
use crate::scalar::Real;
use crate::system::{State, System};

pub const DEFAULT_SCAN_PER_DIM: usize = 201;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub x0: State,
    /// The optimizing initial state of the second copy.
    pub companion: State,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: CertMode,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: usize,
    pub companions_scanned: usize,
    pub entries: Vec<BoundEntry>,
    /// Minimum of the per-state bounds over the scanned initial states.
    pub overall: f64,
    pub overall_x0: State,
}

/// Bound at one initial state: the inf (universal) or sup (existential) of
/// `V((x0, x0', q0), 0)` over `companions`, mapped through the closed form.
pub fn bound_at<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    x0: &[f64],
    companions: &[State],
) -> Result<BoundEntry> {
    if companions.is_empty() {
        return Err(Error::EmptySet);
    }
    let q0 = vs.dfa().initial() as usize;
    let queries: Vec<Query> = companions.iter().map(|c| Query { x1: x0, x2: c, q: q0, t: 0 }).collect();
    let values = cert.eval_many(&queries)?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        let better = match cert.mode {
            CertMode::Universal => *v < values[best],
            CertMode::Existential => *v > values[best],
        };
        if better {
            best = i;
        }
    }
    let value = values[best];
    Ok(BoundEntry { x0: x0.to_vec(), companion: companions[best].clone(), value, bound: cert.bound_from_value(value) })
}

/// Per-state bounds over `x0s` and their minimum.
pub fn bound<S: System, T: Real>(
    cert: &Certificate<T>,
    vs: &VerificationStructure<S>,
    x0s: &[State],
    companions: &[State],
) -> Result<BoundReport> {
    if x0s.is_empty() {
        return Err(Error::EmptySet);
    }
    let entries: Vec<BoundEntry> = x0s.par_iter().map(|x0| bound_at(cert, vs, x0, companions)).collect::<Result<_>>()?;
    let mut worst = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.bound < entries[worst].bound {
            worst = i;
        }
    }
    Ok(BoundReport {
        mode: cert.mode,
        alpha: cert.alpha,
        beta: cert.beta,
        horizon: cert.horizon,
        companions_scanned: companions.len(),
        overall: entries[worst].bound,
        overall_x0: entries[worst].x0.clone(),
        entries,
    })
}
