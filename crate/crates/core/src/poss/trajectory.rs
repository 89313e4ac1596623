use std::fmt::Write as _;

use rand::RngCore;

use super::model::Poss;
use crate::error::{Error, Result};
use crate::system::{State, System};

/// States `x_0..x_T`, with the disturbances that produced them when known.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub disturbances: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectories hold at least the initial state")
    }

    /// Re-applies the recorded disturbances from `x_0`.
    pub fn replay<S: System + ?Sized>(&self, system: &S) -> Result<Vec<State>> {
        let ws = self.disturbances.as_ref().ok_or_else(|| Error::Config("trajectory has no recorded disturbances".into()))?;
        let mut out = vec![self.states[0].clone()];
        for w in ws {
            let next = system.step(out.last().expect("nonempty"), w)?;
            out.push(next);
        }
        Ok(out)
    }
}

/// Rolls the dynamics forward from `x0` for the system's horizon, drawing
/// disturbances from `rng`.
pub fn simulate<S: System + ?Sized>(system: &S, x0: &[f64], rng: &mut dyn RngCore) -> Result<Trajectory> {
    if x0.len() != system.state_dim() {
        return Err(Error::Dimension { what: "initial state", expected: system.state_dim(), got: x0.len() });
    }
    let horizon = system.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut ws = Vec::with_capacity(horizon);
    states.push(x0.to_vec());
    for _ in 0..horizon {
        let w = system.sample_disturbance(rng);
        let next = system.step(states.last().expect("nonempty"), &w)?;
        states.push(next);
        ws.push(w);
    }
    Ok(Trajectory { states, disturbances: Some(ws) })
}

/// Like [`simulate`], but requires `x0` to lie in the model's initial set.
pub fn sample_trajectory(model: &Poss, x0: &[f64], rng: &mut dyn RngCore) -> Result<Trajectory> {
    if x0.len() == model.state_dim() && !model.initial().contains(x0) {
        return Err(Error::Config(format!("x0 = {x0:?} is outside the initial region")));
    }
    simulate(model, x0, rng)
}

pub fn output_trace<S: System + ?Sized>(system: &S, traj: &Trajectory) -> Result<Vec<Vec<f64>>> {
    traj.states.iter().map(|x| system.output(x)).collect()
}

/// CSV with columns `t, x1.., w1.., y1..`; the final row has empty `w` cells.
pub fn trajectory_csv<S: System + ?Sized>(system: &S, traj: &Trajectory) -> Result<String> {
    let (dx, dw, dy) = (system.state_dim(), system.disturbance_dim(), system.output_dim());
    let mut header = vec!["t".to_string()];
    header.extend((1..=dx).map(|i| format!("x{i}")));
    header.extend((1..=dw).map(|i| format!("w{i}")));
    header.extend((1..=dy).map(|i| format!("y{i}")));
    let mut out = header.join(",");
    out.push('\n');
    let ys = output_trace(system, traj)?;
    for (t, x) in traj.states.iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in x {
            let _ = write!(out, ",{v}");
        }
        let w = traj.disturbances.as_ref().and_then(|ws| ws.get(t));
        for i in 0..dw {
            match w {
                Some(w) => {
                    let _ = write!(out, ",{}", w[i]);
                }
                None => out.push(','),
            }
        }
        for v in &ys[t] {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}
