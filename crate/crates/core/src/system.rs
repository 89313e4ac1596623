//! The interface every discrete-time system exposes to the verification layers.

use rand::RngCore;

use crate::error::Result;

/// A point of the state space.
pub type State = Vec<f64>;

/// Discrete-time stochastic dynamics `x' = f(x, w)`, `w ~ mu`, with output map.
pub trait System: Sync {
    fn state_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn disturbance_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    fn step(&self, x: &[f64], w: &[f64]) -> Result<State>;
    fn output(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn sample_disturbance(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}
