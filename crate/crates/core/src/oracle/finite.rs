//! Finite systems: a handful of states with coordinates and outputs, a finite
//! disturbance set with exact probabilities, and an explicit successor table.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::region::{BoxRegion, StateRegion};
use crate::scalar::Probability;
use crate::system::{State, System};

/// Guard for exhaustive enumerations.
pub const ENUMERATION_CAP: u128 = 20_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteInstance<P: Probability = f64> {
    /// Distinct coordinates of each state.
    pub coords: Vec<Vec<f64>>,
    /// Output vector of each state.
    pub outputs: Vec<Vec<f64>>,
    /// `succ[x][w]` is the successor of state `x` under disturbance `w`.
    pub succ: Vec<Vec<usize>>,
    pub probs: Vec<P>,
    pub initial: Vec<usize>,
    pub horizon: usize,
}

/// Settings for [`FiniteInstance::random`].
#[derive(Clone, Debug)]
pub struct RandomInstanceConfig {
    pub max_states: usize,
    pub max_disturbances: usize,
    pub max_horizon: usize,
    /// Coordinates are distinct integers in `-coord_range..=coord_range`.
    pub coord_range: i32,
    /// Outputs are integers in `0..output_levels`.
    pub output_levels: u32,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        Self { max_states: 5, max_disturbances: 3, max_horizon: 4, coord_range: 3, output_levels: 3 }
    }
}

impl<P: Probability> FiniteInstance<P> {
    pub fn new(
        coords: Vec<Vec<f64>>,
        outputs: Vec<Vec<f64>>,
        succ: Vec<Vec<usize>>,
        probs: Vec<P>,
        initial: Vec<usize>,
        horizon: usize,
    ) -> Result<Self> {
        let inst = Self { coords, outputs, succ, probs, initial, horizon };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.coords.len();
        if n == 0 || self.probs.is_empty() || self.initial.is_empty() {
            return Err(Error::Config("finite instance needs states, disturbances and initial states".into()));
        }
        if self.outputs.len() != n || self.succ.len() != n {
            return Err(Error::LengthMismatch { left: n, right: self.outputs.len().min(self.succ.len()) });
        }
        let d = self.coords[0].len();
        for (i, c) in self.coords.iter().enumerate() {
            if c.len() != d {
                return Err(Error::Dimension { what: "state coordinates", expected: d, got: c.len() });
            }
            if self.coords[..i].contains(c) {
                return Err(Error::Config(format!("state coordinates {c:?} are repeated")));
            }
        }
        for row in &self.succ {
            if row.len() != self.probs.len() || row.iter().any(|&s| s >= n) {
                return Err(Error::Config("successor table must be total over states and disturbances".into()));
            }
        }
        if self.initial.iter().any(|&s| s >= n) {
            return Err(Error::Config("initial state index out of range".into()));
        }
        if self.probs.iter().any(|p| *p <= P::zero()) {
            return Err(Error::Config("disturbance probabilities must be positive".into()));
        }
        let total = self.probs.iter().fold(P::zero(), |acc, p| acc + p.clone());
        if (total.to_f64() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("disturbance probabilities sum to {}", total.to_f64())));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.coords.len()
    }

    pub fn num_disturbances(&self) -> usize {
        self.probs.len()
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.coords.iter().position(|c| c.as_slice() == x)
    }

    /// Every length-`T+1` state sequence from `x0` with its probability
    /// (disturbance sequences leading to the same states are merged).
    pub fn trajectories_from(&self, x0: usize) -> Result<Vec<(Vec<usize>, P)>> {
        let count = (self.num_disturbances() as u128).checked_pow(self.horizon as u32).unwrap_or(u128::MAX);
        if count > ENUMERATION_CAP {
            return Err(Error::Combinatorial { count, cap: ENUMERATION_CAP });
        }
        let mut paths: Vec<(Vec<usize>, P)> = vec![(vec![x0], P::one())];
        for _ in 0..self.horizon {
            let mut next: Vec<(Vec<usize>, P)> = Vec::with_capacity(paths.len() * self.num_disturbances());
            for (path, p) in &paths {
                let last = *path.last().expect("nonempty");
                for (w, pw) in self.probs.iter().enumerate() {
                    let mut q = path.clone();
                    q.push(self.succ[last][w]);
                    next.push((q, p.clone() * pw.clone()));
                }
            }
            next.sort_by(|a, b| a.0.cmp(&b.0));
            let mut merged: Vec<(Vec<usize>, P)> = Vec::with_capacity(next.len());
            for (path, p) in next {
                match merged.last_mut() {
                    Some((last, acc)) if *last == path => *acc = acc.clone() + p,
                    _ => merged.push((path, p)),
                }
            }
            paths = merged;
        }
        Ok(paths)
    }

    /// All state sequences of length `T+1` starting in the initial set.
    pub fn all_trajectories(&self) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        for &x0 in &self.initial {
            out.extend(self.trajectories_from(x0)?.into_iter().map(|(s, _)| s));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// The smallest box region containing exactly the listed states, if one
    /// exists (used to express secret sets).
    pub fn region_of(&self, states: &[usize]) -> Option<StateRegion> {
        if states.is_empty() {
            return None;
        }
        let boxes = states
            .iter()
            .map(|&s| BoxRegion { lo: self.coords[s].clone(), hi: self.coords[s].clone() })
            .collect();
        StateRegion::new(boxes).ok()
    }

    pub fn with_probabilities<Q: Probability>(&self, probs: Vec<Q>) -> FiniteInstance<Q> {
        FiniteInstance {
            coords: self.coords.clone(),
            outputs: self.outputs.clone(),
            succ: self.succ.clone(),
            probs,
            initial: self.initial.clone(),
            horizon: self.horizon,
        }
    }

    /// Random one-dimensional instance with integer coordinates and outputs
    /// and probabilities `k_i / sum k` for small integers `k_i`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomInstanceConfig) -> Self {
        let n = rng.random_range(2..=cfg.max_states.max(2));
        let m = rng.random_range(1..=cfg.max_disturbances.max(1));
        let horizon = rng.random_range(1..=cfg.max_horizon.max(1));
        let mut pool: Vec<i32> = (-cfg.coord_range..=cfg.coord_range).collect();
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n.min(pool.len()) {
            let i = rng.random_range(0..pool.len());
            coords.push(vec![pool.swap_remove(i) as f64]);
        }
        let n = coords.len();
        let outputs = (0..n).map(|_| vec![rng.random_range(0..cfg.output_levels.max(1)) as f64]).collect();
        let succ = (0..n).map(|_| (0..m).map(|_| rng.random_range(0..n)).collect()).collect();
        let ks: Vec<u64> = (0..m).map(|_| rng.random_range(1..=4)).collect();
        let total: u64 = ks.iter().sum();
        let probs = ks.iter().map(|&k| P::from_ratio(k, total)).collect();
        let n_init = rng.random_range(1..=n);
        let mut initial: Vec<usize> = (0..n).collect();
        while initial.len() > n_init {
            let i = rng.random_range(0..initial.len());
            initial.remove(i);
        }
        Self { coords, outputs, succ, probs, initial, horizon }
    }
}

/// States are addressed by their coordinates; the disturbance is the
/// one-dimensional index `w = [k]`.
impl<P: Probability> System for FiniteInstance<P> {
    fn state_dim(&self) -> usize {
        self.coords[0].len()
    }

    fn output_dim(&self) -> usize {
        self.outputs[0].len()
    }

    fn disturbance_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn step(&self, x: &[f64], w: &[f64]) -> Result<State> {
        let i = self.index_of(x).ok_or_else(|| Error::Config(format!("{x:?} is not a state of the instance")))?;
        let k = w.first().copied().unwrap_or(f64::NAN);
        if !(k >= 0.0 && k.fract() == 0.0 && (k as usize) < self.num_disturbances()) {
            return Err(Error::Config(format!("{w:?} is not a disturbance index")));
        }
        Ok(self.coords[self.succ[i][k as usize]].clone())
    }

    fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        let i = self.index_of(x).ok_or_else(|| Error::Config(format!("{x:?} is not a state of the instance")))?;
        Ok(self.outputs[i].clone())
    }

    fn sample_disturbance(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in self.probs.iter().enumerate() {
            acc += p.to_f64();
            if u < acc {
                return vec![k as f64];
            }
        }
        vec![(self.num_disturbances() - 1) as f64]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use num_rational::BigRational;

    fn chain() -> FiniteInstance<BigRational> {
        let half = BigRational::from_ratio(1, 2);
        FiniteInstance::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![vec![0.0], vec![1.0], vec![1.0]],
            vec![vec![1, 2], vec![1, 1], vec![2, 0]],
            vec![half.clone(), half],
            vec![0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn trajectory_probabilities_sum_to_one() {
        let inst = chain();
        let paths = inst.trajectories_from(0).unwrap();
        let total = paths.iter().fold(BigRational::from_ratio(0, 1), |a, (_, p)| a + p.clone());
        assert_eq!(total, BigRational::from_ratio(1, 1));
        // Both disturbances from state 1 lead to 1, so those paths merge.
        assert_eq!(paths.len(), 3);
    }

    #[test]
    fn embedded_step_follows_table() {
        let inst = chain();
        assert_eq!(inst.step(&[2.0], &[1.0]).unwrap(), vec![0.0]);
        assert!(inst.step(&[3.0], &[0.0]).is_err());
        assert!(inst.step(&[0.0], &[2.0]).is_err());
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..50 {
            let inst: FiniteInstance<BigRational> = FiniteInstance::random(&mut rng, &RandomInstanceConfig::default());
            inst.validate().unwrap();
            assert!(inst.num_states() <= 5 && inst.num_disturbances() <= 3 && inst.horizon <= 4);
        }
    }
}
