use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::expr::Expr;
use crate::error::{Error, Result};
use crate::region::{BoxRegion, StateRegion};
use crate::system::{State, System};

/// Serializable description of a partially observable stochastic system.
///
/// Dimensions are inferred from the expression vectors when omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PossConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance_dim: Option<usize>,
    pub domain: BoxRegion,
    pub initial: StateRegion,
    pub dynamics: Vec<Expr>,
    pub output: Vec<Expr>,
    pub disturbance: Distribution,
    pub horizon: usize,
}

/// `x_{t+1} = f(x_t, w_t)`, `y_t = Omega(x_t)`, `w_t ~ mu`, over `T` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Poss {
    config: PossConfig,
    state_dim: usize,
    output_dim: usize,
    disturbance_dim: usize,
}

fn check_dim(what: &'static str, declared: Option<usize>, actual: usize) -> Result<usize> {
    match declared {
        Some(d) if d != actual => Err(Error::Dimension { what, expected: d, got: actual }),
        _ => Ok(actual),
    }
}

impl Poss {
    pub fn new(config: PossConfig) -> Result<Self> {
        if config.dynamics.is_empty() || config.output.is_empty() {
            return Err(Error::Config("dynamics and output must have at least one component".into()));
        }
        let state_dim = check_dim("dynamics", config.state_dim, config.dynamics.len())?;
        let output_dim = check_dim("output", config.output_dim, config.output.len())?;
        config.disturbance.validate()?;
        let disturbance_dim = check_dim("disturbance", config.disturbance_dim, config.disturbance.dim())?;
        config.domain.validate()?;
        if config.domain.dim() != state_dim {
            return Err(Error::Dimension { what: "domain", expected: state_dim, got: config.domain.dim() });
        }
        if config.initial.dim() != state_dim {
            return Err(Error::Dimension { what: "initial", expected: state_dim, got: config.initial.dim() });
        }
        if !config.initial.is_subset_of(&config.domain) {
            return Err(Error::Config("initial region must lie inside the domain".into()));
        }
        for (name, exprs, allow_w) in [("dynamics", &config.dynamics, true), ("output", &config.output, false)] {
            for e in exprs.iter() {
                let (nx, nw) = e.arity();
                if nx > state_dim || nw > disturbance_dim || (!allow_w && nw > 0) {
                    return Err(Error::Config(format!(
                        "{name} expression `{e}` references an undeclared variable \
                         (state dim {state_dim}, disturbance dim {disturbance_dim})"
                    )));
                }
            }
        }
        Ok(Self { config, state_dim, output_dim, disturbance_dim })
    }

    pub fn config(&self) -> &PossConfig {
        &self.config
    }

    pub fn domain(&self) -> &BoxRegion {
        &self.config.domain
    }

    pub fn initial(&self) -> &StateRegion {
        &self.config.initial
    }

    pub fn disturbance(&self) -> &Distribution {
        &self.config.disturbance
    }

    /// The same model with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        let mut m = self.clone();
        m.config.horizon = horizon;
        m
    }
}

impl System for Poss {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn disturbance_dim(&self) -> usize {
        self.disturbance_dim
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn step(&self, x: &[f64], w: &[f64]) -> Result<State> {
        if x.len() != self.state_dim {
            return Err(Error::Dimension { what: "state", expected: self.state_dim, got: x.len() });
        }
        if w.len() != self.disturbance_dim {
            return Err(Error::Dimension { what: "disturbance", expected: self.disturbance_dim, got: w.len() });
        }
        self.config.dynamics.iter().map(|e| e.eval(x, w).map_err(Error::from)).collect()
    }

    fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.state_dim {
            return Err(Error::Dimension { what: "state", expected: self.state_dim, got: x.len() });
        }
        self.config.output.iter().map(|e| e.eval(x, &[]).map_err(Error::from)).collect()
    }

    fn sample_disturbance(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.config.disturbance.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_2d() -> Poss {
        Poss::new(PossConfig {
            state_dim: None,
            output_dim: None,
            disturbance_dim: None,
            domain: BoxRegion::symmetric(2, 5.0),
            initial: StateRegion::from_box(BoxRegion::symmetric(2, 1.0)),
            dynamics: vec!["x2 + w1".parse().unwrap(), "-x1 + w2".parse().unwrap()],
            output: vec!["x1".parse().unwrap()],
            disturbance: Distribution::GaussianDiag { mean: vec![0.0; 2], std: vec![0.1; 2] },
            horizon: 3,
        })
        .unwrap()
    }

    #[test]
    fn rotation_step() {
        let m = affine_2d();
        assert_eq!(m.step(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        assert!(matches!(m.step(&[1.0], &[0.0, 0.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let mut c = affine_2d().config().clone();
        c.output = vec!["x3".parse().unwrap()];
        assert!(Poss::new(c).is_err());
        let mut c = affine_2d().config().clone();
        c.output = vec!["x1 + w1".parse().unwrap()];
        assert!(Poss::new(c).is_err());
        let mut c = affine_2d().config().clone();
        c.initial = StateRegion::from_box(BoxRegion::symmetric(2, 6.0));
        assert!(Poss::new(c).is_err());
        let mut c = affine_2d().config().clone();
        c.state_dim = Some(3);
        assert!(Poss::new(c).is_err());
    }

    #[test]
    fn non_finite_step_is_an_error() {
        let mut c = affine_2d().config().clone();
        c.dynamics[0] = "exp(x1*1000)".parse().unwrap();
        let m = Poss::new(c).unwrap();
        assert!(m.step(&[1.0, 0.0], &[0.0, 0.0]).is_err());
    }
}
