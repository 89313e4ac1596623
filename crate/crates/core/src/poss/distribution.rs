use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, tensor_rule};
use crate::region::{linspace, tensor_product, BoxRegion};

/// Disturbance measure on `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    GaussianDiag { mean: Vec<f64>, std: Vec<f64> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    TruncatedGaussian { mean: Vec<f64>, std: Vec<f64>, sigmas: f64 },
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl Distribution {
    pub fn gaussian(mean: f64, std: f64) -> Self {
        Distribution::GaussianDiag { mean: vec![mean], std: vec![std] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::GaussianDiag { mean, .. } | Distribution::TruncatedGaussian { mean, .. } => mean.len(),
            Distribution::UniformBox { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::GaussianDiag { mean, std } | Distribution::TruncatedGaussian { mean, std, .. } => {
                if mean.is_empty() || mean.len() != std.len() {
                    return Err(Error::Config("gaussian mean and std must be nonempty and of equal length".into()));
                }
                if std.iter().any(|s| !(s.is_finite() && *s > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Config("gaussian std must be positive and parameters finite".into()));
                }
                if let Distribution::TruncatedGaussian { sigmas, .. } = self {
                    if !(sigmas.is_finite() && *sigmas > 0.0) {
                        return Err(Error::Config("truncation sigmas must be positive".into()));
                    }
                }
                Ok(())
            }
            Distribution::UniformBox { lo, hi } => BoxRegion::new(lo.clone(), hi.clone()).map(|_| ()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Distribution::GaussianDiag { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + s * z
                })
                .collect(),
            Distribution::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(l, h)| if l < h { rng.random_range(*l..=*h) } else { *l }).collect()
            }
            Distribution::TruncatedGaussian { mean, std, sigmas } => mean
                .iter()
                .zip(std)
                .map(|(m, s)| m + s * truncated_standard_normal(rng, *sigmas))
                .collect(),
        }
    }

    /// Draw restricted to [`Self::support`] with the given truncation.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, rng: &mut R, sigmas: f64) -> Vec<f64> {
        match self {
            Distribution::GaussianDiag { mean, std } => Distribution::TruncatedGaussian {
                mean: mean.clone(),
                std: std.clone(),
                sigmas,
            }
            .sample(rng),
            _ => self.sample(rng),
        }
    }

    /// Bounded support, truncating untruncated Gaussians at `sigmas` std.
    pub fn support(&self, sigmas: f64) -> BoxRegion {
        let around = |mean: &[f64], std: &[f64], k: f64| BoxRegion {
            lo: mean.iter().zip(std).map(|(m, s)| m - k * s).collect(),
            hi: mean.iter().zip(std).map(|(m, s)| m + k * s).collect(),
        };
        match self {
            Distribution::GaussianDiag { mean, std } => around(mean, std, sigmas),
            Distribution::TruncatedGaussian { mean, std, sigmas: k } => around(mean, std, *k),
            Distribution::UniformBox { lo, hi } => BoxRegion { lo: lo.clone(), hi: hi.clone() },
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Distribution::GaussianDiag { mean, .. } | Distribution::TruncatedGaussian { mean, .. } => mean.clone(),
            Distribution::UniformBox { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }

    pub fn std(&self) -> Vec<f64> {
        match self {
            Distribution::GaussianDiag { std, .. } => std.clone(),
            Distribution::UniformBox { lo, hi } => lo.iter().zip(hi).map(|(l, h)| (h - l) / 12f64.sqrt()).collect(),
            Distribution::TruncatedGaussian { std, sigmas, .. } => {
                let k = *sigmas;
                let mass = erf(k / std::f64::consts::SQRT_2);
                let factor = (1.0 - 2.0 * k * std_normal_pdf(k) / mass).sqrt();
                std.iter().map(|s| s * factor).collect()
            }
        }
    }

    /// Tensor quadrature on the truncated support: Gauss-Legendre nodes with
    /// weights multiplied by the density and renormalized to sum to one.
    pub fn quadrature(&self, nodes_per_dim: usize, sigmas: f64) -> Vec<(Vec<f64>, f64)> {
        let support = self.support(sigmas);
        let (gx, gw) = gauss_legendre(nodes_per_dim);
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..self.dim())
            .map(|i| {
                let (lo, hi) = (support.lo[i], support.hi[i]);
                let nodes: Vec<f64> = gx.iter().map(|z| 0.5 * (lo + hi) + 0.5 * (hi - lo) * z).collect();
                let mut weights: Vec<f64> = match self {
                    Distribution::UniformBox { .. } => gw.clone(),
                    Distribution::GaussianDiag { mean, std } | Distribution::TruncatedGaussian { mean, std, .. } => nodes
                        .iter()
                        .zip(&gw)
                        .map(|(x, w)| w * std_normal_pdf((x - mean[i]) / std[i]))
                        .collect(),
                };
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                (nodes, weights)
            })
            .collect();
        tensor_rule(&axes)
    }

    /// Uniform candidate grid over the truncated support.
    pub fn candidates(&self, per_dim: usize, sigmas: f64) -> Vec<Vec<f64>> {
        let support = self.support(sigmas);
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|i| linspace(support.lo[i], support.hi[i], per_dim)).collect();
        tensor_product(&axes)
    }
}

fn truncated_standard_normal<R: Rng + ?Sized>(rng: &mut R, k: f64) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= k {
            return z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn quadrature_weights_sum_to_one_and_match_moments() {
        let d = Distribution::gaussian(0.0, 0.4);
        let rule = d.quadrature(9, 3.0);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let var: f64 = rule.iter().map(|(x, w)| w * x[0] * x[0]).sum();
        let trunc_std = Distribution::TruncatedGaussian { mean: vec![0.0], std: vec![0.4], sigmas: 3.0 }.std()[0];
        assert!((var.sqrt() - trunc_std).abs() < 1e-4, "{} vs {trunc_std}", var.sqrt());
    }

    #[test]
    fn truncated_draws_stay_in_support() {
        let d = Distribution::TruncatedGaussian { mean: vec![0.0], std: vec![0.4], sigmas: 3.0 };
        let mut rng = stream_rng(3, 0);
        for _ in 0..10_000 {
            assert!(d.sample(&mut rng)[0].abs() <= 1.2);
        }
    }

    #[test]
    fn uniform_draws_stay_in_box() {
        let d = Distribution::UniformBox { lo: vec![0.0], hi: vec![1.0] };
        let mut rng = stream_rng(4, 0);
        for _ in 0..10_000 {
            let w = d.sample(&mut rng)[0];
            assert!((0.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn candidates_span_support() {
        let c = Distribution::gaussian(0.0, 0.4).candidates(21, 3.0);
        assert_eq!(c.len(), 21);
        assert!((c[0][0] + 1.2).abs() < 1e-12);
        assert!((c[20][0] - 1.2).abs() < 1e-12);
        assert!(c[10][0].abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Distribution::GaussianDiag { mean: vec![0.0], std: vec![0.0] }.validate().is_err());
        assert!(Distribution::TruncatedGaussian { mean: vec![0.0], std: vec![1.0], sigmas: 0.0 }.validate().is_err());
        assert!(Distribution::UniformBox { lo: vec![1.0], hi: vec![0.0] }.validate().is_err());
    }
}
