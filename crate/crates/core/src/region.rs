//! Axis-aligned boxes and finite unions of boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    /// Symmetric interval box `[-r, r]^dim`.
    pub fn symmetric(dim: usize, r: f64) -> Self {
        Self {
            lo: vec![-r; dim],
            hi: vec![r; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::Config(format!(
                "box bounds must be nonempty and of equal length (lo {}, hi {})",
                self.lo.len(),
                self.hi.len()
            )));
        }
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l > h {
                return Err(Error::Config(format!("invalid box extent in dimension {i}: [{l}, {h}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn is_subset_of(&self, other: &BoxRegion) -> bool {
        self.dim() == other.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a >= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a <= b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Tensor grid with `per_dim` points along every axis, last axis fastest.
    pub fn grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.lo.iter().zip(&self.hi).map(|(&l, &h)| linspace(l, h, per_dim)).collect();
        tensor_product(&axes)
    }
}

/// A finite union of boxes. Membership is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateRegion {
    boxes: Vec<BoxRegion>,
}

impl StateRegion {
    pub fn new(boxes: Vec<BoxRegion>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Config("a region needs at least one box".into()));
        }
        let dim = boxes[0].dim();
        for b in &boxes {
            b.validate()?;
            if b.dim() != dim {
                return Err(Error::Config("all boxes of a region must share one dimension".into()));
            }
        }
        Ok(Self { boxes })
    }

    pub fn from_box(b: BoxRegion) -> Self {
        Self { boxes: vec![b] }
    }

    pub fn boxes(&self) -> &[BoxRegion] {
        &self.boxes
    }

    pub fn dim(&self) -> usize {
        self.boxes.first().map_or(0, BoxRegion::dim)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    pub fn is_subset_of(&self, outer: &BoxRegion) -> bool {
        self.boxes.iter().all(|b| b.is_subset_of(outer))
    }

    /// Smallest box enclosing the union.
    pub fn hull(&self) -> BoxRegion {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for b in &self.boxes {
            for i in 0..d {
                lo[i] = lo[i].min(b.lo[i]);
                hi[i] = hi[i].max(b.hi[i]);
            }
        }
        BoxRegion { lo, hi }
    }

    /// Grid points of every member box, `per_dim` per axis, duplicates removed.
    pub fn grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for b in &self.boxes {
            for p in b.grid(per_dim) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// `n` evenly spaced points covering `[lo, hi]`; a single point sits at the center.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
        }
    }
}

/// Cartesian product of per-axis coordinate lists, last axis fastest.
pub fn tensor_product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Euclidean distance.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_degenerate_and_endpoints() {
        assert_eq!(linspace(-1.0, 3.0, 1), vec![1.0]);
        let v = linspace(-4.0, 4.0, 50);
        assert_eq!(v.len(), 50);
        assert_eq!(v[0], -4.0);
        assert_eq!(v[49], 4.0);
    }

    #[test]
    fn union_membership() {
        let r = StateRegion::new(vec![
            BoxRegion::new(vec![0.0], vec![1.0]).unwrap(),
            BoxRegion::new(vec![2.0], vec![3.0]).unwrap(),
        ])
        .unwrap();
        assert!(r.contains(&[0.5]));
        assert!(r.contains(&[3.0]));
        assert!(!r.contains(&[1.5]));
        assert_eq!(r.hull(), BoxRegion::new(vec![0.0], vec![3.0]).unwrap());
    }

    #[test]
    fn inverted_box_is_rejected() {
        assert!(BoxRegion::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxRegion::new(vec![], vec![]).is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let b = BoxRegion::new(vec![0.0, 10.0], vec![1.0, 11.0]).unwrap();
        let g = b.grid(2);
        assert_eq!(g, vec![vec![0.0, 10.0], vec![0.0, 11.0], vec![1.0, 10.0], vec![1.0, 11.0]]);
    }
}
