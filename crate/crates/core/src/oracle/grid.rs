use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::finite::FiniteInstance;
use crate::error::{Error, Result};
use crate::ltlf::Quantifier;
use crate::poss::Distribution;
use crate::region::{linspace, tensor_product, BoxRegion};
use crate::scalar::{Probability, Real};
use crate::system::State;

/// Optimization direction of the environment player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The environment minimizes (universal quantifier).
    Inf,
    /// The environment maximizes (existential quantifier).
    Sup,
}

impl From<Quantifier> for Mode {
    fn from(q: Quantifier) -> Self {
        match q {
            Quantifier::Forall => Mode::Inf,
            Quantifier::Exists => Mode::Sup,
        }
    }
}

impl Mode {
    pub fn better<T: PartialOrd>(self, candidate: &T, incumbent: &T) -> bool {
        match self {
            Mode::Inf => candidate < incumbent,
            Mode::Sup => candidate > incumbent,
        }
    }
}

/// Discretization for the backward recursion: a node grid per state copy,
/// a quadrature rule for `w1`, and the finite candidate set for `w2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub region: BoxRegion,
    pub per_dim: usize,
    pub quadrature: Vec<(Vec<f64>, f64)>,
    pub candidates: Vec<Vec<f64>>,
    /// Nodes that stand for actual states; others are held at zero.
    pub active: Option<Vec<bool>>,
}

impl GridSpec {
    pub fn new(region: BoxRegion, per_dim: usize, quadrature: Vec<(Vec<f64>, f64)>, candidates: Vec<Vec<f64>>) -> Result<Self> {
        let g = Self { region, per_dim, quadrature, candidates, active: None };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.per_dim < 2 {
            return Err(Error::Config("grid resolution must be at least 2 nodes per dimension".into()));
        }
        let total: f64 = self.quadrature.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 || self.quadrature.iter().any(|(_, w)| *w < 0.0) {
            return Err(Error::Config(format!("quadrature weights must be nonnegative and sum to 1 (got {total})")));
        }
        if self.candidates.is_empty() {
            return Err(Error::Config("adversary candidate set is empty".into()));
        }
        if let Some(active) = &self.active {
            if active.len() != self.num_nodes() {
                return Err(Error::LengthMismatch { left: active.len(), right: self.num_nodes() });
            }
        }
        Ok(())
    }

    /// Grid over `region` with a density-weighted Gauss-Legendre rule for
    /// `w1` and a uniform candidate grid for `w2`, both on the support
    /// truncated at `sigmas`.
    pub fn for_distribution(
        region: BoxRegion,
        per_dim: usize,
        dist: &Distribution,
        quadrature_nodes: usize,
        candidates: usize,
        sigmas: f64,
    ) -> Result<Self> {
        Self::new(region, per_dim, dist.quadrature(quadrature_nodes, sigmas), dist.candidates(candidates, sigmas))
    }

    /// Embeds a finite instance with integer coordinates: nodes sit on the
    /// integer lattice, the quadrature is the disturbance distribution and
    /// every disturbance is a candidate.
    pub fn for_finite<P: Probability>(inst: &FiniteInstance<P>) -> Result<Self> {
        let d = inst.coords[0].len();
        let lo: Vec<f64> = (0..d).map(|k| inst.coords.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min)).collect();
        let mut hi: Vec<f64> = (0..d).map(|k| inst.coords.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
        if inst.coords.iter().flatten().any(|v| v.fract() != 0.0) {
            return Err(Error::Config("grid embedding needs integer state coordinates".into()));
        }
        let span = (0..d).map(|k| (hi[k] - lo[k]) as usize).max().unwrap_or(0).max(1);
        for k in 0..d {
            hi[k] = lo[k] + span as f64;
        }
        let quadrature = inst.probs.iter().enumerate().map(|(k, p)| (vec![k as f64], p.to_f64())).collect();
        let candidates = (0..inst.num_disturbances()).map(|k| vec![k as f64]).collect();
        let mut g = Self { region: BoxRegion { lo, hi }, per_dim: span + 1, quadrature, candidates, active: None };
        let active = (0..g.num_nodes()).map(|i| inst.index_of(&g.node(i)).is_some()).collect();
        g.active = Some(active);
        g.validate()?;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn num_nodes(&self) -> usize {
        self.per_dim.pow(self.dim() as u32)
    }

    pub fn axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|k| linspace(self.region.lo[k], self.region.hi[k], self.per_dim)).collect()
    }

    pub fn nodes(&self) -> Vec<State> {
        tensor_product(&self.axes())
    }

    pub fn node(&self, mut i: usize) -> State {
        let d = self.dim();
        let mut idx = vec![0; d];
        for k in (0..d).rev() {
            idx[k] = i % self.per_dim;
            i /= self.per_dim;
        }
        let h = self.pitch();
        (0..d)
            .map(|k| if idx[k] + 1 == self.per_dim { self.region.hi[k] } else { self.region.lo[k] + h[k] * idx[k] as f64 })
            .collect()
    }

    pub fn pitch(&self) -> Vec<f64> {
        self.region.widths().iter().map(|w| w / (self.per_dim - 1) as f64).collect()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.as_ref().is_none_or(|a| a[i])
    }
}

/// Multilinear interpolation stencil of a point over one copy's node grid:
/// `(node, weight)` pairs, or `None` outside the grid region.
pub(crate) fn stencil(region: &BoxRegion, per_dim: usize, x: &[f64]) -> Option<Vec<(usize, f64)>> {
    let d = x.len();
    let mut base = vec![0usize; d];
    let mut frac = vec![0f64; d];
    for k in 0..d {
        let (lo, hi) = (region.lo[k], region.hi[k]);
        let tol = 1e-12 * (hi - lo).abs().max(1.0);
        if !(x[k] >= lo - tol && x[k] <= hi + tol) {
            return None;
        }
        let s = ((x[k] - lo) / (hi - lo) * (per_dim - 1) as f64).clamp(0.0, (per_dim - 1) as f64);
        let i = (s.floor() as usize).min(per_dim - 2);
        base[k] = i;
        frac[k] = (s - i as f64).clamp(0.0, 1.0);
    }
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1usize << d) {
        let mut idx = 0;
        let mut w = 1.0;
        for k in 0..d {
            let up = mask & (1 << k) != 0;
            idx = idx * per_dim + base[k] + usize::from(up);
            w *= if up { frac[k] } else { 1.0 - frac[k] };
        }
        if w != 0.0 {
            out.push((idx, w));
        }
    }
    Some(out)
}

/// Values `u_t(x1, x2, q)` on the node grid, for `t = 0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable<T = f64> {
    pub region: BoxRegion,
    pub per_dim: usize,
    pub horizon: usize,
    pub num_q: usize,
    pub mode: Mode,
    pub values: Vec<T>,
}

const MAGIC: &[u8; 8] = b"OBSVTAB\0";
const FORMAT_VERSION: u32 = 1;

impl<T: Real> ValueTable<T> {
    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn nodes_per_copy(&self) -> usize {
        self.per_dim.pow(self.dim() as u32)
    }

    pub fn index(&self, t: usize, q: usize, i1: usize, i2: usize) -> usize {
        let n = self.nodes_per_copy();
        ((t * self.num_q + q) * n + i1) * n + i2
    }

    pub fn at(&self, t: usize, q: usize, i1: usize, i2: usize) -> T {
        self.values[self.index(t, q, i1, i2)]
    }

    pub fn layer(&self, t: usize) -> &[T] {
        let len = self.num_q * self.nodes_per_copy().pow(2);
        &self.values[t * len..(t + 1) * len]
    }

    /// Multilinear interpolation in `(x1, x2)`; zero outside the grid.
    pub fn interpolate(&self, t: usize, q: usize, x1: &[f64], x2: &[f64]) -> T {
        let (Some(s1), Some(s2)) = (stencil(&self.region, self.per_dim, x1), stencil(&self.region, self.per_dim, x2)) else {
            return T::zero();
        };
        let mut acc = T::zero();
        for &(a, wa) in &s1 {
            for &(b, wb) in &s2 {
                acc += T::lit(wa * wb) * self.at(t, q, a, b);
            }
        }
        acc
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { region: self.region.clone(), per_dim: self.per_dim, quadrature: Vec::new(), candidates: Vec::new(), active: None }
    }

    /// Binary layout: magic, version, dim, per-dim nodes, T, |Q|, mode as
    /// little-endian `u32`, region bounds as `f64`, then row-major `f64`
    /// values indexed `[t][q][x1 node][x2 node]`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        let mode = match self.mode {
            Mode::Inf => 0u32,
            Mode::Sup => 1,
        };
        for v in [FORMAT_VERSION, self.dim() as u32, self.per_dim as u32, self.horizon as u32, self.num_q as u32, mode] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.region.lo.iter().chain(&self.region.hi) {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a value table".into()));
        }
        let mut u = [0u32; 6];
        for v in u.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *v = u32::from_le_bytes(b);
        }
        let [version, dim, per_dim, horizon, num_q, mode] = u.map(|v| v as usize);
        if version != FORMAT_VERSION as usize {
            return Err(Error::Format(format!("unsupported value table version {version}")));
        }
        let mut read_f64 = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let lo = (0..dim).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
        let hi = (0..dim).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
        let len = (horizon + 1) * num_q * per_dim.pow(2 * dim as u32);
        let values = (0..len).map(|_| read_f64().map(T::lit)).collect::<Result<Vec<_>>>()?;
        let mode = match mode {
            0 => Mode::Inf,
            1 => Mode::Sup,
            m => return Err(Error::Format(format!("unknown mode {m}"))),
        };
        Ok(Self { region: BoxRegion::new(lo, hi)?, per_dim, horizon, num_q, mode, values })
    }

    /// All node pairs at fixed `(t, q)`: columns `x1_*, x2_*, value`.
    pub fn slice_csv(&self, t: usize, q: usize) -> Result<String> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        if q >= self.num_q {
            return Err(Error::Config(format!("automaton state {q} out of range")));
        }
        let spec = self.spec();
        let nodes = spec.nodes();
        let d = self.dim();
        let mut header: Vec<String> = (1..=d).map(|i| format!("x1_{i}")).collect();
        header.extend((1..=d).map(|i| format!("x2_{i}")));
        header.push("value".into());
        let mut out = header.join(",");
        out.push('\n');
        for (i1, a) in nodes.iter().enumerate() {
            for (i2, b) in nodes.iter().enumerate() {
                for v in a.iter().chain(b) {
                    let _ = write!(out, "{v},");
                }
                let _ = writeln!(out, "{}", self.at(t, q, i1, i2));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ValueTable<f64> {
        let region = BoxRegion::symmetric(1, 1.0);
        let n = 3;
        let values = (0..2 * 2 * n * n).map(|i| i as f64 / 36.0).collect();
        ValueTable { region, per_dim: n, horizon: 1, num_q: 2, mode: Mode::Inf, values }
    }

    #[test]
    fn interpolation_hits_nodes_and_blends_between() {
        let t = table();
        assert_eq!(t.interpolate(1, 1, &[0.0], &[1.0]), t.at(1, 1, 1, 2));
        let mid = t.interpolate(0, 0, &[-0.5], &[0.0]);
        assert!((mid - 0.5 * (t.at(0, 0, 0, 1) + t.at(0, 0, 1, 1))).abs() < 1e-15);
        assert_eq!(t.interpolate(0, 0, &[1.5], &[0.0]), 0.0);
    }

    #[test]
    fn binary_round_trip() {
        let t = table();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 6 * 4 + 2 * 8 + t.values.len() * 8);
        let back = ValueTable::<f64>::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(ValueTable::<f64>::read_binary(&b"garbage!"[..]).is_err());
    }

    #[test]
    fn slice_lists_every_node_pair() {
        let csv = table().slice_csv(0, 0).unwrap();
        assert_eq!(csv.lines().count(), 1 + 9);
        assert!(table().slice_csv(2, 0).is_err());
    }

    #[test]
    fn grid_spec_validation() {
        let d = Distribution::gaussian(0.0, 0.4);
        let g = GridSpec::for_distribution(BoxRegion::symmetric(1, 4.0), 101, &d, 9, 21, 3.0).unwrap();
        assert_eq!(g.num_nodes(), 101);
        assert_eq!(g.node(100), vec![4.0]);
        assert!(GridSpec::new(BoxRegion::symmetric(1, 1.0), 1, g.quadrature.clone(), g.candidates.clone()).is_err());
        assert!(GridSpec::new(BoxRegion::symmetric(1, 1.0), 5, vec![(vec![0.0], 0.5)], g.candidates).is_err());
    }
}
