//! Set-valued observers: the states consistent with an output sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltlf::{Alphabet, AtomContext, Dfa, Letter, Quantifier};
use crate::oracle::FiniteInstance;
use crate::poss::Poss;
use crate::region::{l2_distance, BoxRegion, StateRegion};
use crate::scalar::Probability;
use crate::system::{State, System};

/// Largest set whose diameter is computed pairwise.
pub const EXACT_DIAMETER_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Initial,
    Current,
}

/// Finite set of states together with the pitch of the grid it came from
/// (zero for exact sets).
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub points: Vec<State>,
    pub resolution: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest pairwise distance; above [`EXACT_DIAMETER_LIMIT`] points the
    /// bounding-box diagonal (an upper bound) is returned instead.
    pub fn diam(&self) -> Result<f64> {
        diam(&self.points)
    }

    pub fn is_subset_of(&self, region: &StateRegion) -> bool {
        self.points.iter().all(|p| region.contains(p))
    }

    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, Vec::len);
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn diam(points: &[State]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if points.len() > EXACT_DIAMETER_LIMIT {
        log::warn!("diameter of {} points approximated by the bounding-box diagonal", points.len());
        let d = points[0].len();
        let lo: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
        let hi: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
        return Ok(l2_distance(&lo, &hi));
    }
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(l2_distance(&points[i], &points[j]));
        }
    }
    Ok(best)
}

/// Whether every stepwise output distance is at most `eps`.
pub fn indistinguishable<S: System + ?Sized>(system: &S, s: &[State], s2: &[State], eps: f64) -> Result<bool> {
    if s.len() != s2.len() {
        return Err(Error::LengthMismatch { left: s.len(), right: s2.len() });
    }
    for (a, b) in s.iter().zip(s2) {
        if l2_distance(&system.output(a)?, &system.output(b)?) > eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A finite abstraction of the state space on which observers run.
pub trait CellSpace: Sync {
    fn num_cells(&self) -> usize;
    fn initial_cells(&self) -> &[bool];
    /// Whether some state of the cell has output within `eps` of `y`.
    fn consistent(&self, cell: usize, y: &[f64], eps: f64) -> bool;
    /// Cells reachable in one step from some live cell.
    fn image(&self, live: &[bool]) -> Vec<bool>;
    /// Live cells with at least one successor in `next`.
    fn preimage(&self, live: &[bool], next: &[bool]) -> Vec<bool>;
    fn for_each_successor(&self, cell: usize, f: &mut dyn FnMut(usize));
    /// Representative state of the cell.
    fn point(&self, cell: usize) -> State;
    fn resolution(&self) -> Vec<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverConfig {
    /// Grid cells per state dimension.
    pub per_dim: usize,
    /// Disturbance truncation, in standard deviations.
    pub sigmas: f64,
    /// Minimum disturbance samples per dimension when bounding successors.
    pub w_nodes: usize,
    /// Region covered by the grid; defaults to the model domain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxRegion>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self { per_dim: 201, sigmas: 3.0, w_nodes: 9, region: None }
    }
}

/// Uniform grid observer. Each cell keeps the bounding box of its outputs and
/// the index box of its one-step successors, both sampled at the center and
/// corners of the cell and over a disturbance grid on the truncated support.
pub struct GridObserver {
    region: BoxRegion,
    n: Vec<usize>,
    pitch: Vec<f64>,
    initial: Vec<bool>,
    out_lo: Vec<Vec<f64>>,
    out_hi: Vec<Vec<f64>>,
    /// Per cell, per dimension inclusive successor index range; `None` when
    /// every successor leaves the grid.
    succ: Vec<Option<Vec<(usize, usize)>>>,
}

impl GridObserver {
    pub fn for_poss(model: &Poss, cfg: &ObserverConfig) -> Result<Self> {
        let support = model.disturbance().support(cfg.sigmas);
        let region = cfg.region.clone().unwrap_or_else(|| model.domain().clone());
        Self::new(model, &region, model.initial(), &support, cfg)
    }

    pub fn new<S: System + ?Sized>(
        system: &S,
        region: &BoxRegion,
        initial: &StateRegion,
        w_support: &BoxRegion,
        cfg: &ObserverConfig,
    ) -> Result<Self> {
        region.validate()?;
        let d = system.state_dim();
        if region.dim() != d {
            return Err(Error::Dimension { what: "observer region", expected: d, got: region.dim() });
        }
        if cfg.per_dim < 1 {
            return Err(Error::Config("observer grid needs at least one cell per dimension".into()));
        }
        let n = vec![cfg.per_dim; d];
        let pitch: Vec<f64> = region.widths().iter().map(|w| w / cfg.per_dim as f64).collect();
        let min_pitch = pitch.iter().copied().fold(f64::INFINITY, f64::min);
        let dw = system.disturbance_dim();
        let w_axes: Vec<Vec<f64>> = (0..dw)
            .map(|k| {
                let width = w_support.hi[k] - w_support.lo[k];
                let dense = if dw == 1 && min_pitch > 0.0 { (width / min_pitch).ceil() as usize + 1 } else { 0 };
                crate::region::linspace(w_support.lo[k], w_support.hi[k], cfg.w_nodes.max(dense).max(2))
            })
            .collect();
        let ws = crate::region::tensor_product(&w_axes);

        let total: usize = n.iter().product();
        let mut obs = Self {
            region: region.clone(),
            n,
            pitch,
            initial: vec![false; total],
            out_lo: Vec::with_capacity(total),
            out_hi: Vec::with_capacity(total),
            succ: Vec::with_capacity(total),
        };
        for cell in 0..total {
            let (lo, hi) = obs.cell_box(cell);
            obs.initial[cell] = initial
                .boxes()
                .iter()
                .any(|b| (0..d).all(|k| lo[k] <= b.hi[k] && hi[k] >= b.lo[k]));
            let samples = cell_samples(&lo, &hi);
            let mut ylo = vec![f64::INFINITY; system.output_dim()];
            let mut yhi = vec![f64::NEG_INFINITY; system.output_dim()];
            let mut img_lo = vec![f64::INFINITY; d];
            let mut img_hi = vec![f64::NEG_INFINITY; d];
            for x in &samples {
                for (k, y) in system.output(x)?.into_iter().enumerate() {
                    ylo[k] = ylo[k].min(y);
                    yhi[k] = yhi[k].max(y);
                }
                for w in &ws {
                    for (k, v) in system.step(x, w)?.into_iter().enumerate() {
                        img_lo[k] = img_lo[k].min(v);
                        img_hi[k] = img_hi[k].max(v);
                    }
                }
            }
            obs.out_lo.push(ylo);
            obs.out_hi.push(yhi);
            let range: Option<Vec<(usize, usize)>> = (0..d)
                .map(|k| {
                    if img_hi[k] < region.lo[k] || img_lo[k] > region.hi[k] {
                        return None;
                    }
                    Some((obs.axis_index(k, img_lo[k]), obs.axis_index(k, img_hi[k])))
                })
                .collect();
            obs.succ.push(range);
        }
        Ok(obs)
    }

    fn axis_index(&self, k: usize, v: f64) -> usize {
        let i = ((v - self.region.lo[k]) / self.pitch[k]).floor();
        (i.max(0.0) as usize).min(self.n[k] - 1)
    }

    fn unravel(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n.len()];
        for k in (0..self.n.len()).rev() {
            idx[k] = cell % self.n[k];
            cell /= self.n[k];
        }
        idx
    }

    fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.n).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn cell_box(&self, cell: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.unravel(cell);
        let lo: Vec<f64> = (0..idx.len()).map(|k| self.region.lo[k] + idx[k] as f64 * self.pitch[k]).collect();
        let hi: Vec<f64> = (0..idx.len()).map(|k| lo[k] + self.pitch[k]).collect();
        (lo, hi)
    }

    /// Cell containing `x`, if inside the grid region.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if !self.region.contains(x) {
            return None;
        }
        let idx: Vec<usize> = (0..x.len()).map(|k| self.axis_index(k, x[k])).collect();
        Some(self.ravel(&idx))
    }

    fn for_each_in_box(&self, range: &[(usize, usize)], f: &mut dyn FnMut(usize)) {
        let d = range.len();
        let mut idx: Vec<usize> = range.iter().map(|r| r.0).collect();
        loop {
            f(self.ravel(&idx));
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if idx[k] < range[k].1 {
                    idx[k] += 1;
                    break;
                }
                idx[k] = range[k].0;
            }
        }
    }

    /// Strides of the `(n_k + 1)`-sized helper arrays.
    fn padded(&self) -> (Vec<usize>, usize) {
        let dims: Vec<usize> = self.n.iter().map(|n| n + 1).collect();
        let total = dims.iter().product();
        (dims, total)
    }

    fn padded_index(dims: &[usize], idx: &[usize]) -> usize {
        idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// In-place prefix sum along every axis of a padded array.
    fn prefix_sums(dims: &[usize], a: &mut [i64]) {
        let d = dims.len();
        let mut stride = 1;
        for k in (0..d).rev() {
            let n = dims[k];
            for base in 0..a.len() {
                if (base / stride) % n != 0 {
                    a[base] += a[base - stride];
                }
            }
            stride *= n;
        }
    }
}

fn cell_samples(lo: &[f64], hi: &[f64]) -> Vec<State> {
    let d = lo.len();
    let mut out = vec![lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect()];
    for mask in 0..(1usize << d) {
        out.push((0..d).map(|k| if mask & (1 << k) != 0 { hi[k] } else { lo[k] }).collect());
    }
    out
}

fn box_distance(y: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    y.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| {
            let e = (l - v).max(v - h).max(0.0);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

impl CellSpace for GridObserver {
    fn num_cells(&self) -> usize {
        self.succ.len()
    }

    fn initial_cells(&self) -> &[bool] {
        &self.initial
    }

    fn consistent(&self, cell: usize, y: &[f64], eps: f64) -> bool {
        box_distance(y, &self.out_lo[cell], &self.out_hi[cell]) <= eps
    }

    fn image(&self, live: &[bool]) -> Vec<bool> {
        let d = self.n.len();
        let (dims, total) = self.padded();
        let mut diff = vec![0i64; total];
        let mut corner = vec![0usize; d];
        for (cell, range) in self.succ.iter().enumerate() {
            let (true, Some(range)) = (live[cell], range) else { continue };
            for mask in 0..(1usize << d) {
                let mut sign = 1;
                for k in 0..d {
                    if mask & (1 << k) != 0 {
                        corner[k] = range[k].1 + 1;
                        sign = -sign;
                    } else {
                        corner[k] = range[k].0;
                    }
                }
                diff[Self::padded_index(&dims, &corner)] += sign;
            }
        }
        Self::prefix_sums(&dims, &mut diff);
        (0..self.num_cells())
            .map(|cell| diff[Self::padded_index(&dims, &self.unravel(cell))] > 0)
            .collect()
    }

    fn preimage(&self, live: &[bool], next: &[bool]) -> Vec<bool> {
        let d = self.n.len();
        let (dims, total) = self.padded();
        // Summed-area table shifted by one: sat[i+1] counts next-cells with index <= i.
        let mut sat = vec![0i64; total];
        for (cell, &on) in next.iter().enumerate() {
            if on {
                let idx: Vec<usize> = self.unravel(cell).iter().map(|i| i + 1).collect();
                sat[Self::padded_index(&dims, &idx)] = 1;
            }
        }
        Self::prefix_sums(&dims, &mut sat);
        let mut corner = vec![0usize; d];
        self.succ
            .iter()
            .enumerate()
            .map(|(cell, range)| {
                let (true, Some(range)) = (live[cell], range) else { return false };
                let mut count = 0i64;
                for mask in 0..(1usize << d) {
                    let mut sign = 1;
                    for k in 0..d {
                        if mask & (1 << k) != 0 {
                            corner[k] = range[k].0;
                            sign = -sign;
                        } else {
                            corner[k] = range[k].1 + 1;
                        }
                    }
                    count += sign * sat[Self::padded_index(&dims, &corner)];
                }
                count > 0
            })
            .collect()
    }

    fn for_each_successor(&self, cell: usize, f: &mut dyn FnMut(usize)) {
        if let Some(range) = &self.succ[cell] {
            self.for_each_in_box(range, f);
        }
    }

    fn point(&self, cell: usize) -> State {
        let (lo, hi) = self.cell_box(cell);
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    fn resolution(&self) -> Vec<f64> {
        self.pitch.clone()
    }
}

/// Exact observer over the states of a finite instance.
pub struct FiniteObserver<'a, P: Probability> {
    inst: &'a FiniteInstance<P>,
    initial: Vec<bool>,
}

impl<'a, P: Probability> FiniteObserver<'a, P> {
    pub fn new(inst: &'a FiniteInstance<P>) -> Self {
        let mut initial = vec![false; inst.num_states()];
        for &s in &inst.initial {
            initial[s] = true;
        }
        Self { inst, initial }
    }
}

impl<P: Probability> CellSpace for FiniteObserver<'_, P> {
    fn num_cells(&self) -> usize {
        self.inst.num_states()
    }

    fn initial_cells(&self) -> &[bool] {
        &self.initial
    }

    fn consistent(&self, cell: usize, y: &[f64], eps: f64) -> bool {
        l2_distance(&self.inst.outputs[cell], y) <= eps
    }

    fn image(&self, live: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.num_cells()];
        for (cell, row) in self.inst.succ.iter().enumerate() {
            if live[cell] {
                row.iter().for_each(|&s| out[s] = true);
            }
        }
        out
    }

    fn preimage(&self, live: &[bool], next: &[bool]) -> Vec<bool> {
        self.inst.succ.iter().enumerate().map(|(cell, row)| live[cell] && row.iter().any(|&s| next[s])).collect()
    }

    fn for_each_successor(&self, cell: usize, f: &mut dyn FnMut(usize)) {
        let mut row = self.inst.succ[cell].clone();
        row.sort_unstable();
        row.dedup();
        row.into_iter().for_each(f);
    }

    fn point(&self, cell: usize) -> State {
        self.inst.coords[cell].clone()
    }

    fn resolution(&self) -> Vec<f64> {
        vec![0.0; self.inst.coords[0].len()]
    }
}

/// Forward filter: `sets[t]` holds the cells consistent with outputs `0..=t`.
pub fn filter(space: &dyn CellSpace, outputs: &[Vec<f64>], eps: f64) -> Result<Vec<Vec<bool>>> {
    if outputs.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut sets: Vec<Vec<bool>> = Vec::with_capacity(outputs.len());
    let mut live: Vec<bool> = space.initial_cells().to_vec();
    for (t, y) in outputs.iter().enumerate() {
        if t > 0 {
            live = space.image(&live);
        }
        let mut any = false;
        for (cell, on) in live.iter_mut().enumerate() {
            *on = *on && space.consistent(cell, y, eps);
            any |= *on;
        }
        if !any {
            return Err(Error::EmptyEstimate { time: t });
        }
        sets.push(live.clone());
    }
    Ok(sets)
}

fn to_points(space: &dyn CellSpace, mask: &[bool]) -> PointSet {
    PointSet {
        points: mask.iter().enumerate().filter(|(_, &on)| on).map(|(c, _)| space.point(c)).collect(),
        resolution: space.resolution(),
    }
}

/// Initial- or current-state estimate from an output sequence.
pub fn estimate_from_outputs(space: &dyn CellSpace, outputs: &[Vec<f64>], eps: f64, which: EstimateKind) -> Result<PointSet> {
    let sets = filter(space, outputs, eps)?;
    match which {
        EstimateKind::Current => Ok(to_points(space, sets.last().expect("nonempty"))),
        EstimateKind::Initial => {
            let mut back = sets.last().expect("nonempty").clone();
            for t in (0..sets.len() - 1).rev() {
                back = space.preimage(&sets[t], &back);
            }
            Ok(to_points(space, &back))
        }
    }
}

/// State estimate of the trajectory `s`.
pub fn state_estimate<S: System + ?Sized>(
    system: &S,
    space: &dyn CellSpace,
    s: &[State],
    eps: f64,
    which: EstimateKind,
) -> Result<PointSet> {
    let outputs = s.iter().map(|x| system.output(x)).collect::<Result<Vec<_>>>()?;
    estimate_from_outputs(space, &outputs, eps, which)
}

/// Decides `s |= Q s2. body` by tracking (cell, automaton state) pairs over
/// every companion path through the cell space.
pub fn hyper_holds<S: System + ?Sized>(
    space: &dyn CellSpace,
    ctx: AtomContext<'_, S>,
    dfa: &Dfa,
    quantifier: Quantifier,
    s: &[State],
) -> Result<bool> {
    if s.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let nq = dfa.num_states();
    let alphabet: &Alphabet = dfa.alphabet();
    let cells = space.num_cells();
    let points: Vec<State> = (0..cells).map(|c| space.point(c)).collect();
    let mut live = vec![false; cells * nq];
    for (c, &init) in space.initial_cells().iter().enumerate() {
        if init {
            live[c * nq + dfa.initial() as usize] = true;
        }
    }
    let label_row = |x: &State| -> Result<Vec<Letter>> { points.iter().map(|p| ctx.label(alphabet, x, p)).collect() };
    for x in &s[..s.len() - 1] {
        let labels = label_row(x)?;
        let mut next = vec![false; cells * nq];
        for c in 0..cells {
            for q in 0..nq {
                if live[c * nq + q] {
                    let q2 = dfa.next(q as u32, labels[c]) as usize;
                    space.for_each_successor(c, &mut |c2| next[c2 * nq + q2] = true);
                }
            }
        }
        live = next;
    }
    let labels = label_row(s.last().expect("nonempty"))?;
    let mut finals = (0..cells).flat_map(|c| (0..nq).map(move |q| (c, q))).filter(|&(c, q)| live[c * nq + q]);
    let accepted = |(c, q): (usize, usize)| dfa.is_accepting(dfa.next(q as u32, labels[c]));
    Ok(match quantifier {
        Quantifier::Forall => finals.all(accepted),
        Quantifier::Exists => finals.any(accepted),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poss::PossConfig;
    use crate::presets::scalar_square;

    #[test]
    fn diameter_small_cases() {
        assert_eq!(diam(&[vec![1.0, 2.0]]).unwrap(), 0.0);
        assert_eq!(diam(&[vec![-1.0], vec![2.0]]).unwrap(), 3.0);
        assert!(matches!(diam(&[]), Err(Error::EmptySet)));
    }

    #[test]
    fn mirrored_trajectories_are_indistinguishable_under_square() {
        let m = scalar_square();
        let s: Vec<State> = vec![vec![1.0]; 4];
        let s2: Vec<State> = vec![vec![-1.0]; 4];
        assert!(indistinguishable(&m, &s, &s2, 0.0).unwrap());
        assert!(indistinguishable(&m, &s, &s, 0.0).unwrap());
        assert!(matches!(indistinguishable(&m, &s, &s2[..3], 0.0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn exact_observation_pins_the_cell() {
        let mut cfg: PossConfig = crate::presets::scalar_square_config();
        cfg.output = vec!["x1".parse().unwrap()];
        let m = Poss::new(cfg).unwrap();
        let obs = GridObserver::for_poss(&m, &ObserverConfig::default()).unwrap();
        let s: Vec<State> = vec![vec![0.3], vec![0.5], vec![0.01], vec![-0.7]];
        let est = state_estimate(&m, &obs, &s, 0.0, EstimateKind::Current).unwrap();
        assert_eq!(est.len(), 1);
        assert!((est.points[0][0] - -0.7).abs() <= obs.resolution()[0]);
        let est0 = state_estimate(&m, &obs, &s, 0.0, EstimateKind::Initial).unwrap();
        assert_eq!(est0.len(), 1);
        assert!((est0.points[0][0] - 0.3).abs() <= obs.resolution()[0]);
    }

    #[test]
    fn current_estimate_respects_last_output() {
        let m = scalar_square();
        let obs = GridObserver::for_poss(&m, &ObserverConfig::default()).unwrap();
        let s: Vec<State> = vec![vec![1.0], vec![1.3], vec![0.9]];
        let est = state_estimate(&m, &obs, &s, 0.5, EstimateKind::Current).unwrap();
        let slack = obs.resolution()[0];
        for p in &est.points {
            let x = p[0].abs();
            // Cell centers are within half a pitch of a consistent state.
            let near = (x - 0.5 * slack).max(0.0);
            assert!((near * near - 0.81).abs() <= 0.5 + 2.0 * x * slack + slack * slack, "{x}");
        }
        // The mirror image of the true trajectory is always in the estimate.
        assert!(est.points.iter().any(|p| (p[0] + 0.9).abs() <= slack));
        assert!(est.points.iter().any(|p| (p[0] - 0.9).abs() <= slack));
    }

    #[test]
    fn padded_prefix_sums_match_direct_box_marking_in_2d() {
        let mut cfg = crate::presets::scalar_square_config();
        cfg.domain = BoxRegion::symmetric(2, 2.0);
        cfg.initial = StateRegion::from_box(BoxRegion::symmetric(2, 1.0));
        cfg.dynamics = vec!["0.5*x2 + w1".parse().unwrap(), "-0.8*x1 + 0.3*x2".parse().unwrap()];
        cfg.output = vec!["x1 + x2".parse().unwrap()];
        cfg.state_dim = Some(2);
        let m = Poss::new(cfg).unwrap();
        let obs = GridObserver::for_poss(&m, &ObserverConfig { per_dim: 9, ..Default::default() }).unwrap();
        let live: Vec<bool> = (0..obs.num_cells()).map(|c| c % 5 == 0).collect();
        let mut direct = vec![false; obs.num_cells()];
        for c in 0..obs.num_cells() {
            if live[c] {
                obs.for_each_successor(c, &mut |s| direct[s] = true);
            }
        }
        assert_eq!(obs.image(&live), direct);
        let next: Vec<bool> = (0..obs.num_cells()).map(|c| c % 7 == 3).collect();
        let mut pre = vec![false; obs.num_cells()];
        for c in 0..obs.num_cells() {
            if live[c] {
                obs.for_each_successor(c, &mut |s| pre[c] |= next[s]);
            }
        }
        assert_eq!(obs.preimage(&live, &next), pre);
    }
}
