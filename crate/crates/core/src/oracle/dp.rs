use rayon::prelude::*;

use super::grid::{stencil, GridSpec, Mode, ValueTable};
use crate::error::{Error, Result};
use crate::product::{Acceptance, VerificationStructure};
use crate::scalar::Real;
use crate::system::System;

/// Default ceiling on the value table size in bytes.
pub const DEFAULT_MEMORY_CAP: usize = 2 << 30;

type Stencil = Option<Vec<(usize, f64)>>;

/// Bytes needed for a table of this shape.
pub fn table_bytes<T>(dim: usize, per_dim: usize, num_q: usize, horizon: usize) -> usize {
    let n = per_dim.saturating_pow(dim as u32);
    (horizon + 1).saturating_mul(num_q).saturating_mul(n.saturating_mul(n)).saturating_mul(size_of::<T>())
}

fn successor_stencils<S: System>(
    vs: &VerificationStructure<S>,
    grid: &GridSpec,
    ws: &[&[f64]],
) -> Result<Vec<Vec<Stencil>>> {
    let n = grid.num_nodes();
    (0..n)
        .into_par_iter()
        .map(|i| {
            if !grid.is_active(i) {
                return Ok(vec![None; ws.len()]);
            }
            let x = grid.node(i);
            ws.iter()
                .map(|w| {
                    let y = vs.system().step(&x, w)?;
                    if vs.sink_domain().is_some_and(|d| !d.contains(&y)) {
                        return Ok(None);
                    }
                    Ok(stencil(&grid.region, grid.per_dim, &y))
                })
                .collect()
        })
        .collect()
}

/// Backward recursion over the node grid.
///
/// Layer `T` is the acceptance indicator. Each earlier layer takes, over the
/// `w2` candidates, the min (`Inf`) or max (`Sup`) of the quadrature
/// expectation over `w1` of the next layer, interpolated multilinearly and
/// zero off the grid or outside the sink domain. Ties keep the first
/// candidate.
pub fn dp_backward<S: System, T: Real>(
    vs: &VerificationStructure<S>,
    grid: &GridSpec,
    mode: Mode,
    memory_cap: usize,
) -> Result<ValueTable<T>> {
    grid.validate()?;
    let d = vs.system().state_dim();
    if grid.dim() != d {
        return Err(Error::Dimension { what: "grid region", expected: d, got: grid.dim() });
    }
    let horizon = vs.horizon();
    let nq = vs.num_automaton_states();
    let needed = table_bytes::<T>(d, grid.per_dim, nq, horizon);
    if needed > memory_cap {
        let mut suggested = grid.per_dim;
        while suggested > 2 && table_bytes::<T>(d, suggested, nq, horizon) > memory_cap {
            suggested -= 1;
        }
        return Err(Error::MemoryCap { needed, cap: memory_cap, suggested });
    }
    let n = grid.num_nodes();
    let nodes = grid.nodes();

    let labels: Vec<u32> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i1, i2) = (k / n, k % n);
            if grid.is_active(i1) && grid.is_active(i2) {
                vs.label(&nodes[i1], &nodes[i2])
            } else {
                Ok(0)
            }
        })
        .collect::<Result<_>>()?;
    let w1s: Vec<&[f64]> = grid.quadrature.iter().map(|(w, _)| w.as_slice()).collect();
    let w2s: Vec<&[f64]> = grid.candidates.iter().map(Vec::as_slice).collect();
    let succ1 = successor_stencils(vs, grid, &w1s)?;
    let succ2 = successor_stencils(vs, grid, &w2s)?;
    let weights: Vec<T> = grid.quadrature.iter().map(|(_, p)| T::lit(*p)).collect();

    let dfa = vs.dfa();
    let layer_len = nq * n * n;
    let mut values = vec![T::zero(); (horizon + 1) * layer_len];
    {
        let last = &mut values[horizon * layer_len..];
        for q in 0..nq {
            for i1 in 0..n {
                for i2 in 0..n {
                    if !(grid.is_active(i1) && grid.is_active(i2)) {
                        continue;
                    }
                    let acc = match vs.acceptance() {
                        Acceptance::TrailingLabel => dfa.is_accepting(dfa.next(q as u32, labels[i1 * n + i2])),
                        Acceptance::StateOnly => dfa.is_accepting(q as u32),
                    };
                    if acc {
                        last[(q * n + i1) * n + i2] = T::one();
                    }
                }
            }
        }
    }

    for t in (0..horizon).rev() {
        let (head, tail) = values.split_at_mut((t + 1) * layer_len);
        let next = &tail[..layer_len];
        let current = &mut head[t * layer_len..];
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i1| {
                let mut row = vec![T::zero(); nq * n];
                if !grid.is_active(i1) {
                    return row;
                }
                // g[q'][b] = sum_k w_k sum_a c_a u_{t+1}[q'][a][b]
                let mut g = vec![T::zero(); nq * n];
                for (k, s) in succ1[i1].iter().enumerate() {
                    let Some(s) = s else { continue };
                    for &(a, ca) in s {
                        let c = weights[k] * T::lit(ca);
                        for qn in 0..nq {
                            let src = &next[(qn * n + a) * n..(qn * n + a + 1) * n];
                            let dst = &mut g[qn * n..(qn + 1) * n];
                            for (o, v) in dst.iter_mut().zip(src) {
                                *o += c * *v;
                            }
                        }
                    }
                }
                for i2 in 0..n {
                    if !grid.is_active(i2) {
                        continue;
                    }
                    let letter = labels[i1 * n + i2];
                    for q in 0..nq {
                        let qn = dfa.next(q as u32, letter) as usize;
                        let gq = &g[qn * n..(qn + 1) * n];
                        let mut best: Option<T> = None;
                        for s in &succ2[i2] {
                            let e = s.as_ref().map_or(T::zero(), |s| s.iter().map(|&(b, cb)| T::lit(cb) * gq[b]).sum());
                            if best.is_none_or(|b| mode.better(&e, &b)) {
                                best = Some(e);
                            }
                        }
                        row[q * n + i2] = best.unwrap_or(T::zero()).max(T::zero()).min(T::one());
                    }
                }
                row
            })
            .collect();
        for (i1, row) in rows.into_iter().enumerate() {
            for q in 0..nq {
                current[(q * n + i1) * n..(q * n + i1 + 1) * n].copy_from_slice(&row[q * n..(q + 1) * n]);
            }
        }
        log::debug!("dp layer t={t} done");
    }
    Ok(ValueTable { region: grid.region.clone(), per_dim: grid.per_dim, horizon, num_q: nq, mode, values })
}

/// The candidate that attains the recursion's min (or max) at a continuous
/// product state, evaluated against layer `t + 1` of `table`. Returns the
/// candidate index and its expected next value.
pub fn greedy_candidate<S: System, T: Real>(
    vs: &VerificationStructure<S>,
    grid: &GridSpec,
    table: &ValueTable<T>,
    x1: &[f64],
    x2: &[f64],
    q: u32,
    t: usize,
) -> Result<(usize, f64)> {
    if t >= table.horizon {
        return Err(Error::TimeOutOfRange { t, horizon: table.horizon.saturating_sub(1) });
    }
    let qn = vs.dfa().next(q, vs.label(x1, x2)?);
    let keep = |y: &[f64]| vs.sink_domain().is_none_or(|d| d.contains(y));
    let mut y1s = Vec::with_capacity(grid.quadrature.len());
    for (w1, p) in &grid.quadrature {
        y1s.push((vs.system().step(x1, w1)?, *p));
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, w2) in grid.candidates.iter().enumerate() {
        let y2 = vs.system().step(x2, w2)?;
        let e: f64 = if keep(&y2) {
            y1s.iter()
                .filter(|(y1, _)| keep(y1))
                .map(|(y1, p)| p * table.interpolate(t + 1, qn as usize, y1, &y2).as_f64())
                .sum()
        } else {
            0.0
        };
        if best.is_none_or(|(_, b)| table.mode.better(&e, &b)) {
            best = Some((j, e));
        }
    }
    best.ok_or_else(|| Error::Config("adversary candidate set is empty".into()))
}
