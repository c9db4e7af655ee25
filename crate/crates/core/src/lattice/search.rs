use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, PassageTimeField};
use crate::time::{add, to_time, Ticks, UNREACHED};

/// Box-restricted passage times from one source to every box site.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    pub bbox: LatticeBox,
    pub source: Vec<i64>,
    ticks: Vec<Ticks>,
}

impl TimeMap {
    pub fn get(&self, x: &[i64]) -> Result<f64> {
        self.ticks_at(x).map(to_time)
    }

    /// Exact integer time (see [`crate::time`]).
    pub fn ticks_at(&self, x: &[i64]) -> Result<Ticks> {
        self.bbox
            .index(x)
            .map(|i| self.ticks[i])
            .ok_or_else(|| Error::OutsideBox(x.iter().map(|v| *v as f64).collect()))
    }

    pub fn ticks(&self) -> &[Ticks] {
        &self.ticks
    }

    pub fn times(&self) -> Vec<f64> {
        self.ticks.iter().map(|t| to_time(*t)).collect()
    }
}

pub(crate) fn check_inside(bbox: &LatticeBox, x: &[i64]) -> Result<usize> {
    if x.len() != bbox.dim() {
        return Err(Error::Dimension { expected: bbox.dim(), got: x.len() });
    }
    bbox.index(x).ok_or_else(|| Error::OutsideBox(x.iter().map(|v| *v as f64).collect()))
}

/// Visit the box neighbours of `v` (with coordinates `c`) as
/// `(index, edge ticks)`.
#[inline]
fn for_neighbors(
    field: &PassageTimeField,
    strides: &[usize],
    v: usize,
    c: &mut [i64],
    mut f: impl FnMut(usize, Ticks),
) {
    let b = &field.bbox;
    for a in 0..c.len() {
        if c[a] < b.max[a] {
            f(v + strides[a], field.weight_ticks(c, a));
        }
        if c[a] > b.min[a] {
            c[a] -= 1;
            let w = field.weight_ticks(c, a);
            c[a] += 1;
            f(v - strides[a], w);
        }
    }
}

fn strides(b: &LatticeBox) -> Vec<usize> {
    let mut s = Vec::with_capacity(b.dim());
    let mut acc = 1;
    for n in b.shape() {
        s.push(acc);
        acc *= n;
    }
    s
}

/// Dijkstra from `source`; stops once every index in `stop_after` is settled
/// (an empty list runs to exhaustion).
fn single_source(field: &PassageTimeField, source: usize, stop_after: &[usize]) -> Vec<Ticks> {
    let b = &field.bbox;
    let n = b.len();
    let st = strides(b);
    let mut dist = vec![UNREACHED; n];
    let mut done = vec![false; n];
    let mut pending = stop_after.iter().filter(|&&t| t != source).count();
    let mut want = vec![false; if stop_after.is_empty() { 0 } else { n }];
    for &t in stop_after {
        want[t] = true;
    }
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    let mut c = vec![0i64; b.dim()];
    while let Some(Reverse((t, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        if !want.is_empty() && want[v] && v != source {
            pending -= 1;
            if pending == 0 {
                break;
            }
        }
        b.coords_into(v, &mut c);
        for_neighbors(field, &st, v, &mut c, |w, wt| {
            let nt = add(t, wt);
            if nt < dist[w] {
                dist[w] = nt;
                heap.push(Reverse((nt, w)));
            }
        });
    }
    dist
}

/// Passage times from `source` to every site of the field's box, over paths
/// that stay inside the box.
pub fn first_passage_times(field: &PassageTimeField, source: &[i64]) -> Result<TimeMap> {
    let s = check_inside(&field.bbox, source)?;
    Ok(TimeMap { bbox: field.bbox.clone(), source: source.to_vec(), ticks: single_source(field, s, &[]) })
}

/// Passage time between two box sites; the search stops when `b` is settled.
pub fn first_passage_time(field: &PassageTimeField, a: &[i64], b: &[i64]) -> Result<f64> {
    Ok(first_passage_time_to(field, a, &[b.to_vec()])?[0])
}

/// Passage times from `source` to each target, stopping early.
pub fn first_passage_time_to(field: &PassageTimeField, source: &[i64], targets: &[Vec<i64>]) -> Result<Vec<f64>> {
    let s = check_inside(&field.bbox, source)?;
    let idx = targets.iter().map(|t| check_inside(&field.bbox, t)).collect::<Result<Vec<_>>>()?;
    if idx.is_empty() {
        return Ok(Vec::new());
    }
    let dist = single_source(field, s, &idx);
    Ok(idx.iter().map(|&i| to_time(dist[i])).collect())
}

/// One label-setting pass from several sources over the shared weights.
/// Returns for every site the minimal time and the bitmask of the sources
/// attaining it.
pub(crate) fn multi_source(field: &PassageTimeField, sources: &[usize]) -> (Vec<Ticks>, Vec<u64>) {
    debug_assert!(sources.len() <= 64);
    let b = &field.bbox;
    let n = b.len();
    let st = strides(b);
    let mut dist = vec![UNREACHED; n];
    let mut mask = vec![0u64; n];
    // mask already propagated to the neighbours
    let mut sent = vec![0u64; n];
    let mut heap = BinaryHeap::new();
    for (j, &s) in sources.iter().enumerate() {
        dist[s] = 0;
        mask[s] |= 1 << j;
        heap.push(Reverse((0, s)));
    }
    let mut c = vec![0i64; b.dim()];
    while let Some(Reverse((t, v))) = heap.pop() {
        if t != dist[v] || sent[v] == mask[v] {
            continue;
        }
        let m = mask[v];
        sent[v] = m;
        b.coords_into(v, &mut c);
        for_neighbors(field, &st, v, &mut c, |w, wt| {
            let nt = add(t, wt);
            if nt < dist[w] {
                dist[w] = nt;
                mask[w] = m;
                heap.push(Reverse((nt, w)));
            } else if nt == dist[w] && mask[w] | m != mask[w] {
                // equal-time arrival; zero-weight edges can grow a mask after
                // the site was expanded, so push it again
                mask[w] |= m;
                heap.push(Reverse((nt, w)));
            }
        });
    }
    (dist, mask)
}
