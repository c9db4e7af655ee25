use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::index::in_ball;
use crate::continuum::EventGraphIndex;
use crate::error::{Error, Result};
use crate::geometry::SiteConfiguration;
use crate::territory::{GridSpec, TerritoryMap, Winner};
use crate::time::{add, to_time, Ticks, UNREACHED};

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn unit(center: Vec<f64>) -> Self {
        Ball { center, radius: 1.0 }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        in_ball(x, &self.center, self.radius)
    }
}

/// Passage time to one target point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageTime {
    /// `+∞` when no chain of simulated events reaches the target.
    pub time: f64,
    pub truncated: bool,
    /// The time is at most `t_cap` and the optimal chain keeps every event
    /// centre at least `R_cap` inside the box.
    pub certified: bool,
}

struct Outcome {
    ticks: Vec<Ticks>,
    masks: Vec<u64>,
    last: Vec<Option<u32>>,
    pred: Vec<u32>,
}

const NO_PRED: u32 = u32::MAX;

/// Label-setting search over the event graph with node-exit weights. Each
/// source ball carries a type bit; events with a centre in a source ball are
/// reached at time 0. Events are settled in order of their exit time
/// (arrival plus delay), so an event whose exit lies beyond every target's
/// current best is never expanded. For each target the result is the
/// minimal time and the set of types attaining it.
fn search(index: &EventGraphIndex, sources: &[Ball], targets: &[Vec<f64>], exhaust: bool) -> Outcome {
    let ev = index.events();
    let n = ev.len();
    let mut exit = vec![UNREACHED; n];
    let mut mask = vec![0u64; n];
    let mut sent = vec![0u64; n];
    let mut pred = vec![NO_PRED; n];
    let mut heap = BinaryHeap::new();
    for (j, b) in sources.iter().enumerate() {
        index.centers_within(&b.center, b.radius, |u| {
            let e = ev.delay_ticks(u);
            if e < exit[u] {
                exit[u] = e;
                mask[u] = 0;
            }
            mask[u] |= 1 << j;
            heap.push(Reverse((e, u as u32)));
        });
    }

    let m = targets.len();
    let mut best = vec![UNREACHED; m];
    let mut best_mask = vec![0u64; m];
    let mut last = vec![None; m];
    let mut cover: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (t, p) in targets.iter().enumerate() {
        for (j, b) in sources.iter().enumerate() {
            if b.contains(p) {
                best[t] = 0;
                best_mask[t] |= 1 << j;
            }
        }
        index.covering(p, |u| cover[t].push(u as u32));
    }
    // reverse map, event -> covered targets, in CSR form
    let mut start = vec![0u32; n + 1];
    for c in &cover {
        for &u in c {
            start[u as usize + 1] += 1;
        }
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut covered = vec![0u32; start[n] as usize];
    for (t, c) in cover.iter().enumerate() {
        for &u in c {
            covered[fill[u as usize] as usize] = t as u32;
            fill[u as usize] += 1;
        }
    }
    let live: Vec<usize> = (0..m).filter(|&t| !cover[t].is_empty()).collect();
    drop(cover);
    let mut bound_dirty = true;
    let mut bound = UNREACHED;

    while let Some(Reverse((t, u))) = heap.pop() {
        let u = u as usize;
        if t != exit[u] || sent[u] == mask[u] {
            continue;
        }
        if !exhaust {
            if bound_dirty {
                bound = live.iter().map(|&i| best[i]).max().unwrap_or(0);
                bound_dirty = false;
            }
            if bound != UNREACHED && t > bound {
                break;
            }
        }
        let mu = mask[u];
        sent[u] = mu;
        for &tg in &covered[start[u] as usize..start[u + 1] as usize] {
            let tg = tg as usize;
            if t < best[tg] {
                best[tg] = t;
                best_mask[tg] = mu;
                last[tg] = Some(u as u32);
                bound_dirty = true;
            } else if t == best[tg] {
                best_mask[tg] |= mu;
            }
        }
        let xu = ev.center(u);
        index.centers_within(xu, ev.radius(u), |v| {
            if ev.center(v) == xu {
                return;
            }
            let e = add(t, ev.delay_ticks(v));
            if !exhaust && e > bound {
                return;
            }
            if e < exit[v] {
                exit[v] = e;
                mask[v] = mu;
                pred[v] = u as u32;
                heap.push(Reverse((e, v as u32)));
            } else if e == exit[v] && mask[v] | mu != mask[v] {
                mask[v] |= mu;
                heap.push(Reverse((e, v as u32)));
            }
        });
    }
    Outcome { ticks: best, masks: best_mask, last, pred }
}

fn check_sources(index: &EventGraphIndex, sources: &[Ball]) -> Result<()> {
    let w = &index.events().window;
    for b in sources {
        if b.center.len() != w.dim() {
            return Err(Error::Dimension { expected: w.dim(), got: b.center.len() });
        }
        if !w.contains(&b.center) || !(b.radius > 0.0) {
            return Err(Error::OutsideBox(b.center.clone()));
        }
    }
    if sources.len() > 64 {
        return Err(Error::invalid("at most 64 source sets are supported"));
    }
    Ok(())
}

/// `T̃(A, c)` for each target `c`, where `A` is the union of `sources`: the
/// cheapest chain of events whose first centre lies in `A`, each further
/// centre inside the previous event's ball and `c` inside the last ball;
/// leaving event `u` costs its delay. Targets in `A` get 0.
pub fn continuum_passage_time(index: &EventGraphIndex, sources: &[Ball], targets: &[Vec<f64>]) -> Result<Vec<PassageTime>> {
    check_sources(index, sources)?;
    if sources.is_empty() {
        return Err(Error::invalid("empty source set"));
    }
    let out = search(index, sources, targets, false);
    let ev = index.events();
    Ok((0..targets.len())
        .map(|t| {
            let ticks = out.ticks[t];
            let time = to_time(ticks);
            let mut certified = time <= ev.t_cap;
            let mut cur = out.last[t];
            while let Some(u) = cur {
                let u = u as usize;
                assert!(ev.delay(u) <= time, "chain uses an event later than its arrival time");
                if ev.window.depth(ev.center(u)) < ev.r_cap {
                    certified = false;
                }
                cur = (out.pred[u] != NO_PRED).then_some(out.pred[u]);
            }
            PassageTime { time, truncated: ticks == UNREACHED, certified }
        })
        .collect())
}

/// Points standing in for a ball in set passage times: the global mesh
/// `pitch · Z^d` inside the ball, its centre, and every event centre inside
/// it. Using one global mesh makes nested and overlapping balls share their
/// common points.
pub fn ball_sample_points(index: &EventGraphIndex, ball: &Ball, pitch: f64) -> Vec<Vec<f64>> {
    let d = ball.center.len();
    let lo: Vec<i64> = ball.center.iter().map(|c| ((c - ball.radius) / pitch).ceil() as i64).collect();
    let hi: Vec<i64> = ball.center.iter().map(|c| ((c + ball.radius) / pitch).floor() as i64).collect();
    let mut pts = vec![ball.center.clone()];
    if lo.iter().zip(&hi).all(|(a, b)| a <= b) {
        let mut cur = lo.clone();
        let mut p = vec![0.0; d];
        'outer: loop {
            for a in 0..d {
                p[a] = cur[a] as f64 * pitch;
            }
            if ball.contains(&p) {
                pts.push(p.clone());
            }
            let mut a = 0;
            loop {
                if a == d {
                    break 'outer;
                }
                cur[a] += 1;
                if cur[a] <= hi[a] {
                    break;
                }
                cur[a] = lo[a];
                a += 1;
            }
        }
    }
    let ev = index.events();
    let mut inside = Vec::new();
    index.centers_within(&ball.center, ball.radius, |u| inside.push(u));
    inside.sort_unstable();
    pts.extend(inside.into_iter().map(|u| ev.center(u).to_vec()));
    pts
}

/// `T̃(A, C) = sup_{c ∈ C} T̃(A, c)` over the sample points of `C`.
pub fn set_passage_time(index: &EventGraphIndex, a: &[Ball], c: &Ball, pitch: f64) -> Result<f64> {
    let pts = ball_sample_points(index, c, pitch);
    Ok(continuum_passage_time(index, a, &pts)?.iter().map(|p| p.time).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGap {
    /// `T̃(x + B, y)`.
    pub point_time: f64,
    /// `T̃(x + B, y + B)`.
    pub ball_time: f64,
    pub gap: f64,
    pub mesh_pitch: f64,
    pub mesh_points: usize,
}

/// Compare the time to reach the point `y` with the time to cover `y + B`,
/// both from `x + B`.
pub fn ball_vs_point_gap(index: &EventGraphIndex, x: &[f64], y: &[f64], pitch: f64) -> Result<BallGap> {
    let src = [Ball::unit(x.to_vec())];
    let pts = ball_sample_points(index, &Ball::unit(y.to_vec()), pitch);
    let times = continuum_passage_time(index, &src, &pts)?;
    if times.iter().any(|p| p.truncated) {
        return Err(Error::Truncated { distance: crate::geometry::euclid_distance(x, y), fraction: 1.0 });
    }
    // pts[0] is y itself
    let point_time = times[0].time;
    let ball_time = times.iter().map(|p| p.time).fold(0.0, f64::max);
    Ok(BallGap { point_time, ball_time, gap: ball_time - point_time, mesh_pitch: pitch, mesh_points: pts.len() })
}

/// Territories of the unit balls around the scaled sites of `cfg` on the
/// points of `grid`, over the shared event set.
pub fn continuum_territories(
    index: &EventGraphIndex,
    cfg: &SiteConfiguration,
    grid: &GridSpec,
    retain_per_type: bool,
) -> Result<TerritoryMap> {
    let ev = index.events();
    if cfg.dim() != ev.dim() || grid.dim() != ev.dim() {
        return Err(Error::Dimension { expected: ev.dim(), got: cfg.dim().max(grid.dim()) });
    }
    let seeds: Vec<Ball> = cfg.points().into_iter().map(Ball::unit).collect();
    for i in 0..seeds.len() {
        for j in i + 1..seeds.len() {
            if !(crate::geometry::euclid_distance(&seeds[i].center, &seeds[j].center) > 2.0) {
                return Err(Error::OverlappingSeeds(i, j));
            }
        }
    }
    check_sources(index, &seeds)?;
    let far: Vec<f64> = (0..grid.dim()).map(|a| grid.origin[a] + (grid.shape[a] - 1) as f64 * grid.pitch).collect();
    for corner in [&grid.origin, &far] {
        if !ev.window.contains(corner) {
            return Err(Error::OutsideBox(corner.clone()));
        }
    }
    let pts = grid.points();
    let out = search(index, &seeds, &pts, true);
    let winners = out
        .ticks
        .iter()
        .zip(&out.masks)
        .map(|(&t, &m)| {
            if t == UNREACHED {
                Winner::Unreached
            } else if m.count_ones() == 1 {
                Winner::Type(m.trailing_zeros() as usize)
            } else {
                Winner::Tie
            }
        })
        .collect();
    let per_type = if retain_per_type {
        Some(
            seeds
                .par_iter()
                .map(|s| search(index, std::slice::from_ref(s), &pts, true).ticks.into_iter().map(to_time).collect())
                .collect(),
        )
    } else {
        None
    };
    Ok(TerritoryMap {
        grid: grid.clone(),
        k: seeds.len(),
        seed: ev.seed,
        winners,
        times: out.ticks.into_iter().map(to_time).collect(),
        per_type,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{OutburstEventSet, Window};

    fn window() -> Window {
        Window::centered(&[0.0, 0.0], 10.0).unwrap()
    }

    #[test]
    fn target_in_source_is_zero() {
        let ev = OutburstEventSet::from_events(window(), 5.0, &[]).unwrap();
        let idx = EventGraphIndex::new(&ev);
        let r = continuum_passage_time(&idx, &[Ball::unit(vec![0.0, 0.0])], &[vec![0.5, 0.5], vec![3.0, 0.0]]).unwrap();
        assert_eq!(r[0].time, 0.0);
        assert!(!r[0].truncated);
        assert!(r[1].truncated);
        assert_eq!(r[1].time, f64::INFINITY);
    }

    #[test]
    fn three_event_chain() {
        let ev = OutburstEventSet::from_events(
            window(),
            5.0,
            &[
                (vec![0.5, 0.0], 0.25, 2.0),  // in A
                (vec![2.0, 0.0], 0.5, 2.0),   // reachable from the first
                (vec![-5.0, 5.0], 0.0, 3.0),  // decoy, unreachable
            ],
        )
        .unwrap();
        let idx = EventGraphIndex::new(&ev);
        let src = [Ball::unit(vec![0.0, 0.0])];
        let r = continuum_passage_time(&idx, &src, &[vec![3.5, 0.0], vec![2.0, 1.0], vec![-4.0, 5.0]]).unwrap();
        assert_eq!(r[0].time, 0.75);
        assert_eq!(r[1].time, 0.25);
        assert!(r[2].truncated);
    }

    #[test]
    fn centre_of_an_event_is_not_reached_by_itself() {
        let ev = OutburstEventSet::from_events(window(), 5.0, &[(vec![0.0, 0.0], 0.5, 3.0)]).unwrap();
        let idx = EventGraphIndex::new(&ev);
        let r = continuum_passage_time(&idx, &[Ball { center: vec![0.0, 0.0], radius: 0.1 }], &[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(r[0].time, 0.0);
        assert_eq!(r[1].time, 0.5);
    }

    #[test]
    fn territories_without_events() {
        let ev = OutburstEventSet::from_events(window(), 5.0, &[]).unwrap();
        let idx = EventGraphIndex::new(&ev);
        let cfg = SiteConfiguration::new(vec![vec![-3.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let grid = GridSpec::centered(&[0.0, 0.0], 5.0, 0.5).unwrap();
        let map = continuum_territories(&idx, &cfg, &grid, true).unwrap();
        for (i, p) in grid.points().iter().enumerate() {
            let w = map.winners[i];
            if in_ball(p, &[-3.0, 0.0], 1.0) {
                assert_eq!(w, Winner::Type(0));
                assert_eq!(map.times[i], 0.0);
            } else if in_ball(p, &[3.0, 0.0], 1.0) {
                assert_eq!(w, Winner::Type(1));
            } else {
                assert_eq!(w, Winner::Unreached);
            }
        }
    }

    #[test]
    fn territory_errors() {
        let ev = OutburstEventSet::from_events(window(), 5.0, &[]).unwrap();
        let idx = EventGraphIndex::new(&ev);
        let grid = GridSpec::centered(&[0.0, 0.0], 5.0, 0.5).unwrap();
        let close = SiteConfiguration::new(vec![vec![-0.9, 0.0], vec![0.9, 0.0]]).unwrap();
        assert!(matches!(continuum_territories(&idx, &close, &grid, false), Err(Error::OverlappingSeeds(0, 1))));
        let ok = SiteConfiguration::new(vec![vec![-3.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let big = GridSpec::centered(&[0.0, 0.0], 12.0, 1.0).unwrap();
        assert!(matches!(continuum_territories(&idx, &ok, &big, false), Err(Error::OutsideBox(_))));
    }

    #[test]
    fn gap_is_zero_at_same_point_and_nonnegative() {
        let w = window();
        let ev = crate::continuum::simulate_outbursts(&w, 6.0, crate::continuum::RadiusLaw::Constant { radius: 1.0 }, 1).unwrap();
        let idx = EventGraphIndex::new(&ev);
        let g = ball_vs_point_gap(&idx, &[0.0, 0.0], &[0.0, 0.0], 0.1).unwrap();
        assert_eq!((g.point_time, g.ball_time, g.gap), (0.0, 0.0, 0.0));
        let g = ball_vs_point_gap(&idx, &[0.0, 0.0], &[4.0, 1.0], 0.1).unwrap();
        assert!(g.gap >= 0.0 && g.point_time > 0.0);
    }

    #[test]
    fn sample_points_share_the_global_mesh() {
        let ev = OutburstEventSet::from_events(window(), 5.0, &[]).unwrap();
        let idx = EventGraphIndex::new(&ev);
        let a = ball_sample_points(&idx, &Ball::unit(vec![0.0, 0.0]), 0.25);
        let b = ball_sample_points(&idx, &Ball::unit(vec![0.5, 0.0]), 0.25);
        let shared = a.iter().filter(|p| b.contains(p)).count();
        assert!(shared > 10);
        assert_eq!(a[0], vec![0.0, 0.0]);
    }
}
