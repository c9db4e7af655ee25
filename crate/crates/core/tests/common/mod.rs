//! Exhaustive enumeration used as an oracle for the searches.

use territories::continuum::{Ball, OutburstEventSet};
use territories::lattice::{LatticeBox, PassageTimeField};
use territories::time::{to_ticks, Ticks};

fn neighbours(b: &LatticeBox, x: &[i64]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for a in 0..x.len() {
        for s in [-1, 1] {
            let mut y = x.to_vec();
            y[a] += s;
            if b.contains(&y) {
                out.push(y);
            }
        }
    }
    out
}

/// Minimum over every self-avoiding path inside the box, in ticks.
pub fn enumerate_paths(field: &PassageTimeField, a: &[i64], b: &[i64]) -> Ticks {
    fn go(
        field: &PassageTimeField,
        at: &[i64],
        goal: &[i64],
        cost: Ticks,
        seen: &mut Vec<Vec<i64>>,
        best: &mut Ticks,
    ) {
        if at == goal {
            *best = (*best).min(cost);
            return;
        }
        for y in neighbours(&field.bbox, at) {
            if seen.contains(&y) {
                continue;
            }
            let w = to_ticks(field.edge_weight(at, &y).unwrap());
            seen.push(y.clone());
            go(field, &y, goal, cost + w, seen, best);
            seen.pop();
        }
    }
    let mut best = Ticks::MAX;
    go(field, a, b, 0, &mut vec![a.to_vec()], &mut best);
    best
}

fn inside(x: &[f64], c: &[f64], r: f64) -> bool {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r * r
}

/// Cheapest chain: first centre in a source ball, each centre inside the
/// previous ball, target inside the last ball; cost is the sum of delays.
pub fn enumerate_chains(ev: &OutburstEventSet, sources: &[Ball], target: &[f64]) -> Ticks {
    if sources.iter().any(|b| inside(target, &b.center, b.radius)) {
        return 0;
    }
    fn go(ev: &OutburstEventSet, last: usize, cost: Ticks, used: &mut Vec<usize>, target: &[f64], best: &mut Ticks) {
        if inside(target, ev.center(last), ev.radius(last)) {
            *best = (*best).min(cost);
        }
        for u in 0..ev.len() {
            if used.contains(&u) || !inside(ev.center(u), ev.center(last), ev.radius(last)) {
                continue;
            }
            used.push(u);
            go(ev, u, cost + to_ticks(ev.delay(u)), used, target, best);
            used.pop();
        }
    }
    let mut best = Ticks::MAX;
    for u in 0..ev.len() {
        if sources.iter().any(|b| inside(ev.center(u), &b.center, b.radius)) {
            go(ev, u, to_ticks(ev.delay(u)), &mut vec![u], target, &mut best);
        }
    }
    best
}

