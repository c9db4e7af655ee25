use crate::continuum::OutburstEventSet;

/// Uniform hash grid over a subset of event centres, in CSR form.
#[derive(Debug, Clone)]
struct Grid {
    cell: f64,
    dims: Vec<usize>,
    start: Vec<u32>,
    ids: Vec<u32>,
}

const MAX_CELLS: usize = 1 << 22;

impl Grid {
    fn new(events: &OutburstEventSet, members: &[u32], cell: f64) -> Self {
        let w = &events.window;
        let extent: Vec<f64> = w.min.iter().zip(&w.max).map(|(a, b)| b - a).collect();
        let cap = MAX_CELLS.min(4 * members.len() + 16);
        let mut cell = cell.max(1e-9);
        let dims = loop {
            let dims: Vec<usize> = extent.iter().map(|e| ((e / cell).ceil() as usize).max(1)).collect();
            if dims.iter().try_fold(1usize, |acc, n| acc.checked_mul(*n)).is_some_and(|n| n <= cap) {
                break dims;
            }
            cell *= 2.0;
        };
        let n_cells: usize = dims.iter().product();
        let mut start = vec![0u32; n_cells + 1];
        let cells: Vec<usize> = members
            .iter()
            .map(|&i| {
                let c = cell_index(&w.min, cell, &dims, events.center(i as usize));
                start[c + 1] += 1;
                c
            })
            .collect();
        for i in 0..n_cells {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut ids = vec![0u32; members.len()];
        for (&i, &c) in members.iter().zip(&cells) {
            ids[fill[c] as usize] = i;
            fill[c] += 1;
        }
        Grid { cell, dims, start, ids }
    }

    /// Visit every member whose centre lies in a cell within `reach` cells of
    /// the cell containing `x` (per axis).
    fn visit_near(&self, min: &[f64], x: &[f64], reach: i64, mut f: impl FnMut(usize)) {
        let d = self.dims.len();
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for a in 0..d {
            let c = ((x[a] - min[a]) / self.cell).floor();
            let c = if c.is_finite() { c.clamp(-1e15, 1e15) as i64 } else { 0 };
            lo[a] = (c - reach).max(0);
            hi[a] = (c + reach).min(self.dims[a] as i64 - 1);
            if lo[a] > hi[a] {
                return;
            }
        }
        let mut cur = lo.clone();
        loop {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for a in 0..d {
                idx += cur[a] as usize * stride;
                stride *= self.dims[a];
            }
            // a run of cells along axis 0 is contiguous in CSR order
            let end = idx + (hi[0] - lo[0]) as usize;
            for &e in &self.ids[self.start[idx] as usize..self.start[end + 1] as usize] {
                f(e as usize);
            }
            let mut a = 1;
            loop {
                if a >= d {
                    return;
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
}

fn cell_index(min: &[f64], cell: f64, dims: &[usize], x: &[f64]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for a in 0..dims.len() {
        let c = (((x[a] - min[a]) / cell).floor().max(0.0) as usize).min(dims[a] - 1);
        idx += c * stride;
        stride *= dims[a];
    }
    idx
}

/// Spatial index over an event set. Centres sit in one fine grid. For
/// covering queries the events are split into radius classes
/// `(c·2^(j−1), c·2^j]`, each in a grid whose cell is the class's largest
/// radius, so a covering event always lies in the query's cell or an
/// adjacent one.
#[derive(Debug, Clone)]
pub struct EventGraphIndex<'a> {
    events: &'a OutburstEventSet,
    centers: Grid,
    classes: Vec<Grid>,
}

impl<'a> EventGraphIndex<'a> {
    pub fn new(events: &'a OutburstEventSet) -> Self {
        let n = events.len();
        let base = if n == 0 {
            events.r_cap.max(1e-9)
        } else {
            let mut r = events.radii().to_vec();
            r.sort_unstable_by(f64::total_cmp);
            r[n / 2].max(events.r_cap / 1024.0)
        };
        let all: Vec<u32> = (0..n as u32).collect();
        let centers = Grid::new(events, &all, base);
        let mut members: Vec<Vec<u32>> = Vec::new();
        for i in 0..n {
            let r = events.radius(i);
            let mut j = if r <= base { 0 } else { (r / base).log2().ceil() as usize };
            while base * 2f64.powi(j as i32) < r {
                j += 1;
            }
            if members.len() <= j {
                members.resize(j + 1, Vec::new());
            }
            members[j].push(i as u32);
        }
        let classes = members
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_empty())
            .map(|(j, m)| Grid::new(events, m, base * 2f64.powi(j as i32)))
            .collect();
        EventGraphIndex { events, centers, classes }
    }

    pub fn events(&self) -> &'a OutburstEventSet {
        self.events
    }

    /// Events whose ball contains `y`: `‖y − X_u‖ ≤ R_u` and `y ≠ X_u`.
    pub fn covering(&self, y: &[f64], mut f: impl FnMut(usize)) {
        let ev = self.events;
        let min = &ev.window.min;
        for g in &self.classes {
            g.visit_near(min, y, 1, |u| {
                let d2 = dist2(ev.center(u), y);
                let r = ev.radius(u);
                if d2 <= r * r && d2 > 0.0 {
                    f(u);
                }
            });
        }
    }

    pub fn covering_vec(&self, y: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        self.covering(y, |u| out.push(u));
        out.sort_unstable();
        out
    }

    /// Events with centre in the closed ball `B(p, r)`.
    pub fn centers_within(&self, p: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let ev = self.events;
        let reach = (r / self.centers.cell).ceil() as i64;
        self.centers.visit_near(&ev.window.min, p, reach.max(1), |u| {
            if in_ball(ev.center(u), p, r) {
                f(u);
            }
        });
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closed-ball membership used everywhere a point is tested against a seed
/// or target ball, so the same point always gets the same answer.
#[inline]
pub fn in_ball(x: &[f64], center: &[f64], r: f64) -> bool {
    dist2(x, center) <= r * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{simulate_outbursts, RadiusLaw, Window};

    #[test]
    fn covering_matches_linear_scan() {
        let w = Window::centered(&[0.0, 0.0], 6.0).unwrap();
        let ev = simulate_outbursts(&w, 1.0, RadiusLaw::Exponential { rate: 1.5 }, 4).unwrap();
        let idx = EventGraphIndex::new(&ev);
        for i in 0..200 {
            let y = [-7.0 + 0.07 * i as f64, 3.0 - 0.05 * i as f64];
            let brute: Vec<usize> = (0..ev.len())
                .filter(|&u| {
                    let d2 = dist2(ev.center(u), &y);
                    d2 <= ev.radius(u).powi(2) && d2 > 0.0
                })
                .collect();
            assert_eq!(idx.covering_vec(&y), brute);
        }
        // an event centre is not covered by its own event
        let c = ev.center(0).to_vec();
        assert!(!idx.covering_vec(&c).contains(&0));
    }

    #[test]
    fn centers_within_matches_linear_scan() {
        let w = Window::centered(&[0.0, 0.0, 0.0], 3.0).unwrap();
        let ev = simulate_outbursts(&w, 1.0, RadiusLaw::Constant { radius: 0.7 }, 2).unwrap();
        let idx = EventGraphIndex::new(&ev);
        for r in [0.5, 1.0, 2.5] {
            let p = [0.3, -1.0, 0.8];
            let mut got = Vec::new();
            idx.centers_within(&p, r, |u| got.push(u));
            got.sort_unstable();
            let brute: Vec<usize> = (0..ev.len()).filter(|&u| in_ball(ev.center(u), &p, r)).collect();
            assert_eq!(got, brute);
        }
    }
}
