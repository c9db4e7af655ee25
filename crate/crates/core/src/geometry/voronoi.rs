use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Norm, SiteConfiguration};

/// Relative slack below which a strict inequality counts as a tie.
pub const STRICT_MARGIN: f64 = 1e-12;

/// Strict Voronoi cells of a site configuration under a norm.
#[derive(Debug, Clone)]
pub struct VoronoiCells<'a> {
    points: Vec<Vec<f64>>,
    norm: &'a Norm,
}

impl<'a> VoronoiCells<'a> {
    pub fn new(cfg: &SiteConfiguration, norm: &'a Norm) -> Self {
        VoronoiCells { points: cfg.points(), norm }
    }

    pub fn from_points(points: Vec<Vec<f64>>, norm: &'a Norm) -> Self {
        VoronoiCells { points, norm }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// `z ∈ V_i^δ`: `N(z - x_i) < N(z - x_j) - δ` for every `j ≠ i`.
    ///
    /// The inequality must hold by more than a relative rounding margin of
    /// [`STRICT_MARGIN`], so points on a boundary up to floating-point noise
    /// are excluded.
    pub fn contains_delta(&self, z: &[f64], i: usize, delta: f64) -> Result<bool> {
        if i >= self.points.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.points.len() });
        }
        let own = self.norm.distance(z, &self.points[i]);
        Ok(self.points.iter().enumerate().filter(|(j, _)| *j != i).all(|(_, p)| {
            let other = self.norm.distance(z, p);
            let margin = STRICT_MARGIN * own.abs().max(other.abs()).max(delta.abs()).max(1.0);
            own + delta < other - margin
        }))
    }

    pub fn contains(&self, z: &[f64], i: usize) -> Result<bool> {
        self.contains_delta(z, i, 0.0)
    }

    /// Index of the cell strictly containing `z`, `None` on ties.
    pub fn cell_of(&self, z: &[f64]) -> Option<usize> {
        let dists: Vec<f64> = self.points.iter().map(|p| self.norm.distance(z, p)).collect();
        let (best, &dmin) = dists
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        let margin = STRICT_MARGIN * dmin.max(1.0);
        let ties = dists.iter().filter(|&&d| d <= dmin + margin).count();
        (ties == 1).then_some(best)
    }
}

/// Membership of `z` in the strict cell `V_i` (0-based `i`).
pub fn voronoi_member(z: &[f64], i: usize, cfg: &SiteConfiguration, norm: &Norm) -> Result<bool> {
    VoronoiCells::new(cfg, norm).contains(z, i)
}

/// Membership of `z` in the shrunken cell `V_i^δ` (0-based `i`).
pub fn voronoi_delta_member(
    z: &[f64],
    i: usize,
    cfg: &SiteConfiguration,
    norm: &Norm,
    delta: f64,
) -> Result<bool> {
    VoronoiCells::new(cfg, norm).contains_delta(z, i, delta)
}

fn sample_in_cube(rng: &mut ChaCha8Rng, center: &[f64], half_width: f64) -> Vec<f64> {
    center.iter().map(|c| c + rng.random_range(-half_width..half_width)).collect()
}

/// Draw points `z` with `predicate(z)` from the cube of half-width
/// `half_width` around `center`, pair each with a ratio `λ ≥ 1`, and return
/// every pair for which `center + λ(z - center)` leaves the set.
pub fn homothety_stability_check(
    predicate: &dyn Fn(&[f64]) -> bool,
    center: &[f64],
    half_width: f64,
    trials: usize,
    seed: u64,
) -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut accepted = 0;
    let mut attempts = 0usize;
    while accepted < trials && attempts < trials.saturating_mul(1000) {
        attempts += 1;
        let z = sample_in_cube(&mut rng, center, half_width);
        if !predicate(&z) {
            continue;
        }
        accepted += 1;
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let lambda = 1.0 / u;
        let image: Vec<f64> = z.iter().zip(center).map(|(zi, ci)| ci + lambda * (zi - ci)).collect();
        if !predicate(&image) {
            out.push((z, lambda));
        }
    }
    out
}

/// Translation check for `V_1^δ(0, x)`: every sampled member `z` must have
/// `z - x` in the same set.
pub fn translate_stability_check(
    x: &[f64],
    delta: f64,
    norm: &Norm,
    half_width: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let cells = VoronoiCells::from_points(vec![vec![0.0; x.len()], x.to_vec()], norm);
    let pred = |z: &[f64]| cells.contains_delta(z, 0, delta).unwrap_or(false);
    translate_stability_check_with(&pred, x, half_width, trials, seed)
}

/// Same as [`translate_stability_check`] for an arbitrary predicate.
pub fn translate_stability_check_with(
    predicate: &dyn Fn(&[f64]) -> bool,
    x: &[f64],
    half_width: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = vec![0.0; x.len()];
    let mut out = Vec::new();
    let mut accepted = 0;
    let mut attempts = 0usize;
    while accepted < trials && attempts < trials.saturating_mul(1000) {
        attempts += 1;
        let z = sample_in_cube(&mut rng, &origin, half_width);
        if !predicate(&z) {
            continue;
        }
        accepted += 1;
        let shifted: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
        if !predicate(&shifted) {
            out.push(z);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    /// Minimum of `N` along `[x_i, x_j]`.
    pub min_norm: f64,
    pub witness: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceGeometry {
    pub pairs: Vec<PairCheck>,
    pub per_site: Vec<bool>,
    pub verdict: bool,
}

impl CoexistenceGeometry {
    pub fn first_failure(&self) -> Option<&PairCheck> {
        self.pairs.iter().find(|p| !p.pass)
    }
}

const SPHERE_TOLERANCE: f64 = 1e-6;
const SEARCH_TOLERANCE: f64 = 1e-10;
const VERDICT_MARGIN: f64 = 1e-9;

/// Segment criterion for coexistence: for every pair of sites on the unit
/// sphere of `norm`, does `[x_i, x_j]` contain a point of norm below 1?
///
/// The minimum along each segment is found by ternary search, which is exact
/// for convex functions up to the search tolerance.
pub fn coexistence_geometry_check(cfg: &SiteConfiguration, norm: &Norm) -> Result<CoexistenceGeometry> {
    for (i, s) in cfg.sites.iter().enumerate() {
        let v = norm.eval(s);
        if (v - 1.0).abs() > SPHERE_TOLERANCE {
            return Err(Error::NotOnUnitSphere { site: i, value: v });
        }
    }
    let k = cfg.len();
    let mut pairs = Vec::new();
    let mut per_site = vec![true; k];
    for i in 0..k {
        for j in i + 1..k {
            let a = &cfg.sites[i];
            let b = &cfg.sites[j];
            let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| (1.0 - t) * p + t * q).collect() };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            while hi - lo > SEARCH_TOLERANCE {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                let (f1, f2) = (norm.eval(&at(m1)), norm.eval(&at(m2)));
                if f1 < f2 {
                    hi = m2;
                } else if f1 > f2 {
                    lo = m1;
                } else {
                    lo = m1;
                    hi = m2;
                }
            }
            let t = 0.5 * (lo + hi);
            let witness = at(t);
            let min_norm = norm.eval(&witness);
            let pass = min_norm < 1.0 - VERDICT_MARGIN;
            if !pass {
                per_site[i] = false;
                per_site[j] = false;
            }
            pairs.push(PairCheck { i, j, min_norm, witness, pass });
        }
    }
    let verdict = per_site.iter().all(|&b| b);
    Ok(CoexistenceGeometry { pairs, per_site, verdict })
}
