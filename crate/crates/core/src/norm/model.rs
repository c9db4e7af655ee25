use serde::{Deserialize, Serialize};

use crate::continuum::{
    ball_sample_points, continuum_passage_time, simulate_outbursts, Ball, EventGraphIndex, RadiusLaw, Window,
    DEFAULT_MESH_PITCH,
};
use crate::error::{Error, Result};
use crate::lattice::{first_passage_time_to, psi_round, EdgeWeightDistribution, LatticeBox, PassageTimeField};

/// A growth model seen through its point-to-point passage time `T(x, y)`.
///
/// Lattice: `T(x, y) = T̃(ψ(x), ψ(y))`. Continuum: `T(x, y) = T̃(x + B, y + B)`
/// with the sup over `y + B` taken on the sample points of
/// [`ball_sample_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Lattice(LatticeModel),
    Continuum(ContinuumModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub dim: usize,
    pub distribution: EdgeWeightDistribution,
    /// Box margin around the query points, as a fraction of their spread.
    pub margin_factor: f64,
    pub min_margin: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumModel {
    pub dim: usize,
    pub law: RadiusLaw,
    pub mesh_pitch: f64,
    pub margin_factor: f64,
    pub min_margin: f64,
    /// First delay horizon tried is `4 + horizon_per_unit · spread / E R`.
    pub horizon_per_unit: f64,
}

impl LatticeModel {
    pub fn new(dim: usize, distribution: EdgeWeightDistribution) -> Self {
        LatticeModel { dim, distribution, margin_factor: 0.25, min_margin: 8 }
    }
}

impl ContinuumModel {
    pub fn new(dim: usize, law: RadiusLaw) -> Self {
        ContinuumModel {
            dim,
            law,
            mesh_pitch: DEFAULT_MESH_PITCH,
            margin_factor: 0.25,
            min_margin: 4.0,
            horizon_per_unit: 1.25,
        }
    }
}

/// Doublings of the delay horizon before a query is declared truncated.
const MAX_DOUBLINGS: u32 = 8;

impl Model {
    pub fn lattice(dim: usize, distribution: EdgeWeightDistribution) -> Self {
        Model::Lattice(LatticeModel::new(dim, distribution))
    }

    pub fn continuum(dim: usize, law: RadiusLaw) -> Self {
        Model::Continuum(ContinuumModel::new(dim, law))
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Lattice(m) => m.dim,
            Model::Continuum(m) => m.dim,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, Model::Lattice(_))
    }

    /// `T(sources[i], targets[j])` in the single realisation keyed by `seed`.
    /// `+∞` marks a truncated query.
    pub fn times_among(&self, seed: u64, sources: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        for p in sources.iter().chain(targets) {
            if p.len() != d {
                return Err(Error::Dimension { expected: d, got: p.len() });
            }
        }
        if sources.is_empty() {
            return Ok(Vec::new());
        }
        let (lo, hi) = bounds(sources.iter().chain(targets), d);
        let spread = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        match self {
            Model::Lattice(m) => {
                let margin = ((m.margin_factor * spread).ceil() as i64).max(m.min_margin);
                let bbox = LatticeBox::new(
                    lo.iter().map(|v| v.floor() as i64 - margin).collect(),
                    hi.iter().map(|v| v.ceil() as i64 + margin).collect(),
                )?;
                let field = PassageTimeField::new(m.distribution, seed, bbox)?;
                let tg: Vec<Vec<i64>> = targets.iter().map(|t| psi_round(t)).collect();
                sources.iter().map(|s| first_passage_time_to(&field, &psi_round(s), &tg)).collect()
            }
            Model::Continuum(m) => {
                // a cube around the Euclidean hull of the query points, so the
                // window does not depend on their orientation
                let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let diameter = crate::geometry::euclid_distance(&lo, &hi);
                let half = 0.5 * diameter + (m.margin_factor * diameter).max(m.min_margin) + 1.0;
                let window = Window::centered(&center, half)?;
                let mut horizon = 4.0 + m.horizon_per_unit * spread / m.law.mean();
                for attempt in 0..=MAX_DOUBLINGS {
                    let events = simulate_outbursts(&window, horizon, m.law, seed)?;
                    let index = EventGraphIndex::new(&events);
                    let groups: Vec<Vec<Vec<f64>>> =
                        targets.iter().map(|t| ball_sample_points(&index, &Ball::unit(t.clone()), m.mesh_pitch)).collect();
                    let flat: Vec<Vec<f64>> = groups.iter().flatten().cloned().collect();
                    let mut out = Vec::with_capacity(sources.len());
                    let mut beyond = false;
                    for s in sources {
                        let times = continuum_passage_time(&index, &[Ball::unit(s.clone())], &flat)?;
                        let mut row = Vec::with_capacity(targets.len());
                        let mut at = 0;
                        for g in &groups {
                            let sup = times[at..at + g.len()].iter().map(|p| p.time).fold(0.0, f64::max);
                            at += g.len();
                            if sup > horizon {
                                beyond = true;
                            }
                            row.push(sup);
                        }
                        out.push(row);
                    }
                    // results up to the horizon are exact; past it they are
                    // only upper bounds, so extend the realisation
                    if !beyond || attempt == MAX_DOUBLINGS {
                        if beyond {
                            for v in out.iter_mut().flatten() {
                                if *v > horizon {
                                    *v = f64::INFINITY;
                                }
                            }
                        }
                        return Ok(out);
                    }
                    horizon *= 2.0;
                }
                unreachable!()
            }
        }
    }

    pub fn times_from(&self, seed: u64, source: &[f64], targets: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.times_among(seed, &[source.to_vec()], targets)?.remove(0))
    }

    /// Mean single-edge weight (lattice) used as the slack for rounding a
    /// target to the lattice; zero for the continuum.
    pub fn rounding_unit(&self) -> f64 {
        match self {
            Model::Lattice(m) => m.distribution.mean(),
            Model::Continuum(_) => 0.0,
        }
    }
}

fn bounds<'a>(pts: impl Iterator<Item = &'a Vec<f64>>, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in pts {
        for a in 0..d {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}
