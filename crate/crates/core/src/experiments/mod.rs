//! Desk-scale experiments: territory density against Voronoi cells,
//! coexistence, competition along a line, and the assumption audit.

mod audit;
mod coexistence;
mod density;
mod line;

use serde::{Deserialize, Serialize};

use crate::continuum::{continuum_territories, simulate_outbursts, EventGraphIndex, Window};
use crate::error::{Error, Result};
use crate::geometry::{euclid_distance, Norm, SiteConfiguration, VoronoiCells};
use crate::hash::derive_seed;
use crate::lattice::{competing_territories, psi_round, LatticeBox, PassageTimeField};
use crate::norm::Model;
use crate::stats::{spearman, MeanSe};
use crate::territory::{GridSpec, TerritoryMap, Winner};

pub use audit::{assumption_audit, AuditItem, AuditOptions, AuditReport, KsFamily};
pub use coexistence::{coexistence_experiment, coexistence_proxy, CoexistenceReport, CoexistenceRung, DEFAULT_SHELL_RHO};
pub use density::{density_experiment, DensityRun, RungReport, SiteRung, TheoremReport};
pub use line::{line_competition_experiment, LinePoint, LineReport};

/// Everything needed to rerun a scale-ladder experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub model: Model,
    pub sites: Vec<Vec<f64>>,
    /// Rescale every site onto the unit sphere of the norm before use.
    pub on_unit_sphere: bool,
    pub ladder: Vec<f64>,
    pub n_reps: usize,
    pub epsilon: f64,
    /// Margin of the shrunken territories `T(x_i, z) < T(x_j, z) − δ`.
    pub delta: f64,
    /// Box edge is `box_factor · R · max(1, max_i ‖x_i‖₂)`, centred on the
    /// site centroid.
    pub box_factor: f64,
    /// Measured points keep a distance `guard_factor · spacing` from the box
    /// boundary.
    pub guard_factor: f64,
    /// Measurement grid pitch; `None` picks 1 on the lattice and
    /// `box_factor · R / 64` in the continuum.
    pub grid_pitch: Option<f64>,
    pub shell_factor: f64,
    pub seed: u64,
}

pub const DEFAULT_BOX_FACTOR: f64 = 3.0;
pub const DEFAULT_GUARD_FACTOR: f64 = 0.5;

impl ExperimentPlan {
    pub fn new(model: Model, sites: Vec<Vec<f64>>, ladder: Vec<f64>, n_reps: usize, epsilon: f64, seed: u64) -> Self {
        ExperimentPlan {
            model,
            sites,
            on_unit_sphere: false,
            ladder,
            n_reps,
            epsilon,
            delta: 0.0,
            box_factor: DEFAULT_BOX_FACTOR,
            guard_factor: DEFAULT_GUARD_FACTOR,
            grid_pitch: None,
            shell_factor: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        SiteConfiguration::new(self.sites.clone())?;
        if self.sites[0].len() != self.model.dim() {
            return Err(Error::Dimension { expected: self.model.dim(), got: self.sites[0].len() });
        }
        if self.ladder.is_empty() {
            return Err(Error::invalid("scale ladder is empty"));
        }
        if self.ladder[0] <= 0.0 || self.ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("scale ladder must be positive and strictly increasing"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.n_reps == 0 {
            return Err(Error::invalid("need at least one replicate"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta must be finite and non-negative"));
        }
        if !(self.box_factor > 0.0) || !(self.guard_factor >= 0.0) {
            return Err(Error::invalid("box and guard factors must be positive"));
        }
        if let Some(p) = self.grid_pitch {
            if !(p > 0.0) {
                return Err(Error::invalid("grid pitch must be positive"));
            }
        }
        if !(self.shell_factor > 0.0) {
            return Err(Error::invalid("shell factor must be positive"));
        }
        Ok(())
    }

    /// Sites as used: rescaled onto the unit sphere of `norm` when asked.
    pub fn resolved_sites(&self, norm: &Norm) -> Result<Vec<Vec<f64>>> {
        if !self.on_unit_sphere {
            return Ok(self.sites.clone());
        }
        let out: Vec<Vec<f64>> = self
            .sites
            .iter()
            .map(|s| {
                let n = norm.eval(s);
                if n > 0.0 {
                    Ok(s.iter().map(|v| v / n).collect())
                } else {
                    Err(Error::ZeroVector)
                }
            })
            .collect::<Result<_>>()?;
        SiteConfiguration::new(out.clone())?;
        Ok(out)
    }
}

/// Box, guard margin and measurement grid at one scale.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub scale: f64,
    pub sites: SiteConfiguration,
    pub box_min: Vec<f64>,
    pub box_max: Vec<f64>,
    pub guard: f64,
    pub grid: GridSpec,
    pub points: Vec<Vec<f64>>,
    /// Strict Voronoi cell of each measured point.
    pub cells: Vec<Option<usize>>,
}

pub(crate) fn layout(plan: &ExperimentPlan, sites: &[Vec<f64>], norm: &Norm, scale: f64) -> Result<Layout> {
    let cfg = SiteConfiguration::scaled(sites.to_vec(), scale)?;
    let pts = cfg.points();
    let d = cfg.dim();
    let center: Vec<f64> = (0..d).map(|a| pts.iter().map(|p| p[a]).sum::<f64>() / pts.len() as f64).collect();
    // sites far outside the unit ball (e.g. after rescaling onto a small
    // norm's sphere) stretch the box with them
    let extent = sites.iter().map(|s| crate::geometry::euclid(s)).fold(1.0, f64::max);
    let half = 0.5 * plan.box_factor * scale * extent;
    let guard = plan.guard_factor * cfg.min_spacing();
    let inner = half - guard;
    let lattice = plan.model.is_lattice();
    let pitch = plan.grid_pitch.unwrap_or(if lattice { 1.0 } else { plan.box_factor * scale * extent / 64.0 });
    let (box_min, box_max): (Vec<f64>, Vec<f64>) = if lattice {
        (center.iter().map(|c| (c - half).floor()).collect(), center.iter().map(|c| (c + half).ceil()).collect())
    } else {
        (center.iter().map(|c| c - half).collect(), center.iter().map(|c| c + half).collect())
    };
    let lo: Vec<f64> =
        center.iter().map(|c| if lattice { (c - inner).ceil() } else { c - inner }).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + inner).collect();
    if !(inner > 0.0) || lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Err(Error::GuardMargin(guard));
    }
    let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| ((h - l) / pitch + 1e-9).floor() as usize + 1).collect();
    let grid = GridSpec::new(lo, pitch, shape)?;
    let points = grid.points();
    let cells = {
        let vc = VoronoiCells::from_points(pts, norm);
        points.iter().map(|z| vc.cell_of(z)).collect()
    };
    Ok(Layout { scale, sites: cfg, box_min, box_max, guard, grid, points, cells })
}

/// One replicate at one scale: bit `i` of `masks[p]` is set when measured
/// point `p` lies in the shrunken territory of type `i`.
pub(crate) struct Realization {
    pub masks: Vec<u64>,
    pub truncated: usize,
    pub snapshot: Option<TerritoryMap>,
}

const MAX_DOUBLINGS: u32 = 8;

pub(crate) fn realize(plan: &ExperimentPlan, lay: &Layout, rep: usize, keep: bool) -> Result<Realization> {
    let seed = derive_seed(plan.seed, &[lay.scale.to_bits(), rep as u64]);
    let k = lay.sites.len();
    let delta = plan.delta;
    let retain = delta > 0.0;
    let membership = |map: &TerritoryMap, at: usize| -> u64 {
        if !retain {
            return match map.winners[at] {
                Winner::Type(i) => 1 << i,
                _ => 0,
            };
        }
        let per = map.per_type.as_ref().expect("per-type times retained");
        let mut m = 0u64;
        for i in 0..k {
            if (0..k).all(|j| j == i || per[i][at] < per[j][at] - delta) {
                m |= 1 << i;
            }
        }
        m
    };
    match &plan.model {
        Model::Lattice(m) => {
            let bbox = LatticeBox::new(
                lay.box_min.iter().map(|v| *v as i64).collect(),
                lay.box_max.iter().map(|v| *v as i64).collect(),
            )?;
            let field = PassageTimeField::new(m.distribution, seed, bbox)?;
            let map = competing_territories(&field, &lay.sites, retain)?;
            let mut truncated = 0;
            let masks = lay
                .points
                .iter()
                .map(|z| {
                    let at = field.bbox.index(&psi_round(z)).expect("measured point inside the box");
                    if map.winners[at] == Winner::Unreached {
                        truncated += 1;
                    }
                    membership(&map, at)
                })
                .collect();
            Ok(Realization { masks, truncated, snapshot: keep.then_some(map) })
        }
        Model::Continuum(m) => {
            let window = Window::new(lay.box_min.clone(), lay.box_max.clone())?;
            let pts = lay.sites.points();
            let reach = lay
                .points
                .iter()
                .map(|z| pts.iter().map(|p| euclid_distance(p, z)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            let mut t_cap = 4.0 + m.horizon_per_unit * reach / m.law.mean() + delta;
            for attempt in 0..=MAX_DOUBLINGS {
                let events = simulate_outbursts(&window, t_cap, m.law, seed)?;
                let index = EventGraphIndex::new(&events);
                let map = continuum_territories(&index, &lay.sites, &lay.grid, retain)?;
                // winners are exact only where the first arrival (plus δ)
                // is within the horizon
                let beyond = map.times.iter().filter(|t| !(**t + delta <= t_cap)).count();
                if beyond == 0 || attempt == MAX_DOUBLINGS {
                    let masks = (0..lay.points.len())
                        .map(|p| if map.times[p] + delta <= t_cap { membership(&map, p) } else { 0 })
                        .collect();
                    return Ok(Realization { masks, truncated: beyond, snapshot: keep.then_some(map) });
                }
                t_cap *= 2.0;
            }
            unreachable!()
        }
    }
}

/// Counts from the first replicate at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub scale: f64,
    /// Sites after scaling, the sources of this map.
    pub sources: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
    pub ties: usize,
    pub unreached: usize,
    pub truncated: usize,
    /// Share of measured points with a strict cell that lie in the
    /// (shrunken) territory of that cell's type.
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub summary: SnapshotSummary,
    pub map: TerritoryMap,
}

/// One realisation per rung of the ladder, kept in full.
pub fn territory_snapshots(plan: &ExperimentPlan, norm: &Norm) -> Result<Vec<Snapshot>> {
    plan.validate()?;
    let sites = plan.resolved_sites(norm)?;
    let mut out = Vec::with_capacity(plan.ladder.len());
    for &scale in &plan.ladder {
        let lay = layout(plan, &sites, norm, scale)?;
        let real = realize(plan, &lay, 0, true)?;
        let map = real.snapshot.expect("snapshot kept");
        let (counts, ties, unreached) = map.counts();
        let (mut inside, mut total) = (0usize, 0usize);
        for (c, m) in lay.cells.iter().zip(&real.masks) {
            if let Some(i) = c {
                total += 1;
                if m >> i & 1 == 1 {
                    inside += 1;
                }
            }
        }
        out.push(Snapshot {
            summary: SnapshotSummary {
                scale,
                sources: lay.sites.points(),
                counts,
                ties,
                unreached,
                truncated: real.truncated,
                agreement: inside as f64 / total.max(1) as f64,
            },
            map,
        });
    }
    Ok(out)
}

/// Trend of a statistic over the scale ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub values: Vec<f64>,
    /// Spearman rank correlation with the scale; 0 for a constant curve.
    pub spearman: f64,
    /// Every consecutive step is `>= 0`.
    pub non_decreasing: bool,
    /// Every consecutive drop is within 3 combined SE.
    pub within_noise: bool,
}

pub fn trend(scales: &[f64], values: &[MeanSe]) -> TrendCheck {
    let v: Vec<f64> = values.iter().map(|m| m.mean).collect();
    let rho = spearman(scales, &v);
    let steps = values.windows(2);
    TrendCheck {
        spearman: if rho.is_nan() { 0.0 } else { rho },
        non_decreasing: v.windows(2).all(|w| w[1] >= w[0]),
        within_noise: steps.clone().all(|w| w[0].mean - w[1].mean <= 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt()),
        values: v,
    }
}
