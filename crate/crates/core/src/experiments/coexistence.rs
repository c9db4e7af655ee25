use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{layout, realize, trend, ExperimentPlan, TrendCheck};
use crate::error::{Error, Result};
use crate::geometry::{coexistence_geometry_check, euclid, CoexistenceGeometry, Norm, SiteConfiguration};
use crate::stats::{proportion, wilson_interval, MeanSe};

/// Shell radius per unit scale: a type "reaches far" when it holds a point
/// of its own cell at norm distance `≥ ρ · R · shell_factor` from its source.
pub const DEFAULT_SHELL_RHO: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceRung {
    pub scale: f64,
    pub guard_margin: f64,
    pub shell_radius: f64,
    /// Measured shell points per type.
    pub shell_points: Vec<usize>,
    pub coexistence: MeanSe,
    pub wilson: (f64, f64),
    /// Per type, fraction of replicates reaching its shell.
    pub per_type: Vec<MeanSe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceReport {
    pub plan: ExperimentPlan,
    pub norm: Norm,
    pub sites: Vec<Vec<f64>>,
    pub geometry: Option<CoexistenceGeometry>,
    pub rho: f64,
    pub rungs: Vec<CoexistenceRung>,
    pub trend: TrendCheck,
}

impl CoexistenceReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn in_shell(z: &[f64], source: &[f64], norm: &Norm, radius: f64) -> bool {
    norm.distance(z, source) >= radius
}

/// Finite-window stand-in for coexistence: every type holds at least one
/// measured point of its own cell lying in the shell.
pub fn coexistence_proxy(
    points: &[Vec<f64>],
    cells: &[Option<usize>],
    masks: &[u64],
    sources: &[Vec<f64>],
    norm: &Norm,
    shell_radius: f64,
) -> Vec<bool> {
    let mut reached = vec![false; sources.len()];
    for (p, z) in points.iter().enumerate() {
        if let Some(i) = cells[p] {
            if !reached[i] && masks[p] >> i & 1 == 1 && in_shell(z, &sources[i], norm, shell_radius) {
                reached[i] = true;
            }
        }
    }
    reached
}

/// Estimated coexistence probability over the scale ladder. Lattice sites
/// must pass the segment criterion under `norm`; continuum sites must lie on
/// the Euclidean unit sphere.
pub fn coexistence_experiment(plan: &ExperimentPlan, norm: &Norm) -> Result<CoexistenceReport> {
    plan.validate()?;
    let mut plan_used = plan.clone();
    plan_used.delta = 0.0;
    let (sites, geometry) = if plan.model.is_lattice() {
        let sites = plan.resolved_sites(norm)?;
        let g = coexistence_geometry_check(&SiteConfiguration::new(sites.clone())?, norm)?;
        if let Some(f) = g.first_failure() {
            return Err(Error::FlatSegment(f.i, f.j));
        }
        (sites, Some(g))
    } else {
        for (i, s) in plan.sites.iter().enumerate() {
            let v = euclid(s);
            if (v - 1.0).abs() > 1e-6 {
                return Err(Error::NotOnUnitSphere { site: i, value: v });
            }
        }
        (plan.sites.clone(), None)
    };
    let k = sites.len();
    let mut rungs = Vec::with_capacity(plan.ladder.len());
    for &scale in &plan.ladder {
        let lay = layout(&plan_used, &sites, norm, scale)?;
        let sources = lay.sites.points();
        let shell_radius = DEFAULT_SHELL_RHO * scale * plan.shell_factor;
        let shell_points: Vec<usize> = (0..k)
            .map(|i| {
                (0..lay.points.len())
                    .filter(|&p| lay.cells[p] == Some(i) && in_shell(&lay.points[p], &sources[i], norm, shell_radius))
                    .count()
            })
            .collect();
        if shell_points.contains(&0) {
            return Err(Error::GuardMargin(lay.guard));
        }
        let reached: Vec<Vec<bool>> = (0..plan.n_reps)
            .into_par_iter()
            .map(|r| {
                let real = realize(&plan_used, &lay, r, false)?;
                Ok(coexistence_proxy(&lay.points, &lay.cells, &real.masks, &sources, norm, shell_radius))
            })
            .collect::<Result<_>>()?;
        let hits = reached.iter().filter(|r| r.iter().all(|b| *b)).count();
        let per_type = (0..k).map(|i| proportion(reached.iter().filter(|r| r[i]).count(), plan.n_reps)).collect();
        rungs.push(CoexistenceRung {
            scale,
            guard_margin: lay.guard,
            shell_radius,
            shell_points,
            coexistence: proportion(hits, plan.n_reps),
            wilson: wilson_interval(hits, plan.n_reps, 1.96),
            per_type,
        });
    }
    let trend = trend(&plan.ladder, &rungs.iter().map(|r| r.coexistence).collect::<Vec<_>>());
    Ok(CoexistenceReport { plan: plan.clone(), norm: norm.clone(), sites, geometry, rho: DEFAULT_SHELL_RHO, rungs, trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::realize;
    use crate::lattice::EdgeWeightDistribution;
    use crate::norm::Model;

    fn plan(dist: EdgeWeightDistribution, sites: Vec<Vec<f64>>) -> ExperimentPlan {
        ExperimentPlan::new(Model::lattice(2, dist), sites, vec![6.0, 10.0], 4, 0.2, 2)
    }

    #[test]
    fn constant_weights_always_coexist() {
        let p = plan(EdgeWeightDistribution::Constant { value: 1.0 }, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        let rep = coexistence_experiment(&p, &Norm::L1).unwrap();
        assert!(rep.rungs.iter().all(|r| r.coexistence.mean == 1.0));
        assert!(rep.trend.non_decreasing);
    }

    #[test]
    fn flat_face_rejected() {
        let p = plan(EdgeWeightDistribution::Constant { value: 1.0 }, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(coexistence_experiment(&p, &Norm::L1), Err(Error::FlatSegment(0, 1))));
    }

    #[test]
    fn continuum_needs_unit_sites() {
        let p = ExperimentPlan::new(
            Model::continuum(2, crate::continuum::RadiusLaw::Constant { radius: 1.0 }),
            vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
            vec![4.0],
            1,
            0.2,
            0,
        );
        assert!(matches!(coexistence_experiment(&p, &Norm::L2), Err(Error::NotOnUnitSphere { site: 0, .. })));
    }

    #[test]
    fn smaller_shell_never_hurts() {
        let p = plan(EdgeWeightDistribution::Exponential { rate: 1.0 }, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        let lay = layout(&p, &p.sites, &Norm::L1, 10.0).unwrap();
        let src = lay.sites.points();
        for r in 0..6 {
            let m = realize(&p, &lay, r, false).unwrap().masks;
            let mut prev = vec![false; 2];
            for f in [1.4, 1.2, 1.0, 0.6, 0.2] {
                let now = coexistence_proxy(&lay.points, &lay.cells, &m, &src, &Norm::L1, f * 10.0);
                assert!(prev.iter().zip(&now).all(|(a, b)| !a || *b));
                prev = now;
            }
        }
    }
}
