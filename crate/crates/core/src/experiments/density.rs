use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{layout, realize, trend, ExperimentPlan, Layout, TrendCheck};
use crate::error::{Error, Result};
use crate::geometry::{
    coexistence_geometry_check, relative_density, DensityEstimator, Norm, SiteConfiguration, VoronoiCells,
};
use crate::stats::{proportion, quantile, wilson_interval, MeanSe};
use crate::territory::TerritoryMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRung {
    pub site: usize,
    pub in_index_set: bool,
    /// Measured points in the strict Voronoi cell.
    pub cell_points: usize,
    /// Facet (a): share of the cell where `P̂(z ∈ D_i) ≥ 1 − ε`, with the
    /// grid-sampling SE.
    pub pointwise_density: Option<MeanSe>,
    /// Cell points whose `P̂` lies within 2 SE of `1 − ε`.
    pub fragile_points: usize,
    /// Facet (b): per-replicate share of the cell covered by `D_i`.
    pub realization_density: Option<MeanSe>,
    /// Minimum, 10 % quantile and median of the per-replicate share.
    pub realization_quantiles: Option<[f64; 3]>,
    /// Fraction of replicates with share `≥ 1 − ε`.
    pub exceed_fraction: Option<MeanSe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungReport {
    pub scale: f64,
    pub guard_margin: f64,
    pub box_min: Vec<f64>,
    pub box_max: Vec<f64>,
    pub grid_points: usize,
    pub sites: Vec<SiteRung>,
    /// Fraction of replicates in which every site of the index set exceeds
    /// `1 − ε`.
    pub all_exceed: MeanSe,
    pub all_exceed_wilson: (f64, f64),
    /// Measured points not resolved within the horizon, over all replicates.
    pub truncated_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub plan: ExperimentPlan,
    pub norm: Norm,
    pub sites: Vec<Vec<f64>>,
    /// Sites whose cell has positive density.
    pub index_set: Vec<usize>,
    pub rungs: Vec<RungReport>,
    /// Facet (a) over the ladder, per site of the index set.
    pub pointwise_trend: Vec<TrendCheck>,
    /// `all_exceed` over the ladder.
    pub realization_trend: TrendCheck,
    pub notes: Vec<String>,
}

/// A report and the first replicate's territory map at every scale.
#[derive(Debug, Clone)]
pub struct DensityRun {
    pub report: TheoremReport,
    pub snapshots: Vec<(f64, TerritoryMap)>,
}

const INDEX_THRESHOLD: f64 = 1e-3;

/// Sites whose strict cell has positive density: the segment criterion for
/// sites on the unit sphere, otherwise (and for sites it cannot certify) a
/// Monte Carlo volume fraction on large balls above `10⁻³`.
fn index_set(sites: &[Vec<f64>], norm: &Norm, seed: u64) -> Result<Vec<usize>> {
    let cfg = SiteConfiguration::new(sites.to_vec())?;
    let certified = match coexistence_geometry_check(&cfg, norm) {
        Ok(g) => g.per_site,
        Err(_) => vec![false; sites.len()],
    };
    let scale = sites.iter().map(|s| norm.eval(s)).fold(0.0, f64::max).max(1e-9);
    let vc = VoronoiCells::from_points(sites.to_vec(), norm);
    let mut out = Vec::new();
    for i in 0..sites.len() {
        if certified[i] {
            out.push(i);
            continue;
        }
        let c = |z: &[f64]| vc.cell_of(z) == Some(i);
        let all = |_: &[f64]| true;
        let radii = [25.0 * scale, 50.0 * scale, 100.0 * scale];
        let rep = relative_density(&c, &all, cfg.dim(), &radii, DensityEstimator::MonteCarlo { samples: 20_000, seed }, 1.0)?;
        if rep.lower_estimate > INDEX_THRESHOLD {
            out.push(i);
        }
    }
    Ok(out)
}

struct RungData {
    report: RungReport,
    snapshot: TerritoryMap,
}

fn run_rung(plan: &ExperimentPlan, lay: &Layout, index: &[usize]) -> Result<RungData> {
    let k = lay.sites.len();
    let reps: Vec<_> = (0..plan.n_reps)
        .into_par_iter()
        .map(|r| realize(plan, lay, r, r == 0))
        .collect::<Result<Vec<_>>>()?;
    let n = plan.n_reps as f64;
    let level = 1.0 - plan.epsilon;
    let mut sites = Vec::with_capacity(k);
    let mut exceed_all = vec![true; plan.n_reps];
    for i in 0..k {
        let cell: Vec<usize> = (0..lay.points.len()).filter(|&p| lay.cells[p] == Some(i)).collect();
        let in_index_set = index.contains(&i);
        if cell.is_empty() {
            sites.push(SiteRung {
                site: i,
                in_index_set,
                cell_points: 0,
                pointwise_density: None,
                fragile_points: 0,
                realization_density: None,
                realization_quantiles: None,
                exceed_fraction: None,
            });
            continue;
        }
        let bit = 1u64 << i;
        let mut passing = 0;
        let mut fragile = 0;
        for &p in &cell {
            let hits = reps.iter().filter(|r| r.masks[p] & bit != 0).count() as f64;
            let ph = hits / n;
            if ph >= level {
                passing += 1;
            }
            if (ph - level).abs() <= 2.0 * (ph * (1.0 - ph) / n).sqrt() {
                fragile += 1;
            }
        }
        let shares: Vec<f64> = reps
            .iter()
            .map(|r| cell.iter().filter(|&&p| r.masks[p] & bit != 0).count() as f64 / cell.len() as f64)
            .collect();
        let exceed: Vec<bool> = shares.iter().map(|s| *s >= level).collect();
        if in_index_set {
            for (a, e) in exceed_all.iter_mut().zip(&exceed) {
                *a &= *e;
            }
        }
        sites.push(SiteRung {
            site: i,
            in_index_set,
            cell_points: cell.len(),
            pointwise_density: Some(proportion(passing, cell.len())),
            fragile_points: fragile,
            realization_density: Some(MeanSe::of(&shares)),
            realization_quantiles: Some([quantile(&shares, 0.0), quantile(&shares, 0.1), quantile(&shares, 0.5)]),
            exceed_fraction: Some(proportion(exceed.iter().filter(|e| **e).count(), exceed.len())),
        });
    }
    let hits = exceed_all.iter().filter(|a| **a).count();
    let truncated_points = reps.iter().map(|r| r.truncated).sum();
    let snapshot = reps.into_iter().next().and_then(|r| r.snapshot).expect("first replicate keeps its map");
    Ok(RungData {
        report: RungReport {
            scale: lay.scale,
            guard_margin: lay.guard,
            box_min: lay.box_min.clone(),
            box_max: lay.box_max.clone(),
            grid_points: lay.points.len(),
            sites,
            all_exceed: proportion(hits, plan.n_reps),
            all_exceed_wilson: wilson_interval(hits, plan.n_reps, 1.96),
            truncated_points,
        },
        snapshot,
    })
}

/// Relative density of the territories with respect to the Voronoi cells of
/// `norm` over the scale ladder, in both the pointwise-probability and the
/// per-replicate form.
pub fn density_experiment(plan: &ExperimentPlan, norm: &Norm) -> Result<DensityRun> {
    plan.validate()?;
    let sites = plan.resolved_sites(norm)?;
    let index = index_set(&sites, norm, plan.seed)?;
    if index.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let layouts = plan.ladder.iter().map(|&r| layout(plan, &sites, norm, r)).collect::<Result<Vec<_>>>()?;
    let mut rungs = Vec::with_capacity(layouts.len());
    let mut snapshots = Vec::with_capacity(layouts.len());
    for lay in &layouts {
        let data = run_rung(plan, lay, &index)?;
        rungs.push(data.report);
        snapshots.push((lay.scale, data.snapshot));
    }
    let pointwise_trend = index
        .iter()
        .map(|&i| {
            let v: Vec<MeanSe> = rungs
                .iter()
                .map(|r| r.sites[i].pointwise_density.unwrap_or(MeanSe { mean: 0.0, se: 0.0, n: 0 }))
                .collect();
            trend(&plan.ladder, &v)
        })
        .collect();
    let realization_trend = trend(&plan.ladder, &rungs.iter().map(|r| r.all_exceed).collect::<Vec<_>>());
    let mut notes = vec![
        "densities are box averages over the guarded measurement window; upper and lower density coincide there".into(),
    ];
    if rungs.iter().any(|r| r.truncated_points > 0) {
        notes.push("some measured points were not resolved within the delay horizon and count as outside every territory".into());
    }
    Ok(DensityRun {
        report: TheoremReport {
            plan: plan.clone(),
            norm: norm.clone(),
            sites,
            index_set: index,
            rungs,
            pointwise_trend,
            realization_trend,
            notes,
        },
        snapshots,
    })
}

impl TheoremReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Density-versus-scale table for one site.
    pub fn write_site_csv<W: Write>(&self, site: usize, mut w: W) -> Result<()> {
        if site >= self.sites.len() {
            return Err(Error::IndexOutOfRange { index: site, len: self.sites.len() });
        }
        writeln!(w, "radius,pointwise,pointwise_se,realization_mean,realization_se,exceed_fraction,cell_points,guard_margin")?;
        let opt = |m: Option<MeanSe>| m.map(|m| (m.mean.to_string(), m.se.to_string())).unwrap_or_default();
        for r in &self.rungs {
            let s = &r.sites[site];
            let (a, a_se) = opt(s.pointwise_density);
            let (b, b_se) = opt(s.realization_density);
            let (e, _) = opt(s.exceed_fraction);
            writeln!(w, "{},{a},{a_se},{b},{b_se},{e},{},{}", r.scale, s.cell_points, r.guard_margin)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EdgeWeightDistribution;
    use crate::norm::Model;

    fn plan(dist: EdgeWeightDistribution, ladder: Vec<f64>, reps: usize) -> ExperimentPlan {
        ExperimentPlan::new(Model::lattice(2, dist), vec![vec![-1.0, 0.0], vec![1.0, 0.0]], ladder, reps, 0.15, 5)
    }

    #[test]
    fn constant_weights_give_full_density() {
        let p = plan(EdgeWeightDistribution::Constant { value: 1.0 }, vec![4.0, 8.0], 3);
        let run = density_experiment(&p, &Norm::L1).unwrap();
        let rep = &run.report;
        assert_eq!(rep.index_set, vec![0, 1]);
        for r in &rep.rungs {
            for s in &r.sites {
                assert_eq!(s.pointwise_density.unwrap().mean, 1.0);
                assert_eq!(s.realization_density.unwrap().mean, 1.0);
            }
            assert_eq!(r.all_exceed.mean, 1.0);
        }
        assert_eq!(run.snapshots.len(), 2);
        let back = TheoremReport::from_json(&rep.to_json().unwrap()).unwrap();
        assert_eq!(&back, rep);
        let mut csv = Vec::new();
        rep.write_site_csv(1, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    }

    #[test]
    fn single_site_rejected() {
        let mut p = plan(EdgeWeightDistribution::Constant { value: 1.0 }, vec![4.0], 1);
        p.sites.truncate(1);
        assert!(matches!(density_experiment(&p, &Norm::L1), Err(Error::TooFewSites(1))));
    }

    #[test]
    fn larger_delta_never_grows_territories() {
        let mut p = plan(EdgeWeightDistribution::Exponential { rate: 1.0 }, vec![6.0], 4);
        let lay = layout(&p, &p.sites, &Norm::L1, 6.0).unwrap();
        let mut prev: Option<Vec<u64>> = None;
        for delta in [0.0, 0.5, 1.5, 4.0] {
            p.delta = delta;
            let m = realize(&p, &lay, 1, false).unwrap().masks;
            if let Some(q) = &prev {
                assert!(m.iter().zip(q).all(|(a, b)| a & !b == 0));
            }
            prev = Some(m);
        }
    }

    #[test]
    fn continuum_smoke() {
        use crate::continuum::RadiusLaw;
        let mut p = ExperimentPlan::new(
            Model::continuum(2, RadiusLaw::Constant { radius: 1.0 }),
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![3.0],
            2,
            0.2,
            1,
        );
        p.grid_pitch = Some(0.5);
        let run = density_experiment(&p, &Norm::L2).unwrap();
        let r = &run.report.rungs[0];
        assert_eq!(r.truncated_points, 0);
        for s in &r.sites {
            let d = s.realization_density.unwrap().mean;
            assert!((0.0..=1.0).contains(&d));
        }
    }
}
