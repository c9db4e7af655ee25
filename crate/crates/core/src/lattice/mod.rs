//! First-passage percolation on `Z^d` and k-type competition over a shared
//! weight field.

mod field;
mod search;
mod weights;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::SiteConfiguration;
use crate::territory::{GridSpec, TerritoryMap, Winner};
use crate::time::{to_time, UNREACHED};

pub use field::{psi_round, LatticeBox, PassageTimeField};
pub use search::{first_passage_time, first_passage_time_to, first_passage_times, TimeMap};
pub use weights::{EdgeWeightDistribution, PLANAR_ZERO_ATOM_THRESHOLD};

/// Maximum number of competing types in one pass.
pub const MAX_TYPES: usize = 64;

/// Territories of the sources `ψ(x_i)` (scaled sites of `cfg`).
pub fn competing_territories(
    field: &PassageTimeField,
    cfg: &SiteConfiguration,
    retain_per_type: bool,
) -> Result<TerritoryMap> {
    if cfg.dim() != field.dim() {
        return Err(Error::Dimension { expected: field.dim(), got: cfg.dim() });
    }
    let sources: Vec<Vec<i64>> = cfg.points().iter().map(|p| psi_round(p)).collect();
    competing_territories_from(field, &sources, retain_per_type)
}

/// Territories of explicit lattice sources. Every box site gets the index of
/// the unique source reaching it first, `Tie` when several do, or
/// `Unreached`.
pub fn competing_territories_from(
    field: &PassageTimeField,
    sources: &[Vec<i64>],
    retain_per_type: bool,
) -> Result<TerritoryMap> {
    let k = sources.len();
    if k < 2 {
        return Err(Error::TooFewSites(k));
    }
    if k > MAX_TYPES {
        return Err(Error::invalid(format!("at most {MAX_TYPES} types are supported, got {k}")));
    }
    let idx = sources.iter().map(|s| search::check_inside(&field.bbox, s)).collect::<Result<Vec<_>>>()?;
    for i in 0..k {
        for j in i + 1..k {
            if idx[i] == idx[j] {
                return Err(Error::CollapsedSources(i, j));
            }
        }
    }
    let (dist, mask) = search::multi_source(field, &idx);
    let winners = dist
        .iter()
        .zip(&mask)
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
            sources
                .par_iter()
                .map(|s| first_passage_times(field, s).map(|m| m.times()))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(TerritoryMap {
        grid: lattice_grid(&field.bbox),
        k,
        seed: field.seed,
        winners,
        times: dist.into_iter().map(to_time).collect(),
        per_type,
    })
}

/// The box sites as an evaluation grid of pitch 1.
pub fn lattice_grid(b: &LatticeBox) -> GridSpec {
    GridSpec { origin: b.min.iter().map(|v| *v as f64).collect(), pitch: 1.0, shape: b.shape() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(half: i64) -> PassageTimeField {
        PassageTimeField::new(
            EdgeWeightDistribution::Constant { value: 1.0 },
            0,
            LatticeBox::centered(&[0, 0], half).unwrap(),
        )
        .unwrap()
    }

    fn l1(a: &[i64], b: &[i64]) -> i64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    #[test]
    fn constant_weights_give_l1_distance() {
        let f = constant(5);
        assert_eq!(first_passage_time(&f, &[0, 0], &[2, 3]).unwrap(), 5.0);
        assert_eq!(first_passage_time(&f, &[1, 1], &[1, 1]).unwrap(), 0.0);
        let m = first_passage_times(&f, &[-1, 2]).unwrap();
        for i in 0..f.bbox.len() {
            let x = f.bbox.coords(i);
            assert_eq!(m.get(&x).unwrap(), l1(&x, &[-1, 2]) as f64);
        }
    }

    #[test]
    fn outside_box_is_an_error() {
        let f = constant(2);
        assert!(matches!(first_passage_time(&f, &[0, 0], &[3, 0]), Err(Error::OutsideBox(_))));
        assert!(first_passage_times(&f, &[0, 9]).is_err());
    }

    #[test]
    fn constant_weight_territories_are_l1_half_planes() {
        let f = constant(10);
        let map = competing_territories_from(&f, &[vec![-2, 0], vec![2, 0]], true).unwrap();
        let per = map.per_type.as_ref().unwrap();
        for i in 0..f.bbox.len() {
            let x = f.bbox.coords(i);
            let (a, b) = (l1(&x, &[-2, 0]), l1(&x, &[2, 0]));
            let expect = match a.cmp(&b) {
                std::cmp::Ordering::Less => Winner::Type(0),
                std::cmp::Ordering::Greater => Winner::Type(1),
                std::cmp::Ordering::Equal => Winner::Tie,
            };
            assert_eq!(map.winners[i], expect, "{x:?}");
            assert_eq!(map.times[i], a.min(b) as f64);
            assert_eq!(per[0][i], a as f64);
        }
    }

    #[test]
    fn needs_two_distinct_sources() {
        let f = constant(3);
        assert!(matches!(competing_territories_from(&f, &[vec![0, 0]], false), Err(Error::TooFewSites(1))));
        assert!(matches!(
            competing_territories_from(&f, &[vec![0, 0], vec![1, 0], vec![0, 0]], false),
            Err(Error::CollapsedSources(0, 2))
        ));
        let cfg = SiteConfiguration::new(vec![vec![0.4, 0.0], vec![0.2, 0.0]]).unwrap();
        assert!(matches!(competing_territories(&f, &cfg, false), Err(Error::CollapsedSources(0, 1))));
        let far = SiteConfiguration::scaled(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], 10.0).unwrap();
        assert!(matches!(competing_territories(&f, &far, false), Err(Error::OutsideBox(_))));
    }

    #[test]
    fn zero_weights_propagate_ties() {
        // all-zero weights: every site, the sources included, is reached at
        // time 0 by both types
        let f = PassageTimeField::new(
            EdgeWeightDistribution::AtomMixture { p_zero: 0.999_999_999, rate: 1.0 },
            3,
            LatticeBox::centered(&[0, 0], 4).unwrap(),
        )
        .unwrap();
        let map = competing_territories_from(&f, &[vec![-3, 0], vec![3, 0]], false).unwrap();
        assert!(map.times.iter().all(|t| *t == 0.0));
        assert!(map.winners.iter().all(|w| *w == Winner::Tie));
    }

    #[test]
    fn exponential_has_no_ties() {
        let f = PassageTimeField::new(
            EdgeWeightDistribution::Exponential { rate: 1.0 },
            11,
            LatticeBox::centered(&[0, 0], 20).unwrap(),
        )
        .unwrap();
        let map = competing_territories_from(&f, &[vec![-5, 0], vec![5, 0], vec![0, 7]], false).unwrap();
        let (per, ties, un) = map.counts();
        assert_eq!((ties, un), (0, 0));
        assert!(per.iter().all(|&c| c > 0));
    }
}
