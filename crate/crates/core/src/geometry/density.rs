use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityEstimator {
    /// Points of `pitch · Z^d` inside each ball.
    Grid { pitch: f64 },
    /// `samples` uniform points per ball.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Grid,
    MonteCarlo,
}

/// `|C ∩ D ∩ B_R| / |D ∩ B_R|` over a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub radii: Vec<f64>,
    /// `None` where `D ∩ B_R` carried no sampled mass.
    pub ratios: Vec<Option<f64>>,
    pub stderr: Vec<Option<f64>>,
    /// Sample points of `D` inside each ball.
    pub samples: Vec<usize>,
    pub lower_estimate: f64,
    pub upper_estimate: f64,
    pub estimator: EstimatorKind,
    pub pitch: Option<f64>,
    pub tail_fraction: f64,
}

impl DensityReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "radius,ratio,stderr,samples")?;
        for i in 0..self.radii.len() {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
            writeln!(w, "{},{},{},{}", self.radii[i], fmt(self.ratios[i]), fmt(self.stderr[i]), self.samples[i])?;
        }
        Ok(())
    }
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

/// Relative density of `c` with respect to `d` estimated on balls centred at
/// the origin. Lower and upper estimates are the min and max of the defined
/// ratios over the last `tail_fraction` of the radii.
pub fn relative_density(
    c: &(dyn Fn(&[f64]) -> bool + Sync),
    d: &(dyn Fn(&[f64]) -> bool + Sync),
    dim: usize,
    radii: &[f64],
    estimator: DensityEstimator,
    tail_fraction: f64,
) -> Result<DensityReport> {
    if radii.is_empty() {
        return Err(Error::invalid("no radii"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::invalid("radii must be positive and strictly increasing"));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::invalid("tail fraction must lie in (0, 1]"));
    }
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let (counts, pitch): (Vec<(usize, usize)>, Option<f64>) = match estimator {
        DensityEstimator::Grid { pitch } => {
            if !(pitch > 0.0) {
                return Err(Error::invalid("grid pitch must be positive"));
            }
            (grid_counts(c, d, dim, radii, pitch), Some(pitch))
        }
        DensityEstimator::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("need at least one sample"));
            }
            let counts = radii
                .par_iter()
                .enumerate()
                .map(|(k, &r)| mc_counts(c, d, dim, r, samples, derive_seed(seed, &[k as u64])))
                .collect();
            (counts, None)
        }
    };
    let mut ratios = Vec::with_capacity(radii.len());
    let mut stderr = Vec::with_capacity(radii.len());
    let mut samples = Vec::with_capacity(radii.len());
    for &(in_both, in_d) in &counts {
        samples.push(in_d);
        if in_d == 0 {
            ratios.push(None);
            stderr.push(None);
        } else {
            let p = in_both as f64 / in_d as f64;
            ratios.push(Some(p));
            stderr.push(Some(match estimator {
                DensityEstimator::Grid { .. } => 0.0,
                DensityEstimator::MonteCarlo { .. } => (p * (1.0 - p) / in_d as f64).sqrt(),
            }));
        }
    }
    if ratios.iter().all(Option::is_none) {
        return Err(Error::UndefinedDensity);
    }
    let tail_len = ((radii.len() as f64 * tail_fraction).ceil() as usize).clamp(1, radii.len());
    let tail: Vec<f64> = ratios[radii.len() - tail_len..].iter().flatten().copied().collect();
    let (lower_estimate, upper_estimate) = if tail.is_empty() {
        let all: Vec<f64> = ratios.iter().flatten().copied().collect();
        let last = *all.last().expect("at least one defined ratio");
        (last, last)
    } else {
        (
            tail.iter().copied().fold(f64::INFINITY, f64::min),
            tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(DensityReport {
        radii: radii.to_vec(),
        ratios,
        stderr,
        samples,
        lower_estimate,
        upper_estimate,
        estimator: match estimator {
            DensityEstimator::Grid { .. } => EstimatorKind::Grid,
            DensityEstimator::MonteCarlo { .. } => EstimatorKind::MonteCarlo,
        },
        pitch,
        tail_fraction,
    })
}

fn grid_counts(
    c: &(dyn Fn(&[f64]) -> bool + Sync),
    d: &(dyn Fn(&[f64]) -> bool + Sync),
    dim: usize,
    radii: &[f64],
    pitch: f64,
) -> Vec<(usize, usize)> {
    let r_max = *radii.last().unwrap();
    let n = (r_max / pitch).floor() as i64;
    let side = (2 * n + 1) as usize;
    // split the first axis across workers; bins are merged in index order
    let bins: Vec<Vec<(usize, usize)>> = (0..side)
        .into_par_iter()
        .map(|first| {
            let mut bins = vec![(0usize, 0usize); radii.len()];
            let mut idx = vec![-n; dim];
            idx[0] = first as i64 - n;
            let mut z = vec![0.0; dim];
            loop {
                for a in 0..dim {
                    z[a] = idx[a] as f64 * pitch;
                }
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r <= r_max && d(&z) {
                    let bin = radii.partition_point(|&b| b < r);
                    bins[bin].1 += 1;
                    if c(&z) {
                        bins[bin].0 += 1;
                    }
                }
                let mut a = dim - 1;
                loop {
                    if a == 0 {
                        return bins;
                    }
                    idx[a] += 1;
                    if idx[a] <= n {
                        break;
                    }
                    idx[a] = -n;
                    a -= 1;
                }
            }
        })
        .collect();
    let mut total = vec![(0usize, 0usize); radii.len()];
    for b in bins {
        for (t, x) in total.iter_mut().zip(b) {
            t.0 += x.0;
            t.1 += x.1;
        }
    }
    let mut acc = (0, 0);
    total
        .into_iter()
        .map(|(a, b)| {
            acc.0 += a;
            acc.1 += b;
            acc
        })
        .collect()
}

fn mc_counts(
    c: &(dyn Fn(&[f64]) -> bool + Sync),
    d: &(dyn Fn(&[f64]) -> bool + Sync),
    dim: usize,
    radius: f64,
    samples: usize,
    seed: u64,
) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(0.0f64, 1.0).expect("valid range");
    let mut z = vec![0.0; dim];
    let (mut both, mut in_d) = (0, 0);
    for _ in 0..samples {
        // Gaussian direction, radius U^{1/d}
        let mut norm2: f64 = 0.0;
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
            norm2 += *v * *v;
        }
        let scale = radius * unif.sample(&mut rng).powf(1.0 / dim as f64) / norm2.sqrt();
        for v in z.iter_mut() {
            *v *= scale;
        }
        if d(&z) {
            in_d += 1;
            if c(&z) {
                both += 1;
            }
        }
    }
    (both, in_d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_space_has_density_one() {
        let all = |_: &[f64]| true;
        for est in [
            DensityEstimator::Grid { pitch: 0.5 },
            DensityEstimator::MonteCarlo { samples: 1000, seed: 1 },
        ] {
            let r = relative_density(&all, &all, 2, &[1.0, 2.0, 4.0], est, 0.25).unwrap();
            assert!(r.ratios.iter().all(|x| *x == Some(1.0)));
            assert_eq!(r.lower_estimate, 1.0);
            assert_eq!(r.upper_estimate, 1.0);
        }
    }

    #[test]
    fn half_space_monte_carlo() {
        let half = |z: &[f64]| z[0] > 0.0;
        let all = |_: &[f64]| true;
        let r = relative_density(
            &half,
            &all,
            2,
            &[10.0, 20.0],
            DensityEstimator::MonteCarlo { samples: 1_000_000, seed: 9 },
            0.5,
        )
        .unwrap();
        for (p, se) in r.ratios.iter().zip(&r.stderr) {
            let (p, se) = (p.unwrap(), se.unwrap());
            assert!((p - 0.5).abs() <= 3.0 * se, "{p} ± {se}");
        }
    }

    #[test]
    fn undefined_where_reference_is_empty() {
        let far = |z: &[f64]| z[0] > 5.0;
        let all = |_: &[f64]| true;
        let r = relative_density(&all, &far, 2, &[1.0, 10.0], DensityEstimator::Grid { pitch: 0.25 }, 0.5).unwrap();
        assert_eq!(r.ratios[0], None);
        assert_eq!(r.ratios[1], Some(1.0));
        let none = |_: &[f64]| false;
        assert!(matches!(
            relative_density(&all, &none, 2, &[1.0], DensityEstimator::Grid { pitch: 0.25 }, 0.5),
            Err(Error::UndefinedDensity)
        ));
    }

    #[test]
    fn rejects_bad_radii() {
        let all = |_: &[f64]| true;
        let g = DensityEstimator::Grid { pitch: 1.0 };
        assert!(relative_density(&all, &all, 2, &[2.0, 1.0], g, 0.25).is_err());
        assert!(relative_density(&all, &all, 2, &[], g, 0.25).is_err());
    }

    #[test]
    fn grid_counts_match_lattice_point_count() {
        // lattice points of Z^2 in the closed disc of radius 2: 13
        let all = |_: &[f64]| true;
        let r = relative_density(&all, &all, 2, &[2.0], DensityEstimator::Grid { pitch: 1.0 }, 1.0).unwrap();
        assert_eq!(r.samples, vec![13]);
        let r3 = relative_density(&all, &all, 3, &[1.0], DensityEstimator::Grid { pitch: 1.0 }, 1.0).unwrap();
        assert_eq!(r3.samples, vec![7]);
    }
}
