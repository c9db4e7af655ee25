use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::euclid;
use crate::hash::derive_seed;
use crate::lattice::psi_round;
use crate::norm::Model;
use crate::stats::MeanSe;

/// Replicated passage times `T(0, k·s·u)`, `k = 1..=k_max`, one realisation
/// per replicate shared by all `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSample {
    pub direction: Vec<f64>,
    pub step: f64,
    pub k_max: usize,
    /// Query points `k·s·u` (rounded to the lattice for the lattice model).
    pub targets: Vec<Vec<f64>>,
    /// Euclidean length of each target, the ratio denominator.
    pub lengths: Vec<f64>,
    /// `times[k - 1][rep]`.
    pub times: Vec<Vec<f64>>,
    /// Mean and SE of `T / length` per `k`.
    pub ratios: Vec<MeanSe>,
    /// Tail estimate: per-replicate mean ratio at the two largest `k`.
    pub a_hat: MeanSe,
    /// `min_k mean(T(0, k s u)) / length_k`.
    pub gamma_hat: f64,
    /// Fraction of truncated replicates per `k`.
    pub truncated: Vec<f64>,
}

/// Truncated replicates tolerated at any distance.
pub const MAX_TRUNCATED: f64 = 0.01;

/// Sample the directional time constant along `u`.
pub fn directional_time_constant(
    model: &Model,
    u: &[f64],
    k_max: usize,
    step: f64,
    n_reps: usize,
    seed: u64,
) -> Result<DirectionalSample> {
    if k_max < 4 {
        return Err(Error::invalid("k_max must be at least 4"));
    }
    if n_reps < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("step must be positive"));
    }
    if u.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: u.len() });
    }
    let len = euclid(u);
    if len == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dir: Vec<f64> = u.iter().map(|v| v / len).collect();
    let targets: Vec<Vec<f64>> = (1..=k_max)
        .map(|k| {
            let p: Vec<f64> = dir.iter().map(|v| v * step * k as f64).collect();
            if model.is_lattice() {
                psi_round(&p).into_iter().map(|c| c as f64).collect()
            } else {
                p
            }
        })
        .collect();
    let lengths: Vec<f64> = targets.iter().map(|t| euclid(t)).collect();
    if lengths.iter().any(|l| *l == 0.0) {
        return Err(Error::invalid("step too small: a target rounds to the origin"));
    }
    let origin = vec![0.0; u.len()];
    let per_rep: Vec<Vec<f64>> = (0..n_reps)
        .into_par_iter()
        .map(|r| model.times_from(derive_seed(seed, &[r as u64]), &origin, &targets))
        .collect::<Result<_>>()?;
    let mut times = vec![Vec::with_capacity(n_reps); k_max];
    for row in &per_rep {
        for (k, t) in row.iter().enumerate() {
            times[k].push(*t);
        }
    }
    let mut truncated = Vec::with_capacity(k_max);
    let mut ratios = Vec::with_capacity(k_max);
    for (k, ts) in times.iter().enumerate() {
        let finite: Vec<f64> = ts.iter().filter(|t| t.is_finite()).map(|t| t / lengths[k]).collect();
        let frac = 1.0 - finite.len() as f64 / n_reps as f64;
        if frac > MAX_TRUNCATED {
            return Err(Error::Truncated { distance: lengths[k], fraction: frac });
        }
        truncated.push(frac);
        ratios.push(MeanSe::of(&finite));
    }
    let tail: Vec<f64> = per_rep
        .iter()
        .filter(|row| row[k_max - 1].is_finite() && row[k_max - 2].is_finite())
        .map(|row| 0.5 * (row[k_max - 1] / lengths[k_max - 1] + row[k_max - 2] / lengths[k_max - 2]))
        .collect();
    let a_hat = MeanSe::of(&tail);
    let gamma_hat = ratios.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
    Ok(DirectionalSample {
        direction: dir,
        step,
        k_max,
        targets,
        lengths,
        times,
        ratios,
        a_hat,
        gamma_hat,
        truncated,
    })
}

/// One subadditivity comparison `E X_{0,n} ≤ E X_{0,m} + E X_{0,n-m} + slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub m: usize,
    pub n: usize,
    /// Mean and SE of the per-replicate excess `X_{0,n} − X_{0,m} − X_{0,n−m}`.
    pub excess: MeanSe,
    /// Allowance for the lattice rounding of the three targets.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub k: usize,
    /// Mean and SE of the per-replicate increase of the ratio from `k` to `2k`.
    pub increase: MeanSe,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingmanReport {
    pub splits: Vec<SplitCheck>,
    pub monotone: Vec<MonotoneCheck>,
    pub gamma_hat: f64,
    pub a_hat: f64,
    pub subadditive: bool,
    pub non_increasing: bool,
}

/// Empirical subadditivity of the mean sequence (using stationarity,
/// `E X_{m,n} = E X_{0,n−m}`) over all splits `0 < m < n`, and the
/// non-increasing trend of the ratio curve from `k` to `2k`, each within
/// 3 SE of the paired per-replicate differences.
pub fn kingman_diagnostics(sample: &DirectionalSample, rounding_unit: f64) -> KingmanReport {
    let km = sample.k_max;
    let reps = sample.times[0].len();
    let mut splits = Vec::new();
    for n in 2..=km {
        for m in 1..=n / 2 {
            let excess: Vec<f64> = (0..reps)
                .map(|r| sample.times[n - 1][r] - sample.times[m - 1][r] - sample.times[n - m - 1][r])
                .filter(|v| v.is_finite())
                .collect();
            let excess = MeanSe::of(&excess);
            let gap: f64 = sample.targets[n - 1]
                .iter()
                .zip(&sample.targets[m - 1])
                .zip(&sample.targets[n - m - 1])
                .map(|((a, b), c)| (a - b - c).abs())
                .sum();
            let slack = rounding_unit * gap;
            let pass = excess.mean <= slack + 3.0 * excess.se;
            splits.push(SplitCheck { m, n, excess, slack, pass });
        }
    }
    // subadditivity gives E X_{0,2k} / 2k <= E X_{0,k} / k; adjacent k carry
    // no such guarantee
    let mut monotone = Vec::new();
    let mut k = 1;
    while 2 * k <= km {
        let (a, b) = (k - 1, 2 * k - 1);
        let inc: Vec<f64> = (0..reps)
            .map(|r| sample.times[b][r] / sample.lengths[b] - sample.times[a][r] / sample.lengths[a])
            .filter(|v| v.is_finite())
            .collect();
        let increase = MeanSe::of(&inc);
        let gap: f64 = sample.targets[b].iter().zip(&sample.targets[a]).map(|(x, y)| (x - 2.0 * y).abs()).sum();
        let slack = rounding_unit * gap / sample.lengths[b];
        let pass = increase.mean <= slack + 3.0 * increase.se;
        monotone.push(MonotoneCheck { k, increase, slack, pass });
        k *= 2;
    }
    KingmanReport {
        subadditive: splits.iter().all(|s| s.pass),
        non_increasing: monotone.iter().all(|m| m.pass),
        splits,
        monotone,
        gamma_hat: sample.gamma_hat,
        a_hat: sample.a_hat.mean,
    }
}
