use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::norm::Model;
use crate::stats::{proportion, MeanSe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub alpha: f64,
    /// `P̂(T(−x, αx) − T(0, αx) ≥ (1 − ε) N(x))`.
    pub probability: MeanSe,
    pub pass: bool,
    /// `Ê(T(−x, αx) − T(0, αx)) / N(x)`.
    pub mean_ratio: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineReport {
    pub model: Model,
    pub x: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub norm_x: f64,
    pub points: Vec<LinePoint>,
    /// Share of the grid whose probability reaches `1 − ε`.
    pub passing_fraction: f64,
    /// Comparisons of `T(−x, αx) − T(0, αx)` against `T(−x, 0)`.
    pub bound_checks: usize,
    pub bound_violations: usize,
    pub truncated: usize,
}

impl LineReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Competition between sources `−x` and `0` for the points `αx`, `α` on a
/// uniform grid of `[0, λ]`.
#[allow(clippy::too_many_arguments)]
pub fn line_competition_experiment(
    model: &Model,
    x: &[f64],
    lambda: f64,
    epsilon: f64,
    n_reps: usize,
    grid_points: usize,
    norm_x: Option<f64>,
    seed: u64,
) -> Result<LineReport> {
    let norm_x = norm_x.ok_or_else(|| Error::invalid("N(x) is unavailable"))?;
    if !(norm_x > 0.0) {
        return Err(Error::invalid("N(x) must be positive"));
    }
    if x.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: x.len() });
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    if !(lambda > 0.0) || !(epsilon > 0.0 && epsilon < 1.0) || grid_points < 2 || n_reps == 0 {
        return Err(Error::invalid("need λ > 0, ε in (0, 1), at least two grid points and one replicate"));
    }
    let alphas: Vec<f64> = (0..grid_points).map(|i| lambda * i as f64 / (grid_points - 1) as f64).collect();
    let minus_x: Vec<f64> = x.iter().map(|v| -v).collect();
    let origin = vec![0.0; x.len()];
    let mut targets: Vec<Vec<f64>> = alphas.iter().map(|a| x.iter().map(|v| a * v).collect()).collect();
    targets.push(origin.clone());
    let na = alphas.len();
    // per replicate: differences at every α and T(−x, 0)
    let rows: Vec<(Vec<f64>, f64)> = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let t = model.times_among(derive_seed(seed, &[r as u64]), &[minus_x.clone(), origin.clone()], &targets)?;
            let diffs = (0..na).map(|j| t[0][j] - t[1][j]).collect();
            Ok((diffs, t[0][na]))
        })
        .collect::<Result<_>>()?;
    let level = (1.0 - epsilon) * norm_x;
    let mut points = Vec::with_capacity(na);
    let (mut checks, mut violations, mut truncated) = (0, 0, 0);
    for (j, &alpha) in alphas.iter().enumerate() {
        let mut hits = 0;
        let mut ratios = Vec::with_capacity(n_reps);
        for (diffs, bound) in &rows {
            let d = diffs[j];
            if !d.is_finite() || !bound.is_finite() {
                truncated += 1;
                continue;
            }
            checks += 1;
            if d > *bound {
                violations += 1;
            }
            if d >= level {
                hits += 1;
            }
            ratios.push(d / norm_x);
        }
        // truncated replicates count as failures
        let probability = proportion(hits, n_reps);
        points.push(LinePoint { alpha, pass: probability.mean >= 1.0 - epsilon, probability, mean_ratio: MeanSe::of(&ratios) });
    }
    let passing_fraction = points.iter().filter(|p| p.pass).count() as f64 / na as f64;
    Ok(LineReport {
        model: model.clone(),
        x: x.to_vec(),
        lambda,
        epsilon,
        n_reps,
        seed,
        norm_x,
        points,
        passing_fraction,
        bound_checks: checks,
        bound_violations: violations,
        truncated,
    })
}
