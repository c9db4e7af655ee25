use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hash::derive_seed;
use crate::norm::{directional_time_constant, kingman_diagnostics, lambda_estimate, LambdaEstimate, Model};
use crate::stats::ks_two_sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Sample size of each side of a KS comparison, and of the Λ estimate.
    pub n_samples: usize,
    /// Ordered triples checked for the exact properties.
    pub tuples: usize,
    /// Points per realisation; all their ordered triples are checked.
    pub points_per_realization: usize,
    /// Side of the cube the tuple points are drawn from.
    pub region: f64,
    pub shifts: usize,
    pub rotations: usize,
    /// Length of the probe displacement in the KS comparisons.
    pub probe_length: f64,
    pub ks_level: f64,
    /// Share of KS comparisons that must exceed `ks_level`.
    pub ks_pass_share: f64,
    pub lambda_pitch: f64,
    pub convergence_k_max: usize,
    pub convergence_reps: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            n_samples: 200,
            tuples: 10_000,
            points_per_realization: 24,
            region: 16.0,
            shifts: 20,
            rotations: 20,
            probe_length: 8.0,
            ks_level: 0.01,
            ks_pass_share: 0.9,
            lambda_pitch: 0.25,
            convergence_k_max: 8,
            convergence_reps: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditItem {
    pub name: String,
    pub pass: bool,
    pub checked: usize,
    pub violations: usize,
    pub threshold: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsFamily {
    pub kind: String,
    /// Displacement applied to each comparison sample (shift or rotated probe).
    pub offsets: Vec<Vec<f64>>,
    pub p_values: Vec<f64>,
    pub above: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model: Model,
    pub seed: u64,
    pub options: AuditOptions,
    pub items: Vec<AuditItem>,
    pub ks: Vec<KsFamily>,
    pub lambda: LambdaEstimate,
    pub pass: bool,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn item(&self, name: &str) -> Option<&AuditItem> {
        self.items.iter().find(|i| i.name == name)
    }

    /// Share of all KS comparisons above the level.
    pub fn ks_share(&self) -> f64 {
        let total: usize = self.ks.iter().map(|f| f.p_values.len()).sum();
        let above: usize = self.ks.iter().map(|f| f.above).sum();
        above as f64 / total.max(1) as f64
    }
}

fn item(name: &str, checked: usize, violations: usize, pass: bool, threshold: &str, detail: String) -> AuditItem {
    AuditItem { name: name.into(), pass, checked, violations, threshold: threshold.into(), detail }
}

/// Exact and statistical checks of the assumptions on `T`: nonnegativity,
/// triangle inequality, symmetry (lattice), finite `Λ`, stationarity under
/// translations, isotropy under rotations (continuum) and convergence of the
/// directional ratio.
pub fn assumption_audit(model: &Model, opts: &AuditOptions, seed: u64) -> Result<AuditReport> {
    let d = model.dim();
    let lattice = model.is_lattice();
    let np = opts.points_per_realization.max(3);
    let per_real = np * (np - 1) * (np - 2);
    // enough realisations that values, pairs and triples each reach `tuples`
    let n_real = opts.tuples.div_ceil(np * (np - 1) / 2).max(opts.tuples.div_ceil(per_real)).max(1);
    let mats: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = (0..n_real)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[10, r as u64]));
            let pts: Vec<Vec<f64>> = (0..np)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let v = rng.random::<f64>() * opts.region;
                            if lattice {
                                v.floor()
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .collect();
            Ok((model.times_among(derive_seed(seed, &[11, r as u64]), &pts, &pts)?, pts))
        })
        .collect::<Result<_>>()?;
    let (mut values, mut negative, mut triples, mut tri_bad, mut skipped, mut pairs, mut asym) = (0, 0, 0, 0, 0, 0, 0);
    for (m, _) in &mats {
        for a in 0..np {
            for b in 0..np {
                values += 1;
                if m[a][b] < 0.0 {
                    negative += 1;
                }
                if a < b {
                    pairs += 1;
                    if m[a][b] != m[b][a] {
                        asym += 1;
                    }
                }
                if a == b {
                    continue;
                }
                for c in 0..np {
                    if c == a || c == b {
                        continue;
                    }
                    if !(m[a][b].is_finite() && m[b][c].is_finite() && m[a][c].is_finite()) {
                        skipped += 1;
                        continue;
                    }
                    triples += 1;
                    if m[a][c] > m[a][b] + m[b][c] {
                        tri_bad += 1;
                    }
                }
            }
        }
    }
    let mut items = vec![
        item("nonnegativity", values, negative, negative == 0, "0 violations", format!("{n_real} realisations")),
        item(
            "triangle",
            triples,
            tri_bad,
            tri_bad == 0 && triples >= opts.tuples,
            "0 violations",
            format!("{skipped} triples skipped for truncation"),
        ),
    ];
    if lattice {
        items.push(item("symmetry", pairs, asym, asym == 0, "0 violations", "T(x, y) = T(y, x)".into()));
    }

    let lambda = lambda_estimate(model, opts.n_samples.clamp(2, 64), derive_seed(seed, &[12]), opts.lambda_pitch, &[1.0, 2.0, 5.0, 10.0])?;
    let lambda_ok = lambda.lambda.mean.is_finite() && lambda.audit_passes();
    items.push(item(
        "lambda",
        lambda.audit.len(),
        lambda.audit.iter().filter(|r| !r.pass).count(),
        lambda_ok,
        "finite, and E T(x, y) <= (|y - x| + 1) Λ + 3 SE",
        format!("Λ = {:.4} ± {:.4} on {} mesh points", lambda.lambda.mean, lambda.lambda.se, lambda.mesh_points),
    ));

    let probe: Vec<f64> = (0..d).map(|a| if a == 0 { opts.probe_length } else { 0.0 }).collect();
    let origin = vec![0.0; d];
    let sample = |tag: u64, idx: u64, from: &[f64], to: &[f64]| -> Result<Vec<f64>> {
        (0..opts.n_samples)
            .into_par_iter()
            .map(|r| Ok(model.times_from(derive_seed(seed, &[tag, idx, r as u64]), from, &[to.to_vec()])?[0]))
            .collect()
    };
    // each comparison gets its own reference sample so the tests of a
    // family are independent
    let mut ks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[21]));
    let mut family = KsFamily { kind: "translation".into(), offsets: Vec::new(), p_values: Vec::new(), above: 0 };
    for s in 0..opts.shifts {
        let z: Vec<f64> = (0..d)
            .map(|_| {
                let v = (rng.random::<f64>() - 0.5) * 100.0;
                if lattice {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        let to: Vec<f64> = z.iter().zip(&probe).map(|(a, b)| a + b).collect();
        let base = sample(20, s as u64, &origin, &probe)?;
        let other = sample(22, s as u64, &z, &to)?;
        family.p_values.push(ks_two_sample(&base, &other).p_value);
        family.offsets.push(z);
    }
    ks.push(family);
    if !lattice {
        let mut family = KsFamily { kind: "rotation".into(), offsets: Vec::new(), p_values: Vec::new(), above: 0 };
        for s in 0..opts.rotations {
            let th = std::f64::consts::TAU * (s + 1) as f64 / (opts.rotations + 1) as f64;
            let mut to = vec![0.0; d];
            to[0] = opts.probe_length * th.cos();
            to[1] = opts.probe_length * th.sin();
            let base = sample(24, s as u64, &origin, &probe)?;
            let other = sample(23, s as u64, &origin, &to)?;
            family.p_values.push(ks_two_sample(&base, &other).p_value);
            family.offsets.push(to);
        }
        ks.push(family);
    }
    for f in &mut ks {
        f.above = f.p_values.iter().filter(|p| **p > opts.ks_level).count();
    }
    for f in &ks {
        let n = f.p_values.len();
        let name = if f.kind == "translation" { "stationarity" } else { "isotropy" };
        items.push(item(
            name,
            n,
            n - f.above,
            f.above as f64 >= opts.ks_pass_share * n as f64,
            &format!("at least {:.0}% of KS p-values above {}", 100.0 * opts.ks_pass_share, opts.ks_level),
            format!("{} of {} above", f.above, n),
        ));
    }

    let mut u = vec![0.0; d];
    u[0] = 1.0;
    let k_max = opts.convergence_k_max.max(4);
    let step = (opts.probe_length / 2.0).max(1.0);
    let sample = directional_time_constant(model, &u, k_max, step, opts.convergence_reps.max(2), derive_seed(seed, &[30]))?;
    let kr = kingman_diagnostics(&sample, model.rounding_unit());
    let bad = kr.monotone.iter().filter(|m| !m.pass).count();
    items.push(item(
        "convergence",
        kr.monotone.len(),
        bad,
        kr.non_increasing,
        "ratio curve non-increasing within 3 SE",
        format!("â = {:.4} ± {:.4}, γ̂ = {:.4}", sample.a_hat.mean, sample.a_hat.se, sample.gamma_hat),
    ));
    let pass = items.iter().all(|i| i.pass);
    Ok(AuditReport { model: model.clone(), seed, options: opts.clone(), items, ks, lambda, pass })
}
