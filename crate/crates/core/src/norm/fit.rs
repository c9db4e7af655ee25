use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclid, Norm, TabulatedNorm};
use crate::hash::derive_seed;
use crate::norm::{directional_time_constant, DirectionalSample, Model};
use crate::stats::MeanSe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Coordinate permutations and sign flips.
    Hyperoctahedral,
    /// Every direction is equivalent.
    Rotational,
    /// Only `x ↦ −x`.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    pub direction: Vec<f64>,
    pub value: MeanSe,
    /// The estimate agrees with the mean of the other directions of its
    /// orbit within 3 combined SE.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitEstimate {
    /// Canonical representative (unit vector).
    pub representative: Vec<f64>,
    pub members: Vec<DirectionEstimate>,
    pub value: MeanSe,
    /// `value − 3 SE > 0`.
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `a(u + v)`.
    pub lhs: f64,
    /// `a(u) + a(v)`.
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Directional values pooled over symmetry orbits, extended to every
/// direction by homogeneity and nearest-direction lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub dim: usize,
    pub symmetry: Symmetry,
    pub orbits: Vec<OrbitEstimate>,
    pub lambda: Option<MeanSe>,
    pub lipschitz: f64,
    pub subadditivity: Vec<PairCheck>,
    pub flags: Vec<String>,
}

fn orbit_key(u: &[f64], sym: Symmetry) -> Vec<f64> {
    let q = |v: f64| (v * 1e9).round() / 1e9;
    match sym {
        Symmetry::Rotational => vec![],
        Symmetry::Hyperoctahedral => {
            let mut k: Vec<f64> = u.iter().map(|v| q(v.abs())).collect();
            k.sort_by(|a, b| b.total_cmp(a));
            k
        }
        Symmetry::None => {
            // u and −u share a key: flip so the first non-zero entry is positive
            let s = u.iter().find(|v| q(**v) != 0.0).map(|v| v.signum()).unwrap_or(1.0);
            u.iter().map(|v| q(v * s) + 0.0).collect()
        }
    }
}

/// Images of `u` under the group (always including `±u`).
fn orbit_images(u: &[f64], sym: Symmetry) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |v: Vec<f64>| {
        if !out.iter().any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12)) {
            out.push(v);
        }
    };
    match sym {
        Symmetry::Hyperoctahedral => {
            let d = u.len();
            let mut perm: Vec<usize> = (0..d).collect();
            loop {
                for signs in 0..(1u32 << d) {
                    push((0..d).map(|a| if signs >> a & 1 == 1 { -u[perm[a]] } else { u[perm[a]] } + 0.0).collect());
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        Symmetry::Rotational | Symmetry::None => {
            push(u.to_vec());
            push(u.iter().map(|v| -v + 0.0).collect());
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn pool(values: &[MeanSe]) -> MeanSe {
    let n = values.len() as f64;
    MeanSe {
        mean: values.iter().map(|v| v.mean).sum::<f64>() / n,
        se: values.iter().map(|v| v.se * v.se).sum::<f64>().sqrt() / n,
        n: values.iter().map(|v| v.n).sum(),
    }
}

/// Pool directional samples over the orbits of `symmetry` and audit the
/// result. Samples must come from independent realisations.
pub fn fit_norm(samples: &[DirectionalSample], symmetry: Symmetry, lambda: Option<MeanSe>) -> Result<NormEstimate> {
    let first = samples.first().ok_or_else(|| Error::invalid("no directional samples"))?;
    let dim = first.direction.len();
    if let Some(s) = samples.iter().find(|s| s.direction.len() != dim) {
        return Err(Error::Dimension { expected: dim, got: s.direction.len() });
    }
    let mut groups: Vec<(Vec<f64>, Vec<&DirectionalSample>)> = Vec::new();
    for s in samples {
        let key = orbit_key(&s.direction, symmetry);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(s),
            None => groups.push((key, vec![s])),
        }
    }
    let mut orbits = Vec::with_capacity(groups.len());
    let mut flags = Vec::new();
    for (_, group) in &groups {
        let values: Vec<MeanSe> = group.iter().map(|s| s.a_hat).collect();
        let value = pool(&values);
        let members = group
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let consistent = if values.len() < 2 {
                    true
                } else {
                    let others: Vec<MeanSe> =
                        values.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                    let rest = pool(&others);
                    let tol = 3.0 * (s.a_hat.se.powi(2) + rest.se.powi(2)).sqrt();
                    (s.a_hat.mean - rest.mean).abs() <= tol + 1e-9 * rest.mean.abs()
                };
                DirectionEstimate { direction: s.direction.clone(), value: s.a_hat, consistent }
            })
            .collect::<Vec<_>>();
        let positive = value.mean - 3.0 * value.se > 0.0;
        let representative = group[0].direction.clone();
        if !positive {
            flags.push(format!("direction {representative:?}: estimate {} is within 3 SE of 0", value.mean));
        }
        for m in &members {
            if !m.consistent {
                flags.push(format!("direction {:?} disagrees with its orbit", m.direction));
            }
        }
        orbits.push(OrbitEstimate { representative, members, value, positive });
    }
    let max_value = orbits.iter().map(|o| o.value.mean).fold(0.0, f64::max);
    let lipschitz = match lambda {
        Some(l) => 2.0 * l.mean,
        None => {
            flags.push("Λ not estimated: Lipschitz constant taken as 2·max a(u), a lower bound".into());
            2.0 * max_value
        }
    };
    let mut est = NormEstimate { dim, symmetry, orbits, lambda, lipschitz, subadditivity: Vec::new(), flags };
    if symmetry != Symmetry::Rotational {
        let (dirs, vals, ses) = est.table();
        let tab = TabulatedNorm::new(dirs.clone(), vals.clone(), lipschitz.max(1e-12))?;
        let mut checks = Vec::new();
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let w: Vec<f64> = dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a + b).collect();
                if euclid(&w) < 1e-9 {
                    continue;
                }
                // only sums that land on a sampled direction are compared
                let k = nearest(&dirs, &w);
                let cos: f64 = dirs[k].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / euclid(&w);
                if cos < 1.0 - 1e-9 {
                    continue;
                }
                let lhs = tab.eval(&w);
                let rhs = vals[i] + vals[j];
                let tolerance = 3.0 * (ses[i].powi(2) + ses[j].powi(2) + (ses[k] * euclid(&w)).powi(2)).sqrt();
                checks.push(PairCheck { u: dirs[i].clone(), v: dirs[j].clone(), lhs, rhs, tolerance, pass: lhs <= rhs + tolerance + 1e-9 * rhs });
            }
        }
        if checks.iter().any(|c| !c.pass) {
            est.flags.push("fitted values violate subadditivity beyond 3 SE".into());
        }
        est.subadditivity = checks;
    }
    Ok(est)
}

fn nearest(dirs: &[Vec<f64>], w: &[f64]) -> usize {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (i, d) in dirs.iter().enumerate() {
        let dot: f64 = d.iter().zip(w).map(|(a, b)| a * b).sum();
        if dot > best_dot {
            best_dot = dot;
            best = i;
        }
    }
    best
}

impl NormEstimate {
    /// Unit directions, values and SEs of the full orbit table.
    pub fn table(&self) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let (mut dirs, mut vals, mut ses) = (Vec::new(), Vec::new(), Vec::new());
        for o in &self.orbits {
            for img in orbit_images(&o.representative, self.symmetry) {
                dirs.push(img);
                vals.push(o.value.mean);
                ses.push(o.value.se);
            }
        }
        (dirs, vals, ses)
    }

    /// Pooled value of the orbit containing `u`, if sampled.
    pub fn value(&self, u: &[f64]) -> Option<MeanSe> {
        let key = orbit_key(&unit(u)?, self.symmetry);
        self.orbits.iter().find(|o| orbit_key(&o.representative, self.symmetry) == key).map(|o| o.value)
    }

    /// The estimate as a [`Norm`]: scaled Euclidean under full rotational
    /// symmetry, otherwise tabulated over the orbit images.
    pub fn to_norm(&self) -> Result<Norm> {
        if self.symmetry == Symmetry::Rotational {
            return Norm::scaled_euclidean(self.orbits[0].value.mean);
        }
        let (dirs, vals, _) = self.table();
        Ok(Norm::Tabulated(TabulatedNorm::new(dirs, vals, self.lipschitz.max(1e-12))?))
    }

    pub fn all_positive(&self) -> bool {
        self.orbits.iter().all(|o| o.positive)
    }

    pub fn orbits_consistent(&self) -> bool {
        self.orbits.iter().all(|o| o.members.iter().all(|m| m.consistent))
    }

    pub fn subadditive(&self) -> bool {
        self.subadditivity.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn unit(u: &[f64]) -> Option<Vec<f64>> {
    let l = euclid(u);
    (l > 0.0).then(|| u.iter().map(|v| v / l).collect())
}

/// Signed coordinate axes and `±e_i ± e_j` diagonals on the lattice;
/// equiangular planar directions (16) or axes and diagonals in higher
/// dimension for the continuum.
pub fn default_directions(model: &Model) -> Vec<Vec<f64>> {
    let d = model.dim();
    if !model.is_lattice() && d == 2 {
        return (0..16)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 8.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let mut out = Vec::new();
    for a in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[a] = s;
            out.push(v);
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..d {
        for b in a + 1..d {
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; d];
                v[a] = sa * h;
                v[b] = sb * h;
                out.push(v);
            }
        }
    }
    out
}

/// Directional samples along each direction (independent seeds) and their
/// fit.
pub fn estimate_norm(
    model: &Model,
    directions: &[Vec<f64>],
    k_max: usize,
    step: f64,
    n_reps: usize,
    seed: u64,
    symmetry: Symmetry,
    lambda: Option<MeanSe>,
) -> Result<(Vec<DirectionalSample>, NormEstimate)> {
    let samples = directions
        .iter()
        .enumerate()
        .map(|(i, u)| directional_time_constant(model, u, k_max, step, n_reps, derive_seed(seed, &[i as u64])))
        .collect::<Result<Vec<_>>>()?;
    let est = fit_norm(&samples, symmetry, lambda)?;
    Ok((samples, est))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzAuditRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub separation: f64,
    pub mean_time: MeanSe,
    /// `(‖y − x‖ + 1) Λ̂`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    /// `max` over the mesh of the mean of `T(0, x)`.
    pub lambda: MeanSe,
    pub argmax: Vec<f64>,
    pub mesh_pitch: f64,
    pub mesh_points: usize,
    pub audit: Vec<LipschitzAuditRow>,
}

impl LambdaEstimate {
    pub fn audit_passes(&self) -> bool {
        self.audit.iter().all(|r| r.pass)
    }
}

/// Mesh of the closed Euclidean unit ball with the given pitch.
pub fn unit_ball_mesh(dim: usize, pitch: f64) -> Vec<Vec<f64>> {
    let n = (1.0 / pitch + 1e-9).floor() as i64;
    let mut out = Vec::new();
    let mut cur = vec![-n; dim];
    loop {
        let p: Vec<f64> = cur.iter().map(|c| *c as f64 * pitch).collect();
        if euclid(&p) <= 1.0 + 1e-12 {
            out.push(p);
        }
        let mut a = 0;
        loop {
            if a == dim {
                return out;
            }
            cur[a] += 1;
            if cur[a] <= n {
                break;
            }
            cur[a] = -n;
            a += 1;
        }
    }
}

/// Estimate `Λ = sup_{‖x‖ ≤ 1} E T(0, x)` on a mesh of the unit ball, then
/// check `E T(x, y) ≤ (‖y − x‖ + 1) Λ̂ + 3 SE` on pairs at the given
/// separations (random placement and direction drawn from `seed`).
pub fn lambda_estimate(
    model: &Model,
    n_samples: usize,
    seed: u64,
    mesh_pitch: f64,
    separations: &[f64],
) -> Result<LambdaEstimate> {
    if n_samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let d = model.dim();
    let mesh = unit_ball_mesh(d, mesh_pitch);
    let origin = vec![0.0; d];
    let rows: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|r| model.times_from(derive_seed(seed, &[0, r as u64]), &origin, &mesh))
        .collect::<Result<_>>()?;
    let mut lambda = MeanSe { mean: f64::NEG_INFINITY, se: 0.0, n: 0 };
    let mut argmax = origin.clone();
    for (j, p) in mesh.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let m = MeanSe::of(&col);
        if m.mean > lambda.mean {
            lambda = m;
            argmax = p.clone();
        }
    }
    let mut audit = Vec::new();
    for (i, &sep) in separations.iter().enumerate() {
        let h = crate::hash::hash_words(seed, &[1, i as u64]);
        let angle = crate::hash::unit_open(h) * std::f64::consts::TAU;
        let shift = crate::hash::unit_open(crate::hash::mix64(h)) * 3.0;
        let mut x = vec![0.0; d];
        x[0] = shift;
        let mut y = x.clone();
        y[0] += sep * angle.cos();
        y[1] += sep * angle.sin();
        let times: Vec<f64> = (0..n_samples)
            .into_par_iter()
            .map(|r| Ok(model.times_from(derive_seed(seed, &[2, i as u64, r as u64]), &x, &[y.clone()])?[0]))
            .collect::<Result<_>>()?;
        let mean_time = MeanSe::of(&times);
        let bound = (sep + 1.0) * lambda.mean;
        let pass = mean_time.mean <= bound + 3.0 * (mean_time.se.powi(2) + ((sep + 1.0) * lambda.se).powi(2)).sqrt();
        audit.push(LipschitzAuditRow { x, y, separation: sep, mean_time, bound, pass });
    }
    Ok(LambdaEstimate { lambda, argmax, mesh_pitch, mesh_points: mesh.len(), audit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EdgeWeightDistribution;

    #[test]
    fn orbit_images_count() {
        assert_eq!(orbit_images(&[1.0, 0.0], Symmetry::Hyperoctahedral).len(), 4);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(orbit_images(&[h, h], Symmetry::Hyperoctahedral).len(), 4);
        assert_eq!(orbit_images(&[0.6, 0.8], Symmetry::Hyperoctahedral).len(), 8);
        assert_eq!(orbit_images(&[1.0, 2.0, 3.0], Symmetry::Hyperoctahedral).len(), 48);
    }

    #[test]
    fn constant_weights_recover_l1() {
        let m = Model::lattice(2, EdgeWeightDistribution::Constant { value: 1.5 });
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-1.0, 1.0]];
        let (_, est) = estimate_norm(&m, &dirs, 4, 4.0, 2, 0, Symmetry::Hyperoctahedral, None).unwrap();
        assert_eq!(est.orbits.len(), 2);
        assert!(est.orbits_consistent() && est.all_positive() && est.subadditive());
        let n = est.to_norm().unwrap();
        for x in [[3.0, 0.0], [0.0, -2.0], [1.0, 1.0], [-2.0, 2.0]] {
            let l1 = 1.5 * (x[0] as f64).abs() + 1.5 * (x[1] as f64).abs();
            assert!((n.eval(&x) - l1).abs() < 1e-9, "{x:?}");
        }
        assert!(est.orbits.iter().all(|o| o.value.se == 0.0));
        let back = NormEstimate::from_json(&est.to_json().unwrap()).unwrap();
        assert_eq!(back, est);
    }

    #[test]
    fn lambda_for_constant_weights() {
        let m = Model::lattice(2, EdgeWeightDistribution::Constant { value: 1.0 });
        let l = lambda_estimate(&m, 2, 0, 0.25, &[1.0, 10.0]).unwrap();
        assert_eq!(l.lambda.mean, 2.0);
        assert!(l.audit_passes());
        assert_eq!(l.audit[1].bound, 22.0);
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(fit_norm(&[], Symmetry::None, None).is_err());
    }

    #[test]
    fn mesh_of_unit_ball() {
        assert_eq!(unit_ball_mesh(2, 1.0).len(), 5);
        assert_eq!(unit_ball_mesh(2, 0.5).len(), 13);
    }
}
