use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, euclid, Norm, SiteConfiguration, VoronoiCells};

/// Angular tolerance used by [`Cone::contains`].
pub const EXACT_ANGLE: f64 = 1e-9;

/// `apex + H(K)` where `H(K)` is the union of `λK` for `λ ≥ 1` and `K` is a
/// finite set of points on the sphere of radius `radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub directions: Vec<Vec<f64>>,
    pub radius: f64,
    pub apex: Vec<f64>,
}

impl Cone {
    /// Build from base points, which must share one positive Euclidean norm.
    pub fn from_base(base: &[Vec<f64>], apex: Vec<f64>) -> Result<Self> {
        let first = base.first().ok_or_else(|| Error::invalid("empty cone base"))?;
        let radius = euclid(first);
        if radius <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut directions = Vec::with_capacity(base.len());
        for p in base {
            if p.len() != apex.len() {
                return Err(Error::Dimension { expected: apex.len(), got: p.len() });
            }
            let r = euclid(p);
            if (r - radius).abs() > 1e-9 * radius {
                return Err(Error::invalid(format!("cone base points have norms {radius} and {r}")));
            }
            directions.push(p.iter().map(|v| v / r).collect());
        }
        Ok(Cone { directions, radius, apex })
    }

    /// Membership on the rays themselves (angular tolerance [`EXACT_ANGLE`]).
    pub fn contains(&self, z: &[f64]) -> bool {
        self.contains_within(z, EXACT_ANGLE)
    }

    /// Direction of `z - apex` within `theta` radians of a base direction and
    /// `‖z - apex‖ ≥ radius`.
    pub fn contains_within(&self, z: &[f64], theta: f64) -> bool {
        let w: Vec<f64> = z.iter().zip(&self.apex).map(|(a, b)| a - b).collect();
        let r = euclid(&w);
        if r < self.radius * (1.0 - 1e-12) || r == 0.0 {
            return false;
        }
        let cos_min = theta.cos();
        self.directions.iter().any(|u| {
            let c = dot(u, &w) / r;
            c >= cos_min || c.clamp(-1.0, 1.0).acos() <= theta
        })
    }
}

/// Planar cone `x_i + H(K)` inside the cell `V_i`, built from `n_sectors`
/// equal angular sectors.
///
/// A sector is kept when its centre and both edges point into `V_i` far
/// away; the radius is the smallest doubling of the site spacing beyond
/// which every probed point of every kept sector is in the cell. Returns
/// the cone and the sector half-width to use with [`Cone::contains_within`].
pub fn cone_in_cell(
    cfg: &SiteConfiguration,
    norm: &Norm,
    i: usize,
    n_sectors: usize,
) -> Result<(Cone, f64)> {
    if cfg.dim() != 2 {
        return Err(Error::invalid("cone construction is planar only"));
    }
    if i >= cfg.len() {
        return Err(Error::IndexOutOfRange { index: i, len: cfg.len() });
    }
    if n_sectors < 4 {
        return Err(Error::invalid("need at least 4 sectors"));
    }
    let cells = VoronoiCells::new(cfg, norm);
    let apex = cells.points()[i].clone();
    let spacing = cfg.min_spacing();
    let far = 1e6 * spacing;
    let half = std::f64::consts::PI / n_sectors as f64;
    let unit = |a: f64| vec![a.cos(), a.sin()];
    let at = |u: &[f64], t: f64| vec![apex[0] + t * u[0], apex[1] + t * u[1]];

    let probes = |a: f64| -> Vec<Vec<f64>> {
        (0..5).map(|s| unit(a - half + half * s as f64 / 2.0)).collect()
    };
    let kept: Vec<f64> = (0..n_sectors)
        .map(|j| 2.0 * half * j as f64)
        .filter(|&a| probes(a).iter().all(|u| cells.contains(&at(u, far), i).unwrap_or(false)))
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid("cell contains no complete sector"));
    }
    let mut radius = spacing;
    'grow: loop {
        for &a in &kept {
            for u in probes(a) {
                let mut t = radius;
                while t <= far {
                    if !cells.contains(&at(&u, t), i)? {
                        radius *= 2.0;
                        if radius > far {
                            return Err(Error::invalid("no radius puts the sectors inside the cell"));
                        }
                        continue 'grow;
                    }
                    t *= 1.5;
                }
            }
        }
        break;
    }
    let base: Vec<Vec<f64>> = kept.iter().map(|&a| unit(a).iter().map(|v| v * radius).collect()).collect();
    Ok((Cone::from_base(&base, apex)?, half))
}
