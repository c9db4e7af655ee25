//! Deterministic target objects: norms, Voronoi cells, cones and
//! relative-density estimators.

mod cone;
mod density;
mod norm;
mod voronoi;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cone::{cone_in_cell, Cone};
pub use density::{relative_density, DensityEstimator, DensityReport, EstimatorKind, DEFAULT_TAIL_FRACTION};
pub use norm::{Norm, SubadditivityViolation, TabulatedNorm};
pub use voronoi::{
    coexistence_geometry_check, homothety_stability_check, translate_stability_check,
    translate_stability_check_with, voronoi_delta_member, voronoi_member, CoexistenceGeometry,
    PairCheck, VoronoiCells,
};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn euclid(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn euclid_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ordered source points `x_1..x_k` and a scale factor applied to all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteConfiguration {
    pub sites: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl SiteConfiguration {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        Self::scaled(sites, 1.0)
    }

    pub fn scaled(sites: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        if sites.len() < 2 {
            return Err(Error::TooFewSites(sites.len()));
        }
        let d = sites[0].len();
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        for s in &sites {
            if s.len() != d {
                return Err(Error::Dimension { expected: d, got: s.len() });
            }
        }
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                if sites[i] == sites[j] {
                    return Err(Error::DuplicateSites(i, j));
                }
            }
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(SiteConfiguration { sites, scale })
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::scaled(self.sites.clone(), scale)
    }

    pub fn dim(&self) -> usize {
        self.sites[0].len()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sites multiplied by the scale.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.sites
            .iter()
            .map(|s| s.iter().map(|v| v * self.scale).collect())
            .collect()
    }

    /// Smallest Euclidean distance between two scaled sites.
    pub fn min_spacing(&self) -> f64 {
        let pts = self.points();
        let mut m = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                m = m.min(euclid_distance(&pts[i], &pts[j]));
            }
        }
        m
    }
}
