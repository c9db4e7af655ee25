use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{hash_words, unit_open};
use crate::lattice::EdgeWeightDistribution;
use crate::time::{to_ticks, to_time, Ticks};

/// Axis-aligned box of lattice points, bounds inclusive. Linear indices run
/// with axis 0 fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub min: Vec<i64>,
    pub max: Vec<i64>,
}

impl LatticeBox {
    pub fn new(min: Vec<i64>, max: Vec<i64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::Dimension { expected: min.len(), got: max.len() });
        }
        if min.len() < 2 {
            return Err(Error::DimensionTooSmall(min.len()));
        }
        if min.iter().zip(&max).any(|(a, b)| a > b) {
            return Err(Error::invalid("empty lattice box"));
        }
        Ok(LatticeBox { min, max })
    }

    /// Cube `center + [-half, half]^d`.
    pub fn centered(center: &[i64], half: i64) -> Result<Self> {
        Self::new(center.iter().map(|c| c - half).collect(), center.iter().map(|c| c + half).collect())
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.min.iter().zip(&self.max).map(|(a, b)| (b - a + 1) as usize).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.min).zip(&self.max).all(|((v, a), b)| a <= v && v <= b)
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        let mut stride = 1usize;
        for a in 0..self.dim() {
            idx += (x[a] - self.min[a]) as usize * stride;
            stride *= (self.max[a] - self.min[a] + 1) as usize;
        }
        Some(idx)
    }

    pub fn coords_into(&self, mut idx: usize, out: &mut [i64]) {
        for a in 0..self.dim() {
            let n = (self.max[a] - self.min[a] + 1) as usize;
            out[a] = self.min[a] + (idx % n) as i64;
            idx /= n;
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<i64> {
        let mut out = vec![0; self.dim()];
        self.coords_into(idx, &mut out);
        out
    }

    /// Chebyshev distance from `x` to the outside of the box.
    pub fn depth(&self, x: &[i64]) -> i64 {
        x.iter()
            .zip(&self.min)
            .zip(&self.max)
            .map(|((v, a), b)| (v - a).min(b - v))
            .min()
            .unwrap_or(0)
    }
}

/// Nearest lattice point, componentwise; half-integers round toward +∞.
pub fn psi_round(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v + 0.5).floor() as i64).collect()
}

/// I.i.d. edge passage times on `Z^d`, realised lazily from a master seed.
///
/// The weight of an edge is a pure function of the seed and the edge's
/// canonical key (lower endpoint, axis), so it does not depend on the box,
/// on query order or on the search that requests it. Weights are quantised
/// to the tick grid of [`crate::time`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageTimeField {
    pub distribution: EdgeWeightDistribution,
    pub seed: u64,
    pub bbox: LatticeBox,
}

impl PassageTimeField {
    pub fn new(distribution: EdgeWeightDistribution, seed: u64, bbox: LatticeBox) -> Result<Self> {
        distribution.validate(bbox.dim(), None)?;
        Ok(PassageTimeField { distribution, seed, bbox })
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    /// Same weights, different box.
    pub fn with_box(&self, bbox: LatticeBox) -> Self {
        PassageTimeField { distribution: self.distribution, seed: self.seed, bbox }
    }

    #[inline]
    pub(crate) fn weight_ticks(&self, lower: &[i64], axis: usize) -> Ticks {
        if let EdgeWeightDistribution::Constant { value } = self.distribution {
            return to_ticks(value);
        }
        let mut key = [0u64; 9];
        let d = lower.len();
        if d + 1 <= key.len() {
            key[0] = axis as u64;
            for (k, v) in key[1..].iter_mut().zip(lower) {
                *k = *v as u64;
            }
            to_ticks(self.distribution.quantile(unit_open(hash_words(self.seed, &key[..d + 1]))))
        } else {
            let mut key = Vec::with_capacity(d + 1);
            key.push(axis as u64);
            key.extend(lower.iter().map(|v| *v as u64));
            to_ticks(self.distribution.quantile(unit_open(hash_words(self.seed, &key))))
        }
    }

    /// Passage time of the edge `{x, y}`; symmetric in its arguments.
    pub fn edge_weight(&self, x: &[i64], y: &[i64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Dimension { expected: x.len(), got: y.len() });
        }
        let mut axis = None;
        for a in 0..x.len() {
            match (x[a] - y[a]).abs() {
                0 => {}
                1 if axis.is_none() => axis = Some(a),
                _ => return Err(Error::NotNeighbors(x.to_vec(), y.to_vec())),
            }
        }
        let axis = axis.ok_or_else(|| Error::NotNeighbors(x.to_vec(), y.to_vec()))?;
        let lower = if x[axis] < y[axis] { x } else { y };
        Ok(to_time(self.weight_ticks(lower, axis)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(dist: EdgeWeightDistribution) -> PassageTimeField {
        PassageTimeField::new(dist, 42, LatticeBox::centered(&[0, 0], 10).unwrap()).unwrap()
    }

    #[test]
    fn box_indexing_round_trips() {
        let b = LatticeBox::new(vec![-2, 3, 0], vec![1, 5, 1]).unwrap();
        assert_eq!(b.len(), 4 * 3 * 2);
        for i in 0..b.len() {
            assert_eq!(b.index(&b.coords(i)), Some(i));
        }
        assert_eq!(b.index(&[-2, 3, 0]), Some(0));
        assert_eq!(b.index(&[-1, 3, 0]), Some(1));
        assert_eq!(b.index(&[2, 3, 0]), None);
        assert_eq!(b.depth(&[-2, 4, 1]), 0);
        assert!(LatticeBox::new(vec![0, 0], vec![-1, 0]).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_round(&[0.4, -0.7]), vec![0, -1]);
        assert_eq!(psi_round(&[0.0, 0.0]), vec![0, 0]);
        assert_eq!(psi_round(&[0.5, -0.5]), vec![1, 0]);
        assert_eq!(psi_round(&[2.49, -2.51]), vec![2, -3]);
    }

    #[test]
    fn constant_weights() {
        let f = field(EdgeWeightDistribution::Constant { value: 1.0 });
        assert_eq!(f.edge_weight(&[0, 0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(f.edge_weight(&[5, -3], &[5, -4]).unwrap(), 1.0);
    }

    #[test]
    fn non_neighbours_rejected() {
        let f = field(EdgeWeightDistribution::Exponential { rate: 1.0 });
        assert!(matches!(f.edge_weight(&[0, 0], &[1, 1]), Err(Error::NotNeighbors(..))));
        assert!(f.edge_weight(&[0, 0], &[0, 0]).is_err());
        assert!(f.edge_weight(&[0, 0], &[2, 0]).is_err());
    }

    #[test]
    fn weights_do_not_depend_on_box() {
        let f = field(EdgeWeightDistribution::Exponential { rate: 1.0 });
        let g = f.with_box(LatticeBox::centered(&[100, 100], 3).unwrap());
        assert_eq!(f.edge_weight(&[3, 4], &[3, 5]).unwrap(), g.edge_weight(&[3, 5], &[3, 4]).unwrap());
    }
}
