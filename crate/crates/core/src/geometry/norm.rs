use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, euclid};

/// A norm on R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    LInf,
    /// `factor · ‖x‖₂`
    ScaledEuclidean { factor: f64 },
    Tabulated(TabulatedNorm),
}

impl Norm {
    pub fn scaled_euclidean(factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid(format!("Euclidean scale factor must be positive, got {factor}")));
        }
        Ok(Norm::ScaledEuclidean { factor })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => euclid(x),
            Norm::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            Norm::ScaledEuclidean { factor } => factor * euclid(x),
            Norm::Tabulated(t) => t.eval(x),
        }
    }

    /// `N(a - b)`
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L1 => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum(),
            Norm::L2 => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt(),
            Norm::LInf => a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs())),
            Norm::ScaledEuclidean { factor } => {
                factor * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
            }
            Norm::Tabulated(t) => {
                let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
                t.eval(&diff)
            }
        }
    }

    /// Sample random pairs in `[-1, 1]^d` and return those violating
    /// `N(x + y) <= N(x) + N(y) + tolerance`.
    pub fn audit_subadditivity(
        &self,
        dim: usize,
        trials: usize,
        tolerance: f64,
        seed: u64,
    ) -> Vec<SubadditivityViolation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..trials {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let lhs = self.eval(&s);
            let rhs = self.eval(&x) + self.eval(&y);
            if lhs > rhs + tolerance {
                out.push(SubadditivityViolation { x, y, excess: lhs - rhs });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub excess: f64,
}

/// A norm known only through its values on a finite set of unit directions.
///
/// Queries are answered with the value of the nearest stored direction,
/// extended by positive homogeneity. The reported error bound is
/// `lipschitz · angular gap · ‖x‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedNorm {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub lipschitz: f64,
}

impl TabulatedNorm {
    pub fn new(directions: Vec<Vec<f64>>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let dim = directions.first().map(Vec::len).ok_or_else(|| Error::invalid("no directions"))?;
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if directions.len() != values.len() {
            return Err(Error::invalid("directions and values differ in length"));
        }
        let mut units = Vec::with_capacity(directions.len());
        for d in directions {
            if d.len() != dim {
                return Err(Error::Dimension { expected: dim, got: d.len() });
            }
            let r = euclid(&d);
            if r == 0.0 {
                return Err(Error::ZeroVector);
            }
            units.push(d.iter().map(|v| v / r).collect());
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("tabulated norm values must be positive, got {v}")));
        }
        Ok(TabulatedNorm { dim, directions: units, values, lipschitz })
    }

    fn nearest(&self, unit: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, u) in self.directions.iter().enumerate() {
            let c = dot(u, unit);
            if c > best.1 {
                best = (i, c);
            }
        }
        best
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = euclid(x);
        if r == 0.0 {
            return 0.0;
        }
        let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
        r * self.values[self.nearest(&unit).0]
    }

    /// Interpolation error bound at `x`.
    pub fn error_bound(&self, x: &[f64]) -> f64 {
        let r = euclid(x);
        if r == 0.0 {
            return 0.0;
        }
        let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
        let cos = self.nearest(&unit).1.clamp(-1.0, 1.0);
        self.lipschitz * cos.acos() * r
    }
}
