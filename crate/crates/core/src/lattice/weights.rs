use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of a single edge passage time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeWeightDistribution {
    Constant { value: f64 },
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
    /// Zero with probability `p_zero`, otherwise exponential with `rate`.
    AtomMixture { p_zero: f64, rate: f64 },
}

/// Default subcritical threshold for the zero atom in the plane.
pub const PLANAR_ZERO_ATOM_THRESHOLD: f64 = 0.5;

impl EdgeWeightDistribution {
    /// Check parameters. Returns advisory warnings, e.g. a zero atom at or
    /// above the declared percolation threshold.
    pub fn validate(&self, dim: usize, zero_atom_threshold: Option<f64>) -> Result<Vec<String>> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let mut warnings = Vec::new();
        match *self {
            EdgeWeightDistribution::Constant { value } => positive("constant weight", value)?,
            EdgeWeightDistribution::Exponential { rate } => positive("rate", rate)?,
            EdgeWeightDistribution::Uniform { low, high } => {
                if !(low >= 0.0 && high > low && high.is_finite()) {
                    return Err(Error::invalid(format!("uniform weights need 0 <= a < b, got ({low}, {high})")));
                }
            }
            EdgeWeightDistribution::AtomMixture { p_zero, rate } => {
                positive("rate", rate)?;
                if !(0.0..1.0).contains(&p_zero) {
                    return Err(Error::invalid(format!("zero-atom mass must lie in [0, 1), got {p_zero}")));
                }
                let threshold = zero_atom_threshold.or((dim == 2).then_some(PLANAR_ZERO_ATOM_THRESHOLD));
                match threshold {
                    Some(t) if p_zero >= t => warnings.push(format!(
                        "P(tau = 0) = {p_zero} is not below the declared threshold {t}; the growth may not have a norm"
                    )),
                    None if p_zero > 0.0 => warnings.push(format!(
                        "no zero-atom threshold declared for d = {dim}; subcriticality of P(tau = 0) = {p_zero} unchecked"
                    )),
                    _ => {}
                }
            }
        }
        Ok(warnings)
    }

    /// Inverse CDF at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            EdgeWeightDistribution::Constant { value } => value,
            EdgeWeightDistribution::Exponential { rate } => -(-u).ln_1p() / rate,
            EdgeWeightDistribution::Uniform { low, high } => low + (high - low) * u,
            EdgeWeightDistribution::AtomMixture { p_zero, rate } => {
                if u < p_zero {
                    0.0
                } else {
                    let v = (u - p_zero) / (1.0 - p_zero);
                    -(-v).ln_1p() / rate
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            EdgeWeightDistribution::Constant { value } => value,
            EdgeWeightDistribution::Exponential { rate } => 1.0 / rate,
            EdgeWeightDistribution::Uniform { low, high } => 0.5 * (low + high),
            EdgeWeightDistribution::AtomMixture { p_zero, rate } => (1.0 - p_zero) / rate,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            EdgeWeightDistribution::Constant { value } => (x >= value) as u8 as f64,
            EdgeWeightDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
            EdgeWeightDistribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            EdgeWeightDistribution::AtomMixture { p_zero, rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    p_zero + (1.0 - p_zero) * (1.0 - (-rate * x).exp())
                }
            }
        }
    }

    /// True when the law has no atoms, so exact ties have probability zero.
    pub fn is_atomless(&self) -> bool {
        match *self {
            EdgeWeightDistribution::Constant { .. } => false,
            EdgeWeightDistribution::AtomMixture { p_zero, .. } => p_zero == 0.0,
            _ => true,
        }
    }
}
