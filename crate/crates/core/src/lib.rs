//! Simulation and analysis of competing first-passage growth.
//!
//! Two models are provided: first-passage percolation on `Z^d` with i.i.d.
//! edge weights ([`lattice`]) and a continuum growth driven by Poisson
//! outbursts ([`continuum`]). Territories of `k` competing infections are
//! compared with the Voronoi cells of the sources under the model's
//! asymptotic norm ([`geometry`], [`norm`], [`experiments`]).

pub mod cli;
pub mod continuum;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hash;
pub mod lattice;
pub mod norm;
pub mod stats;
pub mod territory;
pub mod time;

pub use error::{Error, Result};
