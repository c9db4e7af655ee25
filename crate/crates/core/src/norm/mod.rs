//! Estimation of the asymptotic norm from directional passage times, with
//! subadditivity diagnostics and a Lipschitz extension to all directions.

mod directional;
mod fit;
mod model;

pub use directional::{
    directional_time_constant, kingman_diagnostics, DirectionalSample, KingmanReport, MonotoneCheck, SplitCheck,
    MAX_TRUNCATED,
};
pub use fit::{
    default_directions, estimate_norm, fit_norm, lambda_estimate, unit_ball_mesh, DirectionEstimate, LambdaEstimate,
    LipschitzAuditRow, NormEstimate, OrbitEstimate, PairCheck, Symmetry,
};
pub use model::{ContinuumModel, LatticeModel, Model};
