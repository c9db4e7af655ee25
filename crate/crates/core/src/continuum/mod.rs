//! Continuum growth driven by Poisson outbursts: an event `(X, τ̃, R)` whose
//! centre has been reached passes the infection to every point of its ball
//! `B(X, R)` at an extra cost `τ̃`.

mod events;
mod index;
mod passage;

pub use events::{simulate_outbursts, simulate_outbursts_capped, OutburstEventSet, RadiusLaw, Window, RADIUS_TAIL};
pub use index::{in_ball, EventGraphIndex};
pub use passage::{
    ball_sample_points, ball_vs_point_gap, continuum_passage_time, continuum_territories, set_passage_time, Ball,
    BallGap, PassageTime,
};

/// Default mesh pitch for sups over target balls.
pub const DEFAULT_MESH_PITCH: f64 = 0.1;
