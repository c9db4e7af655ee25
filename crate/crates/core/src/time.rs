//! Fixed-point passage times.
//!
//! Weights and delays are quantised to multiples of 2^-32 time units and
//! summed as integers, so path sums are associative and the triangle
//! inequality and tie detection are exact. Every tick count below 2^53
//! converts to `f64` without rounding.

pub const TICKS_PER_UNIT: f64 = 4_294_967_296.0;

/// Integer passage time; `UNREACHED` marks +∞.
pub type Ticks = u64;

pub const UNREACHED: Ticks = u64::MAX;

#[inline]
pub fn to_ticks(t: f64) -> Ticks {
    debug_assert!(t >= 0.0, "negative time {t}");
    if t.is_infinite() {
        return UNREACHED;
    }
    let q = (t * TICKS_PER_UNIT).round();
    if q >= (u64::MAX - 1) as f64 {
        UNREACHED - 1
    } else {
        q as Ticks
    }
}

#[inline]
pub fn to_time(t: Ticks) -> f64 {
    if t == UNREACHED {
        f64::INFINITY
    } else {
        t as f64 / TICKS_PER_UNIT
    }
}

/// Round a real time onto the tick grid.
#[inline]
pub fn quantize(t: f64) -> f64 {
    to_time(to_ticks(t))
}

#[inline]
pub(crate) fn add(a: Ticks, b: Ticks) -> Ticks {
    if a == UNREACHED || b == UNREACHED {
        UNREACHED
    } else {
        a.saturating_add(b).min(UNREACHED - 1)
    }
}
