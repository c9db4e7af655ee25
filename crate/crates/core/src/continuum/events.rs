use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::time::{quantize, to_ticks, Ticks};

/// Law of outburst radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusLaw {
    Constant { radius: f64 },
    Exponential { rate: f64 },
    /// Exponential conditioned on `[0, cap]`.
    TruncatedExponential { rate: f64, cap: f64 },
}

/// Radii above the `1 - RADIUS_TAIL` quantile are capped.
pub const RADIUS_TAIL: f64 = 1e-6;

impl RadiusLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadiusLaw::Constant { radius } => radius > 0.0 && radius.is_finite(),
            RadiusLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            RadiusLaw::TruncatedExponential { rate, cap } => rate > 0.0 && rate.is_finite() && cap > 0.0 && cap.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid radius law {self:?}")))
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            RadiusLaw::Constant { radius } => radius,
            RadiusLaw::Exponential { rate } => -(-u).ln_1p() / rate,
            RadiusLaw::TruncatedExponential { rate, cap } => -(-u * -(-rate * cap).exp_m1()).ln_1p() / rate,
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match *self {
            RadiusLaw::Constant { radius } => (r >= radius) as u8 as f64,
            RadiusLaw::Exponential { rate } => {
                if r <= 0.0 {
                    0.0
                } else {
                    -(-rate * r).exp_m1()
                }
            }
            RadiusLaw::TruncatedExponential { rate, cap } => {
                if r <= 0.0 {
                    0.0
                } else if r >= cap {
                    1.0
                } else {
                    (-rate * r).exp_m1() / (-rate * cap).exp_m1()
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RadiusLaw::Constant { radius } => radius,
            RadiusLaw::Exponential { rate } => 1.0 / rate,
            RadiusLaw::TruncatedExponential { rate, cap } => {
                let e = (-rate * cap).exp();
                1.0 / rate - cap * e / (1.0 - e)
            }
        }
    }

    /// Default radius cap `R_cap`.
    pub fn default_cap(&self) -> f64 {
        match *self {
            RadiusLaw::Constant { radius } => radius,
            RadiusLaw::TruncatedExponential { cap, .. } => cap,
            RadiusLaw::Exponential { .. } => self.quantile(1.0 - RADIUS_TAIL),
        }
    }

    /// `ν((r, ∞))`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        1.0 - self.cdf(r)
    }
}

/// Axis-aligned simulation box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Window {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::Dimension { expected: min.len(), got: max.len() });
        }
        if min.len() < 2 {
            return Err(Error::DimensionTooSmall(min.len()));
        }
        if min.iter().zip(&max).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid("simulation box is empty"));
        }
        Ok(Window { min, max })
    }

    pub fn centered(center: &[f64], half: f64) -> Result<Self> {
        Self::new(center.iter().map(|c| c - half).collect(), center.iter().map(|c| c + half).collect())
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.min).zip(&self.max).all(|((v, a), b)| a <= v && v <= b)
    }

    /// Distance from `x` to the complement of the box (0 outside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.min)
            .zip(&self.max)
            .map(|((v, a), b)| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

/// A realisation of the outburst process restricted to a window.
/// Centres are stored flat, `dim` coordinates per event.
#[derive(Debug, Clone, PartialEq)]
pub struct OutburstEventSet {
    pub window: Window,
    pub t_cap: f64,
    pub r_cap: f64,
    /// `ν((R_cap, ∞))`.
    pub truncated_mass: f64,
    /// Number of radii that were capped.
    pub capped: usize,
    pub seed: u64,
    centers: Vec<f64>,
    delays: Vec<f64>,
    radii: Vec<f64>,
    ticks: Vec<Ticks>,
}

impl OutburstEventSet {
    /// Build from explicit events (center, delay, radius). Delays are
    /// quantised to the tick grid.
    pub fn from_events(window: Window, t_cap: f64, events: &[(Vec<f64>, f64, f64)]) -> Result<Self> {
        let d = window.dim();
        let mut centers = Vec::with_capacity(events.len() * d);
        let mut delays = Vec::with_capacity(events.len());
        let mut radii = Vec::with_capacity(events.len());
        let mut r_cap: f64 = 0.0;
        for (c, t, r) in events {
            if c.len() != d {
                return Err(Error::Dimension { expected: d, got: c.len() });
            }
            if !window.contains(c) {
                return Err(Error::OutsideBox(c.clone()));
            }
            if !(*t >= 0.0 && *r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("bad event delay {t} or radius {r}")));
            }
            centers.extend_from_slice(c);
            delays.push(quantize(*t));
            radii.push(*r);
            r_cap = r_cap.max(*r);
        }
        let ticks = delays.iter().map(|t| to_ticks(*t)).collect();
        Ok(OutburstEventSet {
            window,
            t_cap,
            r_cap,
            truncated_mass: 0.0,
            capped: 0,
            seed: 0,
            centers,
            delays,
            radii,
            ticks,
        })
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    #[inline]
    pub fn center(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.centers[i * d..(i + 1) * d]
    }

    pub fn delay(&self, i: usize) -> f64 {
        self.delays[i]
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub(crate) fn delay_ticks(&self, i: usize) -> Ticks {
        self.ticks[i]
    }

    /// Binary export, little-endian:
    ///
    /// ```text
    /// "OEVT" | version u32 = 1 | d u32 | seed u64 | t_cap f64 | r_cap f64
    /// | truncated_mass f64 | capped u64 | box min f64 × d | box max f64 × d
    /// | count u64 | count × (center f64 × d, delay f64, radius f64)
    /// ```
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"OEVT")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in [self.t_cap, self.r_cap, self.truncated_mass] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.capped as u64).to_le_bytes())?;
        for v in self.window.min.iter().chain(&self.window.max) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for i in 0..self.len() {
            for v in self.center(i) {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&self.delays[i].to_le_bytes())?;
            w.write_all(&self.radii[i].to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        let f = |r: &mut R| -> Result<f64> { Ok(f64::from_le_bytes(take(r)?)) };
        if &take::<4, _>(&mut r)? != b"OEVT" {
            return Err(Error::Schema("not an event set".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != 1 {
            return Err(Error::Schema(format!("unsupported event set version {version}")));
        }
        let d = u32::from_le_bytes(take(&mut r)?) as usize;
        let seed = u64::from_le_bytes(take(&mut r)?);
        let t_cap = f(&mut r)?;
        let r_cap = f(&mut r)?;
        let truncated_mass = f(&mut r)?;
        let capped = u64::from_le_bytes(take(&mut r)?) as usize;
        let min = (0..d).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        let max = (0..d).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        let n = u64::from_le_bytes(take(&mut r)?) as usize;
        let mut centers = Vec::with_capacity(n * d);
        let mut delays = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        for _ in 0..n {
            for _ in 0..d {
                centers.push(f(&mut r)?);
            }
            delays.push(f(&mut r)?);
            radii.push(f(&mut r)?);
        }
        let ticks = delays.iter().map(|t| to_ticks(*t)).collect();
        Ok(OutburstEventSet {
            window: Window::new(min, max)?,
            t_cap,
            r_cap,
            truncated_mass,
            capped,
            seed,
            centers,
            delays,
            radii,
            ticks,
        })
    }

    /// CSV: centre coordinates, delay, radius.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.dim();
        let names: Vec<String> = if d == 2 {
            vec!["x".into(), "y".into()]
        } else {
            (0..d).map(|a| format!("x{a}")).collect()
        };
        writeln!(w, "{},delay,radius", names.join(","))?;
        for i in 0..self.len() {
            for v in self.center(i) {
                write!(w, "{v},")?;
            }
            writeln!(w, "{},{}", self.delays[i], self.radii[i])?;
        }
        Ok(())
    }
}

/// Poisson outbursts with intensity `Lebesgue ⊗ Lebesgue ⊗ ν` on
/// `window × [0, t_cap]`. Radii above `R_cap` (the law's default cap) are
/// capped and counted.
///
/// Delays are generated in unit slabs `[s, s + 1)`, each from its own
/// derived seed, so for a fixed window and seed the realisation with a
/// larger `t_cap` extends the one with a smaller `t_cap`.
pub fn simulate_outbursts(window: &Window, t_cap: f64, law: RadiusLaw, seed: u64) -> Result<OutburstEventSet> {
    simulate_outbursts_capped(window, t_cap, law, law.default_cap(), seed)
}

pub fn simulate_outbursts_capped(
    window: &Window,
    t_cap: f64,
    law: RadiusLaw,
    r_cap: f64,
    seed: u64,
) -> Result<OutburstEventSet> {
    law.validate()?;
    if !(t_cap > 0.0 && t_cap.is_finite()) {
        return Err(Error::invalid("t_cap must be positive"));
    }
    if !(r_cap > 0.0) {
        return Err(Error::invalid("radius cap must be positive"));
    }
    let d = window.dim();
    let volume = window.volume();
    let poisson = Poisson::new(volume).map_err(|e| Error::invalid(e.to_string()))?;
    let mut centers = Vec::new();
    let mut delays = Vec::new();
    let mut radii = Vec::new();
    let mut capped = 0;
    let slabs = t_cap.ceil() as u64;
    for slab in 0..slabs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[slab]));
        let n = poisson.sample(&mut rng) as usize;
        for _ in 0..n {
            let start = centers.len();
            for a in 0..d {
                centers.push(window.min[a] + (window.max[a] - window.min[a]) * rng.random::<f64>());
            }
            let t = quantize(slab as f64 + rng.random::<f64>());
            let u: f64 = rng.random();
            if t > t_cap {
                centers.truncate(start);
                continue;
            }
            let mut r = law.quantile(u.max(f64::MIN_POSITIVE));
            if r > r_cap {
                r = r_cap;
                capped += 1;
            }
            delays.push(t);
            // the zero-probability atom at 0 is kept out of the support
            radii.push(r.max(f64::MIN_POSITIVE));
        }
    }
    let ticks = delays.iter().map(|t| to_ticks(*t)).collect();
    Ok(OutburstEventSet {
        window: window.clone(),
        t_cap,
        r_cap,
        truncated_mass: law.tail_mass(r_cap),
        capped,
        seed,
        centers,
        delays,
        radii,
        ticks,
    })
}
