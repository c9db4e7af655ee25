//! Winner labels on an evaluation grid, shared by both models, with binary,
//! CSV and PPM exports.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Norm, VoronoiCells};

/// Regular grid `origin + pitch · n`, `0 <= n_a < shape[a]`; axis 0 varies
/// fastest in linear indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub pitch: f64,
    pub shape: Vec<usize>,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, pitch: f64, shape: Vec<usize>) -> Result<Self> {
        if origin.len() != shape.len() {
            return Err(Error::Dimension { expected: origin.len(), got: shape.len() });
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::invalid("grid pitch must be positive"));
        }
        if shape.iter().any(|&n| n == 0) {
            return Err(Error::invalid("grid has an empty axis"));
        }
        Ok(GridSpec { origin, pitch, shape })
    }

    /// Grid of pitch `pitch` covering the cube `center + [-half, half]^d`,
    /// symmetric about the centre.
    pub fn centered(center: &[f64], half: f64, pitch: f64) -> Result<Self> {
        let n = (half / pitch + 1e-9).floor() as usize;
        let origin = center.iter().map(|c| c - n as f64 * pitch).collect();
        Self::new(origin, pitch, vec![2 * n + 1; center.len()])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point_into(&self, mut idx: usize, out: &mut [f64]) {
        for a in 0..self.dim() {
            out[a] = self.origin[a] + (idx % self.shape[a]) as f64 * self.pitch;
            idx /= self.shape[a];
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point_into(idx, &mut out);
        out
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    /// 0-based type index.
    Type(usize),
    Tie,
    Unreached,
}

impl Winner {
    fn code(self) -> u16 {
        match self {
            Winner::Unreached => 0,
            Winner::Tie => u16::MAX,
            Winner::Type(i) => i as u16 + 1,
        }
    }

    fn from_code(c: u16) -> Self {
        match c {
            0 => Winner::Unreached,
            u16::MAX => Winner::Tie,
            i => Winner::Type(i as usize - 1),
        }
    }
}

/// Per-point winner and winning time. `per_type[j][p]` is the passage time
/// of type `j` to point `p` when retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerritoryMap {
    pub grid: GridSpec,
    pub k: usize,
    pub seed: u64,
    pub winners: Vec<Winner>,
    pub times: Vec<f64>,
    pub per_type: Option<Vec<Vec<f64>>>,
}

const MAGIC: &[u8; 4] = b"TMAP";
const VERSION: u32 = 1;

impl TerritoryMap {
    /// Counts of each type, then ties, then unreached.
    pub fn counts(&self) -> (Vec<usize>, usize, usize) {
        let mut per = vec![0; self.k];
        let (mut tie, mut un) = (0, 0);
        for w in &self.winners {
            match w {
                Winner::Type(i) => per[*i] += 1,
                Winner::Tie => tie += 1,
                Winner::Unreached => un += 1,
            }
        }
        (per, tie, un)
    }

    /// Binary export, all integers and floats little-endian:
    ///
    /// ```text
    /// "TMAP" | version u32 = 1 | d u32 | k u32 | seed u64 | pitch f64
    /// | origin f64 × d | shape u64 × d
    /// | winner u16 × N   (0 unreached, 0xFFFF tie, i + 1 for type i)
    /// | time f64 × N
    /// ```
    ///
    /// Points are ordered with axis 0 fastest (row-major in the plane).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.grid.pitch.to_le_bytes())?;
        for o in &self.grid.origin {
            w.write_all(&o.to_le_bytes())?;
        }
        for s in &self.grid.shape {
            w.write_all(&(*s as u64).to_le_bytes())?;
        }
        for x in &self.winners {
            w.write_all(&x.code().to_le_bytes())?;
        }
        for t in &self.times {
            w.write_all(&t.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &take::<4, _>(&mut r)? != MAGIC {
            return Err(Error::Schema("not a territory map".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != VERSION {
            return Err(Error::Schema(format!("unsupported territory map version {version}")));
        }
        let d = u32::from_le_bytes(take(&mut r)?) as usize;
        let k = u32::from_le_bytes(take(&mut r)?) as usize;
        let seed = u64::from_le_bytes(take(&mut r)?);
        let pitch = f64::from_le_bytes(take(&mut r)?);
        let origin = (0..d).map(|_| Ok(f64::from_le_bytes(take(&mut r)?))).collect::<Result<Vec<_>>>()?;
        let shape = (0..d).map(|_| Ok(u64::from_le_bytes(take(&mut r)?) as usize)).collect::<Result<Vec<_>>>()?;
        let grid = GridSpec::new(origin, pitch, shape)?;
        let n = grid.len();
        let winners = (0..n).map(|_| Ok(Winner::from_code(u16::from_le_bytes(take(&mut r)?)))).collect::<Result<_>>()?;
        let times = (0..n).map(|_| Ok(f64::from_le_bytes(take(&mut r)?))).collect::<Result<_>>()?;
        Ok(TerritoryMap { grid, k, seed, winners, times, per_type: None })
    }

    /// CSV with one row per point. Winner column: type index `1..=k`, `-1`
    /// for a tie, `0` for unreached.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.grid.dim();
        let names: Vec<String> = if d == 2 {
            vec!["x".into(), "y".into()]
        } else {
            (0..d).map(|a| format!("x{a}")).collect()
        };
        writeln!(w, "{},winner,time", names.join(","))?;
        let mut p = vec![0.0; d];
        for i in 0..self.grid.len() {
            self.grid.point_into(i, &mut p);
            let code = match self.winners[i] {
                Winner::Type(j) => j as i64 + 1,
                Winner::Tie => -1,
                Winner::Unreached => 0,
            };
            for v in &p {
                write!(w, "{v},")?;
            }
            writeln!(w, "{code},{}", self.times[i])?;
        }
        Ok(())
    }
}

/// Colours for rasters.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    pub types: Vec<[u8; 3]>,
    pub tie: [u8; 3],
    pub unreached: [u8; 3],
    pub boundary: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            types: vec![
                [228, 26, 28],
                [55, 126, 184],
                [77, 175, 74],
                [152, 78, 163],
                [255, 127, 0],
                [166, 86, 40],
                [247, 129, 191],
                [153, 153, 153],
            ],
            tie: [255, 255, 255],
            unreached: [0, 0, 0],
            boundary: [255, 255, 51],
        }
    }
}

impl Palette {
    pub fn color(&self, w: Winner) -> [u8; 3] {
        match w {
            Winner::Type(i) => self.types[i % self.types.len()],
            Winner::Tie => self.tie,
            Winner::Unreached => self.unreached,
        }
    }
}

/// RGB image, row 0 at the top (largest second coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn get(&self, col: usize, row: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        for p in &self.pixels {
            w.write_all(p)?;
        }
        Ok(())
    }
}

/// Voronoi boundaries drawn over a raster: pixels whose centre lies in no
/// strict cell, or whose cell differs from that of the pixel to the left.
pub struct Overlay<'a> {
    pub sites: Vec<Vec<f64>>,
    pub norm: &'a Norm,
}

/// One pixel per grid point of a planar map.
pub fn territory_image(map: &TerritoryMap, palette: &Palette, overlay: Option<&Overlay>) -> Result<Raster> {
    if map.grid.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: map.grid.dim() });
    }
    let (width, height) = (map.grid.shape[0], map.grid.shape[1]);
    let cells = overlay.map(|o| VoronoiCells::from_points(o.sites.clone(), o.norm));
    let mut pixels = Vec::with_capacity(width * height);
    let mut p = [0.0; 2];
    for row in 0..height {
        let gy = height - 1 - row;
        let mut left: Option<Option<usize>> = None;
        for gx in 0..width {
            let idx = gy * width + gx;
            let mut c = palette.color(map.winners[idx]);
            if let Some(cells) = &cells {
                map.grid.point_into(idx, &mut p);
                let here = cells.cell_of(&p);
                let edge = match (here, left) {
                    (None, _) => true,
                    (Some(a), Some(Some(b))) => a != b,
                    _ => false,
                };
                if edge {
                    c = palette.boundary;
                }
                left = Some(here);
            }
            pixels.push(c);
        }
    }
    Ok(Raster { width, height, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(winners: Vec<Winner>, side: usize) -> TerritoryMap {
        let n = winners.len();
        TerritoryMap {
            grid: GridSpec::centered(&[0.0, 0.0], (side / 2) as f64, 1.0).unwrap(),
            k: 2,
            seed: 5,
            winners,
            times: (0..n).map(|i| i as f64 * 0.5).collect(),
            per_type: None,
        }
    }

    #[test]
    fn grid_points() {
        let g = GridSpec::centered(&[1.0, 0.0], 1.0, 0.5).unwrap();
        assert_eq!(g.shape, vec![5, 5]);
        assert_eq!(g.point(0), vec![0.0, -1.0]);
        assert_eq!(g.point(24), vec![2.0, 1.0]);
        assert_eq!(g.point(12), vec![1.0, 0.0]);
    }

    #[test]
    fn single_type_image() {
        let m = map(vec![Winner::Type(0); 9], 3);
        let pal = Palette::default();
        let img = territory_image(&m, &pal, None).unwrap();
        assert_eq!((img.width, img.height), (3, 3));
        assert!(img.pixels.iter().all(|p| *p == pal.types[0]));
    }

    #[test]
    fn one_tie_pixel() {
        let mut w = vec![Winner::Type(1); 9];
        w[4] = Winner::Tie;
        let pal = Palette::default();
        let img = territory_image(&map(w, 3), &pal, None).unwrap();
        assert_eq!(img.pixels.iter().filter(|p| **p == pal.tie).count(), 1);
    }

    #[test]
    fn bisector_overlay_is_centre_column() {
        let r = 4.0;
        let m = map(vec![Winner::Unreached; 81], 9);
        let pal = Palette::default();
        let norm = Norm::L2;
        let ov = Overlay { sites: vec![vec![-r, 0.0], vec![r, 0.0]], norm: &norm };
        let img = territory_image(&m, &pal, Some(&ov)).unwrap();
        for row in 0..9 {
            for col in 0..9 {
                assert_eq!(img.get(col, row) == pal.boundary, col == 4, "({col}, {row})");
            }
        }
    }

    #[test]
    fn rejects_non_planar() {
        let m = TerritoryMap {
            grid: GridSpec::new(vec![0.0; 3], 1.0, vec![1; 3]).unwrap(),
            k: 2,
            seed: 0,
            winners: vec![Winner::Tie],
            times: vec![0.0],
            per_type: None,
        };
        assert!(territory_image(&m, &Palette::default(), None).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let w = vec![Winner::Type(0), Winner::Type(1), Winner::Tie, Winner::Unreached, Winner::Type(0), Winner::Tie, Winner::Type(1), Winner::Type(1), Winner::Unreached];
        let mut m = map(w, 3);
        m.times[3] = f64::INFINITY;
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"TMAP");
        let back = TerritoryMap::read_binary(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert!(TerritoryMap::read_binary(&buf[..10]).is_err());
    }

    #[test]
    fn csv_codes() {
        let mut w = vec![Winner::Type(0); 9];
        w[0] = Winner::Tie;
        w[1] = Winner::Unreached;
        let mut buf = Vec::new();
        map(w, 3).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x,y,winner,time");
        assert_eq!(lines[1], "-1,-1,-1,0");
        assert_eq!(lines[2], "0,-1,0,0.5");
        assert_eq!(lines[3], "1,-1,1,1");
        assert_eq!(lines.len(), 10);
    }

    #[test]
    fn ppm_header() {
        let img = territory_image(&map(vec![Winner::Type(0); 9], 3), &Palette::default(), None).unwrap();
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n3 3\n255\n"));
        assert_eq!(buf.len(), 11 + 27);
    }
}
