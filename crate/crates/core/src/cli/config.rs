use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::continuum::RadiusLaw;
use crate::error::{Error, Result};
use crate::experiments::{AuditOptions, ExperimentPlan, DEFAULT_BOX_FACTOR, DEFAULT_GUARD_FACTOR};
use crate::geometry::Norm;
use crate::lattice::EdgeWeightDistribution;
use crate::norm::{ContinuumModel, LatticeModel, Model, Symmetry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Territories,
    Norm,
    Theorem11,
    Theorem12,
    Coexistence,
    Line,
    Audit,
}

impl ExperimentKind {
    const ALL: [(&'static str, ExperimentKind); 7] = [
        ("territories", ExperimentKind::Territories),
        ("norm", ExperimentKind::Norm),
        ("theorem11", ExperimentKind::Theorem11),
        ("theorem12", ExperimentKind::Theorem12),
        ("coexistence", ExperimentKind::Coexistence),
        ("line", ExperimentKind::Line),
        ("audit", ExperimentKind::Audit),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap_or("")
    }

    fn needs_sites(self) -> bool {
        matches!(self, Self::Territories | Self::Theorem11 | Self::Theorem12 | Self::Coexistence)
    }
}

/// Norm used for the Voronoi cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    /// Estimate it from directional passage times first.
    Estimate,
    L1,
    L2,
    LInf,
    Euclid(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Ppm,
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub model: Model,
    pub sites: Vec<Vec<f64>>,
    pub unit_sphere: bool,
    pub ladder: Vec<f64>,
    pub reps: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub box_factor: f64,
    pub guard_factor: f64,
    pub grid_pitch: Option<f64>,
    pub shell_factor: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub formats: Vec<Format>,
    pub norm: NormChoice,
    pub norm_k_max: usize,
    pub norm_step: f64,
    pub norm_reps: usize,
    pub directions: Option<Vec<Vec<f64>>>,
    pub symmetry: Symmetry,
    pub lambda: bool,
    pub line_x: Vec<f64>,
    pub line_lambda: f64,
    pub line_grid: usize,
    pub audit: AuditOptions,
    /// Warnings raised while validating (e.g. a large zero atom).
    pub warnings: Vec<String>,
}

/// Every key the parser accepts, in the order the resolved config lists
/// them.
pub const KEYS: &[&str] = &[
    "experiment",
    "model",
    "dim",
    "weights",
    "rate",
    "value",
    "low",
    "high",
    "p_zero",
    "radius_law",
    "radius",
    "radius_rate",
    "radius_cap",
    "mesh_pitch",
    "sites",
    "unit_sphere",
    "ladder",
    "reps",
    "epsilon",
    "delta",
    "box_factor",
    "guard_factor",
    "grid_pitch",
    "shell_factor",
    "seed",
    "output",
    "formats",
    "norm",
    "norm_k_max",
    "norm_step",
    "norm_reps",
    "directions",
    "symmetry",
    "lambda",
    "line_x",
    "line_lambda",
    "line_grid",
    "audit_samples",
    "audit_tuples",
    "audit_shifts",
    "audit_rotations",
    "audit_probe",
];

/// Split `key = value` lines; `#` starts a comment line.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", no + 1), "expected `key = value`"))?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::config(k, "unknown key"));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::config(k, "given more than once"));
        }
    }
    Ok(out)
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::config(key, "required field missing"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::config(key, format!("cannot parse `{s}`"))),
        }
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.parse(key, default)?;
        if !v.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.real(key, default)?;
        if v <= 0.0 {
            return Err(Error::config(key, "must be positive"));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v: usize = self.parse(key, default)?;
        if v == 0 {
            return Err(Error::config(key, "must be at least 1"));
        }
        Ok(v)
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(s) => Err(Error::config(key, format!("expected true or false, got `{s}`"))),
        }
    }

    fn vector(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(|s| parse_vector(key, s)).transpose()
    }

    fn points(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        self.raw(key)
            .map(|s| s.split(';').map(|p| parse_vector(key, p)).collect::<Result<Vec<_>>>())
            .transpose()
    }
}

fn parse_vector(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::config(key, format!("cannot parse number `{t}`")))
        })
        .collect()
}

fn fmt_vector(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn fmt_points(p: &[Vec<f64>]) -> String {
    p.iter().map(|v| fmt_vector(v)).collect::<Vec<_>>().join("; ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let f = Fields { map: parse_pairs(text)? };
        let experiment = {
            let s = f.required("experiment")?;
            ExperimentKind::ALL
                .iter()
                .find(|(n, _)| *n == s)
                .map(|(_, k)| *k)
                .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))?
        };
        let dim: usize = f.parse("dim", 2)?;
        if dim < 2 {
            return Err(Error::config("dim", "must be at least 2"));
        }
        let mut warnings = Vec::new();
        let model = match f.required("model")? {
            "lattice" => {
                let dist = match f.raw("weights").unwrap_or("exponential") {
                    "exponential" => EdgeWeightDistribution::Exponential { rate: f.positive("rate", 1.0)? },
                    "constant" => EdgeWeightDistribution::Constant { value: f.real("value", 1.0)? },
                    "uniform" => EdgeWeightDistribution::Uniform { low: f.real("low", 0.0)?, high: f.real("high", 1.0)? },
                    "atom_mixture" => EdgeWeightDistribution::AtomMixture {
                        p_zero: f.real("p_zero", 0.0)?,
                        rate: f.positive("rate", 1.0)?,
                    },
                    s => return Err(Error::config("weights", format!("unknown distribution `{s}`"))),
                };
                warnings.extend(
                    dist.validate(dim, None)
                        .map_err(|e| Error::config("weights", e.to_string()))?,
                );
                Model::Lattice(LatticeModel::new(dim, dist))
            }
            "continuum" => {
                let law = match f.raw("radius_law").unwrap_or("constant") {
                    "constant" => RadiusLaw::Constant { radius: f.positive("radius", 1.0)? },
                    "exponential" => RadiusLaw::Exponential { rate: f.positive("radius_rate", 1.0)? },
                    "truncated_exponential" => RadiusLaw::TruncatedExponential {
                        rate: f.positive("radius_rate", 1.0)?,
                        cap: f.positive("radius_cap", 5.0)?,
                    },
                    s => return Err(Error::config("radius_law", format!("unknown radius law `{s}`"))),
                };
                law.validate().map_err(|e| Error::config("radius_law", e.to_string()))?;
                let mut m = ContinuumModel::new(dim, law);
                m.mesh_pitch = f.positive("mesh_pitch", m.mesh_pitch)?;
                Model::Continuum(m)
            }
            s => return Err(Error::config("model", format!("expected lattice or continuum, got `{s}`"))),
        };
        match (experiment, model.is_lattice()) {
            (ExperimentKind::Theorem11, false) => {
                return Err(Error::config("model", "theorem11 runs on the lattice model"));
            }
            (ExperimentKind::Theorem12, true) => {
                return Err(Error::config("model", "theorem12 runs on the continuum model"));
            }
            _ => {}
        }
        let sites = match f.points("sites")? {
            Some(s) => s,
            None if experiment.needs_sites() => return Err(Error::config("sites", "required field missing")),
            None => Vec::new(),
        };
        if sites.iter().any(|s| s.len() != dim) {
            return Err(Error::config("sites", format!("every site needs {dim} coordinates")));
        }
        let ladder = f.vector("ladder")?.unwrap_or_else(|| vec![16.0, 32.0, 64.0]);
        let formats = f
            .raw("formats")
            .unwrap_or("json, csv, ppm")
            .split(',')
            .map(|s| match s.trim() {
                "json" => Ok(Format::Json),
                "csv" => Ok(Format::Csv),
                "ppm" => Ok(Format::Ppm),
                o => Err(Error::config("formats", format!("unknown format `{o}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let norm = match f.raw("norm").unwrap_or("estimate") {
            "estimate" => NormChoice::Estimate,
            "l1" => NormChoice::L1,
            "l2" => NormChoice::L2,
            "linf" => NormChoice::LInf,
            s => match s.strip_prefix("euclid:").and_then(|v| v.trim().parse::<f64>().ok()) {
                Some(v) if v > 0.0 && v.is_finite() => NormChoice::Euclid(v),
                _ => return Err(Error::config("norm", format!("unknown norm `{s}`"))),
            },
        };
        let symmetry = match f.raw("symmetry") {
            None if model.is_lattice() => Symmetry::Hyperoctahedral,
            None => Symmetry::Rotational,
            Some("hyperoctahedral") => Symmetry::Hyperoctahedral,
            Some("rotational") => Symmetry::Rotational,
            Some("none") => Symmetry::None,
            Some(s) => return Err(Error::config("symmetry", format!("unknown symmetry `{s}`"))),
        };
        let directions = f.points("directions")?;
        if let Some(d) = &directions {
            if d.iter().any(|v| v.len() != dim || v.iter().all(|x| *x == 0.0)) {
                return Err(Error::config("directions", format!("directions must be non-zero with {dim} coordinates")));
            }
        }
        let line_x = f.vector("line_x")?.unwrap_or_else(|| {
            let mut v = vec![0.0; dim];
            v[0] = 32.0;
            v
        });
        if line_x.len() != dim {
            return Err(Error::config("line_x", format!("needs {dim} coordinates")));
        }
        let defaults = AuditOptions::default();
        let audit = AuditOptions {
            n_samples: f.count("audit_samples", defaults.n_samples)?,
            tuples: f.count("audit_tuples", defaults.tuples)?,
            shifts: f.count("audit_shifts", defaults.shifts)?,
            rotations: f.count("audit_rotations", defaults.rotations)?,
            probe_length: f.positive("audit_probe", defaults.probe_length)?,
            ..defaults
        };
        let cfg = RunConfig {
            experiment,
            model,
            sites,
            unit_sphere: f.flag("unit_sphere", false)?,
            ladder,
            reps: f.count("reps", 100)?,
            epsilon: f.real("epsilon", 0.15)?,
            delta: f.real("delta", 0.0)?,
            box_factor: f.positive("box_factor", DEFAULT_BOX_FACTOR)?,
            guard_factor: f.real("guard_factor", DEFAULT_GUARD_FACTOR)?,
            grid_pitch: f.raw("grid_pitch").map(|_| f.positive("grid_pitch", 1.0)).transpose()?,
            shell_factor: f.positive("shell_factor", 1.0)?,
            seed: f.parse("seed", 1)?,
            output: PathBuf::from(f.raw("output").unwrap_or("out")),
            formats,
            norm,
            norm_k_max: f.count("norm_k_max", 16)?,
            norm_step: f.positive("norm_step", 8.0)?,
            norm_reps: f.count("norm_reps", 32)?,
            directions,
            symmetry,
            lambda: f.flag("lambda", false)?,
            line_x,
            line_lambda: f.positive("line_lambda", 8.0)?,
            line_grid: f.count("line_grid", 21)?,
            audit,
            warnings,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.norm_k_max < 4 {
            return Err(Error::config("norm_k_max", "must be at least 4"));
        }
        if self.line_grid < 2 {
            return Err(Error::config("line_grid", "must be at least 2"));
        }
        if self.norm_reps < 2 {
            return Err(Error::config("norm_reps", "must be at least 2"));
        }
        if self.experiment.needs_sites() {
            let plan = self.plan();
            plan.validate().map_err(|e| {
                let field = match &e {
                    Error::TooFewSites(_) | Error::DuplicateSites(..) | Error::Dimension { .. } => "sites",
                    Error::Invalid(m) if m.contains("ladder") => "ladder",
                    Error::Invalid(m) if m.contains("epsilon") => "epsilon",
                    Error::Invalid(m) if m.contains("delta") => "delta",
                    Error::Invalid(m) if m.contains("grid pitch") => "grid_pitch",
                    Error::Invalid(m) if m.contains("shell") => "shell_factor",
                    _ => "box_factor",
                };
                Error::config(field, e.to_string())
            })?;
        }
        if matches!(self.experiment, ExperimentKind::Line | ExperimentKind::Coexistence | ExperimentKind::Theorem11 | ExperimentKind::Theorem12)
            && !(self.epsilon > 0.0 && self.epsilon < 1.0)
        {
            return Err(Error::config("epsilon", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            model: self.model.clone(),
            sites: self.sites.clone(),
            on_unit_sphere: self.unit_sphere,
            ladder: self.ladder.clone(),
            n_reps: self.reps,
            epsilon: self.epsilon,
            delta: self.delta,
            box_factor: self.box_factor,
            guard_factor: self.guard_factor,
            grid_pitch: self.grid_pitch,
            shell_factor: self.shell_factor,
            seed: self.seed,
        }
    }

    /// The fixed norm, when one is configured.
    pub fn fixed_norm(&self) -> Option<Norm> {
        match self.norm {
            NormChoice::Estimate => None,
            NormChoice::L1 => Some(Norm::L1),
            NormChoice::L2 => Some(Norm::L2),
            NormChoice::LInf => Some(Norm::LInf),
            NormChoice::Euclid(f) => Some(Norm::ScaledEuclidean { factor: f }),
        }
    }

    /// Every key with its effective value, defaults included. Parsing the
    /// result gives back the same config.
    pub fn resolved(&self) -> String {
        let mut kv: Vec<(&str, String)> = vec![("experiment", self.experiment.name().into())];
        match &self.model {
            Model::Lattice(m) => {
                kv.push(("model", "lattice".into()));
                kv.push(("dim", m.dim.to_string()));
                match m.distribution {
                    EdgeWeightDistribution::Exponential { rate } => {
                        kv.push(("weights", "exponential".into()));
                        kv.push(("rate", rate.to_string()));
                    }
                    EdgeWeightDistribution::Constant { value } => {
                        kv.push(("weights", "constant".into()));
                        kv.push(("value", value.to_string()));
                    }
                    EdgeWeightDistribution::Uniform { low, high } => {
                        kv.push(("weights", "uniform".into()));
                        kv.push(("low", low.to_string()));
                        kv.push(("high", high.to_string()));
                    }
                    EdgeWeightDistribution::AtomMixture { p_zero, rate } => {
                        kv.push(("weights", "atom_mixture".into()));
                        kv.push(("p_zero", p_zero.to_string()));
                        kv.push(("rate", rate.to_string()));
                    }
                }
            }
            Model::Continuum(m) => {
                kv.push(("model", "continuum".into()));
                kv.push(("dim", m.dim.to_string()));
                match m.law {
                    RadiusLaw::Constant { radius } => {
                        kv.push(("radius_law", "constant".into()));
                        kv.push(("radius", radius.to_string()));
                    }
                    RadiusLaw::Exponential { rate } => {
                        kv.push(("radius_law", "exponential".into()));
                        kv.push(("radius_rate", rate.to_string()));
                    }
                    RadiusLaw::TruncatedExponential { rate, cap } => {
                        kv.push(("radius_law", "truncated_exponential".into()));
                        kv.push(("radius_rate", rate.to_string()));
                        kv.push(("radius_cap", cap.to_string()));
                    }
                }
                kv.push(("mesh_pitch", m.mesh_pitch.to_string()));
            }
        }
        if !self.sites.is_empty() {
            kv.push(("sites", fmt_points(&self.sites)));
        }
        kv.push(("unit_sphere", self.unit_sphere.to_string()));
        kv.push(("ladder", fmt_vector(&self.ladder)));
        kv.push(("reps", self.reps.to_string()));
        kv.push(("epsilon", self.epsilon.to_string()));
        kv.push(("delta", self.delta.to_string()));
        kv.push(("box_factor", self.box_factor.to_string()));
        kv.push(("guard_factor", self.guard_factor.to_string()));
        if let Some(p) = self.grid_pitch {
            kv.push(("grid_pitch", p.to_string()));
        }
        kv.push(("shell_factor", self.shell_factor.to_string()));
        kv.push(("seed", self.seed.to_string()));
        kv.push(("output", self.output.display().to_string()));
        let formats: Vec<&str> = self
            .formats
            .iter()
            .map(|f| match f {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Ppm => "ppm",
            })
            .collect();
        kv.push(("formats", formats.join(", ")));
        kv.push((
            "norm",
            match self.norm {
                NormChoice::Estimate => "estimate".into(),
                NormChoice::L1 => "l1".into(),
                NormChoice::L2 => "l2".into(),
                NormChoice::LInf => "linf".into(),
                NormChoice::Euclid(v) => format!("euclid:{v}"),
            },
        ));
        kv.push(("norm_k_max", self.norm_k_max.to_string()));
        kv.push(("norm_step", self.norm_step.to_string()));
        kv.push(("norm_reps", self.norm_reps.to_string()));
        if let Some(d) = &self.directions {
            kv.push(("directions", fmt_points(d)));
        }
        kv.push((
            "symmetry",
            match self.symmetry {
                Symmetry::Hyperoctahedral => "hyperoctahedral",
                Symmetry::Rotational => "rotational",
                Symmetry::None => "none",
            }
            .into(),
        ));
        kv.push(("lambda", self.lambda.to_string()));
        kv.push(("line_x", fmt_vector(&self.line_x)));
        kv.push(("line_lambda", self.line_lambda.to_string()));
        kv.push(("line_grid", self.line_grid.to_string()));
        kv.push(("audit_samples", self.audit.n_samples.to_string()));
        kv.push(("audit_tuples", self.audit.tuples.to_string()));
        kv.push(("audit_shifts", self.audit.shifts.to_string()));
        kv.push(("audit_rotations", self.audit.rotations.to_string()));
        kv.push(("audit_probe", self.audit.probe_length.to_string()));
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
# two sources on the axis
experiment = theorem11
model = lattice
weights = exponential
sites = -1, 0; 1, 0
ladder = 8, 16
reps = 10
";

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(BASIC).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Theorem11);
        assert_eq!(c.sites, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(c.ladder, vec![8.0, 16.0]);
        assert_eq!(c.box_factor, 3.0);
        let again = RunConfig::parse(&c.resolved()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.resolved(), c.resolved());
    }

    #[test]
    fn missing_model_names_the_field() {
        let e = RunConfig::parse("experiment = norm\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "model"), "{e}");
    }

    #[test]
    fn field_level_errors() {
        let field = |text: &str| match RunConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("experiment = norm\nmodel = lattice\nbogus = 1\n"), "bogus");
        assert_eq!(field("experiment = norm\nmodel = lattice\nrate = -1\n"), "rate");
        assert_eq!(field("experiment = norm\nmodel = torus\n"), "model");
        assert_eq!(field("experiment = theorem12\nmodel = lattice\nsites = 1,0;-1,0\n"), "model");
        assert_eq!(field("experiment = coexistence\nmodel = lattice\n"), "sites");
        assert_eq!(field("experiment = coexistence\nmodel = lattice\nsites = 1,0;1,0\n"), "sites");
        assert_eq!(field("experiment = norm\nmodel = lattice\nseed = 1\nseed = 2\n"), "seed");
        assert_eq!(field("experiment = norm\nmodel = lattice\nladder = 4, x\n"), "ladder");
        assert_eq!(field("experiment = norm\nmodel = lattice\nnorm = taxicab\n"), "norm");
        assert_eq!(field("experiment = norm\nmodel = lattice\nno equals sign\n"), "line 3");
    }

    #[test]
    fn continuum_defaults() {
        let c = RunConfig::parse("experiment = norm\nmodel = continuum\nradius_law = exponential\n").unwrap();
        assert_eq!(c.symmetry, Symmetry::Rotational);
        assert!(matches!(c.model, Model::Continuum(ref m) if m.law == RadiusLaw::Exponential { rate: 1.0 }));
        assert_eq!(RunConfig::parse(&c.resolved()).unwrap(), c);
    }
}
