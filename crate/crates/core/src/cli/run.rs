use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentKind, Format, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    assumption_audit, coexistence_experiment, density_experiment, line_competition_experiment, territory_snapshots,
    AuditReport, CoexistenceReport, LineReport, SnapshotSummary, TheoremReport,
};
use crate::geometry::Norm;
use crate::hash::derive_seed;
use crate::norm::{
    default_directions, estimate_norm, kingman_diagnostics, lambda_estimate, DirectionalSample, KingmanReport,
    LambdaEstimate, NormEstimate,
};
use crate::territory::{territory_image, Overlay, Palette, TerritoryMap};

/// Output directory override.
pub const ENV_OUT: &str = "TERRITORIES_OUT";
/// Worker count override.
pub const ENV_WORKERS: &str = "TERRITORIES_WORKERS";

const NORM_TAG: u64 = 0x6e6f_726d;
const LAMBDA_TAG: u64 = 0x6c61_6d62;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub estimate: NormEstimate,
    pub samples: Vec<DirectionalSample>,
    pub kingman: Vec<KingmanReport>,
    pub lambda: Option<LambdaEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerritoriesReport {
    pub norm: Norm,
    pub snapshots: Vec<SnapshotSummary>,
}

/// Fitted norm carried along with an experiment that needed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithNorm<T> {
    pub norm_fit: Option<NormReport>,
    pub result: T,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "report", rename_all = "snake_case")]
pub enum Report {
    Territories(WithNorm<TerritoriesReport>),
    Norm(NormReport),
    Density(WithNorm<TheoremReport>),
    Coexistence(WithNorm<CoexistenceReport>),
    Line(WithNorm<LineReport>),
    Audit(AuditReport),
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    /// One line per headline number.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        match self {
            Report::Territories(r) => {
                for snap in &r.result.snapshots {
                    let _ = writeln!(s, "R = {}: counts {:?}, agreement {:.4}", snap.scale, snap.counts, snap.agreement);
                }
            }
            Report::Norm(r) => {
                for o in &r.estimate.orbits {
                    let _ = writeln!(s, "{}: {:.4} ± {:.4}", fmt_vec(&o.representative, " "), o.value.mean, o.value.se);
                }
                let _ = writeln!(s, "orbits consistent: {}, subadditive: {}", r.estimate.orbits_consistent(), r.estimate.subadditive());
            }
            Report::Density(r) => {
                for g in &r.result.rungs {
                    let facets: Vec<String> = g
                        .sites
                        .iter()
                        .filter(|x| x.in_index_set)
                        .map(|x| {
                            let a = x.pointwise_density.map_or(f64::NAN, |m| m.mean);
                            let b = x.realization_density.map_or(f64::NAN, |m| m.mean);
                            format!("{a:.3}/{b:.3}")
                        })
                        .collect();
                    let _ = writeln!(s, "R = {}: {} all_exceed {:.3}", g.scale, facets.join(" "), g.all_exceed.mean);
                }
            }
            Report::Coexistence(r) => {
                for g in &r.result.rungs {
                    let _ = writeln!(
                        s,
                        "R = {}: P = {:.3} [{:.3}, {:.3}]",
                        g.scale, g.coexistence.mean, g.wilson.0, g.wilson.1
                    );
                }
            }
            Report::Line(r) => {
                let _ = writeln!(
                    s,
                    "passing fraction {:.3}, bound violations {} of {}",
                    r.result.passing_fraction, r.result.bound_violations, r.result.bound_checks
                );
            }
            Report::Audit(r) => {
                for i in &r.items {
                    let _ = writeln!(s, "{}: {} ({})", i.name, if i.pass { "pass" } else { "FAIL" }, i.detail);
                }
            }
        }
        s
    }
}

fn fmt_vec(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s.into_bytes()
}

fn norm_csvs(r: &NormReport) -> Vec<(String, Vec<u8>)> {
    let orbits = csv(
        "direction,members,value,se,positive",
        r.estimate.orbits.iter().map(|o| {
            format!("{},{},{},{},{}", fmt_vec(&o.representative, " "), o.members.len(), o.value.mean, o.value.se, o.positive)
        }),
    );
    let dirs = csv(
        "direction,value,se,consistent",
        r.estimate
            .orbits
            .iter()
            .flat_map(|o| &o.members)
            .map(|m| format!("{},{},{},{}", fmt_vec(&m.direction, " "), m.value.mean, m.value.se, m.consistent)),
    );
    let ratios = csv(
        "direction,k,length,ratio,se,truncated",
        r.samples.iter().flat_map(|d| {
            (0..d.k_max).map(move |k| {
                format!(
                    "{},{},{},{},{},{}",
                    fmt_vec(&d.direction, " "),
                    k + 1,
                    d.lengths[k],
                    d.ratios[k].mean,
                    d.ratios[k].se,
                    d.truncated[k]
                )
            })
        }),
    );
    vec![("norm_orbits.csv".into(), orbits), ("norm_directions.csv".into(), dirs), ("norm_ratios.csv".into(), ratios)]
}

/// CSV tables derived from a report, as `(file name, bytes)`.
pub fn report_tables(report: &Report) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let fit = match report {
        Report::Territories(r) => r.norm_fit.as_ref(),
        Report::Density(r) => r.norm_fit.as_ref(),
        Report::Coexistence(r) => r.norm_fit.as_ref(),
        Report::Line(r) => r.norm_fit.as_ref(),
        _ => None,
    };
    if let Some(f) = fit {
        out.extend(norm_csvs(f));
    }
    match report {
        Report::Territories(r) => {
            let k = r.result.snapshots.first().map_or(0, |s| s.counts.len());
            let header = (0..k).fold("radius,ties,unreached,truncated,agreement".to_string(), |h, i| h + &format!(",count_{i}"));
            out.push((
                "territories.csv".into(),
                csv(
                    &header,
                    r.result.snapshots.iter().map(|s| {
                        let counts: String = s.counts.iter().map(|c| format!(",{c}")).collect();
                        format!("{},{},{},{},{}{counts}", s.scale, s.ties, s.unreached, s.truncated, s.agreement)
                    }),
                ),
            ));
        }
        Report::Norm(r) => out.extend(norm_csvs(r)),
        Report::Density(r) => {
            let t = &r.result;
            for i in 0..t.sites.len() {
                let mut buf = Vec::new();
                t.write_site_csv(i, &mut buf)?;
                out.push((format!("site_{i}.csv"), buf));
            }
            out.push((
                "rungs.csv".into(),
                csv(
                    "radius,all_exceed,all_exceed_se,wilson_lo,wilson_hi,grid_points,truncated_points",
                    t.rungs.iter().map(|g| {
                        format!(
                            "{},{},{},{},{},{},{}",
                            g.scale,
                            g.all_exceed.mean,
                            g.all_exceed.se,
                            g.all_exceed_wilson.0,
                            g.all_exceed_wilson.1,
                            g.grid_points,
                            g.truncated_points
                        )
                    }),
                ),
            ));
        }
        Report::Coexistence(r) => {
            let k = r.result.sites.len();
            let header = (0..k).fold(
                "radius,shell_radius,probability,se,wilson_lo,wilson_hi".to_string(),
                |h, i| h + &format!(",reach_{i}"),
            );
            out.push((
                "coexistence.csv".into(),
                csv(
                    &header,
                    r.result.rungs.iter().map(|g| {
                        let per: String = g.per_type.iter().map(|m| format!(",{}", m.mean)).collect();
                        format!(
                            "{},{},{},{},{},{}{per}",
                            g.scale, g.shell_radius, g.coexistence.mean, g.coexistence.se, g.wilson.0, g.wilson.1
                        )
                    }),
                ),
            ));
        }
        Report::Line(r) => {
            out.push((
                "line.csv".into(),
                csv(
                    "alpha,probability,se,pass,mean_ratio,mean_ratio_se",
                    r.result.points.iter().map(|p| {
                        format!(
                            "{},{},{},{},{},{}",
                            p.alpha, p.probability.mean, p.probability.se, p.pass, p.mean_ratio.mean, p.mean_ratio.se
                        )
                    }),
                ),
            ));
        }
        Report::Audit(r) => {
            out.push((
                "audit.csv".into(),
                csv(
                    "name,pass,checked,violations",
                    r.items.iter().map(|i| format!("{},{},{},{}", i.name, i.pass, i.checked, i.violations)),
                ),
            ));
            out.push((
                "ks.csv".into(),
                csv(
                    "kind,offset,p_value",
                    r.ks.iter().flat_map(|f| {
                        f.offsets.iter().zip(&f.p_values).map(|(o, p)| format!("{},{},{p}", f.kind, fmt_vec(o, " ")))
                    }),
                ),
            ));
        }
    }
    Ok(out)
}

/// Planar map as PPM bytes, with the cells of `sources` outlined.
pub fn map_image(map: &TerritoryMap, sources: Option<(&[Vec<f64>], &Norm)>) -> Result<Vec<u8>> {
    let overlay = sources.map(|(s, norm)| Overlay { sites: s.to_vec(), norm });
    let raster = territory_image(map, &Palette::default(), overlay.as_ref())?;
    let mut buf = Vec::new();
    raster.write_ppm(&mut buf)?;
    Ok(buf)
}

fn fit_norm_for(cfg: &RunConfig) -> Result<NormReport> {
    let model = &cfg.model;
    let lambda = if cfg.lambda {
        Some(lambda_estimate(model, cfg.norm_reps, derive_seed(cfg.seed, &[LAMBDA_TAG]), 0.25, &[1.0, 2.0, 5.0])?)
    } else {
        None
    };
    let dirs = cfg.directions.clone().unwrap_or_else(|| default_directions(model));
    let (samples, estimate) = estimate_norm(
        model,
        &dirs,
        cfg.norm_k_max,
        cfg.norm_step,
        cfg.norm_reps,
        derive_seed(cfg.seed, &[NORM_TAG]),
        cfg.symmetry,
        lambda.as_ref().map(|l| l.lambda),
    )?;
    let kingman = samples.iter().map(|s| kingman_diagnostics(s, model.rounding_unit())).collect();
    Ok(NormReport { estimate, samples, kingman, lambda })
}

fn resolve_norm(cfg: &RunConfig) -> Result<(Norm, Option<NormReport>)> {
    match cfg.fixed_norm() {
        Some(n) => Ok((n, None)),
        None => {
            let fit = fit_norm_for(cfg)?;
            Ok((fit.estimate.to_norm()?, Some(fit)))
        }
    }
}

/// Snapshots kept beside a report: name, map, sources and norm for the
/// overlay.
struct Extras {
    maps: Vec<(String, TerritoryMap, Vec<Vec<f64>>)>,
    norm: Option<Norm>,
}

/// Run the experiment of `cfg` in memory.
fn compute(cfg: &RunConfig) -> Result<(Report, Extras)> {
    let mut extras = Extras { maps: Vec::new(), norm: None };
    let report = match cfg.experiment {
        ExperimentKind::Norm => Report::Norm(fit_norm_for(cfg)?),
        ExperimentKind::Audit => Report::Audit(assumption_audit(&cfg.model, &cfg.audit, cfg.seed)?),
        ExperimentKind::Territories => {
            let (norm, norm_fit) = resolve_norm(cfg)?;
            let snaps = territory_snapshots(&cfg.plan(), &norm)?;
            for (i, s) in snaps.iter().enumerate() {
                extras.maps.push((format!("snapshot_{i}"), s.map.clone(), s.summary.sources.clone()));
            }
            extras.norm = Some(norm.clone());
            let snapshots = snaps.into_iter().map(|s| s.summary).collect();
            Report::Territories(WithNorm { norm_fit, result: TerritoriesReport { norm, snapshots } })
        }
        ExperimentKind::Theorem11 | ExperimentKind::Theorem12 => {
            let (norm, norm_fit) = resolve_norm(cfg)?;
            let run = density_experiment(&cfg.plan(), &norm)?;
            for (i, (scale, map)) in run.snapshots.into_iter().enumerate() {
                let sources = run.report.sites.iter().map(|s| s.iter().map(|v| v * scale).collect()).collect();
                extras.maps.push((format!("snapshot_{i}"), map, sources));
            }
            extras.norm = Some(norm);
            Report::Density(WithNorm { norm_fit, result: run.report })
        }
        ExperimentKind::Coexistence => {
            let (norm, norm_fit) = resolve_norm(cfg)?;
            Report::Coexistence(WithNorm { norm_fit, result: coexistence_experiment(&cfg.plan(), &norm)? })
        }
        ExperimentKind::Line => {
            let (norm, norm_fit) = resolve_norm(cfg)?;
            let result = line_competition_experiment(
                &cfg.model,
                &cfg.line_x,
                cfg.line_lambda,
                cfg.epsilon,
                cfg.reps,
                cfg.line_grid,
                Some(norm.eval(&cfg.line_x)),
                cfg.seed,
            )?;
            Report::Line(WithNorm { norm_fit, result })
        }
    };
    Ok((report, extras))
}

/// Run `f` on a pool of `workers` threads (the global pool when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Worker count from the environment, if set.
pub fn env_workers() -> Result<Option<usize>> {
    match std::env::var(ENV_WORKERS) {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::config(ENV_WORKERS, format!("expected a positive integer, got `{s}`"))),
    }
}

/// Output directory: the environment override, else the config's.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(ENV_OUT).map(PathBuf::from).unwrap_or_else(|| cfg.output.clone())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    /// SHA-256 of the resolved config text.
    pub config_sha256: String,
    pub files: Vec<FileEntry>,
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: Report,
    pub manifest: Manifest,
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<FileEntry>> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, bytes)| {
            fs::write(dir.join(name), bytes)?;
            Ok(FileEntry { name: name.clone(), bytes: bytes.len(), sha256: sha256_hex(bytes) })
        })
        .collect()
}

/// Run the experiment and write everything into `dir`: the resolved
/// config, `report.json`, tables, snapshots and `manifest.json`. On
/// failure `error.json` is written instead and the error returned.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let resolved = cfg.resolved();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("resolved.cfg"), &resolved)?;
    let (report, extras) = match compute(cfg) {
        Ok(r) => r,
        Err(e) => {
            let body = serde_json::json!({ "error": e.to_string(), "field": match &e { Error::Config { field, .. } => Some(field.clone()), _ => None } });
            fs::write(dir.join("error.json"), serde_json::to_string_pretty(&body)?)?;
            return Err(e);
        }
    };
    let mut files = vec![("resolved.cfg".to_string(), resolved.clone().into_bytes())];
    if cfg.formats.contains(&Format::Json) {
        files.push(("report.json".into(), report.to_json()?.into_bytes()));
    }
    if cfg.formats.contains(&Format::Csv) {
        files.extend(report_tables(&report)?);
    }
    for (name, map, sources) in &extras.maps {
        let mut tmap = Vec::new();
        map.write_binary(&mut tmap)?;
        files.push((format!("{name}.tmap"), tmap));
        if cfg.formats.contains(&Format::Ppm) && map.grid.dim() == 2 {
            let overlay = extras.norm.as_ref().map(|n| (sources.as_slice(), n));
            files.push((format!("{name}.ppm"), map_image(map, overlay)?));
        }
    }
    let entries = write_all(dir, &files)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.name().into(),
        seed: cfg.seed,
        config_sha256: sha256_hex(resolved.as_bytes()),
        files: entries,
        wall_seconds: start.elapsed().as_secs_f64(),
        warnings: cfg.warnings.clone(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunOutcome { dir: dir.to_path_buf(), report, manifest })
}

/// Sources and norm for the overlay of `snapshot_<i>.tmap`, read from the
/// `report.json` beside it when there is one.
fn snapshot_overlay(tmap: &Path) -> Option<(Vec<Vec<f64>>, Norm)> {
    let i: usize = tmap.file_stem()?.to_str()?.strip_prefix("snapshot_")?.parse().ok()?;
    let text = fs::read_to_string(tmap.with_file_name("report.json")).ok()?;
    match Report::from_json(&text).ok()? {
        Report::Territories(r) => Some((r.result.snapshots.get(i)?.sources.clone(), r.result.norm)),
        Report::Density(r) => {
            let scale = r.result.rungs.get(i)?.scale;
            let sources = r.result.sites.iter().map(|s| s.iter().map(|v| v * scale).collect()).collect();
            Some((sources, r.result.norm))
        }
        _ => None,
    }
}

/// Tables for a `report.json`, or a PPM for a `.tmap`, written next to the
/// input unless `out` is given, together with `render_manifest.json`.
/// Returns the paths written.
pub fn render(input: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let bytes = fs::read(input)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    let files = if bytes.starts_with(b"TMAP") {
        let map = TerritoryMap::read_binary(bytes.as_slice())?;
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("map");
        let overlay = snapshot_overlay(input);
        let image = map_image(&map, overlay.as_ref().map(|(s, n)| (s.as_slice(), n)))?;
        vec![(format!("{stem}.ppm"), image)]
    } else {
        let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Schema("report is not UTF-8".into()))?;
        report_tables(&Report::from_json(&text)?)?
    };
    let entries = write_all(&dir, &files)?;
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "source": input.display().to_string(),
        "source_sha256": sha256_hex(&bytes),
        "files": entries,
    });
    fs::write(dir.join("render_manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(files.iter().map(|(n, _)| dir.join(n)).collect())
}

/// Run the config once per seed in `seeds`, each into `seed_<s>/` below the
/// output directory, and write `seed_scan.csv` with one summary row each.
pub fn seed_scan(cfg: &RunConfig, dir: &Path, seeds: std::ops::RangeInclusive<u64>) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for s in seeds {
        let mut c = cfg.clone();
        c.seed = s;
        let sub = dir.join(format!("seed_{s}"));
        let outcome = run_to_dir(&c, &sub)?;
        rows.push(format!("{s},{},{}", headline(&outcome.report), outcome.manifest.config_sha256));
    }
    let path = dir.join("seed_scan.csv");
    let table = csv("seed,headline,config_sha256", rows);
    let entries = write_all(dir, &[("seed_scan.csv".to_string(), table)])?;
    let manifest = serde_json::json!({ "version": env!("CARGO_PKG_VERSION"), "files": entries });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// A single number summarising a report, for scans.
pub fn headline(report: &Report) -> f64 {
    match report {
        Report::Territories(r) => r.result.snapshots.last().map_or(f64::NAN, |s| s.agreement),
        Report::Norm(r) => r.estimate.orbits.first().map_or(f64::NAN, |o| o.value.mean),
        Report::Density(r) => r.result.rungs.last().map_or(f64::NAN, |g| g.all_exceed.mean),
        Report::Coexistence(r) => r.result.rungs.last().map_or(f64::NAN, |g| g.coexistence.mean),
        Report::Line(r) => r.result.passing_fraction,
        Report::Audit(r) => r.ks_share(),
    }
}

/// Parse `a..b` (inclusive).
pub fn parse_seed_range(s: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let bad = || Error::config("seeds", format!("expected `a..b` with a <= b, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = "experiment = theorem11
model = lattice
weights = constant
sites = -1, 0; 1, 0
ladder = 4, 6
reps = 2
norm = l1
";

    #[test]
    fn run_writes_report_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::parse(CFG).unwrap();
        let out = run_to_dir(&cfg, dir.path()).unwrap();
        for f in ["resolved.cfg", "report.json", "manifest.json", "site_0.csv", "rungs.csv", "snapshot_0.tmap", "snapshot_1.ppm"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert_eq!(Report::from_json(&text).unwrap().to_json().unwrap(), text);
        let m = &out.manifest;
        assert_eq!(m.config_sha256, sha256_hex(cfg.resolved().as_bytes()));
        let entry = m.files.iter().find(|f| f.name == "report.json").unwrap();
        assert_eq!(entry.sha256, sha256_hex(text.as_bytes()));
        assert_eq!(headline(&out.report), 1.0);
    }

    #[test]
    fn render_regenerates_tables_and_images() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::parse(CFG).unwrap();
        run_to_dir(&cfg, dir.path()).unwrap();
        let again = dir.path().join("again");
        let written = render(&dir.path().join("report.json"), Some(&again)).unwrap();
        assert!(written.iter().any(|p| p.ends_with("site_1.csv")));
        assert_eq!(fs::read(again.join("site_0.csv")).unwrap(), fs::read(dir.path().join("site_0.csv")).unwrap());
        let ppm = render(&dir.path().join("snapshot_0.tmap"), Some(&again)).unwrap();
        assert!(fs::read(&ppm[0]).unwrap().starts_with(b"P6\n"));
    }

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seed_range("3..5").unwrap(), 3..=5);
        assert!(parse_seed_range("5..3").is_err());
        assert!(parse_seed_range("x").is_err());
    }
}
