//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion names (`C1` ... `C9`) as
//! arguments to run a subset.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use territories::cli::{run_to_dir, with_workers, RunConfig};
use territories::continuum::{
    ball_sample_points, continuum_passage_time, simulate_outbursts, Ball, EventGraphIndex, OutburstEventSet, RadiusLaw,
    Window,
};
use territories::experiments::{
    assumption_audit, coexistence_experiment, density_experiment, line_competition_experiment, AuditOptions,
    AuditReport, ExperimentPlan,
};
use territories::geometry::{homothety_stability_check, translate_stability_check, Norm, VoronoiCells};
use territories::lattice::{first_passage_times, EdgeWeightDistribution, LatticeBox, PassageTimeField};
use territories::norm::{
    default_directions, directional_time_constant, estimate_norm, fit_norm, kingman_diagnostics, DirectionalSample,
    Model, NormEstimate, Symmetry,
};
use territories::time::{to_ticks, Ticks};
use territories::Error;

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn exp1_lattice() -> Model {
    Model::lattice(2, EdgeWeightDistribution::Exponential { rate: 1.0 })
}

fn exp1_continuum() -> Model {
    Model::continuum(2, RadiusLaw::Exponential { rate: 1.0 })
}

struct LatticeFit {
    samples: Vec<DirectionalSample>,
    estimate: NormEstimate,
    norm: Norm,
}

/// Exponential(1) lattice norm, shared by the norm, density, coexistence
/// and line criteria.
fn lattice_fit() -> &'static LatticeFit {
    static FIT: OnceLock<LatticeFit> = OnceLock::new();
    FIT.get_or_init(|| {
        let model = exp1_lattice();
        let (samples, estimate) =
            estimate_norm(&model, &default_directions(&model), 64, 8.0, 64, SEED, Symmetry::Hyperoctahedral, None)
                .expect("lattice norm estimate");
        let norm = estimate.to_norm().expect("tabulated norm");
        LatticeFit { samples, estimate, norm }
    })
}

fn audits() -> &'static (AuditReport, AuditReport) {
    static AUDITS: OnceLock<(AuditReport, AuditReport)> = OnceLock::new();
    AUDITS.get_or_init(|| {
        let opts = AuditOptions::default();
        (
            assumption_audit(&exp1_lattice(), &opts, SEED).expect("lattice audit"),
            assumption_audit(&exp1_continuum(), &opts, SEED).expect("continuum audit"),
        )
    })
}

fn oracle_equivalence() -> Outcome {
    let mut lattice_pairs = 0usize;
    let mut lattice_bad = 0usize;
    let dists = [
        EdgeWeightDistribution::Exponential { rate: 1.0 },
        EdgeWeightDistribution::Uniform { low: 0.0, high: 2.0 },
        EdgeWeightDistribution::AtomMixture { p_zero: 0.4, rate: 1.0 },
        EdgeWeightDistribution::Constant { value: 0.75 },
    ];
    for w in 0..3 {
        for h in 0..3 {
            let bbox = LatticeBox::new(vec![0, 0], vec![w, h]).unwrap();
            for dist in dists {
                for seed in 0..50 {
                    let field = PassageTimeField::new(dist, seed, bbox.clone()).unwrap();
                    for s in 0..bbox.len() {
                        let a = bbox.coords(s);
                        let map = first_passage_times(&field, &a).unwrap();
                        for t in 0..bbox.len() {
                            let b = bbox.coords(t);
                            lattice_pairs += 1;
                            if map.ticks_at(&b).unwrap() != common::enumerate_paths(&field, &a, &b) {
                                lattice_bad += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let window = Window::centered(&[0.0, 0.0], 5.0).unwrap();
    let (mut chain_targets, mut chain_bad) = (0usize, 0usize);
    for _ in 0..4000 {
        let n = rng.random_range(0..=5);
        let events: Vec<(Vec<f64>, f64, f64)> = (0..n)
            .map(|_| {
                let c = vec![rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
                let t = if rng.random_bool(0.3) { 1.0 } else { rng.random_range(0.0..3.0) };
                (c, t, rng.random_range(0.5..4.0))
            })
            .collect();
        let ev = OutburstEventSet::from_events(window.clone(), 100.0, &events).unwrap();
        let index = EventGraphIndex::new(&ev);
        let sources: Vec<Ball> = (0..rng.random_range(1..=2))
            .map(|_| Ball::unit(vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]))
            .collect();
        let mut targets: Vec<Vec<f64>> =
            (0..6).map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]).collect();
        targets.extend((0..ev.len()).map(|u| ev.center(u).to_vec()));
        let got = continuum_passage_time(&index, &sources, &targets).unwrap();
        for (t, z) in targets.iter().enumerate() {
            chain_targets += 1;
            let have: Ticks = if got[t].truncated { Ticks::MAX } else { to_ticks(got[t].time) };
            if have != common::enumerate_chains(&ev, &sources, z) {
                chain_bad += 1;
            }
        }
    }
    outcome(
        lattice_bad == 0 && chain_bad == 0,
        format!(
            "lattice: {lattice_bad} mismatches in {lattice_pairs} pairs on boxes up to 3x3; \
             continuum: {chain_bad} mismatches in {chain_targets} targets on instances of at most 5 events"
        ),
    )
}

fn structural_invariants() -> Outcome {
    let (lat, cont) = audits();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r, items) in [
        ("lattice", lat, &["nonnegativity", "triangle", "symmetry"][..]),
        ("continuum", cont, &["nonnegativity", "triangle"][..]),
    ] {
        for it in items {
            let i = r.item(it).expect("audit item");
            let ok = i.violations == 0 && i.checked >= 10_000;
            pass &= ok;
            parts.push(format!("{name} {it} {}/{}", i.violations, i.checked));
        }
    }
    // shrunken cells V^δ(0, x)
    let norms = [Norm::L1, Norm::L2, Norm::LInf, Norm::ScaledEuclidean { factor: 0.44 }];
    let xs = [vec![1.0, 0.0], vec![2.0, 1.0], vec![-0.5, 3.0]];
    let (mut trials, mut hom_bad, mut tr_bad) = (0usize, 0usize, 0usize);
    for (a, norm) in norms.iter().enumerate() {
        for (b, x) in xs.iter().enumerate() {
            for (c, delta) in [0.0, 0.3, 1.0].into_iter().enumerate() {
                let cells = VoronoiCells::from_points(vec![vec![0.0, 0.0], x.clone()], norm);
                let pred = |z: &[f64]| cells.contains_delta(z, 0, delta).unwrap_or(false);
                let seed = SEED + (a * 100 + b * 10 + c) as u64;
                hom_bad += homothety_stability_check(&pred, x, 8.0, 1000, seed).len();
                tr_bad += translate_stability_check(x, delta, norm, 8.0, 1000, seed).unwrap().len();
                trials += 1000;
            }
        }
    }
    pass &= hom_bad == 0 && tr_bad == 0 && trials >= 10_000;
    parts.push(format!("V^δ homothety {hom_bad}/{trials}, translation {tr_bad}/{trials}"));
    // point against ball: 100 realisations × 100 targets
    let (mut pairs, mut gap_bad, mut min_gap) = (0usize, 0usize, f64::INFINITY);
    let window = Window::centered(&[0.0, 0.0], 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x9a9);
    for r in 0..100 {
        let ev = simulate_outbursts(&window, 16.0, RadiusLaw::Exponential { rate: 1.0 }, SEED + r).unwrap();
        let index = EventGraphIndex::new(&ev);
        let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let ys: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]).collect();
        let mut pts = Vec::new();
        let mut spans = Vec::new();
        for y in &ys {
            let p = ball_sample_points(&index, &Ball::unit(y.clone()), 0.25);
            spans.push((pts.len(), p.len()));
            pts.extend(p);
        }
        let times = continuum_passage_time(&index, &[Ball::unit(x)], &pts).unwrap();
        for (start, len) in spans {
            let point = times[start].time;
            let ball = times[start..start + len].iter().map(|t| t.time).fold(0.0, f64::max);
            if !point.is_finite() {
                continue;
            }
            pairs += 1;
            min_gap = min_gap.min(ball - point);
            if ball < point {
                gap_bad += 1;
            }
        }
    }
    pass &= gap_bad == 0 && pairs >= 10_000;
    parts.push(format!("ball vs point {gap_bad}/{pairs} (min gap {min_gap:.3})"));
    outcome(pass, parts.join("; "))
}

fn calibration() -> Outcome {
    let value = 1.5;
    let model = Model::lattice(2, EdgeWeightDistribution::Constant { value });
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut samples = Vec::new();
    for (i, u) in [vec![1.0, 0.0], vec![h, h]].into_iter().enumerate() {
        let s = directional_time_constant(&model, &u, 16, 4.0, 8, SEED + i as u64).unwrap();
        // T is value · ℓ1 of the rounded target, so the ratio is exact
        let expect: Vec<f64> =
            s.targets.iter().zip(&s.lengths).map(|(t, l)| value * (t[0].abs() + t[1].abs()) / l).collect();
        let exact = s.ratios.iter().zip(&expect).all(|(r, e)| r.se == 0.0 && (r.mean - e).abs() <= 1e-12 * e);
        let zero_var = s.times.iter().all(|row| row.iter().all(|t| *t == row[0]));
        pass &= exact && zero_var;
        parts.push(format!("u = {u:?}: a = {:.6} (se {})", s.a_hat.mean, s.a_hat.se));
        samples.push(s);
    }
    let fit = fit_norm(&samples, Symmetry::Hyperoctahedral, None).unwrap();
    let axis = fit.value(&[1.0, 0.0]).unwrap().mean;
    let diag = fit.value(&[1.0, 1.0]).unwrap().mean;
    let norm_ok = (axis - value).abs() <= 1e-12 && (diag - value * 2f64.sqrt()).abs() <= 1e-9;
    pass &= norm_ok;
    parts.push(format!("N(e1) = {axis}, N(diag) = {diag:.12}"));
    let plan = ExperimentPlan::new(model, vec![vec![-1.0, 0.0], vec![1.0, 0.0]], vec![16.0, 32.0], 3, 0.15, SEED);
    let run = density_experiment(&plan, &Norm::L1).unwrap();
    let full = run.report.rungs.iter().all(|g| {
        g.sites.iter().all(|s| {
            s.pointwise_density.map(|m| m.mean) == Some(1.0) && s.realization_density.map(|m| m.mean) == Some(1.0)
        })
    });
    pass &= full;
    parts.push(format!("density facets all 1: {full}"));
    outcome(pass, parts.join("; "))
}

fn norm_statistics() -> Outcome {
    let fit = lattice_fit();
    let lattice_model = exp1_lattice();
    let mono_lat: Vec<bool> = fit
        .samples
        .iter()
        .map(|s| kingman_diagnostics(s, lattice_model.rounding_unit()).non_increasing)
        .collect();
    let orbits: Vec<String> = fit
        .estimate
        .orbits
        .iter()
        .map(|o| format!("{:.4}±{:.4}", o.value.mean, o.value.se))
        .collect();
    let lat_ok = fit.estimate.orbits_consistent() && mono_lat.iter().all(|b| *b);

    let model = exp1_continuum();
    let dirs: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            let a = i as f64 * std::f64::consts::FRAC_PI_4;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let (samples, est) = estimate_norm(&model, &dirs, 8, 4.0, 32, SEED + 1, Symmetry::Rotational, None).unwrap();
    let mono_cont = samples.iter().all(|s| kingman_diagnostics(s, model.rounding_unit()).non_increasing);
    let cont_ok = est.orbits_consistent() && mono_cont;
    let per_dir: Vec<String> = est.orbits[0].members.iter().map(|m| format!("{:.3}", m.value.mean)).collect();
    outcome(
        lat_ok && cont_ok,
        format!(
            "lattice orbits {} consistent {} ratio curves non-increasing {}/{}; continuum μ = {:.4}±{:.4} \
             per direction [{}] consistent {} non-increasing {}",
            orbits.join(" "),
            fit.estimate.orbits_consistent(),
            mono_lat.iter().filter(|b| **b).count(),
            mono_lat.len(),
            est.orbits[0].value.mean,
            est.orbits[0].value.se,
            per_dir.join(" "),
            est.orbits_consistent(),
            mono_cont
        ),
    )
}

fn theorem_trend() -> Outcome {
    let fit = lattice_fit();
    let plan = ExperimentPlan::new(
        exp1_lattice(),
        vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
        vec![16.0, 32.0, 64.0],
        100,
        0.15,
        SEED,
    );
    let rep = density_experiment(&plan, &fit.norm).unwrap().report;
    let mut pass = rep.index_set == vec![0, 1];
    let mut parts = Vec::new();
    for (j, t) in rep.pointwise_trend.iter().enumerate() {
        let last = *t.values.last().unwrap();
        pass &= t.non_decreasing && last >= 0.85;
        let v: Vec<String> = t.values.iter().map(|v| format!("{v:.3}")).collect();
        parts.push(format!("site {} facet (a) [{}]", rep.index_set[j], v.join(", ")));
    }
    pass &= rep.realization_trend.non_decreasing;
    let v: Vec<String> = rep.realization_trend.values.iter().map(|v| format!("{v:.2}")).collect();
    parts.push(format!("both cells >= 1 - ε in [{}] of replicates", v.join(", ")));
    outcome(pass, parts.join("; "))
}

fn coexistence_trend() -> Outcome {
    let fit = lattice_fit();
    let mut plan = ExperimentPlan::new(
        exp1_lattice(),
        vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
        vec![16.0, 32.0, 64.0],
        200,
        0.15,
        SEED,
    );
    plan.on_unit_sphere = true;
    let rep = coexistence_experiment(&plan, &fit.norm).unwrap();
    let top = rep.rungs.last().unwrap();
    let mut pass = rep.trend.non_decreasing && top.coexistence.mean >= 0.8;
    let v: Vec<String> = rep.rungs.iter().map(|g| format!("{:.3}", g.coexistence.mean)).collect();
    let flat_plan = ExperimentPlan::new(
        Model::lattice(2, EdgeWeightDistribution::Exponential { rate: 1.0 }),
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![16.0],
        1,
        0.15,
        SEED,
    );
    let rejected = matches!(coexistence_experiment(&flat_plan, &Norm::L1), Err(Error::FlatSegment(0, 1)));
    pass &= rejected;
    outcome(
        pass,
        format!(
            "P(coexistence) [{}], Wilson 95% lower bound at R = {}: {:.3}; e1, e2 under l1 rejected: {rejected}",
            v.join(", "),
            top.scale,
            top.wilson.0
        ),
    )
}

fn line_competition() -> Outcome {
    let fit = lattice_fit();
    let x = [32.0, 0.0];
    let nx = fit.norm.eval(&x);
    let r = line_competition_experiment(&exp1_lattice(), &x, 8.0, 0.2, 200, 21, Some(nx), SEED).unwrap();
    let min_p = r.points.iter().map(|p| p.probability.mean).fold(1.0, f64::min);
    outcome(
        r.passing_fraction >= 0.8 && r.bound_violations == 0 && r.bound_checks > 0,
        format!(
            "N(x) = {nx:.3}, passing fraction {:.3}, min probability {min_p:.3}, bound violations {}/{}",
            r.passing_fraction, r.bound_violations, r.bound_checks
        ),
    )
}

fn stationarity_isotropy() -> Outcome {
    let (lat, cont) = audits();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in [("lattice", lat), ("continuum", cont)] {
        for f in &r.ks {
            let n = f.p_values.len();
            let share = f.above as f64 / n as f64;
            pass &= share >= 0.9;
            parts.push(format!("{name} {}: {}/{} above 0.01", f.kind, f.above, n));
        }
    }
    pass &= lat.ks.iter().any(|f| f.kind == "translation")
        && cont.ks.iter().any(|f| f.kind == "translation")
        && cont.ks.iter().any(|f| f.kind == "rotation");
    outcome(pass, parts.join("; "))
}

fn reproducibility() -> Outcome {
    let configs = [
        "experiment = theorem11\nmodel = lattice\nsites = -1, 0; 1, 0\nladder = 8, 16\nreps = 12\n\
         norm = estimate\nnorm_k_max = 8\nnorm_step = 4\nnorm_reps = 8\n",
        "experiment = theorem12\nmodel = continuum\nradius_law = exponential\nsites = -2, 0; 2, 0\nladder = 2, 3\n\
         reps = 4\nnorm = euclid:0.25\n",
        "experiment = line\nmodel = lattice\nnorm = l1\nline_x = 8, 0\nline_lambda = 4\nline_grid = 5\nreps = 16\n",
        "experiment = norm\nmodel = continuum\nradius_law = exponential\ndirections = 1, 0; 0, 1\nnorm_k_max = 4\n\
         norm_step = 2\nnorm_reps = 4\n",
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let mut parts = Vec::new();
    for (c, text) in configs.iter().enumerate() {
        let cfg = RunConfig::parse(text).unwrap();
        let runs: Vec<_> = [(1, 'a'), (4, 'b'), (4, 'c')]
            .into_iter()
            .map(|(w, tag)| {
                let dir = tmp.path().join(format!("{c}{tag}"));
                with_workers(Some(w), || run_to_dir(&cfg, &dir)).unwrap().unwrap();
                let report = std::fs::read(dir.join("report.json")).unwrap();
                let manifest: territories::cli::Manifest =
                    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
                (report, manifest.files)
            })
            .collect();
        let same = runs.windows(2).all(|w| w[0] == w[1]);
        identical += same as usize;
        parts.push(format!("{}: {}", cfg.experiment.name(), if same { "identical" } else { "DIFFERENT" }));
    }
    outcome(identical == configs.len(), format!("1 vs 4 workers, every output file: {}", parts.join(", ")))
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, &str, fn() -> Outcome); 9] = [
        ("C1", "oracle equivalence", oracle_equivalence),
        ("C2", "exact structural invariants", structural_invariants),
        ("C3", "deterministic calibration", calibration),
        ("C4", "norm estimation statistics", norm_statistics),
        ("C5", "territory density trend", theorem_trend),
        ("C6", "coexistence trend", coexistence_trend),
        ("C7", "competition along a line", line_competition),
        ("C8", "stationarity and isotropy audits", stationarity_isotropy),
        ("C9", "reproducibility across worker counts", reproducibility),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|x| x == id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{id} {} {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
