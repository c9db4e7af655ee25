use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_territories"));
    c.env_remove("TERRITORIES_OUT").env_remove("TERRITORIES_WORKERS");
    c
}

fn write_cfg(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMOKE: &str = "experiment = theorem11
model = lattice
weights = exponential
sites = -1, 0; 1, 0
ladder = 8, 16
reps = 10
norm = euclid:0.44
seed = 7
";

#[test]
fn missing_model_is_a_field_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "experiment = norm\nseed = 3\n");
    let o = bin().args(["validate"]).arg(&cfg).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("`model`"), "{}", stderr(&o));
}

#[test]
fn validate_prints_a_config_that_validates_again() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMOKE);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = String::from_utf8(o.stdout).unwrap();
    assert!(resolved.contains("box_factor = 3"));
    let again = dir.path().join("again.cfg");
    fs::write(&again, &resolved).unwrap();
    let o2 = bin().arg("validate").arg(&again).output().unwrap();
    assert_eq!(String::from_utf8(o2.stdout).unwrap(), resolved);
}

#[test]
fn smoke_run_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMOKE);
    let mut reports = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(name);
        let o = bin()
            .arg("run")
            .arg(&cfg)
            .env("TERRITORIES_OUT", &out)
            .env("TERRITORIES_WORKERS", workers)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        for f in ["report.json", "manifest.json", "resolved.cfg", "site_0.csv", "site_1.csv", "snapshot_1.ppm", "snapshot_1.tmap"] {
            assert!(out.join(f).exists(), "{f} missing");
        }
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn render_rebuilds_tables_and_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMOKE);
    let out = dir.path().join("out");
    assert!(bin().arg("run").arg(&cfg).env("TERRITORIES_OUT", &out).output().unwrap().status.success());
    let again = dir.path().join("rendered");
    let o = bin().arg("render").arg(out.join("report.json")).arg("--out").arg(&again).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(again.join("site_0.csv")).unwrap(), fs::read(out.join("site_0.csv")).unwrap());
    let o = bin().arg("render").arg(out.join("snapshot_0.tmap")).arg("--out").arg(&again).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read(again.join("snapshot_0.ppm")).unwrap().starts_with(b"P6\n"));
}

#[test]
fn seed_scan_writes_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "experiment = line\nmodel = lattice\nweights = constant\nnorm = l1\nline_x = 4, 0\nline_lambda = 2\nline_grid = 3\nreps = 2\n",
    );
    let out = dir.path().join("scan");
    let o = bin().arg("seed-scan").arg(&cfg).args(["--seeds", "1..3"]).env("TERRITORIES_OUT", &out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("seed_scan.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(out.join("seed_2").join("line.csv").exists());
}

#[test]
fn failed_run_leaves_error_json() {
    let dir = tempfile::tempdir().unwrap();
    // box too small for the guard margin
    let cfg = write_cfg(
        dir.path(),
        "experiment = theorem11\nmodel = lattice\nsites = -1, 0; 1, 0\nladder = 4\nreps = 1\nnorm = l1\nbox_factor = 1\n",
    );
    let out = dir.path().join("out");
    let o = bin().arg("run").arg(&cfg).env("TERRITORIES_OUT", &out).output().unwrap();
    assert!(!o.status.success());
    assert!(fs::read_to_string(out.join("error.json")).unwrap().contains("guard"));
}
