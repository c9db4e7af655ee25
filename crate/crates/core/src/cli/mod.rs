//! Config files, runs and their on-disk outputs, shared by the binary.

mod config;
mod run;

pub use config::{parse_pairs, ExperimentKind, Format, NormChoice, RunConfig, KEYS};
pub use run::{
    env_workers, headline, map_image, output_dir, parse_seed_range, render, report_tables, run_to_dir, seed_scan,
    sha256_hex, with_workers, FileEntry, Manifest, NormReport, Report, RunOutcome, TerritoriesReport, WithNorm,
    ENV_OUT, ENV_WORKERS,
};
