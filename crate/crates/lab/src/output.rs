//! Artifact directories: CSV tables, config echo, metadata and summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::config::ExperimentConfig;
use crate::experiments::{run, Outcome};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub outcome: Outcome,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.outcome.passed()
    }
}

/// Runs `cfg` and writes every artifact into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, threads: Option<usize>) -> anyhow::Result<RunReport> {
    let outcome = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot build the worker pool")?
            .install(|| run(cfg))?,
        None => run(cfg)?,
    };
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let mut files = Vec::new();
    for (name, table) in &outcome.tables {
        let path = dir.join(name);
        table.write_csv(&path).with_context(|| format!("cannot write {}", path.display()))?;
        files.push(path);
    }
    let mut write = |name: &str, text: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        files.push(path);
        Ok(())
    };
    write("config.toml", cfg.to_toml()?)?;
    write("metadata.toml", metadata(cfg, threads))?;
    write("summary.txt", summary(cfg, &outcome))?;
    Ok(RunReport { dir: dir.to_path_buf(), files, outcome })
}

fn metadata(cfg: &ExperimentConfig, threads: Option<usize>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "code_version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "experiment = \"{}\"", cfg.experiment);
    let _ = writeln!(s, "base_seed = {}", cfg.noise.base_seed);
    let _ = writeln!(s, "n_paths = {}", cfg.noise.n_paths);
    let _ = writeln!(s, "path_seed_rule = \"base_seed + path index (wrapping)\"");
    let _ = writeln!(s, "generator = \"philox4x32-10, stream 0 per path, box-muller\"");
    if let Some(n) = threads {
        let _ = writeln!(s, "threads = {n}");
    }
    let _ = writeln!(s, "\n[config]");
    let _ = write!(s, "{}", cfg.to_toml().unwrap_or_default().replace("\n[", "\n[config."));
    s
}

fn summary(cfg: &ExperimentConfig, outcome: &Outcome) -> String {
    let mut s = String::new();
    let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "experiment: {}", cfg.experiment);
    let _ = writeln!(s, "result: {verdict}");
    for (name, t) in &outcome.tables {
        let _ = writeln!(s, "table: {name} ({} rows)", t.rows.len());
    }
    for c in &outcome.certificates {
        let _ = writeln!(s);
        let _ = write!(s, "{}", c.to_kv());
    }
    s
}
