//! Output directories, manifests and replay.
//!
//! A run writes into a hidden staging directory next to the requested
//! output directory and renames it into place only after the pipeline and
//! the manifest are complete; a failed run leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use ngtorus::rng::Purpose;

use crate::config::ExperimentConfig;
use crate::experiments::{run_pipeline, Report};

/// When set, relative `out` paths are resolved against this directory.
pub const OUTPUT_ROOT_ENV: &str = "NGTORUS_OUT";

pub const MANIFEST_NAME: &str = "manifest.txt";

const CHECKSUM_PREFIX: &str = "# sha256 ";

#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub report: Report,
    /// `(relative path, sha256)` of every artifact except the manifest.
    pub artifacts: Vec<(String, String)>,
}

pub fn resolve_out(out: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if out.is_relative() && !root.is_empty() => PathBuf::from(root).join(out),
        _ => out.to_path_buf(),
    }
}

fn staging_dir(out: &Path) -> Result<PathBuf> {
    let name = out
        .file_name()
        .with_context(|| format!("output path {} has no final component", out.display()))?
        .to_string_lossy();
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(parent.join(format!(".{name}.partial")))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("walk stays below root").to_path_buf());
        }
    }
    Ok(())
}

/// Sorted `(relative path, sha256)` of every file below `dir` except the
/// manifest.
pub fn checksums(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    let mut sums: Vec<(String, String)> = files
        .into_iter()
        .filter(|p| p != Path::new(MANIFEST_NAME))
        .map(|rel| -> Result<(String, String)> {
            let bytes = fs::read(dir.join(&rel)).with_context(|| format!("reading {}", rel.display()))?;
            let name = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            Ok((name, hex::encode(Sha256::digest(&bytes))))
        })
        .collect::<Result<_>>()?;
    sums.sort();
    Ok(sums)
}

/// Manifest text: the full config, preceded by comment lines recording
/// the seed derivation and the artifact checksums. Parses as a config.
pub fn manifest_text(cfg: &ExperimentConfig, artifacts: &[(String, String)]) -> String {
    let purposes: Vec<String> = Purpose::ALL.iter().map(|p| format!("{}={}", p.name(), *p as u64)).collect();
    let mut s = String::new();
    s.push_str("# ngtorus experiment manifest; replay with `ngtorus replay <this file>`\n");
    s.push_str(&format!(
        "# seeds: ChaCha8 keyed by root seed {}, stream id (purpose << 48) | replica\n",
        cfg.seed
    ));
    s.push_str(&format!("# purposes: {}\n", purposes.join(" ")));
    s.push_str("# shrink twins key their streams by splitmix(seed, N); committed-sweep networks by splitmix(seed, N, bits(k))\n");
    for (name, sum) in artifacts {
        s.push_str(&format!("{CHECKSUM_PREFIX}{sum} {name}\n"));
    }
    s.push_str(&cfg.to_text());
    s
}

/// Checksums recorded in a manifest.
pub fn manifest_checksums(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix(CHECKSUM_PREFIX))
        .filter_map(|rest| rest.split_once(' '))
        .map(|(sum, name)| (name.to_string(), sum.to_string()))
        .collect()
}

/// Validates `cfg`, runs its pipeline and publishes the outputs with a
/// manifest. The output directory must be absent or empty.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let out = resolve_out(&cfg.out);
    if out.exists() {
        let empty = out.is_dir() && fs::read_dir(&out)?.next().is_none();
        if !empty {
            bail!("output directory {} exists and is not empty", out.display());
        }
    }
    let staging = staging_dir(&out)?;
    if staging.exists() {
        fs::remove_dir_all(&staging).with_context(|| format!("clearing stale {}", staging.display()))?;
    }
    fs::create_dir_all(&staging).with_context(|| format!("creating {}", staging.display()))?;
    let result = run_pipeline(cfg, &staging).and_then(|report| {
        let artifacts = checksums(&staging)?;
        fs::write(staging.join(MANIFEST_NAME), manifest_text(cfg, &artifacts))?;
        if out.exists() {
            fs::remove_dir(&out)?;
        }
        fs::rename(&staging, &out).with_context(|| format!("moving outputs to {}", out.display()))?;
        Ok((report, artifacts))
    });
    match result {
        Ok((report, artifacts)) => Ok(Outcome { dir: out, report, artifacts }),
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

/// Reruns the experiment recorded in `manifest` into `out` (the recorded
/// directory when `None`) and checks every artifact against the recorded
/// checksum.
pub fn replay(manifest: &Path, out: Option<PathBuf>) -> Result<Outcome> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(o) = out {
        cfg.out = o;
    }
    let expected = manifest_checksums(&text);
    let outcome = run_experiment(&cfg)?;
    if outcome.artifacts != expected {
        let mut diffs = Vec::new();
        for (name, sum) in &expected {
            match outcome.artifacts.iter().find(|a| &a.0 == name) {
                Some(a) if &a.1 == sum => {}
                Some(_) => diffs.push(format!("{name}: checksum differs")),
                None => diffs.push(format!("{name}: missing")),
            }
        }
        for (name, _) in &outcome.artifacts {
            if !expected.iter().any(|e| &e.0 == name) {
                diffs.push(format!("{name}: not in manifest"));
            }
        }
        bail!("replay of {} does not match: {}", manifest.display(), diffs.join("; "));
    }
    Ok(outcome)
}
