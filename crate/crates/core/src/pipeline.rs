//! End-to-end steps behind the `kb` subcommands: simulate or ingest raw
//! measurements, build the knowledge base, analyze it.
//!
//! Every output is written atomically; a failed step leaves nothing behind.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::analysis::{analyze, export_plot, Analysis, AnalysisConfig};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sensing::{
    ingest_dataset, simulate_record, write_dataset, Manifest, MeasurementRecord, ObjectSpec,
    SimulationConfig,
};
use crate::symbols::{build_kb, load_kb, save_kb, KbConfig, KnowledgeBase};

/// Simulates every spec; object `i` uses a seed derived from `(seed, i)`.
pub fn simulate_corpus(
    specs: &[ObjectSpec],
    config: &SimulationConfig,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            simulate_record(spec, config, derive_seed(seed, i as u64)).map_err(|e| {
                Error::validation("<corpus>", format!("/{i}"), e.to_string())
            })
        })
        .collect()
}

/// Simulates a corpus into `out_dir`, which must be absent or empty.
///
/// Files are staged in a sibling temporary directory and moved into place
/// only once every record has been written.
pub fn simulate_dataset(
    specs: &[ObjectSpec],
    out_dir: &Path,
    config: &SimulationConfig,
    seed: u64,
) -> Result<Manifest> {
    if out_dir.exists() {
        let mut entries = fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
        if entries.next().is_some() {
            return Err(Error::io(
                out_dir,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output directory is not empty"),
            ));
        }
    }
    let records = simulate_corpus(specs, config, seed)?;
    let parent = match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".kb-simulate-")
        .tempdir_in(parent)
        .map_err(|e| Error::io(parent, e))?;
    let manifest = write_dataset(staging.path(), &records)?;
    if out_dir.exists() {
        fs::remove_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out_dir).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        Error::io(out_dir, e)
    })?;
    Ok(manifest)
}

pub fn build_from_dataset(dataset: &Path, config: &KbConfig) -> Result<KnowledgeBase> {
    let records = ingest_dataset(dataset)?;
    if records.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    build_kb(&records, config)
}

/// Builds and writes a knowledge base; nothing is written on failure.
pub fn build_to_file(dataset: &Path, out: &Path, config: &KbConfig) -> Result<KnowledgeBase> {
    let kb = build_from_dataset(dataset, config)?;
    save_kb(&kb, out)?;
    Ok(kb)
}

pub fn analyze_to_files(
    kb_path: &Path,
    config: &AnalysisConfig,
    csv_path: &Path,
    svg_path: Option<&Path>,
) -> Result<Analysis> {
    let kb = load_kb(kb_path)?;
    let analysis = analyze(&kb, config)?;
    export_plot(&analysis.embedding, &analysis.report, csv_path, svg_path)?;
    Ok(analysis)
}
