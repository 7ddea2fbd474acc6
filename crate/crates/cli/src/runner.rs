//! Stage DAG, artifact caching and atomic writes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::{io_err, report, stages, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    Ingest,
    SegmentText,
    SegmentMusic,
    Scenes,
    Fingerprint,
    Align,
    Refine,
    Weave,
    Export,
    All,
}

/// Execution order of `all`.
pub const PIPELINE: [Stage; 9] = [
    Stage::Ingest,
    Stage::SegmentText,
    Stage::SegmentMusic,
    Stage::Scenes,
    Stage::Fingerprint,
    Stage::Align,
    Stage::Refine,
    Stage::Weave,
    Stage::Export,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::SegmentText => "segment-text",
            Stage::SegmentMusic => "segment-music",
            Stage::Scenes => "scenes",
            Stage::Fingerprint => "fingerprint",
            Stage::Align => "align",
            Stage::Refine => "refine",
            Stage::Weave => "weave",
            Stage::Export => "export",
            Stage::All => "all",
        }
    }

    /// Artifacts of upstream stages this stage reads, nearest producer first.
    pub fn prerequisites(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest | Stage::SegmentMusic | Stage::Scenes | Stage::Fingerprint | Stage::All => &[],
            Stage::SegmentText => &["book.json"],
            Stage::Align => &["scenes.tsv", "speakers.tsv", "book.json"],
            Stage::Refine => &[
                "coarse_alignment.tsv",
                "dialogue_matches.tsv",
                "segments.tsv",
                "scenes.tsv",
                "book.json",
            ],
            Stage::Weave => &[
                "segment_matches.tsv",
                "track_log.tsv",
                "music_segments.tsv",
                "segments.tsv",
            ],
            Stage::Export => &["manifest.json", "segments.tsv", "book.json"],
        }
    }

    /// Config inputs that feed the stage.
    fn inputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &[
                "book",
                "quotes",
                "subtitles",
                "transcript",
                "shots",
                "embeddings.paragraphs",
                "embeddings.sentences",
                "embeddings.frames",
                "emotions",
                "lexicon",
                "stopwords",
                "album_dir",
            ],
            Stage::SegmentText => &["embeddings.paragraphs"],
            Stage::SegmentMusic => &["album_dir"],
            Stage::Scenes => &["shots", "embeddings.frames"],
            Stage::Fingerprint => &["album_dir", "movie_audio"],
            Stage::Align => &["subtitles"],
            Stage::Refine => &["shots", "embeddings.frames", "embeddings.sentences", "lexicon", "stopwords"],
            Stage::Weave => &["emotions"],
            Stage::Export => &["album_dir"],
            Stage::All => &[],
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["chapter_marker"],
            Stage::SegmentText => &["textseg."],
            Stage::SegmentMusic => &["musicseg."],
            Stage::Scenes => &["scenes."],
            Stage::Fingerprint => &["fingerprint."],
            Stage::Align => &["align."],
            Stage::Refine => &["refine."],
            Stage::Weave => &["weave.", "book_id"],
            Stage::Export => &["export."],
            Stage::All => &[],
        }
    }
}

/// The stage that writes `artifact` (a path relative to the output dir).
fn producer(artifact: &str) -> Option<Stage> {
    Some(match artifact.split('/').next()? {
        "book.json" | "speakers.tsv" => Stage::Ingest,
        "segments.tsv" => Stage::SegmentText,
        "music_segments.tsv" | "novelty" => Stage::SegmentMusic,
        "scenes.tsv" => Stage::Scenes,
        "fingerprint.swfp" | "track_log.tsv" => Stage::Fingerprint,
        "coarse_alignment.tsv" | "dialogue_matches.tsv" | "similarity.tsv" => Stage::Align,
        "segment_matches.tsv" | "sentence_scores.tsv" => Stage::Refine,
        "manifest.json" => Stage::Weave,
        "bundle" => Stage::Export,
        _ => return None,
    })
}

/// Stages that read, directly or transitively, an artifact of `stage`.
fn downstream(stage: Stage) -> Vec<Stage> {
    let mut found = vec![stage];
    for s in PIPELINE {
        if !found.contains(&s)
            && s.prerequisites()
                .iter()
                .any(|a| producer(a).is_some_and(|p| found.contains(&p)))
        {
            found.push(s);
        }
    }
    found.retain(|&s| s != stage);
    found
}

/// A file produced by a stage, relative to the output dir.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(path: impl Into<String>, text: String) -> Artifact {
        Artifact {
            path: path.into(),
            bytes: text.into_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Stamp {
    key: String,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Cached,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRun {
    pub stage: Stage,
    pub outcome: Outcome,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&fs::read(path).map_err(io_err(path))?))
}

fn stamp_path(out: &Path, stage: Stage) -> PathBuf {
    out.join(".stamps").join(format!("{}.json", stage.name()))
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Cache key: stage, tool version, parameters, and the hashes of every
/// input file and prerequisite artifact.
fn cache_key(stage: Stage, cfg: &PipelineConfig) -> Result<String, CliError> {
    let mut h = Sha256::new();
    h.update(format!("{}\n{}\n", stage.name(), env!("CARGO_PKG_VERSION")));
    h.update(cfg.params_text(stage.params()));
    for key in stage.inputs() {
        h.update(format!("input {key}\n"));
        let Some(path) = cfg.path(key) else {
            h.update("absent\n");
            continue;
        };
        let files: Vec<PathBuf> = match *key {
            "album_dir" => {
                let index = cfg.album_index();
                let mut files = vec![index.clone()];
                let raw = fs::read_to_string(&index).map_err(io_err(&index))?;
                let album = soundweave::corpus::parse_album_index(&raw, path).map_err(crate::core)?;
                files.extend(album.tracks.into_iter().map(|t| t.path));
                files
            }
            k if k.starts_with("embeddings.") => {
                vec![path.with_extension("manifest"), path.with_extension("bin")]
            }
            _ => vec![path.to_path_buf()],
        };
        for f in files {
            h.update(hash_file(&f)?);
        }
    }
    if stage == Stage::Fingerprint {
        if let Some(p) = &cfg.log_import {
            h.update(format!("log-import {}\n", hash_file(p)?));
        }
    }
    for a in stage.prerequisites() {
        h.update(format!("{a} {}\n", hash_file(&cfg.out_dir.join(a))?));
    }
    Ok(hex::encode(h.finalize()))
}

fn read_stamp(out: &Path, stage: Stage) -> Option<Stamp> {
    let raw = fs::read_to_string(stamp_path(out, stage)).ok()?;
    serde_json::from_str(&raw).ok()
}

fn outputs_intact(out: &Path, stamp: &Stamp) -> bool {
    stamp
        .outputs
        .iter()
        .all(|(p, h)| hash_file(&out.join(p)).is_ok_and(|x| &x == h))
}

/// Removes a stage's recorded outputs and stamp.
fn invalidate(out: &Path, stage: Stage) {
    if let Some(stamp) = read_stamp(out, stage) {
        for p in stamp.outputs.keys() {
            let _ = fs::remove_file(out.join(p));
        }
        let _ = fs::remove_file(stamp_path(out, stage));
        log::info!("invalidated {} outputs", stage.name());
    }
}

fn run_one(stage: Stage, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let out = &cfg.out_dir;
    if let Some(missing) = stage
        .prerequisites()
        .iter()
        .find(|a| !out.join(a).is_file())
    {
        return Err(CliError::MissingPrerequisite((*missing).to_string()));
    }
    let key = cache_key(stage, cfg)?;
    let previous = read_stamp(out, stage);
    if let Some(stamp) = &previous {
        if stamp.key == key && outputs_intact(out, stamp) {
            log::info!("{}: up to date", stage.name());
            return Ok(Outcome::Cached);
        }
    }
    log::info!("{}: running", stage.name());
    let artifacts = stages::execute(stage, cfg)?;
    let outputs: BTreeMap<String, String> = artifacts
        .iter()
        .map(|a| (a.path.clone(), sha256_hex(&a.bytes)))
        .collect();
    if let Some(stamp) = &previous {
        for stale in stamp.outputs.keys().filter(|p| !outputs.contains_key(*p)) {
            let _ = fs::remove_file(out.join(stale));
        }
    }
    if previous.as_ref().is_none_or(|s| s.outputs != outputs) {
        for d in downstream(stage) {
            invalidate(out, d);
        }
    }
    for a in &artifacts {
        write_atomic(&out.join(&a.path), &a.bytes)?;
    }
    let stamp = serde_json::to_string_pretty(&Stamp { key, outputs }).expect("stamp serializes");
    write_atomic(&stamp_path(out, stage), stamp.as_bytes())?;
    Ok(Outcome::Ran)
}

/// Runs one stage (or the whole DAG for [`Stage::All`]) and refreshes
/// `report.txt`.
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<Vec<StageRun>, CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let stages: Vec<Stage> = match stage {
        Stage::All => PIPELINE.to_vec(),
        s => vec![s],
    };
    let mut runs = Vec::new();
    for s in stages {
        let outcome = run_one(s, cfg)?;
        runs.push(StageRun { stage: s, outcome });
    }
    let text = report::render(cfg)?;
    write_atomic(&cfg.out_dir.join("report.txt"), text.as_bytes())?;
    Ok(runs)
}

/// Every artifact under the output dir except the report and stamps,
/// sorted, with its SHA-256.
pub fn artifact_hashes(out: &Path) -> Result<Vec<(String, String)>, CliError> {
    fn walk(dir: &Path, root: &Path, acc: &mut Vec<(String, String)>) -> Result<(), CliError> {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .collect();
        entries.sort();
        for p in entries {
            let rel = p
                .strip_prefix(root)
                .expect("walked below root")
                .to_string_lossy()
                .replace('\\', "/");
            if rel == "report.txt" || rel.starts_with(".stamps") || rel.contains(".tmp") {
                continue;
            }
            if p.is_dir() {
                walk(&p, root, acc)?;
            } else {
                acc.push((rel, hash_file(&p)?));
            }
        }
        Ok(())
    }
    let mut acc = Vec::new();
    walk(out, out, &mut acc)?;
    acc.sort();
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_prerequisite_has_an_upstream_producer() {
        for (i, s) in PIPELINE.iter().enumerate() {
            for a in s.prerequisites() {
                let p = producer(a).unwrap();
                let pos = PIPELINE.iter().position(|&x| x == p).unwrap();
                assert!(pos < i, "{a} of {} is produced downstream", s.name());
            }
        }
    }

    #[test]
    fn downstream_closure() {
        let d = downstream(Stage::SegmentText);
        assert_eq!(d, vec![Stage::Refine, Stage::Weave, Stage::Export]);
        assert_eq!(downstream(Stage::Export), vec![]);
        assert!(downstream(Stage::Ingest).contains(&Stage::Export));
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"x").unwrap();
        write_atomic(&p, b"y").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"y");
        assert_eq!(fs::read_dir(dir.path().join("a")).unwrap().count(), 1);
    }
}
