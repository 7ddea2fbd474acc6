//! `report.txt`: pipeline counts, the per-chapter provenance split and
//! artifact hashes. Contains no timestamps so re-runs are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use soundweave::refine::{self, EvidenceKind};
use soundweave::weave::Provenance;
use soundweave::{align, fingerprint, musicseg, scenes};

use crate::config::PipelineConfig;
use crate::runner::artifact_hashes;
use crate::stages::{artifact_text, load_book, load_manifest, load_segments};
use crate::{core, CliError};

/// Per-chapter counts of the soundtrack split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChapterSplit {
    pub segments: usize,
    /// Segments with at least one matched scene (S).
    pub matched: usize,
    pub movie_cue: usize,
    pub emotion: usize,
}

pub fn chapter_split(cfg: &PipelineConfig) -> Result<BTreeMap<usize, ChapterSplit>, CliError> {
    let mut split: BTreeMap<usize, ChapterSplit> = BTreeMap::new();
    let out = &cfg.out_dir;
    if out.join("segments.tsv").is_file() {
        for s in load_segments(cfg)? {
            split.entry(s.chapter_index).or_default().segments += 1;
        }
    }
    if out.join("segment_matches.tsv").is_file() {
        let matches = refine::parse_segment_matches_tsv(&artifact_text(cfg, "segment_matches.tsv")?).map_err(core)?;
        let keys: BTreeSet<(usize, usize)> = matches.iter().map(|m| (m.chapter, m.segment)).collect();
        for (c, _) in keys {
            split.entry(c).or_default().matched += 1;
        }
    }
    if out.join("manifest.json").is_file() {
        for e in load_manifest(cfg)?.entries {
            let row = split.entry(e.chapter).or_default();
            match e.provenance {
                Provenance::MovieCue { .. } => row.movie_cue += 1,
                Provenance::Emotion => row.emotion += 1,
            }
        }
    }
    Ok(split)
}

fn count_rows(cfg: &PipelineConfig, name: &str) -> Result<Option<usize>, CliError> {
    if !cfg.out_dir.join(name).is_file() {
        return Ok(None);
    }
    let text = artifact_text(cfg, name)?;
    Ok(Some(text.lines().skip(1).filter(|l| !l.trim().is_empty()).count()))
}

pub fn render(cfg: &PipelineConfig) -> Result<String, CliError> {
    let out = &cfg.out_dir;
    let mut r = String::new();
    let w = &mut r;
    writeln!(w, "soundweave report").unwrap();
    writeln!(w, "book_id\t{}", cfg.book_id).unwrap();
    writeln!(w, "seed\t{}", cfg.seed).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "[counts]").unwrap();
    if out.join("book.json").is_file() {
        let book = load_book(cfg)?;
        writeln!(w, "chapters\t{}", book.chapters.len()).unwrap();
        writeln!(w, "paragraphs\t{}", book.paragraph_count()).unwrap();
        let quotes: usize = book
            .chapters
            .iter()
            .flat_map(|c| &c.paragraphs)
            .map(|p| p.quotes.len())
            .sum();
        writeln!(w, "quotes\t{quotes}").unwrap();
    }
    if let Some(n) = count_rows(cfg, "segments.tsv")? {
        writeln!(w, "chapter_segments\t{n}").unwrap();
    }
    if out.join("music_segments.tsv").is_file() {
        let music = musicseg::parse_music_segments_tsv(&artifact_text(cfg, "music_segments.tsv")?).map_err(core)?;
        let tracks: BTreeSet<u32> = music.iter().map(|m| m.track_id).collect();
        let major = music.iter().filter(|m| m.mode == Some(musicseg::Mode::Major)).count();
        let minor = music.iter().filter(|m| m.mode == Some(musicseg::Mode::Minor)).count();
        writeln!(w, "music_segments\t{} ({} tracks, {major} major, {minor} minor)", music.len(), tracks.len()).unwrap();
    }
    if out.join("scenes.tsv").is_file() {
        let s = scenes::parse_scenes_tsv(&artifact_text(cfg, "scenes.tsv")?).map_err(core)?;
        let shots: usize = s.iter().map(|x| x.shot_count()).sum();
        writeln!(w, "scenes\t{} ({shots} shots)", s.len()).unwrap();
    }
    if out.join("track_log.tsv").is_file() {
        let log = fingerprint::parse_track_log(&artifact_text(cfg, "track_log.tsv")?).map_err(core)?;
        let tracks: BTreeSet<u32> = log.entries.iter().map(|e| e.track_id).collect();
        writeln!(w, "track_log_entries\t{} ({} distinct tracks)", log.entries.len(), tracks.len()).unwrap();
    }
    if out.join("coarse_alignment.tsv").is_file() && out.join("dialogue_matches.tsv").is_file() {
        let coarse = align::parse_coarse_alignment(
            &artifact_text(cfg, "coarse_alignment.tsv")?,
            &artifact_text(cfg, "dialogue_matches.tsv")?,
        )
        .map_err(core)?;
        writeln!(w, "dialogue_matches\t{}", coarse.dialogue_matches.len()).unwrap();
        writeln!(w, "low_similarity_scenes\t{}", coarse.low_similarity.len()).unwrap();
    }
    if out.join("segment_matches.tsv").is_file() {
        let matches = refine::parse_segment_matches_tsv(&artifact_text(cfg, "segment_matches.tsv")?).map_err(core)?;
        let pairs = matches.len();
        let dialogue: BTreeSet<(usize, usize)> = matches
            .iter()
            .filter(|m| m.evidence.iter().any(|e| e.kind == EvidenceKind::Dialogue))
            .map(|m| (m.chapter, m.segment))
            .collect();
        let frame: BTreeSet<(usize, usize)> = matches
            .iter()
            .filter(|m| m.evidence.iter().any(|e| e.kind == EvidenceKind::Frame))
            .map(|m| (m.chapter, m.segment))
            .collect();
        writeln!(w, "segment_scene_pairs\t{pairs}").unwrap();
        writeln!(w, "segments_with_dialogue_evidence\t{}", dialogue.len()).unwrap();
        writeln!(w, "segments_with_frame_evidence\t{}", frame.len()).unwrap();
    }

    let split = chapter_split(cfg)?;
    if !split.is_empty() {
        writeln!(w).unwrap();
        writeln!(w, "[chapters]").unwrap();
        writeln!(w, "chapter\tsegments\tS\tS_bar\tmovie_cue\temotion").unwrap();
        let mut total = ChapterSplit::default();
        for (c, s) in &split {
            writeln!(
                w,
                "{c}\t{}\t{}\t{}\t{}\t{}",
                s.segments,
                s.matched,
                s.segments.saturating_sub(s.matched),
                s.movie_cue,
                s.emotion
            )
            .unwrap();
            total.segments += s.segments;
            total.matched += s.matched;
            total.movie_cue += s.movie_cue;
            total.emotion += s.emotion;
        }
        writeln!(
            w,
            "total\t{}\t{}\t{}\t{}\t{}",
            total.segments,
            total.matched,
            total.segments.saturating_sub(total.matched),
            total.movie_cue,
            total.emotion
        )
        .unwrap();
    }

    writeln!(w).unwrap();
    writeln!(w, "[artifacts sha256]").unwrap();
    for (path, hash) in artifact_hashes(out)? {
        writeln!(w, "{hash}  {path}").unwrap();
    }
    Ok(r)
}
