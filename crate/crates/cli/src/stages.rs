//! What each stage reads and writes.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use regex::Regex;
use soundweave::align::{self, CoarseAlignment};
use soundweave::corpus::{
    self, paragraph_key, sentence_key, AudioBuffer, BookStructure, CorpusError, EmbeddingBundle, ShotTable,
    SubtitleTrack,
};
use soundweave::fingerprint;
use soundweave::musicseg::{self, MusicSegError};
use soundweave::refine::{self, SentenceScore};
use soundweave::scenes::{self, Scene};
use soundweave::textseg::{self, ChapterSegment};
use soundweave::tsv;
use soundweave::weave::{self, SoundtrackManifest};

use crate::config::PipelineConfig;
use crate::runner::{Artifact, Stage};
use crate::{core, export, io_err, CliError};

pub fn execute(stage: Stage, cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    match stage {
        Stage::Ingest => ingest(cfg),
        Stage::SegmentText => segment_text(cfg),
        Stage::SegmentMusic => segment_music(cfg),
        Stage::Scenes => group_scenes(cfg),
        Stage::Fingerprint => identify_tracks(cfg),
        Stage::Align => align_scenes(cfg),
        Stage::Refine => refine_segments(cfg),
        Stage::Weave => weave_manifest(cfg),
        Stage::Export => export::export_bundle(cfg),
        Stage::All => unreachable!("`all` is expanded by the runner"),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub(crate) fn artifact_text(cfg: &PipelineConfig, name: &str) -> Result<String, CliError> {
    read_text(&cfg.out_dir.join(name))
}

fn malformed(name: &str) -> impl FnOnce(String) -> CliError + '_ {
    move |message| CliError::MalformedArtifact {
        name: name.to_string(),
        message,
    }
}

pub(crate) fn load_book(cfg: &PipelineConfig) -> Result<BookStructure, CliError> {
    serde_json::from_str(&artifact_text(cfg, "book.json")?).map_err(|e| malformed("book.json")(e.to_string()))
}

pub(crate) fn load_segments(cfg: &PipelineConfig) -> Result<Vec<ChapterSegment>, CliError> {
    textseg::parse_segments_tsv(&artifact_text(cfg, "segments.tsv")?).map_err(core)
}

fn load_bundle(cfg: &PipelineConfig, key: &str) -> Result<EmbeddingBundle, CliError> {
    let stem = cfg.input(key);
    corpus::load_embeddings(&stem.with_extension("manifest"), &stem.with_extension("bin")).map_err(core)
}

fn load_shots(cfg: &PipelineConfig) -> Result<ShotTable, CliError> {
    let frames = load_bundle(cfg, "embeddings.frames")?;
    corpus::parse_shot_table(&read_text(cfg.input("shots"))?, &frames).map_err(core)
}

fn load_subtitles(cfg: &PipelineConfig) -> Result<SubtitleTrack, CliError> {
    let (track, warnings) = corpus::parse_srt(&read_text(cfg.input("subtitles"))?).map_err(core)?;
    if !warnings.is_empty() {
        log::warn!("{} subtitle cues overlap their predecessor", warnings.len());
    }
    Ok(track)
}

pub(crate) fn load_album_index(cfg: &PipelineConfig) -> Result<corpus::AlbumIndex, CliError> {
    let index = cfg.album_index();
    corpus::parse_album_index(&read_text(&index)?, cfg.input("album_dir")).map_err(core)
}

fn load_album(cfg: &PipelineConfig) -> Result<Vec<(u32, AudioBuffer)>, CliError> {
    load_album_index(cfg)?
        .tracks
        .iter()
        .map(|t| Ok((t.track_id, corpus::read_wav(&t.path).map_err(core)?)))
        .collect()
}

fn ingest(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let marker = Regex::new(&cfg.chapter_marker).map_err(|e| CliError::Config(e.to_string()))?;
    let mut book = corpus::parse_book(&read_text(cfg.input("book"))?, &marker).map_err(core)?;
    if let Some(q) = cfg.path("quotes") {
        let annotations = corpus::parse_quotes(&read_text(q)?).map_err(core)?;
        corpus::apply_quotes(&mut book, &annotations).map_err(core)?;
    }

    let paragraphs = load_bundle(cfg, "embeddings.paragraphs")?;
    let sentences = load_bundle(cfg, "embeddings.sentences")?;
    let frames = load_bundle(cfg, "embeddings.frames")?;
    corpus::check_disjoint(&[&paragraphs, &sentences, &frames]).map_err(core)?;
    for (c, chapter) in book.chapters.iter().enumerate() {
        for (p, par) in chapter.paragraphs.iter().enumerate() {
            let key = paragraph_key(c, p);
            if paragraphs.get(&key).is_none() {
                return Err(core(CorpusError::UnresolvedId(key)));
            }
            for s in 0..par.sentences.len() {
                let key = sentence_key(c, p, s);
                if sentences.get(&key).is_none() {
                    return Err(core(CorpusError::UnresolvedId(key)));
                }
            }
        }
    }
    let shots = corpus::parse_shot_table(&read_text(cfg.input("shots"))?, &frames).map_err(core)?;
    let subtitles = load_subtitles(cfg)?;
    let transcript = corpus::parse_transcript(&read_text(cfg.input("transcript"))?).map_err(core)?;
    let emotions = corpus::parse_emotion_table(&read_text(cfg.input("emotions"))?).map_err(core)?;
    let missing = book
        .chapters
        .iter()
        .enumerate()
        .flat_map(|(c, ch)| (0..ch.paragraphs.len()).map(move |p| (c, p)))
        .filter(|k| !emotions.rows.contains_key(k))
        .count();
    if missing > 0 {
        log::warn!("{missing} paragraphs have no emotion scores");
    }
    corpus::parse_lexicon(&read_text(cfg.input("lexicon"))?).map_err(core)?;
    for track in load_album_index(cfg)?.tracks {
        if !track.path.is_file() {
            return Err(CliError::Io {
                path: track.path,
                source: std::io::ErrorKind::NotFound.into(),
            });
        }
    }
    log::info!(
        "ingested {} chapters, {} shots, {} cues, {} transcript lines",
        book.chapters.len(),
        shots.shots.len(),
        subtitles.cues.len(),
        transcript.lines.len()
    );

    let attribution = align::dtw_attribute_speakers(&subtitles, &transcript);
    let rows = subtitles.cues.iter().enumerate().map(|(i, cue)| {
        vec![
            i.to_string(),
            cue.start_ms.to_string(),
            cue.end_ms.to_string(),
            attribution.speakers[i].clone().unwrap_or_else(|| "unknown".into()),
            format!("{:.4}", attribution.distances[i]),
        ]
    });
    let speakers = tsv::render(&["cue", "start_ms", "end_ms", "speaker", "distance"], rows);
    let mut json = serde_json::to_string_pretty(&book).expect("book serializes");
    json.push('\n');
    Ok(vec![
        Artifact::text("book.json", json),
        Artifact::text("speakers.tsv", speakers),
    ])
}

fn load_speakers(cfg: &PipelineConfig) -> Result<Vec<Option<String>>, CliError> {
    let raw = artifact_text(cfg, "speakers.tsv")?;
    let rows = tsv::read(&raw, &["cue", "start_ms", "end_ms", "speaker"])
        .map_err(|(line, m)| malformed("speakers.tsv")(format!("line {line}: {m}")))?;
    Ok(rows
        .iter()
        .map(|r| Some(r.fields[3].clone()).filter(|s| s != "unknown" && !s.is_empty()))
        .collect())
}

fn segment_text(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let book = load_book(cfg)?;
    let bundle = load_bundle(cfg, "embeddings.paragraphs")?;
    let seg = textseg::segment_book(&book, &bundle, cfg.partition_level).map_err(core)?;
    for c in &seg.clamped_chapters {
        log::warn!("chapter {c}: hierarchy shallower than level {}, using its top level", cfg.partition_level);
    }
    Ok(vec![Artifact::text("segments.tsv", textseg::segments_tsv(&seg.segments))])
}

fn segment_music(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let album = load_album(cfg)?;
    let results = musicseg::segment_album(&album, &cfg.musicseg);
    let mut segments = Vec::new();
    let mut artifacts = Vec::new();
    for ((id, _), result) in album.iter().zip(results) {
        match result {
            Ok(t) => {
                segments.extend(t.segments);
                artifacts.push(Artifact::text(
                    format!("novelty/track_{id}.csv"),
                    musicseg::novelty_csv(&t.novelty),
                ));
            }
            Err(e @ (MusicSegError::TooShort { .. } | MusicSegError::AllSilent)) => {
                log::warn!("track {id} skipped: {e}");
            }
            Err(e) => return Err(core(e)),
        }
    }
    artifacts.insert(0, Artifact::text("music_segments.tsv", musicseg::music_segments_tsv(&segments)));
    Ok(artifacts)
}

fn group_scenes(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let shots = load_shots(cfg)?;
    let q = cfg
        .scene_count
        .unwrap_or_else(|| scenes::default_scene_count(shots.shots.len()));
    let grouped = scenes::group_scenes(&shots, q).map_err(core)?;
    Ok(vec![Artifact::text("scenes.tsv", scenes::scenes_tsv(&grouped))])
}

fn identify_tracks(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    if let Some(path) = &cfg.log_import {
        let log = fingerprint::parse_track_log(&read_text(path)?).map_err(core)?;
        log::info!("imported {} track-log entries", log.entries.len());
        return Ok(vec![Artifact::text("track_log.tsv", fingerprint::track_log_tsv(&log))]);
    }
    let album = load_album(cfg)?;
    let index = fingerprint::build_index(&album, &cfg.fingerprint).map_err(core)?;
    let mut bytes = Vec::new();
    fingerprint::write_index(&index, &mut bytes).expect("writing to memory");
    let movie = corpus::read_wav(cfg.input("movie_audio")).map_err(core)?;
    let log = fingerprint::scan_movie(&index, &movie, &cfg.fingerprint);
    log::info!("{} track-log entries over {:.0} s of movie audio", log.entries.len(), movie.duration_s());
    Ok(vec![
        Artifact {
            path: "fingerprint.swfp".into(),
            bytes,
        },
        Artifact::text("track_log.tsv", fingerprint::track_log_tsv(&log)),
    ])
}

/// Scenes from `scenes.tsv` with their subtitle cues and speakers attached.
fn scenes_with_dialogue(cfg: &PipelineConfig) -> Result<Vec<Scene>, CliError> {
    let mut scenes = scenes::parse_scenes_tsv(&artifact_text(cfg, "scenes.tsv")?).map_err(core)?;
    let subtitles = load_subtitles(cfg)?;
    let speakers = load_speakers(cfg)?;
    if speakers.len() != subtitles.cues.len() {
        return Err(malformed("speakers.tsv")(format!(
            "{} rows for {} subtitle cues",
            speakers.len(),
            subtitles.cues.len()
        )));
    }
    scenes::attach_dialogue(&mut scenes, &subtitles, &speakers);
    Ok(scenes)
}

fn align_scenes(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let book = load_book(cfg)?;
    let scenes = scenes_with_dialogue(cfg)?;
    let movie_speakers: Vec<String> = load_speakers(cfg)?
        .into_iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (coarse, sim) = align::align_book_movie(&book, &scenes, &movie_speakers, cfg.alpha).map_err(core)?;
    let header: Vec<String> = std::iter::once("chapter".to_string())
        .chain((0..sim.matrix.first().map_or(0, Vec::len)).map(|q| format!("scene_{q}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = sim.matrix.iter().enumerate().map(|(c, row)| {
        std::iter::once(c.to_string())
            .chain(row.iter().map(|v| format!("{v:.6}")))
            .collect::<Vec<_>>()
    });
    Ok(vec![
        Artifact::text("coarse_alignment.tsv", align::coarse_alignment_tsv(&coarse)),
        Artifact::text("dialogue_matches.tsv", align::dialogue_matches_tsv(&coarse.dialogue_matches)),
        Artifact::text("similarity.tsv", tsv::render(&header, rows)),
    ])
}

fn load_coarse(cfg: &PipelineConfig) -> Result<CoarseAlignment, CliError> {
    align::parse_coarse_alignment(
        &artifact_text(cfg, "coarse_alignment.tsv")?,
        &artifact_text(cfg, "dialogue_matches.tsv")?,
    )
    .map_err(core)
}

fn sentence_scores_tsv(scores: &[SentenceScore]) -> String {
    tsv::render(
        &["chapter", "paragraph", "sentence", "segment", "tfidf", "concreteness", "kept"],
        scores.iter().map(|s| {
            vec![
                s.chapter.to_string(),
                s.paragraph.to_string(),
                s.sentence.to_string(),
                s.segment.to_string(),
                format!("{:.6}", s.tfidf),
                format!("{:.4}", s.concreteness),
                s.kept.to_string(),
            ]
        }),
    )
}

fn refine_segments(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let book = load_book(cfg)?;
    let segments = load_segments(cfg)?;
    let scenes = scenes_with_dialogue(cfg)?;
    let coarse = load_coarse(cfg)?;
    let shots = load_shots(cfg)?;
    let sentences = load_bundle(cfg, "embeddings.sentences")?;
    let lexicon = corpus::parse_lexicon(&read_text(cfg.input("lexicon"))?).map_err(core)?;
    let provided = match cfg.path("stopwords") {
        Some(p) => corpus::parse_stopwords(&read_text(p)?),
        None => HashSet::new(),
    };
    let stopwords = refine::stopwords_or_default(&book, &provided);
    let scores = refine::score_sentences(&book, &segments, &lexicon, &stopwords, &cfg.refine);
    let result = refine::refine_all(&segments, &scores, &sentences, &shots, &scenes, &coarse, &cfg.refine)
        .map_err(core)?;
    log::info!(
        "{} of {} segments matched to scenes ({} through dialogue)",
        segments.len() - result.unmatched.len(),
        segments.len(),
        result.dialogue_matched
    );
    Ok(vec![
        Artifact::text("segment_matches.tsv", refine::segment_matches_tsv(&result.matches)),
        Artifact::text("sentence_scores.tsv", sentence_scores_tsv(&scores)),
    ])
}

fn weave_manifest(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let segments = load_segments(cfg)?;
    let matches = refine::parse_segment_matches_tsv(&artifact_text(cfg, "segment_matches.tsv")?).map_err(core)?;
    let log = fingerprint::parse_track_log(&artifact_text(cfg, "track_log.tsv")?).map_err(core)?;
    let music = musicseg::parse_music_segments_tsv(&artifact_text(cfg, "music_segments.tsv")?).map_err(core)?;
    let emotions = corpus::parse_emotion_table(&read_text(cfg.input("emotions"))?).map_err(core)?;
    let manifest = weave::weave_all(
        &cfg.book_id,
        &segments,
        &matches,
        &log,
        &music,
        &emotions,
        cfg.seed,
        cfg.crossfade_ms,
    )
    .map_err(core)?;
    let problems = weave::check_manifest(&manifest, &segments, &matches, &log, &music);
    if !problems.is_empty() {
        return Err(CliError::InvariantViolation(problems));
    }
    Ok(vec![Artifact::text("manifest.json", manifest.to_json())])
}

pub(crate) fn load_manifest(cfg: &PipelineConfig) -> Result<SoundtrackManifest, CliError> {
    SoundtrackManifest::from_json(&artifact_text(cfg, "manifest.json")?)
        .map_err(|e| malformed("manifest.json")(e.to_string()))
}
