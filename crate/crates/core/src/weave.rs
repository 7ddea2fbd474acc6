//! Soundtrack assembly.
//!
//! Segments matched to movie scenes import the album track heard around the
//! matched moments; every other segment (and every failed import) draws a
//! random excerpt whose mode fits the segment's text emotion.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::corpus::{paragraph_key, EmotionScoreTable, EmotionScores};
use crate::fingerprint::TrackLog;
use crate::musicseg::{Mode, MusicSegment, Valence};
use crate::refine::SegmentSceneMatch;
use crate::textseg::{ChapterSegment, Emotion};

pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_CROSSFADE_MS: u32 = 2000;
pub const WORDS_PER_MINUTE: f64 = 250.0;
/// Track-log entries this close to an evidence timestamp support it.
pub const CUE_NEIGHBOURHOOD_MS: u64 = 15_000;

#[derive(Debug, Error)]
pub enum WeaveError {
    #[error("no emotion scores for paragraph {0}")]
    MissingScores(String),
    #[error("no album segment is compatible with {emotion} text; every excerpt is silent or of the wrong mode")]
    EmptyPool { emotion: &'static str },
}

impl WeaveError {
    pub fn kind(&self) -> &'static str {
        match self {
            WeaveError::MissingScores(_) => "MissingScores",
            WeaveError::EmptyPool { .. } => "EmptyPool",
        }
    }
}

/// Why a movie cue could not be imported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CueFailure {
    NoEvidence,
    NoLogEntryNearby,
    NoCompatibleSegment { track_id: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEmotion {
    pub chapter: usize,
    pub segment: usize,
    pub label: Emotion,
    /// Paragraph votes as `(positive, neutral, negative)`.
    pub votes: (u32, u32, u32),
}

fn unique_max(values: [f64; 3]) -> Option<usize> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let at: Vec<usize> = (0..3).filter(|&i| values[i] == max).collect();
    (at.len() == 1).then(|| at[0])
}

const LABELS: [Emotion; 3] = [Emotion::Positive, Emotion::Neutral, Emotion::Negative];

/// Paragraph label: the most probable class, neutral when the maximum is
/// shared.
pub fn paragraph_emotion(s: &EmotionScores) -> Emotion {
    unique_max([s.positive, s.neutral, s.negative]).map_or(Emotion::Neutral, |i| LABELS[i])
}

/// Majority vote of paragraph labels; a shared maximum gives neutral.
pub fn label_text_emotion(segment: &ChapterSegment, table: &EmotionScoreTable) -> Result<SegmentEmotion, WeaveError> {
    let mut votes = [0u32; 3];
    for p in segment.paragraphs() {
        let scores = table
            .rows
            .get(&(segment.chapter_index, p))
            .ok_or_else(|| WeaveError::MissingScores(paragraph_key(segment.chapter_index, p)))?;
        let label = paragraph_emotion(scores);
        votes[LABELS.iter().position(|&l| l == label).expect("label is listed")] += 1;
    }
    let label = unique_max(votes.map(f64::from)).map_or(Emotion::Neutral, |i| LABELS[i]);
    Ok(SegmentEmotion {
        chapter: segment.chapter_index,
        segment: segment.segment_index,
        label,
        votes: (votes[0], votes[1], votes[2]),
    })
}

/// Positive text takes major excerpts, negative text minor ones, neutral
/// text either. Silent excerpts are never compatible.
pub fn compatible(emotion: Emotion, segment: &MusicSegment) -> bool {
    match (emotion, segment.valence()) {
        (_, None) => false,
        (Emotion::Neutral, Some(_)) => true,
        (Emotion::Positive, Some(v)) => v == Valence::Positive,
        (Emotion::Negative, Some(v)) => v == Valence::Negative,
    }
}

/// Generator for one chapter segment, independent of processing order.
pub fn segment_rng(seed: u64, chapter: usize, segment: usize) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(chapter as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(segment as u64).to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

fn three_decimals<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(format!("{v:.3}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MovieCue {
        scene_ids: Vec<u32>,
        cue_times_ms: Vec<u64>,
    },
    Emotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub chapter: usize,
    pub segment: usize,
    /// Inclusive paragraph range.
    pub paragraph_range: [usize; 2],
    pub track_id: u32,
    pub music_segment: usize,
    #[serde(serialize_with = "three_decimals")]
    pub audio_in_s: f64,
    #[serde(serialize_with = "three_decimals")]
    pub audio_out_s: f64,
    #[serde(rename = "loop")]
    pub looped: bool,
    pub crossfade_ms: u32,
    pub provenance: Provenance,
    pub text_emotion: Emotion,
    pub music_mode: Mode,
    #[serde(serialize_with = "three_decimals")]
    pub estimated_read_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundtrackManifest {
    pub version: u32,
    pub book_id: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl SoundtrackManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> Result<SoundtrackManifest, serde_json::Error> {
        serde_json::from_str(raw)
    }
}

fn entry(
    segment: &ChapterSegment,
    emotion: Emotion,
    music: &MusicSegment,
    provenance: Provenance,
    crossfade_ms: u32,
) -> ManifestEntry {
    ManifestEntry {
        chapter: segment.chapter_index,
        segment: segment.segment_index,
        paragraph_range: [segment.first_paragraph, segment.last_paragraph],
        track_id: music.track_id,
        music_segment: music.segment_index,
        audio_in_s: music.start_s,
        audio_out_s: music.end_s,
        looped: true,
        crossfade_ms,
        provenance,
        text_emotion: emotion,
        music_mode: music.mode.expect("only sounding excerpts are chosen"),
        estimated_read_minutes: segment.word_count as f64 / WORDS_PER_MINUTE,
    }
}

/// Imports the excerpt for a matched segment from the album track heard
/// around its evidence timestamps. The track supported by the most
/// timestamps wins (then the most confident log entry, then the lower id);
/// the excerpt is drawn uniformly among that track's compatible ones.
pub fn import_movie_cue(
    segment: &ChapterSegment,
    emotion: Emotion,
    matches: &[SegmentSceneMatch],
    log: &TrackLog,
    music: &[MusicSegment],
    seed: u64,
    crossfade_ms: u32,
) -> Result<ManifestEntry, CueFailure> {
    let own: Vec<&SegmentSceneMatch> = matches
        .iter()
        .filter(|m| m.chapter == segment.chapter_index && m.segment == segment.segment_index)
        .collect();
    let times: BTreeSet<u64> = own.iter().flat_map(|m| m.evidence.iter().map(|e| e.movie_ms)).collect();
    if times.is_empty() {
        return Err(CueFailure::NoEvidence);
    }
    // track -> (supporting timestamps, best confidence nearby)
    let mut support: BTreeMap<u32, (BTreeSet<u64>, u32)> = BTreeMap::new();
    for &t in &times {
        for e in log.entries.iter().filter(|e| e.movie_ms.abs_diff(t) <= CUE_NEIGHBOURHOOD_MS) {
            let s = support.entry(e.track_id).or_default();
            s.0.insert(t);
            s.1 = s.1.max(e.confidence);
        }
    }
    let (&track_id, (cue_times, _)) = support
        .iter()
        .max_by(|a, b| {
            (a.1 .0.len(), a.1 .1)
                .cmp(&(b.1 .0.len(), b.1 .1))
                .then(b.0.cmp(a.0))
        })
        .ok_or(CueFailure::NoLogEntryNearby)?;
    let pool: Vec<&MusicSegment> = music
        .iter()
        .filter(|m| m.track_id == track_id && compatible(emotion, m))
        .collect();
    if pool.is_empty() {
        return Err(CueFailure::NoCompatibleSegment { track_id });
    }
    let mut rng = segment_rng(seed, segment.chapter_index, segment.segment_index);
    let chosen = pool[rng.random_range(0..pool.len())];
    let scene_ids: BTreeSet<u32> = own.iter().map(|m| m.scene_id).collect();
    Ok(entry(
        segment,
        emotion,
        chosen,
        Provenance::MovieCue {
            scene_ids: scene_ids.into_iter().collect(),
            cue_times_ms: cue_times.iter().copied().collect(),
        },
        crossfade_ms,
    ))
}

/// Uniform draw among all compatible excerpts of the album.
pub fn emotion_retrieve(
    segment: &ChapterSegment,
    emotion: Emotion,
    music: &[MusicSegment],
    seed: u64,
    crossfade_ms: u32,
) -> Result<ManifestEntry, WeaveError> {
    let pool: Vec<&MusicSegment> = music.iter().filter(|m| compatible(emotion, m)).collect();
    if pool.is_empty() {
        return Err(WeaveError::EmptyPool {
            emotion: emotion.as_str(),
        });
    }
    let mut rng = segment_rng(seed, segment.chapter_index, segment.segment_index);
    let chosen = pool[rng.random_range(0..pool.len())];
    Ok(entry(segment, emotion, chosen, Provenance::Emotion, crossfade_ms))
}

/// One manifest entry per segment, ordered by `(chapter, segment)`.
#[allow(clippy::too_many_arguments)]
pub fn weave_all(
    book_id: &str,
    segments: &[ChapterSegment],
    matches: &[SegmentSceneMatch],
    log: &TrackLog,
    music: &[MusicSegment],
    emotions: &EmotionScoreTable,
    seed: u64,
    crossfade_ms: u32,
) -> Result<SoundtrackManifest, WeaveError> {
    let mut ordered: Vec<&ChapterSegment> = segments.iter().collect();
    ordered.sort_by_key(|s| (s.chapter_index, s.segment_index));
    let mut entries = Vec::with_capacity(ordered.len());
    for seg in ordered {
        let emotion = label_text_emotion(seg, emotions)?.label;
        let e = match import_movie_cue(seg, emotion, matches, log, music, seed, crossfade_ms) {
            Ok(e) => e,
            Err(CueFailure::NoEvidence) => emotion_retrieve(seg, emotion, music, seed, crossfade_ms)?,
            Err(why) => {
                log::info!(
                    "segment {}/{}: movie cue failed ({why:?}); using emotion retrieval",
                    seg.chapter_index,
                    seg.segment_index
                );
                emotion_retrieve(seg, emotion, music, seed, crossfade_ms)?
            }
        };
        entries.push(e);
    }
    Ok(SoundtrackManifest {
        version: MANIFEST_VERSION,
        book_id: book_id.to_string(),
        seed,
        entries,
    })
}

/// Invariant violations of a manifest, empty when it is sound: one entry per
/// segment, emotion-compatible modes, excerpts inside their tracks, and movie
/// cues backed by the track log.
pub fn check_manifest(
    manifest: &SoundtrackManifest,
    segments: &[ChapterSegment],
    matches: &[SegmentSceneMatch],
    log: &TrackLog,
    music: &[MusicSegment],
) -> Vec<String> {
    let mut problems = Vec::new();
    let keys: BTreeSet<(usize, usize)> = segments.iter().map(|s| (s.chapter_index, s.segment_index)).collect();
    let entry_keys: Vec<(usize, usize)> = manifest.entries.iter().map(|e| (e.chapter, e.segment)).collect();
    let unique: BTreeSet<(usize, usize)> = entry_keys.iter().copied().collect();
    if unique.len() != entry_keys.len() || unique != keys {
        problems.push(format!(
            "coverage: {} entries for {} segments",
            entry_keys.len(),
            keys.len()
        ));
    }
    let mut track_end: BTreeMap<u32, f64> = BTreeMap::new();
    for m in music {
        let end = track_end.entry(m.track_id).or_insert(0.0);
        *end = end.max(m.end_s);
    }
    for e in &manifest.entries {
        let key = format!("{}/{}", e.chapter, e.segment);
        match (e.text_emotion, e.music_mode) {
            (Emotion::Positive, Mode::Minor) | (Emotion::Negative, Mode::Major) => {
                problems.push(format!("compatibility: {key} pairs {} text with {} music", e.text_emotion.as_str(), e.music_mode));
            }
            _ => {}
        }
        let end = track_end.get(&e.track_id).copied().unwrap_or(0.0);
        if !(0.0 <= e.audio_in_s && e.audio_in_s < e.audio_out_s && e.audio_out_s <= end + 1e-6) {
            problems.push(format!("range: {key} excerpt {}-{} outside track {}", e.audio_in_s, e.audio_out_s, e.track_id));
        }
        if let Provenance::MovieCue { cue_times_ms, .. } = &e.provenance {
            let evidence: BTreeSet<u64> = matches
                .iter()
                .filter(|m| m.chapter == e.chapter && m.segment == e.segment)
                .flat_map(|m| m.evidence.iter().map(|v| v.movie_ms))
                .collect();
            let sound = cue_times_ms.iter().any(|t| {
                evidence.contains(t)
                    && log
                        .entries
                        .iter()
                        .any(|l| l.track_id == e.track_id && l.movie_ms.abs_diff(*t) <= CUE_NEIGHBOURHOOD_MS)
            });
            if !sound {
                problems.push(format!("provenance: {key} track {} not in the log near its evidence", e.track_id));
            }
        }
    }
    problems
}
