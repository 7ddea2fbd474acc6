//! Reader bundle: manifest, per-chapter text with segment boundaries, and
//! the audio excerpts the manifest points at.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use soundweave::corpus::{self, AudioBuffer};
use soundweave::weave::{ManifestEntry, Provenance};

use crate::config::PipelineConfig;
use crate::runner::Artifact;
use crate::stages::{artifact_text, load_album_index, load_book, load_manifest, load_segments};
use crate::{core, CliError};

/// Excerpts may end this far past the decoded track length (rounding of the
/// manifest's millisecond times).
const END_SLACK_S: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Excerpt {
    pub file: String,
    pub track_id: u32,
    pub music_segment: usize,
    pub audio_in_s: f64,
    pub audio_out_s: f64,
    /// Extra audio before `audio_in_s` and after `audio_out_s` in the file.
    pub pad_before_s: f64,
    pub pad_after_s: f64,
}

#[derive(Serialize)]
struct ChapterParagraph<'a> {
    index: usize,
    segment: usize,
    text: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    quotes: Vec<&'a str>,
}

#[derive(Serialize)]
struct ChapterSegmentView {
    segment: usize,
    first_paragraph: usize,
    last_paragraph: usize,
    excerpt: String,
    text_emotion: &'static str,
    music_mode: &'static str,
    provenance: &'static str,
    crossfade_ms: u32,
}

#[derive(Serialize)]
struct ChapterView<'a> {
    chapter: usize,
    title: &'a str,
    paragraphs: Vec<ChapterParagraph<'a>>,
    segments: Vec<ChapterSegmentView>,
}

pub fn excerpt_file(track_id: u32, music_segment: usize) -> String {
    format!("audio/{track_id}_{music_segment}.wav")
}

/// Cuts `[in_s, out_s]` plus up to `pad_s` on each side, clamped to the
/// track. Fails when the requested range is empty or leaves the track.
pub fn cut_excerpt(
    track_id: u32,
    audio: &AudioBuffer,
    in_s: f64,
    out_s: f64,
    pad_s: f64,
) -> Result<(AudioBuffer, f64, f64), CliError> {
    let duration_s = audio.duration_s();
    if !(in_s >= 0.0 && in_s < out_s && out_s <= duration_s + END_SLACK_S) {
        return Err(CliError::AudioCutOutOfRange {
            track_id,
            in_s,
            out_s,
            duration_s,
        });
    }
    let a = (in_s - pad_s).max(0.0);
    let b = (out_s + pad_s).min(duration_s);
    Ok((audio.slice_seconds(a, b), in_s - a, (b - out_s).max(0.0)))
}

pub fn export_bundle(cfg: &PipelineConfig) -> Result<Vec<Artifact>, CliError> {
    let manifest = load_manifest(cfg)?;
    let book = load_book(cfg)?;
    let segments = load_segments(cfg)?;
    let album = load_album_index(cfg)?;
    let pad_s = f64::from(cfg.padding_ms) / 1000.0;

    let mut wanted: BTreeMap<(u32, usize), (f64, f64)> = BTreeMap::new();
    for e in &manifest.entries {
        wanted.insert((e.track_id, e.music_segment), (e.audio_in_s, e.audio_out_s));
    }
    let mut decoded: HashMap<u32, AudioBuffer> = HashMap::new();
    let mut excerpts = Vec::new();
    let mut artifacts = Vec::new();
    for (&(track_id, seg), &(in_s, out_s)) in &wanted {
        if !decoded.contains_key(&track_id) {
            let track = album.track(track_id).ok_or_else(|| CliError::MalformedArtifact {
                name: "manifest.json".into(),
                message: format!("track {track_id} is not in the album index"),
            })?;
            decoded.insert(track_id, corpus::read_wav(&track.path).map_err(core)?);
        }
        let (clip, before, after) = cut_excerpt(track_id, &decoded[&track_id], in_s, out_s, pad_s)?;
        let file = excerpt_file(track_id, seg);
        artifacts.push(Artifact {
            path: format!("bundle/{file}"),
            bytes: corpus::wav_bytes(&clip).map_err(core)?,
        });
        excerpts.push(Excerpt {
            file,
            track_id,
            music_segment: seg,
            audio_in_s: in_s,
            audio_out_s: out_s,
            pad_before_s: (before * 1000.0).round() / 1000.0,
            pad_after_s: (after * 1000.0).round() / 1000.0,
        });
    }

    let entries: HashMap<(usize, usize), &ManifestEntry> =
        manifest.entries.iter().map(|e| ((e.chapter, e.segment), e)).collect();
    for (c, chapter) in book.chapters.iter().enumerate() {
        let chapter_segments: Vec<_> = segments.iter().filter(|s| s.chapter_index == c).collect();
        let paragraphs = chapter
            .paragraphs
            .iter()
            .enumerate()
            .map(|(p, par)| ChapterParagraph {
                index: p,
                segment: chapter_segments
                    .iter()
                    .find(|s| s.contains(p))
                    .map_or(0, |s| s.segment_index),
                text: par.text(),
                quotes: par
                    .quotes
                    .iter()
                    .filter_map(|q| par.sentences.get(q.sentence_index).map(String::as_str))
                    .collect(),
            })
            .collect();
        let views = chapter_segments
            .iter()
            .map(|s| {
                let e = entries.get(&(c, s.segment_index)).ok_or_else(|| CliError::MalformedArtifact {
                    name: "manifest.json".into(),
                    message: format!("no entry for segment {c}/{}", s.segment_index),
                })?;
                Ok(ChapterSegmentView {
                    segment: s.segment_index,
                    first_paragraph: s.first_paragraph,
                    last_paragraph: s.last_paragraph,
                    excerpt: excerpt_file(e.track_id, e.music_segment),
                    text_emotion: e.text_emotion.as_str(),
                    music_mode: e.music_mode.as_str(),
                    provenance: match e.provenance {
                        Provenance::MovieCue { .. } => "movie_cue",
                        Provenance::Emotion => "emotion",
                    },
                    crossfade_ms: e.crossfade_ms,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let view = ChapterView {
            chapter: c,
            title: &chapter.title,
            paragraphs,
            segments: views,
        };
        let mut json = serde_json::to_string_pretty(&view).expect("chapter serializes");
        json.push('\n');
        artifacts.push(Artifact::text(format!("bundle/chapters/{c}.json"), json));
    }
    let mut json = serde_json::to_string_pretty(&excerpts).expect("excerpts serialize");
    json.push('\n');
    artifacts.push(Artifact::text("bundle/excerpts.json", json));
    artifacts.push(Artifact::text("bundle/manifest.json", artifact_text(cfg, "manifest.json")?));
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excerpt_length_includes_padding() {
        let audio = AudioBuffer::new(vec![0.1; 8000 * 70], 8000);
        let (clip, before, after) = cut_excerpt(3, &audio, 10.0, 62.0, 0.05).unwrap();
        assert!((clip.duration_s() - 52.1).abs() < 1e-9);
        assert!((before - 0.05).abs() < 1e-9 && (after - 0.05).abs() < 1e-9);
        let (clip, before, after) = cut_excerpt(3, &audio, 0.0, 70.0, 0.05).unwrap();
        assert!((clip.duration_s() - 70.0).abs() < 1e-9);
        assert_eq!((before, after), (0.0, 0.0));
    }

    #[test]
    fn out_of_range_cut_is_rejected() {
        let audio = AudioBuffer::new(vec![0.0; 8000], 8000);
        for (a, b) in [(0.5, 2.0), (-0.1, 0.5), (0.6, 0.6)] {
            assert!(matches!(
                cut_excerpt(1, &audio, a, b, 0.05),
                Err(CliError::AudioCutOutOfRange { .. })
            ));
        }
    }
}
