//! Landmark audio fingerprinting.
//!
//! Album tracks are reduced to constellations of spectrogram peaks; pairs of
//! nearby peaks are hashed and indexed. A clip is identified by voting on the
//! time offset between its hashes and the indexed ones.

mod landmarks;
mod store;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AudioBuffer;
use crate::tsv;

pub use landmarks::{fingerprint_audio, find_peaks, landmarks, pack_hash, spectrogram, unpack_hash, Landmark, Peak};
pub use store::{read_index, write_index, MAGIC, VERSION};

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("track {0} has no audio long enough to fingerprint")]
    EmptyAudio(u32),
    #[error("corrupt fingerprint index: {0}")]
    BadIndex(String),
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error("track log line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FingerprintError {
    pub fn kind(&self) -> &'static str {
        match self {
            FingerprintError::EmptyAudio(_) => "EmptyAudio",
            FingerprintError::BadIndex(_) => "BadIndex",
            FingerprintError::Config(_) => "InvalidConfig",
            FingerprintError::Table { .. } => "MalformedTable",
            FingerprintError::Io(_) => "Io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerprintParams {
    pub sample_rate: u32,
    pub window: usize,
    pub hop: usize,
    pub neighbourhood_frames: usize,
    pub neighbourhood_bins: usize,
    /// Per-frame magnitude quantile a peak must exceed.
    pub percentile: f64,
    pub fan_out: usize,
    pub max_dt_s: f64,
    pub max_df_bins: u32,
    /// Bins are shifted right by this before packing into 9 bits.
    pub bin_shift: u32,
    pub min_hashes: u32,
    pub margin: f64,
    pub min_query_s: f64,
    pub scan_window_s: f64,
    pub scan_stride_s: f64,
}

impl Default for FingerprintParams {
    fn default() -> Self {
        FingerprintParams {
            sample_rate: 11025,
            window: 4096,
            hop: 2048,
            neighbourhood_frames: 15,
            neighbourhood_bins: 15,
            percentile: 0.75,
            fan_out: 15,
            max_dt_s: 5.0,
            max_df_bins: 32,
            bin_shift: 2,
            min_hashes: 5,
            margin: 2.0,
            min_query_s: 3.0,
            scan_window_s: 10.0,
            scan_stride_s: 5.0,
        }
    }
}

impl FingerprintParams {
    pub fn frame_s(&self) -> f64 {
        self.hop as f64 / f64::from(self.sample_rate)
    }

    pub fn max_dt_frames(&self) -> u32 {
        (self.max_dt_s / self.frame_s()).floor() as u32
    }

    pub fn validate(&self) -> Result<(), FingerprintError> {
        let bad = |m: &str| Err(FingerprintError::Config(m.to_string()));
        if self.window < 16 || self.hop == 0 || self.hop > self.window {
            return bad("window/hop");
        }
        if self.window / 2 >> self.bin_shift > 512 {
            return bad("bin_shift too small for 9-bit frequencies");
        }
        if !(0.0..1.0).contains(&self.percentile) {
            return bad("percentile must be in [0, 1)");
        }
        if self.fan_out == 0 || self.max_dt_frames() == 0 || self.max_dt_frames() > 0x3fff {
            return bad("target zone");
        }
        if self.margin < 1.0 || self.min_hashes == 0 {
            return bad("acceptance thresholds");
        }
        if !(self.scan_window_s >= self.min_query_s && self.scan_stride_s > 0.0) {
            return bad("scan window/stride");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Posting {
    pub track_id: u32,
    pub offset_frame: u32,
}

/// Hash table of indexed landmarks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FingerprintIndex {
    pub table: HashMap<u32, Vec<Posting>>,
    /// `(track_id, frame count)` in insertion order.
    pub tracks: Vec<(u32, u32)>,
}

impl FingerprintIndex {
    pub fn hash_count(&self) -> usize {
        self.table.values().map(Vec::len).sum()
    }

    /// Every `(hash, posting)` pair sorted.
    pub fn entries(&self) -> Vec<(u32, Posting)> {
        let mut e: Vec<(u32, Posting)> = self
            .table
            .iter()
            .flat_map(|(&h, ps)| ps.iter().map(move |&p| (h, p)))
            .collect();
        e.sort();
        e
    }

    fn insert(&mut self, track_id: u32, frames: u32, lms: &[Landmark]) {
        self.tracks.push((track_id, frames));
        for lm in lms {
            self.table.entry(lm.hash).or_default().push(Posting {
                track_id,
                offset_frame: lm.frame,
            });
        }
    }
}

/// Hashes every track in parallel and merges in input order.
pub fn build_index(
    tracks: &[(u32, AudioBuffer)],
    params: &FingerprintParams,
) -> Result<FingerprintIndex, FingerprintError> {
    params.validate()?;
    let hashed: Vec<(u32, Vec<Landmark>, u32)> = tracks
        .par_iter()
        .map(|(id, audio)| {
            let (lms, frames) = fingerprint_audio(audio, params);
            if frames == 0 {
                return Err(FingerprintError::EmptyAudio(*id));
            }
            Ok((*id, lms, frames))
        })
        .collect::<Result<_, _>>()?;
    let mut index = FingerprintIndex::default();
    for (id, lms, frames) in &hashed {
        index.insert(*id, *frames, lms);
    }
    Ok(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryMatch {
    pub track_id: u32,
    /// Votes in the winning offset bin.
    pub confidence: u32,
    pub runner_up: u32,
    /// Position of the clip start inside the track.
    pub offset_s: f64,
}

/// Per-track offset histograms of a clip against the index.
fn vote(index: &FingerprintIndex, lms: &[Landmark]) -> HashMap<u32, HashMap<i64, u32>> {
    let mut votes: HashMap<u32, HashMap<i64, u32>> = HashMap::new();
    for lm in lms {
        if let Some(postings) = index.table.get(&lm.hash) {
            for p in postings {
                let delta = i64::from(p.offset_frame) - i64::from(lm.frame);
                *votes.entry(p.track_id).or_default().entry(delta).or_default() += 1;
            }
        }
    }
    votes
}

/// Identifies a clip; `None` below the vote and margin thresholds or for
/// clips shorter than the minimum query length.
pub fn query(index: &FingerprintIndex, clip: &AudioBuffer, params: &FingerprintParams) -> Option<QueryMatch> {
    if clip.duration_s() + 1e-9 < params.min_query_s {
        return None;
    }
    let (lms, _) = fingerprint_audio(clip, params);
    let votes = vote(index, &lms);
    // best bin per track; ties pick the smaller delta
    let mut per_track: Vec<(u32, u32, i64, &HashMap<i64, u32>)> = votes
        .iter()
        .map(|(&track, hist)| {
            let (&delta, &count) = hist
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .expect("histograms are non-empty");
            (track, count, delta, hist)
        })
        .collect();
    per_track.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let &(track_id, confidence, delta, hist) = per_track.first()?;
    let runner_up = per_track.get(1).map_or(0, |r| r.1);
    if confidence < params.min_hashes || f64::from(confidence) < params.margin * f64::from(runner_up) {
        return None;
    }
    // sub-frame offset from the winning bin and its neighbours
    let (mut num, mut den) = (0.0, 0.0);
    for d in delta - 1..=delta + 1 {
        let c = f64::from(hist.get(&d).copied().unwrap_or(0));
        num += c * d as f64;
        den += c;
    }
    Some(QueryMatch {
        track_id,
        confidence,
        runner_up,
        offset_s: num / den * params.frame_s(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackLogEntry {
    pub movie_ms: u64,
    pub track_id: u32,
    pub confidence: u32,
    pub offset_s: f64,
}

/// Accepted identifications sorted by movie time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackLog {
    pub entries: Vec<TrackLogEntry>,
}

/// Queries every full window of the movie audio.
pub fn scan_movie(index: &FingerprintIndex, movie: &AudioBuffer, params: &FingerprintParams) -> TrackLog {
    let audio = movie.resample(params.sample_rate);
    let duration = audio.duration_s();
    let mut starts = Vec::new();
    let mut k = 0u64;
    loop {
        let start = k as f64 * params.scan_stride_s;
        if start + params.scan_window_s > duration + 1e-9 {
            break;
        }
        starts.push(start);
        k += 1;
    }
    let entries = starts
        .par_iter()
        .filter_map(|&start| {
            let clip = audio.slice_seconds(start, start + params.scan_window_s);
            query(index, &clip, params).map(|m| TrackLogEntry {
                movie_ms: (start * 1000.0).round() as u64,
                track_id: m.track_id,
                confidence: m.confidence,
                offset_s: m.offset_s,
            })
        })
        .collect();
    TrackLog { entries }
}

const LOG_HEADER: [&str; 4] = ["movie_ms", "track_id", "confidence", "offset_s"];

pub fn track_log_tsv(log: &TrackLog) -> String {
    tsv::render(
        &LOG_HEADER,
        log.entries.iter().map(|e| {
            vec![
                e.movie_ms.to_string(),
                e.track_id.to_string(),
                e.confidence.to_string(),
                format!("{:.3}", e.offset_s),
            ]
        }),
    )
}

/// Reads a track log (ours or an imported one) and sorts it by movie time.
pub fn parse_track_log(raw: &str) -> Result<TrackLog, FingerprintError> {
    let err = |(line, message)| FingerprintError::Table { line, message };
    let mut entries = tsv::read(raw, &LOG_HEADER)
        .map_err(err)?
        .iter()
        .map(|row| {
            Ok(TrackLogEntry {
                movie_ms: tsv::field(row, 0, "movie_ms").map_err(err)?,
                track_id: tsv::field(row, 1, "track_id").map_err(err)?,
                confidence: tsv::field(row, 2, "confidence").map_err(err)?,
                offset_s: tsv::field(row, 3, "offset_s").map_err(err)?,
            })
        })
        .collect::<Result<Vec<_>, FingerprintError>>()?;
    entries.sort_by_key(|e| (e.movie_ms, e.track_id));
    Ok(TrackLog { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_valid() {
        let p = FingerprintParams::default();
        p.validate().unwrap();
        assert_eq!(p.max_dt_frames(), 26);
    }

    #[test]
    fn short_clips_are_rejected() {
        let p = FingerprintParams::default();
        let index = FingerprintIndex::default();
        assert_eq!(query(&index, &AudioBuffer::new(vec![0.1; 11025 * 2], 11025), &p), None);
    }

    #[test]
    fn log_round_trip_sorts() {
        let raw = "movie_ms\ttrack_id\tconfidence\toffset_s\n5000\t2\t40\t12.500\n0\t1\t9\t0.000\n";
        let log = parse_track_log(raw).unwrap();
        assert_eq!(log.entries[0].movie_ms, 0);
        assert_eq!(parse_track_log(&track_log_tsv(&log)).unwrap(), log);
    }

    #[test]
    fn silent_track_indexes_nothing() {
        let p = FingerprintParams::default();
        let idx = build_index(&[(1, AudioBuffer::new(vec![0.0; 11025], 11025))], &p).unwrap();
        assert_eq!(idx.hash_count(), 0);
        assert!(matches!(
            build_index(&[(2, AudioBuffer::new(vec![0.0; 100], 11025))], &p),
            Err(FingerprintError::EmptyAudio(2))
        ));
    }
}
