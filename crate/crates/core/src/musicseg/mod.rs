//! Tonal segmentation of album tracks.
//!
//! Each track becomes a series of 24-dimensional keystrength vectors over
//! overlapping windows. Boundaries are peaks of a checkerboard-kernel novelty
//! curve computed on the cosine self-similarity matrix of that series; every
//! resulting excerpt is labelled major or minor from its mean keystrength.

mod chroma;
mod keystrength;
mod novelty;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AudioBuffer;
use crate::tsv;

pub use chroma::{chroma, frame_length, ChromaFrames};
pub use keystrength::{argmax, key_name, key_profiles, keystrength, KeyProfiles, PITCH_CLASSES};
pub use novelty::{
    effective_kernel, novelty, novelty_raw, pick_boundaries, self_similarity, PeakPicking,
    SquareMatrix,
};

#[derive(Debug, Error)]
pub enum MusicSegError {
    #[error("audio of {duration_s:.3} s is shorter than the {window_s} s analysis window")]
    TooShort { duration_s: f64, window_s: f64 },
    #[error("sample rate {0} Hz is below 8000 Hz")]
    SampleRate(u32),
    #[error("fewer than two non-silent keystrength frames")]
    AllSilent,
    #[error("similarity matrix side {side} cannot hold any kernel (requested {kernel})")]
    MatrixTooSmall { side: usize, kernel: usize },
    #[error("kernel size {0} must be even and at least 2")]
    InvalidKernel(usize),
    #[error("segment {start_s:.3}-{end_s:.3} s has no non-silent frame")]
    SilentSegment { start_s: f64, end_s: f64 },
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error("music segment table line {line}: {message}")]
    Table { line: usize, message: String },
}

impl MusicSegError {
    pub fn kind(&self) -> &'static str {
        match self {
            MusicSegError::TooShort { .. } => "TooShort",
            MusicSegError::SampleRate(_) => "SampleRate",
            MusicSegError::AllSilent => "AllSilent",
            MusicSegError::MatrixTooSmall { .. } => "MatrixTooSmall",
            MusicSegError::InvalidKernel(_) => "InvalidKernel",
            MusicSegError::SilentSegment { .. } => "SilentSegment",
            MusicSegError::Config(_) => "InvalidConfig",
            MusicSegError::Table { .. } => "MalformedTable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Negative,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        }
    }

    pub fn valence(self) -> Valence {
        match self {
            Mode::Major => Valence::Positive,
            Mode::Minor => Valence::Negative,
        }
    }
}

impl Valence {
    pub fn as_str(self) -> &'static str {
        match self {
            Valence::Positive => "positive",
            Valence::Negative => "negative",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicSegConfig {
    pub window_s: f64,
    pub overlap: f64,
    pub kernel: usize,
    pub taper_ratio: f64,
    pub threshold_k: f64,
    pub min_len_s: f64,
    /// Windows quieter than this RMS are treated as silence.
    pub silence_rms: f64,
}

impl Default for MusicSegConfig {
    fn default() -> Self {
        MusicSegConfig {
            window_s: 10.0,
            overlap: 0.85,
            kernel: 64,
            taper_ratio: 0.4,
            threshold_k: 0.5,
            min_len_s: 10.0,
            silence_rms: 1e-4,
        }
    }
}

impl MusicSegConfig {
    /// Window hop, rounded to the microsecond so `10 * (1 - 0.85)` is 1.5.
    pub fn hop_s(&self) -> f64 {
        (self.window_s * (1.0 - self.overlap) * 1e6).round() / 1e6
    }

    pub fn validate(&self) -> Result<(), MusicSegError> {
        let bad = |m: &str| Err(MusicSegError::Config(m.to_string()));
        if !(self.window_s > 0.0) {
            return bad("window_s must be positive");
        }
        if !(0.0..1.0).contains(&self.overlap) || self.hop_s() <= 0.0 {
            return bad("overlap must be in [0, 1)");
        }
        if self.kernel < 2 || self.kernel % 2 != 0 {
            return Err(MusicSegError::InvalidKernel(self.kernel));
        }
        if !(self.taper_ratio > 0.0) {
            return bad("taper_ratio must be positive");
        }
        if !(self.min_len_s > 0.0) {
            return bad("min_len_s must be positive");
        }
        Ok(())
    }

    fn peak_picking(&self) -> PeakPicking {
        PeakPicking {
            hop_s: self.hop_s(),
            window_s: self.window_s,
            min_len_s: self.min_len_s,
            threshold_k: self.threshold_k,
        }
    }
}

/// Keystrength vectors over overlapping windows. Entries 0-11 are the major
/// keys C..B, 12-23 the minor keys C..B.
#[derive(Debug, Clone, PartialEq)]
pub struct KeystrengthSeries {
    pub hop_s: f64,
    pub window_s: f64,
    pub duration_s: f64,
    pub frames: Vec<[f64; 24]>,
    pub silent: Vec<bool>,
}

impl KeystrengthSeries {
    /// Centre time of window `t`.
    pub fn centre_s(&self, t: usize) -> f64 {
        t as f64 * self.hop_s + self.window_s / 2.0
    }
}

/// Number of whole windows in a track: `floor((duration - window) / hop) + 1`.
pub fn window_count(duration_s: f64, window_s: f64, hop_s: f64) -> usize {
    ((duration_s - window_s) / hop_s + 1e-9).floor() as usize + 1
}

/// Averages analysis-frame chroma into keystrength windows. A window is
/// silent when its RMS is below the configured floor or its chroma is flat.
pub fn keystrength_series(
    audio: &AudioBuffer,
    config: &MusicSegConfig,
) -> Result<KeystrengthSeries, MusicSegError> {
    config.validate()?;
    let duration_s = audio.duration_s();
    if duration_s < config.window_s {
        return Err(MusicSegError::TooShort {
            duration_s,
            window_s: config.window_s,
        });
    }
    let c = chroma(audio)?;
    let hop_s = config.hop_s();
    let n = window_count(duration_s, config.window_s, hop_s);
    let centres: Vec<f64> = (0..c.frames.len()).map(|f| c.centre_s(f)).collect();
    let mut frames = Vec::with_capacity(n);
    let mut silent = Vec::with_capacity(n);
    for t in 0..n {
        let lo = t as f64 * hop_s;
        let hi = lo + config.window_s;
        let members: Vec<usize> = (0..centres.len())
            .filter(|&f| centres[f] >= lo && centres[f] < hi)
            .collect();
        let mut mean = [0.0; 12];
        let mut power = 0.0;
        for &f in &members {
            for (m, x) in mean.iter_mut().zip(&c.frames[f]) {
                *m += x;
            }
            power += c.power[f];
        }
        if !members.is_empty() {
            let k = members.len() as f64;
            mean.iter_mut().for_each(|m| *m /= k);
            power /= k;
        }
        let ks = if power.sqrt() < config.silence_rms {
            [0.0; 24]
        } else {
            keystrength(&mean)
        };
        silent.push(ks.iter().all(|&x| x == 0.0));
        frames.push(ks);
    }
    Ok(KeystrengthSeries {
        hop_s,
        window_s: config.window_s,
        duration_s,
        frames,
        silent,
    })
}

/// A tonally cohesive excerpt of one track. Silent excerpts carry no mode
/// and are excluded from retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicSegment {
    pub track_id: u32,
    pub segment_index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub mean_keystrength: Vec<f64>,
    pub mode: Option<Mode>,
}

impl MusicSegment {
    pub fn valence(&self) -> Option<Valence> {
        self.mode.map(Mode::valence)
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Labels the excerpt `[start_s, end_s)` from the windows centred inside it.
pub fn label_segment(
    track_id: u32,
    segment_index: usize,
    start_s: f64,
    end_s: f64,
    series: &KeystrengthSeries,
) -> Result<MusicSegment, MusicSegError> {
    let members: Vec<&[f64; 24]> = (0..series.frames.len())
        .filter(|&t| !series.silent[t])
        .filter(|&t| {
            let c = series.centre_s(t);
            c >= start_s && c < end_s
        })
        .map(|t| &series.frames[t])
        .collect();
    if members.is_empty() {
        return Err(MusicSegError::SilentSegment { start_s, end_s });
    }
    let mut mean = vec![0.0; 24];
    for f in &members {
        for (m, x) in mean.iter_mut().zip(f.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= members.len() as f64);
    let mode = if argmax(&mean) < 12 { Mode::Major } else { Mode::Minor };
    Ok(MusicSegment {
        track_id,
        segment_index,
        start_s,
        end_s,
        mean_keystrength: mean,
        mode: Some(mode),
    })
}

/// Segmentation of one track plus the intermediate curve for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSegmentation {
    pub track_id: u32,
    pub duration_s: f64,
    pub segments: Vec<MusicSegment>,
    pub boundaries_s: Vec<f64>,
    /// `(window centre time, scaled novelty)`; empty when the track had too
    /// few sounding windows to compare.
    pub novelty: Vec<(f64, f64)>,
}

/// Full chain for one track: keystrength, similarity, novelty, boundaries,
/// labels.
pub fn segment_track(
    track_id: u32,
    audio: &AudioBuffer,
    config: &MusicSegConfig,
) -> Result<TrackSegmentation, MusicSegError> {
    let series = keystrength_series(audio, config)?;
    let duration_s = series.duration_s;
    let (curve, boundaries_s) = match self_similarity(&series) {
        Ok(s) => match novelty(&s, config.kernel, config.taper_ratio) {
            Ok((n, _)) => {
                let b = pick_boundaries(&n, &config.peak_picking(), duration_s);
                (n, b)
            }
            Err(MusicSegError::MatrixTooSmall { .. }) => (Vec::new(), Vec::new()),
            Err(e) => return Err(e),
        },
        Err(MusicSegError::AllSilent) => {
            log::warn!("track {track_id}: fewer than two sounding windows, one segment");
            (Vec::new(), Vec::new())
        }
        Err(e) => return Err(e),
    };
    let mut edges = vec![0.0];
    edges.extend(&boundaries_s);
    edges.push(duration_s);
    let segments = edges
        .windows(2)
        .enumerate()
        .map(|(c, w)| match label_segment(track_id, c, w[0], w[1], &series) {
            Ok(s) => s,
            Err(MusicSegError::SilentSegment { .. }) => {
                log::warn!("track {track_id} segment {c} is silent; excluded from retrieval");
                MusicSegment {
                    track_id,
                    segment_index: c,
                    start_s: w[0],
                    end_s: w[1],
                    mean_keystrength: vec![0.0; 24],
                    mode: None,
                }
            }
            Err(e) => unreachable!("label_segment only fails with SilentSegment: {e}"),
        })
        .collect();
    Ok(TrackSegmentation {
        track_id,
        duration_s,
        segments,
        boundaries_s,
        novelty: curve
            .iter()
            .enumerate()
            .map(|(t, &v)| (series.centre_s(t), v))
            .collect(),
    })
}

/// Segments several tracks in parallel; results keep the input order.
pub fn segment_album(
    tracks: &[(u32, AudioBuffer)],
    config: &MusicSegConfig,
) -> Vec<Result<TrackSegmentation, MusicSegError>> {
    tracks
        .par_iter()
        .map(|(id, audio)| segment_track(*id, audio, config))
        .collect()
}

const HEADER: [&str; 6] = ["track_id", "seg", "start_s", "end_s", "mode", "valence"];

pub fn music_segments_tsv(segments: &[MusicSegment]) -> String {
    tsv::render(
        &HEADER,
        segments.iter().map(|s| {
            vec![
                s.track_id.to_string(),
                s.segment_index.to_string(),
                format!("{:.3}", s.start_s),
                format!("{:.3}", s.end_s),
                s.mode.map_or("none", Mode::as_str).to_string(),
                s.valence().map_or("none", Valence::as_str).to_string(),
            ]
        }),
    )
}

/// Reads `music_segments.tsv`. Mean keystrength vectors are not stored and
/// come back empty.
pub fn parse_music_segments_tsv(raw: &str) -> Result<Vec<MusicSegment>, MusicSegError> {
    let err = |(line, message)| MusicSegError::Table { line, message };
    tsv::read(raw, &HEADER)
        .map_err(err)?
        .iter()
        .map(|row| {
            let mode = match row.fields[4].as_str() {
                "major" => Some(Mode::Major),
                "minor" => Some(Mode::Minor),
                "none" => None,
                other => return Err(err((row.line, format!("invalid mode {other:?}")))),
            };
            let start_s: f64 = tsv::field(row, 2, "start_s").map_err(err)?;
            let end_s: f64 = tsv::field(row, 3, "end_s").map_err(err)?;
            if !(start_s < end_s) {
                return Err(err((row.line, "start_s must be below end_s".into())));
            }
            Ok(MusicSegment {
                track_id: tsv::field(row, 0, "track_id").map_err(err)?,
                segment_index: tsv::field(row, 1, "seg").map_err(err)?,
                start_s,
                end_s,
                mean_keystrength: Vec::new(),
                mode,
            })
        })
        .collect()
}

/// Novelty curve as CSV `t,novelty`.
pub fn novelty_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("t,novelty\n");
    for (t, v) in curve {
        out.push_str(&format!("{t:.3},{v:.6}\n"));
    }
    out
}
