use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

impl Cue {
    /// Twice the midpoint, kept integral so boundary ties stay exact.
    pub fn midpoint_x2(&self) -> u64 {
        self.start_ms + self.end_ms
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtitleTrack {
    pub cues: Vec<Cue>,
}

/// Non-fatal: a cue starts before the previous one ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapWarning {
    pub cue_index: usize,
    pub previous_end_ms: u64,
    pub start_ms: u64,
}

fn tag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]*>|\{[^}]*\}").unwrap())
}

fn parse_timestamp(s: &str) -> Option<u64> {
    let s = s.trim();
    let (hms, ms) = s.split_once([',', '.'])?;
    let mut parts = hms.split(':');
    let h: u64 = parts.next()?.trim().parse().ok()?;
    let m: u64 = parts.next()?.parse().ok()?;
    let sec: u64 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || m >= 60 || sec >= 60 || ms.len() != 3 {
        return None;
    }
    let ms: u64 = ms.parse().ok()?;
    Some(((h * 60 + m) * 60 + sec) * 1000 + ms)
}

fn parse_timing(line: &str) -> Option<(u64, u64)> {
    let (a, b) = line.split_once("-->")?;
    // anything after the end time (position hints) is ignored
    let b = b.split_whitespace().next()?;
    Some((parse_timestamp(a)?, parse_timestamp(b)?))
}

/// Parses SRT subtitles.
///
/// Multi-line cue text is joined with single spaces and formatting tags are
/// removed. Cues are returned sorted by start time; overlaps are reported as
/// warnings rather than errors. Timing errors name the cue's SRT index (or its
/// 1-based position when the block has no index line).
pub fn parse_srt(raw: &str) -> Result<(SubtitleTrack, Vec<OverlapWarning>), CorpusError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let mut cues = Vec::new();
    let lines: Vec<&str> = raw.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut i = 0;
    let mut ordinal = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        ordinal += 1;
        let mut block = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            block.push(lines[i]);
            i += 1;
        }
        let (label, timing_at) = match block[0].trim().parse::<usize>() {
            Ok(n) if !block[0].contains("-->") => (n, 1),
            _ => (ordinal, 0),
        };
        let timing = block
            .get(timing_at)
            .ok_or(CorpusError::MalformedTimestamp { cue: label })?;
        let (start_ms, end_ms) =
            parse_timing(timing).ok_or(CorpusError::MalformedTimestamp { cue: label })?;
        if start_ms >= end_ms {
            return Err(CorpusError::MalformedTimestamp { cue: label });
        }
        let joined = block[timing_at + 1..].join(" ");
        let stripped = tag_pattern().replace_all(&joined, "");
        let text = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
        cues.push(Cue {
            start_ms,
            end_ms,
            text,
        });
    }
    cues.sort_by_key(|c| c.start_ms);
    let warnings = cues
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].start_ms < w[0].end_ms)
        .map(|(i, w)| OverlapWarning {
            cue_index: i + 1,
            previous_end_ms: w[0].end_ms,
            start_ms: w[1].start_ms,
        })
        .collect::<Vec<_>>();
    for w in &warnings {
        log::warn!(
            "subtitle cue {} starts at {} ms before the previous cue ends at {} ms",
            w.cue_index,
            w.start_ms,
            w.previous_end_ms
        );
    }
    Ok((SubtitleTrack { cues }, warnings))
}

fn format_timestamp(ms: u64) -> String {
    format!(
        "{:02}:{:02}:{:02},{:03}",
        ms / 3_600_000,
        ms / 60_000 % 60,
        ms / 1000 % 60,
        ms % 1000
    )
}

pub fn write_srt(track: &SubtitleTrack) -> String {
    let mut out = String::new();
    for (i, cue) in track.cues.iter().enumerate() {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            i + 1,
            format_timestamp(cue.start_ms),
            format_timestamp(cue.end_ms),
            cue.text
        ));
    }
    out
}
