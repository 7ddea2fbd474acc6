use serde::{Deserialize, Serialize};

use super::lcs_distance;
use crate::corpus::{SubtitleTrack, Transcript};
use crate::text::tokens;

/// Cues whose best matched line is farther than this get no speaker.
pub const UNKNOWN_SPEAKER_DISTANCE: f64 = 0.8;

/// Step that entered a cell of the warping path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Start,
    Diagonal,
    /// Next transcript line, same cue.
    Down,
    /// Next cue, same transcript line.
    Right,
}

/// Minimal-cost monotone path through a `rows x cols` cost matrix using
/// diagonal, down and right steps. Ties prefer diagonal, then down, then
/// right. Returns the path as `(row, col)` pairs and its total cost.
pub fn dtw_path(cost: &[Vec<f64>]) -> (Vec<(usize, usize)>, f64) {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (Vec::new(), 0.0);
    }
    let mut acc = vec![vec![f64::INFINITY; cols]; rows];
    let mut step = vec![vec![Step::Start; cols]; rows];
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 && c == 0 {
                acc[0][0] = cost[0][0];
                continue;
            }
            let mut best = (f64::INFINITY, Step::Start);
            for (ok, prev, s) in [
                (r > 0 && c > 0, (r.wrapping_sub(1), c.wrapping_sub(1)), Step::Diagonal),
                (r > 0, (r.wrapping_sub(1), c), Step::Down),
                (c > 0, (r, c.wrapping_sub(1)), Step::Right),
            ] {
                if ok && acc[prev.0][prev.1] < best.0 {
                    best = (acc[prev.0][prev.1], s);
                }
            }
            acc[r][c] = best.0 + cost[r][c];
            step[r][c] = best.1;
        }
    }
    let mut path = vec![(rows - 1, cols - 1)];
    let (mut r, mut c) = (rows - 1, cols - 1);
    loop {
        match step[r][c] {
            Step::Start => break,
            Step::Diagonal => {
                r -= 1;
                c -= 1;
            }
            Step::Down => r -= 1,
            Step::Right => c -= 1,
        }
        path.push((r, c));
    }
    path.reverse();
    (path, acc[rows - 1][cols - 1])
}

/// Speaker of every subtitle cue, recovered by warping cues onto the
/// transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerAttribution {
    /// Indexed like the subtitle cues.
    pub speakers: Vec<Option<String>>,
    /// Distance of each cue to its chosen line.
    pub distances: Vec<f64>,
    /// Warping path as `(transcript line, cue)` pairs.
    pub path: Vec<(usize, usize)>,
    pub cost: f64,
}

/// DTW over transcript lines (rows) and subtitle cues (columns) with LCS
/// token distance. A cue warped onto several lines takes the closest one
/// (earliest on ties); cues farther than [`UNKNOWN_SPEAKER_DISTANCE`] stay
/// unattributed.
pub fn dtw_attribute_speakers(subtitles: &SubtitleTrack, transcript: &Transcript) -> SpeakerAttribution {
    let cue_tokens: Vec<Vec<String>> = subtitles.cues.iter().map(|c| tokens(&c.text)).collect();
    let line_tokens: Vec<Vec<String>> = transcript
        .lines
        .iter()
        .map(|l| tokens(&l.utterance))
        .collect();
    let n_cues = cue_tokens.len();
    if n_cues == 0 || line_tokens.is_empty() {
        return SpeakerAttribution {
            speakers: vec![None; n_cues],
            distances: vec![1.0; n_cues],
            path: Vec::new(),
            cost: 0.0,
        };
    }
    let cost: Vec<Vec<f64>> = line_tokens
        .iter()
        .map(|l| cue_tokens.iter().map(|c| lcs_distance(l, c)).collect())
        .collect();
    let (path, total) = dtw_path(&cost);
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n_cues];
    for &(line, cue) in &path {
        let d = cost[line][cue];
        if best[cue].is_none_or(|(bd, _)| d < bd) {
            best[cue] = Some((d, line));
        }
    }
    let mut speakers = Vec::with_capacity(n_cues);
    let mut distances = Vec::with_capacity(n_cues);
    for b in best {
        let (d, line) = b.expect("a warping path visits every column");
        distances.push(d);
        speakers.push((d <= UNKNOWN_SPEAKER_DISTANCE).then(|| transcript.lines[line].speaker.clone()));
    }
    SpeakerAttribution {
        speakers,
        distances,
        path,
        cost: total,
    }
}
