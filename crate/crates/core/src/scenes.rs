//! Grouping of shots into scenes.
//!
//! Scenes are contiguous shot runs chosen by dynamic programming to minimize
//! the summed average pairwise cosine dissimilarity inside every scene.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ShotTable, SubtitleTrack};
use crate::tsv;
use crate::vecmath::{dot, mean_direction, to_f64};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot form {q} scenes from {shots} shots")]
    QTooLarge { q: usize, shots: usize },
    #[error("scene count must be at least 1")]
    ZeroScenes,
    #[error("scene table line {line}: {message}")]
    Table { line: usize, message: String },
}

impl SceneError {
    pub fn kind(&self) -> &'static str {
        match self {
            SceneError::QTooLarge { .. } => "QTooLarge",
            SceneError::ZeroScenes => "ZeroScenes",
            SceneError::Table { .. } => "MalformedTable",
        }
    }
}

/// One subtitle cue attached to a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub cue_index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub speaker: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: u32,
    /// Positions in the shot table, inclusive.
    pub first_shot: usize,
    pub last_shot: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub character_histogram: BTreeMap<String, usize>,
    pub dialogues: Vec<Utterance>,
}

impl Scene {
    pub fn shot_count(&self) -> usize {
        self.last_shot - self.first_shot + 1
    }
}

/// Default scene count: one scene per 21 shots, at least one.
pub fn default_scene_count(shots: usize) -> usize {
    ((shots as f64 / 21.0).round() as usize).clamp(1, shots.max(1))
}

/// Unit shot features: the re-normalized mean of each shot's frames.
pub fn shot_features(shots: &ShotTable) -> Vec<Vec<f64>> {
    shots
        .shots
        .iter()
        .map(|s| {
            let frames: Vec<Vec<f64>> = s.frame_embeddings.iter().map(|f| to_f64(f)).collect();
            let dim = frames.first().map_or(0, Vec::len);
            mean_direction(frames.iter().map(Vec::as_slice), dim)
        })
        .collect()
}

/// Scene costs from 2-D prefix sums of the shot similarity matrix.
pub struct SceneCost {
    n: usize,
    /// `prefix[(a, b)]` = sum of `sim[i][j]` for `i < a`, `j < b`.
    prefix: Vec<f64>,
    diag: Vec<f64>,
}

impl SceneCost {
    pub fn new(features: &[Vec<f64>]) -> SceneCost {
        let n = features.len();
        let w = n + 1;
        let mut prefix = vec![0.0; w * w];
        let mut diag = vec![0.0; w];
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += dot(&features[i], &features[j]);
                prefix[(i + 1) * w + j + 1] = prefix[i * w + j + 1] + row;
            }
            diag[i + 1] = diag[i] + dot(&features[i], &features[i]);
        }
        SceneCost { n, prefix, diag }
    }

    fn block(&self, a: usize, b: usize) -> f64 {
        let w = self.n + 1;
        self.prefix[b * w + b] - self.prefix[a * w + b] - self.prefix[b * w + a]
            + self.prefix[a * w + a]
    }

    /// Average pairwise `1 - cos` of shots `a..b` (exclusive); 0 for a single
    /// shot.
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        let m = (b - a) as f64;
        if m < 2.0 {
            return 0.0;
        }
        let off_diag = self.block(a, b) - (self.diag[b] - self.diag[a]);
        (1.0 - off_diag / (m * (m - 1.0))).max(0.0)
    }
}

/// Optimal contiguous partition of `features` into `q` groups; returns the
/// exclusive end of every group. Ties prefer the earlier boundary.
pub fn partition_shots(features: &[Vec<f64>], q: usize) -> Result<(Vec<usize>, f64), SceneError> {
    let n = features.len();
    if q == 0 {
        return Err(SceneError::ZeroScenes);
    }
    if q > n {
        return Err(SceneError::QTooLarge { q, shots: n });
    }
    let cost = SceneCost::new(features);
    // best[k][j]: k+1 groups covering shots 0..j
    let mut best = vec![vec![f64::INFINITY; n + 1]; q];
    let mut back = vec![vec![0usize; n + 1]; q];
    for j in 1..=n {
        best[0][j] = cost.cost(0, j);
    }
    for k in 1..q {
        for j in k + 1..=n {
            let mut b = (f64::INFINITY, 0);
            for i in k..j {
                let c = best[k - 1][i] + cost.cost(i, j);
                if c < b.0 {
                    b = (c, i);
                }
            }
            best[k][j] = b.0;
            back[k][j] = b.1;
        }
    }
    let mut ends = vec![n];
    let mut j = n;
    for k in (1..q).rev() {
        j = back[k][j];
        ends.push(j);
    }
    ends.reverse();
    Ok((ends, best[q - 1][n]))
}

/// Groups shots into `q` scenes.
pub fn group_scenes(shots: &ShotTable, q: usize) -> Result<Vec<Scene>, SceneError> {
    let (ends, total) = partition_shots(&shot_features(shots), q)?;
    log::debug!("{} scenes, total cost {total:.4}", ends.len());
    let mut start = 0;
    Ok(ends
        .iter()
        .enumerate()
        .map(|(id, &end)| {
            let scene = Scene {
                scene_id: id as u32,
                first_shot: start,
                last_shot: end - 1,
                start_ms: shots.shots[start].start_ms,
                end_ms: shots.shots[end - 1].end_ms,
                character_histogram: BTreeMap::new(),
                dialogues: Vec::new(),
            };
            start = end;
            scene
        })
        .collect())
}

/// Attaches every cue to the scene containing its midpoint (the earlier
/// scene on a shared boundary). `speakers[i]` is the speaker of cue `i`.
/// Returns the number of cues that fell outside every scene.
pub fn attach_dialogue(
    scenes: &mut [Scene],
    subtitles: &SubtitleTrack,
    speakers: &[Option<String>],
) -> usize {
    for s in scenes.iter_mut() {
        s.character_histogram.clear();
        s.dialogues.clear();
    }
    let mut dropped = 0;
    for (i, cue) in subtitles.cues.iter().enumerate() {
        let mid2 = cue.midpoint_x2();
        let Some(scene) = scenes
            .iter_mut()
            .find(|s| 2 * s.start_ms <= mid2 && mid2 <= 2 * s.end_ms)
        else {
            dropped += 1;
            continue;
        };
        let speaker = speakers.get(i).cloned().flatten();
        if let Some(name) = &speaker {
            *scene.character_histogram.entry(name.clone()).or_insert(0) += 1;
        }
        scene.dialogues.push(Utterance {
            cue_index: i,
            start_ms: cue.start_ms,
            end_ms: cue.end_ms,
            speaker,
            text: cue.text.clone(),
        });
    }
    if dropped > 0 {
        log::warn!("{dropped} subtitle cues fall outside every scene and were dropped");
    }
    dropped
}

const HEADER: [&str; 5] = ["scene_id", "first_shot", "last_shot", "start_ms", "end_ms"];

pub fn scenes_tsv(scenes: &[Scene]) -> String {
    tsv::render(
        &HEADER,
        scenes.iter().map(|s| {
            vec![
                s.scene_id.to_string(),
                s.first_shot.to_string(),
                s.last_shot.to_string(),
                s.start_ms.to_string(),
                s.end_ms.to_string(),
            ]
        }),
    )
}

pub fn parse_scenes_tsv(raw: &str) -> Result<Vec<Scene>, SceneError> {
    let err = |(line, message)| SceneError::Table { line, message };
    tsv::read(raw, &HEADER)
        .map_err(err)?
        .iter()
        .map(|row| {
            Ok(Scene {
                scene_id: tsv::field(row, 0, "scene_id").map_err(err)?,
                first_shot: tsv::field(row, 1, "first_shot").map_err(err)?,
                last_shot: tsv::field(row, 2, "last_shot").map_err(err)?,
                start_ms: tsv::field(row, 3, "start_ms").map_err(err)?,
                end_ms: tsv::field(row, 4, "end_ms").map_err(err)?,
                character_histogram: BTreeMap::new(),
                dialogues: Vec::new(),
            })
        })
        .collect()
}
