use serde::{Deserialize, Serialize};

use super::{frame_key, CorpusError, EmbeddingBundle};
use crate::tsv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub shot_id: u32,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Unit-norm frame embeddings, at least one per shot.
    pub frame_embeddings: Vec<Vec<f32>>,
}

impl Shot {
    pub fn midpoint_ms(&self) -> u64 {
        (self.start_ms + self.end_ms) / 2
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotTable {
    pub shots: Vec<Shot>,
}

const HEADER: [&str; 3] = ["shot_id", "start_ms", "end_ms"];

/// Parses the shot TSV and attaches frames `shot:<id>:frame:0..` from the
/// frame bundle. Every shot needs at least frame 0; shots must be sorted and
/// non-overlapping.
pub fn parse_shot_table(raw: &str, frames: &EmbeddingBundle) -> Result<ShotTable, CorpusError> {
    let err = CorpusError::table("shots");
    let mut shots: Vec<Shot> = Vec::new();
    for row in tsv::read(raw, &HEADER).map_err(&err)? {
        let shot_id: u32 = tsv::field(&row, 0, "shot_id").map_err(&err)?;
        let start_ms: u64 = tsv::field(&row, 1, "start_ms").map_err(&err)?;
        let end_ms: u64 = tsv::field(&row, 2, "end_ms").map_err(&err)?;
        if start_ms >= end_ms {
            return Err(CorpusError::Shots(format!(
                "shot {shot_id} has start {start_ms} >= end {end_ms}"
            )));
        }
        if let Some(prev) = shots.last() {
            if start_ms < prev.end_ms {
                return Err(CorpusError::Shots(format!(
                    "shot {shot_id} starts at {start_ms} before shot {} ends at {}",
                    prev.shot_id, prev.end_ms
                )));
            }
        }
        let mut frame_embeddings = Vec::new();
        loop {
            let key = frame_key(shot_id, frame_embeddings.len());
            if frames.get(&key).is_none() {
                if frame_embeddings.is_empty() {
                    return Err(CorpusError::UnresolvedId(key));
                }
                break;
            }
            frame_embeddings.push(frames.require(&key)?.to_vec());
        }
        shots.push(Shot {
            shot_id,
            start_ms,
            end_ms,
            frame_embeddings,
        });
    }
    Ok(ShotTable { shots })
}

pub fn shots_tsv(table: &ShotTable) -> String {
    tsv::render(
        &HEADER,
        table.shots.iter().map(|s| {
            vec![
                s.shot_id.to_string(),
                s.start_ms.to_string(),
                s.end_ms.to_string(),
            ]
        }),
    )
}
