//! Coarse book-to-movie alignment.
//!
//! Subtitle cues get speakers by warping them onto the transcript; movie
//! speaker names are matched to book speaker names; chapters and scenes are
//! compared through character histograms and shared dialogue; finally a
//! monotone shortest path assigns every scene one chapter.

mod dtw;
mod lcs;
mod path;
mod similarity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::BookStructure;
use crate::scenes::Scene;
use crate::tsv;

pub use dtw::{dtw_attribute_speakers, dtw_path, SpeakerAttribution, Step, UNKNOWN_SPEAKER_DISTANCE};
pub use lcs::{lcs_distance, lcs_len, name_ratio};
pub use path::{shortest_path_align, shot_accuracy, PathAssignment};
pub use similarity::{
    chapter_dialogue, chapter_scene_similarity, dialogue_similarity, match_character_names,
    ChapterSceneSimilarity, DIALOGUE_MIN_SIMILARITY, NAME_MATCH_RATIO,
};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("cannot align {chapters} chapters onto {scenes} scenes")]
    InfeasibleShape { chapters: usize, scenes: usize },
    #[error("{table} table line {line}: {message}")]
    Table {
        table: &'static str,
        line: usize,
        message: String,
    },
}

impl AlignError {
    pub fn kind(&self) -> &'static str {
        match self {
            AlignError::InfeasibleShape { .. } => "InfeasibleShape",
            AlignError::Table { .. } => "MalformedTable",
        }
    }
}

/// A book sentence whose direct speech matches a subtitle cue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueMatch {
    pub chapter: usize,
    pub paragraph: usize,
    pub sentence: usize,
    pub scene_id: u32,
    pub cue_time_ms: u64,
    pub lcs_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseAlignment {
    /// Chapter of every scene, indexed by scene id.
    pub scene_to_chapter: Vec<usize>,
    pub dialogue_matches: Vec<DialogueMatch>,
    /// Scenes forced onto a chapter with unusually low similarity.
    pub low_similarity: Vec<u32>,
}

impl CoarseAlignment {
    /// Scene ids assigned to a chapter.
    pub fn scenes_of(&self, chapter: usize) -> Vec<u32> {
        self.scene_to_chapter
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == chapter)
            .map(|(s, _)| s as u32)
            .collect()
    }
}

/// For every quoted book sentence, the best-matching utterance among the
/// scenes aligned to its chapter, if it reaches the dialogue threshold.
/// Ties keep the earliest cue.
pub fn find_dialogue_matches(
    book: &BookStructure,
    scenes: &[Scene],
    scene_to_chapter: &[usize],
) -> Vec<DialogueMatch> {
    let mut out = Vec::new();
    for chapter in 0..book.chapters.len() {
        let utterances: Vec<(u32, u64, Vec<String>)> = scenes
            .iter()
            .filter(|s| scene_to_chapter[s.scene_id as usize] == chapter)
            .flat_map(|s| {
                s.dialogues
                    .iter()
                    .map(move |u| (s.scene_id, u.start_ms, crate::text::tokens(&u.text)))
            })
            .collect();
        for (paragraph, sentence, toks) in chapter_dialogue(book, chapter) {
            let mut best: Option<(f64, u32, u64)> = None;
            for (scene, ms, u) in &utterances {
                let s = dialogue_similarity(&toks, u);
                if s > 0.0 && best.is_none_or(|b| s > b.0) {
                    best = Some((s, *scene, *ms));
                }
            }
            if let Some((score, scene_id, cue_time_ms)) = best {
                out.push(DialogueMatch {
                    chapter,
                    paragraph,
                    sentence,
                    scene_id,
                    cue_time_ms,
                    lcs_score: score,
                });
            }
        }
    }
    out
}

/// Runs name matching, similarity and path search on scenes that already
/// carry dialogue.
pub fn align_book_movie(
    book: &BookStructure,
    scenes: &[Scene],
    movie_speakers: &[String],
    alpha: f64,
) -> Result<(CoarseAlignment, ChapterSceneSimilarity), AlignError> {
    let name_map = match_character_names(&book.speakers(), movie_speakers);
    log::info!("matched {} of {} movie speakers to book names", name_map.len(), movie_speakers.len());
    let sim = chapter_scene_similarity(book, scenes, &name_map, alpha);
    let path = shortest_path_align(&sim)?;
    let dialogue_matches = find_dialogue_matches(book, scenes, &path.scene_to_chapter);
    Ok((
        CoarseAlignment {
            low_similarity: path.low_similarity.iter().map(|&s| s as u32).collect(),
            scene_to_chapter: path.scene_to_chapter,
            dialogue_matches,
        },
        sim,
    ))
}

const COARSE_HEADER: [&str; 3] = ["scene_id", "chapter", "low_similarity"];
const MATCH_HEADER: [&str; 6] = ["chapter", "paragraph", "sentence", "scene", "cue_ms", "score"];

pub fn coarse_alignment_tsv(a: &CoarseAlignment) -> String {
    tsv::render(
        &COARSE_HEADER,
        a.scene_to_chapter.iter().enumerate().map(|(s, c)| {
            let low = a.low_similarity.contains(&(s as u32));
            vec![s.to_string(), c.to_string(), u8::from(low).to_string()]
        }),
    )
}

pub fn dialogue_matches_tsv(matches: &[DialogueMatch]) -> String {
    tsv::render(
        &MATCH_HEADER,
        matches.iter().map(|m| {
            vec![
                m.chapter.to_string(),
                m.paragraph.to_string(),
                m.sentence.to_string(),
                m.scene_id.to_string(),
                m.cue_time_ms.to_string(),
                format!("{:.4}", m.lcs_score),
            ]
        }),
    )
}

/// Reads both alignment tables back.
pub fn parse_coarse_alignment(coarse: &str, matches: &str) -> Result<CoarseAlignment, AlignError> {
    let err = |table| move |(line, message)| AlignError::Table { table, line, message };
    let mut scene_to_chapter = Vec::new();
    let mut low_similarity = Vec::new();
    for row in tsv::read(coarse, &COARSE_HEADER[..2]).map_err(err("coarse_alignment"))? {
        let scene: usize = tsv::field(&row, 0, "scene_id").map_err(err("coarse_alignment"))?;
        if scene != scene_to_chapter.len() {
            return Err(err("coarse_alignment")((row.line, format!("scene {scene} out of order"))));
        }
        scene_to_chapter.push(tsv::field(&row, 1, "chapter").map_err(err("coarse_alignment"))?);
        if row.get(2) == Some("1") {
            low_similarity.push(scene as u32);
        }
    }
    let e = err("dialogue_matches");
    let dialogue_matches = tsv::read(matches, &MATCH_HEADER)
        .map_err(e)?
        .iter()
        .map(|row| {
            Ok(DialogueMatch {
                chapter: tsv::field(row, 0, "chapter").map_err(e)?,
                paragraph: tsv::field(row, 1, "paragraph").map_err(e)?,
                sentence: tsv::field(row, 2, "sentence").map_err(e)?,
                scene_id: tsv::field(row, 3, "scene").map_err(e)?,
                cue_time_ms: tsv::field(row, 4, "cue_ms").map_err(e)?,
                lcs_score: tsv::field(row, 5, "score").map_err(e)?,
            })
        })
        .collect::<Result<_, AlignError>>()?;
    Ok(CoarseAlignment {
        scene_to_chapter,
        dialogue_matches,
        low_similarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_round_trip() {
        let a = CoarseAlignment {
            scene_to_chapter: vec![0, 0, 1],
            dialogue_matches: vec![DialogueMatch {
                chapter: 1,
                paragraph: 4,
                sentence: 0,
                scene_id: 2,
                cue_time_ms: 61_000,
                lcs_score: 0.75,
            }],
            low_similarity: vec![1],
        };
        let back = parse_coarse_alignment(
            &coarse_alignment_tsv(&a),
            &dialogue_matches_tsv(&a.dialogue_matches),
        )
        .unwrap();
        assert_eq!(back, a);
        assert_eq!(a.scenes_of(0), vec![0, 1]);
    }
}
