use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

/// Per-paragraph emotion probabilities keyed by `(chapter, paragraph)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmotionScoreTable {
    pub rows: BTreeMap<(usize, usize), EmotionScores>,
}

/// Parses `chapter, paragraph, p_pos, p_neu, p_neg`; each row must sum to 1
/// within 1e-3.
pub fn parse_emotion_table(raw: &str) -> Result<EmotionScoreTable, CorpusError> {
    let err = CorpusError::table("emotions");
    let mut rows = BTreeMap::new();
    for row in tsv::read(raw, &["chapter", "paragraph", "p_pos", "p_neu", "p_neg"]).map_err(&err)? {
        let chapter: usize = tsv::field(&row, 0, "chapter").map_err(&err)?;
        let paragraph: usize = tsv::field(&row, 1, "paragraph").map_err(&err)?;
        let p: Vec<f64> = (2..5)
            .map(|i| tsv::field::<f64>(&row, i, "probability"))
            .collect::<Result<_, _>>()
            .map_err(&err)?;
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(err((row.line, "probability outside [0, 1]".into())));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-3 {
            return Err(err((row.line, format!("probabilities sum to {sum}"))));
        }
        let scores = EmotionScores {
            positive: p[0],
            neutral: p[1],
            negative: p[2],
        };
        if rows.insert((chapter, paragraph), scores).is_some() {
            return Err(err((row.line, format!("duplicate row {chapter}/{paragraph}"))));
        }
    }
    Ok(EmotionScoreTable { rows })
}

/// Word concreteness ratings on the 1 (abstract) to 5 (concrete) scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessLexicon {
    pub ratings: HashMap<String, f64>,
}

impl ConcretenessLexicon {
    pub fn rating(&self, word: &str) -> Option<f64> {
        self.ratings.get(word).copied()
    }
}

pub fn parse_lexicon(raw: &str) -> Result<ConcretenessLexicon, CorpusError> {
    let err = CorpusError::table("lexicon");
    let mut ratings = HashMap::new();
    for row in tsv::read(raw, &["word", "rating"]).map_err(&err)? {
        let rating: f64 = tsv::field(&row, 1, "rating").map_err(&err)?;
        if !(1.0..=5.0).contains(&rating) {
            return Err(err((row.line, format!("rating {rating} outside [1, 5]"))));
        }
        ratings.insert(row.fields[0].to_lowercase(), rating);
    }
    Ok(ConcretenessLexicon { ratings })
}

/// One word per line; blank lines and `#` comments ignored.
pub fn parse_stopwords(raw: &str) -> HashSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlbumTrack {
    pub track_id: u32,
    pub path: PathBuf,
    pub title: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlbumIndex {
    pub tracks: Vec<AlbumTrack>,
}

impl AlbumIndex {
    pub fn track(&self, id: u32) -> Option<&AlbumTrack> {
        self.tracks.iter().find(|t| t.track_id == id)
    }
}

/// Parses `track_id, path, title`; relative paths resolve against `base`.
pub fn parse_album_index(raw: &str, base: &Path) -> Result<AlbumIndex, CorpusError> {
    let err = CorpusError::table("album");
    let mut tracks: Vec<AlbumTrack> = Vec::new();
    for row in tsv::read(raw, &["track_id", "path"]).map_err(&err)? {
        let track_id: u32 = tsv::field(&row, 0, "track_id").map_err(&err)?;
        if tracks.iter().any(|t| t.track_id == track_id) {
            return Err(err((row.line, format!("duplicate track id {track_id}"))));
        }
        tracks.push(AlbumTrack {
            track_id,
            path: base.join(&row.fields[1]),
            title: row.get(2).unwrap_or("").to_string(),
        });
    }
    Ok(AlbumIndex { tracks })
}
