use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lcs_distance, name_ratio};
use crate::corpus::BookStructure;
use crate::scenes::Scene;
use crate::text::{quoted_text, tokens};

/// Minimum character-level LCS ratio for two names to be the same character.
pub const NAME_MATCH_RATIO: f64 = 0.7;
/// Dialogue pairs below this similarity count as no evidence.
pub const DIALOGUE_MIN_SIMILARITY: f64 = 0.5;

/// Greedy best-first matching of book speaker names to movie speaker names.
/// Returns `movie name -> book name`. Higher ratios are matched first; ties
/// go to the lexicographically smaller book name, then movie name.
pub fn match_character_names(book: &[String], movie: &[String]) -> BTreeMap<String, String> {
    let mut pairs: Vec<(f64, &String, &String)> = Vec::new();
    for b in book {
        for m in movie {
            let r = name_ratio(b, m);
            if r >= NAME_MATCH_RATIO {
                pairs.push((r, b, m));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(y.1)).then(x.2.cmp(y.2)));
    let mut used_book = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (_, b, m) in pairs {
        if out.contains_key(m) || used_book.contains(b) {
            continue;
        }
        used_book.insert(b.clone());
        out.insert(m.clone(), b.clone());
    }
    out
}

/// Chapter-by-scene similarity and its two components, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterSceneSimilarity {
    /// `matrix[chapter][scene] = 0.5 * char + 0.5 * alpha * dlg`.
    pub matrix: Vec<Vec<f64>>,
    /// Min-max normalized character-histogram cosine.
    pub char_sim: Vec<Vec<f64>>,
    /// Min-max normalized best dialogue similarity.
    pub dlg_sim: Vec<Vec<f64>>,
    /// Components before normalization.
    pub char_raw: Vec<Vec<f64>>,
    pub dlg_raw: Vec<Vec<f64>>,
}

impl ChapterSceneSimilarity {
    /// Builds the combined matrix from raw components.
    pub fn from_components(char_raw: Vec<Vec<f64>>, dlg_raw: Vec<Vec<f64>>, alpha: f64) -> Self {
        let char_sim = min_max(&char_raw);
        let dlg_sim = min_max(&dlg_raw);
        let matrix = char_sim
            .iter()
            .zip(&dlg_sim)
            .map(|(c, d)| c.iter().zip(d).map(|(c, d)| 0.5 * c + 0.5 * alpha * d).collect())
            .collect();
        ChapterSceneSimilarity {
            matrix,
            char_sim,
            dlg_sim,
            char_raw,
            dlg_raw,
        }
    }

    /// Wraps a ready-made matrix (both components set to it).
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Self {
        ChapterSceneSimilarity {
            char_sim: matrix.clone(),
            dlg_sim: matrix.clone(),
            char_raw: matrix.clone(),
            dlg_raw: matrix.clone(),
            matrix,
        }
    }

    pub fn chapters(&self) -> usize {
        self.matrix.len()
    }

    pub fn scenes(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }
}

/// Min-max normalization over the whole matrix; a constant matrix maps to 0.
fn min_max(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let lo = m.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = m.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    m.iter()
        .map(|row| {
            row.iter()
                .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Inverse character frequency `max(0, ln(Q / (1 + df)))` over scene
/// histograms keyed by canonical name.
fn icf(scene_hists: &[BTreeMap<String, f64>]) -> BTreeMap<String, f64> {
    let q = scene_hists.len() as f64;
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for h in scene_hists {
        for (name, &count) in h {
            if count > 0.0 {
                *df.entry(name.clone()).or_default() += 1;
            }
        }
    }
    df.into_iter()
        .map(|(name, d)| (name, (q / (1.0 + d as f64)).ln().max(0.0)))
        .collect()
}

fn weighted_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>, w: &dyn Fn(&str) -> f64) -> f64 {
    let norm = |h: &BTreeMap<String, f64>| {
        h.iter().map(|(k, v)| (v * w(k)).powi(2)).sum::<f64>().sqrt()
    };
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| va * vb * w(k).powi(2)))
        .sum();
    dot / (na * nb)
}

/// Tokenized direct speech of a chapter: `(paragraph, sentence, tokens)`.
pub fn chapter_dialogue(book: &BookStructure, chapter: usize) -> Vec<(usize, usize, Vec<String>)> {
    book.chapters[chapter]
        .paragraphs
        .iter()
        .enumerate()
        .flat_map(|(p, par)| {
            par.quotes.iter().map(move |q| {
                let sentence = &par.sentences[q.sentence_index];
                (p, q.sentence_index, tokens(&quoted_text(sentence)))
            })
        })
        .filter(|(_, _, t)| !t.is_empty())
        .collect()
}

/// Similarity of two token sequences, zeroed below the dialogue threshold.
pub fn dialogue_similarity(a: &[String], b: &[String]) -> f64 {
    let s = 1.0 - lcs_distance(a, b);
    if s < DIALOGUE_MIN_SIMILARITY {
        0.0
    } else {
        s
    }
}

/// Character and dialogue similarity between every chapter and scene.
///
/// Scene histograms are translated into book names through `name_map`
/// (movie name -> book name); unmatched movie names stay separate and only
/// dilute their scene's vector.
pub fn chapter_scene_similarity(
    book: &BookStructure,
    scenes: &[Scene],
    name_map: &BTreeMap<String, String>,
    alpha: f64,
) -> ChapterSceneSimilarity {
    let scene_hists: Vec<BTreeMap<String, f64>> = scenes
        .iter()
        .map(|s| {
            let mut h = BTreeMap::new();
            for (name, &count) in &s.character_histogram {
                let key = name_map
                    .get(name)
                    .cloned()
                    .unwrap_or_else(|| format!("movie:{name}"));
                *h.entry(key).or_insert(0.0) += count as f64;
            }
            h
        })
        .collect();
    let weights = icf(&scene_hists);
    let q = scenes.len() as f64;
    // characters absent from every scene have df 0
    let w = |name: &str| weights.get(name).copied().unwrap_or_else(|| q.ln().max(0.0));
    let scene_lines: Vec<Vec<Vec<String>>> = scenes
        .iter()
        .map(|s| s.dialogues.iter().map(|u| tokens(&u.text)).collect())
        .collect();

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..book.chapters.len())
        .into_par_iter()
        .map(|i| {
            let hist: BTreeMap<String, f64> = book.chapters[i]
                .speaker_histogram()
                .into_iter()
                .map(|(k, v)| (k, v as f64))
                .collect();
            let dialogue = chapter_dialogue(book, i);
            let chars = scene_hists
                .iter()
                .map(|sh| weighted_cosine(&hist, sh, &w))
                .collect();
            let dlg = scene_lines
                .iter()
                .map(|lines| {
                    dialogue
                        .iter()
                        .flat_map(|(_, _, a)| lines.iter().map(move |b| dialogue_similarity(a, b)))
                        .fold(0.0, f64::max)
                })
                .collect();
            (chars, dlg)
        })
        .collect();
    let (char_raw, dlg_raw): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    ChapterSceneSimilarity::from_components(char_raw, dlg_raw, alpha)
}
