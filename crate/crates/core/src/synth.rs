//! Synthetic fixtures: planted embedding blocks, tonal audio in a chosen key,
//! speech-like noise and a small, fully consistent book/movie/album corpus.
//!
//! Everything is driven by explicit seeds so fixtures are reproducible.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regex::Regex;
use thiserror::Error;

use crate::corpus::{
    self, frame_key, paragraph_key, sentence_key, AudioBuffer, Cue, EmbeddingBundle, QuoteAnnotation,
    Shot, ShotTable, SubtitleTrack,
};
use crate::musicseg::key_profiles;
use crate::tsv;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng, n: usize, sigma: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// `count` random orthonormal vectors of length `dim` (Gram–Schmidt).
pub fn orthonormal(rng: &mut impl Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(count <= dim, "cannot fit {count} orthogonal vectors in {dim} dimensions");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = gaussian(rng, dim, 1.0);
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// A chapter of paragraph features built from contiguous blocks.
#[derive(Debug, Clone)]
pub struct PlantedChapter {
    pub features: Vec<Vec<f64>>,
    /// Paragraph index runs, one per block.
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy)]
pub struct PlantedSpec {
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub dim: usize,
    /// Per-coordinate noise standard deviation.
    pub sigma: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            min_blocks: 3,
            max_blocks: 6,
            min_len: 4,
            max_len: 12,
            dim: 32,
            sigma: 0.1,
        }
    }
}

/// Blocks with orthonormal means plus isotropic Gaussian noise.
pub fn planted_chapter(seed: u64, spec: &PlantedSpec) -> PlantedChapter {
    let mut rng = rng(seed);
    let k = rng.random_range(spec.min_blocks..=spec.max_blocks);
    let means = orthonormal(&mut rng, k, spec.dim);
    let mut features = Vec::new();
    let mut blocks = Vec::new();
    for mean in &means {
        let len = rng.random_range(spec.min_len..=spec.max_len);
        let start = features.len();
        for _ in 0..len {
            let noise = gaussian(&mut rng, spec.dim, spec.sigma);
            features.push(mean.iter().zip(noise).map(|(m, e)| m + e).collect());
        }
        blocks.push((start..start + len).collect());
    }
    PlantedChapter { features, blocks }
}

fn midi_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

/// Pitch-class sampling weights emphasizing the key's tonal hierarchy.
fn key_weights(key: usize) -> [f64; 12] {
    let profile = key_profiles().rotated(key);
    let floor = profile.iter().copied().fold(f64::INFINITY, f64::min);
    profile.map(|p| (p - floor + 0.2).powi(3))
}

fn sample_weighted(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Adds one decaying harmonic note into `out`.
fn add_note(out: &mut [f64], sr: f64, start: usize, len: usize, freq: f64, gain: f64) {
    let attack = (0.01 * sr) as usize;
    let end = (start + len).min(out.len());
    for (i, slot) in out[start..end].iter_mut().enumerate() {
        let t = i as f64 / sr;
        let env = if i < attack {
            i as f64 / attack as f64
        } else {
            (-(t - 0.01) / 0.35).exp()
        };
        let w = 2.0 * PI * freq * t;
        *slot += gain * env * (w.sin() + 0.4 * (2.0 * w).sin() + 0.15 * (3.0 * w).sin());
    }
}

/// Tonal music in key `key` (0–11 major, 12–23 minor): a stream of chords
/// whose pitch classes are drawn from the key profile, with a tonic bass.
pub fn key_section(key: usize, seconds: f64, sample_rate: u32, rng: &mut impl Rng) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let n = (seconds * sr).round() as usize;
    let mut out = vec![0.0; n];
    let weights = key_weights(key);
    let tonic = key % 12;
    let beat = rng.random_range(0.35..0.6);
    let beat_len = (beat * sr) as usize;
    let mut start = 0;
    while start < n {
        for _ in 0..3 {
            let pc = sample_weighted(rng, &weights);
            let octave = rng.random_range(0..3) as f64;
            let midi = 48.0 + pc as f64 + 12.0 * octave;
            add_note(&mut out, sr, start, beat_len * 2, midi_hz(midi), 0.25);
        }
        if rng.random_bool(0.5) {
            add_note(&mut out, sr, start, beat_len * 2, midi_hz(36.0 + tonic as f64), 0.3);
        }
        start += beat_len;
    }
    out
}

/// Concatenated key sections, peak-normalized to 0.8.
pub fn tonal_track(sections: &[(usize, f64)], sample_rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = rng(seed);
    let mut samples = Vec::new();
    for &(key, seconds) in sections {
        samples.extend(key_section(key, seconds, sample_rate, &mut rng));
    }
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-9);
    AudioBuffer::new(
        samples.iter().map(|x| (x / peak * 0.8) as f32).collect(),
        sample_rate,
    )
}

/// A track of `sections` random keys, `section_s` seconds each.
pub fn random_track(sections: usize, section_s: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let mut r = rng(seed ^ 0x5eed_0f_7ac4);
    let keys: Vec<(usize, f64)> = (0..sections)
        .map(|_| (r.random_range(0..24), section_s))
        .collect();
    tonal_track(&keys, sample_rate, seed)
}

/// Second-order resonator (constant peak gain band-pass).
struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, q: f64, sr: f64) -> Resonator {
        let w = 2.0 * PI * freq / sr;
        let alpha = w.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Resonator {
            b0: alpha / a0,
            a1: -2.0 * w.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * (x - self.x2) - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Formant-filtered noise bursts with a syllabic envelope and pauses; a
/// stand-in for dialogue under the score. RMS is roughly `level`.
pub fn speech_like(seconds: f64, sample_rate: u32, level: f64, rng: &mut impl Rng) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let n = (seconds * sr).round() as usize;
    let mut out = vec![0.0; n];
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut pos = 0;
    while pos < n {
        let syll = (rng.random_range(0.12..0.3) * sr) as usize;
        let f1 = rng.random_range(300.0..900.0);
        let f2 = rng.random_range(900.0..2500.0);
        let mut r1 = Resonator::new(f1, 5.0, sr);
        let mut r2 = Resonator::new(f2, 8.0, sr);
        let end = (pos + syll).min(n);
        for (i, slot) in out[pos..end].iter_mut().enumerate() {
            let x = noise.sample(rng);
            let env = (PI * i as f64 / syll as f64).sin();
            *slot = env * (r1.step(x) + 0.6 * r2.step(x));
        }
        pos = end;
        if rng.random_bool(0.25) {
            pos += (rng.random_range(0.1..0.5) * sr) as usize;
        }
    }
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|x| *x *= level / rms);
    }
    out
}

fn power(x: &[f32]) -> f64 {
    x.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>() / x.len().max(1) as f64
}

/// Adds white Gaussian noise at the given signal-to-noise ratio.
pub fn add_noise(clip: &AudioBuffer, snr_db: f64, seed: u64) -> AudioBuffer {
    let mut r = rng(seed);
    let sigma = (power(&clip.samples) / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma.max(1e-12)).expect("finite sigma");
    AudioBuffer::new(
        clip.samples
            .iter()
            .map(|&s| (f64::from(s) + normal.sample(&mut r)) as f32)
            .collect(),
        clip.sample_rate,
    )
}

// ---------------------------------------------------------------------------
// mini-corpus

/// Where every input of the mini-corpus was written.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub book: PathBuf,
    pub quotes: PathBuf,
    pub subtitles: PathBuf,
    pub transcript: PathBuf,
    pub shots: PathBuf,
    /// Bundle stems; the manifest is `<stem>.manifest`, the blob `<stem>.bin`.
    pub paragraph_embeddings: PathBuf,
    pub sentence_embeddings: PathBuf,
    pub frame_embeddings: PathBuf,
    pub emotions: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: PathBuf,
    pub album_index: PathBuf,
    pub movie_audio: PathBuf,
}

/// Ground truth planted in the mini-corpus.
#[derive(Debug, Clone)]
pub struct MiniCorpusTruth {
    /// Planted paragraph blocks per chapter, `(first, last)` inclusive.
    pub blocks: Vec<Vec<(usize, usize)>>,
    /// Shot index range per scene, `(first, last)` inclusive.
    pub scene_shots: Vec<(usize, usize)>,
    pub scene_chapter: Vec<usize>,
    /// Planted block each scene depicts, if any.
    pub scene_block: Vec<Option<usize>>,
    /// Album track under each scene and the track offset where it starts.
    pub scene_music: Vec<Option<(u32, f64)>>,
    pub paths: CorpusPaths,
}

pub const MINI_TRACKS: u32 = 5;
pub const MINI_SHOTS: usize = 200;
const MINI_SCENES: usize = 10;
const SHOTS_PER_SCENE: usize = MINI_SHOTS / MINI_SCENES;
const ALBUM_RATE: u32 = 22050;
const MOVIE_RATE: u32 = 11025;
const PARAGRAPH_DIM: usize = 32;
const VISUAL_DIM: usize = 16;
const SENTENCE_DIM: usize = 48;

/// Block emotion: 0 positive, 1 neutral, 2 negative.
const CHAPTER_BLOCKS: [&[(usize, u8)]; 3] = [
    &[(6, 0), (5, 2), (7, 1), (6, 0)],
    &[(7, 2), (6, 0), (5, 2)],
    &[(5, 0), (6, 1), (6, 2), (7, 0)],
];

const CHAPTER_TITLES: [&str; 3] = ["The Lantern Road", "Under the Mill", "Harbour Lights"];

/// (chapter, depicted block, dialogue evidence, visual evidence, track)
const SCENE_PLAN: [(usize, Option<usize>, bool, bool, Option<u32>); MINI_SCENES] = [
    (0, Some(0), true, true, Some(1)),
    (0, Some(1), false, true, Some(2)),
    (0, Some(3), true, false, Some(3)),
    (0, None, false, false, None),
    (1, Some(0), false, true, Some(4)),
    (1, Some(2), true, false, Some(5)),
    (1, None, false, false, None),
    (2, Some(1), true, true, Some(1)),
    (2, Some(2), false, true, Some(2)),
    (2, Some(3), true, false, Some(4)),
];

/// Key sections of the album tracks, 0–11 major and 12–23 minor.
const TRACK_KEYS: [&[(usize, f64)]; MINI_TRACKS as usize] = [
    &[(0, 60.0), (21, 60.0)],
    &[(14, 40.0), (5, 40.0), (14, 40.0)],
    &[(7, 120.0)],
    &[(16, 60.0), (0, 60.0)],
    &[(10, 60.0), (19, 60.0)],
];

const TRACK_TITLES: [&str; MINI_TRACKS as usize] =
    ["Departure", "Mill Race", "Bright Fields", "Night Harbour", "Homecoming"];

const CHARACTERS: [[(&str, &str); 2]; 3] = [
    [("Ada", "ADA"), ("Bram", "BRAM")],
    [("Cleo", "CLEO"), ("Dorian", "DORIAN")],
    [("Edith", "EDITH"), ("Felix", "FELIX")],
];

const NOUNS: &[&str] = &[
    "lantern", "bridge", "river", "horse", "window", "candle", "door", "ship", "tower", "forest",
    "rope", "bread", "sword", "mirror", "garden", "wheel", "boat", "cliff", "barn", "kettle",
    "ladder", "coat", "bell", "road", "wall", "cart", "letter", "stone", "apple", "table",
    "chimney", "anchor", "basket", "saddle", "hammer", "blanket", "pillow", "fence", "bucket",
    "violin", "carriage", "harbour", "meadow", "orchard", "lamp", "mill", "sail", "well", "gate",
    "feather", "cloak", "oar", "barrel", "cottage", "staircase", "chest", "glove", "helmet",
    "whistle", "pebble", "shovel", "wagon", "torch", "quilt",
];
const VERBS: &[&str] = &[
    "carried", "climbed", "opened", "lifted", "dragged", "painted", "polished", "pushed",
    "dropped", "tied", "washed", "kicked", "grabbed", "folded", "mended", "buried",
];
const ADJECTIVES: &[&str] = &[
    "old", "wet", "heavy", "red", "broken", "wooden", "small", "iron", "muddy", "tall", "dusty",
    "narrow",
];
const ABSTRACT: &[&str] = &[
    "idea", "hope", "truth", "fear", "memory", "reason", "justice", "doubt", "faith", "purpose",
    "notion", "virtue", "mercy", "regret", "fortune", "honour",
];
const STOPWORDS: &[&str] = &[
    "the", "a", "an", "of", "and", "to", "in", "on", "was", "it", "with", "at", "by", "for", "as",
    "had", "near", "or", "nobody", "spoke", "said", "there", "is", "no", "without", "we", "must",
    "bring", "find", "look", "this",
];

struct Block {
    nouns: Vec<&'static str>,
    verbs: Vec<&'static str>,
}

struct Sentence {
    text: String,
    /// Concrete description eligible for a visual embedding.
    concrete: bool,
    speaker: Option<usize>,
}

fn concrete_sentence(rng: &mut impl Rng, block: &Block, names: &[(&str, &str); 2]) -> String {
    let n1 = block.nouns.choose(rng).expect("nouns");
    let n2 = block.nouns.choose(rng).expect("nouns");
    let v = block.verbs.choose(rng).expect("verbs");
    let adj = ADJECTIVES.choose(rng).expect("adjectives");
    match rng.random_range(0..3) {
        0 => format!("The {adj} {n1} {v} the {n2}."),
        1 => format!("{} {v} the {adj} {n1} by the {n2}.", names[rng.random_range(0..2)].0),
        _ => format!("A {adj} {n1} was near the {n2} and the {n1}."),
    }
}

fn abstract_sentence(rng: &mut impl Rng) -> String {
    let a = ABSTRACT.choose(rng).expect("abstract");
    let b = ABSTRACT.choose(rng).expect("abstract");
    match rng.random_range(0..2) {
        0 => format!("It was a {a} of {b}."),
        _ => format!("Nobody spoke of {a} or {b}."),
    }
}

/// A spoken line built almost entirely from the block's own vocabulary, so
/// lines of different blocks share (nearly) no tokens.
fn dialogue_line(rng: &mut impl Rng, block: &Block) -> String {
    let nouns: Vec<&&str> = block.nouns.choose_multiple(rng, 3).collect();
    let v = block.verbs.choose(rng).expect("verbs");
    let adj = ADJECTIVES.choose(rng).expect("adjectives");
    let mut first = nouns[0].to_string();
    first[..1].make_ascii_uppercase();
    format!("{first} {v} {adj} {} {}", nouns[1], nouns[2])
}

struct Paragraph {
    sentences: Vec<Sentence>,
}

struct ChapterPlan {
    paragraphs: Vec<Paragraph>,
    /// Block index of each paragraph.
    block_of: Vec<usize>,
    /// Quote lines per block with speaker index.
    quote_lines: Vec<Vec<(String, usize)>>,
}

fn plan_chapter(rng: &mut impl Rng, chapter: usize, blocks: &[Block]) -> ChapterPlan {
    let names = &CHARACTERS[chapter];
    let mut paragraphs = Vec::new();
    let mut block_of = Vec::new();
    let mut quote_lines = vec![Vec::new(); blocks.len()];
    for (b, &(len, _)) in CHAPTER_BLOCKS[chapter].iter().enumerate() {
        for _ in 0..len {
            let mut sentences = Vec::new();
            for _ in 0..rng.random_range(3..6) {
                let concrete = rng.random_bool(0.65);
                let text = if concrete {
                    concrete_sentence(rng, &blocks[b], names)
                } else {
                    abstract_sentence(rng)
                };
                sentences.push(Sentence {
                    text,
                    concrete,
                    speaker: None,
                });
            }
            if rng.random_bool(0.5) {
                let speaker = rng.random_range(0..2);
                let line = dialogue_line(rng, &blocks[b]);
                let at = rng.random_range(0..=sentences.len());
                sentences.insert(
                    at,
                    Sentence {
                        text: format!("\"{line},\" said {}.", names[speaker].0),
                        concrete: false,
                        speaker: Some(speaker),
                    },
                );
                quote_lines[b].push((line, speaker));
            }
            paragraphs.push(Paragraph { sentences });
            block_of.push(b);
        }
    }
    ChapterPlan {
        paragraphs,
        block_of,
        quote_lines,
    }
}

fn unit_f32(v: &[f64]) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter().map(|x| (x / n) as f32).collect()
}

fn emotion_row(rng: &mut impl Rng, label: u8) -> [f64; 3] {
    let main = rng.random_range(0.55..0.8);
    let other = rng.random_range(0.0..1.0 - main);
    let mut p = [0.0f64; 3];
    p[usize::from(label)] = main;
    p[(usize::from(label) + 1) % 3] = other;
    p[(usize::from(label) + 2) % 3] = 1.0 - main - other;
    // three decimals, re-normalized so rows still sum to 1
    let r: Vec<f64> = p.iter().map(|x| (x * 1000.0).round() / 1000.0).collect();
    [r[0], r[1], 1.0 - r[0] - r[1]]
}

fn write_bundle(stem: &Path, ids: Vec<String>, dim: usize, vectors: Vec<Vec<f32>>) -> Result<(), SynthError> {
    let bundle = EmbeddingBundle::from_vectors(ids, dim, vectors)?;
    bundle.write(&stem.with_extension("manifest"), &stem.with_extension("bin"))?;
    Ok(())
}

/// Writes the mini-corpus (3 chapters, 5 album tracks, 200 shots) into
/// `dir` and returns the planted ground truth. Output depends only on `seed`.
pub fn write_mini_corpus(dir: &Path, seed: u64) -> Result<MiniCorpusTruth, SynthError> {
    let mut rng = rng(seed);
    fs::create_dir_all(dir.join("embeddings"))?;
    fs::create_dir_all(dir.join("album"))?;
    let paths = CorpusPaths {
        book: dir.join("book.txt"),
        quotes: dir.join("quotes.tsv"),
        subtitles: dir.join("subtitles.srt"),
        transcript: dir.join("transcript.txt"),
        shots: dir.join("shots.tsv"),
        paragraph_embeddings: dir.join("embeddings/paragraphs"),
        sentence_embeddings: dir.join("embeddings/sentences"),
        frame_embeddings: dir.join("embeddings/frames"),
        emotions: dir.join("emotions.tsv"),
        lexicon: dir.join("lexicon.tsv"),
        stopwords: dir.join("stopwords.txt"),
        album_index: dir.join("album/album.tsv"),
        movie_audio: dir.join("movie.wav"),
    };

    // topic vocabularies: disjoint noun and verb sets per block
    let mut nouns: Vec<&'static str> = NOUNS.to_vec();
    let block_count: usize = CHAPTER_BLOCKS.iter().map(|c| c.len()).sum();
    assert!(nouns.len() >= block_count * 5);
    let mut blocks: Vec<Vec<Block>> = Vec::new();
    for (c, chapter) in CHAPTER_BLOCKS.iter().enumerate() {
        let mut per = Vec::new();
        for b in 0..chapter.len() {
            let take: Vec<&str> = nouns.drain(..5).collect();
            let verbs = (0..3).map(|i| VERBS[(c * 5 + b * 3 + i) % VERBS.len()]).collect();
            per.push(Block { nouns: take, verbs });
        }
        blocks.push(per);
    }

    let plans: Vec<ChapterPlan> = (0..3).map(|c| plan_chapter(&mut rng, c, &blocks[c])).collect();

    // book text and quote sidecar
    let mut book = String::from("THE LANTERN ROAD\nA synthetic novel\n\n");
    let mut annotations = Vec::new();
    for (c, plan) in plans.iter().enumerate() {
        book.push_str(&format!("CHAPTER {}. {}\n\n", c + 1, CHAPTER_TITLES[c]));
        for (p, par) in plan.paragraphs.iter().enumerate() {
            let text: Vec<&str> = par.sentences.iter().map(|s| s.text.as_str()).collect();
            book.push_str(&text.join(" "));
            book.push_str("\n\n");
            for (s, sent) in par.sentences.iter().enumerate() {
                if let Some(k) = sent.speaker {
                    annotations.push(QuoteAnnotation {
                        chapter: c,
                        paragraph: p,
                        sentence: s,
                        speaker: Some(CHARACTERS[c][k].0.to_string()),
                    });
                }
            }
        }
    }
    let parsed = corpus::parse_book(&book, &Regex::new(corpus::DEFAULT_CHAPTER_MARKER).expect("regex"))?;
    for (c, plan) in plans.iter().enumerate() {
        for (p, par) in plan.paragraphs.iter().enumerate() {
            debug_assert_eq!(parsed.chapters[c].paragraphs[p].sentences.len(), par.sentences.len());
        }
    }
    fs::write(&paths.book, &book)?;
    let quote_rows = annotations.iter().map(|a| {
        vec![
            a.chapter.to_string(),
            a.paragraph.to_string(),
            a.sentence.to_string(),
            a.speaker.clone().unwrap_or_default(),
        ]
    });
    fs::write(
        &paths.quotes,
        tsv::render(&["chapter", "paragraph", "sentence", "speaker"], quote_rows),
    )?;

    // paragraph embeddings: one orthonormal topic per block
    let topics = orthonormal(&mut rng, block_count, PARAGRAPH_DIM);
    let mut ids = Vec::new();
    let mut vecs = Vec::new();
    let mut topic_index = 0;
    let mut truth_blocks = Vec::new();
    for (c, plan) in plans.iter().enumerate() {
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        for (p, &b) in plan.block_of.iter().enumerate() {
            let topic = &topics[topic_index + b];
            let noise = gaussian(&mut rng, PARAGRAPH_DIM, 0.03);
            ids.push(paragraph_key(c, p));
            vecs.push(unit_f32(&topic.iter().zip(noise).map(|(t, e)| t + e).collect::<Vec<_>>()));
            match ranges.get_mut(b) {
                Some(r) => r.1 = p,
                None => ranges.push((p, p)),
            }
        }
        topic_index += CHAPTER_BLOCKS[c].len();
        truth_blocks.push(ranges);
    }
    write_bundle(&paths.paragraph_embeddings, ids, PARAGRAPH_DIM, vecs)?;

    // sentence embeddings: concrete sentences of visually depicted blocks sit
    // next to their scene's visual direction, everything else lives in the
    // complementary subspace
    let visual_scene = |c: usize, b: usize| {
        SCENE_PLAN
            .iter()
            .position(|&(sc, sb, _, vis, _)| sc == c && sb == Some(b) && vis)
    };
    let mut ids = Vec::new();
    let mut vecs = Vec::new();
    for (c, plan) in plans.iter().enumerate() {
        for (p, par) in plan.paragraphs.iter().enumerate() {
            for (s, sent) in par.sentences.iter().enumerate() {
                let mut v = vec![0.0; SENTENCE_DIM];
                match visual_scene(c, plan.block_of[p]).filter(|_| sent.concrete) {
                    Some(q) => {
                        v[q] = 1.0;
                        for (x, e) in v[..VISUAL_DIM].iter_mut().zip(gaussian(&mut rng, VISUAL_DIM, 0.08)) {
                            *x += e;
                        }
                    }
                    None => {
                        for (x, e) in v[VISUAL_DIM..]
                            .iter_mut()
                            .zip(gaussian(&mut rng, SENTENCE_DIM - VISUAL_DIM, 1.0))
                        {
                            *x = e;
                        }
                    }
                }
                ids.push(sentence_key(c, p, s));
                vecs.push(unit_f32(&v));
            }
        }
    }
    write_bundle(&paths.sentence_embeddings, ids, SENTENCE_DIM, vecs)?;

    // shots and frames
    let mut shots = Vec::new();
    let mut frame_ids = Vec::new();
    let mut frame_vecs = Vec::new();
    let mut t = 0u64;
    let mut scene_shots = Vec::new();
    let mut scene_spans = Vec::new();
    for q in 0..MINI_SCENES {
        let first = shots.len();
        let scene_start = t;
        for _ in 0..SHOTS_PER_SCENE {
            let id = shots.len() as u32 + 1;
            let dur = rng.random_range(2000..4500u64);
            let mut frames = Vec::new();
            for f in 0..2 {
                let mut v = vec![0.0; SENTENCE_DIM];
                v[q] = 1.0;
                for (x, e) in v[..VISUAL_DIM].iter_mut().zip(gaussian(&mut rng, VISUAL_DIM, 0.08)) {
                    *x += e;
                }
                let v = unit_f32(&v);
                frame_ids.push(frame_key(id, f));
                frame_vecs.push(v.clone());
                frames.push(v);
            }
            shots.push(Shot {
                shot_id: id,
                start_ms: t,
                end_ms: t + dur,
                frame_embeddings: frames,
            });
            t += dur;
        }
        scene_shots.push((first, shots.len() - 1));
        scene_spans.push((scene_start, t));
    }
    let movie_ms = t;
    write_bundle(&paths.frame_embeddings, frame_ids, SENTENCE_DIM, frame_vecs)?;
    fs::write(&paths.shots, corpus::shots_tsv(&ShotTable { shots }))?;

    // dialogue: subtitles and transcript
    let mut cues = Vec::new();
    let mut transcript = String::new();
    for (q, &(c, block, dialogue, _, _)) in SCENE_PLAN.iter().enumerate() {
        let (start, end) = scene_spans[q];
        let mut lines: Vec<(String, usize)> = Vec::new();
        if let (Some(b), true) = (block, dialogue) {
            lines.extend(plans[c].quote_lines[b].iter().take(3).cloned());
        }
        while lines.len() < 5 {
            let a = ABSTRACT.choose(&mut rng).expect("abstract");
            let line = match rng.random_range(0..2) {
                0 => format!("There is no {a} in this"),
                _ => format!("I remember the {a} of it all"),
            };
            let at = rng.random_range(0..=lines.len());
            lines.insert(at, (line, rng.random_range(0..2)));
        }
        transcript.push_str(&format!("[Scene {}]\n", q + 1));
        let slot = (end - start) / lines.len() as u64;
        for (i, (line, speaker)) in lines.iter().enumerate() {
            let cue_start = start + i as u64 * slot + 500;
            let cue_end = cue_start + rng.random_range(1500..slot.min(4000).max(1600));
            cues.push(Cue {
                start_ms: cue_start,
                end_ms: cue_end,
                text: format!("{line}."),
            });
            transcript.push_str(&format!("{}: {line}.\n", CHARACTERS[c][*speaker].1));
            if rng.random_bool(0.15) {
                transcript.push_str("(a door slams)\n");
            }
        }
    }
    fs::write(&paths.subtitles, corpus::write_srt(&SubtitleTrack { cues: cues.clone() }))?;
    fs::write(&paths.transcript, transcript)?;

    // emotion table, lexicon, stopwords
    let mut emotion_rows = Vec::new();
    for (c, plan) in plans.iter().enumerate() {
        for (p, &b) in plan.block_of.iter().enumerate() {
            let label = CHAPTER_BLOCKS[c][b].1;
            let r = emotion_row(&mut rng, label);
            emotion_rows.push(vec![
                c.to_string(),
                p.to_string(),
                format!("{:.3}", r[0]),
                format!("{:.3}", r[1]),
                format!("{:.3}", r[2]),
            ]);
        }
    }
    fs::write(
        &paths.emotions,
        tsv::render(&["chapter", "paragraph", "p_pos", "p_neu", "p_neg"], emotion_rows),
    )?;
    let mut lexicon = Vec::new();
    for w in NOUNS {
        lexicon.push(vec![w.to_string(), format!("{:.2}", rng.random_range(4.2..5.0))]);
    }
    for w in VERBS {
        lexicon.push(vec![w.to_string(), format!("{:.2}", rng.random_range(3.6..4.5))]);
    }
    for w in ADJECTIVES {
        lexicon.push(vec![w.to_string(), format!("{:.2}", rng.random_range(3.0..4.0))]);
    }
    for w in ABSTRACT {
        lexicon.push(vec![w.to_string(), format!("{:.2}", rng.random_range(1.2..2.2))]);
    }
    for w in ["was", "near", "said", "spoke", "bring", "find", "look", "must", "nobody"] {
        lexicon.push(vec![w.to_string(), format!("{:.2}", rng.random_range(1.5..3.0))]);
    }
    fs::write(&paths.lexicon, tsv::render(&["word", "rating"], lexicon))?;
    fs::write(&paths.stopwords, STOPWORDS.join("\n") + "\n")?;

    // album
    let mut album_rows = Vec::new();
    let mut tracks = Vec::new();
    for (i, keys) in TRACK_KEYS.iter().enumerate() {
        let id = i as u32 + 1;
        let audio = tonal_track(keys, ALBUM_RATE, seed.wrapping_add(1000 + u64::from(id)));
        let name = format!("track_{id:02}.wav");
        corpus::write_wav(&dir.join("album").join(&name), &audio)?;
        album_rows.push(vec![id.to_string(), name, TRACK_TITLES[i].to_string()]);
        tracks.push(audio.resample(MOVIE_RATE));
    }
    fs::write(&paths.album_index, tsv::render(&["track_id", "path", "title"], album_rows))?;

    // movie audio: score excerpt under each musical scene plus dialogue noise
    let sr = f64::from(MOVIE_RATE);
    let mut movie = vec![0.0f64; (movie_ms as f64 / 1000.0 * sr).ceil() as usize];
    let mut scene_music = Vec::new();
    for (q, &(_, _, _, _, track)) in SCENE_PLAN.iter().enumerate() {
        let (start, end) = scene_spans[q];
        let a = (start as f64 / 1000.0 * sr) as usize;
        let b = ((end as f64 / 1000.0 * sr) as usize).min(movie.len());
        match track {
            Some(id) => {
                let audio = &tracks[id as usize - 1];
                let room = (audio.samples.len() as f64 / sr - (b - a) as f64 / sr).max(0.0);
                let offset = (rng.random_range(0.0..=room) * 10.0).floor() / 10.0;
                let o = (offset * sr) as usize;
                for (i, slot) in movie[a..b].iter_mut().enumerate() {
                    *slot += 0.6 * f64::from(audio.samples.get(o + i).copied().unwrap_or(0.0));
                }
                scene_music.push(Some((id, offset)));
            }
            None => scene_music.push(None),
        }
    }
    for cue in &cues {
        let a = (cue.start_ms as f64 / 1000.0 * sr) as usize;
        let speech = speech_like((cue.end_ms - cue.start_ms) as f64 / 1000.0, MOVIE_RATE, 0.05, &mut rng);
        for (slot, s) in movie[a..].iter_mut().zip(speech) {
            *slot += s;
        }
    }
    let movie = AudioBuffer::new(movie.iter().map(|&x| x.clamp(-1.0, 1.0) as f32).collect(), MOVIE_RATE);
    corpus::write_wav(&paths.movie_audio, &movie)?;

    Ok(MiniCorpusTruth {
        blocks: truth_blocks,
        scene_shots,
        scene_chapter: SCENE_PLAN.iter().map(|s| s.0).collect(),
        scene_block: SCENE_PLAN.iter().map(|s| s.1).collect(),
        scene_music,
        paths,
    })
}
