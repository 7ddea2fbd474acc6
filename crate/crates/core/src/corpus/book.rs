use regex::Regex;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::text;
use crate::tsv;

/// Default chapter marker: any line starting with `CHAPTER`.
pub const DEFAULT_CHAPTER_MARKER: &str = r"^\s*CHAPTER\b";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookStructure {
    pub chapters: Vec<Chapter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chapter {
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub sentences: Vec<String>,
    pub word_count: usize,
    /// Sorted by `sentence_index`, at most one entry per sentence.
    pub quotes: Vec<Quote>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    pub sentence_index: usize,
    /// `None` when the speaker is unknown.
    pub speaker: Option<String>,
}

impl Paragraph {
    fn from_text(text: &str) -> Paragraph {
        let sentences = split_sentences(text);
        let word_count = sentences.iter().map(|s| s.split_whitespace().count()).sum();
        let quotes = sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| text::has_quote(s))
            .map(|(i, _)| Quote {
                sentence_index: i,
                speaker: None,
            })
            .collect();
        Paragraph {
            sentences,
            word_count,
            quotes,
        }
    }

    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }

    pub fn quote(&self, sentence: usize) -> Option<&Quote> {
        self.quotes.iter().find(|q| q.sentence_index == sentence)
    }

    pub fn is_quote(&self, sentence: usize) -> bool {
        self.quote(sentence).is_some()
    }
}

impl Chapter {
    pub fn word_count(&self) -> usize {
        self.paragraphs.iter().map(|p| p.word_count).sum()
    }

    /// Number of quotes attributed to each known speaker, sorted by name.
    pub fn speaker_histogram(&self) -> std::collections::BTreeMap<String, usize> {
        let mut hist = std::collections::BTreeMap::new();
        for q in self.paragraphs.iter().flat_map(|p| &p.quotes) {
            if let Some(s) = &q.speaker {
                *hist.entry(s.clone()).or_default() += 1;
            }
        }
        hist
    }
}

impl BookStructure {
    pub fn paragraph_count(&self) -> usize {
        self.chapters.iter().map(|c| c.paragraphs.len()).sum()
    }

    /// Plain-text rendering that [`parse_book`] maps back to `self` (minus
    /// speaker names, which travel in the quote sidecar).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for chapter in &self.chapters {
            out.push_str(&chapter.title);
            out.push_str("\n\n");
            for p in &chapter.paragraphs {
                out.push_str(&p.text());
                out.push_str("\n\n");
            }
        }
        out
    }

    /// Distinct known speakers across the book, sorted.
    pub fn speakers(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .chapters
            .iter()
            .flat_map(|c| c.speaker_histogram().into_keys())
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Parses a UTF-8 book into chapters, paragraphs and sentences.
///
/// Lines matching `chapter_marker` open a new chapter (the line becomes its
/// title); text before the first marker is ignored. Paragraphs are separated
/// by blank lines. Sentences containing quotation marks are recorded as
/// quotes with an unknown speaker; [`apply_quotes`] fills in speakers.
pub fn parse_book(raw: &str, chapter_marker: &Regex) -> Result<BookStructure, CorpusError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let mut chapters: Vec<Chapter> = Vec::new();
    let mut block: Vec<&str> = Vec::new();

    fn flush(block: &mut Vec<&str>, chapters: &mut [Chapter]) {
        if block.is_empty() {
            return;
        }
        let text = block.join(" ");
        block.clear();
        if let Some(ch) = chapters.last_mut() {
            ch.paragraphs.push(Paragraph::from_text(&text));
        }
    }

    for line in raw.lines() {
        if chapter_marker.is_match(line) {
            flush(&mut block, &mut chapters);
            chapters.push(Chapter {
                title: line.trim().to_string(),
                paragraphs: Vec::new(),
            });
        } else if line.trim().is_empty() {
            flush(&mut block, &mut chapters);
        } else if !chapters.is_empty() {
            block.push(line.trim());
        }
    }
    flush(&mut block, &mut chapters);

    if chapters.is_empty() {
        return Err(CorpusError::NoChaptersFound);
    }
    if let Some((index, ch)) = chapters
        .iter()
        .enumerate()
        .find(|(_, c)| c.paragraphs.is_empty())
    {
        return Err(CorpusError::EmptyChapter {
            index,
            title: ch.title.clone(),
        });
    }
    Ok(BookStructure { chapters })
}

const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "st.", "prof.", "sr.", "jr.", "mt.", "vs.", "etc.", "e.g.",
    "i.e.", "no.", "capt.", "col.", "gen.", "lt.", "sgt.",
];

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];

fn ends_sentence(token: &str) -> bool {
    let core = token.trim_end_matches(CLOSERS);
    if !core.ends_with(['.', '!', '?']) {
        return false;
    }
    let bare = token
        .trim_start_matches(['"', '\'', '\u{201c}', '\u{2018}', '(', '['])
        .trim_end_matches(CLOSERS)
        .to_lowercase();
    if ABBREVIATIONS.contains(&bare.as_str()) {
        return false;
    }
    // single-letter initials such as "J."
    let mut chars = bare.chars();
    !matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_alphabetic())
}

fn starts_lowercase(token: &str) -> bool {
    token
        .chars()
        .find(|c| c.is_alphanumeric())
        .is_some_and(char::is_lowercase)
}

/// Rule-based sentence splitter: a sentence ends at a token closing with
/// `.`, `!` or `?` (optionally followed by closing quotes or brackets),
/// unless the token is a known abbreviation or the next word is lowercase.
fn split_sentences(text: &str) -> Vec<String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        current.push(tok);
        let next = tokens.get(i + 1);
        if next.is_some_and(|n| ends_sentence(tok) && !starts_lowercase(n)) {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
}

/// One row of the quote sidecar file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuoteAnnotation {
    pub chapter: usize,
    pub paragraph: usize,
    pub sentence: usize,
    pub speaker: Option<String>,
}

const QUOTE_HEADER: [&str; 4] = ["chapter", "paragraph", "sentence", "speaker"];

/// Parses the quote sidecar: `chapter, paragraph, sentence, speaker` (0-based
/// indices; an empty speaker or `unknown` means unattributed).
pub fn parse_quotes(raw: &str) -> Result<Vec<QuoteAnnotation>, CorpusError> {
    let err = CorpusError::table("quotes");
    tsv::read(raw, &QUOTE_HEADER[..3])
        .map_err(&err)?
        .iter()
        .map(|row| {
            let speaker = row
                .get(3)
                .map(str::trim)
                .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("unknown"))
                .map(str::to_string);
            Ok(QuoteAnnotation {
                chapter: tsv::field(row, 0, "chapter").map_err(&err)?,
                paragraph: tsv::field(row, 1, "paragraph").map_err(&err)?,
                sentence: tsv::field(row, 2, "sentence").map_err(&err)?,
                speaker,
            })
        })
        .collect()
}

/// Merges sidecar annotations into the book; the sidecar wins over
/// auto-detected quotes.
pub fn apply_quotes(
    book: &mut BookStructure,
    annotations: &[QuoteAnnotation],
) -> Result<(), CorpusError> {
    for a in annotations {
        let key = super::sentence_key(a.chapter, a.paragraph, a.sentence);
        let paragraph = book
            .chapters
            .get_mut(a.chapter)
            .and_then(|c| c.paragraphs.get_mut(a.paragraph))
            .filter(|p| a.sentence < p.sentences.len())
            .ok_or(CorpusError::UnresolvedId(key))?;
        match paragraph
            .quotes
            .binary_search_by_key(&a.sentence, |q| q.sentence_index)
        {
            Ok(i) => paragraph.quotes[i].speaker = a.speaker.clone(),
            Err(i) => paragraph.quotes.insert(
                i,
                Quote {
                    sentence_index: a.sentence,
                    speaker: a.speaker.clone(),
                },
            ),
        }
    }
    Ok(())
}

/// Renders every quote as a sidecar table.
pub fn quotes_tsv(book: &BookStructure) -> String {
    let rows = book.chapters.iter().enumerate().flat_map(|(c, ch)| {
        ch.paragraphs.iter().enumerate().flat_map(move |(p, par)| {
            par.quotes.iter().map(move |q| {
                vec![
                    c.to_string(),
                    p.to_string(),
                    q.sentence_index.to_string(),
                    q.speaker.clone().unwrap_or_else(|| "unknown".into()),
                ]
            })
        })
    });
    tsv::render(&QUOTE_HEADER, rows)
}
