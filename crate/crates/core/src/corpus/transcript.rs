use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub speaker: String,
    pub utterance: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub lines: Vec<TranscriptLine>,
}

/// Parses `SPEAKER: utterance` lines. Blank lines and whole-line stage
/// directions in brackets or parentheses are skipped.
pub fn parse_transcript(raw: &str) -> Result<Transcript, CorpusError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let mut lines = Vec::new();
    for (n, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty()
            || (line.starts_with('[') && line.ends_with(']'))
            || (line.starts_with('(') && line.ends_with(')'))
        {
            continue;
        }
        let (speaker, utterance) = line
            .split_once(':')
            .map(|(s, u)| (s.trim(), u.trim()))
            .filter(|(s, _)| !s.is_empty())
            .ok_or(CorpusError::MalformedTranscriptLine { line: n + 1 })?;
        lines.push(TranscriptLine {
            speaker: speaker.to_string(),
            utterance: utterance.to_string(),
        });
    }
    Ok(Transcript { lines })
}
