//! Tokenization shared by the alignment and sentence-scoring stages.

/// Lowercased word tokens with every non-alphanumeric character removed.
///
/// `"You're a wizard, Harry!"` becomes `["youre", "a", "wizard", "harry"]`.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

const QUOTE_CHARS: [char; 3] = ['"', '\u{201c}', '\u{201d}'];

/// Whether a sentence contains direct speech.
pub fn has_quote(sentence: &str) -> bool {
    sentence.contains(QUOTE_CHARS)
}

/// The spoken part of a sentence: everything between quotation marks, or the
/// whole sentence when it has none.
pub fn quoted_text(sentence: &str) -> String {
    if !has_quote(sentence) {
        return sentence.to_string();
    }
    let mut out = String::new();
    let mut inside = false;
    for c in sentence.chars() {
        if QUOTE_CHARS.contains(&c) {
            inside = !inside;
            if !inside {
                out.push(' ');
            }
            continue;
        }
        if inside {
            out.push(c);
        }
    }
    let out = out.split_whitespace().collect::<Vec<_>>().join(" ");
    if out.is_empty() {
        sentence.to_string()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_strip_punctuation() {
        assert_eq!(tokens("You're a wizard, Harry!"), ["youre", "a", "wizard", "harry"]);
        assert!(tokens(" -- ... ").is_empty());
    }

    #[test]
    fn quoted_text_extracts_speech() {
        assert_eq!(quoted_text("\"Run now,\" said Ron."), "Run now,");
        assert_eq!(quoted_text("\u{201c}Yes.\u{201d} She left. \u{201c}No!\u{201d}"), "Yes. No!");
        assert_eq!(quoted_text("No speech here."), "No speech here.");
    }
}
