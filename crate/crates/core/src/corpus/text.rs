//! Raw text to token streams.
//!
//! Tokenization rules, applied in order:
//!
//! 1. lowercase the text;
//! 2. drop every whitespace-delimited chunk that contains an ASCII digit;
//! 3. split the remaining chunks on anything that is not an ASCII letter
//!    (punctuation, apostrophes, non-ASCII characters);
//! 4. drop stopwords (built-in English list in `data/stopwords_en.txt`, which
//!    also carries the pronouns);
//! 5. Porter-stem the survivors.

use std::collections::HashSet;

use super::porter;

const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Abbreviations that end in a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "inc", "ltd", "co", "corp", "jan",
    "feb", "mar", "apr", "aug", "sep", "sept", "oct", "nov", "dec", "no", "fig",
];

/// Parse a stopword file: one word per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// The built-in stopword list.
pub fn builtin_stopwords() -> HashSet<String> {
    parse_stopwords(BUILTIN_STOPWORDS)
}

/// Tokenizer with a configurable stopword set.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: HashSet<String>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            stopwords: builtin_stopwords(),
        }
    }
}

impl Preprocessor {
    pub fn with_stopwords(stopwords: HashSet<String>) -> Self {
        Self { stopwords }
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn tokens(&self, raw: &str) -> Vec<String> {
        let lower = raw.to_lowercase();
        let mut out = Vec::new();
        for chunk in lower.split_whitespace() {
            if chunk.bytes().any(|c| c.is_ascii_digit()) {
                continue;
            }
            for word in chunk.split(|c: char| !c.is_ascii_alphabetic()) {
                if word.is_empty() || self.stopwords.contains(word) {
                    continue;
                }
                out.push(porter::stem(word));
            }
        }
        out
    }
}

/// Tokenize with the built-in stopword list.
pub fn preprocess_text(raw: &str) -> Vec<String> {
    Preprocessor::default().tokens(raw)
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}')
}

/// Rule-based sentence splitter.
///
/// A sentence ends after a run of `.`, `!` or `?` (plus any closing quotes
/// or brackets) that is followed by whitespace or the end of the text. A
/// single `.` after a known abbreviation ("Dr.", "e.g.") does not end a
/// sentence. This is best-effort: initials and unlisted abbreviations
/// still split. Pieces are trimmed; no other characters are removed.
pub fn split_sentences(raw: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = raw.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && is_terminal(chars[j + 1].1) {
            j += 1;
        }
        while j + 1 < chars.len() && is_closer(chars[j + 1].1) {
            j += 1;
        }
        let at_end = j + 1 == chars.len();
        let before_space = !at_end && chars[j + 1].1.is_whitespace();
        if (at_end || before_space) && !(c == '.' && j == i && ends_with_abbreviation(&raw[start..pos])) {
            let end = if at_end { raw.len() } else { chars[j + 1].0 };
            push_trimmed(&mut out, &raw[start..end]);
            start = end;
        }
        i = j + 1;
    }
    push_trimmed(&mut out, &raw[start..]);
    out
}

fn ends_with_abbreviation(text: &str) -> bool {
    let last = text
        .rsplit(|c: char| c.is_whitespace())
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    !last.is_empty() && ABBREVIATIONS.contains(&last.as_str())
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_example() {
        // "the" is a stopword, "42" is a number, punctuation separates.
        assert_eq!(
            preprocess_text("The teachers teach, 42 times!"),
            vec!["teacher", "teach", "time"]
        );
    }

    #[test]
    fn empty_and_all_stopwords() {
        assert!(preprocess_text("").is_empty());
        assert!(preprocess_text("and or the").is_empty());
        assert!(preprocess_text("  \n\t ").is_empty());
    }

    #[test]
    fn numbers_pronouns_and_contractions() {
        assert_eq!(preprocess_text("x11 mp3 3rd 1,000"), Vec::<String>::new());
        assert_eq!(preprocess_text("She said they don't know"), vec!["said", "know"]);
        assert_eq!(preprocess_text("space-shuttle"), vec!["space", "shuttl"]);
    }

    #[test]
    fn builtin_list_matches_file() {
        let words = builtin_stopwords();
        assert!(words.contains("the"));
        assert!(words.contains("they"));
        assert!(!words.contains("times"));
        assert!(!words.iter().any(|w| w.contains('\'')));
    }

    #[test]
    fn custom_stopwords() {
        let p = Preprocessor::with_stopwords(["space".to_string()].into_iter().collect());
        assert_eq!(p.tokens("the space orbit"), vec!["the", "orbit"]);
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(split_sentences("A b. C d!"), vec!["A b.", "C d!"]);
        assert_eq!(split_sentences("No terminator"), vec!["No terminator"]);
        assert_eq!(split_sentences("X? Y. Z"), vec!["X?", "Y.", "Z"]);
    }

    #[test]
    fn sentence_edge_cases() {
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("Wait... what?! Yes."),
            vec!["Wait...", "what?!", "Yes."]
        );
        assert_eq!(
            split_sentences("Dr. Smith arrived. He sat."),
            vec!["Dr. Smith arrived.", "He sat."]
        );
        assert_eq!(
            split_sentences("He said \"go.\" Then left."),
            vec!["He said \"go.\"", "Then left."]
        );
        assert_eq!(split_sentences("v1.2 is out"), vec!["v1.2 is out"]);
    }

    #[test]
    fn splitting_keeps_every_non_space_character() {
        let text = "One. Two!  Three?\nFour e.g. five";
        let joined: String = split_sentences(text).concat();
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        assert_eq!(strip(&joined), strip(text));
    }
}
