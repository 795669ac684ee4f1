//! Sentence segmentation and Penn-style word tokenization.
//!
//! Every token is an exact slice of the input: `&text[start..end] == surface`.
//! Characters not covered by any token are whitespace.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the tokenized text.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }

    /// True when the token contains at least one alphanumeric character.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }

    /// True for split-off clitics such as `n't`, `'s` and `'re`.
    pub fn is_clitic(&self) -> bool {
        let t = self.text.as_str();
        t.starts_with(['\'', '\u{2019}']) || t.eq_ignore_ascii_case("n't") || t.eq_ignore_ascii_case("n\u{2019}t")
    }

    /// A word token that is not a clitic: the unit of length and readability counts.
    pub fn is_lexical(&self) -> bool {
        self.is_word() && !self.is_clitic()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_word())
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedEssay {
    pub sentences: Vec<Sentence>,
}

impl TokenizedEssay {
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens().filter(|t| t.is_word())
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }
}

/// Abbreviations that keep their trailing period and never end a sentence.
const TITLE_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "sr", "jr", "gen", "gov", "sen", "rep", "mt", "ft", "vs",
    "col", "capt", "lt", "sgt", "rev", "hon", "fig", "approx", "dept", "ave", "blvd", "no",
];

/// Abbreviations that keep their period but may close a sentence when the
/// next token is capitalized.
const TERMINAL_ABBREVIATIONS: &[&str] = &[
    "etc", "inc", "ltd", "co", "corp", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep",
    "sept", "oct", "nov", "dec", "e.g", "i.e", "a.m", "p.m", "u.s", "u.k",
];

const OPENING: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}', '\u{ab}', '`'];
const CLOSING: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}'];
const SPLIT_PUNCT: &[char] = &[',', ';', ':', '!', '?'];
const TERMINALS: &[&str] = &[".", "!", "?", "..."];
const APOSTROPHES: &[char] = &['\'', '\u{2019}'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AbbrevKind {
    None,
    Title,
    Terminal,
}

fn abbreviation_kind(word_with_dot: &str) -> AbbrevKind {
    let stem = &word_with_dot[..word_with_dot.len() - 1];
    if stem.is_empty() {
        return AbbrevKind::None;
    }
    let lower = stem.to_lowercase();
    if TITLE_ABBREVIATIONS.contains(&lower.as_str()) {
        return AbbrevKind::Title;
    }
    if TERMINAL_ABBREVIATIONS.contains(&lower.as_str()) {
        return AbbrevKind::Terminal;
    }
    // Single-letter initial ("J.") or dotted acronym ("U.S.", "e.g.").
    let mut chars = stem.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_alphabetic() && c.is_uppercase() {
            return AbbrevKind::Title;
        }
    }
    if is_dotted_acronym(stem) {
        return AbbrevKind::Terminal;
    }
    AbbrevKind::None
}

/// `a.b` / `U.S` style: single letters separated by periods.
fn is_dotted_acronym(stem: &str) -> bool {
    let parts: Vec<&str> = stem.split('.').collect();
    parts.len() >= 2 && parts.iter().all(|p| p.chars().count() == 1 && p.chars().all(char::is_alphabetic))
}

struct Piece {
    start: usize,
    end: usize,
    abbrev: AbbrevKind,
}

/// Tokenizes `text` into sentences of Penn-style tokens.
pub fn tokenize(text: &str) -> TokenizedEssay {
    let mut pieces: Vec<Piece> = Vec::new();
    // Byte offsets where a blank line forces a sentence break.
    let mut hard_breaks: Vec<usize> = Vec::new();

    let mut chunk_start: Option<usize> = None;
    let mut newlines = 0usize;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                split_chunk(text, s, i, &mut pieces);
            }
            if c == '\n' {
                newlines += 1;
                if newlines == 2 {
                    hard_breaks.push(i);
                }
            }
        } else {
            newlines = 0;
            if chunk_start.is_none() {
                chunk_start = Some(i);
            }
        }
    }
    if let Some(s) = chunk_start {
        split_chunk(text, s, text.len(), &mut pieces);
    }

    if pieces.is_empty() {
        let trimmed_start = text.len() - text.trim_start().len();
        return TokenizedEssay {
            sentences: alloc::vec![Sentence {
                tokens: alloc::vec![Token {
                    text: String::new(),
                    start: trimmed_start,
                    end: trimmed_start,
                }],
            }],
        };
    }

    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut break_idx = 0usize;
    let mut pending_break = false;
    for (idx, piece) in pieces.iter().enumerate() {
        let surface = &text[piece.start..piece.end];
        while break_idx < hard_breaks.len() && hard_breaks[break_idx] < piece.start {
            if !current.is_empty() {
                pending_break = true;
            }
            break_idx += 1;
        }
        // Closing quotes and brackets stay with the sentence they close.
        let is_closer = surface.chars().count() == 1 && surface.chars().all(|c| CLOSING.contains(&c));
        if pending_break && !(is_closer && !current.is_empty() && ends_with_terminal(&current)) {
            sentences.push(Sentence { tokens: core::mem::take(&mut current) });
            pending_break = false;
        }
        current.push(Token {
            text: surface.to_string(),
            start: piece.start,
            end: piece.end,
        });
        let next = pieces.get(idx + 1).map(|p| &text[p.start..p.end]);
        let next_capitalized = next
            .and_then(|n| n.chars().find(|c| c.is_alphanumeric()))
            .is_some_and(|c| c.is_uppercase());
        let terminal = if TERMINALS.contains(&surface) {
            true
        } else {
            piece.abbrev == AbbrevKind::Terminal && next_capitalized
        };
        if terminal {
            // Keep runs like "?!" and "!!!" together in one sentence.
            let next_is_terminal = next.is_some_and(|n| TERMINALS.contains(&n));
            if !next_is_terminal {
                pending_break = true;
            }
        }
    }
    if !current.is_empty() {
        sentences.push(Sentence { tokens: current });
    }
    TokenizedEssay { sentences }
}

fn ends_with_terminal(tokens: &[Token]) -> bool {
    tokens
        .iter()
        .rev()
        .find(|t| !(t.text.chars().count() == 1 && t.text.chars().all(|c| CLOSING.contains(&c))))
        .is_some_and(|t| TERMINALS.contains(&t.text.as_str()))
}

/// Splits one whitespace-delimited chunk `text[start..end]` into pieces.
fn split_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Piece>) {
    let mut lo = start;
    let mut hi = end;
    let mut trailing: Vec<Piece> = Vec::new();

    // Leading openers.
    while lo < hi {
        let c = text[lo..hi].chars().next().unwrap();
        if OPENING.contains(&c) && !(APOSTROPHES.contains(&c) && leading_apostrophe_word(&text[lo..hi])) {
            out.push(plain(lo, lo + c.len_utf8()));
            lo += c.len_utf8();
        } else if c == '@' || c.is_alphanumeric() {
            break;
        } else if SPLIT_PUNCT.contains(&c) || c == '-' || c == '.' || CLOSING.contains(&c) {
            let n = run_len(&text[lo..hi], c);
            out.push(plain(lo, lo + n));
            lo += n;
        } else {
            break;
        }
    }

    // Trailing punctuation, peeled right to left.
    while lo < hi {
        let s = &text[lo..hi];
        let c = s.chars().next_back().unwrap();
        if CLOSING.contains(&c) {
            // Also covers the plural possessive apostrophe ("students'").
            trailing.push(plain(hi - c.len_utf8(), hi));
            hi -= c.len_utf8();
        } else if SPLIT_PUNCT.contains(&c) {
            trailing.push(plain(hi - 1, hi));
            hi -= 1;
        } else if c == '.' {
            if s.ends_with("...") {
                let n = s.len() - s.trim_end_matches('.').len();
                trailing.push(plain(hi - n, hi));
                hi -= n;
            } else {
                let kind = abbreviation_kind(s);
                if kind != AbbrevKind::None && s.len() > 1 {
                    // Abbreviation keeps its period; handle the core below.
                    split_core(text, lo, hi, kind, out);
                    lo = hi;
                    break;
                }
                trailing.push(plain(hi - 1, hi));
                hi -= 1;
            }
        } else {
            break;
        }
    }

    if lo < hi {
        split_core(text, lo, hi, AbbrevKind::None, out);
    }
    out.extend(trailing.into_iter().rev());
}

fn leading_apostrophe_word(s: &str) -> bool {
    let rest: String = s.chars().skip(1).take_while(|c| c.is_alphanumeric()).collect();
    let lower = rest.to_lowercase();
    matches!(lower.as_str(), "cause" | "em" | "til" | "tis" | "twas")
        || (rest.len() == 2 && rest.chars().all(|c| c.is_ascii_digit()))
}

fn run_len(s: &str, c: char) -> usize {
    s.chars().take_while(|&x| x == c).map(char::len_utf8).sum()
}

fn plain(start: usize, end: usize) -> Piece {
    Piece { start, end, abbrev: AbbrevKind::None }
}

/// Splits a chunk core on internal punctuation and clitics.
fn split_core(text: &str, lo: usize, hi: usize, kind: AbbrevKind, out: &mut Vec<Piece>) {
    let s = &text[lo..hi];
    if kind != AbbrevKind::None {
        out.push(Piece { start: lo, end: hi, abbrev: kind });
        return;
    }
    // Internal splits: ",;!?()\"" unless between digits; "." between words
    // ("end.Then"); "--".
    let bytes: Vec<(usize, char)> = s.char_indices().collect();
    let mut seg_start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        let (off, c) = bytes[i];
        let prev = if i > 0 { Some(bytes[i - 1].1) } else { None };
        let next = bytes.get(i + 1).map(|x| x.1);
        let between_digits = prev.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit());
        let split_here = match c {
            ',' | ';' | ':' => !between_digits && i > 0 && next.is_some(),
            '!' | '?' | '(' | ')' | '[' | ']' | '"' | '\u{201c}' | '\u{201d}' => true,
            '.' => {
                let before = &s[seg_start..off];
                let after: String = s[off + 1..].chars().take_while(|c| c.is_alphabetic()).collect();
                !before.is_empty()
                    && before.chars().all(char::is_alphabetic)
                    && before.chars().count() >= 2
                    && after.chars().count() >= 2
                    && !is_dotted_acronym(&s[seg_start..])
            }
            '-' => next == Some('-'),
            _ => false,
        };
        if split_here {
            if off > seg_start {
                push_word(text, lo + seg_start, lo + off, out);
            }
            let n = if c == '-' || c == '.' { run_len(&s[off..], c) } else { c.len_utf8() };
            out.push(plain(lo + off, lo + off + n));
            seg_start = off + n;
            while i < bytes.len() && bytes[i].0 < seg_start {
                i += 1;
            }
            continue;
        }
        i += 1;
    }
    if seg_start < s.len() {
        push_word(text, lo + seg_start, hi, out);
    }
}

/// Pushes a word, splitting English clitics Penn-style ("don't" -> "do n't").
fn push_word(text: &str, lo: usize, hi: usize, out: &mut Vec<Piece>) {
    let w = &text[lo..hi];
    let lower = w.to_lowercase();
    if lower == "cannot" {
        out.push(plain(lo, lo + 3));
        out.push(plain(lo + 3, hi));
        return;
    }
    // n't with either apostrophe.
    for apo in APOSTROPHES {
        let mut suffix = String::from("n");
        suffix.push(*apo);
        suffix.push('t');
        if lower.len() > suffix.len() && lower.ends_with(suffix.as_str()) {
            let cut = hi - suffix.len();
            out.push(plain(lo, cut));
            out.push(plain(cut, hi));
            return;
        }
    }
    for apo in APOSTROPHES {
        for clitic in ["s", "re", "ve", "ll", "d", "m"] {
            let mut suffix = String::new();
            suffix.push(*apo);
            suffix.push_str(clitic);
            if lower.len() > suffix.len() && lower.ends_with(suffix.as_str()) {
                let stem = &w[..w.len() - suffix.len()];
                if stem.chars().next_back().is_some_and(char::is_alphanumeric) {
                    let cut = hi - suffix.len();
                    out.push(plain(lo, cut));
                    out.push(plain(cut, hi));
                    return;
                }
            }
        }
    }
    out.push(plain(lo, hi));
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn surfaces(t: &TokenizedEssay) -> Vec<Vec<&str>> {
        t.sentences.iter().map(|s| s.surfaces()).collect()
    }

    #[test]
    fn two_terminals_two_sentences() {
        let t = tokenize("The cat sat. It slept.");
        assert_eq!(surfaces(&t), vec![vec!["The", "cat", "sat", "."], vec!["It", "slept", "."]]);
    }

    #[test]
    fn title_abbreviation_does_not_split() {
        let t = tokenize("Dr. Smith left.");
        assert_eq!(surfaces(&t), vec![vec!["Dr.", "Smith", "left", "."]]);
    }

    #[test]
    fn contractions_split_penn_style() {
        let t = tokenize("I don't think it's fair, and we can't stop.");
        assert_eq!(
            surfaces(&t)[0],
            vec!["I", "do", "n't", "think", "it", "'s", "fair", ",", "and", "we", "ca", "n't", "stop", "."]
        );
    }

    #[test]
    fn numbers_keep_internal_punctuation() {
        let t = tokenize("It cost $1,000.50 in 2010.");
        assert_eq!(surfaces(&t)[0], vec!["It", "cost", "$1,000.50", "in", "2010", "."]);
    }

    #[test]
    fn missing_space_after_period_splits() {
        let t = tokenize("I went home.Then I slept.");
        assert_eq!(t.sentences.len(), 2);
    }

    #[test]
    fn quotes_and_question_marks() {
        let t = tokenize("He asked, \"Why?\" Then he left!");
        assert_eq!(
            surfaces(&t),
            vec![vec!["He", "asked", ",", "\"", "Why", "?", "\""], vec!["Then", "he", "left", "!"]]
        );
    }

    #[test]
    fn anonymization_placeholders_are_single_tokens() {
        let t = tokenize("Dear @CAPS1 @CAPS2, I think @PERSON1 is right.");
        assert_eq!(
            surfaces(&t)[0],
            vec!["Dear", "@CAPS1", "@CAPS2", ",", "I", "think", "@PERSON1", "is", "right", "."]
        );
    }

    #[test]
    fn blank_line_breaks_sentence() {
        let t = tokenize("First paragraph without a stop\n\nSecond one.");
        assert_eq!(t.sentences.len(), 2);
    }

    #[test]
    fn dotted_acronym_then_capital_breaks() {
        let t = tokenize("He moved to the U.S. She stayed.");
        assert_eq!(t.sentences.len(), 2);
        assert_eq!(t.sentences[0].tokens.last().unwrap().text, "U.S.");
    }

    #[test]
    fn punctuation_only_input() {
        let t = tokenize("!!!");
        assert_eq!(t.sentences.len(), 1);
        assert_eq!(t.sentences[0].tokens.len(), 1);
    }

    #[test]
    fn possessives() {
        let t = tokenize("The students' books and John's pen.");
        assert_eq!(surfaces(&t)[0], vec!["The", "students", "'", "books", "and", "John", "'s", "pen", "."]);
    }

    #[test]
    fn spans_are_exact_slices() {
        let text = "Well... \u{201c}Maybe\u{201d} -- she said -- it's (probably) fine; isn't it?";
        let t = tokenize(text);
        for tok in t.tokens() {
            assert_eq!(&text[tok.span()], tok.text);
        }
    }
}
