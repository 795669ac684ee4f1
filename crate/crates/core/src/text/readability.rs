//! Readability indices.
//!
//! Symbols: `w` words, `s` sentences, `syl` syllables, `c` letters and digits
//! in words, `complex` words of three or more syllables, `long` words of seven
//! or more characters, `difficult` words missing from the Dale-Chall list.
//! Zero `w` or `s` is replaced by 1 before dividing.
//!
//! | index | formula |
//! |---|---|
//! | automated_readability | 4.71·c/w + 0.5·w/s − 21.43 |
//! | linsear_write | r = (easy + 3·hard)/s; r/2 if r > 20 else (r − 2)/2; hard = complex |
//! | Kincaid | 0.39·w/s + 11.8·syl/w − 15.59 |
//! | Coleman-Liau | 0.0588·L − 0.296·S − 15.8; L = 100·c/w, S = 100·s/w |
//! | FleschReadingEase | 206.835 − 1.015·w/s − 84.6·syl/w |
//! | GunningFogIndex | 0.4·(w/s + 100·complex/w) |
//! | LIX | w/s + 100·long/w |
//! | SMOGIndex | 1.0430·√(complex·30/s) + 3.1291 |
//! | RIX | long/s |
//! | DaleChallIndex | 0.1579·pdw + 0.0496·w/s, + 3.6365 when pdw > 5; pdw = 100·difficult/w |
//!
//! Regular inflections of familiar words count as familiar.
//! `spelling_err` counts word tokens missing from the dictionary; tokens with
//! digits are skipped and hyphenated words are checked part by part.

use libm::sqrt;

use super::lexicon::WordList;
use super::syllables::count_syllables;
use super::tokenize::TokenizedEssay;

/// Surface counts shared by the length and readability features.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TextCounts {
    pub words: usize,
    /// Sentences holding at least one word.
    pub sentences: usize,
    pub letters: usize,
    pub syllables: usize,
    pub complex_words: usize,
    pub long_words: usize,
    pub difficult_words: usize,
    pub spelling_errors: usize,
}

impl TextCounts {
    pub fn from_essay(essay: &TokenizedEssay, familiar: &WordList, dictionary: &WordList) -> Self {
        let mut c = TextCounts::default();
        for sentence in &essay.sentences {
            let mut any = false;
            for token in sentence.tokens.iter().filter(|t| t.is_lexical()) {
                any = true;
                let word = token.text.as_str();
                c.words += 1;
                c.letters += word.chars().filter(|ch| ch.is_alphanumeric()).count();
                let syl = count_syllables(word);
                c.syllables += syl;
                if syl >= 3 {
                    c.complex_words += 1;
                }
                if word.chars().count() >= 7 {
                    c.long_words += 1;
                }
                let has_digit = word.chars().any(|ch| ch.is_ascii_digit());
                if !has_digit && !is_familiar(word, familiar) {
                    c.difficult_words += 1;
                }
                if !has_digit && is_misspelled(word, dictionary) {
                    c.spelling_errors += 1;
                }
            }
            if any {
                c.sentences += 1;
            }
        }
        c
    }

    fn w(&self) -> f64 {
        self.words.max(1) as f64
    }

    fn s(&self) -> f64 {
        self.sentences.max(1) as f64
    }
}

/// Familiar-list lookup that also accepts regular inflections of listed
/// words (`-s`, `-es`, `-ed`, `-ing`, `-er`, `-est`, `-ly`, with `i`→`y`
/// and silent-`e` restoration).
pub fn is_familiar(word: &str, familiar: &WordList) -> bool {
    let w = word.to_lowercase();
    if familiar.contains(&w) {
        return true;
    }
    for suffix in ["s", "es", "ed", "d", "ing", "er", "est", "ly"] {
        let Some(stem) = w.strip_suffix(suffix) else {
            continue;
        };
        if stem.len() < 2 {
            continue;
        }
        if familiar.contains(stem) {
            return true;
        }
        if let Some(base) = stem.strip_suffix('i') {
            if familiar.contains(&alloc::format!("{base}y")) {
                return true;
            }
        }
        if familiar.contains(&alloc::format!("{stem}e")) {
            return true;
        }
    }
    false
}

fn is_misspelled(word: &str, dictionary: &WordList) -> bool {
    word.split('-')
        .filter(|part| part.chars().any(char::is_alphabetic))
        .any(|part| !dictionary.contains(part))
}

pub const READABILITY_NAMES: [&str; 11] = [
    "spelling_err",
    "automated_readability",
    "linsear_write",
    "Kincaid",
    "Coleman-Liau",
    "FleschReadingEase",
    "GunningFogIndex",
    "LIX",
    "SMOGIndex",
    "RIX",
    "DaleChallIndex",
];

/// The eleven readability values, in [`READABILITY_NAMES`] order.
pub fn readability_scores(c: &TextCounts) -> [f64; 11] {
    let (w, s) = (c.w(), c.s());
    let wps = w / s;
    let spw = c.syllables as f64 / w;
    let complex = c.complex_words as f64;
    let long = c.long_words as f64;

    let ari = 4.71 * (c.letters as f64 / w) + 0.5 * wps - 21.43;
    let easy = (c.words - c.complex_words) as f64;
    let r = (easy + 3.0 * complex) / s;
    let linsear = if r > 20.0 { r / 2.0 } else { (r - 2.0) / 2.0 };
    let kincaid = 0.39 * wps + 11.8 * spw - 15.59;
    let coleman = 0.0588 * (100.0 * c.letters as f64 / w) - 0.296 * (100.0 * s / w) - 15.8;
    let flesch = 206.835 - 1.015 * wps - 84.6 * spw;
    let fog = 0.4 * (wps + 100.0 * complex / w);
    let lix = wps + 100.0 * long / w;
    let smog = 1.0430 * sqrt(complex * 30.0 / s) + 3.1291;
    let rix = long / s;
    let pdw = 100.0 * c.difficult_words as f64 / w;
    let dale = 0.1579 * pdw + 0.0496 * wps + if pdw > 5.0 { 3.6365 } else { 0.0 };

    [
        c.spelling_errors as f64,
        ari,
        linsear,
        kincaid,
        coleman,
        flesch,
        fog,
        lix,
        smog,
        rix,
        dale,
    ]
}
