//! Word-usage and part-of-speech variation features.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::complexity::is_subordinator;
use super::lexicon::WordList;
use super::tokenize::TokenizedEssay;

/// Tags (and punctuation tags) whose share of all tokens is a feature.
pub const TAG_PROPORTIONS: [&str; 29] = [
    ",", ".", "VBG", "VBZ", "VBP", "VB", "VBD", "VBN", "NN", "NNP", "NNS", "JJ", "JJS", "RBR", "JJR", "RB", "WRB",
    "PRP", "WP", "PRP$", "IN", "MD", "RP", "CC", "TO", "WDT", "DT", "CD", "POS",
];

pub const COUNT_NAMES: [&str; 12] = [
    "tobeverb",
    "auxverb",
    "conjunction",
    "pronoun",
    "preposition",
    "nominalization",
    "begin_w_pronoun",
    "begin_w_interrogative",
    "begin_w_article",
    "begin_w_subordination",
    "begin_w_conjunction",
    "begin_w_preposition",
];

const TO_BE: &[&str] = &["be", "am", "is", "are", "was", "were", "been", "being", "'m", "'re"];
const AUXILIARIES: &[&str] = &[
    "be", "am", "is", "are", "was", "were", "been", "being", "'m", "'re", "'s", "do", "does", "did", "have", "has",
    "had", "'ve", "'d",
];
const INTERROGATIVES: &[&str] = &["who", "whom", "whose", "what", "which", "when", "where", "why", "how"];
const ARTICLES: &[&str] = &["a", "an", "the"];
const NOMINAL_SUFFIXES: &[&str] = &["tion", "sion", "ment", "ness", "ance", "ence", "ity", "ism"];

fn lower(word: &str) -> String {
    word.to_lowercase().replace('\u{2019}', "'")
}

fn is_to_be(word: &str, tag: &str) -> bool {
    let w = lower(word);
    TO_BE.contains(&w.as_str()) || (w == "'s" && tag == "VBZ")
}

fn is_nominalization(word: &str, tag: &str) -> bool {
    if tag != "NN" && tag != "NNS" {
        return false;
    }
    let w = lower(word);
    let stem = w.strip_suffix('s').filter(|_| tag == "NNS").unwrap_or(&w);
    NOMINAL_SUFFIXES.iter().any(|suf| stem.len() >= suf.len() + 3 && stem.ends_with(suf))
}

/// `unique_word`, `stop_prop`, the 29 tag proportions and the 12 counts, in
/// that order. `tags[i]` tags `essay.sentences[i]`.
///
/// `unique_word` counts word types that occur exactly once.
pub fn variation_scores(essay: &TokenizedEssay, tags: &[Vec<String>], stopwords: &WordList) -> [f64; 43] {
    let mut out = [0.0; 43];
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    let mut words = 0usize;
    let mut stops = 0usize;
    for tok in essay.tokens().filter(|t| t.is_lexical()) {
        words += 1;
        if stopwords.contains(&tok.text) {
            stops += 1;
        }
        *freq.entry(tok.text.to_lowercase()).or_default() += 1;
    }
    out[0] = freq.values().filter(|&&n| n == 1).count() as f64;
    out[1] = stops as f64 / words.max(1) as f64;

    let mut tag_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut tokens = 0usize;
    let mut counts = [0usize; 12];
    for (sentence, tags) in essay.sentences.iter().zip(tags) {
        let toks = &sentence.tokens;
        for (i, (tok, tag)) in toks.iter().zip(tags).enumerate() {
            tokens += 1;
            *tag_counts.entry(tag.as_str()).or_default() += 1;
            let w = lower(&tok.text);
            if is_to_be(&tok.text, tag) {
                counts[0] += 1;
            }
            let next_verb = tags[i + 1..].iter().find(|t| !t.starts_with("RB")).is_some_and(|t| t.starts_with("VB"));
            if tag == "MD" || (AUXILIARIES.contains(&w.as_str()) && next_verb) {
                counts[1] += 1;
            }
            let subordinator = tag == "IN" && is_subordinator(&w);
            if tag == "CC" || subordinator {
                counts[2] += 1;
            }
            if matches!(tag.as_str(), "PRP" | "PRP$" | "WP" | "WP$") {
                counts[3] += 1;
            }
            if tag == "IN" && !subordinator {
                counts[4] += 1;
            }
            if is_nominalization(&tok.text, tag) {
                counts[5] += 1;
            }
        }
        let Some(first) = toks.iter().position(|t| t.is_word()) else {
            continue;
        };
        let (w, tag) = (lower(&toks[first].text), tags[first].as_str());
        let subordinator = is_subordinator(&w) && (tag == "IN" || tag == "WRB");
        let starts = [
            matches!(tag, "PRP" | "PRP$"),
            INTERROGATIVES.contains(&w.as_str()),
            ARTICLES.contains(&w.as_str()),
            subordinator,
            tag == "CC",
            tag == "IN" && !subordinator,
        ];
        for (k, hit) in starts.into_iter().enumerate() {
            if hit {
                counts[6 + k] += 1;
            }
        }
    }
    let n = tokens.max(1) as f64;
    for (k, tag) in TAG_PROPORTIONS.iter().enumerate() {
        out[2 + k] = *tag_counts.get(tag).unwrap_or(&0) as f64 / n;
    }
    for (k, c) in counts.iter().enumerate() {
        out[31 + k] = *c as f64;
    }
    out
}
