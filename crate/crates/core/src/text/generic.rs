//! The generic writing-quality feature registry and extractor.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::complexity::complexity_scores;
use super::lexicon::TextResources;
use super::readability::{readability_scores, TextCounts, READABILITY_NAMES};
use super::sentiment::sentiment_scores;
use super::tokenize::{tokenize, TokenizedEssay};
use super::variation::{variation_scores, COUNT_NAMES, TAG_PROPORTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenericCategory {
    Length,
    Readability,
    Complexity,
    Variation,
    Sentiment,
}

impl GenericCategory {
    pub const ALL: [GenericCategory; 5] = [
        GenericCategory::Length,
        GenericCategory::Readability,
        GenericCategory::Complexity,
        GenericCategory::Variation,
        GenericCategory::Sentiment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenericCategory::Length => "length",
            GenericCategory::Readability => "readability",
            GenericCategory::Complexity => "complexity",
            GenericCategory::Variation => "variation",
            GenericCategory::Sentiment => "sentiment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub category: GenericCategory,
    pub description: &'static str,
}

const LENGTH: [(&str, &str); 16] = [
    ("mean_word", "Mean characters per word token"),
    ("word_var", "Population variance of word length in characters"),
    ("mean_sent", "Mean words per sentence"),
    ("sent_var", "Population variance of sentence length in words"),
    ("ess_char_len", "Non-whitespace characters in the essay"),
    ("word_count", "Word tokens (clitics excluded)"),
    ("prep_comma", "Prepositions (IN) plus commas"),
    ("characters_per_word", "Non-whitespace characters divided by word count"),
    ("syll_per_word", "Syllables per word"),
    ("type_token_ratio", "Distinct lowercase words divided by word count"),
    ("syllables", "Total syllables"),
    ("wordtypes", "Distinct lowercase words"),
    ("sentences", "Sentences containing a word"),
    ("long_words", "Words of seven or more characters"),
    ("complex_words", "Words of three or more syllables"),
    ("complex_words_dc", "Words missing from the Dale-Chall familiar list"),
];

const READABILITY_DESC: [&str; 11] = [
    "Word tokens missing from the spelling dictionary",
    "Automated Readability Index",
    "Linsear Write formula",
    "Flesch-Kincaid grade level",
    "Coleman-Liau index",
    "Flesch reading ease",
    "Gunning fog index",
    "Lasbarhetsindex",
    "SMOG grade",
    "Long words per sentence",
    "New Dale-Chall score",
];

const COMPLEXITY: [(&str, &str); 5] = [
    ("clause_per_s", "Mean clauses per sentence"),
    ("mean_clause_l", "Words per clause"),
    ("max_clause_in_s", "Most clauses in one sentence"),
    ("sent_ave_depth", "Mean maximum bracketing depth per sentence"),
    ("ave_leaf_depth", "Mean leaf depth per sentence, averaged over sentences"),
];

const VARIATION_HEAD: [(&str, &str); 2] = [
    ("unique_word", "Word types occurring exactly once"),
    ("stop_prop", "Share of words on the stop-word list"),
];

const COUNT_DESC: [&str; 12] = [
    "Forms of \"to be\"",
    "Modals and be/do/have followed by a verb",
    "Coordinating plus subordinating conjunctions",
    "Personal, possessive and wh-pronouns",
    "Prepositions (IN minus subordinators)",
    "Nouns with a nominalizing suffix",
    "Sentences starting with a pronoun",
    "Sentences starting with a wh-word",
    "Sentences starting with an article",
    "Sentences starting with a subordinating conjunction",
    "Sentences starting with a coordinating conjunction",
    "Sentences starting with a preposition",
];

const SENTIMENT: [(&str, &str); 5] = [
    ("positive_sentence_prop", "Share of positive sentences"),
    ("negative_sentence_prop", "Share of negative sentences"),
    ("neutral_sentence_prop", "Share of neutral sentences"),
    ("overall_positivity_score", "Positive valence per word"),
    ("overall_negativity_score", "Absolute negative valence per word"),
];

pub const GENERIC_FEATURE_COUNT: usize = 80;

/// The ordered feature registry.
pub fn registry() -> Vec<RegistryEntry> {
    use GenericCategory::*;
    let mut out = Vec::with_capacity(GENERIC_FEATURE_COUNT);
    let mut push = |name, category, description| out.push(RegistryEntry { name, category, description });
    for (n, d) in LENGTH {
        push(n, Length, d);
    }
    for (n, d) in READABILITY_NAMES.into_iter().zip(READABILITY_DESC) {
        push(n, Readability, d);
    }
    for (n, d) in COMPLEXITY {
        push(n, Complexity, d);
    }
    for (n, d) in VARIATION_HEAD {
        push(n, Variation, d);
    }
    for tag in TAG_PROPORTIONS {
        push(tag, Variation, "Share of tokens with this tag");
    }
    for (n, d) in COUNT_NAMES.into_iter().zip(COUNT_DESC) {
        push(n, Variation, d);
    }
    for (n, d) in SENTIMENT {
        push(n, Sentiment, d);
    }
    out
}

/// A tokenized, tagged essay.
#[derive(Debug, Clone)]
pub struct AnalyzedEssay {
    pub text: String,
    pub tokens: TokenizedEssay,
    /// One tag list per sentence.
    pub tags: Vec<Vec<String>>,
}

/// Computes the registry vector for essays.
#[derive(Debug, Clone)]
pub struct GenericExtractor {
    pub resources: TextResources,
}

impl GenericExtractor {
    pub fn new(resources: TextResources) -> Self {
        GenericExtractor { resources }
    }

    pub fn bundled() -> Self {
        Self::new(TextResources::bundled())
    }

    pub fn analyze(&self, text: &str) -> AnalyzedEssay {
        let tokens = tokenize(text);
        let tags = tokens
            .sentences
            .iter()
            .map(|s| self.resources.tagger.tag(&s.surfaces()))
            .collect();
        AnalyzedEssay {
            text: String::from(text),
            tokens,
            tags,
        }
    }

    /// All registry features, in registry order.
    pub fn extract(&self, text: &str) -> Vec<f64> {
        self.extract_analyzed(&self.analyze(text))
    }

    pub fn extract_analyzed(&self, essay: &AnalyzedEssay) -> Vec<f64> {
        let r = &self.resources;
        let counts = TextCounts::from_essay(&essay.tokens, &r.familiar, &r.dictionary);
        let mut out = Vec::with_capacity(GENERIC_FEATURE_COUNT);
        out.extend(length_scores(essay, &counts));
        out.extend(readability_scores(&counts));
        out.extend(complexity_scores(&essay.tokens, &essay.tags));
        out.extend(variation_scores(&essay.tokens, &essay.tags, &r.stopwords));
        out.extend(sentiment_scores(&essay.tokens, &r.sentiment));
        debug_assert_eq!(out.len(), GENERIC_FEATURE_COUNT);
        out
    }
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

fn length_scores(essay: &AnalyzedEssay, c: &TextCounts) -> [f64; 16] {
    let words: Vec<&str> = essay.tokens.words().filter(|t| t.is_lexical()).map(|t| t.text.as_str()).collect();
    let word_lens: Vec<f64> = words.iter().map(|w| w.chars().count() as f64).collect();
    let sent_lens: Vec<f64> = essay
        .tokens
        .sentences
        .iter()
        .map(|s| s.tokens.iter().filter(|t| t.is_lexical()).count())
        .filter(|&n| n > 0)
        .map(|n| n as f64)
        .collect();
    let (mean_word, word_var) = mean_var(&word_lens);
    let (mean_sent, sent_var) = mean_var(&sent_lens);
    let chars = essay.text.chars().filter(|ch| !ch.is_whitespace()).count() as f64;
    let n = words.len();
    let w = n.max(1) as f64;
    let types: BTreeSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let prep_comma = essay
        .tokens
        .sentences
        .iter()
        .zip(&essay.tags)
        .flat_map(|(s, t)| s.tokens.iter().zip(t))
        .filter(|(tok, tag)| tag.as_str() == "IN" || tok.text == ",")
        .count();
    [
        mean_word,
        word_var,
        mean_sent,
        sent_var,
        chars,
        n as f64,
        prep_comma as f64,
        chars / w,
        c.syllables as f64 / w,
        types.len() as f64 / w,
        c.syllables as f64,
        types.len() as f64,
        c.sentences as f64,
        c.long_words as f64,
        c.complex_words as f64,
        c.difficult_words as f64,
    ]
}
