//! Lexicon sentiment with windowed negation.
//!
//! A word's valence is negated when one of the three preceding tokens is a
//! negator. A sentence's summed valence `v` is squashed to
//! `v / sqrt(v² + 15)`; values at or above 0.05 are positive, at or below
//! -0.05 negative, and the band in between neutral.

use alloc::vec::Vec;

use libm::sqrt;

use super::lexicon::SentimentLexicon;
use super::tokenize::{Sentence, TokenizedEssay};

const NEGATION_WINDOW: usize = 3;
const ALPHA: f64 = 15.0;
const DEAD_ZONE: f64 = 0.05;

const NEGATORS: &[&str] = &[
    "not", "n't", "no", "never", "nobody", "nothing", "none", "neither", "nor", "nowhere", "cannot", "without",
];

fn is_negator(token: &str) -> bool {
    let lower = token.to_lowercase().replace('\u{2019}', "'");
    NEGATORS.contains(&lower.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

/// Signed valences of the sentence's words after negation.
pub fn word_valences(sentence: &Sentence, lexicon: &SentimentLexicon) -> Vec<f64> {
    let tokens = &sentence.tokens;
    let mut out = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        if !token.is_word() {
            continue;
        }
        let Some(v) = lexicon.valence(&token.text) else {
            continue;
        };
        let lo = i.saturating_sub(NEGATION_WINDOW);
        let negated = tokens[lo..i].iter().any(|t| is_negator(&t.text));
        out.push(if negated { -v } else { v });
    }
    out
}

pub fn sentence_polarity(sentence: &Sentence, lexicon: &SentimentLexicon) -> Polarity {
    let v: f64 = word_valences(sentence, lexicon).iter().sum();
    let compound = v / sqrt(v * v + ALPHA);
    if compound >= DEAD_ZONE {
        Polarity::Positive
    } else if compound <= -DEAD_ZONE {
        Polarity::Negative
    } else {
        Polarity::Neutral
    }
}

/// `[positive_sentence_prop, negative_sentence_prop, neutral_sentence_prop,
/// overall_positivity_score, overall_negativity_score]`.
///
/// The overall scores are the summed positive (resp. absolute negative)
/// valence divided by the word count.
pub fn sentiment_scores(essay: &TokenizedEssay, lexicon: &SentimentLexicon) -> [f64; 5] {
    let (mut pos, mut neg, mut neu) = (0usize, 0usize, 0usize);
    let (mut pos_sum, mut neg_sum) = (0.0, 0.0);
    let mut words = 0usize;
    for sentence in &essay.sentences {
        words += sentence.tokens.iter().filter(|t| t.is_lexical()).count();
        match sentence_polarity(sentence, lexicon) {
            Polarity::Positive => pos += 1,
            Polarity::Negative => neg += 1,
            Polarity::Neutral => neu += 1,
        }
        for v in word_valences(sentence, lexicon) {
            if v > 0.0 {
                pos_sum += v;
            } else {
                neg_sum -= v;
            }
        }
    }
    let n = (pos + neg + neu).max(1) as f64;
    let w = words.max(1) as f64;
    [pos as f64 / n, neg as f64 / n, neu as f64 / n, pos_sum / w, neg_sum / w]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn lex() -> SentimentLexicon {
        SentimentLexicon::parse("good\t1.9\nbad\t-2.5\nhappy\t2.7\n").unwrap()
    }

    #[test]
    fn polarity_and_negation() {
        let t = tokenize("This is good. This is not good. The sky is blue.");
        let l = lex();
        let p: Vec<_> = t.sentences.iter().map(|s| sentence_polarity(s, &l)).collect();
        assert_eq!(p, [Polarity::Positive, Polarity::Negative, Polarity::Neutral]);
    }

    #[test]
    fn negation_window_is_three_tokens() {
        let l = lex();
        let near = tokenize("I didn't feel very happy.");
        assert_eq!(sentence_polarity(&near.sentences[0], &l), Polarity::Negative);
        let far = tokenize("No, the day was long and then happy.");
        assert_eq!(sentence_polarity(&far.sentences[0], &l), Polarity::Positive);
    }

    #[test]
    fn scores_partition_sentences() {
        let s = sentiment_scores(&tokenize("Good. Bad. Blue."), &lex());
        assert!((s[0] + s[1] + s[2] - 1.0).abs() < 1e-12);
        assert!((s[3] - 1.9 / 3.0).abs() < 1e-12);
        assert!((s[4] - 2.5 / 3.0).abs() < 1e-12);
    }
}
