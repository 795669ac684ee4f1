//! Clause and depth heuristics standing in for a constituency parse.
//!
//! A clause marker is a subordinating conjunction, a wh-relativizer or a
//! complementizer/relative `that`. It opens a clause only when a finite verb
//! (VBD, VBZ, VBP, MD) follows before the next marker or the sentence end.
//! Each sentence has `1 + opened clauses` clauses.
//!
//! Depths come from a bracketing over the tag sequence: a sentence root at
//! depth 0, a phrase level at 1, leaves at 2. Every opened clause adds one
//! level for the tokens that follow it, a comma closes the innermost open
//! clause, `;`, `:` and dashes close all of them, and brackets add one level
//! for their contents.

use alloc::string::String;
use alloc::vec::Vec;

use super::tokenize::{Sentence, TokenizedEssay};

pub(crate) const SUBORDINATORS: &[&str] = &[
    "after", "although", "as", "because", "before", "if", "once", "since", "though", "unless", "until", "till",
    "when", "whenever", "where", "whereas", "wherever", "whether", "while", "whilst",
];

const RELATIVIZERS: &[&str] = &["who", "whom", "whose", "which"];

const FINITE: &[&str] = &["VBD", "VBZ", "VBP", "MD"];

pub(crate) fn is_subordinator(word: &str) -> bool {
    let lower = word.to_lowercase();
    SUBORDINATORS.contains(&lower.as_str())
}

fn is_marker(word: &str, tag: &str) -> bool {
    let lower = word.to_lowercase();
    if lower == "that" {
        return tag == "WDT" || tag == "IN";
    }
    if RELATIVIZERS.contains(&lower.as_str()) {
        return tag.starts_with('W');
    }
    SUBORDINATORS.contains(&lower.as_str()) && (tag == "IN" || tag == "WRB")
}

/// Positions of markers that open a finite clause.
pub fn clause_openers(sentence: &Sentence, tags: &[String]) -> Vec<usize> {
    let markers: Vec<usize> = sentence
        .tokens
        .iter()
        .zip(tags)
        .enumerate()
        .filter(|(_, (tok, tag))| is_marker(&tok.text, tag))
        .map(|(i, _)| i)
        .collect();
    let mut openers = Vec::new();
    for (k, &m) in markers.iter().enumerate() {
        let stop = markers.get(k + 1).copied().unwrap_or(tags.len());
        if tags[m + 1..stop].iter().any(|t| FINITE.contains(&t.as_str())) {
            openers.push(m);
        }
    }
    openers
}

/// Leaf depth of every token in the sentence.
pub fn leaf_depths(sentence: &Sentence, tags: &[String]) -> Vec<usize> {
    let openers = clause_openers(sentence, tags);
    let mut open = 0usize;
    let mut brackets = 0usize;
    let mut depths = Vec::with_capacity(sentence.tokens.len());
    for (i, tok) in sentence.tokens.iter().enumerate() {
        let t = tok.text.as_str();
        if openers.contains(&i) {
            open += 1;
        }
        if matches!(t, ")" | "]" | "}") {
            brackets = brackets.saturating_sub(1);
        }
        depths.push(2 + open + brackets);
        match t {
            "," => open = open.saturating_sub(1),
            ";" | ":" | "--" | "\u{2014}" | "\u{2013}" => open = 0,
            "(" | "[" | "{" => brackets += 1,
            _ => {}
        }
    }
    depths
}

/// `[clause_per_s, mean_clause_l, max_clause_in_s, sent_ave_depth, ave_leaf_depth]`
/// over sentences holding at least one word. `tags[i]` tags `essay.sentences[i]`.
pub fn complexity_scores(essay: &TokenizedEssay, tags: &[Vec<String>]) -> [f64; 5] {
    let mut sentences = 0usize;
    let mut clauses = 0usize;
    let mut max_clauses = 0usize;
    let mut words = 0usize;
    let mut depth_sum = 0.0;
    let mut leaf_sum = 0.0;
    for (sentence, tags) in essay.sentences.iter().zip(tags) {
        let n_words = sentence.tokens.iter().filter(|t| t.is_lexical()).count();
        if n_words == 0 {
            continue;
        }
        sentences += 1;
        words += n_words;
        let c = 1 + clause_openers(sentence, tags).len();
        clauses += c;
        max_clauses = max_clauses.max(c);
        let depths = leaf_depths(sentence, tags);
        depth_sum += *depths.iter().max().unwrap_or(&2) as f64;
        leaf_sum += depths.iter().sum::<usize>() as f64 / depths.len().max(1) as f64;
    }
    if sentences == 0 {
        return [0.0; 5];
    }
    let s = sentences as f64;
    [
        clauses as f64 / s,
        words as f64 / clauses as f64,
        max_clauses as f64,
        depth_sum / s,
        leaf_sum / s,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use alloc::string::ToString;
    use alloc::vec;

    fn tags(list: &[&str]) -> Vec<String> {
        list.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn subordinate_clause_with_finite_verb() {
        let essay = tokenize("I stayed because it rained.");
        let t = tags(&["PRP", "VBD", "IN", "PRP", "VBD", "."]);
        assert_eq!(clause_openers(&essay.sentences[0], &t), vec![2]);
        assert_eq!(leaf_depths(&essay.sentences[0], &t), vec![2, 2, 3, 3, 3, 3]);
        let s = complexity_scores(&essay, &[t]);
        assert_eq!(s, [2.0, 2.5, 2.0, 3.0, 16.0 / 6.0]);
    }

    #[test]
    fn marker_without_finite_verb_is_ignored() {
        let essay = tokenize("I left after lunch.");
        let t = tags(&["PRP", "VBD", "IN", "NN", "."]);
        assert!(clause_openers(&essay.sentences[0], &t).is_empty());
    }

    #[test]
    fn comma_closes_clause() {
        let essay = tokenize("When it rains, we stay.");
        let t = tags(&["WRB", "PRP", "VBZ", ",", "PRP", "VBP", "."]);
        assert_eq!(leaf_depths(&essay.sentences[0], &t), vec![3, 3, 3, 3, 2, 2, 2]);
    }
}
