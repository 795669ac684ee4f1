//! Averaged-perceptron part-of-speech tagger (Penn Treebank tagset).
//!
//! Greedy left-to-right decoding over a sparse feature template: affixes,
//! the two previous predicted tags and a +/-2 word window. Frequent
//! unambiguous words bypass the model through a tag dictionary.
//!
//! Model text format (UTF-8, tab-separated, one record per line):
//!
//! ```text
//! # comment
//! classes <TAB> TAG1 TAG2 ...
//! d <TAB> word <TAB> TAG
//! w <TAB> feature <TAB> classIndex:weight classIndex:weight ...
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaggerModelError {
    #[error("tagger model line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("tagger model has no classes line")]
    MissingClasses,
}

/// A tagged training sentence: parallel word and tag sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub words: Vec<String>,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct PosTagger {
    classes: Vec<String>,
    weights: BTreeMap<String, Vec<(u16, f32)>>,
    tagdict: BTreeMap<String, u16>,
}

fn normalize(word: &str) -> String {
    let first = word.chars().next();
    if word.contains('-') && first != Some('-') {
        "!HYPHEN".to_string()
    } else if word.len() == 4 && word.chars().all(|c| c.is_ascii_digit()) {
        "!YEAR".to_string()
    } else if first.is_some_and(|c| c.is_ascii_digit()) {
        "!DIGITS".to_string()
    } else {
        word.to_lowercase()
    }
}

fn suffix(word: &str, n: usize) -> &str {
    let count = word.chars().count();
    if count <= n {
        return word;
    }
    let skip: usize = word.chars().take(count - n).map(char::len_utf8).sum();
    &word[skip..]
}

fn prefix1(word: &str) -> &str {
    word.chars().next().map_or("", |c| &word[..c.len_utf8()])
}

/// Feature strings for position `i` of `context` (which carries two start and
/// two end pads around the normalized words).
fn features(i: usize, word: &str, context: &[String], prev: &str, prev2: &str) -> Vec<String> {
    let i = i + START.len();
    alloc::vec![
        "bias".to_string(),
        format!("i suffix {}", suffix(word, 3)),
        format!("i pref1 {}", prefix1(word)),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {}", context[i]),
        format!("i-1 tag+i word {prev} {}", context[i]),
        format!("i-1 word {}", context[i - 1]),
        format!("i-1 suffix {}", suffix(&context[i - 1], 3)),
        format!("i-2 word {}", context[i - 2]),
        format!("i+1 word {}", context[i + 1]),
        format!("i+1 suffix {}", suffix(&context[i + 1], 3)),
        format!("i+2 word {}", context[i + 2]),
    ]
}

fn build_context(words: &[&str]) -> Vec<String> {
    let mut context = Vec::with_capacity(words.len() + 4);
    context.extend(START.iter().map(|s| s.to_string()));
    context.extend(words.iter().map(|w| normalize(w)));
    context.extend(END.iter().map(|s| s.to_string()));
    context
}

impl PosTagger {
    /// Parses a model in the text format described at module level.
    pub fn from_model_str(model: &str) -> Result<Self, TaggerModelError> {
        let mut tagger = PosTagger::default();
        let mut have_classes = false;
        for (n, line) in model.lines().enumerate() {
            let line_no = n + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let kind = fields.next().unwrap_or_default();
            let malformed = |message: &str| TaggerModelError::Malformed {
                line: line_no,
                message: message.to_string(),
            };
            match kind {
                "classes" => {
                    let list = fields.next().ok_or_else(|| malformed("empty classes"))?;
                    tagger.classes = list.split(' ').map(str::to_string).collect();
                    have_classes = true;
                }
                "d" => {
                    let word = fields.next().ok_or_else(|| malformed("missing word"))?;
                    let tag = fields.next().ok_or_else(|| malformed("missing tag"))?;
                    let idx = tagger
                        .class_index(tag)
                        .ok_or_else(|| malformed("unknown tag in dictionary"))?;
                    tagger.tagdict.insert(word.to_string(), idx);
                }
                "w" => {
                    let feat = fields.next().ok_or_else(|| malformed("missing feature"))?;
                    let list = fields.next().ok_or_else(|| malformed("missing weights"))?;
                    let mut entries = Vec::new();
                    for item in list.split(' ') {
                        let (c, w) = item.split_once(':').ok_or_else(|| malformed("bad weight"))?;
                        let c: u16 = c.parse().map_err(|_| malformed("bad class index"))?;
                        let w: f32 = w.parse().map_err(|_| malformed("bad weight value"))?;
                        if usize::from(c) >= tagger.classes.len() {
                            return Err(malformed("class index out of range"));
                        }
                        entries.push((c, w));
                    }
                    tagger.weights.insert(feat.to_string(), entries);
                }
                _ => return Err(malformed("unknown record kind")),
            }
        }
        if !have_classes {
            return Err(TaggerModelError::MissingClasses);
        }
        Ok(tagger)
    }

    /// Serializes the model; weights with magnitude below `min_weight` are dropped.
    pub fn to_model_string(&self, min_weight: f32) -> String {
        let mut out = String::new();
        out.push_str("# averaged perceptron POS tagger\n");
        out.push_str("classes\t");
        out.push_str(&self.classes.join(" "));
        out.push('\n');
        for (word, idx) in &self.tagdict {
            out.push_str(&format!("d\t{}\t{}\n", word, self.classes[usize::from(*idx)]));
        }
        for (feat, entries) in &self.weights {
            let kept: Vec<String> = entries
                .iter()
                .filter(|(_, w)| w.abs() >= min_weight)
                .map(|(c, w)| format!("{c}:{}", trim_float(*w)))
                .collect();
            if !kept.is_empty() {
                out.push_str(&format!("w\t{}\t{}\n", feat, kept.join(" ")));
            }
        }
        out
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    fn class_index(&self, tag: &str) -> Option<u16> {
        self.classes.iter().position(|c| c == tag).map(|i| i as u16)
    }

    fn predict(&self, feats: &[String]) -> u16 {
        let mut scores = alloc::vec![0.0f64; self.classes.len()];
        for f in feats {
            if let Some(entries) = self.weights.get(f) {
                for &(c, w) in entries {
                    scores[usize::from(c)] += f64::from(w);
                }
            }
        }
        argmax(&scores, &self.classes)
    }

    /// Tags one tokenized sentence; returns one Penn tag per token.
    pub fn tag(&self, words: &[&str]) -> Vec<String> {
        if words.is_empty() || self.classes.is_empty() {
            return Vec::new();
        }
        let context = build_context(words);
        let mut prev = START[0].to_string();
        let mut prev2 = START[1].to_string();
        let mut tags = Vec::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            let tag = match self.tagdict.get(*word) {
                Some(&idx) => self.classes[usize::from(idx)].clone(),
                None => {
                    let feats = features(i, word, &context, &prev, &prev2);
                    self.classes[usize::from(self.predict(&feats))].clone()
                }
            };
            prev2 = core::mem::replace(&mut prev, tag.clone());
            tags.push(tag);
        }
        tags
    }

    /// Trains a fresh model with the averaged perceptron update.
    pub fn train(sentences: &[TaggedSentence], iterations: usize, seed: u64) -> Self {
        let mut classes: Vec<String> = sentences.iter().flat_map(|s| s.tags.iter().cloned()).collect();
        classes.sort();
        classes.dedup();
        let mut tagger = PosTagger {
            classes,
            weights: BTreeMap::new(),
            tagdict: BTreeMap::new(),
        };
        tagger.tagdict = make_tagdict(sentences, &tagger);
        let n_classes = tagger.classes.len();

        let mut trainer = Averager {
            weights: BTreeMap::new(),
            n_classes,
            instances: 0,
        };
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..iterations {
            for &si in &order {
                let sent = &sentences[si];
                let words: Vec<&str> = sent.words.iter().map(String::as_str).collect();
                let context = build_context(&words);
                let mut prev = START[0].to_string();
                let mut prev2 = START[1].to_string();
                for (i, word) in words.iter().enumerate() {
                    let gold = tagger.class_index(&sent.tags[i]).expect("class from training data");
                    let guess = match tagger.tagdict.get(*word) {
                        Some(&idx) => idx,
                        None => {
                            let feats = features(i, word, &context, &prev, &prev2);
                            let guess = trainer.predict(&feats, &tagger.classes);
                            trainer.update(gold, guess, &feats);
                            guess
                        }
                    };
                    prev2 = core::mem::replace(&mut prev, tagger.classes[usize::from(guess)].clone());
                }
            }
            order.shuffle(&mut rng);
        }
        tagger.weights = trainer.averaged();
        tagger
    }
}

fn trim_float(w: f32) -> String {
    let s = format!("{w:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn argmax(scores: &[f64], classes: &[String]) -> u16 {
    let mut best = 0usize;
    for i in 1..scores.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && classes[i] > classes[best]) {
            best = i;
        }
    }
    best as u16
}

fn make_tagdict(sentences: &[TaggedSentence], tagger: &PosTagger) -> BTreeMap<String, u16> {
    const FREQ_THRESHOLD: usize = 20;
    const AMBIGUITY_THRESHOLD: f64 = 0.97;
    let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for s in sentences {
        for (w, t) in s.words.iter().zip(&s.tags) {
            *counts.entry(w.as_str()).or_default().entry(t.as_str()).or_default() += 1;
        }
    }
    let mut dict = BTreeMap::new();
    for (word, tags) in counts {
        let total: usize = tags.values().sum();
        let (tag, &n) = tags.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap();
        if total >= FREQ_THRESHOLD && (n as f64) / (total as f64) >= AMBIGUITY_THRESHOLD {
            if let Some(idx) = tagger.class_index(tag) {
                dict.insert(word.to_string(), idx);
            }
        }
    }
    dict
}

#[derive(Default, Clone)]
struct Slot {
    weight: f64,
    total: f64,
    stamp: u64,
}

struct Averager {
    weights: BTreeMap<String, Vec<Slot>>,
    n_classes: usize,
    instances: u64,
}

impl Averager {
    fn predict(&self, feats: &[String], classes: &[String]) -> u16 {
        let mut scores = alloc::vec![0.0f64; self.n_classes];
        for f in feats {
            if let Some(slots) = self.weights.get(f) {
                for (c, slot) in slots.iter().enumerate() {
                    scores[c] += slot.weight;
                }
            }
        }
        argmax(&scores, classes)
    }

    fn update(&mut self, gold: u16, guess: u16, feats: &[String]) {
        self.instances += 1;
        if gold == guess {
            return;
        }
        let now = self.instances;
        let n_classes = self.n_classes;
        for f in feats {
            let slots = self
                .weights
                .entry(f.clone())
                .or_insert_with(|| alloc::vec![Slot::default(); n_classes]);
            for (class, delta) in [(gold, 1.0), (guess, -1.0)] {
                let slot = &mut slots[usize::from(class)];
                slot.total += (now - slot.stamp) as f64 * slot.weight;
                slot.stamp = now;
                slot.weight += delta;
            }
        }
    }

    fn averaged(self) -> BTreeMap<String, Vec<(u16, f32)>> {
        let now = self.instances.max(1);
        let mut out = BTreeMap::new();
        for (feat, slots) in self.weights {
            let entries: Vec<(u16, f32)> = slots
                .iter()
                .enumerate()
                .filter_map(|(c, slot)| {
                    let total = slot.total + (now - slot.stamp) as f64 * slot.weight;
                    let avg = total / now as f64;
                    (avg != 0.0).then_some((c as u16, avg as f32))
                })
                .collect();
            if !entries.is_empty() {
                out.insert(feat, entries);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sent(pairs: &[(&str, &str)]) -> TaggedSentence {
        TaggedSentence {
            words: pairs.iter().map(|p| p.0.to_string()).collect(),
            tags: pairs.iter().map(|p| p.1.to_string()).collect(),
        }
    }

    fn toy_corpus() -> Vec<TaggedSentence> {
        vec![
            sent(&[("The", "DT"), ("cat", "NN"), ("sat", "VBD"), (".", ".")]),
            sent(&[("A", "DT"), ("dog", "NN"), ("ran", "VBD"), (".", ".")]),
            sent(&[("The", "DT"), ("dogs", "NNS"), ("run", "VBP"), (".", ".")]),
            sent(&[("Cats", "NNS"), ("sleep", "VBP"), ("often", "RB"), (".", ".")]),
        ]
    }

    #[test]
    fn empty_in_empty_out() {
        let tagger = PosTagger::train(&toy_corpus(), 5, 1);
        assert!(tagger.tag(&[]).is_empty());
    }

    #[test]
    fn learns_training_sentences() {
        let corpus = toy_corpus();
        let tagger = PosTagger::train(&corpus, 10, 7);
        for s in &corpus {
            let words: Vec<&str> = s.words.iter().map(String::as_str).collect();
            assert_eq!(tagger.tag(&words), s.tags);
        }
    }

    #[test]
    fn model_text_round_trip_preserves_predictions() {
        let corpus = toy_corpus();
        let tagger = PosTagger::train(&corpus, 10, 7);
        let reloaded = PosTagger::from_model_str(&tagger.to_model_string(0.0)).unwrap();
        let words = ["The", "cat", "run", "often", "."];
        assert_eq!(tagger.tag(&words), reloaded.tag(&words));
    }

    #[test]
    fn rejects_malformed_models() {
        assert_eq!(PosTagger::from_model_str("# nothing\n").unwrap_err(), TaggerModelError::MissingClasses);
        assert!(PosTagger::from_model_str("classes\tNN DT\nw\tbias\t5:1.0\n").is_err());
        assert!(PosTagger::from_model_str("classes\tNN DT\nz\tbias\n").is_err());
    }

    #[test]
    fn normalization_shapes() {
        assert_eq!(normalize("1999"), "!YEAR");
        assert_eq!(normalize("42nd"), "!DIGITS");
        assert_eq!(normalize("well-known"), "!HYPHEN");
        assert_eq!(normalize("Apple"), "apple");
    }
}
