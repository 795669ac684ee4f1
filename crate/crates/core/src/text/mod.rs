//! Generic writing-quality features: tokenization, syllables, POS tagging,
//! readability, text variation, complexity and sentiment.

pub mod complexity;
pub mod generic;
pub mod lexicon;
pub mod readability;
pub mod sentiment;
pub mod syllables;
pub mod tagger;
pub mod tokenize;
pub mod variation;

pub use generic::{registry, AnalyzedEssay, GenericCategory, GenericExtractor, RegistryEntry, GENERIC_FEATURE_COUNT};
pub use lexicon::{SentimentLexicon, TextResources, WordList};
pub use readability::{readability_scores, TextCounts, READABILITY_NAMES};
pub use syllables::count_syllables;
pub use tagger::{PosTagger, TaggedSentence};
pub use tokenize::{tokenize, Sentence, Token, TokenizedEssay};
