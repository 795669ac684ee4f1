//! Word lists, the sentiment lexicon and the bundled assets.
//!
//! Asset formats (UTF-8, `#` starts a comment line):
//!
//! * word list: one lowercase entry per line;
//! * sentiment lexicon: `word<TAB>valence`, valence in [-4, 4];
//! * tagger model: see [`crate::text::tagger`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::tagger::{PosTagger, TaggerModelError};

pub const DICTIONARY: &str = include_str!("../../assets/dictionary.txt");
pub const DALE_CHALL: &str = include_str!("../../assets/dale_chall.txt");
pub const STOPWORDS: &str = include_str!("../../assets/stopwords.txt");
pub const SENTIMENT: &str = include_str!("../../assets/sentiment.tsv");
pub const TAGGER_MODEL: &str = include_str!("../../assets/tagger.model");

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("sentiment lexicon line {line}: {message}")]
    Sentiment { line: usize, message: String },
    #[error("tagger model: {0}")]
    Tagger(#[from] TaggerModelError),
}

/// Sorted, deduplicated lowercase word list with case-insensitive lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    words: Vec<String>,
}

impl WordList {
    pub fn parse(text: &str) -> Self {
        let mut words: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        words.sort();
        words.dedup();
        WordList { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        let probe = word.to_lowercase();
        self.words.binary_search(&probe).is_ok()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Word valences in [-4, 4].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    valence: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut valence = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| LexiconError::Sentiment {
                line: n + 1,
                message: message.to_string(),
            };
            let (word, value) = line.split_once('\t').ok_or_else(|| err("expected word<TAB>valence"))?;
            let v: f64 = value.trim().parse().map_err(|_| err("valence is not a number"))?;
            if !v.is_finite() || !(-4.0..=4.0).contains(&v) {
                return Err(err("valence outside [-4, 4]"));
            }
            valence.insert(word.to_lowercase(), v);
        }
        Ok(SentimentLexicon { valence })
    }

    pub fn valence(&self, word: &str) -> Option<f64> {
        self.valence.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }
}

/// Everything the generic feature extractor needs besides the essay.
#[derive(Debug, Clone)]
pub struct TextResources {
    pub tagger: PosTagger,
    /// Spelling dictionary.
    pub dictionary: WordList,
    /// Dale-Chall familiar words.
    pub familiar: WordList,
    pub stopwords: WordList,
    pub sentiment: SentimentLexicon,
}

impl TextResources {
    /// Parses the assets compiled into the crate. Costs a few hundred
    /// milliseconds; build once and share.
    pub fn bundled() -> Self {
        Self::parse(DICTIONARY, DALE_CHALL, STOPWORDS, SENTIMENT, TAGGER_MODEL).expect("bundled assets are valid")
    }

    pub fn parse(
        dictionary: &str,
        familiar: &str,
        stopwords: &str,
        sentiment: &str,
        tagger_model: &str,
    ) -> Result<Self, LexiconError> {
        Ok(TextResources {
            tagger: PosTagger::from_model_str(tagger_model)?,
            dictionary: WordList::parse(dictionary),
            familiar: WordList::parse(familiar),
            stopwords: WordList::parse(stopwords),
            sentiment: SentimentLexicon::parse(sentiment)?,
        })
    }
}
