use std::sync::OnceLock;

use proptest::prelude::*;
use trates_core::text::{registry, GenericCategory, GenericExtractor, GENERIC_FEATURE_COUNT};

fn extractor() -> &'static GenericExtractor {
    static EXTRACTOR: OnceLock<GenericExtractor> = OnceLock::new();
    EXTRACTOR.get_or_init(GenericExtractor::bundled)
}

fn index(name: &str) -> usize {
    registry().iter().position(|e| e.name == name).unwrap()
}

const WORDS: &[&str] = &[
    "the", "student", "wrote", "a", "very", "good", "essay", "because", "she", "was", "not", "happy", "with", "bad",
    "computers", "people", "think", "that", "libraries", "should", "keep", "books", "and", "we", "laughed", "when",
    "it", "rained", "on", "Tuesday", "however", "patience", "is", "important", "for", "everyone", "who", "waits",
    "don't", "it's", "@PERSON1", "42", "well-known", "decision", "terrible", "wonderful",
];

fn sentence() -> impl Strategy<Value = String> {
    (prop::collection::vec(prop::sample::select(WORDS), 1..14), prop::sample::select(&[".", "!", "?", "."][..]), any::<bool>())
        .prop_map(|(words, end, comma)| {
            let mut s = words.join(" ");
            if comma && words.len() > 3 {
                let cut = s.find(' ').unwrap();
                s.insert(cut, ',');
            }
            let mut chars = s.chars();
            let first = chars.next().unwrap().to_uppercase().collect::<String>();
            format!("{first}{}{end}", chars.as_str())
        })
}

fn essay() -> impl Strategy<Value = String> {
    prop::collection::vec(sentence(), 1..8).prop_map(|s| s.join(" "))
}

fn is_proportion(name: &str, category: GenericCategory) -> bool {
    name.ends_with("_prop") || name == "type_token_ratio" || (category == GenericCategory::Variation && !name.contains('_') && name != "tobeverb" && name != "auxverb" && name != "conjunction" && name != "pronoun" && name != "preposition" && name != "nominalization")
}

const COUNTS: &[&str] = &[
    "ess_char_len", "word_count", "prep_comma", "syllables", "wordtypes", "sentences", "long_words", "complex_words",
    "complex_words_dc", "spelling_err", "unique_word", "tobeverb", "auxverb", "conjunction", "pronoun", "preposition",
    "nominalization", "begin_w_pronoun", "begin_w_interrogative", "begin_w_article", "begin_w_subordination",
    "begin_w_conjunction", "begin_w_preposition", "max_clause_in_s",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ranges_and_partition(text in essay()) {
        let v = extractor().extract(&text);
        prop_assert_eq!(v.len(), GENERIC_FEATURE_COUNT);
        prop_assert!(v.iter().all(|x| x.is_finite()));
        for (entry, x) in registry().iter().zip(&v) {
            if is_proportion(entry.name, entry.category) {
                prop_assert!((0.0..=1.0).contains(x), "{} = {}", entry.name, x);
            }
            if COUNTS.contains(&entry.name) {
                prop_assert!(*x >= 0.0 && x.fract() == 0.0, "{} = {}", entry.name, x);
            }
        }
        let ttr = v[index("type_token_ratio")];
        prop_assert!(ttr > 0.0 && ttr <= 1.0);
        let parts = v[index("positive_sentence_prop")] + v[index("negative_sentence_prop")] + v[index("neutral_sentence_prop")];
        prop_assert!((parts - 1.0).abs() < 1e-9);
        prop_assert!(v[index("overall_positivity_score")] >= 0.0);
        prop_assert!(v[index("overall_negativity_score")] >= 0.0);
    }

    #[test]
    fn self_concatenation(text in essay()) {
        let once = extractor().extract(&text);
        let twice = extractor().extract(&format!("{text} {text}"));
        let wc = index("word_count");
        prop_assert_eq!(twice[wc], 2.0 * once[wc]);
        let cpw = index("characters_per_word");
        prop_assert!((twice[cpw] - once[cpw]).abs() < 1e-9);
    }

    #[test]
    fn deterministic(text in essay()) {
        let a = extractor().extract(&text);
        let b = extractor().extract(&text);
        prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn one_tag_per_token(text in essay()) {
        let analyzed = extractor().analyze(&text);
        for (s, t) in analyzed.tokens.sentences.iter().zip(&analyzed.tags) {
            prop_assert_eq!(s.tokens.len(), t.len());
        }
    }
}

#[test]
fn word_count_on_cat_fixture() {
    let v = extractor().extract("The cat sat on the mat.");
    assert_eq!(v[index("word_count")], 6.0);
    assert_eq!(v[index("sentences")], 1.0);
}

#[test]
fn pos_tag_examples() {
    let tagger = &extractor().resources.tagger;
    assert_eq!(tagger.tag(&["The", "cat", "sat", "."]), ["DT", "NN", "VBD", "."]);
    assert!(tagger.tag(&[]).is_empty());
}

#[test]
fn category_sizes() {
    let reg = registry();
    let size = |c| reg.iter().filter(|e| e.category == c).count();
    assert_eq!(size(GenericCategory::Length), 16);
    assert_eq!(size(GenericCategory::Readability), 11);
    assert_eq!(size(GenericCategory::Variation), 43);
    assert_eq!(size(GenericCategory::Complexity), 5);
    assert_eq!(size(GenericCategory::Sentiment), 5);
}
