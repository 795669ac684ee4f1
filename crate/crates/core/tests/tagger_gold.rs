use trates_core::text::{tokenize, PosTagger};

const MODEL: &str = include_str!("../assets/tagger.model");
const GOLD: &str = include_str!("fixtures/pos_gold.tsv");

fn gold_sentences() -> Vec<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for line in GOLD.lines().filter(|l| !l.starts_with('#')) {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (w, t) = line.split_once('\t').expect("word<TAB>tag");
        cur.push((w.to_string(), t.to_string()));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[test]
fn bundled_model_reaches_95_percent_on_gold_fixture() {
    let tagger = PosTagger::from_model_str(MODEL).unwrap();
    let mut total = 0usize;
    let mut correct = 0usize;
    let mut misses = Vec::new();
    for sent in gold_sentences() {
        let words: Vec<&str> = sent.iter().map(|(w, _)| w.as_str()).collect();
        let predicted = tagger.tag(&words);
        for ((w, gold), pred) in sent.iter().zip(&predicted) {
            total += 1;
            if gold == pred {
                correct += 1;
            } else {
                misses.push(format!("{w}: gold {gold}, got {pred}"));
            }
        }
    }
    let acc = correct as f64 / total as f64;
    println!("tagger accuracy {correct}/{total} = {acc:.4}");
    for m in &misses {
        println!("  {m}");
    }
    assert!(acc >= 0.95, "accuracy {acc:.4} below 0.95");
}

fn detokenize(tokens: &[&str]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let glue = matches!(*t, "." | "," | "?" | "!" | ";" | ":" | "n't") || t.starts_with('\'');
        if i > 0 && !glue {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

#[test]
fn gold_fixture_matches_tokenizer_output() {
    for sent in gold_sentences() {
        let text: Vec<&str> = sent.iter().map(|(w, _)| w.as_str()).collect();
        let joined = detokenize(&text);
        let toks = tokenize(&joined);
        let surfaces: Vec<&str> = toks.tokens().map(|t| &joined[t.span()]).collect();
        assert_eq!(surfaces, text, "tokenizer disagrees on {joined:?}");
    }
}
