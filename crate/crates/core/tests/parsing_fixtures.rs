use trates_core::trait_features::{parse_question_list, parse_rating, ParseError, Rating};

use Rating::{High, Low, Medium};

const RATINGS: &[(&str, Option<Rating>)] = &[
    ("High", Some(High)),
    ("medium", Some(Medium)),
    ("LOW", Some(Low)),
    ("  High.\n", Some(High)),
    ("**Medium**", Some(Medium)),
    ("Answer: Low", Some(Low)),
    ("Answer (High, Medium, or Low): High", Some(High)),
    ("(High, Medium, or Low) medium", Some(Medium)),
    ("Rating: high/medium/low -> Low", Some(Low)),
    ("I would rate this as Medium because the structure is uneven.", Some(Medium)),
    ("Medium. The essay is not high quality.", Some(Medium)),
    ("High - the thesis is clear", Some(High)),
    ("\"Low\"", Some(Low)),
    ("high or high", Some(High)),
    ("The answer is: HIGH!", Some(High)),
    ("Medium-high", None),
    ("High/Low", None),
    ("medium or high", None),
    ("low to medium", None),
    ("High | Medium", None),
    ("highly organized", None),
    ("lowercase letters are fine", None),
    ("", None),
    ("N/A", None),
    ("3", None),
    ("The essay is mediocre.", None),
];

#[test]
fn rating_fixture_suite() {
    assert!(RATINGS.len() >= 20);
    for (text, expected) in RATINGS {
        match (parse_rating(text), expected) {
            (Ok(r), Some(e)) => assert_eq!(r, *e, "{text:?}"),
            (Err(ParseError::NoRating(_) | ParseError::AmbiguousRating(_)), None) => {}
            (got, _) => panic!("{text:?}: {got:?}, expected {expected:?}"),
        }
    }
}

#[test]
fn ties_are_ambiguous_not_missing() {
    assert!(matches!(parse_rating("High/Low"), Err(ParseError::AmbiguousRating(_))));
    assert!(matches!(parse_rating("nothing here"), Err(ParseError::NoRating(_))));
}

#[test]
fn rating_mapping_is_a_bijection() {
    for r in [Low, Medium, High] {
        assert_eq!(Rating::from_numeric(r.numeric()), Some(r));
    }
    assert_eq!([Low, Medium, High].map(Rating::numeric), [1, 2, 3]);
    assert_eq!(Rating::from_numeric(0), None);
    assert_eq!(Rating::from_numeric(4), None);
}

fn numbered(n: usize, sep: &str) -> String {
    (1..=n).map(|i| format!("{i}{sep} How would you rate aspect {i}?\n")).collect()
}

#[test]
fn recovers_n_questions_from_numbered_lists() {
    for n in 1..=15 {
        for sep in ["-", ".", ")", ":", " -", " \u{2013}"] {
            let qs = parse_question_list(&numbered(n, sep)).unwrap();
            assert_eq!(qs.len(), n, "n={n} sep={sep:?}");
            assert_eq!(qs[n - 1], format!("How would you rate aspect {n}?"));
        }
    }
}

#[test]
fn question_list_noise() {
    let text = "Here are the questions:\n\n**1.** How would you rate the introduction?\n  2- How would you rate the transitions?\n### 3) How would you rate the conclusion?\n\nThese questions cover the rubric.";
    let qs = parse_question_list(text).unwrap();
    assert_eq!(qs.len(), 3);
    assert_eq!(qs[0], "How would you rate the introduction?");
    assert_eq!(parse_question_list("1- a\n1- b"), Err(ParseError::DuplicateNumber(1)));
    assert_eq!(parse_question_list("no list at all"), Err(ParseError::NoQuestions));
    assert_eq!(parse_question_list("2024 was a year"), Err(ParseError::NoQuestions));
}
