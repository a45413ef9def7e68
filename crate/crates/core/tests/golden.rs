use std::collections::BTreeSet;

use shakk::{Classifier, Lexicon, MarkerCategory};

struct Case {
    line: usize,
    uncertain: bool,
    categories: BTreeSet<MarkerCategory>,
    text: String,
}

fn golden() -> Vec<Case> {
    let raw = include_str!("fixtures/golden.tsv");
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .map(|(i, l)| {
            let mut f = l.splitn(3, '\t');
            let label = f.next().unwrap();
            let cats = f.next().unwrap();
            let text = f.next().unwrap().to_string();
            let categories = if cats == "-" {
                BTreeSet::new()
            } else {
                cats.split(',').map(|c| c.parse().unwrap()).collect()
            };
            Case {
                line: i + 1,
                uncertain: label == "1",
                categories,
                text,
            }
        })
        .collect()
}

#[test]
fn golden_corpus_labels() {
    let classifier = Classifier::new(&Lexicon::embedded());
    let cases = golden();
    assert!(cases.len() >= 30);
    for c in &cases {
        let r = classifier.classify_text(&c.line.to_string(), &c.text);
        assert_eq!(r.is_uncertain, c.uncertain, "line {}: {}", c.line, c.text);
        let got: BTreeSet<MarkerCategory> = r.matches.iter().map(|m| m.category).collect();
        assert!(c.categories.is_subset(&got), "line {}: expected {:?}, got {:?}", c.line, c.categories, got);
    }
}

#[test]
fn golden_corpus_covers_every_category() {
    let covered: BTreeSet<MarkerCategory> = golden().into_iter().flat_map(|c| c.categories).collect();
    assert_eq!(covered.len(), MarkerCategory::ALL.len());
}

#[test]
fn preposition_reading_is_suppressed() {
    let classifier = Classifier::new(&Lexicon::embedded());
    let r = classifier.classify_text("1", "وصلت من بيروت اليوم");
    assert!(!r.is_uncertain);
    assert_eq!(r.suppressed.len(), 1);
    assert_eq!(r.suppressed[0].surface, "من");
}
