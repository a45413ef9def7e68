//! Arabic text normalization and tokenization.
//!
//! Marker matching is defined over the tokens produced here, so the steps run
//! in a fixed order:
//!
//! 1. canonical composition (NFC)
//! 2. URL removal (`http://`, `https://`, or a bare `t.co/` host)
//! 3. tatweel (U+0640) removal
//! 4. diacritic (U+064B..=U+065F) removal
//! 5. alef-variant folding (أ إ آ → ا)
//! 6. alef-maqsura folding (ى → ي)
//! 7. tokenization on whitespace and punctuation, with `؟` and `?` emitted as
//!    standalone tokens
//!
//! Steps 4-6 are the orthographic folding controlled by
//! [`NormalizeOptions::fold`]. Every token carries the byte span of the raw
//! input it was built from.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::{
    canonical_combining_class, compose, decompose_canonical, is_combining_mark,
};
use unicode_normalization::UnicodeNormalization;

pub const TATWEEL: char = '\u{0640}';
pub const ARABIC_QUESTION_MARK: char = '\u{061F}';
pub const LATIN_QUESTION_MARK: char = '?';

const DIACRITICS: Range<u32> = 0x064B..0x0660;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    /// Remove diacritics and fold alef / alef-maqsura variants.
    pub fold: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { fold: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub tokens: Vec<String>,
    /// Byte ranges into the raw input, one per token, increasing and disjoint.
    pub token_spans: Vec<Range<usize>>,
    pub urls_stripped: usize,
}

impl NormalizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn detokenize(&self) -> String {
        self.tokens.join(" ")
    }
}

/// The URL pattern shared by normalization and link detection.
pub fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"(?i)(?:https?://|\bt\.co/)\S*").expect("valid URL regex"))
}

pub fn contains_url(text: &str) -> bool {
    url_pattern().is_match(text)
}

pub fn is_question_mark(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(
        (chars.next(), chars.next()),
        (Some(ARABIC_QUESTION_MARK | LATIN_QUESTION_MARK), None)
    )
}

/// Normalize with default options (folding on).
pub fn normalize(text: &str) -> NormalizedText {
    normalize_with(text, NormalizeOptions::default())
}

pub fn normalize_with(text: &str, opts: NormalizeOptions) -> NormalizedText {
    let composed = compose_segments(text);

    // Byte offset of each composed char inside the composed string, so regex
    // matches can be mapped back onto the char list.
    let mut composed_str = String::with_capacity(text.len());
    let mut offsets = Vec::with_capacity(composed.len());
    for (c, _) in &composed {
        offsets.push(composed_str.len());
        composed_str.push(*c);
    }

    let mut removed = vec![false; composed.len()];
    let mut urls_stripped = 0;
    for m in url_pattern().find_iter(&composed_str) {
        urls_stripped += 1;
        let start = offsets.partition_point(|&o| o < m.start());
        let end = offsets.partition_point(|&o| o < m.end());
        removed[start..end].iter_mut().for_each(|r| *r = true);
    }

    let mut tokens = Vec::new();
    let mut token_spans = Vec::new();
    let mut current = String::new();
    let mut span: Option<Range<usize>> = None;

    let mut flush = |current: &mut String, span: &mut Option<Range<usize>>| {
        if let Some(s) = span.take() {
            tokens.push(std::mem::take(current));
            token_spans.push(s);
        }
    };

    for (idx, (c, raw)) in composed.iter().enumerate() {
        if removed[idx] {
            flush(&mut current, &mut span);
            continue;
        }
        let Some(c) = fold_char(*c, opts) else {
            continue;
        };
        if c == ARABIC_QUESTION_MARK || c == LATIN_QUESTION_MARK {
            flush(&mut current, &mut span);
            current.push(c);
            span = Some(raw.clone());
            flush(&mut current, &mut span);
        } else if c.is_alphanumeric() || is_combining_mark(c) {
            current.push(c);
            span = Some(match span.take() {
                Some(s) => s.start..raw.end,
                None => raw.clone(),
            });
        } else {
            flush(&mut current, &mut span);
        }
    }
    flush(&mut current, &mut span);

    NormalizedText {
        tokens,
        token_spans,
        urls_stripped,
    }
}

/// Steps 3-6 for a single char; `None` means the char is deleted.
fn fold_char(c: char, opts: NormalizeOptions) -> Option<char> {
    if c == TATWEEL {
        return None;
    }
    if !opts.fold {
        return Some(c);
    }
    if DIACRITICS.contains(&(c as u32)) {
        return None;
    }
    Some(match c {
        '\u{0623}' | '\u{0625}' | '\u{0622}' => '\u{0627}',
        '\u{0649}' => '\u{064A}',
        other => other,
    })
}

/// NFC applied per composition segment, keeping for every output char the raw
/// byte range of the segment that produced it.
///
/// A segment is a starter plus its trailing non-starters; a starter that would
/// compose with the previous segment's last char is merged into it. The
/// concatenated output equals the NFC of the whole string.
fn compose_segments(text: &str) -> Vec<(char, Range<usize>)> {
    let mut out = Vec::with_capacity(text.len());
    let mut seg_start = 0;
    let mut seg_end = 0;

    let emit = |out: &mut Vec<(char, Range<usize>)>, start: usize, end: usize| {
        out.extend(text[start..end].nfc().map(|c| (c, start..end)));
    };

    for (b, c) in text.char_indices() {
        if seg_end > seg_start {
            let mut first = None;
            decompose_canonical(c, |d| {
                if first.is_none() {
                    first = Some(d);
                }
            });
            let first = first.unwrap_or(c);
            let starter = canonical_combining_class(first) == 0;
            if starter {
                // Peek at how the open segment composes so far.
                let tail = text[seg_start..seg_end].nfc().last();
                let joins = tail.is_some_and(|t| compose(t, first).is_some());
                if !joins {
                    emit(&mut out, seg_start, seg_end);
                    seg_start = b;
                }
            }
        } else {
            seg_start = b;
        }
        seg_end = b + c.len_utf8();
    }
    if seg_end > seg_start {
        emit(&mut out, seg_start, seg_end);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<String> {
        normalize(text).tokens
    }

    #[test]
    fn tatweel_is_removed() {
        assert_eq!(toks("لبنـــان"), vec!["لبنان"]);
    }

    #[test]
    fn url_is_stripped_before_question_tokens() {
        let n = normalize("من بيروت؟ https://t.co/x");
        assert_eq!(n.tokens, vec!["من", "بيروت", "؟"]);
        assert_eq!(n.urls_stripped, 1);
    }

    #[test]
    fn question_mark_inside_url_never_becomes_a_token() {
        let n = normalize("خبر https://example.com/a?b=1 t.co/q?x");
        assert_eq!(n.tokens, vec!["خبر"]);
        assert_eq!(n.urls_stripped, 2);
    }

    #[test]
    fn alef_variants_fold() {
        assert_eq!(toks("إشاعة"), vec!["اشاعة"]);
        assert_eq!(toks("أعتقد"), vec!["اعتقد"]);
        assert_eq!(toks("آخر"), vec!["اخر"]);
        assert_eq!(toks("على"), vec!["علي"]);
    }

    #[test]
    fn decomposed_madda_composes_then_folds() {
        // alef + combining madda above composes to U+0622, then folds to bare alef.
        assert_eq!(toks("\u{0627}\u{0653}خر"), vec!["اخر"]);
    }

    #[test]
    fn diacritics_removed_when_folding() {
        assert_eq!(toks("يُعْتَقَدُ"), vec!["يعتقد"]);
        assert_eq!(toks("نوعاً"), vec!["نوعا"]);
    }

    #[test]
    fn folding_can_be_disabled() {
        let n = normalize_with("إشاعة يُقال لبنـان", NormalizeOptions { fold: false });
        assert_eq!(n.tokens, vec!["إشاعة", "يُقال", "لبنان"]);
    }

    #[test]
    fn punctuation_splits_and_question_marks_stand_alone() {
        assert_eq!(toks("هل، ستعود?الكهرباء؟!"), vec!["هل", "ستعود", "?", "الكهرباء", "؟"]);
        assert_eq!(toks("#ربما_لا"), vec!["ربما", "لا"]);
        assert!(toks("  ...  ").is_empty());
        assert!(toks("").is_empty());
    }

    #[test]
    fn spans_point_into_raw_text() {
        let raw = "قد يُقال: لبنـان؟";
        let n = normalize(raw);
        assert_eq!(n.tokens, vec!["قد", "يقال", "لبنان", "؟"]);
        assert_eq!(&raw[n.token_spans[0].clone()], "قد");
        assert_eq!(&raw[n.token_spans[1].clone()], "يُقال");
        assert_eq!(&raw[n.token_spans[2].clone()], "لبنـان");
        assert_eq!(&raw[n.token_spans[3].clone()], "؟");
    }

    #[test]
    fn link_detection() {
        assert!(contains_url("انظر https://t.co/x"));
        assert!(contains_url("see http://a.b"));
        assert!(contains_url("t.co/abc"));
        assert!(!contains_url("no link here"));
        assert!(!contains_url("format.co/x"));
    }

    fn arabicish() -> impl Strategy<Value = String> {
        let pieces = prop::collection::vec(
            prop::sample::select(vec![
                "من", "هل", "لبنان", "بيروت", "إشاعة", "أ", "ى", "ـ", "ً", "ُ", "؟", "?", " ", "،", ".",
                "https://t.co/x?y", "\u{0627}\u{0653}", "e\u{0301}", "😀", "123", "A", "\u{1100}\u{1161}",
            ]),
            0..24,
        );
        pieces.prop_map(|p| p.concat())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(text in arabicish()) {
            let first = normalize(&text);
            let second = normalize(&first.detokenize());
            prop_assert_eq!(&first.tokens, &second.tokens);
        }

        #[test]
        fn tokens_nonempty_and_spans_increasing(text in arabicish()) {
            let n = normalize(&text);
            prop_assert_eq!(n.tokens.len(), n.token_spans.len());
            for t in &n.tokens {
                prop_assert!(!t.is_empty());
                if t.contains('؟') || t.contains('?') {
                    prop_assert!(is_question_mark(t));
                }
            }
            for w in n.token_spans.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            for s in &n.token_spans {
                prop_assert!(s.start < s.end && s.end <= text.len());
            }
        }

        #[test]
        fn segment_composition_matches_whole_string_nfc(text in any::<String>()) {
            let ours: String = compose_segments(&text).into_iter().map(|(c, _)| c).collect();
            let whole: String = text.nfc().collect();
            prop_assert_eq!(ours, whole);
        }
    }
}
