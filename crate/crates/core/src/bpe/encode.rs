//! Applying a merge model to words and lines, and the marker-serialized
//! token stream.

use std::collections::HashMap;

use log::{debug, warn};

use super::model::{MarkerConfig, MergeModel};
use crate::error::{Error, Result};
use crate::pretokenize::{PretokTrace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Final,
    BpeContinuation,
    SegmentContinuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub boundary: Boundary,
}

impl Token {
    pub fn new(text: impl Into<String>, boundary: Boundary) -> Self {
        Self {
            text: text.into(),
            boundary,
        }
    }

    pub fn serialize(&self, markers: &MarkerConfig) -> String {
        match self.boundary {
            Boundary::Final => self.text.clone(),
            Boundary::BpeContinuation => format!("{}{}", self.text, markers.bpe),
            Boundary::SegmentContinuation => format!("{}{}", self.text, markers.segment),
        }
    }

    /// Reads one whitespace-free stream token back.
    pub fn parse(raw: &str, markers: &MarkerConfig) -> Result<Self> {
        // Longest marker first so a suffix of one marker never shadows the other.
        let mut candidates = [
            (markers.bpe.as_str(), Boundary::BpeContinuation),
            (markers.segment.as_str(), Boundary::SegmentContinuation),
        ];
        candidates.sort_by_key(|(m, _)| std::cmp::Reverse(m.len()));
        let (text, boundary) = candidates
            .iter()
            .find_map(|(m, b)| raw.strip_suffix(m).map(|t| (t, *b)))
            .unwrap_or((raw, Boundary::Final));
        if text.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "stream token {raw:?} has no text"
            )));
        }
        Ok(Self::new(text, boundary))
    }
}

/// Tokens of one input word; exactly the last token is not a BPE continuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedWord {
    pub tokens: Vec<Token>,
    /// Initial units that were never seen in training.
    pub unknown_units: usize,
}

impl TokenizedWord {
    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn concat(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Space-separated serialization with trailing markers.
    pub fn serialize(&self, markers: &MarkerConfig) -> String {
        self.tokens
            .iter()
            .map(|t| t.serialize(markers))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Marker-annotated form with no spaces, as shown in annotation sheets.
    /// Segment boundaries render as the BPE marker followed by the segment
    /// marker.
    pub fn compact(&self, markers: &MarkerConfig) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&t.text);
            match t.boundary {
                Boundary::Final => {}
                Boundary::BpeContinuation => out.push_str(&markers.bpe),
                Boundary::SegmentContinuation => {
                    out.push_str(&markers.bpe);
                    out.push_str(&markers.segment);
                }
            }
        }
        out
    }

    fn set_last_boundary(&mut self, boundary: Boundary) {
        if let Some(last) = self.tokens.last_mut() {
            last.boundary = boundary;
        }
    }
}

impl MergeModel {
    /// Splits `word` into initial units, then applies merges in rank order.
    pub fn encode_word(&self, word: &str) -> Result<TokenizedWord> {
        self.markers().check(word)?;
        let seq = self.initial_units(word)?;
        let ids: Vec<Option<usize>> = seq
            .units
            .iter()
            .map(|u| self.vocab().get_index_of(u.as_str()))
            .collect();
        let unknown_units = ids.iter().filter(|i| i.is_none()).count();
        if unknown_units > 0 {
            debug!("{unknown_units} unseen unit(s) in {word:?}");
        }

        let mut pieces: Vec<(String, Option<usize>)> = seq.units.into_iter().zip(ids).collect();
        loop {
            let best = pieces
                .windows(2)
                .filter_map(|w| match (w[0].1, w[1].1) {
                    (Some(l), Some(r)) => self.merge_index.get(&(l, r)).map(|&(rank, m)| (rank, l, r, m)),
                    _ => None,
                })
                .min_by_key(|&(rank, ..)| rank);
            let Some((_, left, right, merged)) = best else {
                break;
            };
            let mut out = Vec::with_capacity(pieces.len());
            let mut iter = pieces.into_iter().peekable();
            while let Some(cur) = iter.next() {
                if cur.1 == Some(left) && iter.peek().is_some_and(|n| n.1 == Some(right)) {
                    let next = iter.next().expect("peeked");
                    out.push((cur.0 + &next.0, Some(merged)));
                } else {
                    out.push(cur);
                }
            }
            pieces = out;
        }

        let last = pieces.len() - 1;
        let tokens = pieces
            .into_iter()
            .enumerate()
            .map(|(i, (text, _))| {
                let boundary = if i == last {
                    Boundary::Final
                } else {
                    Boundary::BpeContinuation
                };
                Token { text, boundary }
            })
            .collect();
        Ok(TokenizedWord {
            tokens,
            unknown_units,
        })
    }

    /// Encodes every whitespace-delimited word of `line`.
    ///
    /// `trace` holds the pre-tokenization records of this line. A rewritten
    /// word that is segment `j` of `n` (`j < n`) ends in a segment
    /// continuation instead of a final boundary.
    pub fn encode_line(&self, line: &str, trace: Option<&[TraceRecord]>) -> Result<Vec<TokenizedWord>> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let mut out = Vec::with_capacity(words.len());
        let plan = segment_plan(words.len(), trace.unwrap_or(&[]))?;
        for (word, continues) in words.into_iter().zip(plan) {
            let mut tw = self.encode_word(word)?;
            if continues {
                tw.set_last_boundary(Boundary::SegmentContinuation);
            }
            out.push(tw);
        }
        Ok(out)
    }
}

/// For each rewritten word, whether another segment of the same surface word
/// follows it.
fn segment_plan(rewritten_words: usize, records: &[TraceRecord]) -> Result<Vec<bool>> {
    let by_index: HashMap<usize, &TraceRecord> = records.iter().map(|r| (r.word_index, r)).collect();
    let mut plan = Vec::with_capacity(rewritten_words);
    let mut original = 0;
    while plan.len() < rewritten_words {
        match by_index.get(&original) {
            Some(rec) => {
                let n = rec.segments.len();
                for j in 0..n {
                    plan.push(j + 1 < n);
                }
            }
            None => plan.push(false),
        }
        original += 1;
    }
    if plan.len() != rewritten_words {
        return Err(Error::TraceMismatch {
            line: records.first().map_or(0, |r| r.line_index),
            word: original - 1,
            reason: "trace segments run past the end of the line".into(),
        });
    }
    Ok(plan)
}

pub fn serialize_line(words: &[TokenizedWord], markers: &MarkerConfig) -> String {
    words
        .iter()
        .map(|w| w.serialize(markers))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses one serialized line. A line may not end in a continuation.
pub fn parse_stream_line(line: &str, line_index: usize, markers: &MarkerConfig) -> Result<Vec<Token>> {
    let tokens = line
        .split_whitespace()
        .map(|raw| Token::parse(raw, markers))
        .collect::<Result<Vec<_>>>()?;
    match tokens.last() {
        Some(t) if t.boundary != Boundary::Final => {
            Err(Error::DanglingContinuation { line: line_index })
        }
        _ => Ok(tokens),
    }
}

/// One surface word recovered from a stream: its segments, each the
/// concatenation of the tokens joined by BPE continuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamWord {
    pub segments: Vec<String>,
    /// Tokens per segment.
    pub token_counts: Vec<usize>,
}

/// Groups parsed tokens into surface words.
pub fn group_words(tokens: &[Token]) -> Vec<StreamWord> {
    let mut words = Vec::new();
    let mut current = StreamWord {
        segments: Vec::new(),
        token_counts: Vec::new(),
    };
    let mut segment = String::new();
    let mut count = 0;
    for t in tokens {
        segment.push_str(&t.text);
        count += 1;
        if t.boundary == Boundary::BpeContinuation {
            continue;
        }
        current.segments.push(std::mem::take(&mut segment));
        current.token_counts.push(count);
        count = 0;
        if t.boundary == Boundary::Final {
            words.push(std::mem::replace(
                &mut current,
                StreamWord {
                    segments: Vec::new(),
                    token_counts: Vec::new(),
                },
            ));
        }
    }
    words
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedLine {
    pub text: String,
    /// Multi-segment words joined by plain concatenation for lack of a trace.
    pub untraced_joins: usize,
}

/// Inverts the serialized stream of one line.
///
/// BPE continuations join without a space. Segment continuations join to
/// the original surface word when `trace` holds a record for that word
/// position, and by plain concatenation otherwise.
pub fn decode_line(
    line: &str,
    line_index: usize,
    markers: &MarkerConfig,
    trace: Option<&[TraceRecord]>,
) -> Result<DecodedLine> {
    let tokens = parse_stream_line(line, line_index, markers)?;
    let records: HashMap<usize, &TraceRecord> = trace
        .unwrap_or(&[])
        .iter()
        .map(|r| (r.word_index, r))
        .collect();
    let mut out = Vec::new();
    let mut untraced_joins = 0;
    for (index, word) in group_words(&tokens).into_iter().enumerate() {
        match records.get(&index) {
            Some(rec) => {
                if rec.segments != word.segments {
                    return Err(Error::TraceMismatch {
                        line: line_index,
                        word: index,
                        reason: format!(
                            "stream has segments {:?}, trace has {:?}",
                            word.segments, rec.segments
                        ),
                    });
                }
                out.push(rec.original.clone());
            }
            None => {
                if word.segments.len() > 1 {
                    untraced_joins += 1;
                    warn!(
                        "line {line_index}: joining segments {:?} without a trace",
                        word.segments
                    );
                }
                out.push(word.segments.concat());
            }
        }
    }
    Ok(DecodedLine {
        text: out.join(" "),
        untraced_joins,
    })
}

/// Decodes a multi-line stream, consulting `trace` by line index.
pub fn decode<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    markers: &MarkerConfig,
    trace: Option<&PretokTrace>,
) -> Result<Vec<DecodedLine>> {
    lines
        .into_iter()
        .enumerate()
        .map(|(i, line)| decode_line(line, i, markers, trace.map(|t| t.line(i))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::{train, Algorithm};
    use crate::script::ScriptProfile;

    fn rec(line: usize, word: usize, original: &str, segs: &[&str]) -> TraceRecord {
        TraceRecord {
            line_index: line,
            word_index: word,
            original: original.to_string(),
            segments: segs.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn identity() -> MergeModel {
        let none: [(&str, &str); 0] = [];
        MergeModel::from_pairs(Algorithm::Bpe, none, None, MarkerConfig::default()).unwrap()
    }

    #[test]
    fn encode_aba_after_single_merge() {
        let m = train([("abab", 3)], 1, Algorithm::Bpe, None).unwrap().model;
        let tw = m.encode_word("aba").unwrap();
        assert_eq!(
            tw.tokens,
            [
                Token::new("ab", Boundary::BpeContinuation),
                Token::new("a", Boundary::Final)
            ]
        );
        assert_eq!(tw.unknown_units, 0);
    }

    #[test]
    fn whole_word_in_vocab_is_one_token() {
        let m = train([("abab", 3)], 3, Algorithm::Bpe, None).unwrap().model;
        let tw = m.encode_word("abab").unwrap();
        assert_eq!(tw.texts(), ["abab"]);
        assert_eq!(tw.tokens[0].boundary, Boundary::Final);
    }

    #[test]
    fn unknown_units_pass_through() {
        let m = train([("ab", 3)], 1, Algorithm::Bpe, None).unwrap().model;
        let tw = m.encode_word("abz").unwrap();
        assert_eq!(tw.texts(), ["ab", "z"]);
        assert_eq!(tw.unknown_units, 1);
    }

    #[test]
    fn encode_errors() {
        let m = identity();
        assert!(matches!(m.encode_word(""), Err(Error::EmptyWord)));
        assert!(matches!(
            m.encode_word("a**b"),
            Err(Error::MarkerCollision { .. })
        ));
    }

    #[test]
    fn identity_model_line() {
        let words = identity().encode_line("क ख", None).unwrap();
        assert_eq!(words.len(), 2);
        assert!(words.iter().all(|w| w.len() == 1));
        assert_eq!(serialize_line(&words, &MarkerConfig::default()), "क ख");
    }

    #[test]
    fn traced_segments_get_segment_marker() {
        let m = MergeModel::from_pairs(
            Algorithm::Bpe,
            [("उ", "प"), ("उप", "ज"), ("त", "ा")],
            None,
            MarkerConfig::default(),
        )
        .unwrap();
        let trace = [rec(0, 0, "उपजता", &["उपज", "ता"])];
        let words = m.encode_line("उपज ता है", Some(&trace)).unwrap();
        let s = serialize_line(&words, m.markers());
        assert_eq!(s, "उपज** ता ह@@ ै");
    }

    #[test]
    fn bpe_split_inside_segment() {
        let m = MergeModel::from_pairs(
            Algorithm::Bpe,
            [("क", "ल"), ("कल", "्")],
            None,
            MarkerConfig::default(),
        )
        .unwrap();
        let trace = [rec(0, 0, "कल्पा", &["कल्प", "ा"])];
        let words = m.encode_line("कल्प ा", Some(&trace)).unwrap();
        assert_eq!(serialize_line(&words, m.markers()), "कल्@@ प** ा");

        let decoded = decode_line("कल्@@ प** ा", 0, m.markers(), Some(&trace)).unwrap();
        assert_eq!(decoded.text, "कल्पा");
        assert_eq!(decoded.untraced_joins, 0);
    }

    #[test]
    fn untraced_join_is_lossy_concat() {
        let d = decode_line("गोल** अर्ध", 0, &MarkerConfig::default(), None).unwrap();
        assert_eq!(d.text, "गोलअर्ध");
        assert_eq!(d.untraced_joins, 1);
    }

    #[test]
    fn markerless_stream_is_unchanged() {
        let d = decode_line("क ख ग", 0, &MarkerConfig::default(), None).unwrap();
        assert_eq!(d.text, "क ख ग");
    }

    #[test]
    fn dangling_continuation() {
        for s in ["क@@", "क ख**"] {
            assert!(matches!(
                decode_line(s, 3, &MarkerConfig::default(), None),
                Err(Error::DanglingContinuation { line: 3 })
            ));
        }
    }

    #[test]
    fn lossy_trace_restores_original() {
        let trace = [rec(0, 1, "विद्यालय", &["विद्या", "आलय"])];
        let d = decode_line("यह विद्या** आलय है", 0, &MarkerConfig::default(), Some(&trace))
            .unwrap();
        assert_eq!(d.text, "यह विद्यालय है");
    }

    #[test]
    fn trace_mismatch_is_an_error() {
        let trace = [rec(0, 0, "विद्यालय", &["विद्या", "आलय"])];
        assert!(matches!(
            decode_line("विद्या", 0, &MarkerConfig::default(), Some(&trace)),
            Err(Error::TraceMismatch { .. })
        ));
    }

    #[test]
    fn tokens_ending_in_marker_characters() {
        let markers = MarkerConfig::default();
        for (text, b) in [("a@", Boundary::BpeContinuation), ("*", Boundary::SegmentContinuation), ("@", Boundary::Final)] {
            let t = Token::new(text, b);
            assert_eq!(Token::parse(&t.serialize(&markers), &markers).unwrap(), t);
        }
    }

    #[test]
    fn cbpe_never_emits_leading_sign_tokens() {
        let p = ScriptProfile::devanagari();
        let m = train([("कार्यालय", 4), ("पढ़ाई", 2)], 5, Algorithm::Cbpe, Some(&p))
            .unwrap()
            .model;
        for w in ["कार्यालय", "काम", "पढ़ाई", "रिश्ता"] {
            let tw = m.encode_word(w).unwrap();
            for t in &tw.tokens {
                assert!(!p.attaches(t.text.chars().next().unwrap()), "{w}: {t:?}");
            }
        }
    }

    #[test]
    fn compact_rendering() {
        let tw = TokenizedWord {
            tokens: vec![
                Token::new("अंतर", Boundary::SegmentContinuation),
                Token::new("ा", Boundary::Final),
            ],
            unknown_units: 0,
        };
        assert_eq!(tw.compact(&MarkerConfig::default()), "अंतर@@**ा");
    }
}
