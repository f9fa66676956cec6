//! Intrinsic tokenizer metrics: fertility, Rényi efficiency, dependent-vowel
//! audits and segment counts by word length.
//!
//! Every accumulator here is a fold whose partial results combine with
//! `merge`, so sharded runs give the same answer as a single pass.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::info;
use num_rational::Ratio;

use crate::bpe::{Boundary, MergeModel, Token, TokenizedWord};
use crate::error::{Error, Result};
use crate::script::ScriptProfile;

pub const DEFAULT_RENYI_ALPHA: f64 = 2.5;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStats {
    pub word_count: u64,
    pub token_count: u64,
    pub frequencies: BTreeMap<String, u64>,
}

impl TokenStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds tokens in stream order. A surface word ends at each token with a
    /// final boundary, so segments of one pre-tokenized word count once.
    pub fn add_tokens<'a>(&mut self, tokens: impl IntoIterator<Item = &'a Token>) {
        for t in tokens {
            self.token_count += 1;
            if t.boundary == Boundary::Final {
                self.word_count += 1;
            }
            match self.frequencies.get_mut(&t.text) {
                Some(c) => *c += 1,
                None => {
                    self.frequencies.insert(t.text.clone(), 1);
                }
            }
        }
    }

    pub fn add_word(&mut self, word: &TokenizedWord) {
        self.add_tokens(&word.tokens);
    }

    pub fn merge(&mut self, other: &TokenStats) {
        self.word_count += other.word_count;
        self.token_count += other.token_count;
        for (tok, c) in &other.frequencies {
            *self.frequencies.entry(tok.clone()).or_default() += c;
        }
    }

    pub fn fertility(&self) -> Result<Fertility> {
        if self.word_count == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(Fertility {
            tokens: self.token_count,
            words: self.word_count,
        })
    }
}

/// Tokens per surface word, kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fertility {
    pub tokens: u64,
    pub words: u64,
}

impl Fertility {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.tokens, self.words)
    }

    pub fn value(&self) -> f64 {
        self.tokens as f64 / self.words as f64
    }
}

impl fmt::Display for Fertility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.value())
    }
}

pub fn fertility<'a>(words: impl IntoIterator<Item = &'a TokenizedWord>) -> Result<Fertility> {
    let mut stats = TokenStats::new();
    for w in words {
        stats.add_word(w);
    }
    stats.fertility()
}

/// Order-`alpha` Rényi entropy of the token unigram distribution divided by
/// `ln(vocab_size)`. `alpha == 1` uses Shannon entropy.
pub fn renyi_efficiency(
    counts: impl IntoIterator<Item = u64>,
    alpha: f64,
    vocab_size: usize,
) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 || alpha.is_infinite() {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if vocab_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "vocabulary size must be at least 2, got {vocab_size}"
        )));
    }
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if counts.len() > vocab_size {
        return Err(Error::InvalidArgument(format!(
            "{} distinct tokens observed but vocabulary size is {vocab_size}",
            counts.len()
        )));
    }
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let probs = counts.iter().map(|&c| c as f64 / total);
    let entropy = if alpha == 1.0 {
        -probs.map(|p| p * p.ln()).sum::<f64>()
    } else {
        probs.map(|p| p.powf(alpha)).sum::<f64>().ln() / (1.0 - alpha)
    };
    Ok((entropy / (vocab_size as f64).ln()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuditMode {
    /// The token is exactly one dependent vowel.
    Strict,
    /// The token starts with a dependent vowel.
    Prefix,
}

impl AuditMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditMode::Strict => "strict",
            AuditMode::Prefix => "prefix",
        }
    }

    pub fn flags(self, text: &str, profile: &ScriptProfile) -> bool {
        let mut chars = text.chars();
        match chars.next() {
            Some(c) if profile.is_dependent_vowel(c) => match self {
                AuditMode::Strict => chars.next().is_none(),
                AuditMode::Prefix => true,
            },
            _ => false,
        }
    }
}

impl fmt::Display for AuditMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuditMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(AuditMode::Strict),
            "prefix" => Ok(AuditMode::Prefix),
            other => Err(Error::InvalidArgument(format!("unknown audit mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditReport {
    pub mode: AuditMode,
    pub total: u64,
    pub flagged: u64,
    /// Flagged tokens that open their input word or segment: the encoder was
    /// handed text starting with a sign, so no initialization could avoid them.
    pub noise: u64,
}

impl AuditReport {
    pub fn new(mode: AuditMode) -> Self {
        Self {
            mode,
            total: 0,
            flagged: 0,
            noise: 0,
        }
    }

    pub fn percentage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.flagged as f64 / self.total as f64
        }
    }

    pub fn merge(&mut self, other: &AuditReport) {
        debug_assert_eq!(self.mode, other.mode);
        self.total += other.total;
        self.flagged += other.flagged;
        self.noise += other.noise;
    }
}

/// Counts merges whose right operand is (strict) or starts with (prefix) a
/// dependent vowel.
pub fn audit_obvious_merges(model: &MergeModel, profile: &ScriptProfile, mode: AuditMode) -> AuditReport {
    let mut report = AuditReport::new(mode);
    for m in model.merges() {
        report.total += 1;
        if mode.flags(&m.right, profile) {
            report.flagged += 1;
        }
    }
    report
}

/// Dependent-vowel token counting over a token stream.
#[derive(Debug, Clone)]
pub struct DvTokenAudit<'p> {
    profile: &'p ScriptProfile,
    report: AuditReport,
    at_piece_start: bool,
}

impl<'p> DvTokenAudit<'p> {
    pub fn new(profile: &'p ScriptProfile, mode: AuditMode) -> Self {
        Self {
            profile,
            report: AuditReport::new(mode),
            at_piece_start: true,
        }
    }

    pub fn add_tokens<'a>(&mut self, tokens: impl IntoIterator<Item = &'a Token>) {
        for t in tokens {
            self.report.total += 1;
            if self.report.mode.flags(&t.text, self.profile) {
                if self.at_piece_start {
                    self.report.noise += 1;
                } else {
                    self.report.flagged += 1;
                }
            }
            self.at_piece_start = t.boundary != Boundary::BpeContinuation;
        }
    }

    pub fn report(&self) -> AuditReport {
        self.report
    }
}

pub fn audit_dv_tokens<'a>(
    tokens: impl IntoIterator<Item = &'a Token>,
    profile: &ScriptProfile,
    mode: AuditMode,
) -> AuditReport {
    let mut audit = DvTokenAudit::new(profile, mode);
    audit.add_tokens(tokens);
    audit.report()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegSizeRow {
    /// Word length in codepoints.
    pub length: usize,
    pub words: usize,
    pub mean_a: f64,
    pub mean_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegSizeTable {
    pub rows: Vec<SegSizeRow>,
    /// Words both models split into the same number of tokens.
    pub excluded: usize,
    pub segments_a: u64,
    pub segments_b: u64,
}

impl SegSizeTable {
    pub fn compared(&self) -> usize {
        self.rows.iter().map(|r| r.words).sum()
    }

    /// Mean tokens per compared word for each model.
    pub fn overall(&self) -> Option<(f64, f64)> {
        let n = self.compared();
        (n > 0).then(|| (self.segments_a as f64 / n as f64, self.segments_b as f64 / n as f64))
    }
}

/// Mean token counts per word length, over words the two models split into
/// different numbers of tokens.
pub fn segment_size_by_length<S: AsRef<str>>(
    words: &[S],
    model_a: &MergeModel,
    model_b: &MergeModel,
) -> Result<SegSizeTable> {
    let mut buckets: BTreeMap<usize, (usize, u64, u64)> = BTreeMap::new();
    let mut excluded = 0;
    let (mut segments_a, mut segments_b) = (0, 0);
    for w in words {
        let w = w.as_ref();
        let a = model_a.encode_word(w)?.len() as u64;
        let b = model_b.encode_word(w)?.len() as u64;
        if a == b {
            excluded += 1;
            continue;
        }
        let bucket = buckets.entry(w.chars().count()).or_default();
        bucket.0 += 1;
        bucket.1 += a;
        bucket.2 += b;
        segments_a += a;
        segments_b += b;
    }
    if buckets.is_empty() {
        info!("segment sizes: all {excluded} words split identically; table is empty");
    }
    let rows = buckets
        .into_iter()
        .map(|(length, (n, a, b))| SegSizeRow {
            length,
            words: n,
            mean_a: a as f64 / n as f64,
            mean_b: b as f64 / n as f64,
        })
        .collect();
    Ok(SegSizeTable {
        rows,
        excluded,
        segments_a,
        segments_b,
    })
}

/// One machine-readable result line: `metric<TAB>config<TAB>value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub metric: String,
    pub config: String,
    pub value: String,
}

impl Record {
    pub fn new(metric: impl Into<String>, config: impl Into<String>, value: impl ToString) -> Self {
        Self {
            metric: metric.into(),
            config: config.into(),
            value: value.to_string(),
        }
    }

    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}", self.metric, self.config, self.value)
    }
}
