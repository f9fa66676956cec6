//! Lookup-driven pre-tokenization.
//!
//! A [`LookupTable`] maps surface words to morphological segments. Rewriting
//! a corpus replaces every whole-word occurrence of a table word with its
//! segments and records a [`TraceRecord`], because sandhi splits need not
//! concatenate back to the word (विद्यालय → विद्या + आलय).
//!
//! Segmentations produced by an external segmenter are imported through the
//! same TSV shape and then passed through [`filter_segmentations`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use log::warn;

use crate::bpe::MarkerConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Human,
    Model,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupEntry {
    pub word: String,
    pub segments: Vec<String>,
    pub lossless: bool,
}

impl LookupEntry {
    pub fn new(word: impl Into<String>, segments: Vec<String>) -> Self {
        let word = word.into();
        let lossless = segments.concat() == word;
        Self {
            word,
            segments,
            lossless,
        }
    }

    /// A single segment identical to the word: keep the word whole.
    pub fn is_no_split(&self) -> bool {
        self.segments.len() == 1 && self.segments[0] == self.word
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    entries: BTreeMap<String, LookupEntry>,
    pub language: String,
    pub source: Source,
}

impl LookupTable {
    pub fn new(language: impl Into<String>, source: Source) -> Self {
        Self {
            entries: BTreeMap::new(),
            language: language.into(),
            source,
        }
    }

    /// Inserts an entry, returning the one it replaced.
    pub fn insert(&mut self, entry: LookupEntry) -> Option<LookupEntry> {
        self.entries.insert(entry.word.clone(), entry)
    }

    pub fn get(&self, word: &str) -> Option<&LookupEntry> {
        self.entries.get(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LookupEntry> {
        self.entries.values()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.entries() {
            out.push_str(&e.word);
            for s in &e.segments {
                out.push('\t');
                out.push_str(s);
            }
            out.push('\n');
        }
        out
    }
}

struct RawRow {
    line: usize,
    word: String,
    cells: Vec<String>,
}

fn raw_rows(text: &str, path: &Path) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cells: Vec<String> = line.split('\t').map(str::to_string).collect();
        let word = cells.remove(0);
        if word.is_empty() {
            return Err(Error::parse(path, lineno, "empty word column"));
        }
        while cells.last().is_some_and(|c| c.is_empty()) {
            cells.pop();
        }
        if cells.is_empty() {
            return Err(Error::parse(path, lineno, format!("{word:?} has no segments")));
        }
        rows.push(RawRow {
            line: lineno,
            word,
            cells,
        });
    }
    Ok(rows)
}

fn insert_reporting_duplicates(table: &mut LookupTable, entry: LookupEntry, line: usize) {
    if table.insert(entry.clone()).is_some() {
        warn!("line {line}: duplicate lookup word {:?}; keeping the later row", entry.word);
    }
}

/// Parses a curated lookup table: `word<TAB>seg1[<TAB>seg2]...`.
pub fn parse_lookup(text: &str, path: &Path, markers: &MarkerConfig) -> Result<LookupTable> {
    let mut table = LookupTable::new("und", Source::Human);
    for row in raw_rows(text, path)? {
        if row.word.chars().any(char::is_whitespace) {
            return Err(Error::parse(path, row.line, "word contains whitespace"));
        }
        for cell in std::iter::once(&row.word).chain(&row.cells) {
            if let Some(m) = markers.collision(cell) {
                return Err(Error::parse(
                    path,
                    row.line,
                    format!("{cell:?} contains reserved marker {m:?}"),
                ));
            }
        }
        if row.cells.iter().any(String::is_empty) {
            return Err(Error::parse(path, row.line, "empty segment between filled cells"));
        }
        if row.cells.iter().any(|c| c.chars().any(char::is_whitespace)) {
            return Err(Error::parse(path, row.line, "segment contains whitespace"));
        }
        insert_reporting_duplicates(&mut table, LookupEntry::new(row.word, row.cells), row.line);
    }
    Ok(table)
}

pub fn load_lookup(path: impl AsRef<Path>, markers: &MarkerConfig) -> Result<LookupTable> {
    let path = path.as_ref();
    parse_lookup(&fs::read_to_string(path)?, path, markers)
}

/// Why a segmentation was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectRule {
    EmptySegment,
    MarkerCollision,
    Whitespace,
    TooManySegments,
    ShortSegment,
    Lossy,
}

impl RejectRule {
    pub fn id(self) -> &'static str {
        match self {
            RejectRule::EmptySegment => "empty_segment",
            RejectRule::MarkerCollision => "marker_collision",
            RejectRule::Whitespace => "whitespace",
            RejectRule::TooManySegments => "too_many_segments",
            RejectRule::ShortSegment => "short_segment",
            RejectRule::Lossy => "lossy",
        }
    }
}

impl fmt::Display for RejectRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub word: String,
    pub rule: RejectRule,
}

pub fn rejections_to_tsv(rejections: &[Rejection]) -> String {
    rejections
        .iter()
        .map(|r| format!("{}\t{}\n", r.word, r.rule))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterPolicy {
    pub min_segment_codepoints: usize,
    pub require_lossless: bool,
    pub max_segments: usize,
    pub reject_marker_collisions: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            min_segment_codepoints: 1,
            require_lossless: false,
            max_segments: 4,
            reject_marker_collisions: true,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_segment_codepoints == 0 || self.max_segments == 0 {
            return Err(Error::InvalidArgument(
                "filter bounds must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The first rule `entry` violates.
    pub fn violation(&self, entry: &LookupEntry, markers: &MarkerConfig) -> Option<RejectRule> {
        let segs = &entry.segments;
        if self.reject_marker_collisions
            && std::iter::once(&entry.word)
                .chain(segs)
                .any(|s| markers.collision(s).is_some())
        {
            return Some(RejectRule::MarkerCollision);
        }
        if entry.is_no_split() {
            return None;
        }
        if segs.is_empty() || segs.iter().any(String::is_empty) {
            return Some(RejectRule::EmptySegment);
        }
        if segs.iter().any(|s| s.chars().any(char::is_whitespace)) {
            return Some(RejectRule::Whitespace);
        }
        if segs.len() > self.max_segments {
            return Some(RejectRule::TooManySegments);
        }
        if segs
            .iter()
            .any(|s| s.chars().count() < self.min_segment_codepoints)
        {
            return Some(RejectRule::ShortSegment);
        }
        if self.require_lossless && !entry.lossless {
            return Some(RejectRule::Lossy);
        }
        None
    }
}

/// Drops entries that violate `policy`; never fails, only reports.
pub fn filter_segmentations(
    table: &LookupTable,
    policy: &FilterPolicy,
    markers: &MarkerConfig,
) -> (LookupTable, Vec<Rejection>) {
    let mut kept = LookupTable::new(table.language.clone(), table.source);
    let mut rejected = Vec::new();
    for entry in table.entries() {
        match policy.violation(entry, markers) {
            Some(rule) => rejected.push(Rejection {
                word: entry.word.clone(),
                rule,
            }),
            None => {
                kept.insert(entry.clone());
            }
        }
    }
    (kept, rejected)
}

/// Parses segmenter output leniently: cell problems become filter
/// rejections rather than parse errors.
pub fn parse_external_segmentations(
    text: &str,
    path: &Path,
    policy: &FilterPolicy,
    markers: &MarkerConfig,
) -> Result<(LookupTable, Vec<Rejection>)> {
    policy.validate()?;
    let mut raw = LookupTable::new("und", Source::Model);
    let mut rejected = Vec::new();
    for row in raw_rows(text, path)? {
        if row.word.chars().any(char::is_whitespace) {
            rejected.push(Rejection {
                word: row.word,
                rule: RejectRule::Whitespace,
            });
            continue;
        }
        insert_reporting_duplicates(&mut raw, LookupEntry::new(row.word, row.cells), row.line);
    }
    let (kept, more) = filter_segmentations(&raw, policy, markers);
    rejected.extend(more);
    Ok((kept, rejected))
}

pub fn import_external_segmentations(
    path: impl AsRef<Path>,
    policy: &FilterPolicy,
    markers: &MarkerConfig,
) -> Result<(LookupTable, Vec<Rejection>)> {
    let path = path.as_ref();
    parse_external_segmentations(&fs::read_to_string(path)?, path, policy, markers)
}

/// Whitespace-delimited word types with their frequencies.
pub fn extract_unique_words<I, S>(lines: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = BTreeMap::new();
    for line in lines {
        add_word_counts(&mut counts, line.as_ref());
    }
    counts
}

pub fn add_word_counts(counts: &mut BTreeMap<String, u64>, line: &str) {
    for w in line.split_whitespace() {
        match counts.get_mut(w) {
            Some(c) => *c += 1,
            None => {
                counts.insert(w.to_string(), 1);
            }
        }
    }
}

/// One replaced word occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub line_index: usize,
    /// Position of the word among the original line's words.
    pub word_index: usize,
    pub original: String,
    pub segments: Vec<String>,
}

/// Replacement records ordered by `(line_index, word_index)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PretokTrace {
    records: Vec<TraceRecord>,
}

impl PretokTrace {
    pub fn new(mut records: Vec<TraceRecord>) -> Self {
        records.sort_by_key(|r| (r.line_index, r.word_index));
        Self { records }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one line.
    pub fn line(&self, line_index: usize) -> &[TraceRecord] {
        let start = self.records.partition_point(|r| r.line_index < line_index);
        let end = self.records.partition_point(|r| r.line_index <= line_index);
        &self.records[start..end]
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = TraceRecord>) {
        self.records.extend(records);
        self.records.sort_by_key(|r| (r.line_index, r.word_index));
    }

    /// `line_index<TAB>word_index<TAB>original<TAB>seg1 seg2 ...`
    pub fn to_tsv(&self) -> String {
        self.records.iter().map(trace_record_line).collect()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [li, wi, original, segs] = fields.as_slice() else {
                return Err(Error::parse(path, idx + 1, "expected 4 tab-separated fields"));
            };
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(path, idx + 1, format!("bad index {s:?}")))
            };
            let segments: Vec<String> = segs.split(' ').map(str::to_string).collect();
            if original.is_empty() || segments.iter().any(String::is_empty) {
                return Err(Error::parse(path, idx + 1, "empty word or segment"));
            }
            records.push(TraceRecord {
                line_index: num(li)?,
                word_index: num(wi)?,
                original: original.to_string(),
                segments,
            });
        }
        Ok(Self::new(records))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path)
    }
}

pub fn trace_record_line(r: &TraceRecord) -> String {
    format!(
        "{}\t{}\t{}\t{}\n",
        r.line_index,
        r.word_index,
        r.original,
        r.segments.join(" ")
    )
}

/// Byte spans of the whitespace-delimited words of `line`.
fn word_spans(line: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, line.len()));
    }
    spans
}

/// Replaces each table word in `line` by its space-joined segments, keeping
/// all other bytes of the line intact.
pub fn rewrite_line(line: &str, line_index: usize, table: &LookupTable) -> (String, Vec<TraceRecord>) {
    let mut out = String::with_capacity(line.len() + 8);
    let mut records = Vec::new();
    let mut cursor = 0;
    for (word_index, (start, end)) in word_spans(line).into_iter().enumerate() {
        let word = &line[start..end];
        if let Some(entry) = table.get(word) {
            out.push_str(&line[cursor..start]);
            out.push_str(&entry.segments.join(" "));
            cursor = end;
            records.push(TraceRecord {
                line_index,
                word_index,
                original: word.to_string(),
                segments: entry.segments.clone(),
            });
        }
    }
    out.push_str(&line[cursor..]);
    (out, records)
}

/// Inverse of [`rewrite_line`].
pub fn restore_line(line: &str, records: &[TraceRecord]) -> Result<String> {
    let spans = word_spans(line);
    let mut out = String::with_capacity(line.len());
    let mut cursor = 0;
    let mut pos = 0;
    let mut original_index = 0;
    let mut pending = records.iter().peekable();
    while pos < spans.len() {
        match pending.next_if(|r| r.word_index == original_index) {
            Some(rec) => {
                let n = rec.segments.len();
                let mismatch = |reason: String| Error::TraceMismatch {
                    line: rec.line_index,
                    word: rec.word_index,
                    reason,
                };
                if pos + n > spans.len() {
                    return Err(mismatch("line ends inside a traced word".into()));
                }
                let found: Vec<&str> = spans[pos..pos + n].iter().map(|&(s, e)| &line[s..e]).collect();
                if found != rec.segments {
                    return Err(mismatch(format!("expected {:?}, found {found:?}", rec.segments)));
                }
                out.push_str(&line[cursor..spans[pos].0]);
                out.push_str(&rec.original);
                cursor = spans[pos + n - 1].1;
                pos += n;
            }
            None => pos += 1,
        }
        original_index += 1;
    }
    if let Some(rec) = pending.next() {
        return Err(Error::TraceMismatch {
            line: rec.line_index,
            word: rec.word_index,
            reason: "trace refers past the end of the line".into(),
        });
    }
    out.push_str(&line[cursor..]);
    Ok(out)
}

/// Rewrites every line; the trace is ordered by `(line, word)`.
pub fn pretokenize_corpus<I, S>(lines: I, table: &LookupTable) -> (Vec<String>, PretokTrace)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut rewritten = Vec::new();
    let mut records = Vec::new();
    for (i, line) in lines.into_iter().enumerate() {
        let (text, recs) = rewrite_line(line.as_ref(), i, table);
        rewritten.push(text);
        records.extend(recs);
    }
    (rewritten, PretokTrace { records })
}

pub fn restore_corpus<I, S>(lines: I, trace: &PretokTrace) -> Result<Vec<String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    lines
        .into_iter()
        .enumerate()
        .map(|(i, line)| restore_line(line.as_ref(), trace.line(i)))
        .collect()
}
