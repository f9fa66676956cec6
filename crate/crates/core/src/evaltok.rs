//! Human post-hoc scoring of word segmentations on a 1–4 scale.
//!
//! Scores come from annotators; this module only samples words, lays out
//! annotation sheets and aggregates the filled-in scores.
//!
//! Rubric (for annotators):
//! 1. no token is morphologically correct or preserves the word's meaning;
//! 2. more than half of the tokens do not preserve morphology or meaning;
//! 3. at least half of the tokens are morphologically or semantically correct;
//! 4. every token is correct, or the word was left whole.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bpe::{Boundary, MergeModel, TokenizedWord};
use crate::error::{Error, Result};
use crate::pretokenize::{LookupTable, PretokTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(u8);

impl Score {
    pub fn new(value: u8) -> Option<Self> {
        (1..=4).contains(&value).then_some(Score(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTokRecord {
    pub word: String,
    /// Marker-annotated segmentation as shown to the annotator.
    pub tokens: String,
    pub score: Score,
    pub annotator: String,
    pub system: String,
}

impl EvalTokRecord {
    pub fn validate(&self) -> Result<()> {
        if self.word.is_empty() || self.tokens.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "record for system {:?} has an empty word or segmentation",
                self.system
            )));
        }
        Ok(())
    }
}

/// Draws `n` distinct words uniformly without replacement.
///
/// With `trace`, only words that were rewritten by pre-tokenization are
/// eligible. The pool is sorted before sampling, so the result depends only
/// on its contents and `seed`.
pub fn sample_words(
    frequencies: &BTreeMap<String, u64>,
    n: usize,
    seed: u64,
    trace: Option<&PretokTrace>,
) -> Result<Vec<String>> {
    let pool: Vec<&String> = match trace {
        Some(trace) => {
            let traced: BTreeSet<&str> = trace.records().iter().map(|r| r.original.as_str()).collect();
            frequencies.keys().filter(|w| traced.contains(w.as_str())).collect()
        }
        None => frequencies.keys().collect(),
    };
    if n > pool.len() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}

/// One segmentation column of an annotation sheet.
#[derive(Debug, Clone, Copy)]
pub struct SheetSystem<'a> {
    pub label: &'a str,
    pub model: &'a MergeModel,
    pub lookup: Option<&'a LookupTable>,
}

impl SheetSystem<'_> {
    pub fn segment(&self, word: &str) -> Result<TokenizedWord> {
        let Some(entry) = self.lookup.and_then(|t| t.get(word)) else {
            return self.model.encode_word(word);
        };
        let mut out = TokenizedWord {
            tokens: Vec::new(),
            unknown_units: 0,
        };
        let last = entry.segments.len() - 1;
        for (i, seg) in entry.segments.iter().enumerate() {
            let mut tw = self.model.encode_word(seg)?;
            if i < last {
                if let Some(t) = tw.tokens.last_mut() {
                    t.boundary = Boundary::SegmentContinuation;
                }
            }
            out.unknown_units += tw.unknown_units;
            out.tokens.append(&mut tw.tokens);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SheetRow {
    pub word: String,
    /// One `(segmentation, score)` cell pair per system.
    pub cells: Vec<(String, Option<Score>)>,
}

/// Annotation sheet: `word<TAB>(<segmentation><TAB><score>)+`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSheet {
    pub systems: Vec<String>,
    pub rows: Vec<SheetRow>,
}

impl EvalSheet {
    pub fn build<S: AsRef<str>>(words: &[S], systems: &[SheetSystem<'_>]) -> Result<Self> {
        if systems.is_empty() {
            return Err(Error::InvalidArgument("at least one system is required".into()));
        }
        let rows = words
            .iter()
            .map(|w| {
                let word = w.as_ref();
                let cells = systems
                    .iter()
                    .map(|s| Ok((s.segment(word)?.compact(s.model.markers()), None)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SheetRow {
                    word: word.to_string(),
                    cells,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            systems: systems.iter().map(|s| s.label.to_string()).collect(),
            rows,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word");
        for s in &self.systems {
            out.push('\t');
            out.push_str(s);
            out.push_str("\tscore");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.word);
            for (seg, score) in &row.cells {
                out.push('\t');
                out.push_str(seg);
                out.push('\t');
                if let Some(s) = score {
                    out.push_str(&s.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    /// Records for every scored cell, attributed to `annotator`.
    pub fn records(&self, annotator: &str) -> Vec<EvalTokRecord> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (system, (seg, score)) in self.systems.iter().zip(&row.cells) {
                if let Some(score) = score {
                    out.push(EvalTokRecord {
                        word: row.word.clone(),
                        tokens: seg.clone(),
                        score: *score,
                        annotator: annotator.to_string(),
                        system: system.clone(),
                    });
                }
            }
        }
        out
    }
}

pub fn export_sheet<S: AsRef<str>>(
    words: &[S],
    systems: &[SheetSystem<'_>],
    path: impl AsRef<Path>,
) -> Result<EvalSheet> {
    let sheet = EvalSheet::build(words, systems)?;
    fs::write(path, sheet.to_tsv())?;
    Ok(sheet)
}

/// A sheet row dropped because a score was outside 1..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRejection {
    /// 1-based line number in the sheet file.
    pub row: usize,
    pub score: String,
}

impl RowRejection {
    pub fn to_error(&self) -> Error {
        Error::ScoreOutOfRange {
            row: self.row,
            score: self.score.clone(),
        }
    }
}

/// A parsed sheet plus the rows that were rejected for bad scores.
#[derive(Debug, Clone)]
pub struct SheetImport {
    pub sheet: EvalSheet,
    pub rejected: Vec<RowRejection>,
}

pub fn parse_sheet(text: &str, path: &Path) -> Result<SheetImport> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty sheet"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 3 || cols.len().is_multiple_of(2) || cols[0] != "word" {
        return Err(Error::parse(path, 1, "header must be word<TAB>(<system><TAB>score)+"));
    }
    let systems: Vec<String> = cols[1..].chunks(2).map(|c| c[0].to_string()).collect();

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (idx, line) in lines {
        let rowno = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(Error::parse(
                path,
                rowno,
                format!("expected {} columns, found {}", cols.len(), fields.len()),
            ));
        }
        let mut cells = Vec::with_capacity(systems.len());
        let mut bad = None;
        for pair in fields[1..].chunks(2) {
            let raw = pair[1].trim();
            let score = if raw.is_empty() {
                None
            } else {
                match raw.parse::<u8>().ok().and_then(Score::new) {
                    Some(s) => Some(s),
                    None => {
                        bad.get_or_insert(raw.to_string());
                        None
                    }
                }
            };
            cells.push((pair[0].to_string(), score));
        }
        match bad {
            Some(score) => rejected.push(RowRejection { row: rowno, score }),
            None => rows.push(SheetRow {
                word: fields[0].to_string(),
                cells,
            }),
        }
    }
    Ok(SheetImport {
        sheet: EvalSheet { systems, rows },
        rejected,
    })
}

pub fn load_sheet(path: impl AsRef<Path>) -> Result<SheetImport> {
    let path = path.as_ref();
    parse_sheet(&fs::read_to_string(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTokReport {
    /// Number of records.
    pub n: u64,
    /// Record counts for scores 1..=4.
    pub histogram: [u64; 4],
    /// Mean over items of each item's mean score.
    pub mean: Ratio<u64>,
    pub items: u64,
}

impl EvalTokReport {
    pub fn mean_f64(&self) -> f64 {
        *self.mean.numer() as f64 / *self.mean.denom() as f64
    }
}

/// Per-system reports. Scores of several annotators for the same
/// `(word, system)` are averaged first, then items are averaged.
pub fn aggregate<'a>(
    records: impl IntoIterator<Item = &'a EvalTokRecord>,
) -> Result<BTreeMap<String, EvalTokReport>> {
    // system -> word -> (score sum, count)
    let mut items: BTreeMap<&str, BTreeMap<&str, (u64, u64)>> = BTreeMap::new();
    let mut hist: BTreeMap<&str, [u64; 4]> = BTreeMap::new();
    for r in records {
        r.validate()?;
        let score = u64::from(r.score.get());
        let item = items.entry(&r.system).or_default().entry(&r.word).or_default();
        item.0 += score;
        item.1 += 1;
        hist.entry(&r.system).or_default()[usize::from(r.score.get()) - 1] += 1;
    }
    Ok(items
        .into_iter()
        .map(|(system, per_word)| {
            let n_items = per_word.len() as u64;
            let total: Ratio<u64> = per_word
                .values()
                .map(|&(sum, count)| Ratio::new(sum, count))
                .sum();
            let histogram = hist[system];
            (
                system.to_string(),
                EvalTokReport {
                    n: histogram.iter().sum(),
                    histogram,
                    mean: total / n_items,
                    items: n_items,
                },
            )
        })
        .collect())
}
