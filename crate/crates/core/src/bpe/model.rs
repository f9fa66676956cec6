use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;

use crate::error::{Error, Result};
use crate::script::{bpe_units, cbpe_units, ScriptProfile, UnitSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Bpe,
    Cbpe,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Bpe => "bpe",
            Algorithm::Cbpe => "cbpe",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bpe" => Ok(Algorithm::Bpe),
            "cbpe" => Ok(Algorithm::Cbpe),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Continuation markers used in serialized token streams.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarkerConfig {
    /// Appended to a token that continues into the next token of the same segment.
    pub bpe: String,
    /// Appended to the last token of a morphological segment that is not the
    /// last segment of its word.
    pub segment: String,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        Self {
            bpe: "@@".to_string(),
            segment: "**".to_string(),
        }
    }
}

impl MarkerConfig {
    pub fn new(bpe: impl Into<String>, segment: impl Into<String>) -> Result<Self> {
        let markers = Self {
            bpe: bpe.into(),
            segment: segment.into(),
        };
        markers.validate()?;
        Ok(markers)
    }

    pub fn validate(&self) -> Result<()> {
        for m in [&self.bpe, &self.segment] {
            if m.is_empty() || m.chars().any(char::is_whitespace) {
                return Err(Error::InvalidMarkers(format!(
                    "marker {m:?} must be non-empty and whitespace-free"
                )));
            }
        }
        if self.bpe.contains(&self.segment) || self.segment.contains(&self.bpe) {
            return Err(Error::InvalidMarkers(format!(
                "markers {:?} and {:?} overlap",
                self.bpe, self.segment
            )));
        }
        Ok(())
    }

    /// The first marker that occurs inside `text`, if any.
    pub fn collision<'a>(&'a self, text: &str) -> Option<&'a str> {
        [self.bpe.as_str(), self.segment.as_str()]
            .into_iter()
            .find(|m| text.contains(m))
    }

    pub fn check(&self, text: &str) -> Result<()> {
        match self.collision(text) {
            Some(marker) => Err(Error::MarkerCollision {
                text: text.to_string(),
                marker: marker.to_string(),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
    pub rank: usize,
}

impl MergeRule {
    pub fn merged(&self) -> String {
        let mut s = String::with_capacity(self.left.len() + self.right.len());
        s.push_str(&self.left);
        s.push_str(&self.right);
        s
    }
}

/// An ordered merge list plus the vocabulary it was learned with.
///
/// Immutable once built; encoding only needs `&self`.
#[derive(Debug, Clone)]
pub struct MergeModel {
    algorithm: Algorithm,
    merges: Vec<MergeRule>,
    vocab: IndexSet<String>,
    profile: Option<ScriptProfile>,
    markers: MarkerConfig,
    // (left id, right id) -> (rank, merged id), ids index into `vocab`.
    pub(crate) merge_index: HashMap<(usize, usize), (usize, usize)>,
}

impl PartialEq for MergeModel {
    fn eq(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm
            && self.merges == other.merges
            && self.vocab == other.vocab
            && self.profile == other.profile
            && self.markers == other.markers
    }
}

impl Eq for MergeModel {}

impl MergeModel {
    /// Builds a model from merge rules in any order; ranks must be exactly
    /// `0..merges.len()`.
    pub fn new(
        algorithm: Algorithm,
        mut merges: Vec<MergeRule>,
        vocab: IndexSet<String>,
        profile: Option<ScriptProfile>,
        markers: MarkerConfig,
    ) -> Result<Self> {
        match (algorithm, &profile) {
            (Algorithm::Cbpe, None) => return Err(Error::MissingProfile),
            (Algorithm::Bpe, Some(_)) => return Err(Error::UnexpectedProfile),
            _ => {}
        }
        markers.validate()?;

        merges.sort_by_key(|m| m.rank);
        for pair in merges.windows(2) {
            if pair[0].rank == pair[1].rank {
                return Err(Error::DuplicateRank(pair[0].rank));
            }
        }
        for (expected, rule) in merges.iter().enumerate() {
            if rule.rank != expected {
                return Err(Error::NonDenseRanks(format!(
                    "expected rank {expected}, found {}",
                    rule.rank
                )));
            }
        }

        let mut merge_index = HashMap::with_capacity(merges.len());
        for rule in &merges {
            for side in [&rule.left, &rule.right] {
                if side.is_empty() || side.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidArgument(format!(
                        "merge {} has an empty or whitespace operand",
                        rule.rank
                    )));
                }
                markers.check(side)?;
            }
            let id = |tok: &str| {
                vocab.get_index_of(tok).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "token {tok:?} of merge {} missing from vocabulary",
                        rule.rank
                    ))
                })
            };
            let key = (id(&rule.left)?, id(&rule.right)?);
            let merged = id(&rule.merged())?;
            // A repeated pair can never fire after its first rank.
            merge_index.entry(key).or_insert((rule.rank, merged));
        }

        Ok(Self {
            algorithm,
            merges,
            vocab,
            profile,
            markers,
            merge_index,
        })
    }

    /// Builds a model from `(left, right)` pairs in rank order. The vocabulary
    /// is the initial units of every operand followed by the merged tokens.
    pub fn from_pairs<L, R>(
        algorithm: Algorithm,
        pairs: impl IntoIterator<Item = (L, R)>,
        profile: Option<ScriptProfile>,
        markers: MarkerConfig,
    ) -> Result<Self>
    where
        L: Into<String>,
        R: Into<String>,
    {
        let merges: Vec<MergeRule> = pairs
            .into_iter()
            .enumerate()
            .map(|(rank, (l, r))| MergeRule {
                left: l.into(),
                right: r.into(),
                rank,
            })
            .collect();
        let mut base = std::collections::BTreeSet::new();
        for rule in &merges {
            for side in [&rule.left, &rule.right] {
                let seq = match (algorithm, &profile) {
                    (Algorithm::Cbpe, Some(p)) => cbpe_units(side, p)?,
                    _ => bpe_units(side)?,
                };
                base.extend(seq.units);
            }
        }
        let mut vocab: IndexSet<String> = base.into_iter().collect();
        vocab.extend(merges.iter().map(MergeRule::merged));
        Self::new(algorithm, merges, vocab, profile, markers)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn vocab(&self) -> &IndexSet<String> {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn profile(&self) -> Option<&ScriptProfile> {
        self.profile.as_ref()
    }

    pub fn markers(&self) -> &MarkerConfig {
        &self.markers
    }

    /// Splits `word` into the units this model's algorithm starts from.
    pub fn initial_units(&self, word: &str) -> Result<UnitSequence> {
        match (&self.algorithm, &self.profile) {
            (Algorithm::Cbpe, Some(p)) => cbpe_units(word, p),
            _ => bpe_units(word),
        }
    }
}
