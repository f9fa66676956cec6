//! Merge learning over a `(word, frequency)` multiset.
//!
//! Pair counts are maintained incrementally: only words containing the merged
//! pair are recounted. The selected pair is the one with the highest count;
//! equal counts go to the lexicographically smallest `(left, right)`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use indexmap::IndexSet;
use log::info;

use super::model::{Algorithm, MarkerConfig, MergeModel, MergeRule};
use crate::error::{Error, Result};
use crate::script::{bpe_units, cbpe_units, ScriptProfile};

/// Output of a training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: MergeModel,
    /// Number of merges learned when the corpus ran out of bigrams before
    /// reaching the requested count.
    pub exhausted_at: Option<usize>,
    /// Word types whose first codepoint was an attaching sign.
    pub leading_sign_words: usize,
}

#[derive(Debug, Clone)]
pub struct Trainer {
    algorithm: Algorithm,
    merges: usize,
    profile: Option<ScriptProfile>,
    markers: MarkerConfig,
}

impl Trainer {
    pub fn new(algorithm: Algorithm, merges: usize) -> Self {
        Self {
            algorithm,
            merges,
            profile: None,
            markers: MarkerConfig::default(),
        }
    }

    pub fn with_profile(mut self, profile: ScriptProfile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn with_markers(mut self, markers: MarkerConfig) -> Self {
        self.markers = markers;
        self
    }

    pub fn train<I, S>(&self, corpus: I) -> Result<Trained>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        if self.merges == 0 {
            return Err(Error::ZeroMerges);
        }
        match (self.algorithm, &self.profile) {
            (Algorithm::Cbpe, None) => return Err(Error::MissingProfile),
            (Algorithm::Bpe, Some(_)) => return Err(Error::UnexpectedProfile),
            _ => {}
        }
        self.markers.validate()?;

        // Reduce to a sorted multiset so input order never matters.
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for (word, freq) in corpus {
            let word = word.as_ref();
            if freq == 0 {
                return Err(Error::ZeroFrequency {
                    word: word.to_string(),
                });
            }
            self.markers.check(word)?;
            match counts.get_mut(word) {
                Some(c) => *c += freq,
                None => {
                    counts.insert(word.to_string(), freq);
                }
            }
        }

        let mut state = PairState::default();
        let mut base_units = BTreeSet::new();
        let mut leading_sign_words = 0;
        for (word, freq) in &counts {
            let seq = match &self.profile {
                Some(p) => cbpe_units(word, p)?,
                None => bpe_units(word)?,
            };
            if seq.leading_sign {
                leading_sign_words += 1;
            }
            let ids = seq.units.iter().map(|u| state.intern(u)).collect();
            base_units.extend(seq.units);
            state.add_word(ids, *freq);
        }
        state.seed_heap();

        let mut merges = Vec::with_capacity(self.merges);
        while merges.len() < self.merges {
            let Some((left, right)) = state.best_pair() else {
                break;
            };
            let rule = MergeRule {
                left: state.symbols[left].to_string(),
                right: state.symbols[right].to_string(),
                rank: merges.len(),
            };
            let merged = state.intern(&rule.merged());
            state.apply(left, right, merged);
            merges.push(rule);
        }

        let exhausted_at = (merges.len() < self.merges).then_some(merges.len());
        if let Some(rank) = exhausted_at {
            info!(
                "corpus exhausted at rank {rank}: no bigram left before {} merges",
                self.merges
            );
        }

        let mut vocab: IndexSet<String> = base_units.into_iter().collect();
        vocab.extend(merges.iter().map(MergeRule::merged));
        let model = MergeModel::new(
            self.algorithm,
            merges,
            vocab,
            self.profile.clone(),
            self.markers.clone(),
        )?;
        Ok(Trained {
            model,
            exhausted_at,
            leading_sign_words,
        })
    }
}

/// Trains with default markers.
pub fn train<I, S>(
    corpus: I,
    merges: usize,
    algorithm: Algorithm,
    profile: Option<&ScriptProfile>,
) -> Result<Trained>
where
    I: IntoIterator<Item = (S, u64)>,
    S: AsRef<str>,
{
    let mut trainer = Trainer::new(algorithm, merges);
    if let Some(p) = profile {
        trainer = trainer.with_profile(p.clone());
    }
    trainer.train(corpus)
}

type Pair = (usize, usize);

struct Candidate {
    count: u64,
    left: Rc<str>,
    right: Rc<str>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

#[derive(Default)]
struct PairState {
    symbols: Vec<Rc<str>>,
    symbol_ids: HashMap<Rc<str>, usize>,
    words: Vec<Vec<usize>>,
    freqs: Vec<u64>,
    counts: HashMap<Pair, u64>,
    // May hold words that no longer contain the pair; checked on use.
    occurrences: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl PairState {
    fn intern(&mut self, s: &str) -> usize {
        if let Some(&id) = self.symbol_ids.get(s) {
            return id;
        }
        let rc: Rc<str> = Rc::from(s);
        let id = self.symbols.len();
        self.symbols.push(rc.clone());
        self.symbol_ids.insert(rc, id);
        id
    }

    fn add_word(&mut self, ids: Vec<usize>, freq: u64) {
        let idx = self.words.len();
        for w in ids.windows(2) {
            let pair = (w[0], w[1]);
            *self.counts.entry(pair).or_default() += freq;
            self.occurrences.entry(pair).or_default().insert(idx);
        }
        self.words.push(ids);
        self.freqs.push(freq);
    }

    fn candidate(&self, pair: Pair, count: u64) -> Candidate {
        Candidate {
            count,
            left: self.symbols[pair.0].clone(),
            right: self.symbols[pair.1].clone(),
            pair,
        }
    }

    fn seed_heap(&mut self) {
        let entries: Vec<Candidate> = self
            .counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&p, &c)| self.candidate(p, c))
            .collect();
        self.heap = entries.into();
    }

    fn best_pair(&mut self) -> Option<Pair> {
        while let Some(top) = self.heap.pop() {
            let current = self.counts.get(&top.pair).copied().unwrap_or(0);
            if current > 0 && current == top.count {
                return Some(top.pair);
            }
        }
        None
    }

    fn apply(&mut self, left: usize, right: usize, merged: usize) {
        let target = (left, right);
        let Some(word_ids) = self.occurrences.remove(&target) else {
            return;
        };
        let mut word_ids: Vec<usize> = word_ids.into_iter().collect();
        word_ids.sort_unstable();
        let mut touched: HashSet<Pair> = HashSet::new();

        for wi in word_ids {
            let word = &self.words[wi];
            if !word.windows(2).any(|w| (w[0], w[1]) == target) {
                continue;
            }
            let freq = self.freqs[wi];
            for w in word.windows(2) {
                let pair = (w[0], w[1]);
                if let Some(c) = self.counts.get_mut(&pair) {
                    *c -= freq;
                }
                touched.insert(pair);
            }
            let rewritten = merge_pair(word, target, merged);
            for w in rewritten.windows(2) {
                let pair = (w[0], w[1]);
                *self.counts.entry(pair).or_default() += freq;
                self.occurrences.entry(pair).or_default().insert(wi);
                touched.insert(pair);
            }
            self.words[wi] = rewritten;
        }

        let mut touched: Vec<Pair> = touched.into_iter().collect();
        touched.sort_unstable();
        for pair in touched {
            match self.counts.get(&pair).copied() {
                Some(0) => {
                    self.counts.remove(&pair);
                }
                Some(c) => {
                    let cand = self.candidate(pair, c);
                    self.heap.push(cand);
                }
                None => {}
            }
        }
    }
}

/// Left-to-right, non-overlapping replacement of `pair` by `merged`.
pub(crate) fn merge_pair<T: Copy + PartialEq>(units: &[T], pair: (T, T), merged: T) -> Vec<T> {
    let mut out = Vec::with_capacity(units.len());
    let mut i = 0;
    while i < units.len() {
        if i + 1 < units.len() && units[i] == pair.0 && units[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(units[i]);
            i += 1;
        }
    }
    out
}
