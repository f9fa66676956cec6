//! Shared fixtures, generators and a brute-force reference trainer.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use morphtok::bpe::MergeRule;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CONSONANTS: std::ops::RangeInclusive<u32> = 0x0915..=0x0939;
pub const INDEPENDENT_VOWELS: std::ops::RangeInclusive<u32> = 0x0905..=0x0914;

/// Devanagari vowel signs, written out independently of the crate's profile.
pub fn is_vowel_sign(c: char) -> bool {
    matches!(
        c as u32,
        0x093A..=0x093B | 0x093E..=0x094C | 0x094E..=0x094F | 0x0955..=0x0957 | 0x0962..=0x0963
    )
}

pub fn vowel_signs() -> Vec<char> {
    (0x0900..=0x097F)
        .filter_map(char::from_u32)
        .filter(|&c| is_vowel_sign(c))
        .collect()
}

fn glues(c: char) -> bool {
    is_vowel_sign(c) || c == '\u{093C}' || c == '\u{094D}'
}

/// Initial units for the reference trainer.
pub fn oracle_units(word: &str, constrained: bool) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in word.chars() {
        match out.last_mut() {
            Some(last) if constrained && glues(c) => last.push(c),
            _ => out.push(c.to_string()),
        }
    }
    out
}

/// Reference trainer: recounts every pair from scratch on each step.
/// Returns the merges and the step at which no pair was left, if any.
pub fn oracle_train(
    corpus: &BTreeMap<String, u64>,
    k: usize,
    constrained: bool,
) -> (Vec<(String, String)>, Option<usize>) {
    let mut words: Vec<(Vec<String>, u64)> = corpus
        .iter()
        .map(|(w, &f)| (oracle_units(w, constrained), f))
        .collect();
    let mut merges = Vec::new();
    for step in 0..k {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (units, f) in &words {
            for pair in units.windows(2) {
                *counts.entry((pair[0].clone(), pair[1].clone())).or_default() += f;
            }
        }
        // BTreeMap iterates in ascending key order, so the first maximum wins ties.
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &c) in &counts {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((pair, c));
            }
        }
        let Some(((l, r), _)) = best else {
            return (merges, Some(step));
        };
        let (l, r) = (l.clone(), r.clone());
        for (units, _) in &mut words {
            let mut next = Vec::with_capacity(units.len());
            let mut i = 0;
            while i < units.len() {
                if i + 1 < units.len() && units[i] == l && units[i + 1] == r {
                    next.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    next.push(units[i].clone());
                    i += 1;
                }
            }
            *units = next;
        }
        merges.push((l, r));
    }
    (merges, None)
}

pub fn pairs(rules: &[MergeRule]) -> Vec<(String, String)> {
    rules.iter().map(|m| (m.left.clone(), m.right.clone())).collect()
}

fn pick(rng: &mut impl Rng, range: std::ops::RangeInclusive<u32>) -> char {
    char::from_u32(rng.random_range(range)).unwrap()
}

/// A random consonant-plus-sign word: syllables of a consonant with an
/// optional conjunct, nukta, vowel sign and anusvara.
pub fn fuzz_word(rng: &mut impl Rng, signs: &[char]) -> String {
    let mut w = String::new();
    if rng.random_bool(0.15) {
        w.push(pick(rng, INDEPENDENT_VOWELS));
    }
    for _ in 0..rng.random_range(1..=4) {
        w.push(pick(rng, CONSONANTS));
        if rng.random_bool(0.1) {
            w.push('\u{093C}');
        }
        if rng.random_bool(0.2) {
            w.push('\u{094D}');
            w.push(pick(rng, CONSONANTS));
        }
        if rng.random_bool(0.6) {
            w.push(signs[rng.random_range(0..signs.len())]);
        }
        if rng.random_bool(0.1) {
            w.push('\u{0902}');
        }
    }
    w
}

/// Small alphabet with frequent ties, repeats and a sign-initial word now
/// and then.
pub fn tiny_word(rng: &mut impl Rng) -> String {
    const ALPHABET: [char; 7] = ['क', 'ख', 'ग', 'ा', 'ि', '्', '़'];
    let len = rng.random_range(1..=7);
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    types: usize,
    max_freq: u64,
    word: impl Fn(&mut ChaCha8Rng) -> String,
) -> BTreeMap<String, u64> {
    let mut corpus = BTreeMap::new();
    while corpus.len() < types {
        let w = word(rng);
        corpus.insert(w, rng.random_range(1..=max_freq));
    }
    corpus
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// The bundled Hindi frequency list as `(word, count)`.
pub fn hindi_frequencies() -> Vec<(String, u64)> {
    let text = std::fs::read_to_string(data_path("hi_wordfreq.tsv")).expect("frequency list");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let (w, c) = l.split_once('\t').expect("word<TAB>count");
            (w.to_string(), c.parse().expect("count"))
        })
        .collect()
}

/// Running text of at least `min_bytes`, drawn word by word from the
/// frequency list, 6 to 14 words per line.
pub fn sample_text(freqs: &[(String, u64)], min_bytes: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(freqs.iter().map(|(_, c)| *c)).expect("weights");
    let mut lines = Vec::new();
    let mut bytes = 0;
    while bytes < min_bytes {
        let n = rng.random_range(6..=14);
        let line: Vec<&str> = (0..n).map(|_| freqs[dist.sample(&mut rng)].0.as_str()).collect();
        let line = line.join(" ");
        bytes += line.len() + 1;
        lines.push(line);
    }
    lines
}

pub fn word_counts(lines: &[String]) -> BTreeMap<String, u64> {
    morphtok::pretokenize::extract_unique_words(lines.iter())
}

/// Every word of the lookup fixture with its segments.
pub const SANDHI_LOOKUP: &str = "\
# word\tsplit 1\tsplit 2\tsplit 3
विद्यालय\tविद्या\tआलय
उठता\tउठ\tता
उतारना\tउतार\tना
कराकर\tकरा\tकर
कार्यालय\tकार्य\tआलय
जगदम्बा\tजगत्\tअम्बा
हडबडाना\tहड\tबडा\tना
";
