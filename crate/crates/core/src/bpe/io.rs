//! Model files.
//!
//! The merges file starts with a header line
//! `#morphtok v1 algorithm=<bpe|cbpe> profile=<name|none> bpe_marker=.. segment_marker=..`
//! followed by one `<left> <right>` merge per line in rank order. A third
//! column, when present on every line, gives explicit ranks. The vocabulary
//! lives next to it in `<merges path>.vocab`, one token per line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexSet;
use log::warn;

use super::model::{Algorithm, MarkerConfig, MergeModel, MergeRule};
use crate::error::{Error, Result};
use crate::script::{bpe_units, cbpe_units, ProfileRegistry};

const MAGIC: &str = "#morphtok";
const VERSION: &str = "v1";

pub fn vocab_path(model_path: &Path) -> PathBuf {
    let mut s: OsString = model_path.as_os_str().to_owned();
    s.push(".vocab");
    PathBuf::from(s)
}

pub fn merges_to_string(model: &MergeModel) -> String {
    let mut out = format!(
        "{MAGIC} {VERSION} algorithm={} profile={} bpe_marker={} segment_marker={}\n",
        model.algorithm(),
        model.profile().map_or("none", |p| p.name()),
        model.markers().bpe,
        model.markers().segment,
    );
    for m in model.merges() {
        let _ = writeln!(out, "{} {}", m.left, m.right);
    }
    out
}

pub fn vocab_to_string(model: &MergeModel) -> String {
    let mut out = String::new();
    for tok in model.vocab() {
        out.push_str(tok);
        out.push('\n');
    }
    out
}

pub fn save_model(model: &MergeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, merges_to_string(model))?;
    fs::write(vocab_path(path), vocab_to_string(model))?;
    Ok(())
}

/// Loads a model, resolving its profile among the built-in profiles.
pub fn load_model(path: impl AsRef<Path>) -> Result<MergeModel> {
    load_model_with(path, &ProfileRegistry::default())
}

pub fn load_model_with(path: impl AsRef<Path>, profiles: &ProfileRegistry) -> Result<MergeModel> {
    let path = path.as_ref();
    let merges_text = fs::read_to_string(path)?;
    let vpath = vocab_path(path);
    let vocab_text = if vpath.exists() {
        Some(fs::read_to_string(&vpath)?)
    } else {
        warn!("{} not found; rebuilding vocabulary from merges", vpath.display());
        None
    };
    parse_model(&merges_text, vocab_text.as_deref(), path, profiles)
}

struct Header {
    algorithm: Algorithm,
    profile: Option<String>,
    markers: MarkerConfig,
}

fn parse_header(line: &str, path: &Path) -> Result<Header> {
    let mut fields = line.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(Error::parse(path, 1, "missing #morphtok header"));
    }
    match fields.next() {
        Some(VERSION) => {}
        other => return Err(Error::Version(other.unwrap_or("").to_string())),
    }
    let mut algorithm = None;
    let mut profile = None;
    let mut markers = MarkerConfig::default();
    for field in fields.filter(|f| !f.is_empty()) {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(path, 1, format!("malformed header field {field:?}")))?;
        match key {
            "algorithm" => algorithm = Some(value.parse::<Algorithm>()?),
            "profile" => profile = (value != "none").then(|| value.to_string()),
            "bpe_marker" => markers.bpe = value.to_string(),
            "segment_marker" => markers.segment = value.to_string(),
            _ => return Err(Error::parse(path, 1, format!("unknown header field {key:?}"))),
        }
    }
    let algorithm = algorithm.ok_or_else(|| Error::parse(path, 1, "header lacks algorithm="))?;
    markers.validate()?;
    Ok(Header {
        algorithm,
        profile,
        markers,
    })
}

pub fn parse_model(
    merges_text: &str,
    vocab_text: Option<&str>,
    path: &Path,
    profiles: &ProfileRegistry,
) -> Result<MergeModel> {
    let mut lines = merges_text.lines();
    let header = parse_header(lines.next().unwrap_or(""), path)?;
    let profile = match &header.profile {
        Some(name) => Some(profiles.get(name)?.clone()),
        None => None,
    };

    let mut merges = Vec::new();
    let mut explicit_ranks: Option<bool> = None;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        if line.is_empty() {
            return Err(Error::parse(path, lineno, "blank line in merge list"));
        }
        let fields: Vec<&str> = line.split(' ').collect();
        let (left, right, rank) = match fields.as_slice() {
            [l, r] => (*l, *r, None),
            [l, r, rank] => {
                let rank = rank
                    .parse::<usize>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad rank {rank:?}")))?;
                (*l, *r, Some(rank))
            }
            _ => return Err(Error::parse(path, lineno, "expected `<left> <right>`")),
        };
        match explicit_ranks {
            None => explicit_ranks = Some(rank.is_some()),
            Some(e) if e != rank.is_some() => {
                return Err(Error::parse(path, lineno, "explicit ranks on some lines only"))
            }
            _ => {}
        }
        if left.is_empty() || right.is_empty() {
            return Err(Error::parse(path, lineno, "empty merge operand"));
        }
        merges.push(MergeRule {
            left: left.to_string(),
            right: right.to_string(),
            rank: rank.unwrap_or(idx),
        });
    }

    let vocab: IndexSet<String> = match vocab_text {
        Some(text) => text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect(),
        None => {
            let mut base = std::collections::BTreeSet::new();
            for m in &merges {
                for side in [&m.left, &m.right] {
                    let seq = match &profile {
                        Some(p) => cbpe_units(side, p)?,
                        None => bpe_units(side)?,
                    };
                    base.extend(seq.units);
                }
            }
            let mut sorted_merges = merges.clone();
            sorted_merges.sort_by_key(|m| m.rank);
            let mut v: IndexSet<String> = base.into_iter().collect();
            v.extend(sorted_merges.iter().map(MergeRule::merged));
            v
        }
    };
    MergeModel::new(header.algorithm, merges, vocab, profile, header.markers)
}
