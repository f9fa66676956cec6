//! Pipeline settings from flags and an optional TOML file. Flags win.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use log::info;
use morphtok::pretokenize::{parse_external_segmentations, parse_lookup, FilterPolicy, Rejection};
use morphtok::{Algorithm, LookupTable, MarkerConfig, MergeModel, Normalization, ProfileRegistry, ScriptProfile};
use serde::Deserialize;

use crate::error::{io_err, CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmArg {
    Bpe,
    Cbpe,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Bpe => Algorithm::Bpe,
            AlgorithmArg::Cbpe => Algorithm::Cbpe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PretokenizeArg {
    #[default]
    None,
    Lookup,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationArg {
    #[default]
    Nfc,
    None,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Nfc => Normalization::Nfc,
            NormalizationArg::None => Normalization::None,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// TOML file with any of the settings below; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,

    /// Number of merge operations.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub merges: Option<u64>,

    #[arg(long, value_enum)]
    pub pretokenize: Option<PretokenizeArg>,

    /// Segmentation table for --pretokenize lookup or external.
    #[arg(long, value_name = "PATH")]
    pub lookup: Option<PathBuf>,

    /// Profile file or built-in profile name (devanagari).
    #[arg(long, value_name = "PATH|NAME")]
    pub script_profile: Option<String>,

    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,

    #[arg(long, value_name = "MARKER")]
    pub bpe_marker: Option<String>,

    #[arg(long, value_name = "MARKER")]
    pub segment_marker: Option<String>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// External segmentations: minimum codepoints per segment.
    #[arg(long, value_name = "N")]
    pub min_segment_codepoints: Option<usize>,

    /// External segmentations: maximum number of segments.
    #[arg(long, value_name = "N")]
    pub max_segments: Option<usize>,

    /// External segmentations: drop entries whose segments do not concatenate to the word.
    #[arg(long)]
    pub require_lossless: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    algorithm: Option<AlgorithmArg>,
    merges: Option<u64>,
    pretokenize: Option<PretokenizeArg>,
    lookup: Option<PathBuf>,
    script_profile: Option<String>,
    normalization: Option<NormalizationArg>,
    bpe_marker: Option<String>,
    segment_marker: Option<String>,
    seed: Option<u64>,
    filter: Option<FilterFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterFile {
    min_segment_codepoints: Option<usize>,
    max_segments: Option<usize>,
    require_lossless: Option<bool>,
}

/// Settings after merging file and flags.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub algorithm: Option<Algorithm>,
    pub merges: Option<usize>,
    pub pretokenize: PretokenizeArg,
    pub lookup: Option<PathBuf>,
    pub profile: Option<ScriptProfile>,
    pub normalization: Normalization,
    pub markers: MarkerConfig,
    markers_given: bool,
    pub seed: Option<u64>,
    pub filter: FilterPolicy,
}

impl PipelineArgs {
    pub fn resolve(&self) -> CliResult<Pipeline> {
        let (file, base) = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(io_err(path))?;
                let file: FileConfig = toml::from_str(&text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        // Paths in the config file are relative to the file.
        let relative = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let merges = self.merges.or(file.merges);
        if merges == Some(0) {
            return Err(CliError::usage("--merges must be at least 1"));
        }
        let pretokenize = self.pretokenize.or(file.pretokenize).unwrap_or_default();
        let lookup = self.lookup.clone().or(file.lookup.map(relative));
        match (pretokenize, &lookup) {
            (PretokenizeArg::None, Some(_)) => {
                return Err(CliError::usage("--lookup given but --pretokenize is none"))
            }
            (PretokenizeArg::Lookup | PretokenizeArg::External, None) => {
                return Err(CliError::usage("--pretokenize lookup/external requires --lookup"))
            }
            _ => {}
        }

        let profile_spec = match (&self.script_profile, file.script_profile) {
            (Some(flag), _) => Some(flag.clone()),
            (None, Some(s)) => {
                let candidate = base.join(&s);
                Some(if candidate.is_file() { candidate.display().to_string() } else { s })
            }
            (None, None) => None,
        };
        let profile = match profile_spec {
            Some(spec) => Some(
                ProfileRegistry::default()
                    .resolve(&spec)
                    .map_err(|e| CliError::usage(format!("--script-profile {spec}: {e}")))?,
            ),
            None => None,
        };

        let bpe = self.bpe_marker.clone().or(file.bpe_marker);
        let segment = self.segment_marker.clone().or(file.segment_marker);
        let markers_given = bpe.is_some() || segment.is_some();
        let defaults = MarkerConfig::default();
        let markers = MarkerConfig::new(bpe.unwrap_or(defaults.bpe), segment.unwrap_or(defaults.segment))
            .map_err(|e| CliError::usage(e.to_string()))?;

        let ff = file.filter.unwrap_or_default();
        let mut filter = FilterPolicy::default();
        if let Some(n) = self.min_segment_codepoints.or(ff.min_segment_codepoints) {
            filter.min_segment_codepoints = n;
        }
        if let Some(n) = self.max_segments.or(ff.max_segments) {
            filter.max_segments = n;
        }
        filter.require_lossless = self.require_lossless || ff.require_lossless.unwrap_or(false);
        filter.validate().map_err(|e| CliError::usage(e.to_string()))?;

        Ok(Pipeline {
            algorithm: self.algorithm.or(file.algorithm).map(Algorithm::from),
            merges: merges.map(|m| m as usize),
            pretokenize,
            lookup,
            profile,
            normalization: self.normalization.or(file.normalization).unwrap_or_default().into(),
            markers,
            markers_given,
            seed: self.seed.or(file.seed),
            filter,
        })
    }
}

/// A loaded pre-tokenization table and, for external tables, what the
/// filter dropped.
pub struct Pretokenizer {
    pub table: Option<LookupTable>,
    pub rejected: Option<Vec<Rejection>>,
}

impl Pipeline {
    pub fn require_algorithm(&self) -> CliResult<Algorithm> {
        self.algorithm
            .ok_or_else(|| CliError::usage("missing --algorithm (bpe or cbpe)"))
    }

    pub fn require_merges(&self) -> CliResult<usize> {
        self.merges.ok_or_else(|| CliError::usage("missing --merges"))
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::usage("missing --seed"))
    }

    /// The profile for audits: the one given, else the model's own.
    pub fn audit_profile<'a>(&'a self, model: Option<&'a MergeModel>) -> CliResult<&'a ScriptProfile> {
        self.profile
            .as_ref()
            .or_else(|| model.and_then(MergeModel::profile))
            .ok_or_else(|| CliError::usage("this audit requires --script-profile"))
    }

    pub fn load_pretokenizer(&self, markers: &MarkerConfig) -> CliResult<Pretokenizer> {
        let Some(path) = &self.lookup else {
            return Ok(Pretokenizer {
                table: None,
                rejected: None,
            });
        };
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let text = self.normalization.apply(&text);
        let what = || format!("loading {}", path.display());
        match self.pretokenize {
            PretokenizeArg::None => unreachable!("lookup path without pre-tokenization"),
            PretokenizeArg::Lookup => {
                let table = parse_lookup(&text, path, markers).context(what)?;
                info!("{}: {} lookup entries", path.display(), table.len());
                Ok(Pretokenizer {
                    table: Some(table),
                    rejected: None,
                })
            }
            PretokenizeArg::External => {
                let (table, rejected) =
                    parse_external_segmentations(&text, path, &self.filter, markers).context(what)?;
                info!(
                    "{}: kept {} segmentations, rejected {}",
                    path.display(),
                    table.len(),
                    rejected.len()
                );
                Ok(Pretokenizer {
                    table: Some(table),
                    rejected: Some(rejected),
                })
            }
        }
    }

    /// Loads a model and checks it against the given algorithm, profile and markers.
    pub fn load_model(&self, path: &Path) -> CliResult<MergeModel> {
        let mut registry = ProfileRegistry::default();
        if let Some(p) = &self.profile {
            registry.insert(p.clone());
        }
        let model = morphtok::bpe::load_model_with(path, &registry)
            .context(|| format!("loading model {}", path.display()))?;
        if let Some(a) = self.algorithm {
            if a != model.algorithm() {
                return Err(CliError::usage(format!(
                    "--algorithm {a} but {} is a {} model",
                    path.display(),
                    model.algorithm()
                )));
            }
        }
        if let (Some(given), Some(own)) = (&self.profile, model.profile()) {
            if given != own {
                return Err(morphtok::Error::ProfileMismatch {
                    model: own.name().to_string(),
                    given: given.name().to_string(),
                }
                .into());
            }
        }
        if self.markers_given && &self.markers != model.markers() {
            return Err(CliError::usage(format!(
                "markers {:?}/{:?} differ from the model's {:?}/{:?}",
                self.markers.bpe,
                self.markers.segment,
                model.markers().bpe,
                model.markers().segment
            )));
        }
        Ok(model)
    }
}
