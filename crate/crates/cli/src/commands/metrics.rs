use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use log::info;
use morphtok::metrics::{
    audit_obvious_merges, renyi_efficiency, segment_size_by_length, AuditMode, DvTokenAudit, TokenStats,
    DEFAULT_RENYI_ALPHA,
};
use morphtok::pretokenize::{add_word_counts, rewrite_line};
use morphtok::{MergeModel, TokenizedWord};

use crate::config::{Pipeline, PipelineArgs};
use crate::error::{CliResult, Context};
use crate::io::{for_each_line, label};
use crate::report::{ReportArgs, Reporter};

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Tokens per surface word.
    Fertility(CorpusMetric),
    /// Rényi efficiency of the token distribution.
    Renyi {
        #[arg(long, default_value_t = DEFAULT_RENYI_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        corpus: CorpusMetric,
    },
    /// Learned merges whose right element is a dependent vowel.
    AuditMerges {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
    },
    /// Dependent-vowel tokens in an encoded corpus.
    AuditTokens {
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[command(flatten)]
        corpus: CorpusMetric,
    },
    /// Mean tokens per word by word length, over words two models split differently.
    Segsize {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long, value_name = "PATH")]
        model_a: PathBuf,
        #[arg(long, value_name = "PATH")]
        model_b: PathBuf,
        /// Corpus whose word types are compared; stdin when absent.
        input: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Prefix,
    Both,
}

impl ModeArg {
    fn modes(self) -> &'static [AuditMode] {
        match self {
            ModeArg::Strict => &[AuditMode::Strict],
            ModeArg::Prefix => &[AuditMode::Prefix],
            ModeArg::Both => &[AuditMode::Strict, AuditMode::Prefix],
        }
    }
}

#[derive(Debug, Args)]
pub struct CorpusMetric {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Corpus files; stdin when absent.
    pub input: Vec<PathBuf>,
}

/// Encodes the corpus with pre-tokenization as configured, handing each
/// line's words to `f`.
fn encode_corpus(
    pipeline: &Pipeline,
    model: &MergeModel,
    inputs: &[PathBuf],
    mut f: impl FnMut(&[TokenizedWord]),
) -> CliResult<()> {
    let pretok = pipeline.load_pretokenizer(model.markers())?;
    for_each_line(inputs, |i, line| {
        let line = pipeline.normalization.apply(line);
        let (text, records) = match &pretok.table {
            Some(table) => rewrite_line(&line, i, table),
            None => (line.into_owned(), Vec::new()),
        };
        let words = model
            .encode_line(&text, Some(&records))
            .context(|| format!("input line {}", i + 1))?;
        f(&words);
        Ok(())
    })
}

pub fn run(cmd: &MetricsCommand) -> CliResult<()> {
    match cmd {
        MetricsCommand::Fertility(c) => {
            let pipeline = c.pipeline.resolve()?;
            let model = pipeline.load_model(&c.model)?;
            let mut stats = TokenStats::new();
            encode_corpus(&pipeline, &model, &c.input, |words| words.iter().for_each(|w| stats.add_word(w)))?;
            let fertility = stats.fertility()?;
            let config = label(&c.model);
            let mut report = Reporter::new(&c.report)?;
            report.emit("fertility", &config, fertility)?;
            report.emit("tokens", &config, fertility.tokens)?;
            report.emit("words", &config, fertility.words)?;
            report.finish()
        }
        MetricsCommand::Renyi { alpha, corpus: c } => {
            let pipeline = c.pipeline.resolve()?;
            let model = pipeline.load_model(&c.model)?;
            let mut stats = TokenStats::new();
            encode_corpus(&pipeline, &model, &c.input, |words| words.iter().for_each(|w| stats.add_word(w)))?;
            // Tokens that passed through as unknown units still occupy a slot.
            let observed: BTreeSet<&str> = stats.frequencies.keys().map(String::as_str).collect();
            let extra = observed.iter().filter(|t| !model.vocab().contains(**t)).count();
            if extra > 0 {
                info!("{extra} observed tokens outside the vocabulary counted into |V|");
            }
            let vocab_size = model.vocab_size() + extra;
            let value = renyi_efficiency(stats.frequencies.values().copied(), *alpha, vocab_size)?;
            let config = format!("{}:alpha={alpha}", label(&c.model));
            let mut report = Reporter::new(&c.report)?;
            report.emit("renyi_efficiency", &config, format!("{value:.6}"))?;
            report.emit("vocab_size", &config, vocab_size)?;
            report.finish()
        }
        MetricsCommand::AuditMerges {
            pipeline,
            report,
            model,
            mode,
        } => {
            let pipeline = pipeline.resolve()?;
            let m = pipeline.load_model(model)?;
            let profile = pipeline.audit_profile(Some(&m))?;
            let config = label(model);
            let mut out = Reporter::new(report)?;
            out.emit("merges_total", &config, m.merges().len())?;
            for &mode in mode.modes() {
                let r = audit_obvious_merges(&m, profile, mode);
                out.emit(&format!("obvious_merges_{mode}"), &config, r.flagged)?;
                out.emit(&format!("obvious_merges_{mode}_pct"), &config, format!("{:.2}", r.percentage()))?;
            }
            out.finish()
        }
        MetricsCommand::AuditTokens { mode, corpus: c } => {
            let pipeline = c.pipeline.resolve()?;
            let model = pipeline.load_model(&c.model)?;
            let profile = pipeline.audit_profile(Some(&model))?.clone();
            let mut audits: Vec<DvTokenAudit> = mode.modes().iter().map(|&m| DvTokenAudit::new(&profile, m)).collect();
            encode_corpus(&pipeline, &model, &c.input, |words| {
                for a in &mut audits {
                    for w in words {
                        a.add_tokens(&w.tokens);
                    }
                }
            })?;
            let config = label(&c.model);
            let mut out = Reporter::new(&c.report)?;
            out.emit("tokens_total", &config, audits[0].report().total)?;
            for a in &audits {
                let r = a.report();
                out.emit(&format!("dv_tokens_{}", r.mode), &config, r.flagged)?;
                out.emit(&format!("dv_tokens_{}_pct", r.mode), &config, format!("{:.4}", r.percentage()))?;
                out.emit(&format!("dv_word_initial_{}", r.mode), &config, r.noise)?;
            }
            out.finish()
        }
        MetricsCommand::Segsize {
            pipeline,
            report,
            model_a,
            model_b,
            input,
        } => {
            let pipeline = pipeline.resolve()?;
            let a = pipeline.load_model(model_a)?;
            let b = pipeline.load_model(model_b)?;
            let mut counts = Default::default();
            for_each_line(input, |_, line| {
                add_word_counts(&mut counts, &pipeline.normalization.apply(line));
                Ok(())
            })?;
            let words: Vec<String> = counts.into_keys().collect();
            let table = segment_size_by_length(&words, &a, &b)?;
            let (la, lb) = (label(model_a), label(model_b));
            let mut out = Reporter::new(report)?;
            for row in &table.rows {
                let config = format!("len={}", row.length);
                out.emit("segsize_words", &config, row.words)?;
                out.emit(&format!("segsize_mean:{la}"), &config, format!("{:.4}", row.mean_a))?;
                out.emit(&format!("segsize_mean:{lb}"), &config, format!("{:.4}", row.mean_b))?;
            }
            out.emit("segsize_excluded", "all", table.excluded)?;
            if let Some((ma, mb)) = table.overall() {
                out.emit(&format!("segsize_mean:{la}"), "all", format!("{ma:.4}"))?;
                out.emit(&format!("segsize_mean:{lb}"), "all", format!("{mb:.4}"))?;
            }
            out.finish()
        }
    }
}
