use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use log::info;
use morphtok::bpe::{save_model, vocab_path, Trainer};
use morphtok::metrics::{audit_obvious_merges, AuditMode};
use morphtok::pretokenize::{add_word_counts, rejections_to_tsv, rewrite_line, trace_record_line};
use morphtok::Algorithm;

use crate::config::PipelineArgs;
use crate::error::{io_err, CliError, CliResult, Context};
use crate::io::{create, for_each_line, label, sibling};
use crate::report::{ReportArgs, Reporter};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,

    #[command(flatten)]
    pub report: ReportArgs,

    /// Training corpus, one sentence per line.
    pub corpus: PathBuf,

    /// Output merges file; the vocabulary goes to `<MODEL>.vocab`, the
    /// pre-tokenization trace to `<MODEL>.trace`.
    pub model: PathBuf,
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let pipeline = args.pipeline.resolve()?;
    let algorithm = pipeline.require_algorithm()?;
    let merges = pipeline.require_merges()?;
    if algorithm == Algorithm::Cbpe && pipeline.profile.is_none() {
        return Err(CliError::usage("--algorithm cbpe requires --script-profile"));
    }
    let pretok = pipeline.load_pretokenizer(&pipeline.markers)?;

    let trace_path = sibling(&args.model, ".trace");
    let mut trace_out = match &pretok.table {
        Some(_) => Some(create(&trace_path)?),
        None => None,
    };
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let (mut lines, mut traced) = (0usize, 0usize);
    for_each_line(std::slice::from_ref(&args.corpus), |i, line| {
        let line = pipeline.normalization.apply(line);
        lines += 1;
        match &pretok.table {
            Some(table) => {
                let (rewritten, records) = rewrite_line(&line, i, table);
                if let Some(out) = &mut trace_out {
                    for r in &records {
                        out.write_all(trace_record_line(r).as_bytes())
                            .map_err(io_err(&trace_path))?;
                    }
                }
                traced += records.len();
                add_word_counts(&mut counts, &rewritten);
            }
            None => add_word_counts(&mut counts, &line),
        }
        Ok(())
    })?;
    if let Some(mut out) = trace_out {
        out.flush().map_err(io_err(&trace_path))?;
    }
    if counts.is_empty() {
        return Err(morphtok::Error::EmptyCorpus).context(|| args.corpus.display().to_string());
    }

    let mut trainer = Trainer::new(algorithm, merges).with_markers(pipeline.markers.clone());
    if algorithm == Algorithm::Cbpe {
        trainer = trainer.with_profile(pipeline.profile.clone().expect("checked above"));
    }
    let trained = trainer
        .train(counts.iter().map(|(w, &c)| (w.as_str(), c)))
        .context(|| format!("training on {}", args.corpus.display()))?;
    save_model(&trained.model, &args.model).context(|| format!("writing {}", args.model.display()))?;
    info!(
        "wrote {} and {}",
        args.model.display(),
        vocab_path(&args.model).display()
    );
    if let Some(rejected) = &pretok.rejected {
        let path = sibling(&args.model, ".rejected");
        fs::write(&path, rejections_to_tsv(rejected)).map_err(io_err(&path))?;
    }

    let config = format!("{}:{algorithm}:K={merges}", label(&args.model));
    let mut report = Reporter::new(&args.report)?;
    report.emit("corpus_lines", &config, lines)?;
    report.emit("word_types", &config, counts.len())?;
    if pretok.table.is_some() {
        report.emit("traced_words", &config, traced)?;
    }
    if let Some(rejected) = &pretok.rejected {
        report.emit("rejected_segmentations", &config, rejected.len())?;
    }
    report.emit("merges_learned", &config, trained.model.merges().len())?;
    report.emit("vocab_size", &config, trained.model.vocab_size())?;
    report.emit(
        "exhausted_at",
        &config,
        trained.exhausted_at.map_or("none".to_string(), |r| r.to_string()),
    )?;
    if trained.leading_sign_words > 0 {
        report.emit("leading_sign_words", &config, trained.leading_sign_words)?;
    }
    match &pipeline.profile {
        Some(profile) => {
            for mode in [AuditMode::Strict, AuditMode::Prefix] {
                let r = audit_obvious_merges(&trained.model, profile, mode);
                report.emit(&format!("obvious_merges_{mode}"), &config, r.flagged)?;
                report.emit(&format!("obvious_merges_{mode}_pct"), &config, format!("{:.2}", r.percentage()))?;
            }
        }
        None => info!("no --script-profile; obvious-merge audit skipped"),
    }
    report.finish()
}
