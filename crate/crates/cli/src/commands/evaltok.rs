use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use morphtok::evaltok::{aggregate, load_sheet, sample_words, EvalSheet, SheetSystem};
use morphtok::pretokenize::{add_word_counts, parse_lookup};
use morphtok::{LookupTable, MergeModel, PretokTrace};

use crate::config::PipelineArgs;
use crate::error::{io_err, CliError, CliResult, Context};
use crate::io::{for_each_line, label, open_output};
use crate::report::{ReportArgs, Reporter};

#[derive(Debug, Subcommand)]
pub enum EvalTokCommand {
    /// Draw distinct words from a corpus for annotation.
    Sample(SampleArgs),
    /// Write an annotation sheet with one segmentation column per system.
    Export(ExportArgs),
    /// Per-system score means and histograms over filled-in sheets.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_name = "N")]
    pub n: usize,
    /// Only sample words rewritten by pre-tokenization in this trace.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Corpus files; stdin when absent.
    pub input: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Word list, one per line.
    #[arg(long, value_name = "PATH")]
    pub words: PathBuf,
    /// `LABEL=MODEL[,LOOKUP]`; repeat for each column.
    #[arg(long = "system", value_name = "LABEL=MODEL[,LOOKUP]", required = true)]
    pub systems: Vec<String>,
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub report: ReportArgs,
    /// Filled-in sheets; each file's stem is its annotator.
    #[arg(required = true)]
    pub sheets: Vec<PathBuf>,
}

pub fn run(cmd: &EvalTokCommand) -> CliResult<()> {
    match cmd {
        EvalTokCommand::Sample(a) => sample(a),
        EvalTokCommand::Export(a) => export(a),
        EvalTokCommand::Aggregate(a) => aggregate_sheets(a),
    }
}

fn sample(args: &SampleArgs) -> CliResult<()> {
    let pipeline = args.pipeline.resolve()?;
    let seed = pipeline.require_seed()?;
    let mut counts = BTreeMap::new();
    for_each_line(&args.input, |_, line| {
        add_word_counts(&mut counts, &pipeline.normalization.apply(line));
        Ok(())
    })?;
    let trace = match &args.trace {
        Some(p) => Some(PretokTrace::load(p).context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let words = sample_words(&counts, args.n, seed, trace.as_ref())?;
    let name = args.output.clone().unwrap_or_else(|| "<stdout>".into());
    let mut out = open_output(args.output.as_deref())?;
    for w in words {
        writeln!(out, "{w}").map_err(io_err(&name))?;
    }
    out.flush().map_err(io_err(&name))
}

struct SystemSpec {
    label: String,
    model: MergeModel,
    lookup: Option<LookupTable>,
}

fn export(args: &ExportArgs) -> CliResult<()> {
    let pipeline = args.pipeline.resolve()?;
    let mut specs = Vec::new();
    for raw in &args.systems {
        let (label, rest) = raw
            .split_once('=')
            .filter(|(l, r)| !l.is_empty() && !r.is_empty())
            .ok_or_else(|| CliError::usage(format!("--system {raw:?}: expected LABEL=MODEL[,LOOKUP]")))?;
        let (model_path, lookup_path) = match rest.split_once(',') {
            Some((m, l)) => (PathBuf::from(m), Some(PathBuf::from(l))),
            None => (PathBuf::from(rest), None),
        };
        let model = pipeline.load_model(&model_path)?;
        let lookup = match lookup_path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
                let text = pipeline.normalization.apply(&text);
                Some(parse_lookup(&text, &p, model.markers()).context(|| format!("loading {}", p.display()))?)
            }
            None => None,
        };
        specs.push(SystemSpec {
            label: label.to_string(),
            model,
            lookup,
        });
    }
    let mut words = Vec::new();
    for_each_line(std::slice::from_ref(&args.words), |_, line| {
        let w = line.trim();
        if !w.is_empty() {
            words.push(pipeline.normalization.apply(w).into_owned());
        }
        Ok(())
    })?;
    let systems: Vec<SheetSystem> = specs
        .iter()
        .map(|s| SheetSystem {
            label: &s.label,
            model: &s.model,
            lookup: s.lookup.as_ref(),
        })
        .collect();
    let sheet = EvalSheet::build(&words, &systems)?;
    let name = args.output.clone().unwrap_or_else(|| "<stdout>".into());
    let mut out = open_output(args.output.as_deref())?;
    out.write_all(sheet.to_tsv().as_bytes()).map_err(io_err(&name))?;
    out.flush().map_err(io_err(&name))
}

fn aggregate_sheets(args: &AggregateArgs) -> CliResult<()> {
    let mut records = Vec::new();
    let mut rejected = 0;
    for path in &args.sheets {
        let import = load_sheet(path).context(|| format!("loading {}", path.display()))?;
        for r in &import.rejected {
            eprintln!("{}: {}", path.display(), r.to_error());
        }
        rejected += import.rejected.len();
        records.extend(import.sheet.records(&label(path)));
    }
    let reports = aggregate(&records)?;
    let mut out = Reporter::new(&args.report)?;
    for (system, r) in &reports {
        out.emit("evaltok_mean", system, format!("{:.4}", r.mean_f64()))?;
        out.emit("evaltok_mean_exact", system, r.mean)?;
        out.emit("evaltok_items", system, r.items)?;
        out.emit("evaltok_records", system, r.n)?;
        for (i, count) in r.histogram.iter().enumerate() {
            out.emit(&format!("evaltok_score_{}", i + 1), system, count)?;
        }
    }
    out.finish()?;
    if rejected > 0 {
        return Err(CliError::Reported(format!("{rejected} sheet rows rejected")));
    }
    Ok(())
}
