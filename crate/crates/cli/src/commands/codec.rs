use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use log::{info, warn};
use morphtok::bpe::{decode_line, serialize_line};
use morphtok::pretokenize::{rewrite_line, trace_record_line};
use morphtok::PretokTrace;

use crate::config::PipelineArgs;
use crate::error::{io_err, CliResult, Context};
use crate::io::{create, for_each_line, open_output};

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,

    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Write the pre-tokenization trace here (needed to decode lossy segmentations).
    #[arg(long, value_name = "PATH")]
    pub trace_out: Option<PathBuf>,

    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Input files; stdin when absent.
    pub input: Vec<PathBuf>,
}

pub fn encode(args: &EncodeArgs) -> CliResult<()> {
    let pipeline = args.pipeline.resolve()?;
    let model = pipeline.load_model(&args.model)?;
    let pretok = pipeline.load_pretokenizer(model.markers())?;
    if pretok.table.is_some() && args.trace_out.is_none() {
        warn!("no --trace-out; segmented words will decode by plain concatenation");
    }
    let mut out = open_output(args.output.as_deref())?;
    let out_name = args.output.clone().unwrap_or_else(|| "<stdout>".into());
    let mut trace_out = args.trace_out.as_deref().map(create).transpose()?;
    let mut unknown = 0;
    for_each_line(&args.input, |i, line| {
        let line = pipeline.normalization.apply(line);
        let (text, records) = match &pretok.table {
            Some(table) => rewrite_line(&line, i, table),
            None => (line.into_owned(), Vec::new()),
        };
        let words = model
            .encode_line(&text, Some(&records))
            .context(|| format!("input line {}", i + 1))?;
        unknown += words.iter().map(|w| w.unknown_units).sum::<usize>();
        writeln!(out, "{}", serialize_line(&words, model.markers())).map_err(io_err(&out_name))?;
        if let (Some(t), Some(path)) = (&mut trace_out, &args.trace_out) {
            for r in &records {
                t.write_all(trace_record_line(r).as_bytes()).map_err(io_err(path))?;
            }
        }
        Ok(())
    })?;
    out.flush().map_err(io_err(&out_name))?;
    if let (Some(mut t), Some(path)) = (trace_out, &args.trace_out) {
        t.flush().map_err(io_err(path))?;
    }
    if unknown > 0 {
        info!("{unknown} units outside the model vocabulary passed through");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Take markers from this model instead of flags.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,

    /// Trace written by `encode --trace-out`.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,

    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    pub input: Vec<PathBuf>,
}

pub fn decode(args: &DecodeArgs) -> CliResult<()> {
    let pipeline = args.pipeline.resolve()?;
    let markers = match &args.model {
        Some(path) => pipeline.load_model(path)?.markers().clone(),
        None => pipeline.markers.clone(),
    };
    let trace = match &args.trace {
        Some(path) => Some(PretokTrace::load(path).context(|| format!("loading {}", path.display()))?),
        None => None,
    };
    let mut out = open_output(args.output.as_deref())?;
    let out_name = args.output.clone().unwrap_or_else(|| "<stdout>".into());
    let mut untraced = 0;
    for_each_line(&args.input, |i, line| {
        let records = trace.as_ref().map(|t| t.line(i));
        let decoded = decode_line(line, i, &markers, records)?;
        untraced += decoded.untraced_joins;
        writeln!(out, "{}", decoded.text).map_err(io_err(&out_name))?;
        Ok(())
    })?;
    out.flush().map_err(io_err(&out_name))?;
    if untraced > 0 {
        warn!("{untraced} segmented words joined without a trace; lossy segmentations may differ from the source");
    }
    Ok(())
}
