//! Report output: aligned text or JSON lines on stdout, plus optional TSV
//! record lines in a file.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use morphtok::metrics::Record;
use serde::Serialize;

use crate::error::{io_err, CliResult};

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    /// Print reports as JSON lines.
    #[arg(long)]
    pub json: bool,

    /// Also write `metric<TAB>config<TAB>value` lines to PATH.
    #[arg(long, value_name = "PATH")]
    pub records: Option<PathBuf>,
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    metric: &'a str,
    config: &'a str,
    value: &'a str,
}

pub struct Reporter {
    json: bool,
    records: Option<(PathBuf, BufWriter<File>)>,
    out: io::StdoutLock<'static>,
}

impl Reporter {
    pub fn new(args: &ReportArgs) -> CliResult<Self> {
        let records = match &args.records {
            Some(path) => Some((
                path.clone(),
                BufWriter::new(File::create(path).map_err(io_err(path))?),
            )),
            None => None,
        };
        Ok(Self {
            json: args.json,
            records,
            out: io::stdout().lock(),
        })
    }

    pub fn emit(&mut self, metric: &str, config: &str, value: impl Display) -> CliResult<()> {
        let record = Record::new(metric, config, value);
        if self.json {
            let line = serde_json::to_string(&JsonRecord {
                metric: &record.metric,
                config: &record.config,
                value: &record.value,
            })
            .expect("plain strings serialize");
            writeln!(self.out, "{line}").map_err(io_err("<stdout>"))?;
        } else {
            writeln!(self.out, "{:<28} {:<24} {}", record.metric, record.config, record.value)
                .map_err(io_err("<stdout>"))?;
        }
        if let Some((path, w)) = &mut self.records {
            writeln!(w, "{}", record.to_tsv()).map_err(io_err(path.clone()))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(io_err("<stdout>"))?;
        if let Some((path, mut w)) = self.records.take() {
            w.flush().map_err(io_err(path))?;
        }
        Ok(())
    }
}
