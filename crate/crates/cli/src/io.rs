use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{io_err, CliResult};

/// `-` means stdin.
pub fn open_input(path: &Path) -> CliResult<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    Ok(Box::new(BufReader::new(File::open(path).map_err(io_err(path))?)))
}

/// `None` or `-` means stdout.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) if p != Path::new("-") => Ok(Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?))),
        _ => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Calls `f` on each line of each input in order, with a running line index.
pub fn for_each_line(
    inputs: &[PathBuf],
    mut f: impl FnMut(usize, &str) -> CliResult<()>,
) -> CliResult<()> {
    let stdin = [PathBuf::from("-")];
    let inputs = if inputs.is_empty() { &stdin[..] } else { inputs };
    let mut index = 0;
    for path in inputs {
        let reader = open_input(path)?;
        for line in reader.lines() {
            let line = line.map_err(io_err(path))?;
            f(index, line.strip_suffix('\r').unwrap_or(&line))?;
            index += 1;
        }
    }
    Ok(())
}

/// Path with `suffix` appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
