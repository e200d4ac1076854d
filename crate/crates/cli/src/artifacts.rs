use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

/// Writes `name` under the output directory if CSV output is enabled.
pub fn csv(
    cfg: &RunConfig,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> CliResult<()> {
    if !cfg.writes(Format::Csv) {
        return Ok(());
    }
    write_to(&cfg.outputs.directory.join(name), body)
}

pub fn write_to(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn json(cfg: &RunConfig, name: &str, value: &impl Serialize) -> CliResult<()> {
    if !cfg.writes(Format::Json) {
        return Ok(());
    }
    write_to(&cfg.outputs.directory.join(name), |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}
