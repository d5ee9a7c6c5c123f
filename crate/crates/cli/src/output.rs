use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes a list of flat records. CSV headers come from the record fields;
/// `headers` is only written when there are no records.
pub fn write_records<T: Serialize>(
    out: &mut dyn Write,
    format: Format,
    headers: &[&str],
    records: &[T],
) -> Result<()> {
    match format {
        Format::Json => write_json(out, &records)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            if records.is_empty() {
                w.write_record(headers)?;
            }
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}
