use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// One CSV header plus a row per record, or a JSON array of the same
/// records. `None` fields are empty cells / `null`.
pub fn write_records<T: Serialize>(records: &[T], format: Format, out: &mut dyn Write) -> CliResult<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, records)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// CSV with caller-built header and rows.
pub fn write_table(header: &[String], rows: &[Vec<String>], out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// Gnuplot script plotting every listed column against the first.
pub fn write_plot_hint(path: &Path, data: &Path, header: &[String], columns: &[&str]) -> CliResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set key autotitle columnhead")?;
    writeln!(f, "set xlabel '{}'", header[0])?;
    let plots: Vec<String> = columns
        .iter()
        .filter_map(|c| header.iter().position(|h| h == c))
        .map(|i| format!("'{}' using 1:{} with linespoints", data.display(), i + 1))
        .collect();
    writeln!(f, "plot {}", plots.join(", \\\n     "))?;
    f.flush()?;
    Ok(())
}
