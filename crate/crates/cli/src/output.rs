//! CSV and JSON emission.

use std::io::Write;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Digits after the point in scientific notation: 10 significant digits.
const DECIMALS: usize = 9;

pub fn format_float(x: f64) -> String {
    format!("{x:.DECIMALS$e}")
}

/// `x` as it will read back from the emitted text.
pub fn round_sig(x: f64) -> f64 {
    format_float(x).parse().expect("formatted float parses")
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// A row type with a fixed column order.
pub trait Table: Serialize {
    const HEADER: &'static [&'static str];

    fn record(&self) -> Vec<String>;
}

pub fn write_table<T: Table, W: Write>(rows: &[T], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(T::HEADER)?;
            for row in rows {
                w.write_record(row.record())?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}
