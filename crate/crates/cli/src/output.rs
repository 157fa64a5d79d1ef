//! Versioned CSV/JSON emission. CSV rows are written as they are produced.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::settings::Format;

pub const SCHEMA: u32 = 1;

pub struct Output {
    sink: Box<dyn Write>,
    format: Format,
    command: &'static str,
    config: Value,
    notes: Vec<(String, Value)>,
}

impl Output {
    /// In CSV mode the schema, command and effective-config lines and the
    /// column row are written immediately.
    pub fn open(
        path: Option<&Path>,
        format: Format,
        command: &'static str,
        config: &impl Serialize,
        columns: &[&str],
    ) -> io::Result<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let config = serde_json::to_value(config).map_err(io::Error::other)?;
        let mut out = Self { sink, format, command, config, notes: Vec::new() };
        if out.is_csv() {
            writeln!(out.sink, "# schema={SCHEMA}")?;
            writeln!(out.sink, "# command={}", out.command)?;
            writeln!(out.sink, "# config={}", out.config)?;
            writeln!(out.sink, "{}", columns.join(","))?;
        }
        Ok(out)
    }

    pub fn is_csv(&self) -> bool {
        self.format == Format::Csv
    }

    /// Key/value metadata: a comment line in CSV, a top-level field in JSON.
    pub fn note(&mut self, key: &str, value: impl Serialize) -> io::Result<()> {
        let value = serde_json::to_value(value).map_err(io::Error::other)?;
        if self.is_csv() {
            writeln!(self.sink, "# {key}={value}")
        } else {
            self.notes.push((key.to_string(), value));
            Ok(())
        }
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        writeln!(self.sink, "{}", fields.join(","))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.sink.flush()
    }

    /// Whole JSON document `{schema, command, config, ..notes, data}`.
    pub fn json(&mut self, data: impl Serialize) -> io::Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("schema".into(), SCHEMA.into());
        doc.insert("command".into(), self.command.into());
        doc.insert("config".into(), self.config.clone());
        for (k, v) in self.notes.drain(..) {
            doc.insert(k, v);
        }
        doc.insert("data".into(), serde_json::to_value(data).map_err(io::Error::other)?);
        serde_json::to_writer_pretty(&mut self.sink, &Value::Object(doc)).map_err(io::Error::other)?;
        writeln!(self.sink)
    }
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "nan".into()
    }
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
