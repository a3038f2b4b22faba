//! CSV and JSON writers. Every CSV starts with one `#` line of metadata so
//! the file stays loadable by ordinary CSV readers.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// `key=value` pairs for the metadata line, in insertion order.
#[derive(Debug, Default)]
pub struct Meta {
    command: &'static str,
    pairs: Vec<(String, String)>,
}

impl Meta {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            pairs: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.pairs.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    fn line(&self) -> String {
        let mut line = format!("# arete {} {}", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.pairs {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }
}

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub struct Csv<W: Write> {
    out: W,
}

impl<W: Write> Csv<W> {
    pub fn new(mut out: W, meta: &Meta, header: &[&str]) -> io::Result<Self> {
        writeln!(out, "{}", meta.line())?;
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, fields: &[&dyn Display]) -> io::Result<()> {
        let mut first = true;
        for f in fields {
            if !first {
                write!(self.out, ",")?;
            }
            write!(self.out, "{f}")?;
            first = false;
        }
        writeln!(self.out)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub fn json<T: Serialize>(mut out: impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()
}
