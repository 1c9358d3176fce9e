use std::io::{self, Write};

use crate::format::fmt_g;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(u64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Real(v) => fmt_g(v),
            Cell::Count(n) => n.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Count(v as u64)
    }
}

/// Single-writer CSV output; every row is flushed as soon as it is written.
pub struct CsvSink<W: Write> {
    out: W,
    columns: usize,
    rows: usize,
    warnings: usize,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W, comments: &[String], columns: &[&str]) -> io::Result<Self> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        out.flush()?;
        Ok(CsvSink {
            out,
            columns: columns.len(),
            rows: 0,
            warnings: 0,
        })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        assert_eq!(cells.len(), self.columns, "row width must match header");
        let line: Vec<String> = cells.iter().map(|c| c.render()).collect();
        writeln!(self.out, "{}", line.join(","))?;
        self.rows += 1;
        self.out.flush()
    }

    /// A `# warning:` comment line standing in for a skipped point.
    pub fn warning(&mut self, message: &str) -> io::Result<()> {
        writeln!(self.out, "# warning: {message}")?;
        self.warnings += 1;
        self.out.flush()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn warnings(&self) -> usize {
        self.warnings
    }
}
