use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSection {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl TableSection {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "ragged row in section {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// CSV output with a `#` metadata preamble. Multi-section tables separate
/// sections with a `# section: <name>` line before each header.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub metadata: Vec<(String, String)>,
    pub sections: Vec<TableSection>,
}

impl SweepTable {
    pub fn single(section: TableSection) -> Self {
        Self { metadata: Vec::new(), sections: vec![section] }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn main(&self) -> &TableSection {
        &self.sections[0]
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let multi = self.sections.len() > 1;
        for s in &self.sections {
            if multi {
                writeln!(out, "# section: {}", s.name)?;
            }
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            let csv_err = |e: csv::Error| crate::Error::DataFormat(e.to_string());
            w.write_record(&s.columns).map_err(csv_err)?;
            for row in &s.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| crate::Error::DataFormat(e.to_string()))?;
            out.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 output")
    }
}
