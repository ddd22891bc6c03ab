//! In-memory CSV tables with a versioned schema comment line.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: String,
    pub version: u32,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, version: u32, header: &[&str]) -> Self {
        Table {
            schema: schema.to_string(),
            version,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses column `name` of every row as `f64`.
    pub fn f64_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column(name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }

    /// First line is `# schema=<name> version=<v>`, then a plain CSV body.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema={} version={}", self.schema, self.version)?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Fixed formatting for floats in CSV output.
pub fn fmt(v: f64) -> String {
    format!("{v:.10e}")
}
