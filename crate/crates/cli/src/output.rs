//! Deterministic CSV output with a `#` metadata block.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use qcavity::dynamics::fmt;

/// Numeric columns sharing one row index.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything a scenario produces. The first table is the primary output;
/// further tables go to sibling files named `<stem>_<suffix>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub tables: Vec<(String, Table)>,
    /// `(key, value)` pairs recorded in the metadata and echoed to the user.
    pub summary: Vec<(String, String)>,
    /// Parameters derived while resolving the config.
    pub resolved: Vec<(String, String)>,
}

impl Report {
    pub fn new(primary: Table) -> Self {
        Self { tables: vec![(String::new(), primary)], summary: Vec::new(), resolved: Vec::new() }
    }

    pub fn add_table(&mut self, suffix: &str, table: Table) {
        self.tables.push((suffix.to_string(), table));
    }

    pub fn summarize(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn resolve(&mut self, key: impl Into<String>, value: impl ToString) {
        self.resolved.push((key.into(), value.to_string()));
    }
}

fn write_table<W: Write>(mut w: W, header: &[String], table: &Table) -> io::Result<()> {
    for line in header {
        writeln!(w, "{line}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&table.columns)?;
    for row in &table.rows {
        out.write_record(row.iter().map(|&x| fmt(x)))?;
    }
    out.flush()
}

/// Metadata lines: tool version, the resolved config and the results.
pub fn metadata(config_toml: &str, report: &Report) -> Vec<String> {
    let mut lines = vec![format!("# qcavity {}", env!("CARGO_PKG_VERSION")), "# config:".to_string()];
    lines.extend(config_toml.lines().filter(|l| !l.is_empty()).map(|l| format!("#   {l}")));
    if !report.resolved.is_empty() {
        lines.push("# resolved:".into());
        lines.extend(report.resolved.iter().map(|(k, v)| format!("#   {k} = {v}")));
    }
    if !report.summary.is_empty() {
        lines.push("# results:".into());
        lines.extend(report.summary.iter().map(|(k, v)| format!("#   {k} = {v}")));
    }
    lines
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Writes every table, to files derived from `path` or to standard output.
/// Returns the files written.
pub fn write_report(path: Option<&Path>, config_toml: &str, report: &Report) -> io::Result<Vec<PathBuf>> {
    let header = metadata(config_toml, report);
    let mut written = Vec::new();
    match path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            for (suffix, table) in &report.tables {
                let target = sibling(path, suffix);
                write_table(BufWriter::new(File::create(&target)?), &header, table)?;
                written.push(target);
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for (i, (suffix, table)) in report.tables.iter().enumerate() {
                if i > 0 {
                    writeln!(lock, "\n# table: {suffix}")?;
                }
                write_table(&mut lock, if i == 0 { &header } else { &[] }, table)?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_preceded_by_comment_block() {
        let mut t = Table::new(vec!["t".into(), "x".into()]);
        t.push(vec![0.0, 0.5]);
        let mut report = Report::new(t.clone());
        report.summarize("slope", 2.0);
        let mut buf = Vec::new();
        write_table(&mut buf, &metadata("kind = \"evolve\"\n", &report), &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1..].iter().take_while(|l| l.starts_with('#')).any(|l| l.contains("slope = 2")));
        assert_eq!(lines[lines.len() - 2], "t,x");
        assert_eq!(lines[lines.len() - 1], "0e0,5e-1");
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/a.csv"), "summary"), PathBuf::from("out/a_summary.csv"));
        assert_eq!(sibling(Path::new("out/a.csv"), ""), PathBuf::from("out/a.csv"));
    }
}
