//! Tab-separated table reading and writing.
//!
//! Every table the pipeline reads or writes is plain TSV without quoting.
//! Blank lines and `#` comments are skipped, and a leading row equal to the
//! expected header (case-insensitive) is ignored so files with or without a
//! header both load.

use std::fmt::Write as _;

/// A parsed row together with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

impl Row {
    pub fn get(&self, i: usize) -> Option<&str> {
        self.fields.get(i).map(String::as_str)
    }
}

/// Reads rows, requiring at least `header.len()` fields per row.
pub fn read(raw: &str, header: &[&str]) -> Result<Vec<Row>, (usize, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(raw.as_bytes());
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| (n + 1, e.to_string()))?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().all(String::is_empty) {
            continue;
        }
        if rows.is_empty() && is_header(&fields, header) {
            continue;
        }
        if fields.len() < header.len() {
            return Err((
                line,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        rows.push(Row { line, fields });
    }
    Ok(rows)
}

fn is_header(fields: &[String], header: &[&str]) -> bool {
    !header.is_empty()
        && fields.len() >= header.len()
        && fields
            .iter()
            .zip(header)
            .all(|(f, h)| f.eq_ignore_ascii_case(h))
}

/// Renders a table with a header row; cells must not contain tabs or newlines.
pub fn render<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| sanitize(&c)).collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}

fn sanitize(cell: &str) -> String {
    cell.replace(['\t', '\n', '\r'], " ")
}

/// Parses a field, mapping failures to a `(line, message)` pair.
pub fn field<T: std::str::FromStr>(row: &Row, i: usize, name: &str) -> Result<T, (usize, String)> {
    let raw = row.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| (row.line, format!("invalid {name} {raw:?}")))
}
