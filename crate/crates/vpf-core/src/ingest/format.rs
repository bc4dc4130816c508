//! Format drivers: turn one source file into generic string rows.
//!
//! Each driver produces the same shape — a list of column->cell maps — so
//! the typed row builders in the parent module only deal with one input
//! representation regardless of how a country exports its data.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::Value;

use super::IngestError;
use crate::config::SourceFormat;

/// One source row as raw text cells keyed by source column name.
pub type RawRow = BTreeMap<String, String>;

pub fn read_raw_rows(
    path: &Path,
    format: SourceFormat,
    delimiter: char,
) -> Result<Vec<RawRow>, IngestError> {
    let mut rows = Vec::new();
    each_raw_row(path, format, delimiter, &mut |row| rows.push(row))?;
    Ok(rows)
}

/// Visit every source row. Delimited files are streamed record by record
/// so multi-million-row exports never materialize in memory; the JSON and
/// HTML formats parse whole documents and are materialized.
pub fn each_raw_row(
    path: &Path,
    format: SourceFormat,
    delimiter: char,
    visit: &mut dyn FnMut(RawRow),
) -> Result<(), IngestError> {
    match format {
        SourceFormat::Delimited => stream_delimited(path, delimiter, visit),
        SourceFormat::JsonRecords => {
            for row in read_json_records(path)? {
                visit(row);
            }
            Ok(())
        }
        SourceFormat::OdataJson => {
            for row in read_odata_json(path)? {
                visit(row);
            }
            Ok(())
        }
        SourceFormat::HtmlTableExport => {
            for row in read_html_table(path)? {
                visit(row);
            }
            Ok(())
        }
    }
}

/// Header columns of a delimited file (for required-field checks).
pub fn delimited_headers(path: &Path, delimiter: char) -> Result<Vec<String>, IngestError> {
    let file = fs::File::open(path).map_err(|e| unreadable(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(true)
        .from_reader(file);
    Ok(reader
        .headers()
        .map_err(|e| unsupported(path, format!("cannot read header row: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

fn stream_delimited(
    path: &Path,
    delimiter: char,
    visit: &mut dyn FnMut(RawRow),
) -> Result<(), IngestError> {
    let file = fs::File::open(path).map_err(|e| unreadable(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| unsupported(path, format!("cannot read header row: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let mut row = RawRow::new();
                for (i, header) in headers.iter().enumerate() {
                    if let Some(cell) = record.get(i) {
                        row.insert(header.clone(), cell.to_string());
                    }
                }
                visit(row);
            }
            Err(e) => return Err(unsupported(path, format!("bad record: {e}"))),
        }
    }
    Ok(())
}

fn unreadable(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::FileUnreadable {
        path: path.display().to_string(),
        source,
    }
}

fn unsupported(path: &Path, message: impl Into<String>) -> IngestError {
    IngestError::UnsupportedFormat {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Flatten a JSON value into a cell string. Scalar arrays become
/// `;`-separated lists so attendee arrays survive the trip.
fn value_to_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(value_to_cell)
            .collect::<Vec<_>>()
            .join(";"),
        Value::Object(_) => value.to_string(),
    }
}

fn object_to_row(value: &Value, path: &Path) -> Result<RawRow, IngestError> {
    let obj = value
        .as_object()
        .ok_or_else(|| unsupported(path, "expected a JSON object per record"))?;
    Ok(obj
        .iter()
        .map(|(k, v)| (k.clone(), value_to_cell(v)))
        .collect())
}

/// A top-level JSON array of objects, or one JSON object per line.
fn read_json_records(path: &Path) -> Result<Vec<RawRow>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| unreadable(path, e))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let values: Vec<Value> = serde_json::from_str(trimmed)
            .map_err(|e| unsupported(path, format!("bad JSON array: {e}")))?;
        values.iter().map(|v| object_to_row(v, path)).collect()
    } else {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(line)
                .map_err(|e| unsupported(path, format!("bad JSON on line {}: {e}", i + 1)))?;
            rows.push(object_to_row(&value, path)?);
        }
        Ok(rows)
    }
}

/// ODATA-style envelope: `{"value": [ {...}, ... ], ...}`.
fn read_odata_json(path: &Path) -> Result<Vec<RawRow>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| unreadable(path, e))?;
    let envelope: Value = serde_json::from_str(&text)
        .map_err(|e| unsupported(path, format!("bad JSON: {e}")))?;
    let values = envelope
        .get("value")
        .and_then(Value::as_array)
        .ok_or_else(|| unsupported(path, "missing \"value\" array in ODATA envelope"))?;
    values.iter().map(|v| object_to_row(v, path)).collect()
}

/// First `<table>` of a saved HTML page; first row is the header.
fn read_html_table(path: &Path) -> Result<Vec<RawRow>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| unreadable(path, e))?;
    let table = slice_between_tags(&text, "table")
        .ok_or_else(|| unsupported(path, "no <table> element found"))?;
    let mut table_rows: Vec<Vec<String>> = Vec::new();
    let mut rest = table;
    while let Some((row_html, after)) = next_element(rest, "tr") {
        let mut cells = Vec::new();
        let mut cell_rest = row_html;
        loop {
            let th = next_element(cell_rest, "th");
            let td = next_element(cell_rest, "td");
            // Take whichever cell starts first.
            let pick = match (&th, &td) {
                (Some((a, _)), Some((b, _))) => {
                    if offset_of(cell_rest, a) <= offset_of(cell_rest, b) {
                        th
                    } else {
                        td
                    }
                }
                (Some(_), None) => th,
                (None, Some(_)) => td,
                (None, None) => None,
            };
            match pick {
                Some((cell_html, after_cell)) => {
                    cells.push(unescape_entities(strip_tags(cell_html).trim()));
                    cell_rest = after_cell;
                }
                None => break,
            }
        }
        if !cells.is_empty() {
            table_rows.push(cells);
        }
        rest = after;
    }
    let mut iter = table_rows.into_iter();
    let headers = iter
        .next()
        .ok_or_else(|| unsupported(path, "table has no header row"))?;
    let mut rows = Vec::new();
    for cells in iter {
        let mut row = RawRow::new();
        for (i, header) in headers.iter().enumerate() {
            if let Some(cell) = cells.get(i) {
                row.insert(header.clone(), cell.clone());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn offset_of(hay: &str, inner: &str) -> usize {
    inner.as_ptr() as usize - hay.as_ptr() as usize
}

/// Case-insensitive search for `<tag ...>` returning (inner, after-close).
fn next_element<'a>(html: &'a str, tag: &str) -> Option<(&'a str, &'a str)> {
    let lower = html.to_lowercase();
    let open_pat = format!("<{tag}");
    let close_pat = format!("</{tag}>");
    let mut start = 0;
    // Find a real opening tag (followed by '>' or whitespace, not a prefix
    // of a longer tag name like <thead>).
    let open_at = loop {
        let at = lower[start..].find(&open_pat)? + start;
        let after = lower.as_bytes().get(at + open_pat.len());
        match after {
            Some(b'>') | Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r') | Some(b'/') => {
                break at
            }
            _ => start = at + open_pat.len(),
        }
    };
    let content_start = lower[open_at..].find('>')? + open_at + 1;
    let close_at = lower[content_start..].find(&close_pat)? + content_start;
    let inner = &html[content_start..close_at];
    let after = &html[close_at + close_pat.len()..];
    Some((inner, after))
}

fn slice_between_tags<'a>(html: &'a str, tag: &str) -> Option<&'a str> {
    next_element(html, tag).map(|(inner, _)| inner)
}

fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut in_tag = false;
    for ch in html.chars() {
        match ch {
            '<' => in_tag = true,
            '>' => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

fn unescape_entities(text: &str) -> String {
    text.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&nbsp;", " ")
}
