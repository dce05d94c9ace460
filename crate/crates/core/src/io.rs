//! Plain-text table plumbing shared by the network, demand and output files.
//!
//! All tables are comma separated, UTF-8, with a mandatory header row.
//! LF and CRLF line endings are both accepted on input; output uses LF.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct Row<'a> {
    fields: Vec<&'a str>,
}

impl Row<'_> {
    pub(crate) fn parse<T>(&self, col: usize) -> std::result::Result<T, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self
            .fields
            .get(col)
            .ok_or_else(|| format!("missing column {}", col + 1))?;
        raw.parse()
            .map_err(|e| format!("column {}: cannot parse {raw:?}: {e}", col + 1))
    }
}

/// Streams the data rows of `path` into `each`, checking the header first.
/// Blank lines are skipped. Errors carry the 1-based line number of the
/// offending row.
pub(crate) fn read_table<F>(path: &Path, header: &[&str], mut each: F) -> Result<()>
where
    F: FnMut(u64, Row<'_>) -> std::result::Result<(), String>,
{
    let text = std::fs::read_to_string(path)?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    fn split(l: &str) -> Vec<&str> {
        l.split(',').map(str::trim).collect()
    }
    let mut lines = text.lines().zip(1u64..);

    let found = lines.next().map(|(l, _)| split(l.trim_start_matches('\u{feff}'))).unwrap_or_default();
    if found != header {
        return Err(parse_err(1, format!("expected header `{}`, found `{}`", header.join(","), found.join(","))));
    }

    for (line, no) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split(line);
        if fields.len() != header.len() {
            return Err(parse_err(no, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        each(no, Row { fields }).map_err(|m| parse_err(no, m))?;
    }
    Ok(())
}

/// Formats integer cents as a euro amount with two decimals, exactly.
pub fn fmt_cents(cents: i64) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    let abs = cents.unsigned_abs();
    format!("{sign}{}.{:02}", abs / 100, abs % 100)
}
