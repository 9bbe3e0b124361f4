//! One JSON value per line.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<usize, JsonlError> {
    let io = |e: std::io::Error| JsonlError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut out = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut count = 0;
    for item in items {
        serde_json::to_writer(&mut out, &item).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
        count += 1;
    }
    out.flush().map_err(io)?;
    Ok(count)
}

/// Parses every non-blank line, keeping the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, JsonlError> {
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| JsonlError::Io {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let at = |message: String| JsonlError::Line {
            path: shown.clone(),
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| at(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, serde_json::from_str(&line).map_err(|e| at(e.to_string()))?));
    }
    Ok(out)
}
