//! Reading id streams from files.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::Universe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One decimal id per line.
    #[default]
    Text,
    /// Fixed-width 8-byte little-endian unsigned ids.
    U64le,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "u64le" => Ok(Format::U64le),
            other => Err(Error::invalid(
                "format",
                format!("`{other}` is not text or u64le"),
            )),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Text => "text",
            Format::U64le => "u64le",
        })
    }
}

/// Reads every id from `reader`. Blank lines are skipped in text input. With
/// a universe, ids outside `[1, u]` are rejected with their position.
pub fn read_ids<R: Read>(
    reader: R,
    format: Format,
    universe: Option<Universe>,
) -> Result<Vec<u64>> {
    let mut ids = Vec::new();
    let check = |id: u64, location: String| match universe {
        Some(u) if u.check(id).is_err() => Err(Error::Parse {
            location,
            reason: format!("id {id} is outside [1, {}]", u.size()),
        }),
        _ => Ok(()),
    };
    match format {
        Format::Text => {
            for (index, line) in BufReader::new(reader).lines().enumerate() {
                let line_no = index + 1;
                let line = line.map_err(|e| Error::Parse {
                    location: format!("line {line_no}"),
                    reason: e.to_string(),
                })?;
                let text = line.trim();
                if text.is_empty() {
                    continue;
                }
                let id = text.parse::<u64>().map_err(|e| Error::Parse {
                    location: format!("line {line_no}"),
                    reason: format!("`{text}`: {e}"),
                })?;
                check(id, format!("line {line_no}"))?;
                ids.push(id);
            }
        }
        Format::U64le => {
            let mut bytes = Vec::new();
            BufReader::new(reader)
                .read_to_end(&mut bytes)
                .map_err(|e| Error::Parse {
                    location: "byte 0".into(),
                    reason: e.to_string(),
                })?;
            let records = bytes.chunks_exact(8);
            if !records.remainder().is_empty() {
                return Err(Error::Parse {
                    location: format!("byte offset {}", bytes.len() - records.remainder().len()),
                    reason: format!("truncated record of {} bytes", records.remainder().len()),
                });
            }
            for (index, record) in records.enumerate() {
                let id = u64::from_le_bytes(record.try_into().expect("8-byte chunk"));
                check(id, format!("byte offset {}", index * 8))?;
                ids.push(id);
            }
        }
    }
    Ok(ids)
}

pub fn ingest_file(
    path: impl AsRef<Path>,
    format: Format,
    universe: Option<Universe>,
) -> Result<Vec<u64>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_ids(file, format, universe)
}

/// Writes ids in the given format.
pub fn write_ids(ids: &[u64], format: Format) -> Vec<u8> {
    match format {
        Format::Text => ids
            .iter()
            .map(|id| format!("{id}\n"))
            .collect::<String>()
            .into_bytes(),
        Format::U64le => ids.iter().flat_map(|id| id.to_le_bytes()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_input() {
        assert_eq!(
            read_ids("1\n2\n1\n".as_bytes(), Format::Text, None).unwrap(),
            [1, 2, 1]
        );
        assert_eq!(
            read_ids(" 5 \n\n6".as_bytes(), Format::Text, None).unwrap(),
            [5, 6]
        );
    }

    #[test]
    fn binary_input() {
        let bytes = write_ids(&[1, 2, 1], Format::U64le);
        assert_eq!(bytes.len(), 24);
        assert_eq!(
            read_ids(&bytes[..], Format::U64le, None).unwrap(),
            [1, 2, 1]
        );
    }

    #[test]
    fn malformed_line_is_named() {
        let err = read_ids("1\n2\nx3\n".as_bytes(), Format::Text, None).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn truncated_record_is_located() {
        let mut bytes = write_ids(&[7, 8], Format::U64le);
        bytes.pop();
        let err = read_ids(&bytes[..], Format::U64le, None).unwrap_err();
        assert!(err.to_string().contains("byte offset 8"), "{err}");
    }

    #[test]
    fn universe_is_enforced() {
        let u = Universe::new(10).ok();
        let err = read_ids("3\n11\n".as_bytes(), Format::Text, u).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read_ids(&write_ids(&[0], Format::U64le)[..], Format::U64le, u).unwrap_err();
        assert!(err.to_string().contains("byte offset 0"), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ids.bin");
        fs::write(&path, write_ids(&[4, 4, 9], Format::U64le)).unwrap();
        assert_eq!(ingest_file(&path, Format::U64le, None).unwrap(), [4, 4, 9]);
        assert!(matches!(
            ingest_file(dir.path().join("missing"), Format::Text, None),
            Err(Error::Io { .. })
        ));
    }
}
