//! Line-delimited JSON record container shared by corpus, feature, metric
//! and action-log files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Decodes one record, naming the offending field on failure.
pub fn decode_line<T: DeserializeOwned>(file: &str, line_no: usize, line: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(line);
    match serde_path_to_error::deserialize::<_, T>(&mut de) {
        Ok(v) => {
            de.end().map_err(|e| Error::MalformedRecord {
                file: file.to_string(),
                line: line_no,
                field: "<record>".into(),
                message: e.to_string(),
            })?;
            Ok(v)
        }
        Err(err) => {
            let path = err.path().to_string();
            let inner = err.into_inner();
            let message = inner.to_string();
            let field = if path == "." || path.is_empty() {
                missing_field_name(&message).unwrap_or_else(|| "<record>".into())
            } else {
                path
            };
            Err(Error::MalformedRecord {
                file: file.to_string(),
                line: line_no,
                field,
                message,
            })
        }
    }
}

fn missing_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

/// Reads every non-blank line of `path` as a record. Line numbers are 1-based.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(decode_line(&label, idx + 1, &line)?);
    }
    Ok(out)
}

pub fn write_records<'a, T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize)]
    #[allow(dead_code)]
    struct Rec {
        id: String,
        score: i64,
    }

    #[test]
    fn names_wrong_type_field() {
        let err = decode_line::<Rec>("x.jsonl", 3, r#"{"id":"a","score":"high"}"#).unwrap_err();
        match err {
            Error::MalformedRecord { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "score");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn names_missing_field() {
        let err = decode_line::<Rec>("x.jsonl", 1, r#"{"id":"a"}"#).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { ref field, .. } if field == "score"));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(decode_line::<Rec>("x.jsonl", 1, "{not json").is_err());
    }
}
