//! Tweet records, ingestion from JSONL/CSV, and deduplication.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::lexicon::contains_url;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("required field {field:?} (source column {column:?}) not found")]
    Schema { field: &'static str, column: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("corpus is empty ({rejected} rows rejected)")]
    Empty { rejected: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guess from the file extension; anything other than `.csv` is JSONL.
    pub fn from_path(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

/// Canonical input fields.
pub const REQUIRED_FIELDS: [&str; 6] = ["tweet_id", "author_id", "text", "likes", "retweets", "replies"];
pub const OPTIONAL_FIELDS: [&str; 4] = ["created_at", "verified", "is_reply", "has_link"];

/// Maps canonical field names to the column names used by a source file.
/// Unmapped fields are looked up under their canonical name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap(BTreeMap<String, String>);

impl FieldMap {
    pub fn new() -> Self {
        FieldMap::default()
    }

    /// Parse `field=column` pairs.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut map = FieldMap::new();
        for p in pairs {
            let p = p.as_ref();
            let (field, column) = p
                .split_once('=')
                .ok_or_else(|| format!("expected field=column, got {p:?}"))?;
            map = map.with(field.trim(), column.trim())?;
        }
        Ok(map)
    }

    pub fn with(mut self, field: &str, column: &str) -> Result<Self, String> {
        if !REQUIRED_FIELDS.contains(&field) && !OPTIONAL_FIELDS.contains(&field) {
            return Err(format!("unknown field {field:?}"));
        }
        self.0.insert(field.to_string(), column.to_string());
        Ok(self)
    }

    pub fn column<'a>(&'a self, field: &'a str) -> &'a str {
        self.0.get(field).map(String::as_str).unwrap_or(field)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub text: String,
    pub created_at: Option<DateTime<Utc>>,
    pub likes: u64,
    pub retweets: u64,
    pub replies: u64,
    pub verified: bool,
    pub is_reply: bool,
    pub has_link: bool,
    pub length_chars: u64,
    pub total_engagement: u64,
}

/// Fields as ingested, before derivation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawTweet {
    pub tweet_id: String,
    pub author_id: String,
    pub text: String,
    pub created_at: Option<DateTime<Utc>>,
    pub likes: u64,
    pub retweets: u64,
    pub replies: u64,
    pub verified: Option<bool>,
    pub is_reply: Option<bool>,
    pub has_link: Option<bool>,
}

/// Fill in link presence, length, and total engagement.
///
/// Length is the number of Unicode scalar values in the raw text.
pub fn derive_features(raw: RawTweet) -> TweetRecord {
    let has_link = raw.has_link.unwrap_or(false) || contains_url(&raw.text);
    let length_chars = raw.text.chars().count() as u64;
    TweetRecord {
        total_engagement: raw.likes + raw.retweets + raw.replies,
        tweet_id: raw.tweet_id,
        author_id: raw.author_id,
        created_at: raw.created_at,
        likes: raw.likes,
        retweets: raw.retweets,
        replies: raw.replies,
        verified: raw.verified.unwrap_or(false),
        is_reply: raw.is_reply.unwrap_or(false),
        has_link,
        length_chars,
        text: raw.text,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupeReport {
    pub raw: usize,
    pub duplicates: usize,
    pub retained: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<String>,
    pub format: Option<InputFormat>,
    pub strict: bool,
    pub field_map: FieldMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<TweetRecord>,
    pub provenance: Provenance,
    pub dedupe_report: DedupeReport,
    /// Rows rejected during lenient ingestion.
    pub diagnostics: Vec<RowDiagnostic>,
}

impl Corpus {
    /// Wrap records as-is; the report counts them all as retained.
    pub fn from_records(records: Vec<TweetRecord>) -> Corpus {
        let n = records.len();
        Corpus {
            records,
            provenance: Provenance::default(),
            dedupe_report: DedupeReport {
                raw: n,
                duplicates: 0,
                retained: n,
            },
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Keep the first record for every tweet id, preserving order.
///
/// Counts accumulate across calls, so `raw == duplicates + retained` holds and
/// a second call changes nothing.
pub fn dedupe(corpus: Corpus) -> Corpus {
    let Corpus {
        records,
        provenance,
        dedupe_report,
        diagnostics,
    } = corpus;
    let before = records.len();
    let mut seen = HashSet::with_capacity(before);
    let records: Vec<TweetRecord> = records
        .into_iter()
        .filter(|r| seen.insert(r.tweet_id.clone()))
        .collect();
    let removed = before - records.len();
    Corpus {
        dedupe_report: DedupeReport {
            raw: dedupe_report.raw,
            duplicates: dedupe_report.duplicates + removed,
            retained: records.len(),
        },
        records,
        provenance,
        diagnostics,
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub format: Option<InputFormat>,
    pub field_map: FieldMap,
    /// Fail on the first malformed row instead of skipping it.
    pub strict: bool,
}

/// Read, validate, derive features, and deduplicate a corpus file.
pub fn load_corpus(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let format = opts.format.unwrap_or_else(|| InputFormat::from_path(path));
    let mut corpus = read_corpus(file, format, opts)?;
    corpus.provenance.source = Some(path.display().to_string());
    Ok(corpus)
}

pub fn read_corpus<R: Read>(reader: R, format: InputFormat, opts: &LoadOptions) -> Result<Corpus, CorpusError> {
    let rows = match format {
        InputFormat::Jsonl => read_jsonl_rows(reader, &opts.field_map)?,
        InputFormat::Csv => read_csv_rows(reader, &opts.field_map)?,
    };

    let mut records = Vec::with_capacity(rows.len());
    let mut diagnostics = Vec::new();
    for (row, parsed) in rows {
        match parsed {
            Ok(raw) => records.push(derive_features(raw)),
            Err(message) if opts.strict => return Err(CorpusError::Row { row, message }),
            Err(message) => diagnostics.push(RowDiagnostic { row, message }),
        }
    }
    if records.is_empty() {
        return Err(CorpusError::Empty {
            rejected: diagnostics.len(),
        });
    }

    // Rejected rows are reported in diagnostics, not in the dedupe counts.
    let mut corpus = Corpus::from_records(records);
    corpus.diagnostics = diagnostics;
    corpus.provenance = Provenance {
        source: None,
        format: Some(format),
        strict: opts.strict,
        field_map: opts.field_map.clone(),
    };
    Ok(dedupe(corpus))
}

type ParsedRow = (usize, Result<RawTweet, String>);

fn read_jsonl_rows<R: Read>(reader: R, map: &FieldMap) -> Result<Vec<ParsedRow>, CorpusError> {
    let mut rows = Vec::new();
    let mut schema_checked = false;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let row = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj = match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => obj,
            Ok(_) => {
                rows.push((row, Err("expected a JSON object".to_string())));
                continue;
            }
            Err(e) => {
                rows.push((row, Err(format!("invalid JSON: {e}"))));
                continue;
            }
        };
        if !schema_checked {
            for field in REQUIRED_FIELDS {
                let column = map.column(field);
                if !obj.contains_key(column) {
                    return Err(CorpusError::Schema {
                        field,
                        column: column.to_string(),
                    });
                }
            }
            schema_checked = true;
        }
        let get = |field: &str| obj.get(map.column(field)).map(cell_from_json);
        rows.push((row, raw_from_cells(get)));
    }
    Ok(rows)
}

fn read_csv_rows<R: Read>(reader: R, map: &FieldMap) -> Result<Vec<ParsedRow>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |field: &str| headers.iter().position(|h| h == map.column(field));
    for field in REQUIRED_FIELDS {
        if index_of(field).is_none() {
            return Err(CorpusError::Schema {
                field,
                column: map.column(field).to_string(),
            });
        }
    }
    let columns: BTreeMap<&str, Option<usize>> = REQUIRED_FIELDS
        .iter()
        .chain(OPTIONAL_FIELDS.iter())
        .map(|&f| (f, index_of(f)))
        .collect();

    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                rows.push((row, Err(format!("malformed CSV record: {e}"))));
                continue;
            }
        };
        let get = |field: &str| {
            columns
                .get(field)
                .copied()
                .flatten()
                .and_then(|i| rec.get(i))
                .map(|s| Cell::Text(s.to_string()))
        };
        rows.push((row, raw_from_cells(get)));
    }
    Ok(rows)
}

enum Cell {
    Null,
    Bool(bool),
    Number(serde_json::Number),
    Text(String),
}

fn cell_from_json(v: &Value) -> Cell {
    match v {
        Value::Null => Cell::Null,
        Value::Bool(b) => Cell::Bool(*b),
        Value::Number(n) => Cell::Number(n.clone()),
        Value::String(s) => Cell::Text(s.clone()),
        other => Cell::Text(other.to_string()),
    }
}

fn raw_from_cells(get: impl Fn(&str) -> Option<Cell>) -> Result<RawTweet, String> {
    let id = |field: &str| -> Result<String, String> {
        match get(field) {
            Some(Cell::Text(s)) if !s.trim().is_empty() => Ok(s.trim().to_string()),
            Some(Cell::Number(n)) => Ok(n.to_string()),
            _ => Err(format!("missing or empty {field}")),
        }
    };
    let count = |field: &str| -> Result<u64, String> {
        match get(field) {
            Some(Cell::Number(n)) => n.as_u64().ok_or_else(|| format!("{field}: {n} is not a nonnegative integer")),
            Some(Cell::Text(s)) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("{field}: {s:?} is not a nonnegative integer")),
            _ => Err(format!("missing {field}")),
        }
    };
    let flag = |field: &str| -> Result<Option<bool>, String> {
        match get(field) {
            None | Some(Cell::Null) => Ok(None),
            Some(Cell::Bool(b)) => Ok(Some(b)),
            Some(Cell::Number(n)) => match n.as_u64() {
                Some(0) => Ok(Some(false)),
                Some(1) => Ok(Some(true)),
                _ => Err(format!("{field}: {n} is not a boolean")),
            },
            Some(Cell::Text(s)) => match s.trim().to_ascii_lowercase().as_str() {
                "" => Ok(None),
                "true" | "1" | "yes" => Ok(Some(true)),
                "false" | "0" | "no" => Ok(Some(false)),
                _ => Err(format!("{field}: {s:?} is not a boolean")),
            },
        }
    };
    let text = match get("text") {
        Some(Cell::Text(s)) => s,
        Some(Cell::Number(n)) => n.to_string(),
        _ => return Err("missing text".to_string()),
    };
    let created_at = match get("created_at") {
        None | Some(Cell::Null) => None,
        Some(Cell::Text(s)) if s.trim().is_empty() => None,
        Some(Cell::Text(s)) => Some(parse_timestamp(s.trim()).ok_or_else(|| format!("created_at: cannot parse {s:?}"))?),
        Some(_) => return Err("created_at: expected a timestamp string".to_string()),
    };

    Ok(RawTweet {
        tweet_id: id("tweet_id")?,
        author_id: id("author_id")?,
        text,
        created_at,
        likes: count("likes")?,
        retweets: count("retweets")?,
        replies: count("replies")?,
        verified: flag("verified")?,
        is_reply: flag("is_reply")?,
        has_link: flag("has_link")?,
    })
}

/// RFC 3339, or the legacy platform format `Wed Oct 10 20:19:24 +0000 2018`.
fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y"))
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// Canonical JSONL dump, one record per line in corpus order.
pub fn write_jsonl<W: Write>(records: &[TweetRecord], mut out: W) -> Result<(), CorpusError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
