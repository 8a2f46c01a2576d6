//! Tweet records, text cleaning, embedding files and a hashing embedder.
//!
//! # Tweet files (NDJSON)
//!
//! One JSON object per line; `created_at` (RFC 3339) and `label` (0 or 1)
//! are optional, blank lines are skipped:
//!
//! ```text
//! {"id":"1402","text":"Marching downtown today","created_at":"2020-06-01T14:00:00Z","label":1}
//! {"id":"1403","text":"new season starts friday","label":0}
//! ```
//!
//! # Embedding files (CSV)
//!
//! A header `id,v0,...,v{d-1}` declares the dimension, then one row per id.
//! Values are written in shortest round-trip form, so write-then-read is
//! bit-exact:
//!
//! ```text
//! id,v0,v1,v2
//! 1402,0.25,-1.5,0.125
//! 1403,0,0.5,1e-7
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, SecondsFormat};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Matrix, PointCloud};

pub const DEFAULT_EMBEDDING_DIM: usize = 768;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    /// UTC seconds since the epoch.
    #[serde(default, with = "rfc3339", skip_serializing_if = "Option::is_none")]
    pub created_at: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

mod rfc3339 {
    use chrono::{DateTime, SecondsFormat};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<i64>, s: S) -> Result<S::Ok, S::Error> {
        match v.and_then(|t| DateTime::from_timestamp(t, 0)) {
            Some(dt) => s.serialize_str(&dt.to_rfc3339_opts(SecondsFormat::Secs, true)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<i64>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| {
            DateTime::parse_from_rfc3339(&s)
                .map(|dt| dt.timestamp())
                .map_err(|e| D::Error::custom(format!("bad RFC 3339 timestamp '{s}': {e}")))
        })
        .transpose()
    }
}

/// RFC 3339 rendering of UTC seconds (`2020-06-01T14:00:00Z`).
pub fn format_timestamp(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.to_string())
}

pub fn read_tweets(path: &Path) -> Result<Vec<TweetRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: lineno + 1,
            message,
        };
        let rec: TweetRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if rec.id.is_empty() {
            return Err(parse_err("empty tweet id".into()));
        }
        if rec.label.is_some_and(|l| l > 1) {
            return Err(parse_err(format!("label {} is not 0 or 1", rec.label.unwrap_or(0))));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_tweets(path: &Path, records: &[TweetRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strip_patterns() -> &'static [Regex; 3] {
    static RE: OnceLock<[Regex; 3]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            Regex::new(r"(?i)\b(?:https?://|www\.)\S*").expect("url pattern"),
            Regex::new(r"<[^>]*>").expect("html pattern"),
            Regex::new(r"#[\p{L}\p{N}_]+").expect("hashtag pattern"),
        ]
    })
}

/// Removes URLs, HTML tags and hashtags, lowercases, drops every character
/// that is not a letter, digit or whitespace (emoji, punctuation, symbols)
/// and collapses whitespace.
pub fn clean_text(raw: &str) -> String {
    let mut s = raw.to_owned();
    for re in strip_patterns() {
        s = re.replace_all(&s, " ").into_owned();
    }
    let lowered = s.to_lowercase();
    let kept: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Dimension declared by the header of an embedding CSV.
pub fn embedding_file_dim(path: &Path) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = String::new();
    BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let cols = header.trim_end().split(',').count();
    if !header.starts_with("id,") || cols < 2 {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: "header must be id,v0,...".into(),
        });
    }
    Ok(cols - 1)
}

/// Reads an embedding CSV, checking that its declared dimension is
/// `expected_dim`. Rows keep file order.
pub fn load_embeddings(path: &Path, expected_dim: usize) -> Result<(Vec<String>, PointCloud)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty embedding file".into())),
    };
    if header.get(0) != Some("id") {
        return Err(parse_err(1, "header must start with 'id'".into()));
    }
    let dim = header.len() - 1;
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("v{k}") {
            return Err(parse_err(1, format!("header column {} should be 'v{k}', found '{name}'", k + 1)));
        }
    }
    if dim != expected_dim {
        return Err(parse_err(
            1,
            format!("file declares dimension {dim}, expected {expected_dim}"),
        ));
    }

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut data = Vec::new();
    for (row, rec) in records.enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != dim + 1 {
            return Err(parse_err(
                line,
                format!("row has {} values, expected {dim}", rec.len().saturating_sub(1)),
            ));
        }
        let id = rec[0].to_owned();
        if id.is_empty() {
            return Err(parse_err(line, "empty id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(parse_err(line, format!("duplicate id '{id}'")));
        }
        for (k, field) in rec.iter().skip(1).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("v{k}: '{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("v{k}: non-finite value '{field}'")));
            }
            data.push(v);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(parse_err(2, "embedding file has no rows".into()));
    }
    let cloud = PointCloud::new(Matrix::from_vec(ids.len(), dim, data)?)?;
    Ok((ids, cloud))
}

pub fn write_embeddings(path: &Path, ids: &[String], cloud: &PointCloud) -> Result<()> {
    if ids.len() != cloud.len() {
        return Err(Error::invalid("id count differs from point count"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "id").map_err(io)?;
    for k in 0..cloud.dim() {
        write!(w, ",v{k}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (id, p) in ids.iter().zip(cloud.points().iter_rows()) {
        if id.contains([',', '"', '\n', '\r']) {
            return Err(Error::invalid(format!("id '{id}' contains CSV metacharacters")));
        }
        write!(w, "{id}").map_err(io)?;
        for v in p {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HashedEmbedding {
    pub vector: Vec<f64>,
    /// The text had no tokens; `vector` is all zeros.
    pub empty: bool,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], basis: u64) -> u64 {
    bytes
        .iter()
        .fold(basis, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Signed feature hashing of whitespace tokens into `dim` buckets, then L2
/// normalization. The bucket and the sign come from two independently seeded
/// FNV-1a hashes, so the output is stable across platforms and releases.
pub fn hash_embed(text: &str, dim: usize) -> HashedEmbedding {
    let mut vector = vec![0.0; dim];
    let mut tokens = 0usize;
    for tok in text.split_whitespace() {
        tokens += 1;
        let bucket = (fnv1a(tok.as_bytes(), FNV_OFFSET) % dim as u64) as usize;
        let sign = if fnv1a(tok.as_bytes(), FNV_OFFSET ^ 0x5bd1_e995) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        vector[bucket] += sign;
    }
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        vector.iter_mut().for_each(|v| *v /= norm);
    }
    HashedEmbedding {
        vector,
        empty: tokens == 0 || norm == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleaning_examples() {
        assert_eq!(clean_text("Check #March4Justice at https://t.co/x !"), "check at");
        assert_eq!(clean_text(""), "");
        assert_eq!(clean_text("HELLO World"), "hello world");
        assert_eq!(
            clean_text("<b>Justice</b> now!! 😀 see www.example.org/a?b=1 #BLM"),
            "justice now see"
        );
        assert_eq!(clean_text("Don't   stop\tbelieving…"), "don t stop believing");
    }

    #[test]
    fn tweets_round_trip_with_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ndjson");
        let recs = vec![
            TweetRecord {
                id: "a".into(),
                text: "hi \"there\"".into(),
                created_at: Some(1_590_969_600),
                label: Some(1),
            },
            TweetRecord {
                id: "b".into(),
                text: String::new(),
                created_at: None,
                label: None,
            },
        ];
        write_tweets(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(r#"{"id":"a","text":"hi \"there\"","created_at":"2020-06-01T00:00:00Z","label":1}"#));
        assert_eq!(read_tweets(&path).unwrap(), recs);
    }

    #[test]
    fn tweet_parse_errors_carry_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ndjson");
        std::fs::write(&path, "{\"id\":\"a\",\"text\":\"x\"}\n\n{\"id\":\"b\",\"text\":\"y\",\"created_at\":\"yesterday\"}\n").unwrap();
        match read_tweets(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "{\"id\":\"a\",\"text\":\"x\",\"label\":2}\n").unwrap();
        assert!(matches!(read_tweets(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn embeddings_shape_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(&path, "id,v0,v1,v2,v3\na,1,2,3,4\nb,0,0,0,0\nc,-1,0.5,2e3,7\n").unwrap();
        assert_eq!(embedding_file_dim(&path).unwrap(), 4);
        let (ids, cloud) = load_embeddings(&path, 4).unwrap();
        assert_eq!(ids, vec!["a", "b", "c"]);
        assert_eq!((cloud.len(), cloud.dim()), (3, 4));
        assert_eq!(cloud.point(2), &[-1.0, 0.5, 2000.0, 7.0]);

        assert!(matches!(load_embeddings(&path, 5), Err(Error::Parse { line: 1, .. })));

        std::fs::write(&path, "id,v0,v1,v2,v3\na,1,2,3,4\nb,1,2,3\n").unwrap();
        assert!(matches!(load_embeddings(&path, 4), Err(Error::Parse { line: 3, .. })));

        std::fs::write(&path, "id,v0\na,1\na,2\n").unwrap();
        assert!(matches!(load_embeddings(&path, 1), Err(Error::Parse { line: 3, .. })));

        std::fs::write(&path, "id,v0\na,NaN\n").unwrap();
        assert!(matches!(load_embeddings(&path, 1), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn hash_embedding_basics() {
        let a = hash_embed("protest downtown tonight", 64);
        assert_eq!(a, hash_embed("protest downtown tonight", 64));
        let n: f64 = a.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= 1e-9);
        let e = hash_embed("", 64);
        assert!(e.empty && e.vector.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disjoint_vocabularies_are_nearly_orthogonal() {
        // 100 pairs of 8-token texts over disjoint vocabularies
        let mut worst = 0.0_f64;
        let mut high = 0;
        for p in 0..100 {
            let a: Vec<String> = (0..8).map(|t| format!("alpha{p}x{t}")).collect();
            let b: Vec<String> = (0..8).map(|t| format!("beta{p}y{t}")).collect();
            let (ea, eb) = (hash_embed(&a.join(" "), 512), hash_embed(&b.join(" "), 512));
            let cos: f64 = ea.vector.iter().zip(&eb.vector).map(|(x, y)| x * y).sum();
            worst = worst.max(cos.abs());
            if cos.abs() > 0.2 {
                high += 1;
            }
        }
        assert!(high <= 5, "{high} pairs above 0.2 (worst {worst})");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn clean_is_idempotent(s in "\\PC{0,60}") {
                let once = clean_text(&s);
                prop_assert_eq!(clean_text(&once), once.clone());
            }

            #[test]
            fn clean_is_idempotent_on_tweets(s in "(#[a-z]{1,5}|https?://[a-z./]{1,8}|<[a-z]{1,3}>|[A-Za-z]{1,6}|[ !?.,]|😀){0,12}") {
                let once = clean_text(&s);
                prop_assert_eq!(clean_text(&once), once.clone());
            }

            #[test]
            fn hashed_vectors_have_unit_norm(words in proptest::collection::vec("[a-z]{1,8}", 1..20)) {
                let e = hash_embed(&words.join(" "), 128);
                if !e.empty {
                    let n: f64 = e.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
                    prop_assert!((n - 1.0).abs() <= 1e-9);
                }
            }

            #[test]
            fn embeddings_round_trip_bit_exact(rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..10)) {
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("e.csv");
                let ids: Vec<String> = (0..rows.len()).map(|i| format!("t{i}")).collect();
                let cloud = PointCloud::from_rows(&rows).unwrap();
                write_embeddings(&path, &ids, &cloud).unwrap();
                let (ids2, cloud2) = load_embeddings(&path, 3).unwrap();
                prop_assert_eq!(ids2, ids);
                for (a, b) in cloud.points().as_slice().iter().zip(cloud2.points().as_slice()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
