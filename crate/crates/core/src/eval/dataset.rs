//! Benchmark dataset rows and CSV manifest ingestion.
//!
//! Manifest format (UTF-8, comma-separated, `.` decimal):
//!
//! ```csv
//! content_id,ref_path,dst_path,mos[,metric:NAME...]
//! ```
//!
//! Paths are resolved relative to the manifest's directory. Optional
//! `metric:NAME` columns attach externally computed raw scores (e.g. from
//! metrics this crate does not implement) that the split protocol can
//! evaluate alongside the built-in ones.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One benchmark row: a distorted image, its reference, the subjective
/// score, and any externally supplied metric scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    /// Groups a source image with all of its distorted versions; splits
    /// partition these, never individual records.
    pub content_id: String,
    pub ref_path: PathBuf,
    pub dst_path: PathBuf,
    pub mos: f64,
    /// Raw scores keyed by metric name.
    pub scores: BTreeMap<String, f64>,
}

const REQUIRED_COLUMNS: [&str; 4] = ["content_id", "ref_path", "dst_path", "mos"];
const METRIC_PREFIX: &str = "metric:";

/// Parse and validate a manifest into records.
///
/// Rejects unparseable rows (with their line number), non-existent files,
/// duplicate distorted paths, and content ids that map to more than one
/// reference.
pub fn ingest_dataset(manifest: impl AsRef<Path>) -> Result<Vec<ScoredRecord>> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(manifest)
        .map_err(|e| Error::io(manifest, std::io::Error::other(e)))?;

    let parse_err = |line: u64, detail: String| Error::ManifestParse {
        path: manifest.to_path_buf(),
        line,
        detail,
    };

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < REQUIRED_COLUMNS.len() || names[..4] != REQUIRED_COLUMNS {
        return Err(parse_err(
            1,
            format!("header must start with {REQUIRED_COLUMNS:?}, got {names:?}"),
        ));
    }
    let mut metric_names = Vec::new();
    for &name in &names[4..] {
        match name.strip_prefix(METRIC_PREFIX) {
            Some(metric) if !metric.is_empty() => metric_names.push(metric.to_string()),
            _ => {
                return Err(parse_err(
                    1,
                    format!("unknown column {name:?}; extra columns must be metric:NAME"),
                ))
            }
        }
    }

    let resolve = |raw: &str| -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let mut records = Vec::new();
    let mut ref_by_content: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut seen_dst: BTreeMap<PathBuf, u64> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != names.len() {
            return Err(parse_err(
                line,
                format!("{} fields, expected {}", row.len(), names.len()),
            ));
        }

        let content_id = row[0].to_string();
        if content_id.is_empty() {
            return Err(parse_err(line, "empty content_id".into()));
        }
        let ref_path = resolve(&row[1]);
        let dst_path = resolve(&row[2]);
        let mos: f64 = row[3]
            .parse()
            .map_err(|e| parse_err(line, format!("mos {:?}: {e}", &row[3])))?;
        if !mos.is_finite() {
            return Err(parse_err(line, format!("non-finite mos {mos}")));
        }

        for path in [&ref_path, &dst_path] {
            if !path.is_file() {
                return Err(Error::MissingFile(path.clone()));
            }
        }
        if let Some(first_line) = seen_dst.insert(dst_path.clone(), line) {
            return Err(Error::DuplicateDst {
                path: manifest.to_path_buf(),
                line: first_line.max(line),
                dst: dst_path,
            });
        }
        match ref_by_content.get(&content_id) {
            None => {
                ref_by_content.insert(content_id.clone(), ref_path.clone());
            }
            Some(existing) if *existing == ref_path => {}
            Some(_) => {
                return Err(Error::OrphanDst {
                    path: manifest.to_path_buf(),
                    line,
                    content_id,
                });
            }
        }

        let mut scores = BTreeMap::new();
        for (metric, raw) in metric_names.iter().zip(row.iter().skip(4)) {
            if raw.is_empty() {
                continue; // missing external score for this row
            }
            let value: f64 = raw
                .parse()
                .map_err(|e| parse_err(line, format!("metric {metric:?} value {raw:?}: {e}")))?;
            scores.insert(metric.clone(), value);
        }

        records.push(ScoredRecord {
            content_id,
            ref_path,
            dst_path,
            mos,
            scores,
        });
    }

    if records.is_empty() {
        return Err(Error::Dataset("manifest has no records".into()));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn touch(path: &Path) {
        fs::write(path, b"P5\n1 1\n255\n\x80").unwrap();
    }

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("manifest.csv");
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn well_formed_manifest_parses() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["r1.pgm", "d1.pgm", "d2.pgm", "r2.pgm", "d3.pgm", "d4.pgm", "d5.pgm"] {
            touch(&dir.path().join(name));
        }
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos\n\
             a,r1.pgm,d1.pgm,61.5\n\
             a,r1.pgm,d2.pgm,42.0\n\
             b,r2.pgm,d3.pgm,80.25\n\
             b,r2.pgm,d4.pgm,55.0\n\
             b,r2.pgm,d5.pgm,30.75\n",
        );
        let records = ingest_dataset(&manifest).unwrap();
        assert_eq!(records.len(), 5);
        assert_eq!(records[0].content_id, "a");
        assert_eq!(records[0].mos, 61.5);
        assert_eq!(records[2].ref_path, dir.path().join("r2.pgm"));
        assert!(records[0].scores.is_empty());
    }

    #[test]
    fn conflicting_reference_is_orphan_error() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["r1.pgm", "r2.pgm", "d1.pgm", "d2.pgm"] {
            touch(&dir.path().join(name));
        }
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos\n\
             a,r1.pgm,d1.pgm,10\n\
             a,r2.pgm,d2.pgm,20\n",
        );
        match ingest_dataset(&manifest) {
            Err(Error::OrphanDst {
                line, content_id, ..
            }) => {
                assert_eq!(line, 3);
                assert_eq!(content_id, "a");
            }
            other => panic!("expected orphan error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_dst_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["r1.pgm", "d1.pgm"] {
            touch(&dir.path().join(name));
        }
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos\n\
             a,r1.pgm,d1.pgm,10\n\
             a,r1.pgm,d1.pgm,20\n",
        );
        assert!(matches!(
            ingest_dataset(&manifest),
            Err(Error::DuplicateDst { .. })
        ));
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("r1.pgm"));
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos\na,r1.pgm,nope.pgm,10\n",
        );
        match ingest_dataset(&manifest) {
            Err(Error::MissingFile(p)) => assert!(p.ends_with("nope.pgm")),
            other => panic!("expected missing file, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["r1.pgm", "d1.pgm", "d2.pgm"] {
            touch(&dir.path().join(name));
        }
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos\n\
             a,r1.pgm,d1.pgm,10\n\
             a,r1.pgm,d2.pgm,not_a_number\n",
        );
        match ingest_dataset(&manifest) {
            Err(Error::ManifestParse { line, detail, .. }) => {
                assert_eq!(line, 3);
                assert!(detail.contains("not_a_number"), "{detail}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn external_metric_columns_attach() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["r1.pgm", "d1.pgm", "d2.pgm"] {
            touch(&dir.path().join(name));
        }
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos,metric:FSIM,metric:BRISQUE\n\
             a,r1.pgm,d1.pgm,10,0.91,33.5\n\
             a,r1.pgm,d2.pgm,20,0.87,\n",
        );
        let records = ingest_dataset(&manifest).unwrap();
        assert_eq!(records[0].scores["FSIM"], 0.91);
        assert_eq!(records[0].scores["BRISQUE"], 33.5);
        assert_eq!(records[1].scores.get("BRISQUE"), None);
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(dir.path(), "id,ref,dst,mos\n");
        assert!(matches!(
            ingest_dataset(&manifest),
            Err(Error::ManifestParse { line: 1, .. })
        ));
        let manifest = write_manifest(
            dir.path(),
            "content_id,ref_path,dst_path,mos,bogus\n",
        );
        assert!(matches!(
            ingest_dataset(&manifest),
            Err(Error::ManifestParse { line: 1, .. })
        ));
    }
}
