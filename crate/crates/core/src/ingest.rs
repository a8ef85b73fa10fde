//! Streaming readers for publication corpora.
//!
//! Two on-disk layouts are supported:
//!
//! * `json-lines`: one JSON object per line with `id`, `year`, `authors` and
//!   `references`. Authors may be plain strings or objects carrying an `id`
//!   field; every other key is ignored.
//! * `csv-pair`: a directory holding `papers.csv` (`paper_id,year,author_ids`,
//!   authors joined by `;`) and `edges.csv` (`citing_id,cited_id`).
//!
//! Malformed records are counted and skipped. Only I/O failures, bad CSV
//! headers and duplicate ids abort a parse.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed header, expected `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("duplicate paper id `{0}`")]
    DuplicateId(String),
    #[error("unknown corpus format `{0}` (expected json-lines or csv-pair)")]
    UnknownFormat(String),
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// Declared on-disk layout of a corpus. Never sniffed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    JsonLines,
    CsvPair,
}

impl FromStr for CorpusFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json-lines" | "jsonl" => Ok(CorpusFormat::JsonLines),
            "csv-pair" => Ok(CorpusFormat::CsvPair),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::JsonLines => "json-lines",
            CorpusFormat::CsvPair => "csv-pair",
        })
    }
}

/// One publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub year: i32,
    pub author_ids: Vec<String>,
    /// May name papers absent from the corpus.
    pub reference_ids: Vec<String>,
}

/// Counters collected while reading and cleaning a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Records accepted.
    pub papers_read: u64,
    pub papers_rejected: u64,
    /// Raw reference entries as read, before any cleanup.
    pub edges_read: u64,
    /// csv-pair edge rows that were malformed or whose citing id is unknown.
    pub edges_rejected: u64,
    pub dangling_references: u64,
    pub self_citations: u64,
    pub duplicate_references: u64,
    pub duplicate_authors: u64,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
}

impl CorpusStats {
    /// Edges that survive into the citation graph.
    pub fn graph_edges(&self) -> u64 {
        self.edges_read - self.self_citations - self.duplicate_references - self.dangling_references
    }
}

/// Accepted range of publication years, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub min: i32,
    pub max: i32,
}

impl Default for YearRange {
    fn default() -> Self {
        YearRange {
            min: 1900,
            max: 2100,
        }
    }
}

impl YearRange {
    pub fn contains(&self, year: i32) -> bool {
        (self.min..=self.max).contains(&year)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AuthorField {
    Id(String),
    Object { id: String },
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    year: i32,
    #[serde(default)]
    authors: Vec<AuthorField>,
    #[serde(default)]
    references: Vec<String>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    year: i32,
    authors: &'a [String],
    references: &'a [String],
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a corpus, returning every structurally valid record in input order.
///
/// For `csv-pair`, `path` is the directory holding `papers.csv` and `edges.csv`.
pub fn parse_corpus(
    path: &Path,
    format: CorpusFormat,
    years: YearRange,
) -> Result<(Vec<PaperRecord>, CorpusStats)> {
    let mut stats = CorpusStats::default();
    let mut records = match format {
        CorpusFormat::JsonLines => read_json_lines(path, years, &mut stats)?,
        CorpusFormat::CsvPair => read_csv_pair(path, years, &mut stats)?,
    };
    for rec in &mut records {
        clean_record(rec, &mut stats);
    }
    stats.papers_read = records.len() as u64;
    count_dangling_and_years(&records, &mut stats);
    Ok((records, stats))
}

fn read_json_lines(
    path: &Path,
    years: YearRange,
    stats: &mut CorpusStats,
) -> Result<Vec<PaperRecord>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::with_capacity(1 << 16, file);
    let mut out = Vec::new();
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let rec: JsonRecord = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(_) => {
                stats.papers_rejected += 1;
                continue;
            }
        };
        if rec.id.is_empty() || !years.contains(rec.year) {
            stats.papers_rejected += 1;
            continue;
        }
        stats.edges_read += rec.references.len() as u64;
        out.push(PaperRecord {
            paper_id: rec.id,
            year: rec.year,
            author_ids: rec
                .authors
                .into_iter()
                .map(|a| match a {
                    AuthorField::Id(id) | AuthorField::Object { id } => id,
                })
                .filter(|a| !a.is_empty())
                .collect(),
            reference_ids: rec.references,
        });
    }
    Ok(out)
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: e.to_string(),
        })?
        .clone();
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn read_csv_pair(
    dir: &Path,
    years: YearRange,
    stats: &mut CorpusStats,
) -> Result<Vec<PaperRecord>> {
    let papers_path = dir.join("papers.csv");
    let edges_path = dir.join("edges.csv");

    let mut papers = open_csv(&papers_path)?;
    check_header(
        &papers_path,
        &mut papers,
        &["paper_id", "year", "author_ids"],
    )?;
    let mut out = Vec::new();
    let mut row_of: HashMap<String, usize> = HashMap::new();
    for row in papers.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => {
                return Err(IngestError::Io {
                    path: papers_path.clone(),
                    source: std::io::Error::other(e.to_string()),
                })
            }
            Err(_) => {
                stats.papers_rejected += 1;
                continue;
            }
        };
        let parsed =
            (row.len() == 3).then(|| (row[0].trim(), row[1].trim().parse::<i32>(), row[2].trim()));
        match parsed {
            Some((id, Ok(year), authors)) if !id.is_empty() && years.contains(year) => {
                row_of.entry(id.to_string()).or_insert(out.len());
                out.push(PaperRecord {
                    paper_id: id.to_string(),
                    year,
                    author_ids: authors
                        .split(';')
                        .map(str::trim)
                        .filter(|a| !a.is_empty())
                        .map(String::from)
                        .collect(),
                    reference_ids: Vec::new(),
                });
            }
            _ => stats.papers_rejected += 1,
        }
    }

    let mut edges = open_csv(&edges_path)?;
    check_header(&edges_path, &mut edges, &["citing_id", "cited_id"])?;
    for row in edges.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => {
                return Err(IngestError::Io {
                    path: edges_path.clone(),
                    source: std::io::Error::other(e.to_string()),
                })
            }
            Err(_) => {
                stats.edges_rejected += 1;
                continue;
            }
        };
        if row.len() != 2 || row[1].trim().is_empty() {
            stats.edges_rejected += 1;
            continue;
        }
        match row_of.get(row[0].trim()) {
            Some(&i) => {
                stats.edges_read += 1;
                out[i].reference_ids.push(row[1].trim().to_string());
            }
            None => stats.edges_rejected += 1,
        }
    }
    Ok(out)
}

/// Dedups authors and references in first-seen order and drops self-citations.
fn clean_record(rec: &mut PaperRecord, stats: &mut CorpusStats) {
    let mut seen = HashSet::with_capacity(rec.author_ids.len());
    let before = rec.author_ids.len();
    rec.author_ids.retain(|a| seen.insert(a.clone()));
    stats.duplicate_authors += (before - rec.author_ids.len()) as u64;

    let before = rec.reference_ids.len();
    rec.reference_ids.retain(|r| r != &rec.paper_id);
    stats.self_citations += (before - rec.reference_ids.len()) as u64;

    let mut seen = HashSet::with_capacity(rec.reference_ids.len());
    let before = rec.reference_ids.len();
    rec.reference_ids.retain(|r| seen.insert(r.clone()));
    stats.duplicate_references += (before - rec.reference_ids.len()) as u64;
}

fn count_dangling_and_years(records: &[PaperRecord], stats: &mut CorpusStats) {
    let ids: HashSet<&str> = records.iter().map(|r| r.paper_id.as_str()).collect();
    stats.dangling_references = records
        .iter()
        .flat_map(|r| r.reference_ids.iter())
        .filter(|id| !ids.contains(id.as_str()))
        .count() as u64;
    stats.year_min = records.iter().map(|r| r.year).min();
    stats.year_max = records.iter().map(|r| r.year).max();
}

/// Rejects duplicate ids, then dedups authors/references and removes
/// self-citations in place. Returned stats describe the cleaned corpus; the
/// diagnostic counters only reflect what this call removed.
pub fn validate_corpus(records: &mut [PaperRecord]) -> Result<CorpusStats> {
    let mut ids = HashSet::with_capacity(records.len());
    for rec in records.iter() {
        if !ids.insert(rec.paper_id.as_str()) {
            return Err(IngestError::DuplicateId(rec.paper_id.clone()));
        }
    }
    let mut stats = CorpusStats::default();
    for rec in records.iter_mut() {
        stats.edges_read += rec.reference_ids.len() as u64;
        clean_record(rec, &mut stats);
    }
    stats.papers_read = records.len() as u64;
    count_dangling_and_years(records, &mut stats);
    Ok(stats)
}

/// Writes records in the json-lines schema read by [`parse_corpus`].
pub fn write_json_lines<W: Write>(records: &[PaperRecord], out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for rec in records {
        let line = JsonRecordOut {
            id: &rec.paper_id,
            year: rec.year,
            authors: &rec.author_ids,
            references: &rec.reference_ids,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes `papers.csv` and `edges.csv` into `dir`.
pub fn write_csv_pair(records: &[PaperRecord], dir: &Path) -> std::io::Result<()> {
    let mut papers = csv::Writer::from_path(dir.join("papers.csv"))?;
    papers.write_record(["paper_id", "year", "author_ids"])?;
    for rec in records {
        papers.write_record([
            rec.paper_id.as_str(),
            &rec.year.to_string(),
            &rec.author_ids.join(";"),
        ])?;
    }
    papers.flush()?;
    let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
    edges.write_record(["citing_id", "cited_id"])?;
    for rec in records {
        for r in &rec.reference_ids {
            edges.write_record([rec.paper_id.as_str(), r.as_str()])?;
        }
    }
    edges.flush()
}
