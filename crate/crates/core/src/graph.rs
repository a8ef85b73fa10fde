//! Immutable citation graph in compressed sparse form.
//!
//! Papers get dense `u32` indices in input order. Two CSR structures hold the
//! edges: `references` (citer -> cited) and `citers` (cited -> citer), each
//! neighbour list sorted ascending and free of duplicates. A third CSR maps
//! every author to their papers ordered by `(year, index)`.
//!
//! # Snapshot layout
//!
//! [`CitationGraph::write_snapshot`] emits a little-endian file:
//!
//! ```text
//! magic        8 bytes   "CITGRAPH"
//! version      u32       currently 1
//! n_papers     u64
//! n_authors    u64
//! n_edges      u64
//! years        i32 * n_papers
//! paper ids    string table
//! author ids   string table
//! paper->author CSR
//! references   CSR
//! ```
//!
//! A string table is `u64 count`, `u64 * (count + 1)` byte offsets, then the
//! concatenated UTF-8 bytes. A CSR is `u64 rows`, `u64 * (rows + 1)` offsets
//! starting at 0, then `u32 * offsets[rows]` targets. Citer lists and the
//! author index are rebuilt on load.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::ingest::PaperRecord;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"CITGRAPH";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("paper index {index} out of range (graph has {len} papers)")]
    InvalidIndex { index: u32, len: usize },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Offsets plus flat neighbour array.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Csr {
    offsets: Vec<u64>,
    targets: Vec<u32>,
}

impl Csr {
    fn from_lists(lists: impl Iterator<Item = Vec<u32>>) -> Csr {
        let mut offsets = vec![0u64];
        let mut targets = Vec::new();
        for list in lists {
            targets.extend_from_slice(&list);
            offsets.push(targets.len() as u64);
        }
        Csr { offsets, targets }
    }

    /// Transpose of `self` over `n_rows` target rows; neighbour lists come out sorted.
    fn transpose(&self, n_rows: usize) -> Csr {
        let mut counts = vec![0u64; n_rows + 1];
        for &t in &self.targets {
            counts[t as usize + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut targets = vec![0u32; self.targets.len()];
        for src in 0..self.len() {
            for &t in self.row(src) {
                let slot = &mut cursor[t as usize];
                targets[*slot as usize] = src as u32;
                *slot += 1;
            }
        }
        Csr { offsets, targets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    paper_ids: Vec<String>,
    id_index: HashMap<String, u32>,
    years: Vec<i32>,
    author_ids: Vec<String>,
    paper_authors: Csr,
    references: Csr,
    citers: Csr,
    author_papers: Csr,
}

impl CitationGraph {
    /// Builds the graph from validated records (ids must be unique).
    ///
    /// Dangling references and self-loops are left out of the adjacency,
    /// parallel edges collapse into one.
    pub fn build(records: &[PaperRecord]) -> CitationGraph {
        let n = records.len();
        let mut id_index = HashMap::with_capacity(n);
        for (i, rec) in records.iter().enumerate() {
            id_index.entry(rec.paper_id.clone()).or_insert(i as u32);
        }

        let mut author_index: HashMap<&str, u32> = HashMap::new();
        let mut author_ids = Vec::new();
        let paper_authors = Csr::from_lists(records.iter().map(|rec| {
            let mut list: Vec<u32> = rec
                .author_ids
                .iter()
                .map(|a| {
                    *author_index.entry(a.as_str()).or_insert_with(|| {
                        author_ids.push(a.clone());
                        (author_ids.len() - 1) as u32
                    })
                })
                .collect();
            let mut seen = std::collections::HashSet::new();
            list.retain(|a| seen.insert(*a));
            list
        }));

        let references = Csr::from_lists(records.iter().enumerate().map(|(i, rec)| {
            let mut list: Vec<u32> = rec
                .reference_ids
                .iter()
                .filter_map(|r| id_index.get(r.as_str()).copied())
                .filter(|&j| j as usize != i)
                .collect();
            list.sort_unstable();
            list.dedup();
            list
        }));

        let years: Vec<i32> = records.iter().map(|r| r.year).collect();
        Self::assemble(
            records.iter().map(|r| r.paper_id.clone()).collect(),
            id_index,
            years,
            author_ids,
            paper_authors,
            references,
        )
    }

    fn assemble(
        paper_ids: Vec<String>,
        id_index: HashMap<String, u32>,
        years: Vec<i32>,
        author_ids: Vec<String>,
        paper_authors: Csr,
        references: Csr,
    ) -> CitationGraph {
        let n = years.len();
        let citers = references.transpose(n);
        let mut author_papers = paper_authors.transpose(author_ids.len());
        // transpose yields papers sorted by index; re-sort each row by (year, index)
        for a in 0..author_papers.len() {
            let (lo, hi) = (
                author_papers.offsets[a] as usize,
                author_papers.offsets[a + 1] as usize,
            );
            author_papers.targets[lo..hi].sort_by_key(|&p| (years[p as usize], p));
        }
        CitationGraph {
            paper_ids,
            id_index,
            years,
            author_ids,
            paper_authors,
            references,
            citers,
            author_papers,
        }
    }

    pub fn num_papers(&self) -> usize {
        self.years.len()
    }

    pub fn num_edges(&self) -> usize {
        self.references.nnz()
    }

    pub fn num_authors(&self) -> usize {
        self.author_ids.len()
    }

    pub fn check_index(&self, p: u32) -> Result<(), GraphError> {
        if (p as usize) < self.num_papers() {
            Ok(())
        } else {
            Err(GraphError::InvalidIndex {
                index: p,
                len: self.num_papers(),
            })
        }
    }

    /// In-corpus papers citing `p`, sorted by index.
    pub fn citers_of(&self, p: u32) -> Result<&[u32], GraphError> {
        self.check_index(p)?;
        Ok(self.citers.row(p as usize))
    }

    /// In-corpus references of `p`, sorted by index.
    pub fn references_of(&self, p: u32) -> Result<&[u32], GraphError> {
        self.check_index(p)?;
        Ok(self.references.row(p as usize))
    }

    // Unchecked accessors for hot loops where indices come from the graph itself.
    #[inline]
    pub(crate) fn citers(&self, p: u32) -> &[u32] {
        self.citers.row(p as usize)
    }

    #[inline]
    pub(crate) fn refs(&self, p: u32) -> &[u32] {
        self.references.row(p as usize)
    }

    #[inline]
    pub fn year(&self, p: u32) -> i32 {
        self.years[p as usize]
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn paper_id(&self, p: u32) -> &str {
        &self.paper_ids[p as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.id_index.get(id).copied()
    }

    pub fn authors_of(&self, p: u32) -> &[u32] {
        self.paper_authors.row(p as usize)
    }

    pub fn author_id(&self, a: u32) -> &str {
        &self.author_ids[a as usize]
    }

    /// Papers of author `a`, ascending by `(year, index)`.
    pub fn papers_of_author(&self, a: u32) -> &[u32] {
        self.author_papers.row(a as usize)
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        Some((*self.years.iter().min()?, *self.years.iter().max()?))
    }

    pub fn write_snapshot<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        for n in [self.num_papers(), self.num_authors(), self.num_edges()] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.years.len() * 4);
        for y in &self.years {
            buf.extend_from_slice(&y.to_le_bytes());
        }
        w.write_all(&buf)?;
        write_strings(&mut w, &self.paper_ids)?;
        write_strings(&mut w, &self.author_ids)?;
        write_csr(&mut w, &self.paper_authors)?;
        write_csr(&mut w, &self.references)?;
        w.flush()
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<CitationGraph, GraphError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(GraphError::Snapshot("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(GraphError::Snapshot(format!(
                "unsupported version {version}"
            )));
        }
        let n_papers = read_u64(&mut r)? as usize;
        let n_authors = read_u64(&mut r)? as usize;
        let n_edges = read_u64(&mut r)? as usize;
        let mut bytes = vec![0u8; n_papers * 4];
        r.read_exact(&mut bytes)?;
        let years: Vec<i32> = bytes
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let paper_ids = read_strings(&mut r)?;
        let author_ids = read_strings(&mut r)?;
        let paper_authors = read_csr(&mut r)?;
        let references = read_csr(&mut r)?;
        if paper_ids.len() != n_papers
            || author_ids.len() != n_authors
            || references.nnz() != n_edges
            || references.len() != n_papers
            || paper_authors.len() != n_papers
        {
            return Err(GraphError::Snapshot(
                "section sizes disagree with header".into(),
            ));
        }
        if references.targets.iter().any(|&t| t as usize >= n_papers)
            || paper_authors
                .targets
                .iter()
                .any(|&t| t as usize >= n_authors)
        {
            return Err(GraphError::Snapshot("index out of range".into()));
        }
        let id_index = paper_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(Self::assemble(
            paper_ids,
            id_index,
            years,
            author_ids,
            paper_authors,
            references,
        ))
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_u64s<W: Write>(w: &mut W, xs: &[u64]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_u64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<u64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_strings<W: Write>(w: &mut W, strings: &[String]) -> io::Result<()> {
    w.write_all(&(strings.len() as u64).to_le_bytes())?;
    let mut offsets = Vec::with_capacity(strings.len() + 1);
    let mut acc = 0u64;
    offsets.push(0);
    for s in strings {
        acc += s.len() as u64;
        offsets.push(acc);
    }
    write_u64s(w, &offsets)?;
    for s in strings {
        w.write_all(s.as_bytes())?;
    }
    Ok(())
}

fn read_strings<R: Read>(r: &mut R) -> Result<Vec<String>, GraphError> {
    let count = read_u64(r)? as usize;
    let offsets = read_u64s(r, count + 1)?;
    if offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(GraphError::Snapshot("string offsets not monotone".into()));
    }
    let mut bytes = vec![0u8; *offsets.last().unwrap_or(&0) as usize];
    r.read_exact(&mut bytes)?;
    offsets
        .windows(2)
        .map(|w| {
            String::from_utf8(bytes[w[0] as usize..w[1] as usize].to_vec())
                .map_err(|_| GraphError::Snapshot("invalid utf-8 in string table".into()))
        })
        .collect()
}

fn write_csr<W: Write>(w: &mut W, csr: &Csr) -> io::Result<()> {
    w.write_all(&(csr.len() as u64).to_le_bytes())?;
    write_u64s(w, &csr.offsets)?;
    let mut buf = Vec::with_capacity(csr.targets.len() * 4);
    for t in &csr.targets {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_csr<R: Read>(r: &mut R) -> Result<Csr, GraphError> {
    let rows = read_u64(r)? as usize;
    let offsets = read_u64s(r, rows + 1)?;
    if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(GraphError::Snapshot(
            "csr offsets not monotone from 0".into(),
        ));
    }
    let nnz = offsets[rows] as usize;
    let mut bytes = vec![0u8; nnz * 4];
    r.read_exact(&mut bytes)?;
    let targets = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Csr { offsets, targets })
}
