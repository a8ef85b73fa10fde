//! Disruption (CD) scores and windowed citation counts.
//!
//! For a focal paper `f` with in-corpus references `R`, the subsequent set is
//! every paper published after `f` (up to the horizon) that is neither `f`
//! nor in `R` and that cites `f` or some member of `R`. It splits into
//! papers citing `f` only (`n_i`), `f` and some reference (`n_j`), and
//! references only (`n_k`):
//!
//! ```text
//! D = (n_i - n_j) / (n_i + n_j + n_k)
//! ```

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CitationGraph, GraphError};

#[derive(Debug, Error)]
pub enum ScoreCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisruptionParams {
    /// Papers need at least this many years between publication and horizon.
    pub min_window_years: i32,
    /// Last calendar year whose citing papers are counted.
    pub horizon_year: i32,
    /// Count same-year citers as subsequent (`>=` instead of `>`).
    pub include_same_year: bool,
}

impl DisruptionParams {
    /// Five-year window, horizon at the corpus' last year.
    pub fn for_graph(g: &CitationGraph) -> DisruptionParams {
        DisruptionParams {
            min_window_years: 5,
            horizon_year: g.year_range().map_or(0, |(_, hi)| hi),
            include_same_year: false,
        }
    }

    pub fn is_eligible(&self, year: i32) -> bool {
        year <= self.horizon_year - self.min_window_years
    }

    #[inline]
    fn is_later(&self, focal_year: i32, year: i32) -> bool {
        let after = if self.include_same_year {
            year >= focal_year
        } else {
            year > focal_year
        };
        after && year <= self.horizon_year
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreStatus {
    Defined,
    /// No subsequent papers, so the ratio has no denominator.
    NoSubsequent,
    /// Published too close to the horizon; counts are not collected.
    Ineligible,
}

impl ScoreStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreStatus::Defined => "defined",
            ScoreStatus::NoSubsequent => "no-subsequent",
            ScoreStatus::Ineligible => "ineligible",
        }
    }

    fn parse(s: &str) -> Option<ScoreStatus> {
        match s {
            "defined" => Some(ScoreStatus::Defined),
            "no-subsequent" => Some(ScoreStatus::NoSubsequent),
            "ineligible" => Some(ScoreStatus::Ineligible),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisruptionResult {
    pub paper: u32,
    pub n_i: u32,
    pub n_j: u32,
    pub n_k: u32,
    /// `Some` exactly when `status == Defined`.
    pub score: Option<f64>,
    pub status: ScoreStatus,
}

impl DisruptionResult {
    pub fn from_counts(paper: u32, n_i: u32, n_j: u32, n_k: u32) -> DisruptionResult {
        let total = n_i + n_j + n_k;
        let (score, status) = if total == 0 {
            (None, ScoreStatus::NoSubsequent)
        } else {
            (
                Some((n_i as f64 - n_j as f64) / total as f64),
                ScoreStatus::Defined,
            )
        };
        DisruptionResult {
            paper,
            n_i,
            n_j,
            n_k,
            score,
            status,
        }
    }

    pub fn defined(&self) -> bool {
        self.score.is_some()
    }
}

/// Scratch state for scoring many focal papers against one graph.
///
/// Membership tests use generation-stamped arrays so that each focal paper
/// costs time proportional to its neighbourhood, not to the corpus size.
pub struct Scorer<'g> {
    g: &'g CitationGraph,
    params: DisruptionParams,
    in_refs: Vec<u32>,
    cites_focal: Vec<u32>,
    counted: Vec<u32>,
    stamp: u32,
}

impl<'g> Scorer<'g> {
    pub fn new(g: &'g CitationGraph, params: DisruptionParams) -> Scorer<'g> {
        let n = g.num_papers();
        Scorer {
            g,
            params,
            in_refs: vec![0; n],
            cites_focal: vec![0; n],
            counted: vec![0; n],
            stamp: 0,
        }
    }

    fn next_stamp(&mut self) -> u32 {
        if self.stamp == u32::MAX {
            self.in_refs.fill(0);
            self.cites_focal.fill(0);
            self.counted.fill(0);
            self.stamp = 0;
        }
        self.stamp += 1;
        self.stamp
    }

    pub fn score(&mut self, focal: u32) -> Result<DisruptionResult, GraphError> {
        self.g.check_index(focal)?;
        Ok(self.score_unchecked(focal))
    }

    fn score_unchecked(&mut self, focal: u32) -> DisruptionResult {
        let g = self.g;
        let params = self.params;
        let focal_year = g.year(focal);
        if !params.is_eligible(focal_year) {
            return DisruptionResult {
                paper: focal,
                n_i: 0,
                n_j: 0,
                n_k: 0,
                score: None,
                status: ScoreStatus::Ineligible,
            };
        }
        let stamp = self.next_stamp();
        let refs = g.refs(focal);
        for &r in refs {
            self.in_refs[r as usize] = stamp;
        }
        let subsequent = |p: u32, in_refs: &[u32]| {
            p != focal && in_refs[p as usize] != stamp && params.is_later(focal_year, g.year(p))
        };

        let (mut n_i, mut n_j, mut n_k) = (0u32, 0u32, 0u32);
        for &p in g.citers(focal) {
            if !subsequent(p, &self.in_refs) {
                continue;
            }
            self.cites_focal[p as usize] = stamp;
            if g.refs(p).iter().any(|&r| self.in_refs[r as usize] == stamp) {
                n_j += 1;
            } else {
                n_i += 1;
            }
        }
        for &r in refs {
            for &p in g.citers(r) {
                if self.cites_focal[p as usize] == stamp
                    || self.counted[p as usize] == stamp
                    || !subsequent(p, &self.in_refs)
                {
                    continue;
                }
                self.counted[p as usize] = stamp;
                n_k += 1;
            }
        }
        DisruptionResult::from_counts(focal, n_i, n_j, n_k)
    }
}

/// Disruption score of a single paper.
pub fn disruption_score(
    g: &CitationGraph,
    focal: u32,
    params: DisruptionParams,
) -> Result<DisruptionResult, GraphError> {
    Scorer::new(g, params).score(focal)
}

/// Scores every paper; `result[p]` belongs to paper `p`.
///
/// Work is spread over the current rayon pool. Output does not depend on the
/// number of threads.
pub fn score_all(g: &CitationGraph, params: DisruptionParams) -> Vec<DisruptionResult> {
    (0..g.num_papers() as u32)
        .into_par_iter()
        .map_init(
            || Scorer::new(g, params),
            |scorer, p| scorer.score_unchecked(p),
        )
        .collect()
}

/// Distinct citers published within `window_years` after `p` (same year excluded).
pub fn citations_within(g: &CitationGraph, p: u32, window_years: u32) -> Result<u32, GraphError> {
    g.check_index(p)?;
    Ok(count_within(g, p, window_years))
}

pub(crate) fn count_within(g: &CitationGraph, p: u32, window_years: u32) -> u32 {
    let y = g.year(p);
    let last = y + window_years as i32;
    g.citers(p)
        .iter()
        .filter(|&&q| {
            let yq = g.year(q);
            yq > y && yq <= last
        })
        .count() as u32
}

/// Windowed citation counts for every paper.
pub fn citations_all(g: &CitationGraph, window_years: u32) -> Vec<u32> {
    (0..g.num_papers() as u32)
        .into_par_iter()
        .map(|p| count_within(g, p, window_years))
        .collect()
}

const CSV_HEADER: [&str; 8] = [
    "paper_id", "year", "n_i", "n_j", "n_k", "score", "defined", "status",
];

/// CSV with one row per paper; `score` is empty when undefined.
pub fn write_scores_csv<W: Write>(
    g: &CitationGraph,
    results: &[DisruptionResult],
    w: W,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in results {
        out.write_record([
            g.paper_id(r.paper),
            &g.year(r.paper).to_string(),
            &r.n_i.to_string(),
            &r.n_j.to_string(),
            &r.n_k.to_string(),
            &r.score.map(|s| s.to_string()).unwrap_or_default(),
            if r.defined() { "true" } else { "false" },
            r.status.as_str(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads scores written by [`write_scores_csv`], resolving ids against `g`.
pub fn read_scores_csv<R: Read>(
    g: &CitationGraph,
    r: R,
) -> Result<Vec<DisruptionResult>, ScoreCsvError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::with_capacity(g.num_papers());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |msg: &str| ScoreCsvError::Row {
            row: row + 1,
            msg: msg.to_string(),
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(bad("wrong number of fields"));
        }
        let paper = g.index_of(&rec[0]).ok_or_else(|| bad("unknown paper id"))?;
        if paper as usize != out.len() {
            return Err(bad("rows out of graph order"));
        }
        let count = |i: usize| rec[i].parse::<u32>().map_err(|_| bad("bad count"));
        let score = if rec[5].is_empty() {
            None
        } else {
            Some(rec[5].parse::<f64>().map_err(|_| bad("bad score"))?)
        };
        let status = ScoreStatus::parse(&rec[7]).ok_or_else(|| bad("bad status"))?;
        if score.is_some() != (status == ScoreStatus::Defined) {
            return Err(bad("score and status disagree"));
        }
        out.push(DisruptionResult {
            paper,
            n_i: count(2)?,
            n_j: count(3)?,
            n_k: count(4)?,
            score,
            status,
        });
    }
    if out.len() != g.num_papers() {
        return Err(ScoreCsvError::Row {
            row: out.len(),
            msg: format!("expected {} rows", g.num_papers()),
        });
    }
    Ok(out)
}
