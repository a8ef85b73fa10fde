//! Researcher careers and the metrics computed on them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disruption::{count_within, DisruptionResult};
use crate::graph::CitationGraph;

#[derive(Debug, Error, PartialEq)]
pub enum CareerError {
    #[error("career of `{0}` has no defined disruption score")]
    NoDefinedScores(String),
    #[error("peak of `{0}` falls on the first or last career year")]
    BoundaryPeak(String),
    #[error("malformed period [{start}, {end}]")]
    MalformedPeriod { start: i32, end: i32 },
    #[error("invalid cohort filter: {0}")]
    InvalidFilter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Publication {
    pub paper: u32,
    pub year: i32,
    pub coauthors: u32,
    /// Disruption score, `None` when undefined.
    pub score: Option<f64>,
    /// Citations received within the configured window after publication.
    pub citations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Career {
    pub author_id: String,
    /// Sorted by `(year, paper)`.
    pub publications: Vec<Publication>,
    pub first_year: i32,
    pub last_year: i32,
}

impl Career {
    /// Sorts the publications; `None` for an empty list.
    pub fn new(author_id: impl Into<String>, mut publications: Vec<Publication>) -> Option<Career> {
        publications.sort_by_key(|p| (p.year, p.paper));
        let first_year = publications.first()?.year;
        let last_year = publications.last()?.year;
        Some(Career {
            author_id: author_id.into(),
            publications,
            first_year,
            last_year,
        })
    }

    pub fn n_papers(&self) -> usize {
        self.publications.len()
    }

    /// Career span in years, floored at 1.
    pub fn span_years(&self) -> u32 {
        ((self.last_year - self.first_year) as u32).max(1)
    }

    /// Largest gap between consecutive distinct publication years.
    pub fn max_gap(&self) -> i32 {
        self.publications
            .windows(2)
            .map(|w| w[1].year - w[0].year)
            .max()
            .unwrap_or(0)
    }

    pub fn in_years(&self, start: i32, end: i32) -> impl Iterator<Item = &Publication> {
        let lo = self.publications.partition_point(|p| p.year < start);
        let hi = self.publications.partition_point(|p| p.year <= end);
        self.publications[lo..hi.max(lo)].iter()
    }

    /// Mean defined score over `[start, end]`.
    pub fn mean_score(&self, start: i32, end: i32) -> Option<f64> {
        mean(self.in_years(start, end).filter_map(|p| p.score))
    }

    pub fn mean_coauthors(&self, start: i32, end: i32) -> Option<f64> {
        mean(self.in_years(start, end).map(|p| p.coauthors as f64))
    }
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoauthorCount {
    /// Authors on the paper minus the researcher.
    #[default]
    ExcludeSelf,
    IncludeSelf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CareerOptions {
    pub coauthors: CoauthorCount,
    /// Window for the per-paper citation count.
    pub citation_window: u32,
}

impl Default for CareerOptions {
    fn default() -> Self {
        CareerOptions {
            coauthors: CoauthorCount::ExcludeSelf,
            citation_window: 5,
        }
    }
}

/// Builds one career per author of `g`. `scores[p]` must belong to paper `p`.
pub fn assemble_careers(
    g: &CitationGraph,
    scores: &[DisruptionResult],
    opts: &CareerOptions,
) -> BTreeMap<String, Career> {
    assert_eq!(
        scores.len(),
        g.num_papers(),
        "scores must cover every paper"
    );
    (0..g.num_authors() as u32)
        .into_par_iter()
        .filter_map(|a| {
            let pubs = g
                .papers_of_author(a)
                .iter()
                .map(|&p| {
                    let n_authors = g.authors_of(p).len() as u32;
                    Publication {
                        paper: p,
                        year: g.year(p),
                        coauthors: match opts.coauthors {
                            CoauthorCount::ExcludeSelf => n_authors.saturating_sub(1),
                            CoauthorCount::IncludeSelf => n_authors,
                        },
                        score: scores[p as usize].score,
                        citations: count_within(g, p, opts.citation_window),
                    }
                })
                .collect();
            Career::new(g.author_id(a), pubs)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .map(|c| (c.author_id.clone(), c))
        .collect()
}

/// Long-career selection criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortFilter {
    pub start_min: i32,
    pub start_max: i32,
    pub min_span: i32,
    pub min_papers: usize,
    pub max_gap: i32,
}

impl Default for CohortFilter {
    fn default() -> Self {
        CohortFilter {
            start_min: 1980,
            start_max: 2000,
            min_span: 20,
            min_papers: 10,
            max_gap: 5,
        }
    }
}

impl CohortFilter {
    pub fn validate(&self) -> Result<(), CareerError> {
        if self.start_min > self.start_max {
            return Err(CareerError::InvalidFilter(format!(
                "start_min {} > start_max {}",
                self.start_min, self.start_max
            )));
        }
        if self.min_span <= 0 || self.min_papers == 0 || self.max_gap <= 0 {
            return Err(CareerError::InvalidFilter(
                "min_span, min_papers and max_gap must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn accepts(&self, c: &Career) -> bool {
        (self.start_min..=self.start_max).contains(&c.first_year)
            && c.last_year - c.first_year >= self.min_span
            && c.n_papers() >= self.min_papers
            && c.max_gap() <= self.max_gap
    }
}

pub fn apply_cohort_filter(
    careers: BTreeMap<String, Career>,
    f: &CohortFilter,
) -> BTreeMap<String, Career> {
    careers.into_iter().filter(|(_, c)| f.accepts(c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakInfo {
    pub peak_year: i32,
    pub peak_paper: u32,
    pub peak_score: f64,
    /// Position of the peak paper in `Career::publications`.
    pub peak_position: usize,
    pub time_to_peak: i32,
    /// Publications strictly before the peak year.
    pub papers_before_peak: usize,
    /// Peak year equals the first or the last career year.
    pub is_boundary: bool,
}

/// Most disruptive publication; ties go to the earliest year, then the lowest index.
pub fn find_peak(c: &Career) -> Result<PeakInfo, CareerError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in c.publications.iter().enumerate() {
        if let Some(s) = p.score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (pos, score) = best.ok_or_else(|| CareerError::NoDefinedScores(c.author_id.clone()))?;
    let peak = &c.publications[pos];
    Ok(PeakInfo {
        peak_year: peak.year,
        peak_paper: peak.paper,
        peak_score: score,
        peak_position: pos,
        time_to_peak: peak.year - c.first_year,
        papers_before_peak: c.publications.partition_point(|p| p.year < peak.year),
        is_boundary: peak.year == c.first_year || peak.year == c.last_year,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    /// Whole career before and after the peak year.
    Full,
    /// Only `w` years on each side of the peak year.
    Window(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseAverages {
    pub bpy: Option<f64>,
    /// Peak year, the peak paper itself excluded.
    pub py_excl: Option<f64>,
    pub apy: Option<f64>,
}

/// Mean defined score before, during (peak paper excluded) and after the peak year.
pub fn phase_averages(c: &Career, mode: PhaseMode) -> Result<PhaseAverages, CareerError> {
    let peak = find_peak(c)?;
    phase_averages_at(c, &peak, mode)
}

pub fn phase_averages_at(
    c: &Career,
    peak: &PeakInfo,
    mode: PhaseMode,
) -> Result<PhaseAverages, CareerError> {
    if peak.is_boundary {
        return Err(CareerError::BoundaryPeak(c.author_id.clone()));
    }
    let py = peak.peak_year;
    let (before, after) = match mode {
        PhaseMode::Full => ((i32::MIN, py - 1), (py + 1, i32::MAX)),
        PhaseMode::Window(w) => ((py - w as i32, py - 1), (py + 1, py + w as i32)),
    };
    let py_excl = mean(
        c.in_years(py, py)
            .filter(|p| p.paper != peak.peak_paper)
            .filter_map(|p| p.score),
    );
    Ok(PhaseAverages {
        bpy: c.mean_score(before.0, before.1),
        py_excl,
        apy: c.mean_score(after.0, after.1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub y_start: i32,
    pub y_end: i32,
    pub productivity: u32,
    pub time_devoted: u32,
    pub effort: f64,
    pub relative_productivity: f64,
    pub relative_time_devoted: f64,
    pub relative_effort: f64,
}

/// Effort, time devoted and productivity over `[y_start, y_end]`.
///
/// Time devoted runs from the last publication before the period to its end
/// year; without an earlier publication it runs from the first career year
/// and is floored at one. `Ok(None)` when nothing was published in the period.
pub fn period_metrics(
    c: &Career,
    y_start: i32,
    y_end: i32,
) -> Result<Option<PeriodMetrics>, CareerError> {
    if y_start > y_end {
        return Err(CareerError::MalformedPeriod {
            start: y_start,
            end: y_end,
        });
    }
    let productivity = c.in_years(y_start, y_end).count() as u32;
    if productivity == 0 {
        return Ok(None);
    }
    let before = c.publications.partition_point(|p| p.year < y_start);
    let time_devoted = match before.checked_sub(1) {
        Some(i) => (y_end - c.publications[i].year) as u32,
        None => ((y_end - c.first_year) as u32).max(1),
    };
    let effort = time_devoted as f64 / productivity as f64;

    let career_productivity = c.n_papers() as f64;
    let career_time = c.span_years() as f64;
    let career_effort = career_time / career_productivity;
    Ok(Some(PeriodMetrics {
        y_start,
        y_end,
        productivity,
        time_devoted,
        effort,
        relative_productivity: productivity as f64 / career_productivity,
        relative_time_devoted: time_devoted as f64 / career_time,
        relative_effort: effort / career_effort,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PaperRecord;
    use proptest::prelude::*;

    pub(crate) fn career(items: &[(i32, Option<f64>)]) -> Career {
        let pubs = items
            .iter()
            .enumerate()
            .map(|(i, &(year, score))| Publication {
                paper: i as u32,
                year,
                coauthors: 0,
                score,
                citations: 0,
            })
            .collect();
        Career::new("r", pubs).unwrap()
    }

    fn years(ys: &[i32]) -> Career {
        career(&ys.iter().map(|&y| (y, Some(0.0))).collect::<Vec<_>>())
    }

    #[test]
    fn assemble_from_graph() {
        let rec = |id: &str, year, authors: &[&str]| PaperRecord {
            paper_id: id.into(),
            year,
            author_ids: authors.iter().map(|s| s.to_string()).collect(),
            reference_ids: vec![],
        };
        let g = CitationGraph::build(&[
            rec("p1", 1995, &["x", "y"]),
            rec("p2", 1990, &["x"]),
            rec("p3", 1990, &["x", "z", "y"]),
        ]);
        let scores: Vec<_> = (0..3)
            .map(|p| DisruptionResult::from_counts(p, 0, 0, 0))
            .collect();
        let careers = assemble_careers(&g, &scores, &CareerOptions::default());
        let x = &careers["x"];
        assert_eq!(x.n_papers(), 3);
        assert_eq!((x.first_year, x.last_year), (1990, 1995));
        let order: Vec<u32> = x.publications.iter().map(|p| p.paper).collect();
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(x.publications[0].coauthors, 0);
        assert_eq!(x.publications[1].coauthors, 2);
        assert_eq!(careers.len(), 3);
        let incl = assemble_careers(
            &g,
            &scores,
            &CareerOptions {
                coauthors: CoauthorCount::IncludeSelf,
                ..Default::default()
            },
        );
        assert_eq!(incl["x"].publications[0].coauthors, 1);
    }

    #[test]
    fn cohort_filter_rules() {
        let f = CohortFilter::default();
        let ok: Vec<i32> = vec![
            1985, 1986, 1988, 1991, 1994, 1997, 1999, 2000, 2002, 2003, 2005, 2006,
        ];
        assert!(f.accepts(&years(&ok)));
        let gap: Vec<i32> = vec![
            1985, 1986, 1987, 1988, 1989, 1990, 1996, 1999, 2001, 2003, 2005, 2006,
        ];
        assert_eq!(years(&gap).max_gap(), 6);
        assert!(!f.accepts(&years(&gap)));
        let late: Vec<i32> = ok.iter().map(|y| y + 16).collect();
        assert!(!f.accepts(&years(&late)));
        assert!(!f.accepts(&years(&ok[..9])));
        let short: Vec<i32> = vec![1985, 1986, 1987, 1988, 1989, 1990, 1991, 1992, 1993, 1994];
        assert!(!f.accepts(&years(&short)));
        assert!(CohortFilter {
            start_min: 2001,
            ..f
        }
        .validate()
        .is_err());
        assert!(f.validate().is_ok());
    }

    #[test]
    fn peak_argmax_and_ties() {
        let c = career(&[(1990, Some(0.1)), (1995, Some(0.9)), (2000, Some(0.3))]);
        let p = find_peak(&c).unwrap();
        assert_eq!(
            (p.peak_year, p.time_to_peak, p.papers_before_peak),
            (1995, 5, 1)
        );
        assert!(!p.is_boundary);

        let c = career(&[
            (1990, Some(0.1)),
            (1992, Some(0.9)),
            (1998, Some(0.9)),
            (2000, None),
        ]);
        assert_eq!(find_peak(&c).unwrap().peak_year, 1992);

        let c = career(&[(2001, Some(-0.2))]);
        assert!(find_peak(&c).unwrap().is_boundary);

        let c = career(&[(2001, None), (2003, None)]);
        assert_eq!(find_peak(&c), Err(CareerError::NoDefinedScores("r".into())));
    }

    #[test]
    fn phase_means_full_and_window() {
        let c = career(&[
            (1990, Some(0.0)),
            (1995, Some(0.8)),
            (1995, Some(0.4)),
            (2000, Some(0.2)),
        ]);
        let ph = phase_averages(&c, PhaseMode::Full).unwrap();
        assert_eq!(ph.bpy, Some(0.0));
        assert_eq!(ph.py_excl, Some(0.4));
        assert_eq!(ph.apy, Some(0.2));

        let c = career(&[(1990, Some(0.0)), (1995, Some(0.8)), (2000, Some(0.2))]);
        assert_eq!(phase_averages(&c, PhaseMode::Full).unwrap().py_excl, None);

        let c = career(&[
            (1992, Some(0.0)),
            (1995, Some(0.8)),
            (1996, Some(0.1)),
            (1997, Some(0.2)),
        ]);
        let ph = phase_averages(&c, PhaseMode::Window(2)).unwrap();
        assert_eq!(ph.bpy, None);
        assert_eq!(ph.apy, Some((0.1 + 0.2) / 2.0));

        let c = career(&[(1990, Some(0.9)), (1995, Some(0.1))]);
        assert!(matches!(
            phase_averages(&c, PhaseMode::Full),
            Err(CareerError::BoundaryPeak(_))
        ));
    }

    #[test]
    fn effort_worked_example() {
        let mut items = vec![(2005, Some(0.0))];
        items.extend(std::iter::repeat_n((2007, Some(0.0)), 3));
        items.extend(std::iter::repeat_n((2008, Some(0.0)), 5));
        let c = career(&items);
        let m = period_metrics(&c, 2007, 2008).unwrap().unwrap();
        assert_eq!(m.time_devoted, 3);
        assert_eq!(m.productivity, 8);
        assert_eq!(m.effort, 3.0 / 8.0);
        assert_eq!(m.relative_productivity, 8.0 / 9.0);
        assert_eq!(m.relative_time_devoted, 1.0);
        assert_eq!(m.relative_effort, (3.0 / 8.0) / (3.0 / 9.0));

        assert_eq!(period_metrics(&c, 2006, 2006).unwrap(), None);
        assert!(period_metrics(&c, 2008, 2007).is_err());

        // first-year period: no earlier publication, time devoted floored at 1
        let m = period_metrics(&c, 2005, 2005).unwrap().unwrap();
        assert_eq!(m.time_devoted, 1);
    }

    fn arb_career() -> impl Strategy<Value = Career> {
        prop::collection::vec(
            (1980i32..2010, prop::option::weighted(0.85, -1.0f64..1.0)),
            1..25,
        )
        .prop_map(|items| career(&items))
    }

    proptest! {
        #[test]
        fn peak_invariant_under_monotone_transform(c in arb_career(), a in 0.1f64..5.0, b in -3.0f64..3.0) {
            let mut t = c.clone();
            for p in &mut t.publications {
                p.score = p.score.map(|s| (a * s + b).exp());
            }
            match (find_peak(&c), find_peak(&t)) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.peak_paper, y.peak_paper),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "peak existence changed"),
            }
        }

        #[test]
        fn disjoint_periods_partition_productivity(c in arb_career(), cut in 0i32..30) {
            let mid = c.first_year + cut.min(c.last_year - c.first_year);
            let left = period_metrics(&c, c.first_year, mid).unwrap().map_or(0, |m| m.productivity);
            let right = if mid < c.last_year {
                period_metrics(&c, mid + 1, c.last_year).unwrap().map_or(0, |m| m.productivity)
            } else { 0 };
            prop_assert_eq!((left + right) as usize, c.n_papers());
        }

        #[test]
        fn whole_career_relative_productivity_is_one(c in arb_career()) {
            let m = period_metrics(&c, c.first_year, c.last_year).unwrap().unwrap();
            prop_assert_eq!(m.relative_productivity, 1.0);
            prop_assert!(m.time_devoted >= 1 && m.effort > 0.0);
        }

        #[test]
        fn window_equals_full_on_trimmed_career(c in arb_career(), w in 1u32..4) {
            let Ok(peak) = find_peak(&c) else { return Ok(()); };
            let lo = peak.peak_year - w as i32;
            let hi = peak.peak_year + w as i32;
            let trimmed: Vec<Publication> = c.in_years(lo, hi).cloned().collect();
            let t = Career::new("r", trimmed).unwrap();
            let tp = find_peak(&t).unwrap();
            prop_assert_eq!(tp.peak_paper, peak.peak_paper);
            // boundary status may differ after trimming; compare only when both are interior
            if !peak.is_boundary && !tp.is_boundary {
                let full = phase_averages_at(&t, &tp, PhaseMode::Full).unwrap();
                let win = phase_averages_at(&c, &peak, PhaseMode::Window(w)).unwrap();
                prop_assert_eq!(full, win);
            }
        }
    }
}
