//! Synthetic corpora with planted innovation dynamics.
//!
//! A corpus has two kinds of papers: papers of dedicated researchers, whose
//! careers are drawn to pass (or deliberately fail) the cohort filter, and
//! background papers. Background papers keep the total number of papers per
//! year constant, so the citation environment is stationary and a paper's
//! score distribution depends only on its own parameters.
//!
//! Every paper gets a propensity `pi` in `[0, 1]` and a fitness. A paper of
//! year `y` draws its references from papers of the previous `recency_window`
//! years with weight `fitness * (1 + in_degree)^attachment_exponent`. For each
//! cited paper `f` it also cites one of `f`'s own references with probability
//! `1 - pi_f`. High propensity therefore means citers that ignore the focal
//! paper's references, which is what a high disruption score measures.
//!
//! Innovation profiles set the propensity of researcher papers:
//!
//! - `Iid`: uniform, independent of position in the career.
//! - `FrontLoaded`: uniform times `exp(-decay * career_age)`.
//! - `MagicYear`: one interior active year per career with at least two
//!   papers has its propensity lifted to `U(boost, 1)`.
//! - `EffortCoupled`: `sigmoid(z + strength * ln(effort of the year))`, with
//!   fitness `effort^-impact_strength`. Effort is years since the previous
//!   active year divided by papers in the year.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::careers::CohortFilter;
use crate::ingest::PaperRecord;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible synthetic config: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InnovationProfile {
    Iid,
    FrontLoaded { decay: f64 },
    MagicYear { boost: f64 },
    EffortCoupled { strength: f64, impact_strength: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_authors: usize,
    /// Corpus years, inclusive.
    pub first_year: i32,
    pub last_year: i32,
    /// Career start years, inclusive.
    pub start_min: i32,
    pub start_max: i32,
    /// Career span (last year minus first year), inclusive range.
    pub span_min: i32,
    pub span_max: i32,
    /// Poisson rate of researcher papers per career year.
    pub papers_per_active_year: f64,
    pub max_papers_per_year: u32,
    pub min_papers: usize,
    pub max_gap: i32,
    pub coauthors_mean: f64,
    /// Poisson mean of directly drawn references per paper.
    pub refs_per_paper: f64,
    /// In `[0, 1]`. Scales a paper's reference mean by
    /// `1 - c + 2c(1 - pi)`, so high-propensity papers cite less prior work.
    pub reference_coupling: f64,
    /// Total papers per year; `None` sizes it from the researcher load.
    pub papers_per_year: Option<u32>,
    /// Background papers per year relative to the busiest researcher year,
    /// used when `papers_per_year` is `None`.
    pub background_ratio: f64,
    pub recency_window: i32,
    pub attachment_exponent: f64,
    pub profile: InnovationProfile,
    /// Share of researchers generated to fail the cohort filter.
    pub violation_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_authors: 200,
            first_year: 1970,
            last_year: 2030,
            start_min: 1980,
            start_max: 2000,
            span_min: 20,
            span_max: 25,
            papers_per_active_year: 1.2,
            max_papers_per_year: 8,
            min_papers: 10,
            max_gap: 5,
            coauthors_mean: 2.0,
            refs_per_paper: 6.0,
            reference_coupling: 0.75,
            papers_per_year: None,
            background_ratio: 0.25,
            recency_window: 5,
            attachment_exponent: 0.8,
            profile: InnovationProfile::Iid,
            violation_rate: 0.0,
        }
    }
}

impl SynthConfig {
    /// The cohort filter that generated careers are built to pass.
    pub fn cohort_filter(&self) -> CohortFilter {
        CohortFilter {
            start_min: self.start_min,
            start_max: self.start_max,
            min_span: self.span_min,
            min_papers: self.min_papers,
            max_gap: self.max_gap,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::Infeasible(msg));
        if self.first_year > self.last_year {
            return bad(format!(
                "first_year {} after last_year {}",
                self.first_year, self.last_year
            ));
        }
        if self.start_min > self.start_max || self.span_min > self.span_max || self.span_min < 1 {
            return bad("career start and span ranges must be non-empty and spans positive".into());
        }
        if self.start_min < self.first_year {
            return bad(format!(
                "careers start in {} before the corpus does",
                self.start_min
            ));
        }
        if self.start_max + self.span_max > self.last_year {
            return bad(format!(
                "careers may end in {} after the corpus does",
                self.start_max + self.span_max
            ));
        }
        for (name, v) in [
            ("papers_per_active_year", self.papers_per_active_year),
            ("refs_per_paper", self.refs_per_paper),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite"));
            }
        }
        for (name, v) in [
            ("coauthors_mean", self.coauthors_mean),
            ("background_ratio", self.background_ratio),
            ("attachment_exponent", self.attachment_exponent),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative and finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.reference_coupling) {
            return bad("reference_coupling must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.violation_rate) {
            return bad("violation_rate must lie in [0, 1]".into());
        }
        if self.violation_rate > 0.0 && self.span_max < 2 {
            return bad("violating careers need span_max of at least 2".into());
        }
        if self.recency_window < 1
            || self.max_gap < 1
            || self.max_papers_per_year < 1
            || self.min_papers < 1
        {
            return bad(
                "recency_window, max_gap, max_papers_per_year and min_papers must be positive"
                    .into(),
            );
        }
        let capacity = (self.span_min as usize + 1) * self.max_papers_per_year as usize;
        if capacity < self.min_papers {
            return bad(format!(
                "a {}-year span holds at most {capacity} papers at {} per year, below min_papers {}",
                self.span_min, self.max_papers_per_year, self.min_papers
            ));
        }
        match self.profile {
            InnovationProfile::Iid => {}
            InnovationProfile::FrontLoaded { decay } if decay.is_finite() && decay > 0.0 => {}
            InnovationProfile::MagicYear { boost } if (0.0..=1.0).contains(&boost) => {
                if self.span_min < 2 || self.max_papers_per_year < 2 {
                    return bad(
                        "a magic year needs spans of at least 2 and two papers per year".into(),
                    );
                }
            }
            InnovationProfile::EffortCoupled {
                strength,
                impact_strength,
            } if strength.is_finite() && impact_strength.is_finite() => {}
            p => return bad(format!("invalid profile parameters {p:?}")),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Violation {
    LateStart,
    ShortSpan,
    FewPapers,
    LongGap,
}

/// Ground truth for one generated researcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCareer {
    pub author_id: String,
    pub violation: Option<Violation>,
    pub magic_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    /// Papers sorted by year, ids `P00000000` upward in that order.
    pub records: Vec<PaperRecord>,
    pub careers: Vec<PlantedCareer>,
}

pub fn author_id(i: usize) -> String {
    format!("a{i:06}")
}

struct Paper {
    year: i32,
    authors: Vec<String>,
    propensity: f64,
    fitness: f64,
}

/// Generates a corpus. Identical configs give identical corpora.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_years = (cfg.last_year - cfg.first_year + 1) as usize;
    let slot = |y: i32| (y - cfg.first_year) as usize;

    let mut by_year: Vec<Vec<Paper>> = (0..n_years).map(|_| Vec::new()).collect();
    let mut planted = Vec::with_capacity(cfg.n_authors);
    let mut coauthor_seq = 0u64;
    let coauthors = (cfg.coauthors_mean > 0.0)
        .then(|| Poisson::new(cfg.coauthors_mean).expect("validated rate"));
    for a in 0..cfg.n_authors {
        let id = author_id(a);
        let (counts, start, violation) = career_counts(cfg, &mut rng);
        let magic_year = match cfg.profile {
            InnovationProfile::MagicYear { .. } => Some(plant_magic_year(&counts, start, &mut rng)),
            _ => None,
        };
        let mut counts = counts;
        if let Some(m) = magic_year {
            let i = (m - start) as usize;
            counts[i] = counts[i].max(2);
        }
        let effort = effort_by_year(&counts);
        for (i, &n) in counts.iter().enumerate() {
            let year = start + i as i32;
            for _ in 0..n {
                let u: f64 = rng.random();
                let (propensity, fitness) = match cfg.profile {
                    InnovationProfile::Iid => (u, 1.0),
                    InnovationProfile::FrontLoaded { decay } => {
                        (u * (-decay * i as f64).exp(), 1.0)
                    }
                    InnovationProfile::MagicYear { boost } => {
                        if Some(year) == magic_year {
                            (boost + (1.0 - boost) * u, 1.0)
                        } else {
                            (u, 1.0)
                        }
                    }
                    InnovationProfile::EffortCoupled {
                        strength,
                        impact_strength,
                    } => {
                        let z: f64 = rng.sample(StandardNormal);
                        let e = effort[i].expect("active year");
                        (sigmoid(z + strength * e.ln()), e.powf(-impact_strength))
                    }
                };
                let k = coauthors.as_ref().map_or(0, |d| d.sample(&mut rng) as u64);
                let mut authors = Vec::with_capacity(1 + k as usize);
                authors.push(id.clone());
                for _ in 0..k {
                    authors.push(format!("c{coauthor_seq:08}"));
                    coauthor_seq += 1;
                }
                by_year[slot(year)].push(Paper {
                    year,
                    authors,
                    propensity,
                    fitness,
                });
            }
        }
        planted.push(PlantedCareer {
            author_id: id,
            violation,
            magic_year,
        });
    }

    let busiest = by_year.iter().map(Vec::len).max().unwrap_or(0);
    let total_per_year = match cfg.papers_per_year {
        Some(p) => {
            if (p as usize) < busiest {
                return Err(SynthError::Infeasible(format!(
                    "papers_per_year {p} is below the busiest researcher year ({busiest} papers)"
                )));
            }
            p as usize
        }
        None => busiest + (cfg.background_ratio * busiest as f64).ceil() as usize,
    };
    for (i, papers) in by_year.iter_mut().enumerate() {
        let year = cfg.first_year + i as i32;
        while papers.len() < total_per_year {
            papers.push(Paper {
                year,
                authors: Vec::new(),
                propensity: rng.random(),
                fitness: 1.0,
            });
        }
    }

    let papers: Vec<Paper> = by_year.into_iter().flatten().collect();
    let refs = draw_references(cfg, &papers, &mut rng);
    let width = papers.len().saturating_sub(1).to_string().len().max(8);
    let pid = |i: u32| format!("P{:0width$}", i);
    let records = papers
        .into_iter()
        .zip(refs)
        .enumerate()
        .map(|(i, (p, r))| PaperRecord {
            paper_id: pid(i as u32),
            year: p.year,
            author_ids: p.authors,
            reference_ids: r.into_iter().map(pid).collect(),
        })
        .collect();
    Ok(SynthCorpus {
        records,
        careers: planted,
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Papers per career year and the start year, plus the planted violation.
fn career_counts(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> (Vec<u32>, i32, Option<Violation>) {
    let violation =
        (cfg.violation_rate > 0.0 && rng.random::<f64>() < cfg.violation_rate).then(|| {
            match rng.random_range(0..4) {
                0 => Violation::LateStart,
                1 if cfg.span_min >= 2 => Violation::ShortSpan,
                2 if few_papers_feasible(cfg) => Violation::FewPapers,
                _ if cfg.span_min >= cfg.max_gap + 3 => Violation::LongGap,
                _ => Violation::LateStart,
            }
        });
    let latest_end = cfg.start_max + cfg.span_max;
    let mut start = rng.random_range(cfg.start_min..=cfg.start_max);
    let mut span = rng.random_range(cfg.span_min..=cfg.span_max);
    match violation {
        Some(Violation::LateStart) => {
            start = cfg.start_max + rng.random_range(1..=5);
            span = span.min(latest_end - start).max(1);
        }
        Some(Violation::ShortSpan) => {
            span = rng.random_range((cfg.span_min - 8).max(1)..cfg.span_min);
        }
        _ => {}
    }
    if violation == Some(Violation::FewPapers) {
        span = cfg.span_min;
    }
    let len = span as usize + 1;
    if violation == Some(Violation::FewPapers) {
        let mut counts = vec![0u32; len];
        let min_total = (span + cfg.max_gap - 1) / cfg.max_gap + 1;
        let total = rng.random_range(min_total as usize..cfg.min_papers);
        for i in 0..total {
            counts[(i * span as usize + (total - 1) / 2) / (total - 1)] += 1;
        }
        return (counts, start, violation);
    }

    let rate = Poisson::new(cfg.papers_per_active_year).expect("validated rate");
    let cap = cfg.max_papers_per_year;
    let mut counts: Vec<u32> = (0..len)
        .map(|_| (rate.sample(rng) as u32).min(cap))
        .collect();
    counts[0] = counts[0].max(1);
    counts[len - 1] = counts[len - 1].max(1);
    let mut last = 0usize;
    for i in 1..len {
        if counts[i] > 0 {
            last = i;
        } else if (i - last) as i32 == cfg.max_gap {
            counts[i] = 1;
            last = i;
        }
    }
    let mut protected = None;
    if violation == Some(Violation::LongGap) {
        let gap = rng.random_range(cfg.max_gap + 1..=(cfg.max_gap + 4).min(span - 2));
        let from = rng.random_range(1..span - gap) as usize;
        let to = from + gap as usize;
        counts[from] = counts[from].max(1);
        counts[to] = counts[to].max(1);
        counts[from + 1..to].iter_mut().for_each(|c| *c = 0);
        protected = Some(from + 1..to);
    }
    let open = |i: &usize| !protected.as_ref().is_some_and(|r| r.contains(i));
    let room: usize = (0..len)
        .filter(open)
        .map(|i| (cap - counts[i]) as usize)
        .sum();
    let mut total: usize = counts.iter().map(|&c| c as usize).sum();
    let target = cfg.min_papers.min(total + room);
    while total < target {
        let i = rng.random_range(0..len);
        if counts[i] < cap && open(&i) {
            counts[i] += 1;
            total += 1;
        }
    }
    (counts, start, violation)
}

fn few_papers_feasible(cfg: &SynthConfig) -> bool {
    let min_total = (cfg.span_min + cfg.max_gap - 1) / cfg.max_gap + 1;
    cfg.min_papers > min_total as usize && min_total >= 2
}

fn plant_magic_year(counts: &[u32], start: i32, rng: &mut ChaCha8Rng) -> i32 {
    let interior: Vec<usize> = (1..counts.len() - 1).filter(|&i| counts[i] > 0).collect();
    let i = if interior.is_empty() {
        counts.len() / 2
    } else {
        interior[rng.random_range(0..interior.len())]
    };
    start + i as i32
}

/// Effort of each active year, matching the period metrics of a
/// single-year period.
fn effort_by_year(counts: &[u32]) -> Vec<Option<f64>> {
    let mut prev: Option<usize> = None;
    counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if n == 0 {
                return None;
            }
            let devoted = match prev {
                Some(p) => (i - p) as f64,
                None => (i as f64).max(1.0),
            };
            prev = Some(i);
            Some(devoted / n as f64)
        })
        .collect()
}

/// References of every paper as indices into `papers`, which is sorted by year.
fn draw_references(cfg: &SynthConfig, papers: &[Paper], rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    let n = papers.len();
    let mut refs: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut in_degree = vec![0u32; n];
    let year_start: Vec<usize> = {
        let mut v = Vec::new();
        for y in cfg.first_year..=cfg.last_year + 1 {
            v.push(papers.partition_point(|p| p.year < y));
        }
        v
    };
    let c = cfg.reference_coupling;
    let mut cumulative = Vec::new();
    let mut picked = Vec::new();
    for y in cfg.first_year..=cfg.last_year {
        let yi = (y - cfg.first_year) as usize;
        let (lo, hi) = (year_start[yi], year_start[yi + 1]);
        let win_lo = year_start[(yi as i32 - cfg.recency_window).max(0) as usize];
        let win_hi = lo;
        if win_lo == win_hi {
            continue;
        }
        cumulative.clear();
        let mut acc = 0.0;
        for f in win_lo..win_hi {
            acc += papers[f].fitness * (1.0 + in_degree[f] as f64).powf(cfg.attachment_exponent);
            cumulative.push(acc);
        }
        for q in lo..hi {
            let mean = cfg.refs_per_paper * (1.0 - c + 2.0 * c * (1.0 - papers[q].propensity));
            let m = if mean > 0.0 {
                Poisson::new(mean).expect("positive mean").sample(rng) as usize
            } else {
                0
            };
            picked.clear();
            for _ in 0..m {
                let u = rng.random::<f64>() * acc;
                let k = cumulative
                    .partition_point(|&c| c <= u)
                    .min(cumulative.len() - 1);
                picked.push((win_lo + k) as u32);
            }
            picked.sort_unstable();
            picked.dedup();
            let mut list = Vec::with_capacity(picked.len() * 2);
            for &f in &picked {
                list.push(f);
                let fr = &refs[f as usize];
                if !fr.is_empty() && rng.random::<f64>() >= papers[f as usize].propensity {
                    list.push(fr[rng.random_range(0..fr.len())]);
                }
            }
            list.sort_unstable();
            list.dedup();
            refs[q] = list;
        }
        for q in lo..hi {
            for &f in &refs[q] {
                in_degree[f as usize] += 1;
            }
        }
    }
    refs
}
