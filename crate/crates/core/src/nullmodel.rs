//! Randomized benchmark for peak timing.
//!
//! Each career keeps its publication dates while its defined disruption
//! scores are permuted uniformly at random. Peaks located on the shuffled
//! careers form the null distributions of time-to-peak and papers-to-peak.
//!
//! Every career draws from its own ChaCha8 stream seeded with
//! `SHA-256("shuffle" || seed as u64 LE || author_id)`, so results do not
//! depend on scheduling or on which other careers are present.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::careers::{find_peak, Career};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleConfig {
    pub seed: u64,
    pub replicates: u32,
}

impl Default for ShuffleConfig {
    fn default() -> Self {
        ShuffleConfig {
            seed: 0,
            replicates: 1,
        }
    }
}

pub fn career_rng(seed: u64, author_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"shuffle");
    h.update(seed.to_le_bytes());
    h.update(author_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Permutes the defined scores of `c` over its defined-score slots.
pub fn shuffle_career<R: Rng + ?Sized>(c: &Career, rng: &mut R) -> Career {
    let slots: Vec<usize> = c
        .publications
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.score.map(|_| i))
        .collect();
    let mut out = c.clone();
    if slots.len() < 2 {
        return out;
    }
    let mut values: Vec<f64> = slots
        .iter()
        .map(|&i| c.publications[i].score.unwrap())
        .collect();
    values.shuffle(rng);
    for (&i, v) in slots.iter().zip(values) {
        out.publications[i].score = Some(v);
    }
    out
}

/// Peak location of one (possibly shuffled) career.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakRow {
    pub author_id: String,
    /// 0 for observed data, 1.. for null replicates.
    pub replicate: u32,
    pub time_to_peak: i32,
    pub papers_before_peak: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakSamples {
    pub rows: Vec<PeakRow>,
}

impl PeakSamples {
    pub fn time_to_peak(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time_to_peak as f64).collect()
    }

    pub fn papers_to_peak(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.papers_before_peak as f64)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Peaks of the unshuffled careers, in author-id order. Careers without a
/// defined score are skipped.
pub fn observed_peaks(careers: &BTreeMap<String, Career>) -> PeakSamples {
    let rows = careers
        .values()
        .filter_map(|c| {
            let peak = find_peak(c).ok()?;
            Some(PeakRow {
                author_id: c.author_id.clone(),
                replicate: 0,
                time_to_peak: peak.time_to_peak,
                papers_before_peak: peak.papers_before_peak,
            })
        })
        .collect();
    PeakSamples { rows }
}

/// Pooled null peaks, ordered by author id then replicate.
pub fn null_distributions(careers: &BTreeMap<String, Career>, cfg: &ShuffleConfig) -> PeakSamples {
    let list: Vec<&Career> = careers.values().collect();
    let rows = list
        .par_iter()
        .map(|c| {
            if find_peak(c).is_err() {
                return Vec::new();
            }
            let mut rng = career_rng(cfg.seed, &c.author_id);
            (1..=cfg.replicates)
                .map(|rep| {
                    let shuffled = shuffle_career(c, &mut rng);
                    let peak = find_peak(&shuffled).expect("shuffle keeps defined scores");
                    PeakRow {
                        author_id: c.author_id.clone(),
                        replicate: rep,
                        time_to_peak: peak.time_to_peak,
                        papers_before_peak: peak.papers_before_peak,
                    }
                })
                .collect()
        })
        .collect::<Vec<Vec<PeakRow>>>()
        .into_iter()
        .flatten()
        .collect();
    PeakSamples { rows }
}

/// Fixed-width histogram; bin `i` covers `[origin + i*width, origin + (i+1)*width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub origin: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], origin: f64, width: f64, n_bins: usize) -> Histogram {
        assert!(width > 0.0, "bin width must be positive");
        let mut counts = vec![0u64; n_bins];
        for &v in values {
            let bin = ((v - origin) / width).floor();
            if bin >= 0.0 && (bin as usize) < n_bins {
                counts[bin as usize] += 1;
            }
        }
        Histogram {
            origin,
            width,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts divided by `total * width`.
    pub fn density(&self) -> Vec<f64> {
        let t = self.total() as f64 * self.width;
        self.counts
            .iter()
            .map(|&c| if t > 0.0 { c as f64 / t } else { 0.0 })
            .collect()
    }
}

/// Histograms of two samples over a shared binning that covers both.
pub fn paired_histograms(a: &[f64], b: &[f64], width: f64) -> (Histogram, Histogram) {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (
            Histogram::new(&[], 0.0, width, 0),
            Histogram::new(&[], 0.0, width, 0),
        );
    }
    let origin = (lo / width).floor() * width;
    let n_bins = ((hi - origin) / width).floor() as usize + 1;
    (
        Histogram::new(a, origin, width, n_bins),
        Histogram::new(b, origin, width, n_bins),
    )
}

/// `ln(1 + x)` of every value, for log-binned count histograms.
pub fn log1p_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| x.ln_1p()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::careers::Publication;
    use std::collections::HashMap;

    fn career(id: &str, items: &[(i32, Option<f64>)]) -> Career {
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
        Career::new(id, pubs).unwrap()
    }

    fn scores(c: &Career) -> Vec<Option<f64>> {
        c.publications.iter().map(|p| p.score).collect()
    }

    #[test]
    fn shuffle_preserves_multiset_and_undefined_slots() {
        let c = career(
            "a",
            &[
                (1990, Some(0.1)),
                (1991, None),
                (1995, Some(0.9)),
                (1996, Some(-0.3)),
            ],
        );
        let mut rng = career_rng(1, "a");
        for _ in 0..20 {
            let s = shuffle_career(&c, &mut rng);
            assert_eq!(s.publications[1].score, None);
            let mut got: Vec<f64> = s.publications.iter().filter_map(|p| p.score).collect();
            got.sort_by(f64::total_cmp);
            assert_eq!(got, vec![-0.3, 0.1, 0.9]);
            let years: Vec<i32> = s.publications.iter().map(|p| p.year).collect();
            assert_eq!(years, vec![1990, 1991, 1995, 1996]);
        }
    }

    #[test]
    fn single_defined_score_is_unchanged() {
        let c = career("a", &[(1990, Some(0.4)), (1992, None)]);
        let s = shuffle_career(&c, &mut career_rng(9, "a"));
        assert_eq!(s, c);
    }

    #[test]
    fn permutations_are_uniform() {
        // 3 distinct scores -> 6 orderings, each with probability 1/6
        let c = career(
            "a",
            &[(1990, Some(1.0)), (1991, Some(2.0)), (1992, Some(3.0))],
        );
        let mut rng = career_rng(42, "a");
        let trials = 10_000;
        let mut freq: HashMap<Vec<u64>, u32> = HashMap::new();
        for _ in 0..trials {
            let key = scores(&shuffle_career(&c, &mut rng))
                .into_iter()
                .map(|s| s.unwrap() as u64)
                .collect();
            *freq.entry(key).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        let p = 1.0 / 6.0;
        let mean = trials as f64 * p;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for &count in freq.values() {
            assert!((count as f64 - mean).abs() <= 3.0 * sigma, "count {count}");
        }
    }

    #[test]
    fn constant_scores_peak_at_first_defined_year() {
        let mut careers = BTreeMap::new();
        for id in ["a", "b", "c"] {
            careers.insert(
                id.to_string(),
                career(
                    id,
                    &[
                        (1990, None),
                        (1992, Some(0.5)),
                        (1995, Some(0.5)),
                        (2000, Some(0.5)),
                    ],
                ),
            );
        }
        let null = null_distributions(
            &careers,
            &ShuffleConfig {
                seed: 5,
                replicates: 4,
            },
        );
        assert_eq!(null.len(), 12);
        assert!(null
            .rows
            .iter()
            .all(|r| r.time_to_peak == 2 && r.papers_before_peak == 1));
    }

    #[test]
    fn seeded_output_is_reproducible_and_thread_independent() {
        let mut careers = BTreeMap::new();
        for a in 0..40 {
            let items: Vec<_> = (0..12)
                .map(|i| (1980 + i * 2, Some(((a * 7 + i * 13) % 17) as f64)))
                .collect();
            careers.insert(format!("r{a:03}"), career(&format!("r{a:03}"), &items));
        }
        let cfg = ShuffleConfig {
            seed: 77,
            replicates: 3,
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let x = one.install(|| null_distributions(&careers, &cfg));
        let y = four.install(|| null_distributions(&careers, &cfg));
        assert_eq!(x, y);
        assert_ne!(
            x,
            null_distributions(
                &careers,
                &ShuffleConfig {
                    seed: 78,
                    replicates: 3
                }
            )
        );
    }

    #[test]
    fn histogram_bins() {
        let (a, b) = paired_histograms(&[0.0, 1.0, 1.5, 3.0], &[2.0], 1.0);
        assert_eq!(a.counts, vec![1, 2, 0, 1]);
        assert_eq!(b.counts, vec![0, 0, 1, 0]);
        assert!((a.density().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let logs = log1p_all(&[0.0, (1f64).exp_m1()]);
        assert_eq!(logs[0], 0.0);
        assert!((logs[1] - 1.0).abs() < 1e-12);
    }
}
