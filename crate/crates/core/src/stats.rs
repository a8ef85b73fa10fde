//! Two-sample Kolmogorov-Smirnov, Mann-Whitney U and mean/standard error.
//!
//! P-values are asymptotic: the Kolmogorov limiting distribution for KS and
//! the tie-corrected normal approximation with continuity correction for U.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample `{0}` is empty")]
    EmptySample(&'static str),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    /// Alternative: the first sample is stochastically greater.
    Greater,
    /// Alternative: the first sample is stochastically smaller.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub sidedness: Sidedness,
    /// Set when the test statistic has no variance (all values tied).
    pub degenerate: bool,
}

fn check(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptySample("a"));
    }
    if b.is_empty() {
        return Err(StatsError::EmptySample("b"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest absolute ECDF difference over the pooled support.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check(a, b)?;
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // once one sample is exhausted the remaining gap only shrinks
    Ok(d)
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let p = if x < 1.18 {
        // Jacobi theta form converges fast for small x
        let pi = std::f64::consts::PI;
        let f = -pi * pi / (8.0 * x * x);
        let cdf: f64 = (1..=20)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (m * m * f).exp()
            })
            .sum::<f64>()
            * (2.0 * pi).sqrt()
            / x;
        1.0 - cdf
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let k = k as f64;
            let term = (-2.0 * k * k * x * x).exp();
            s += if k as u64 % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// Two-sided two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    let d = ks_statistic(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let en = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(en.sqrt() * d),
        n1,
        n2,
        sidedness: Sidedness::TwoSided,
        degenerate: false,
    })
}

/// Midranks (1-based) of the pooled sample plus the tie term `sum(t^3 - t)`.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&x, &y| pooled[x].total_cmp(&pooled[y]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Mann-Whitney U of `a` against `b`: pairs with `a > b` plus half the ties.
pub fn mwu_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = midranks(&pooled);
    let n1 = a.len() as f64;
    let r1: f64 = ranks[..a.len()].iter().sum();
    Ok(r1 - n1 * (n1 + 1.0) / 2.0)
}

/// Mann-Whitney U test; `statistic` is U of the first sample.
pub fn mwu(a: &[f64], b: &[f64], sidedness: Sidedness) -> Result<TestResult, StatsError> {
    check(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let u = ranks[..n1].iter().sum::<f64>() - f1 * (f1 + 1.0) / 2.0;
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 || !var.is_finite() {
        return Ok(TestResult {
            statistic: u,
            p_value: 1.0,
            n1,
            n2,
            sidedness,
            degenerate: true,
        });
    }
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p = match sidedness {
        Sidedness::TwoSided => {
            let z = ((u - mean).abs() - 0.5) / sd;
            2.0 * normal.sf(z)
        }
        Sidedness::Greater => normal.sf((u - mean - 0.5) / sd),
        Sidedness::Less => normal.cdf((u - mean + 0.5) / sd),
    };
    Ok(TestResult {
        statistic: u,
        p_value: p.clamp(0.0, 1.0),
        n1,
        n2,
        sidedness,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; `None` below two values.
    pub se: Option<f64>,
}

/// Mean and standard error; `None` for an empty sample.
pub fn mean_and_se(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    // Welford
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let se = (xs.len() >= 2).then(|| (m2 / (n - 1.0)).sqrt() / n.sqrt());
    Some(Summary {
        n: xs.len(),
        mean,
        se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [0.3, 1.0, 1.0, 2.5];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = ks_two_sample(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn ks_empty_is_error() {
        assert_eq!(
            ks_two_sample(&[], &[1.0]),
            Err(StatsError::EmptySample("a"))
        );
        assert_eq!(
            mwu(&[1.0], &[], Sidedness::TwoSided),
            Err(StatsError::EmptySample("b"))
        );
    }

    // Reference values from scipy.stats.kstwobign.sf
    #[test]
    fn kolmogorov_tail_reference_values() {
        let cases = [
            (0.5, 0.9639452436648751),
            (1.0, 0.26999967167735456),
            (1.18, 0.1234538094297657),
            (1.36, 0.049485876755377876),
            (1.63, 0.009846364888486529),
            (2.0, 0.0006709252557796953),
        ];
        for (x, p) in cases {
            assert!(
                (kolmogorov_sf(x) - p).abs() < 1e-10,
                "x={x}: {} vs {p}",
                kolmogorov_sf(x)
            );
        }
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn mwu_complete_separation() {
        let r = mwu(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Sidedness::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = mwu(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0], Sidedness::Greater).unwrap();
        assert_eq!(r.statistic, 9.0);
    }

    #[test]
    fn mwu_identical_samples() {
        let a = [0.1, 0.5, 0.2, 0.9, 0.7];
        let r = mwu(&a, &a, Sidedness::TwoSided).unwrap();
        assert!((r.p_value - 1.0).abs() <= 0.02);
    }

    #[test]
    fn mwu_all_tied_is_degenerate() {
        let r = mwu(&[2.0, 2.0], &[2.0, 2.0, 2.0], Sidedness::TwoSided).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    // Reference p-values from scipy.stats.mannwhitneyu(..., method="asymptotic", use_continuity=True)
    #[test]
    fn mwu_reference_p_values() {
        let a = [1.1, 2.3, 2.3, 4.0, 5.5, 6.1, 7.2];
        let b = [0.5, 1.1, 1.9, 2.3, 3.3];
        let cases = [
            (Sidedness::TwoSided, 0.08537800187905002),
            (Sidedness::Greater, 0.04268900093952501),
            (Sidedness::Less, 0.9702268188146321),
        ];
        for (side, p) in cases {
            let r = mwu(&a, &b, side).unwrap();
            assert_eq!(r.statistic, 28.5);
            assert!(
                (r.p_value - p).abs() < 1e-9,
                "{side:?}: {} vs {p}",
                r.p_value
            );
        }
    }

    #[test]
    fn summary_values() {
        let s = mean_and_se(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.se), (1.0, Some(0.0)));
        let s = mean_and_se(&[0.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.se), (1.0, Some(1.0)));
        assert_eq!(mean_and_se(&[3.0]).unwrap().se, None);
        assert!(mean_and_se(&[]).is_none());
    }

    #[test]
    fn summary_matches_two_pass() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..200);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let s = mean_and_se(&xs).unwrap();
            assert!((s.mean - mean).abs() < 1e-12);
            assert!((s.se.unwrap() - (var / n as f64).sqrt()).abs() < 1e-12);
        }
    }

    fn small_sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0i32..6).prop_map(|v| v as f64 * 0.5), 1..12)
    }

    proptest! {
        #[test]
        fn u_statistics_sum_to_n1_n2(a in small_sample(), b in small_sample()) {
            let ua = mwu_statistic(&a, &b).unwrap();
            let ub = mwu_statistic(&b, &a).unwrap();
            prop_assert_eq!(ua + ub, (a.len() * b.len()) as f64);
        }

        #[test]
        fn tests_ignore_sample_order(mut a in small_sample(), b in small_sample()) {
            let ks = ks_two_sample(&a, &b).unwrap();
            let u = mwu(&a, &b, Sidedness::TwoSided).unwrap();
            a.reverse();
            prop_assert_eq!(ks, ks_two_sample(&a, &b).unwrap());
            prop_assert_eq!(u, mwu(&a, &b, Sidedness::TwoSided).unwrap());
        }

        #[test]
        fn p_values_in_unit_interval(a in small_sample(), b in small_sample()) {
            for side in [Sidedness::TwoSided, Sidedness::Greater, Sidedness::Less] {
                let r = mwu(&a, &b, side).unwrap();
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
            let r = ks_two_sample(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }
}
