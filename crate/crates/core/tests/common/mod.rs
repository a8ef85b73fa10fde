//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use innovation_peaks::ingest::PaperRecord;
use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Expected `(n_i, n_j, n_k)` or `None` when ineligible, by explicit set
/// classification over the raw records.
pub fn disruption_oracle(
    records: &[PaperRecord],
    focal: &str,
    min_window: i32,
    horizon: i32,
    include_same_year: bool,
) -> Option<(u32, u32, u32)> {
    let year: HashMap<&str, i32> = records
        .iter()
        .map(|r| (r.paper_id.as_str(), r.year))
        .collect();
    let refs: HashMap<&str, HashSet<&str>> = records
        .iter()
        .map(|r| {
            let id = r.paper_id.as_str();
            let set = r
                .reference_ids
                .iter()
                .map(String::as_str)
                .filter(|x| *x != id && year.contains_key(x))
                .collect();
            (id, set)
        })
        .collect();
    let fy = year[focal];
    if fy > horizon - min_window {
        return None;
    }
    let prior = &refs[focal];
    let (mut i, mut j, mut k) = (0, 0, 0);
    for p in records {
        let id = p.paper_id.as_str();
        if id == focal || prior.contains(id) {
            continue;
        }
        let later = if include_same_year {
            p.year >= fy
        } else {
            p.year > fy
        };
        if !later || p.year > horizon {
            continue;
        }
        let cites = &refs[id];
        let f = cites.contains(focal);
        let r = cites.iter().any(|c| prior.contains(c));
        match (f, r) {
            (true, false) => i += 1,
            (true, true) => j += 1,
            (false, true) => k += 1,
            (false, false) => {}
        }
    }
    Some((i, j, k))
}

/// Random corpus: `n` papers over a short year range, references to any
/// paper (including later ones, duplicates, self and dangling ids).
pub fn random_records(g: &mut ChaCha8Rng, n: usize) -> Vec<PaperRecord> {
    let years: Vec<i32> = (0..n).map(|_| g.random_range(1990..2006)).collect();
    (0..n)
        .map(|i| {
            let m = g.random_range(0..6);
            let mut refs: Vec<String> = (0..m)
                .map(|_| format!("p{}", g.random_range(0..n)))
                .collect();
            if g.random_bool(0.05) {
                refs.push("missing".into());
            }
            PaperRecord {
                paper_id: format!("p{i}"),
                year: years[i],
                author_ids: vec![],
                reference_ids: refs,
            }
        })
        .collect()
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap();
        let d = x.denom().to_f64().unwrap();
        n / d
    })
}

/// Gauss-Jordan elimination on `a` with several right-hand sides at once;
/// returns the solution columns, `None` when `a` is singular.
fn solve(
    mut a: Vec<Vec<BigRational>>,
    mut rhs: Vec<Vec<BigRational>>,
) -> Option<Vec<Vec<BigRational>>> {
    let k = a.len();
    for c in 0..k {
        let piv = (c..k).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        rhs.swap(c, piv);
        let inv = BigRational::one() / a[c][c].clone();
        for x in a[c].iter_mut().chain(rhs[c].iter_mut()) {
            *x = &*x * &inv;
        }
        for r in 0..k {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for cc in 0..k {
                let v = &a[c][cc] * &f;
                a[r][cc] -= v;
            }
            for cc in 0..rhs[c].len() {
                let v = &rhs[c][cc] * &f;
                rhs[r][cc] -= v;
            }
        }
    }
    Some(rhs)
}

pub struct OracleFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
}

/// Exact normal-equations OLS with an intercept; only the final square
/// roots are taken in floating point.
pub fn ols_oracle(y: &[f64], xs: &[Vec<f64>]) -> Option<OracleFit> {
    let n = y.len();
    let k = xs.len() + 1;
    let col = |j: usize, i: usize| {
        if j == 0 {
            BigRational::one()
        } else {
            q(xs[j - 1][i])
        }
    };
    let x: Vec<Vec<BigRational>> = (0..k)
        .map(|j| (0..n).map(|i| col(j, i)).collect())
        .collect();
    let yq: Vec<BigRational> = y.iter().map(|&v| q(v)).collect();
    let dot = |a: &[BigRational], b: &[BigRational]| {
        a.iter()
            .zip(b)
            .fold(BigRational::zero(), |s, (u, v)| s + u * v)
    };
    let xtx: Vec<Vec<BigRational>> = (0..k)
        .map(|a| (0..k).map(|b| dot(&x[a], &x[b])).collect())
        .collect();
    let xty: Vec<BigRational> = (0..k).map(|a| dot(&x[a], &yq)).collect();
    // right-hand sides: X'y, then the identity for the inverse
    let rhs = (0..k)
        .map(|a| {
            let mut row = vec![xty[a].clone()];
            row.extend((0..k).map(|b| {
                if a == b {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    let sol = solve(xtx, rhs)?;
    let beta: Vec<BigRational> = sol.iter().map(|row| row[0].clone()).collect();
    let resid: Vec<BigRational> = (0..n)
        .map(|i| {
            let fitted = (0..k).fold(BigRational::zero(), |s, j| s + &beta[j] * &x[j][i]);
            &yq[i] - fitted
        })
        .collect();
    let ssr = dot(&resid, &resid);
    let ybar = yq.iter().fold(BigRational::zero(), |s, v| s + v)
        / BigRational::from_integer(BigInt::from(n));
    let sst = yq.iter().fold(BigRational::zero(), |s, v| {
        let d = v - &ybar;
        s + &d * &d
    });
    let sigma2 = &ssr / BigRational::from_integer(BigInt::from(n - k));
    let std_errors = (0..k)
        .map(|j| to_f64(&(&sigma2 * &sol[j][j + 1]).abs()).sqrt())
        .collect();
    let r_squared = if sst.is_zero() {
        1.0
    } else {
        1.0 - to_f64(&(&ssr / &sst))
    };
    Some(OracleFit {
        coefficients: beta.iter().map(to_f64).collect(),
        std_errors,
        r_squared,
    })
}

/// Largest gap between the two empirical CDFs, checked at every data point.
pub fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&t| (cdf(a, t) - cdf(b, t)).abs())
        .fold(0.0, f64::max)
}

/// Pairwise count of `a > b` plus half the ties.
pub fn mwu_brute(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}
