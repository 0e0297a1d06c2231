//! The explicit set `T = { s * r^-1 mod p : r in R, s in S }`.
//!
//! `R` holds the primes in `(L/2, L]` with `L = (log p)^(1 + eps)` and
//! `S = {1, ..., ceil((log p)^(1 + 2 eps))}`. Exponential sums over `T` are
//! uniformly small for large `p`, which makes `T` a deterministic parameter
//! sequence.

use rayon::prelude::*;
use serde::Serialize;

use super::{ParameterSequence, Provenance};
use crate::acceptance::{unit_cos, unit_sin};
use crate::error::{QfaError, Result};
use crate::numtheory::{mod_inverse, mul_mod, primes_in_range, PrimeModulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AikpsConfig {
    pub eps_a: f64,
    pub log_base: LogBase,
}

impl AikpsConfig {
    pub fn new(eps_a: f64) -> Self {
        Self { eps_a, log_base: LogBase::Natural }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AikpsSets {
    pub config: AikpsConfig,
    /// Upper end `L` of the prime window `(L/2, L]`.
    pub window_hi: f64,
    pub primes_r: Vec<u64>,
    /// `S` is `1..=offsets_max`.
    pub offsets_max: u64,
    /// Sorted, without duplicates.
    pub set_t: Vec<u64>,
}

impl AikpsSets {
    pub fn window_lo(&self) -> f64 {
        self.window_hi / 2.0
    }

    pub fn offsets(&self) -> std::ops::RangeInclusive<u64> {
        1..=self.offsets_max
    }
}

/// Builds `R`, `S` and `T`; the returned sequence is `T` in ascending order.
pub fn aikps_sequence(p: &PrimeModulus, config: AikpsConfig) -> Result<(AikpsSets, ParameterSequence)> {
    if !(config.eps_a > 0.0 && config.eps_a.is_finite()) {
        return Err(QfaError::InvalidArgument(format!("eps_a must be positive, got {}", config.eps_a)));
    }
    let n = p.get();
    let log_p = config.log_base.log(n as f64);
    let window_hi = log_p.powf(1.0 + config.eps_a);
    let lo = window_hi / 2.0;
    // Integers r with lo < r <= hi.
    let first = lo.floor() as u64 + 1;
    let last = window_hi.floor() as u64;
    let primes_r: Vec<u64> = primes_in_range(first, last)
        .into_iter()
        .filter(|&r| r % n != 0)
        .collect();
    if primes_r.is_empty() {
        return Err(QfaError::EmptyPrimeInterval { lo, hi: window_hi });
    }
    let offsets_max = log_p.powf(1.0 + 2.0 * config.eps_a).ceil() as u64;

    let mut present = vec![false; n as usize];
    for &r in &primes_r {
        let r_inv = mod_inverse(r, n)?;
        for s in 1..=offsets_max {
            present[mul_mod(s % n, r_inv, n) as usize] = true;
        }
    }
    let set_t: Vec<u64> = (0..n).filter(|&t| present[t as usize]).collect();
    let nonzero = set_t.iter().filter(|&&t| t != 0).count();
    if nonzero as u64 >= n - 1 {
        return Err(QfaError::DegenerateSet { p: n, size: set_t.len() });
    }

    let seq = ParameterSequence::with_provenance(n, set_t.clone(), Provenance::Aikps { eps_a: config.eps_a })?;
    Ok((AikpsSets { config, window_hi, primes_r, offsets_max, set_t }, seq))
}

/// Worst exponential sum over `T` against the bound `(log p)^-eps |T|`.
///
/// Report only: the bound is asymptotic and need not hold at small `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialSumReport {
    pub p: u64,
    pub eps_a: f64,
    pub size_t: usize,
    /// `max_k |sum_t exp(2 pi i t k / p)|` over `k = 1..p-1`.
    pub max_modulus: f64,
    pub argmax_k: u64,
    /// Real part of the sum at `argmax_k`.
    pub real_part_at_max: f64,
    /// `max_modulus / |T|`.
    pub ratio: f64,
    /// `(log p)^-eps`.
    pub bound_ratio: f64,
    pub within_bound: bool,
}

/// Complex exponential sum `sum_t exp(2 pi i t k / p)` as `(re, im)`.
pub fn exponential_sum(set_t: &[u64], k: u64, p: u64) -> (f64, f64) {
    set_t.iter().fold((0.0, 0.0), |(re, im), &t| {
        let r = mul_mod(t, k % p, p);
        (re + unit_cos(r, p), im + unit_sin(r, p))
    })
}

pub fn exponential_sum_report(sets: &AikpsSets, p: &PrimeModulus) -> ExponentialSumReport {
    let n = p.get();
    let (max_modulus, argmax_k, real_part_at_max) = (1..n)
        .into_par_iter()
        .map(|k| {
            let (re, im) = exponential_sum(&sets.set_t, k, n);
            (re.hypot(im), k, re)
        })
        .reduce(
            || (f64::NEG_INFINITY, 0, 0.0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let size_t = sets.set_t.len();
    let ratio = max_modulus / size_t as f64;
    let bound_ratio = sets.config.log_base.log(n as f64).powf(-sets.config.eps_a);
    ExponentialSumReport {
        p: n,
        eps_a: sets.config.eps_a,
        size_t,
        max_modulus,
        argmax_k,
        real_part_at_max,
        ratio,
        bound_ratio,
        within_bound: ratio <= bound_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acceptance::cosine_sum;
    use crate::numtheory::is_prime;

    #[test]
    fn prime_window_for_9973() {
        let p = PrimeModulus::new(9973).unwrap();
        let (sets, seq) = aikps_sequence(&p, AikpsConfig::new(1.0)).unwrap();
        assert_eq!(sets.primes_r, vec![43, 47, 53, 59, 61, 67, 71, 73, 79, 83]);
        // (ln 9973)^2 = 84.78...
        assert!((sets.window_hi - 84.7808).abs() < 1e-3);
        assert_eq!(seq.ks(), sets.set_t.as_slice());
    }

    #[test]
    fn offsets_for_1523() {
        let p = PrimeModulus::new(1523).unwrap();
        let log_p = (1523f64).ln();
        // (ln 1523)^3 = 393.58...
        assert_eq!(log_p.powi(3).ceil() as u64, 394);
        match aikps_sequence(&p, AikpsConfig::new(1.0)) {
            Ok((sets, _)) => assert_eq!(sets.offsets_max, 394),
            Err(QfaError::DegenerateSet { p, .. }) => assert_eq!(p, 1523),
            Err(e) => panic!("unexpected error {e}"),
        }
        let (sets, _) = aikps_sequence(&p, AikpsConfig::new(0.5)).unwrap();
        assert_eq!(sets.offsets_max, log_p.powi(2).ceil() as u64);
    }

    #[test]
    fn construction_invariants() {
        for (p, eps) in [(9973u64, 1.0), (9973, 0.5), (1523, 0.5), (100_003, 0.8)] {
            let pm = PrimeModulus::new(p).unwrap();
            let (sets, _) = aikps_sequence(&pm, AikpsConfig::new(eps)).unwrap();
            for &r in &sets.primes_r {
                assert!(is_prime(r));
                assert!(sets.window_lo() < r as f64 && r as f64 <= sets.window_hi);
            }
            assert!(sets.set_t.windows(2).all(|w| w[0] < w[1]));
            assert!(sets.set_t.iter().all(|&t| t < p));
            // Every t has a witness pair (r, s).
            let inverses: Vec<u64> = sets.primes_r.iter().map(|&r| mod_inverse(r, p).unwrap()).collect();
            for &t in sets.set_t.iter().take(200) {
                let found = inverses.iter().any(|&ri| sets.offsets().any(|s| mul_mod(s, ri, p) == t));
                assert!(found, "t = {t}");
            }
        }
    }

    #[test]
    fn empty_window_is_rejected() {
        let p = PrimeModulus::new(3).unwrap();
        assert!(matches!(
            aikps_sequence(&p, AikpsConfig::new(0.1)),
            Err(QfaError::EmptyPrimeInterval { .. })
        ));
        assert!(aikps_sequence(&p, AikpsConfig::new(-1.0)).is_err());
    }

    #[test]
    fn real_part_matches_cosine_sum() {
        let p = PrimeModulus::new(9973).unwrap();
        let (sets, seq) = aikps_sequence(&p, AikpsConfig::new(1.0)).unwrap();
        for k in [1u64, 2, 77, 4986, 9972] {
            let (re, im) = exponential_sum(&sets.set_t, k, 9973);
            assert!((re - cosine_sum(&seq, k)).abs() < 1e-9);
            assert!(re.abs() <= re.hypot(im));
        }
        let report = exponential_sum_report(&sets, &p);
        assert!(report.max_modulus <= report.size_t as f64);
        assert!((1..9973).contains(&report.argmax_k));
    }

    #[test]
    fn terms_have_unit_modulus() {
        for r in 0..97u64 {
            let (c, s) = (unit_cos(r, 97), unit_sin(r, 97));
            assert!((c.hypot(s) - 1.0).abs() < 1e-15);
        }
    }
}
