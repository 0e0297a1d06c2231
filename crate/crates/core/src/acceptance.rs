//! Closed-form acceptance probabilities and worst-case scans.
//!
//! The automaton built from `k_1, ..., k_d` accepts `a^j` with probability
//! `(sum_i cos(2 pi k_i j / p) / d)^2`. Angles are always formed from the exact
//! residue `k_i j mod p`, and `cos(2 pi r / p)` is evaluated on `min(r, p - r)`
//! so that `j` and `p - j` give bit-identical sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::sequences::ParameterSequence;

/// Sequences longer than this are summed with Kahan compensation.
const KAHAN_THRESHOLD: usize = 10_000;

/// Work (in `p * d` terms) above which the j-scan is split across threads.
const PARALLEL_SCAN_THRESHOLD: u64 = 1 << 22;

/// `cos(2 pi r / p)` for a reduced residue `r`.
#[inline]
pub fn unit_cos(r: u64, p: u64) -> f64 {
    let r = r.min(p - r);
    (std::f64::consts::TAU * r as f64 / p as f64).cos()
}

/// `sin(2 pi r / p)` for a reduced residue `r`, odd-symmetric in the same way.
#[inline]
pub fn unit_sin(r: u64, p: u64) -> f64 {
    if 2 * r > p {
        -(std::f64::consts::TAU * (p - r) as f64 / p as f64).sin()
    } else {
        (std::f64::consts::TAU * r as f64 / p as f64).sin()
    }
}

#[inline]
fn residue_product(k: u64, j: u64, p: u64) -> u64 {
    ((k as u128 * j as u128) % p as u128) as u64
}

fn sum_terms(d: usize, terms: impl Iterator<Item = f64>) -> f64 {
    if d > KAHAN_THRESHOLD {
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for t in terms {
            let y = t - carry;
            let s = sum + y;
            carry = (s - sum) - y;
            sum = s;
        }
        sum
    } else {
        terms.sum()
    }
}

/// Precomputed `cos(2 pi r / p)` for every residue `r`.
#[derive(Debug, Clone)]
pub struct CosineTable {
    p: u64,
    values: Vec<f64>,
}

impl CosineTable {
    pub fn new(p: u64) -> Self {
        let values = (0..p).map(|r| unit_cos(r, p)).collect();
        Self { p, values }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn get(&self, r: u64) -> f64 {
        self.values[r as usize]
    }

    /// `sum_i cos(2 pi k_i j / p)`.
    #[inline]
    pub fn cosine_sum(&self, ks: &[u64], j: u64) -> f64 {
        let j = j % self.p;
        sum_terms(ks.len(), ks.iter().map(|&k| self.get(residue_product(k, j, self.p))))
    }

    /// Largest `|cosine_sum|` over `j = 1..p-1`, with the smallest maximizing `j`.
    ///
    /// Only `j <= (p-1)/2` is visited; the other half mirrors it exactly.
    pub fn max_abs_sum(&self, ks: &[u64]) -> (f64, u64) {
        let half = ((self.p - 1) / 2).max(1);
        if self.p * ks.len() as u64 > PARALLEL_SCAN_THRESHOLD {
            let chunk = 256u64;
            (0..half.div_ceil(chunk))
                .into_par_iter()
                .map(|c| self.scan(ks, c * chunk + 1, ((c + 1) * chunk).min(half)))
                .reduce(|| (f64::NEG_INFINITY, 0), pick)
        } else {
            self.scan(ks, 1, half)
        }
    }

    /// Scans `j` in `lo..=hi`, stepping each residue `k_i j mod p` by `k_i`.
    /// Terms are summed in sequence order, so every sum equals [`Self::cosine_sum`] bit for bit.
    fn scan(&self, ks: &[u64], lo: u64, hi: u64) -> (f64, u64) {
        let p = self.p;
        let steps: Vec<u64> = ks.iter().map(|&k| k % p).collect();
        let mut residues: Vec<u64> = steps.iter().map(|&k| residue_product(k, lo, p)).collect();
        let mut best = (f64::NEG_INFINITY, 0u64);
        for j in lo..=hi {
            let s = sum_terms(ks.len(), residues.iter().map(|&r| self.get(r)));
            best = pick(best, (s.abs(), j));
            for (r, &k) in residues.iter_mut().zip(&steps) {
                *r += k;
                if *r >= p {
                    *r -= p;
                }
            }
        }
        best
    }

    pub fn profile(&self, seq: &ParameterSequence) -> AcceptanceProfile {
        assert_eq!(seq.p(), self.p, "sequence and table use different moduli");
        let (max_abs, j) = self.max_abs_sum(seq.ks());
        AcceptanceProfile::from_max(seq.p(), seq.len(), max_abs, j)
    }

    /// Worst-case acceptance probability of the automaton for `ks`.
    pub fn worst_eps(&self, ks: &[u64]) -> f64 {
        let (max_abs, _) = self.max_abs_sum(ks);
        let ratio = max_abs / ks.len() as f64;
        ratio * ratio
    }
}

/// Larger value wins; ties go to the smaller `j`.
#[inline]
fn pick(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Worst-case behaviour of one automaton over all non-members `a^j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceProfile {
    pub p: u64,
    pub d: usize,
    /// Maximum acceptance probability over `j = 1..p-1`.
    pub worst_eps: f64,
    /// Smallest `j` attaining `worst_eps`.
    pub worst_j: u64,
    pub max_abs_cosine_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_j: Option<Vec<f64>>,
}

impl AcceptanceProfile {
    fn from_max(p: u64, d: usize, max_abs: f64, worst_j: u64) -> Self {
        let ratio = max_abs / d as f64;
        Self {
            p,
            d,
            worst_eps: ratio * ratio,
            worst_j,
            max_abs_cosine_sum: max_abs,
            per_j: None,
        }
    }
}

/// `sum_{i=1..d} cos(2 pi k_i j / p)`.
pub fn cosine_sum(seq: &ParameterSequence, j: u64) -> f64 {
    let p = seq.p();
    let j = j % p;
    sum_terms(seq.len(), seq.ks().iter().map(|&k| unit_cos(residue_product(k, j, p), p)))
}

/// Probability that the automaton for `seq` accepts `a^j`.
pub fn accept_prob(seq: &ParameterSequence, j: u64) -> f64 {
    let ratio = cosine_sum(seq, j) / seq.len() as f64;
    ratio * ratio
}

/// Exact scan of `j = 1..p-1`.
pub fn worst_case_epsilon(seq: &ParameterSequence) -> AcceptanceProfile {
    CosineTable::new(seq.p()).profile(seq)
}

/// Like [`worst_case_epsilon`] but also records `cosine_sum` for every `j = 1..p-1`.
pub fn worst_case_epsilon_full(seq: &ParameterSequence) -> AcceptanceProfile {
    let table = CosineTable::new(seq.p());
    let mut profile = table.profile(seq);
    profile.per_j = Some((1..seq.p()).map(|j| table.cosine_sum(seq.ks(), j)).collect());
    profile
}

/// True iff `|cosine_sum(seq, j)| < sqrt(eps) d` for every `j` not divisible by `p`.
pub fn meets_bound(seq: &ParameterSequence, eps: f64) -> bool {
    let profile = worst_case_epsilon(seq);
    profile.max_abs_cosine_sum < eps.sqrt() * seq.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::PrimeModulus;
    use crate::sequences::{cyclic_sequence, random_sequence};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn seq(p: u64, ks: &[u64]) -> ParameterSequence {
        ParameterSequence::explicit(&PrimeModulus::new(p).unwrap(), ks.to_vec()).unwrap()
    }

    /// Independent evaluation: plain floating angle, no table or symmetry folding.
    fn naive_sum(ks: &[u64], j: u64, p: u64) -> f64 {
        ks.iter()
            .map(|&k| (std::f64::consts::TAU * ((k * j) % p) as f64 / p as f64).cos())
            .sum()
    }

    #[test]
    fn cosine_sum_examples() {
        let s = seq(5, &[1, 2, 3, 4]);
        assert_eq!(cosine_sum(&s, 0), 4.0);
        assert_abs_diff_eq!(cosine_sum(&s, 1), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cosine_sum(&seq(2, &[1]), 1), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn accept_prob_examples() {
        let s = seq(5, &[1, 2]);
        assert_abs_diff_eq!(accept_prob(&s, 1), 0.0625, epsilon = 1e-12);
        assert_eq!(accept_prob(&s, 5), 1.0);
        assert_eq!(accept_prob(&s, 0), 1.0);
        let zeros = seq(7, &[0, 0, 0]);
        for j in 0..20 {
            assert_eq!(accept_prob(&zeros, j), 1.0);
        }
    }

    #[test]
    fn worst_case_examples() {
        let p = PrimeModulus::new(1523).unwrap();
        let profile = worst_case_epsilon(&cyclic_sequence(948, &p, 161).unwrap());
        assert!((profile.worst_eps - 0.01517).abs() < 1e-4, "{}", profile.worst_eps);

        let p = PrimeModulus::new(9059).unwrap();
        let profile = worst_case_epsilon(&cyclic_sequence(102, &p, 197).unwrap());
        assert!((profile.worst_eps - 0.02533).abs() < 1e-4, "{}", profile.worst_eps);

        let zeros = worst_case_epsilon(&seq(11, &[0, 0]));
        assert_eq!(zeros.worst_eps, 1.0);
        assert_eq!(zeros.worst_j, 1);
    }

    #[test]
    fn meets_bound_examples() {
        assert!(!meets_bound(&seq(11, &[0, 0, 0]), 0.99));
        let p = PrimeModulus::new(1523).unwrap();
        assert!(meets_bound(&cyclic_sequence(948, &p, 161).unwrap(), 0.1));
        assert!(meets_bound(&seq(5, &[1, 2, 3, 4]), 0.5));
    }

    #[test]
    fn scan_matches_brute_force() {
        for p in [2u64, 3, 5, 13, 101, 409] {
            let pm = PrimeModulus::new(p).unwrap();
            for trial in 0..10 {
                let s = random_sequence(&pm, 1 + trial as usize * 3, 5, trial).unwrap();
                let (mut best, mut best_j) = (-1.0f64, 0);
                for j in 1..p {
                    let v = naive_sum(s.ks(), j, p).abs();
                    if v > best + 1e-12 {
                        best = v;
                        best_j = j;
                    }
                }
                let profile = worst_case_epsilon(&s);
                assert_abs_diff_eq!(profile.max_abs_cosine_sum, best, epsilon = 1e-9);
                assert_abs_diff_eq!(profile.worst_eps, (best / s.len() as f64).powi(2), epsilon = 1e-12);
                let at = naive_sum(s.ks(), profile.worst_j, p).abs();
                assert_abs_diff_eq!(at, best, epsilon = 1e-9);
                assert!(profile.worst_j <= best_j || (at - best).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parallel_scan_is_identical_to_sequential() {
        let p = PrimeModulus::new(100_003).unwrap();
        let s = random_sequence(&p, 200, 3, 0).unwrap();
        let table = CosineTable::new(p.get());
        let (par_max, par_j) = table.max_abs_sum(s.ks());
        let (seq_max, seq_j) = (1..=(p.get() - 1) / 2)
            .map(|j| (table.cosine_sum(s.ks(), j).abs(), j))
            .fold((f64::NEG_INFINITY, 0), pick);
        assert_eq!(par_max.to_bits(), seq_max.to_bits());
        assert_eq!(par_j, seq_j);
    }

    #[test]
    fn full_profile_records_every_j() {
        let s = seq(13, &[1, 5, 8]);
        let profile = worst_case_epsilon_full(&s);
        let per_j = profile.per_j.as_ref().unwrap();
        assert_eq!(per_j.len(), 12);
        let max = per_j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(max, profile.max_abs_cosine_sum);
    }

    #[test]
    fn kahan_path_agrees_with_naive() {
        let p = PrimeModulus::new(10_007).unwrap();
        let s = random_sequence(&p, 20_000, 1, 0).unwrap();
        for j in [1u64, 17, 5003] {
            assert_abs_diff_eq!(cosine_sum(&s, j), naive_sum(s.ks(), j, 10_007), epsilon = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_periodic(idx in 0usize..25, seed in 0u64..1000, d in 1usize..40) {
            let p = crate::numtheory::primes_in_range(2, 100)[idx];
            let s = random_sequence(&PrimeModulus::new(p).unwrap(), d, seed, 0).unwrap();
            for j in 1..p {
                prop_assert_eq!(cosine_sum(&s, j).to_bits(), cosine_sum(&s, p - j).to_bits());
                prop_assert_eq!(accept_prob(&s, j).to_bits(), accept_prob(&s, j + p).to_bits());
            }
            prop_assert!(accept_prob(&s, 3 * p) >= 1.0 - 1e-12);
            let profile = worst_case_epsilon(&s);
            prop_assert!((0.0..=1.0).contains(&profile.worst_eps));
            prop_assert!((1..p).contains(&profile.worst_j));
        }

        #[test]
        fn meets_bound_agrees_with_profile(idx in 0usize..25, seed in 0u64..1000, eps in 0.05f64..0.95) {
            let p = crate::numtheory::primes_in_range(2, 100)[idx];
            let s = random_sequence(&PrimeModulus::new(p).unwrap(), 30, seed, 1).unwrap();
            let worst = worst_case_epsilon(&s).worst_eps;
            prop_assume!((worst - eps).abs() > 1e-9);
            prop_assert_eq!(meets_bound(&s, eps), worst < eps);
        }
    }
}
