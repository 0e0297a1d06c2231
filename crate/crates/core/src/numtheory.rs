//! Exact modular arithmetic on 64-bit integers.
//!
//! Every product is taken in `u128` so that no intermediate can overflow for
//! moduli up to `2^64`. Primality is decided by Miller-Rabin with a witness
//! set that is deterministic over the whole `u64` range.

use crate::error::{QfaError, Result};

/// Witnesses that make Miller-Rabin exact for every n < 2^64.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod modulus` by square-and-multiply.
pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, modulus);
        }
        b = mul_mod(b, b, modulus);
        exp >>= 1;
    }
    result
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &MR_WITNESSES {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_WITNESSES {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorization by trial division over a 2,3-wheel, sorted by prime.
///
/// Intended for `n < 2^40` or so; beyond that the loop is slow but still correct.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut factors = Vec::new();
    let mut pull = |n: &mut u64, q: u64| {
        let mut e = 0;
        while *n % q == 0 {
            *n /= q;
            e += 1;
        }
        if e > 0 {
            factors.push((q, e));
        }
    };
    pull(&mut n, 2);
    pull(&mut n, 3);
    let mut q = 5u64;
    while q.saturating_mul(q) <= n {
        pull(&mut n, q);
        pull(&mut n, q + 2);
        q += 6;
    }
    if n > 1 {
        factors.push((n, 1));
    }
    factors
}

/// Inverse of `r` modulo `modulus` via the extended Euclidean algorithm.
pub fn mod_inverse(r: u64, modulus: u64) -> Result<u64> {
    let r = r % modulus;
    if r == 0 {
        return Err(QfaError::NotInvertible(r, modulus));
    }
    let (mut old_r, mut cur_r) = (r as i128, modulus as i128);
    let (mut old_s, mut cur_s) = (1i128, 0i128);
    while cur_r != 0 {
        let q = old_r / cur_r;
        (old_r, cur_r) = (cur_r, old_r - q * cur_r);
        (old_s, cur_s) = (cur_s, old_s - q * cur_s);
    }
    if old_r != 1 {
        return Err(QfaError::NotInvertible(r, modulus));
    }
    Ok(old_s.rem_euclid(modulus as i128) as u64)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Euler's totient from a factorization.
pub fn totient_from_factors(factors: &[(u64, u32)]) -> u64 {
    factors
        .iter()
        .map(|&(q, e)| (q - 1) * q.pow(e - 1))
        .product()
}

/// A verified prime together with the factorization of `p - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeModulus {
    p: u64,
    factors: Vec<(u64, u32)>,
}

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if !(2..1u64 << 32).contains(&p) {
            return Err(if is_prime(p) {
                QfaError::ModulusOutOfRange(p)
            } else {
                QfaError::NotPrime(p)
            });
        }
        if !is_prime(p) {
            return Err(QfaError::NotPrime(p));
        }
        let factors = if p == 2 { Vec::new() } else { factorize(p - 1) };
        Ok(Self { p, factors })
    }

    #[inline]
    pub fn get(&self) -> u64 {
        self.p
    }

    /// Factorization of `p - 1` (empty for `p = 2`).
    pub fn factors_p_minus_1(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Number of primitive roots, φ(p - 1).
    pub fn primitive_root_count(&self) -> u64 {
        totient_from_factors(&self.factors)
    }

    pub fn is_primitive_root(&self, g: u64) -> bool {
        is_primitive_root(g, self)
    }

    pub fn primitive_roots(&self) -> Vec<u64> {
        primitive_roots(self)
    }
}

impl std::fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.p)
    }
}

/// True iff `g` has multiplicative order `p - 1` modulo `p`.
pub fn is_primitive_root(g: u64, p: &PrimeModulus) -> bool {
    let n = p.get();
    if g == 0 || g >= n {
        return false;
    }
    p.factors
        .iter()
        .all(|&(q, _)| mod_pow(g, (n - 1) / q, n) != 1)
}

/// Smallest primitive root modulo `p`.
pub fn smallest_primitive_root(p: &PrimeModulus) -> u64 {
    (1..p.get())
        .find(|&g| is_primitive_root(g, p))
        .expect("every prime has a primitive root")
}

/// All primitive roots modulo `p`, ascending.
///
/// Generated as `g0^u` for the smallest root `g0` and every `u` coprime to
/// `p - 1`, which visits each generator exactly once.
pub fn primitive_roots(p: &PrimeModulus) -> Vec<u64> {
    let n = p.get();
    let g0 = smallest_primitive_root(p);
    let order = n - 1;
    let mut roots = Vec::with_capacity(p.primitive_root_count() as usize);
    let mut power = 1u64;
    for u in 1..=order {
        power = mul_mod(power, g0, n);
        if gcd(u, order) == 1 {
            roots.push(power);
        }
    }
    roots.sort_unstable();
    roots
}

/// Primes in `[lo, hi]` by a sieve of Eratosthenes.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let hi_usize = hi as usize;
    let mut composite = vec![false; hi_usize + 1];
    let mut i = 2usize;
    while i * i <= hi_usize {
        if !composite[i] {
            for m in (i * i..=hi_usize).step_by(i) {
                composite[m] = true;
            }
        }
        i += 1;
    }
    (lo.max(2) as usize..=hi_usize)
        .filter(|&k| !composite[k])
        .map(|k| k as u64)
        .collect()
}
