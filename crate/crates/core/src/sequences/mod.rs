//! Parameter sequences `k_1, ..., k_d` and the length `d` they need.
//!
//! Three recipes are provided: uniform random draws keyed by a master seed,
//! cyclic sequences `g, g^2, ..., g^d` for a primitive root `g`, and the
//! explicit set `T = { s * r^-1 }` (see [`aikps`]).

pub mod aikps;

use serde::Serialize;

use crate::error::{QfaError, Result};
use crate::numtheory::{is_primitive_root, mul_mod, PrimeModulus};
use crate::rng::TrialRng;

pub use aikps::{aikps_sequence, exponential_sum_report, AikpsConfig, AikpsSets, LogBase, ExponentialSumReport};

/// Where a sequence came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Random { master_seed: u64, trial_index: u64 },
    Cyclic { g: u64 },
    Aikps { eps_a: f64 },
    Explicit,
}

/// Whether random draws may produce `k = 0`.
///
/// `k = 0` gives a rotation by zero, i.e. a sub-automaton that never rejects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    #[default]
    Include,
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSequence {
    p: u64,
    ks: Vec<u64>,
    provenance: Provenance,
}

impl ParameterSequence {
    /// Builds a sequence from explicit residues.
    pub fn explicit(p: &PrimeModulus, ks: Vec<u64>) -> Result<Self> {
        Self::with_provenance(p.get(), ks, Provenance::Explicit)
    }

    fn with_provenance(p: u64, ks: Vec<u64>, provenance: Provenance) -> Result<Self> {
        if ks.is_empty() {
            return Err(QfaError::InvalidLength { d: 0, reason: "a sequence needs at least one element" });
        }
        if let Some(&value) = ks.iter().find(|&&k| k >= p) {
            return Err(QfaError::ResidueOutOfRange { value, p });
        }
        Ok(Self { p, ks, provenance })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn ks(&self) -> &[u64] {
        &self.ks
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ks.len()
    }

    /// Always false; sequences hold at least one element.
    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(QfaError::EpsilonOutOfRange(eps))
    }
}

/// The real-valued length `2 ln(2p) / eps` before rounding.
pub fn unrounded_length(p: &PrimeModulus, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(2.0 * (2.0 * p.get() as f64).ln() / eps)
}

/// Sequence length `d = ceil(2 ln(2p) / eps)`.
///
/// Any `d` at least this large makes `2(p-1) exp(-eps d / 2) < 1`.
pub fn required_length(p: &PrimeModulus, eps: f64) -> Result<usize> {
    Ok(unrounded_length(p, eps)?.ceil() as usize)
}

/// Inverse of [`unrounded_length`]: the epsilon for which `d` is exactly long enough.
pub fn epsilon_for_length(p: u64, d: usize) -> f64 {
    2.0 * (2.0 * p as f64).ln() / d as f64
}

/// The union bound `2(p-1) exp(-eps d / 2)` on the failure probability of a random sequence.
pub fn union_bound(p: u64, eps: f64, d: usize) -> f64 {
    2.0 * (p - 1) as f64 * (-eps * d as f64 / 2.0).exp()
}

/// `d` independent uniform residues, determined by `(master_seed, trial_index)`.
pub fn random_sequence(p: &PrimeModulus, d: usize, master_seed: u64, trial_index: u64) -> Result<ParameterSequence> {
    random_sequence_with(p, d, master_seed, trial_index, ZeroPolicy::Include)
}

pub fn random_sequence_with(
    p: &PrimeModulus,
    d: usize,
    master_seed: u64,
    trial_index: u64,
    zeros: ZeroPolicy,
) -> Result<ParameterSequence> {
    if d == 0 {
        return Err(QfaError::InvalidLength { d, reason: "d must be at least 1" });
    }
    let n = p.get();
    let mut rng = TrialRng::new(master_seed, n, trial_index);
    let ks = match zeros {
        ZeroPolicy::Include => (0..d).map(|_| rng.below(n)).collect(),
        ZeroPolicy::Exclude => (0..d).map(|_| 1 + rng.below(n - 1)).collect(),
    };
    ParameterSequence::with_provenance(n, ks, Provenance::Random { master_seed, trial_index })
}

/// `[g, g^2, ..., g^d] mod p` for a primitive root `g`.
pub fn cyclic_sequence(g: u64, p: &PrimeModulus, d: usize) -> Result<ParameterSequence> {
    if !is_primitive_root(g, p) {
        return Err(QfaError::NotPrimitiveRoot { g, p: p.get() });
    }
    cyclic_sequence_unchecked(g, p, d)
}

/// Like [`cyclic_sequence`] but accepts any nonzero `g` and any `d >= 1`.
pub fn cyclic_sequence_unchecked(g: u64, p: &PrimeModulus, d: usize) -> Result<ParameterSequence> {
    let n = p.get();
    if g == 0 || g >= n {
        return Err(QfaError::ResidueOutOfRange { value: g, p: n });
    }
    if d == 0 {
        return Err(QfaError::InvalidLength { d, reason: "d must be at least 1" });
    }
    let ks = std::iter::successors(Some(g), |&x| Some(mul_mod(x, g, n)))
        .take(d)
        .collect();
    ParameterSequence::with_provenance(n, ks, Provenance::Cyclic { g })
}

/// Cyclic sequence with the documented `1 <= d < p` restriction enforced.
pub fn cyclic_sequence_strict(g: u64, p: &PrimeModulus, d: usize) -> Result<ParameterSequence> {
    if d as u64 >= p.get() {
        return Err(QfaError::InvalidLength { d, reason: "cyclic sequences need d < p" });
    }
    cyclic_sequence(g, p, d)
}
