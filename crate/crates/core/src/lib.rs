//! Space-efficient quantum finite automata for `L_p = { a^i : p | i }`.
//!
//! A measure-once automaton with `2d` states recognizes `L_p` with one-sided
//! error `eps` whenever its rotation parameters `k_1, ..., k_d` keep every
//! cosine sum `|sum_i cos(2 pi k_i j / p)|` below `sqrt(eps) d`. This crate
//! builds such parameter sequences, evaluates their acceptance probabilities in
//! closed form, simulates the automaton as explicit unitaries, and runs the
//! experiments that compare random, cyclic and explicit constructions.

pub mod acceptance;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod numtheory;
pub mod report;
pub mod rng;
pub mod sequences;
pub mod simulator;

pub use acceptance::{accept_prob, cosine_sum, meets_bound, worst_case_epsilon, AcceptanceProfile, CosineTable};
pub use error::{QfaError, Result};
pub use numtheory::PrimeModulus;
pub use sequences::{cyclic_sequence, random_sequence, required_length, ParameterSequence, Provenance};
