//! Builds the cyclic automaton for p = 1523, eps = 0.1 and prints a few
//! acceptance probabilities next to the worst case.

use lpqfa::simulator::{build_qfa, run};
use lpqfa::{accept_prob, cyclic_sequence, required_length, worst_case_epsilon, PrimeModulus};

fn main() -> lpqfa::Result<()> {
    let p = PrimeModulus::new(1523)?;
    let d = required_length(&p, 0.1)?;
    let seq = cyclic_sequence(624, &p, d)?;
    let qfa = build_qfa(&seq)?;
    println!("p = {}, d = {d}, states = {}", p.get(), qfa.dim());
    for j in [0, 1, 2, 761, 1523, 3046] {
        println!("j = {j:5}  closed form {:.6}  simulated {:.6}", accept_prob(&seq, j), run(&qfa, j));
    }
    let worst = worst_case_epsilon(&seq);
    println!("worst eps {:.6} at j = {}", worst.worst_eps, worst.worst_j);
    Ok(())
}
