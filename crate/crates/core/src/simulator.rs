//! Explicit simulation of the `2d`-state automaton.
//!
//! States are ordered `q_{1,0}, q_{1,1}, q_{2,0}, q_{2,1}, ...`, so `q_{i,b}`
//! lives at index `2(i - 1) + b`. The left endmarker spreads `q_{1,0}` into
//! `psi_0 = d^{-1/2} sum_i q_{i,0}`, each letter rotates every `(q_{i,0}, q_{i,1})`
//! pair by `2 pi k_i / p`, and the right endmarker folds `psi_0` back onto
//! `q_{1,0}`, the single accepting state. This path never touches the closed
//! form in [`crate::acceptance`] and serves as its oracle.

use crate::error::{QfaError, Result};
use crate::linalg::{self, Matrix, C64};
use crate::sequences::ParameterSequence;

const UNIT_TOLERANCE: f64 = 1e-10;

/// How a unit vector is completed to a unitary matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// A single phased Householder reflection.
    #[default]
    Householder,
    /// Gram-Schmidt of the standard basis against the given column.
    GramSchmidt,
}

/// How `a^j` is applied during [`run_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LetterPower {
    /// Multiply by the letter matrix `j mod p` times.
    #[default]
    Iterated,
    /// Rebuild the block-diagonal power directly from the angles `2 pi k_i j / p`.
    Direct,
}

/// A matrix checked to be unitary at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(Matrix);

impl UnitaryMatrix {
    /// Accepts `m` if `max |m^dagger m - I| < tolerance`.
    pub fn new(m: Matrix, tolerance: f64) -> Result<Self> {
        let defect = m.unitarity_defect();
        if defect < tolerance {
            Ok(Self(m))
        } else {
            Err(QfaError::InvalidArgument(format!("matrix is not unitary (defect {defect:e})")))
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector(self.0.apply(&state.0))
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n = linalg::norm(&amplitudes);
        if (n - 1.0).abs() < UNIT_TOLERANCE {
            Ok(Self(amplitudes))
        } else {
            Err(QfaError::NotUnitVector(n))
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }
}

fn check_unit(alpha: &[C64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(QfaError::InvalidArgument("empty vector".into()));
    }
    let n = linalg::norm(alpha);
    if (n - 1.0).abs() < UNIT_TOLERANCE {
        Ok(())
    } else {
        Err(QfaError::NotUnitVector(n))
    }
}

/// Unitary `U` with `U e_1 = alpha`.
pub fn unitary_with_first_column(alpha: &[C64]) -> Result<UnitaryMatrix> {
    unitary_with_first_column_by(alpha, Completion::Householder)
}

pub fn unitary_with_first_column_by(alpha: &[C64], method: Completion) -> Result<UnitaryMatrix> {
    check_unit(alpha)?;
    let m = match method {
        Completion::Householder => householder_completion(alpha),
        Completion::GramSchmidt => gram_schmidt_completion(alpha),
    };
    UnitaryMatrix::new(m, 1e-12)
}

/// Unitary `U` whose first row is `alpha`, i.e. `<e_1|U|e_i> = alpha_i`.
///
/// Built as the adjoint of the first-column completion of `conj(alpha)`, so
/// `U conj(alpha) = e_1`; for real `alpha` this is `U alpha = e_1`.
pub fn unitary_with_first_row(alpha: &[C64]) -> Result<UnitaryMatrix> {
    unitary_with_first_row_by(alpha, Completion::Householder)
}

pub fn unitary_with_first_row_by(alpha: &[C64], method: Completion) -> Result<UnitaryMatrix> {
    let conj: Vec<C64> = alpha.iter().map(|z| z.conj()).collect();
    Ok(unitary_with_first_column_by(&conj, method)?.adjoint())
}

/// `U = -e^{i phi} (I - 2 v v^dagger / |v|^2)` with `v = e_1 + e^{-i phi} alpha`,
/// where `phi` is the phase of `alpha_1`. The plus sign keeps `|v|^2 >= 2`.
fn householder_completion(alpha: &[C64]) -> Matrix {
    let n = alpha.len();
    let phase = if alpha[0].norm() > 0.0 { alpha[0] / alpha[0].norm() } else { C64::new(1.0, 0.0) };
    let beta: Vec<C64> = alpha.iter().map(|&a| a * phase.conj()).collect();
    let mut v = beta;
    v[0] += 1.0;
    let vv = linalg::norm(&v).powi(2);
    let mut m = Matrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let delta = if r == c { 1.0 } else { 0.0 };
            let h = C64::new(delta, 0.0) - v[r] * v[c].conj() * (2.0 / vv);
            m[(r, c)] = -phase * h;
        }
    }
    m
}

/// First column `alpha`, remaining columns from the standard basis, orthonormalized
/// with two passes of modified Gram-Schmidt.
fn gram_schmidt_completion(alpha: &[C64]) -> Matrix {
    let n = alpha.len();
    let mut columns: Vec<Vec<C64>> = vec![alpha.to_vec()];
    let mut candidate = 0usize;
    while columns.len() < n {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[candidate] = C64::new(1.0, 0.0);
        candidate += 1;
        for _ in 0..2 {
            for q in &columns {
                let proj = linalg::inner(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let len = linalg::norm(&v);
        // Basis vectors nearly in the span so far are skipped.
        if len > 1e-6 {
            columns.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    Matrix::from_columns(&columns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QfaMachine {
    p: u64,
    ks: Vec<u64>,
    v_left: UnitaryMatrix,
    v_letter: UnitaryMatrix,
    v_right: UnitaryMatrix,
}

impl QfaMachine {
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Number of rotation pairs `d`.
    pub fn d(&self) -> usize {
        self.ks.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.ks.len()
    }

    pub fn start_index(&self) -> usize {
        0
    }

    pub fn accept_indices(&self) -> &'static [usize] {
        &[0]
    }

    /// `q_{i,b}` for index `2(i-1) + b`.
    pub fn state_label(&self, index: usize) -> String {
        format!("q_{{{},{}}}", index / 2 + 1, index % 2)
    }

    pub fn v_left(&self) -> &UnitaryMatrix {
        &self.v_left
    }

    pub fn v_letter(&self) -> &UnitaryMatrix {
        &self.v_letter
    }

    pub fn v_right(&self) -> &UnitaryMatrix {
        &self.v_right
    }

    /// `psi_0 = d^{-1/2} sum_i q_{i,0}`.
    pub fn psi0(&self) -> StateVector {
        let amp = C64::new(1.0 / (self.d() as f64).sqrt(), 0.0);
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..self.d() {
            v[2 * i] = amp;
        }
        StateVector(v)
    }

    /// Block-diagonal letter matrix raised to the `j`-th power, from exact angles.
    pub fn letter_power(&self, j: u64) -> Matrix {
        rotation_blocks(&self.ks, j, self.p)
    }
}

/// Embeds a `d x d` operator on the `q_{i,0}` subspace, identity on `q_{i,1}`.
fn embed_even(inner: &Matrix) -> Matrix {
    let d = inner.dim();
    let mut m = Matrix::identity(2 * d);
    for r in 0..d {
        for c in 0..d {
            m[(2 * r, 2 * c)] = inner[(r, c)];
        }
    }
    m
}

fn rotation_blocks(ks: &[u64], j: u64, p: u64) -> Matrix {
    let mut m = Matrix::zeros(2 * ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let (c, s) = single_rotation_state(k, j, p);
        let (a, b) = (2 * i, 2 * i + 1);
        m[(a, a)] = C64::new(c, 0.0);
        m[(b, a)] = C64::new(s, 0.0);
        m[(a, b)] = C64::new(-s, 0.0);
        m[(b, b)] = C64::new(c, 0.0);
    }
    m
}

/// Amplitudes `(cos, sin)` of `(q_0, q_1)` for the two-state rotation automaton
/// with parameter `k` after reading `a^j`.
pub fn single_rotation_state(k: u64, j: u64, p: u64) -> (f64, f64) {
    let r = ((k as u128 * j as u128) % p as u128) as u64;
    let angle = std::f64::consts::TAU * r as f64 / p as f64;
    (angle.cos(), angle.sin())
}

pub fn build_qfa(seq: &ParameterSequence) -> Result<QfaMachine> {
    build_qfa_with(seq, Completion::Householder)
}

pub fn build_qfa_with(seq: &ParameterSequence, completion: Completion) -> Result<QfaMachine> {
    let d = seq.len();
    if d == 0 {
        return Err(QfaError::InvalidLength { d, reason: "d must be at least 1" });
    }
    let uniform = vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d];
    let left = unitary_with_first_column_by(&uniform, completion)?;
    let right = unitary_with_first_row_by(&uniform, completion)?;
    Ok(QfaMachine {
        p: seq.p(),
        ks: seq.ks().to_vec(),
        v_left: UnitaryMatrix::new(embed_even(left.matrix()), 1e-12)?,
        v_letter: UnitaryMatrix::new(rotation_blocks(seq.ks(), 1, seq.p()), 1e-12)?,
        v_right: UnitaryMatrix::new(embed_even(right.matrix()), 1e-12)?,
    })
}

/// Acceptance probability of `a^j`.
pub fn run(machine: &QfaMachine, j: u64) -> f64 {
    run_with(machine, j, LetterPower::Iterated)
}

pub fn run_with(machine: &QfaMachine, j: u64, mode: LetterPower) -> f64 {
    let final_state = trace(machine, j, mode, |_| {});
    final_state.0[machine.start_index()].norm_sqr()
}

/// Runs the machine and reports the state after every applied matrix.
pub fn trace(machine: &QfaMachine, j: u64, mode: LetterPower, mut observe: impl FnMut(&StateVector)) -> StateVector {
    let mut state = StateVector::basis(machine.dim(), machine.start_index());
    state = machine.v_left.apply(&state);
    observe(&state);
    match mode {
        LetterPower::Iterated => {
            for _ in 0..j % machine.p {
                state = machine.v_letter.apply(&state);
                observe(&state);
            }
        }
        LetterPower::Direct => {
            state = StateVector(machine.letter_power(j).apply(&state.0));
            observe(&state);
        }
    }
    state = machine.v_right.apply(&state);
    observe(&state);
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::PrimeModulus;
    use crate::rng::TrialRng;
    use crate::sequences::random_sequence;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_unit(dim: usize, rng: &mut TrialRng) -> Vec<C64> {
        let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.normal(), rng.normal())).collect();
        let n = linalg::norm(&v);
        v.into_iter().map(|z| z / n).collect()
    }

    fn seq(p: u64, ks: &[u64]) -> ParameterSequence {
        ParameterSequence::explicit(&PrimeModulus::new(p).unwrap(), ks.to_vec()).unwrap()
    }

    #[test]
    fn first_column_examples() {
        let e1 = vec![c(1.0), c(0.0), c(0.0)];
        let u = unitary_with_first_column(&e1).unwrap();
        assert!(linalg::max_abs_diff(&u.matrix().column(0), &e1) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = vec![c(h), c(h), c(0.0), c(0.0)];
        for method in [Completion::Householder, Completion::GramSchmidt] {
            let u = unitary_with_first_column_by(&alpha, method).unwrap();
            assert!(linalg::max_abs_diff(&u.matrix().column(0), &alpha) < 1e-15);
        }
    }

    #[test]
    fn completions_of_random_vectors() {
        let mut rng = TrialRng::from_seed(11);
        for dim in [1usize, 2, 3, 8, 64] {
            for _ in 0..100 {
                let alpha = random_unit(dim, &mut rng);
                for method in [Completion::Householder, Completion::GramSchmidt] {
                    let u = unitary_with_first_column_by(&alpha, method).unwrap();
                    assert!(u.matrix().unitarity_defect() < 1e-12);
                    assert!(linalg::max_abs_diff(&u.matrix().column(0), &alpha) < 1e-12);

                    let w = unitary_with_first_row_by(&alpha, method).unwrap();
                    assert!(linalg::max_abs_diff(w.matrix().row(0), &alpha) < 1e-12);
                    let conj: Vec<C64> = alpha.iter().map(|z| z.conj()).collect();
                    let mut e1 = vec![c(0.0); dim];
                    e1[0] = c(1.0);
                    assert!(linalg::max_abs_diff(&w.matrix().apply(&conj), &e1) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn first_row_maps_real_alpha_to_e1() {
        for d in [1usize, 2, 3, 8, 64] {
            let alpha = vec![c(1.0 / (d as f64).sqrt()); d];
            let u = unitary_with_first_row(&alpha).unwrap();
            let out = u.matrix().apply(&alpha);
            assert!((out[0] - c(1.0)).norm() < 1e-12);
            assert!(out[1..].iter().all(|z| z.norm() < 1e-12));
        }
        let e1 = vec![c(1.0), c(0.0)];
        assert_eq!(unitary_with_first_row(&e1).unwrap().matrix().row(0)[1], c(0.0));
    }

    #[test]
    fn first_row_is_adjoint_of_first_column() {
        let mut rng = TrialRng::from_seed(5);
        let alpha = random_unit(5, &mut rng);
        let conj: Vec<C64> = alpha.iter().map(|z| z.conj()).collect();
        let row = unitary_with_first_row(&alpha).unwrap();
        let col = unitary_with_first_column(&conj).unwrap();
        assert!(row.matrix().max_abs_diff(&col.matrix().adjoint()) < 1e-15);
    }

    #[test]
    fn non_unit_inputs_are_rejected() {
        assert!(matches!(
            unitary_with_first_column(&[c(1.0), c(1.0)]),
            Err(QfaError::NotUnitVector(_))
        ));
        assert!(unitary_with_first_row(&[c(0.5)]).is_err());
        assert!(unitary_with_first_column(&[]).is_err());
    }

    #[test]
    fn machine_structure() {
        let m = build_qfa(&seq(5, &[1, 2, 3])).unwrap();
        assert_eq!(m.dim(), 6);
        assert_eq!(m.accept_indices(), &[0]);
        assert_eq!(m.state_label(3), "q_{2,1}");
        for u in [m.v_left(), m.v_letter(), m.v_right()] {
            assert!(u.matrix().unitarity_defect() < 1e-12);
        }
        let psi0 = m.psi0();
        let left = m.v_left().apply(&StateVector::basis(6, 0));
        assert!(linalg::max_abs_diff(left.amplitudes(), psi0.amplitudes()) < 1e-12);
        let folded = m.v_right().apply(&psi0);
        assert!(linalg::max_abs_diff(folded.amplitudes(), StateVector::basis(6, 0).amplitudes()) < 1e-12);
        // q_{i,1} states are fixed by both endmarkers.
        for i in 0..3 {
            let q = StateVector::basis(6, 2 * i + 1);
            assert_eq!(m.v_right().apply(&q), q);
            assert_eq!(m.v_left().apply(&q), q);
        }
        // letter matrix is block diagonal
        let letter = m.v_letter().matrix();
        for r in 0..6 {
            for col in 0..6 {
                if r / 2 != col / 2 {
                    assert_eq!(letter[(r, col)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn single_pair_machine_has_trivial_endmarkers() {
        let m = build_qfa(&seq(7, &[3])).unwrap();
        let left = m.v_left().apply(&StateVector::basis(2, 0));
        assert!((left.amplitudes()[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn run_examples() {
        let m = build_qfa(&seq(5, &[1, 2])).unwrap();
        assert!((run(&m, 0) - 1.0).abs() < 1e-10);
        assert!((run(&m, 5) - 1.0).abs() < 1e-10);
        assert!((run(&m, 10) - 1.0).abs() < 1e-10);
        assert!((run(&m, 1) - 0.0625).abs() < 1e-9);
        assert!((run_with(&m, 1, LetterPower::Direct) - 0.0625).abs() < 1e-9);
    }

    #[test]
    fn norm_is_preserved_along_the_run() {
        let p = PrimeModulus::new(13).unwrap();
        let m = build_qfa(&random_sequence(&p, 6, 1, 0).unwrap()).unwrap();
        for j in 0..=130 {
            trace(&m, j, LetterPower::Iterated, |s| assert!((s.norm() - 1.0).abs() < 1e-10));
        }
        assert!(StateVector::new(vec![c(0.6), c(0.8)]).is_ok());
        assert!(StateVector::new(vec![c(0.6), c(0.6)]).is_err());
    }

    #[test]
    fn letter_matrix_has_period_p() {
        for p in crate::numtheory::primes_in_range(2, 101) {
            let pm = PrimeModulus::new(p).unwrap();
            let m = build_qfa(&random_sequence(&pm, 4, 2, p).unwrap()).unwrap();
            let letter = m.v_letter().matrix();
            let mut power = Matrix::identity(m.dim());
            for _ in 0..p {
                power = power.matmul(letter);
            }
            assert!(power.max_abs_diff(&Matrix::identity(m.dim())) < 1e-8, "p = {p}");
        }
    }

    #[test]
    fn rotation_state_examples() {
        assert_eq!(single_rotation_state(3, 0, 7), (1.0, 0.0));
        assert_eq!(single_rotation_state(3, 7, 7), (1.0, 0.0));
        let (cs, sn) = single_rotation_state(1, 1, 5);
        assert!((cs - 72f64.to_radians().cos()).abs() < 1e-15);
        assert!((sn - 72f64.to_radians().sin()).abs() < 1e-15);
    }

    #[test]
    fn completion_choice_does_not_change_probabilities() {
        let p = PrimeModulus::new(11).unwrap();
        let s = random_sequence(&p, 7, 3, 0).unwrap();
        let a = build_qfa_with(&s, Completion::Householder).unwrap();
        let b = build_qfa_with(&s, Completion::GramSchmidt).unwrap();
        assert!(a.v_left().matrix().max_abs_diff(b.v_left().matrix()) > 1e-3);
        for j in 0..30 {
            assert!((run(&a, j) - run(&b, j)).abs() < 1e-10);
        }
    }
}
