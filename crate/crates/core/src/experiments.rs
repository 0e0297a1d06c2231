//! Experiment drivers: table reproductions, generator scans, the cyclic-sequence
//! hypothesis sweep, and Monte Carlo checks of the random construction.
//!
//! Every driver is deterministic given its inputs and master seed. Parallel work
//! items are pure and results are merged in index order, so output does not
//! depend on the number of threads.

use rayon::prelude::*;
use serde_json::Value;

use crate::acceptance::{cosine_sum, worst_case_epsilon, CosineTable};
use crate::error::{QfaError, Result};
use crate::numtheory::{mul_mod, primes_in_range, PrimeModulus};
use crate::report::{ExperimentKind, Metadata, Report};
use crate::rng::TrialRng;
use crate::sequences::{
    aikps_sequence, cyclic_sequence, cyclic_sequence_unchecked, epsilon_for_length, random_sequence_with,
    required_length, exponential_sum_report, union_bound, unrounded_length, AikpsConfig, ZeroPolicy,
};
use crate::simulator::{build_qfa, run_with, LetterPower};

/// Which sequence length enters the `sqrt(eps) d` threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdLength {
    /// The integer length actually used.
    #[default]
    Rounded,
    /// The real value `2 ln(2p) / eps` before the ceiling.
    Unrounded,
}

/// Knobs shared by the seeded experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOptions {
    pub zero_policy: ZeroPolicy,
    /// Replaces `required_length(p, eps)` when set.
    pub d_override: Option<usize>,
    pub threshold: ThresholdLength,
}

impl TrialOptions {
    pub fn length(&self, p: &PrimeModulus, eps: f64) -> Result<usize> {
        let d = required_length(p, eps)?;
        Ok(self.d_override.unwrap_or(d))
    }

    /// `sqrt(eps) d` for the configured length convention.
    pub fn threshold(&self, p: &PrimeModulus, eps: f64, d: usize) -> Result<f64> {
        let len = match self.threshold {
            ThresholdLength::Rounded => d as f64,
            ThresholdLength::Unrounded if self.d_override.is_none() => unrounded_length(p, eps)?,
            ThresholdLength::Unrounded => d as f64,
        };
        Ok(eps.sqrt() * len)
    }

    fn annotate(&self, meta: Metadata) -> Metadata {
        meta.param("exclude_zero_k", self.zero_policy == ZeroPolicy::Exclude)
            .param("d_override", self.d_override.map_or(Value::Null, Value::from))
            .param("unrounded_threshold", self.threshold == ThresholdLength::Unrounded)
    }
}

/// Worst-case epsilon of each trial's random sequence, in trial order.
fn random_worst_eps(
    p: &PrimeModulus,
    table: &CosineTable,
    d: usize,
    trials: u64,
    master_seed: u64,
    zeros: ZeroPolicy,
) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|t| random_sequence_with(p, d, master_seed, t, zeros).map(|s| table.worst_eps(s.ks())))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// 95% normal-approximation half width for a proportion.
pub fn proportion_half_width(rate: f64, n: u64) -> f64 {
    1.96 * (rate * (1.0 - rate) / n as f64).sqrt()
}

fn require_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        Err(QfaError::InvalidArgument(format!("at least {min} trials are required, got {trials}")))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Single evaluations

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub p: u64,
    pub eps: f64,
    pub d: usize,
    pub g: u64,
    pub eps_g: f64,
    pub worst_j: u64,
    pub max_abs_cosine_sum: f64,
    pub threshold: f64,
    pub meets_bound: bool,
}

/// Worst-case epsilon of the cyclic sequence for `g`.
pub fn epsilon_row(p: &PrimeModulus, eps: f64, g: u64, opts: &TrialOptions) -> Result<EpsilonRow> {
    let d = opts.length(p, eps)?;
    let profile = worst_case_epsilon(&cyclic_sequence(g, p, d)?);
    let threshold = opts.threshold(p, eps, d)?;
    Ok(EpsilonRow {
        p: p.get(),
        eps,
        d,
        g,
        eps_g: profile.worst_eps,
        worst_j: profile.worst_j,
        max_abs_cosine_sum: profile.max_abs_cosine_sum,
        threshold,
        meets_bound: profile.max_abs_cosine_sum < threshold,
    })
}

pub fn epsilon_report(rows: &[EpsilonRow], meta: Metadata) -> Report {
    let mut r = Report::new(
        ExperimentKind::Epsilon,
        vec!["p", "eps", "d", "g", "eps_g", "worst_j", "max_abs_cos_sum", "threshold", "meets_bound"],
        meta,
    );
    for row in rows {
        r.push(vec![
            row.p.into(),
            row.eps.into(),
            row.d.into(),
            row.g.into(),
            row.eps_g.into(),
            row.worst_j.into(),
            row.max_abs_cosine_sum.into(),
            row.threshold.into(),
            row.meets_bound.into(),
        ]);
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateRow {
    pub j: u64,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_diff: f64,
}

/// Closed form against the explicit unitary simulation for each word length.
pub fn simulate(seq: &crate::sequences::ParameterSequence, lengths: &[u64], mode: LetterPower) -> Result<Vec<SimulateRow>> {
    let machine = build_qfa(seq)?;
    Ok(lengths
        .iter()
        .map(|&j| {
            let closed_form = crate::acceptance::accept_prob(seq, j);
            let oracle = run_with(&machine, j, mode);
            SimulateRow { j, closed_form, oracle, abs_diff: (closed_form - oracle).abs() }
        })
        .collect())
}

pub fn simulate_report(rows: &[SimulateRow], meta: Metadata) -> Report {
    let mut r = Report::new(ExperimentKind::Simulate, vec!["j", "closed_form", "oracle", "abs_diff"], meta);
    for row in rows {
        r.push(vec![row.j.into(), row.closed_form.into(), row.oracle.into(), row.abs_diff.into()]);
    }
    let max_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    r.summary("max_abs_diff", max_diff);
    r
}

// ---------------------------------------------------------------------------
// Tables 1-3

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub p: u64,
    pub eps: f64,
    pub d: usize,
    pub g: u64,
    /// Mean worst-case epsilon over the random trials.
    pub eps_rand: f64,
    pub eps_g: f64,
}

pub fn table1_row(
    p: &PrimeModulus,
    eps: f64,
    g: u64,
    trials: u64,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<Table1Row> {
    require_trials(trials, 1)?;
    let d = opts.length(p, eps)?;
    let cyclic = cyclic_sequence(g, p, d)?;
    let table = CosineTable::new(p.get());
    let eps_g = table.worst_eps(cyclic.ks());
    let randoms = random_worst_eps(p, &table, d, trials, master_seed, opts.zero_policy)?;
    Ok(Table1Row { p: p.get(), eps, d, g, eps_rand: mean(&randoms), eps_g })
}

pub fn table1_report(rows: &[Table1Row], meta: Metadata) -> Report {
    let mut r = Report::new(ExperimentKind::Table1, vec!["p", "eps", "d", "g", "eps_rand", "eps_g"], meta);
    for row in rows {
        r.push(vec![row.p.into(), row.eps.into(), row.d.into(), row.g.into(), row.eps_rand.into(), row.eps_g.into()]);
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    pub p: u64,
    pub eps: f64,
    pub d: usize,
    pub g: u64,
    pub eps_g: f64,
}

/// Worst-case epsilon for each listed generator at a fixed `(p, eps)`.
pub fn table2_scan(p: &PrimeModulus, eps: f64, generators: &[u64], opts: &TrialOptions) -> Result<Vec<Table2Row>> {
    let d = opts.length(p, eps)?;
    let table = CosineTable::new(p.get());
    let sequences = generators
        .iter()
        .map(|&g| cyclic_sequence(g, p, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(sequences
        .par_iter()
        .zip(generators.par_iter())
        .map(|(s, &g)| Table2Row { p: p.get(), eps, d, g, eps_g: table.worst_eps(s.ks()) })
        .collect())
}

pub fn table2_report(rows: &[Table2Row], meta: Metadata) -> Report {
    let mut r = Report::new(ExperimentKind::Table2, vec!["p", "eps", "d", "g", "eps_g"], meta);
    for row in rows {
        r.push(vec![row.p.into(), row.eps.into(), row.d.into(), row.g.into(), row.eps_g.into()]);
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinGenRow {
    pub p: u64,
    pub eps: f64,
    pub d: usize,
    pub g_min: u64,
    pub eps_g_min: f64,
    /// Number of primitive roots scanned, φ(p - 1).
    pub generators: usize,
    /// Every generator within [`TIE_TOLERANCE`] of the minimum, ascending.
    pub tied: Vec<u64>,
}

/// Worst-case epsilons closer than this count as equal when picking a minimum.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Generators whose cyclic sequences have exactly the same worst-case epsilon
/// as `g`: `g^-1` walks the same orbit backwards and `-g` only flips signs
/// inside the (even) cosine. Returns the members that are primitive roots, ascending.
pub fn symmetry_class(g: u64, p: &PrimeModulus) -> Vec<u64> {
    let n = p.get();
    let inv = crate::numtheory::mod_inverse(g, n).expect("generators are invertible");
    let mut class: Vec<u64> = [g, inv, n - g, n - inv]
        .into_iter()
        .filter(|&h| p.is_primitive_root(h))
        .collect();
    class.sort_unstable();
    class.dedup();
    class
}

/// Exhaustive search for the primitive root with the smallest worst-case epsilon.
/// Values within [`TIE_TOLERANCE`] of the minimum are ties, won by the smallest generator.
pub fn minimal_generator(p: &PrimeModulus, eps: f64, opts: &TrialOptions) -> Result<MinGenRow> {
    let d = opts.length(p, eps)?;
    let n = p.get();
    let table = CosineTable::new(n);
    let roots = p.primitive_roots();
    let values: Vec<f64> = roots
        .par_iter()
        .map(|&g| {
            let ks: Vec<u64> = std::iter::successors(Some(g), |&x| Some(mul_mod(x, g, n))).take(d).collect();
            table.worst_eps(&ks)
        })
        .collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<u64> = roots
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v <= best + TIE_TOLERANCE)
        .map(|(&g, _)| g)
        .collect();
    let g_min = tied[0];
    let eps_g_min = values[roots.binary_search(&g_min).expect("g_min is a root")];
    Ok(MinGenRow { p: n, eps, d, g_min, eps_g_min, generators: roots.len(), tied })
}

pub fn mingen_report(rows: &[MinGenRow], meta: Metadata) -> Report {
    let mut r = Report::new(ExperimentKind::MinGen, vec!["p", "eps", "d", "g_min", "eps_g_min"], meta);
    for row in rows {
        r.push(vec![row.p.into(), row.eps.into(), row.d.into(), row.g_min.into(), row.eps_g_min.into()]);
    }
    r
}

// ---------------------------------------------------------------------------
// Hypothesis sweep

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthPolicy {
    /// The single length `required_length(p, eps)`.
    FromEps(f64),
    /// Every `d` in `1..p`.
    AllBelowP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub p: u64,
    pub g: u64,
    pub d: usize,
    pub j: u64,
    pub cos_sum: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HypothesisOutcome {
    pub primes: usize,
    pub generators: u64,
    /// `(p, g, d)` combinations checked.
    pub cases: u64,
    /// Largest `|cosine sum| / sqrt(2 d ln 2p)` seen.
    pub max_ratio: f64,
    /// Primes skipped because the requested length is not below `p`.
    pub skipped_primes: usize,
    pub counterexamples: Vec<Counterexample>,
}

/// `sqrt(eps(d)) d` with `eps(d) = 2 ln(2p) / d`, i.e. `sqrt(2 d ln 2p)`.
pub fn hypothesis_threshold(p: u64, d: usize) -> f64 {
    epsilon_for_length(p, d).sqrt() * d as f64
}

/// `cos(2 pi g^n / p)` for `n = 0..p-2`: the cosines along the orbit of `g`.
fn orbit_cosines(g: u64, p: u64, table: &CosineTable) -> Vec<f64> {
    let n = (p - 1) as usize;
    let mut out = Vec::with_capacity(n);
    let mut x = 1u64;
    for _ in 0..n {
        out.push(table.get(x));
        x = mul_mod(x, g, p);
    }
    out
}

struct GeneratorScan {
    cases: u64,
    max_ratio: f64,
    /// `(d, offset m)` pairs whose window sum came close to the threshold.
    candidates: Vec<(usize, usize)>,
}

/// Window sums `S_d(m) = sum_{i=1..d} cos(2 pi g^(i+m) / p)` cover every
/// `j = g^m`, so one orbit per generator replaces a scan over all `j`.
fn scan_generator(g: u64, p: u64, table: &CosineTable, lengths: &[usize]) -> GeneratorScan {
    let orbit = orbit_cosines(g, p, table);
    let n = orbit.len();
    let mut out = GeneratorScan { cases: 0, max_ratio: 0.0, candidates: Vec::new() };
    let check = |d: usize, m: usize, s: f64, out: &mut GeneratorScan| {
        let thr = hypothesis_threshold(p, d);
        let ratio = s.abs() / thr;
        out.max_ratio = out.max_ratio.max(ratio);
        // Running sums drift slightly; anything near the line is rechecked exactly.
        if s.abs() >= thr - 1e-7 * (d as f64 + 1.0) {
            out.candidates.push((d, m));
        }
    };
    match lengths {
        [d] => {
            let d = *d;
            let mut s: f64 = (1..=d).map(|i| orbit[i % n]).sum();
            for m in 0..n {
                check(d, m, s, &mut out);
                s += orbit[(m + 1 + d) % n] - orbit[(m + 1) % n];
            }
            out.cases += 1;
        }
        _ => {
            // Lengths are ascending and contiguous from 1: grow every window by one term.
            let mut sums = vec![0.0f64; n];
            let mut prev = 0usize;
            for &d in lengths {
                for len in prev + 1..=d {
                    for (m, s) in sums.iter_mut().enumerate() {
                        *s += orbit[(m + len) % n];
                    }
                }
                prev = d;
                for (m, &s) in sums.iter().enumerate() {
                    check(d, m, s, &mut out);
                }
                out.cases += 1;
            }
        }
    }
    out
}

/// Checks `|sum_i cos(2 pi g^i j / p)| < sqrt(2 d ln 2p)` for every prime in
/// `[p_lo, p_hi]`, every primitive root `g`, every `j` in `1..p-1` and every `d`
/// chosen by `policy`. Near-threshold cases are recomputed directly, and only
/// those that fail the direct check are returned as counterexamples.
pub fn hypothesis_scan(p_lo: u64, p_hi: u64, policy: LengthPolicy) -> Result<HypothesisOutcome> {
    if let LengthPolicy::FromEps(eps) = policy {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(QfaError::EpsilonOutOfRange(eps));
        }
    }
    let primes = primes_in_range(p_lo, p_hi);
    if primes.is_empty() {
        return Err(QfaError::InvalidArgument(format!("no primes in [{p_lo}, {p_hi}]")));
    }
    let per_prime = primes
        .par_iter()
        .map(|&p| hypothesis_for_prime(p, policy))
        .collect::<Result<Vec<_>>>()?;
    let mut outcome = HypothesisOutcome { primes: primes.len(), ..Default::default() };
    for part in per_prime {
        outcome.generators += part.generators;
        outcome.cases += part.cases;
        outcome.max_ratio = outcome.max_ratio.max(part.max_ratio);
        outcome.skipped_primes += part.skipped_primes;
        outcome.counterexamples.extend(part.counterexamples);
    }
    Ok(outcome)
}

fn hypothesis_for_prime(p: u64, policy: LengthPolicy) -> Result<HypothesisOutcome> {
    let pm = PrimeModulus::new(p)?;
    let lengths: Vec<usize> = match policy {
        LengthPolicy::FromEps(eps) => vec![required_length(&pm, eps)?],
        LengthPolicy::AllBelowP => (1..p as usize).collect(),
    };
    // Cyclic sequences are only defined for d < p.
    if lengths.iter().any(|&d| d as u64 >= p) {
        return Ok(HypothesisOutcome { primes: 1, skipped_primes: 1, ..Default::default() });
    }
    let table = CosineTable::new(p);
    let roots = pm.primitive_roots();
    let scans: Vec<(u64, GeneratorScan)> = roots
        .par_iter()
        .map(|&g| (g, scan_generator(g, p, &table, &lengths)))
        .collect();

    let mut outcome = HypothesisOutcome { primes: 1, generators: roots.len() as u64, ..Default::default() };
    for (g, scan) in scans {
        outcome.cases += scan.cases;
        outcome.max_ratio = outcome.max_ratio.max(scan.max_ratio);
        for (d, m) in scan.candidates {
            let seq = cyclic_sequence_unchecked(g, &pm, d)?;
            let j = crate::numtheory::mod_pow(g, m as u64, p);
            let cos_sum = cosine_sum(&seq, j);
            let threshold = hypothesis_threshold(p, d);
            if cos_sum.abs() >= threshold {
                outcome.counterexamples.push(Counterexample { p, g, d, j, cos_sum, threshold });
            }
        }
    }
    Ok(outcome)
}

pub fn hypothesis_report(outcome: &HypothesisOutcome, meta: Metadata) -> Report {
    let mut r = Report::new(ExperimentKind::Hypothesis, vec!["p", "g", "d", "j", "cos_sum", "threshold"], meta);
    for c in &outcome.counterexamples {
        r.push(vec![c.p.into(), c.g.into(), c.d.into(), c.j.into(), c.cos_sum.into(), c.threshold.into()]);
    }
    r.summary("primes", outcome.primes);
    r.summary("generators", outcome.generators);
    r.summary("cases", outcome.cases);
    r.summary("max_ratio", outcome.max_ratio);
    r.summary("skipped_primes", outcome.skipped_primes);
    r.summary("counterexamples", outcome.counterexamples.len());
    r
}

// ---------------------------------------------------------------------------
// Random construction

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessRate {
    pub p: u64,
    pub eps: f64,
    pub d: usize,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci95_half_width: f64,
    /// `2(p-1) exp(-eps d / 2)`, an upper bound on the failure probability.
    pub union_bound: f64,
}

/// Fraction of random sequences meeting `max_j |cosine sum| < sqrt(eps) d`.
pub fn random_success_rate(
    p: &PrimeModulus,
    eps: f64,
    trials: u64,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<SuccessRate> {
    require_trials(trials, 100)?;
    let d = opts.length(p, eps)?;
    let threshold = opts.threshold(p, eps, d)?;
    let table = CosineTable::new(p.get());
    let passes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            random_sequence_with(p, d, master_seed, t, opts.zero_policy)
                .map(|s| table.max_abs_sum(s.ks()).0 < threshold)
        })
        .collect::<Result<_>>()?;
    let successes = passes.iter().filter(|&&ok| ok).count() as u64;
    let rate = successes as f64 / trials as f64;
    Ok(SuccessRate {
        p: p.get(),
        eps,
        d,
        trials,
        successes,
        rate,
        ci95_half_width: proportion_half_width(rate, trials),
        union_bound: union_bound(p.get(), eps, d),
    })
}

pub fn success_rate_report(rows: &[SuccessRate], meta: Metadata) -> Report {
    let mut r = Report::new(
        ExperimentKind::RandomRate,
        vec!["p", "eps", "d", "trials", "successes", "rate", "ci95", "union_bound"],
        meta,
    );
    for row in rows {
        r.push(vec![
            row.p.into(),
            row.eps.into(),
            row.d.into(),
            row.trials.into(),
            row.successes.into(),
            row.rate.into(),
            row.ci95_half_width.into(),
            row.union_bound.into(),
        ]);
    }
    r
}

/// How generators are picked for each prime in [`random_vs_cyclic`].
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorChoice {
    All,
    /// This many distinct primitive roots, drawn with the master seed.
    Sample(usize),
    /// Fixed generators, used for every prime where they are primitive roots.
    List(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub p: u64,
    pub eps: f64,
    pub d: usize,
    pub g: u64,
    pub eps_g: f64,
    pub eps_rand: f64,
    pub cyclic_better: bool,
    /// Fraction of individual random sequences with a smaller worst-case epsilon than `S_g`.
    pub frac_random_better: f64,
    pub meets_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub win_rate: f64,
    pub ci95_half_width: f64,
}

/// Picks `count` distinct primitive roots of `p`, ascending.
pub fn sample_generators(p: &PrimeModulus, count: usize, master_seed: u64) -> Vec<u64> {
    let mut roots = p.primitive_roots();
    let mut rng = TrialRng::new(master_seed ^ 0x6765_6E65_7261_746F, p.get(), 0);
    let take = count.min(roots.len());
    for i in 0..take {
        let k = i + rng.below((roots.len() - i) as u64) as usize;
        roots.swap(i, k);
    }
    roots.truncate(take);
    roots.sort_unstable();
    roots
}

/// Cyclic sequences against the mean of `trials` random sequences for every
/// sampled `(p, eps, g)`. Report only: no pass/fail threshold is attached.
pub fn random_vs_cyclic(
    primes: &[PrimeModulus],
    eps_samples: &[f64],
    choice: &GeneratorChoice,
    trials: u64,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<Comparison> {
    require_trials(trials, 1)?;
    if primes.is_empty() || eps_samples.is_empty() {
        return Err(QfaError::InvalidArgument("sample grids must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for p in primes {
        let table = CosineTable::new(p.get());
        let generators = match choice {
            GeneratorChoice::All => p.primitive_roots(),
            GeneratorChoice::Sample(n) => sample_generators(p, *n, master_seed),
            GeneratorChoice::List(list) => list.iter().copied().filter(|&g| p.is_primitive_root(g)).collect(),
        };
        for &eps in eps_samples {
            let d = opts.length(p, eps)?;
            let threshold = opts.threshold(p, eps, d)?;
            let randoms = random_worst_eps(p, &table, d, trials, master_seed, opts.zero_policy)?;
            let eps_rand = mean(&randoms);
            let per_g: Vec<CompareRow> = generators
                .par_iter()
                .map(|&g| {
                    let seq = cyclic_sequence(g, p, d)?;
                    let (max_abs, _) = table.max_abs_sum(seq.ks());
                    let ratio = max_abs / d as f64;
                    let eps_g = ratio * ratio;
                    let better = randoms.iter().filter(|&&e| e < eps_g).count();
                    Ok(CompareRow {
                        p: p.get(),
                        eps,
                        d,
                        g,
                        eps_g,
                        eps_rand,
                        cyclic_better: eps_g < eps_rand,
                        frac_random_better: better as f64 / randoms.len() as f64,
                        meets_bound: max_abs < threshold,
                    })
                })
                .collect::<Result<_>>()?;
            rows.extend(per_g);
        }
    }
    let wins = rows.iter().filter(|r| r.cyclic_better).count();
    let win_rate = if rows.is_empty() { 0.0 } else { wins as f64 / rows.len() as f64 };
    let ci95_half_width = if rows.is_empty() { 0.0 } else { proportion_half_width(win_rate, rows.len() as u64) };
    Ok(Comparison { rows, win_rate, ci95_half_width })
}

pub fn comparison_report(cmp: &Comparison, meta: Metadata) -> Report {
    let mut r = Report::new(
        ExperimentKind::RandomVsCyclic,
        vec!["p", "eps", "d", "g", "eps_g", "eps_rand", "cyclic_better", "frac_random_better", "meets_bound"],
        meta,
    );
    for row in &cmp.rows {
        r.push(vec![
            row.p.into(),
            row.eps.into(),
            row.d.into(),
            row.g.into(),
            row.eps_g.into(),
            row.eps_rand.into(),
            row.cyclic_better.into(),
            row.frac_random_better.into(),
            row.meets_bound.into(),
        ]);
    }
    r.summary("instances", cmp.rows.len());
    r.summary("win_rate", cmp.win_rate);
    r.summary("win_rate_ci95", cmp.ci95_half_width);
    r
}

// ---------------------------------------------------------------------------
// Tail bound

#[derive(Debug, Clone, PartialEq)]
pub struct TailRow {
    pub lambda: f64,
    pub empirical: f64,
    /// `2 exp(-lambda^2 / 2d)`.
    pub bound: f64,
    pub sigma: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    pub p: u64,
    pub d: usize,
    pub j: u64,
    pub trials: u64,
    pub rows: Vec<TailRow>,
    /// Mean of the individual terms `cos(2 pi k j / p)`.
    pub term_mean: f64,
    pub term_mean_sigma: f64,
}

impl TailCheck {
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.within_bound)
    }

    pub fn mean_is_zero(&self) -> bool {
        self.term_mean.abs() <= 3.0 * self.term_mean_sigma
    }
}

/// Empirical `Pr[|sum_i cos(2 pi k_i j / p)| >= lambda]` over random sequences,
/// compared with `2 exp(-lambda^2 / 2d)` plus three binomial standard errors.
pub fn azuma_tail_check(
    p: &PrimeModulus,
    d: usize,
    lambdas: &[f64],
    trials: u64,
    master_seed: u64,
    j: u64,
    zeros: ZeroPolicy,
) -> Result<TailCheck> {
    require_trials(trials, 1000)?;
    if j % p.get() == 0 {
        return Err(QfaError::InvalidArgument("j must not be divisible by p".into()));
    }
    let table = CosineTable::new(p.get());
    // Per trial: (sum of terms, sum of squared terms).
    let sums: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            random_sequence_with(p, d, master_seed, t, zeros).map(|s| {
                s.ks().iter().fold((0.0, 0.0), |(a, b), &k| {
                    let c = table.get(mul_mod(k, j, p.get()));
                    (a + c, b + c * c)
                })
            })
        })
        .collect::<Result<_>>()?;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let hits = sums.iter().filter(|(s, _)| s.abs() >= lambda).count();
            let empirical = hits as f64 / trials as f64;
            let bound = 2.0 * (-lambda * lambda / (2.0 * d as f64)).exp();
            let q = bound.min(1.0);
            let sigma = (q * (1.0 - q) / trials as f64).sqrt();
            TailRow { lambda, empirical, bound, sigma, within_bound: empirical <= bound + 3.0 * sigma }
        })
        .collect();
    let count = (trials * d as u64) as f64;
    let total: f64 = sums.iter().map(|(s, _)| s).sum();
    let total_sq: f64 = sums.iter().map(|(_, q)| q).sum();
    let term_mean = total / count;
    let variance = (total_sq / count - term_mean * term_mean).max(0.0);
    Ok(TailCheck {
        p: p.get(),
        d,
        j,
        trials,
        rows,
        term_mean,
        term_mean_sigma: (variance / count).sqrt(),
    })
}

pub fn tail_report(check: &TailCheck, meta: Metadata) -> Report {
    let mut r = Report::new(
        ExperimentKind::AzumaTail,
        vec!["p", "d", "j", "lambda", "empirical", "bound", "sigma", "within_bound"],
        meta,
    );
    for row in &check.rows {
        r.push(vec![
            check.p.into(),
            check.d.into(),
            check.j.into(),
            row.lambda.into(),
            row.empirical.into(),
            row.bound.into(),
            row.sigma.into(),
            row.within_bound.into(),
        ]);
    }
    r.summary("trials", check.trials);
    r.summary("term_mean", check.term_mean);
    r.summary("term_mean_sigma", check.term_mean_sigma);
    r.summary("mean_is_zero", check.mean_is_zero());
    r
}

// ---------------------------------------------------------------------------
// Explicit construction

#[derive(Debug, Clone, PartialEq)]
pub struct AikpsRow {
    pub p: u64,
    pub eps_a: f64,
    pub primes_r: usize,
    pub offsets: u64,
    pub size_t: usize,
    pub max_modulus: f64,
    pub ratio: f64,
    pub bound_ratio: f64,
    pub within_bound: bool,
    /// Worst-case epsilon of the automaton whose parameters are `T`.
    pub eps_t: f64,
    /// `|Re(sum) - cosine_sum|` at the maximizing `k`.
    pub real_part_error: f64,
}

pub fn aikps_row(p: &PrimeModulus, config: AikpsConfig) -> Result<AikpsRow> {
    let (sets, seq) = aikps_sequence(p, config)?;
    let bound = exponential_sum_report(&sets, p);
    let real_part_error = (bound.real_part_at_max - cosine_sum(&seq, bound.argmax_k)).abs();
    Ok(AikpsRow {
        p: p.get(),
        eps_a: config.eps_a,
        primes_r: sets.primes_r.len(),
        offsets: sets.offsets_max,
        size_t: bound.size_t,
        max_modulus: bound.max_modulus,
        ratio: bound.ratio,
        bound_ratio: bound.bound_ratio,
        within_bound: bound.within_bound,
        eps_t: worst_case_epsilon(&seq).worst_eps,
        real_part_error,
    })
}

pub fn aikps_report(rows: &[AikpsRow], meta: Metadata) -> Report {
    let mut r = Report::new(
        ExperimentKind::AikpsBound,
        vec![
            "p", "eps_a", "primes_r", "offsets", "size_t", "max_modulus", "ratio", "bound_ratio", "within_bound",
            "eps_t", "real_part_error",
        ],
        meta,
    );
    for row in rows {
        r.push(vec![
            row.p.into(),
            row.eps_a.into(),
            row.primes_r.into(),
            row.offsets.into(),
            row.size_t.into(),
            row.max_modulus.into(),
            row.ratio.into(),
            row.bound_ratio.into(),
            row.within_bound.into(),
            row.eps_t.into(),
            row.real_part_error.into(),
        ]);
    }
    r
}

/// Records trial options in report metadata.
pub fn annotate(meta: Metadata, opts: &TrialOptions) -> Metadata {
    opts.annotate(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::random_sequence;

    fn pm(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    #[test]
    fn table1_with_one_trial_equals_that_trial() {
        let p = pm(101);
        let opts = TrialOptions::default();
        let row = table1_row(&p, 0.3, 2, 1, 77, &opts).unwrap();
        let single = worst_case_epsilon(&random_sequence(&p, row.d, 77, 0).unwrap()).worst_eps;
        assert_eq!(row.eps_rand, single);
        assert_eq!(row.eps_g, worst_case_epsilon(&cyclic_sequence(2, &p, row.d).unwrap()).worst_eps);
        assert!(table1_row(&p, 0.3, 4, 1, 77, &opts).is_err());
    }

    #[test]
    fn mingen_for_five_matches_both_evaluations() {
        let p = pm(5);
        let opts = TrialOptions { d_override: Some(3), ..Default::default() };
        let row = minimal_generator(&p, 0.5, &opts).unwrap();
        let e2 = worst_case_epsilon(&cyclic_sequence(2, &p, 3).unwrap()).worst_eps;
        let e3 = worst_case_epsilon(&cyclic_sequence(3, &p, 3).unwrap()).worst_eps;
        let expected = if e3 < e2 { (3, e3) } else { (2, e2) };
        assert_eq!((row.g_min, row.eps_g_min), expected);
        assert_eq!(row.generators, 2);
    }

    #[test]
    fn mingen_is_never_worse_than_any_generator() {
        let p = pm(197);
        let opts = TrialOptions::default();
        let row = minimal_generator(&p, 0.4, &opts).unwrap();
        for g in p.primitive_roots() {
            assert!(row.eps_g_min <= epsilon_row(&p, 0.4, g, &opts).unwrap().eps_g);
        }
    }

    #[test]
    fn fast_hypothesis_scan_agrees_with_direct_sums() {
        // Direct brute force of max_j |S| / threshold for a few primes.
        for p in [7u64, 31, 53] {
            let pm = pm(p);
            let table = CosineTable::new(p);
            let mut brute = 0.0f64;
            for g in pm.primitive_roots() {
                for d in 1..p as usize {
                    let s = cyclic_sequence(g, &pm, d).unwrap();
                    let (m, _) = table.max_abs_sum(s.ks());
                    brute = brute.max(m / hypothesis_threshold(p, d));
                }
            }
            let fast = hypothesis_scan(p, p, LengthPolicy::AllBelowP).unwrap();
            assert!((fast.max_ratio - brute).abs() < 1e-9, "p = {p}");
            assert_eq!(fast.cases, pm.primitive_root_count() * (p - 1));
        }
    }

    #[test]
    fn window_scan_matches_growing_scan() {
        let p = pm(211);
        let d = required_length(&p, 0.3).unwrap();
        let table = CosineTable::new(211);
        for g in p.primitive_roots().into_iter().take(5) {
            let a = scan_generator(g, 211, &table, &[d]);
            let lengths: Vec<usize> = (1..=d).collect();
            let orbit = orbit_cosines(g, 211, &table);
            let direct = (0..orbit.len())
                .map(|m| (1..=d).map(|i| orbit[(i + m) % orbit.len()]).sum::<f64>().abs())
                .fold(0.0, f64::max)
                / hypothesis_threshold(211, d);
            assert!((a.max_ratio - direct).abs() < 1e-9);
            let b = scan_generator(g, 211, &table, &lengths);
            assert!(b.max_ratio >= a.max_ratio - 1e-12);
        }
    }

    #[test]
    fn reported_counterexamples_recheck() {
        let outcome = hypothesis_scan(2, 13, LengthPolicy::AllBelowP).unwrap();
        for c in &outcome.counterexamples {
            let s = cyclic_sequence_unchecked(c.g, &pm(c.p), c.d).unwrap();
            assert!(cosine_sum(&s, c.j).abs() >= (2.0 * c.d as f64 * (2.0 * c.p as f64).ln()).sqrt());
        }
        assert_eq!(outcome.primes, 6);
        assert_eq!(outcome.skipped_primes, 0);
        let tiny = hypothesis_scan(2, 13, LengthPolicy::FromEps(0.1)).unwrap();
        assert_eq!(tiny.skipped_primes, 6);
        assert!(tiny.counterexamples.is_empty());
    }

    #[test]
    fn symmetric_generators_tie_exactly() {
        let p = pm(2689);
        let class = symmetry_class(1088, &p);
        assert!(class.contains(&477));
        let d = required_length(&p, 0.1).unwrap();
        let eps: Vec<f64> = class
            .iter()
            .map(|&g| worst_case_epsilon(&cyclic_sequence(g, &p, d).unwrap()).worst_eps)
            .collect();
        assert!(eps.iter().all(|e| (e - eps[0]).abs() < 1e-12), "{eps:?}");
        let row = minimal_generator(&p, 0.1, &TrialOptions::default()).unwrap();
        assert_eq!(row.g_min, row.tied[0]);
        assert!(row.tied.contains(&1088));
    }

    #[test]
    fn success_rate_sanity() {
        let p = pm(101);
        let rate = random_success_rate(&p, 0.5, 200, 3, &TrialOptions::default()).unwrap();
        assert_eq!(rate.trials, 200);
        assert!(rate.rate > 0.9);
        assert!(1.0 - rate.rate <= rate.union_bound + 3.0 * (rate.union_bound / 200.0).sqrt());
        assert!(random_success_rate(&p, 0.5, 99, 3, &TrialOptions::default()).is_err());
    }

    #[test]
    fn unrounded_threshold_is_smaller() {
        let p = pm(9059);
        let d = required_length(&p, 0.1).unwrap();
        let rounded = TrialOptions::default().threshold(&p, 0.1, d).unwrap();
        let raw = TrialOptions { threshold: ThresholdLength::Unrounded, ..Default::default() }
            .threshold(&p, 0.1, d)
            .unwrap();
        assert!((raw - 62.0101221453601).abs() < 1e-9);
        assert!(raw < rounded);
    }

    #[test]
    fn tail_check_trivial_lambda() {
        let p = pm(101);
        let check = azuma_tail_check(&p, 20, &[0.0, 10.0], 1000, 9, 1, ZeroPolicy::Include).unwrap();
        assert_eq!(check.rows[0].bound, 2.0);
        assert_eq!(check.rows[0].empirical, 1.0);
        assert!(check.all_within_bound());
        assert!(check.mean_is_zero());
        assert!(azuma_tail_check(&p, 20, &[1.0], 999, 9, 1, ZeroPolicy::Include).is_err());
        assert!(azuma_tail_check(&p, 20, &[1.0], 1000, 9, 101, ZeroPolicy::Include).is_err());
    }

    #[test]
    fn generator_sampling_is_seeded() {
        let p = pm(1523);
        let a = sample_generators(&p, 10, 1);
        assert_eq!(a, sample_generators(&p, 10, 1));
        assert_eq!(a.len(), 10);
        assert!(a.iter().all(|&g| p.is_primitive_root(g)));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_generators(&pm(7), 10, 1), vec![3, 5]);
    }

    #[test]
    fn comparison_rows_have_both_values() {
        let p = pm(101);
        let cmp = random_vs_cyclic(&[p], &[0.3], &GeneratorChoice::Sample(4), 20, 5, &TrialOptions::default()).unwrap();
        assert_eq!(cmp.rows.len(), 4);
        for row in &cmp.rows {
            assert_eq!(row.cyclic_better, row.eps_g < row.eps_rand);
            assert!((0.0..=1.0).contains(&row.frac_random_better));
        }
    }

    #[test]
    fn simulate_rows_agree() {
        let s = crate::sequences::ParameterSequence::explicit(&pm(5), vec![1, 2]).unwrap();
        let rows = simulate(&s, &[0, 1, 5], LetterPower::Iterated).unwrap();
        assert!((rows[1].closed_form - 0.0625).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.abs_diff < 1e-9));
    }
}
