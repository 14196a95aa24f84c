//! Ground-truth optimality quantities for finite sequences: empirical
//! distributions (with and without the circular convention), the optimal
//! k-order Markov loss, and optimal finite-state losses for fixed and
//! brute-forced machines.
//!
//! All entropies are in bits and use the convention `0 * log(1/0) = 0`.

use std::collections::HashMap;

use crate::sequence::Sequence;
use crate::{Error, Result};

/// Entropy, in bits, of a count vector.
fn entropy_of_counts<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Empirical distribution of length-`order` windows. With `circular = true`
/// a window starts at every position and wraps past the end (`total = n`);
/// otherwise only the `n - order + 1` fully contained windows count.
#[derive(Debug, Clone)]
pub struct EmpiricalDist {
    pub order: usize,
    pub counts: HashMap<Vec<u32>, u64>,
    pub total: u64,
    pub circular: bool,
}

impl EmpiricalDist {
    pub fn new(x: &Sequence, order: usize, circular: bool) -> Result<Self> {
        let n = x.len();
        if order == 0 || n == 0 {
            return Err(Error::EmptySequence);
        }
        if !circular && order > n {
            return Err(Error::InvalidArgument(format!(
                "order {order} exceeds sequence length {n}"
            )));
        }
        let syms = x.symbols();
        let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
        let starts = if circular { n } else { n - order + 1 };
        for i in 0..starts {
            let window: Vec<u32> = (0..order).map(|j| syms[(i + j) % n]).collect();
            *counts.entry(window).or_insert(0) += 1;
        }
        Ok(Self {
            order,
            counts,
            total: starts as u64,
            circular,
        })
    }

    pub fn prob(&self, window: &[u32]) -> f64 {
        *self.counts.get(window).unwrap_or(&0) as f64 / self.total as f64
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_counts(self.counts.values().copied())
    }

    /// Marginal distribution of one coordinate (0-indexed) of the windows.
    pub fn coordinate_marginal(&self, coord: usize) -> HashMap<u32, u64> {
        let mut marginal = HashMap::new();
        for (window, &c) in &self.counts {
            *marginal.entry(window[coord]).or_insert(0) += c;
        }
        marginal
    }

    /// L1 distance between two distributions over windows.
    pub fn l1_distance(&self, other: &EmpiricalDist) -> f64 {
        let mut keys: Vec<&Vec<u32>> = self.counts.keys().collect();
        for k in other.counts.keys() {
            if !self.counts.contains_key(k) {
                keys.push(k);
            }
        }
        keys.iter()
            .map(|k| (self.prob(k) - other.prob(k)).abs())
            .sum()
    }
}

/// Zero-order empirical entropy `H(X)` in bits per symbol. This equals the
/// optimal zero-order Markov log loss exactly.
pub fn empirical_entropy(x: &Sequence) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0u64; x.alphabet().size() as usize];
    for &a in x.symbols() {
        counts[a as usize] += 1;
    }
    Ok(entropy_of_counts(counts))
}

/// Exact optimal k-order Markov log loss, in bits per symbol: symbols
/// `t in [k+1, n]` are partitioned by their length-k context (no circular
/// convention), each group contributes its zero-order entropy, and the first
/// k symbols incur zero loss.
pub fn mu_k(x: &Sequence, k: usize) -> Result<f64> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if k >= n {
        return Ok(0.0);
    }
    let a_size = x.alphabet().size() as usize;
    let syms = x.symbols();
    let mut groups: HashMap<&[u32], Vec<u64>> = HashMap::new();
    for t in k..n {
        let ctx = &syms[t - k..t];
        groups.entry(ctx).or_insert_with(|| vec![0; a_size])[syms[t] as usize] += 1;
    }
    let n = n as f64;
    Ok(groups
        .values()
        .map(|counts| {
            let group_n: u64 = counts.iter().sum();
            group_n as f64 / n * entropy_of_counts(counts.iter().copied())
        })
        .sum())
}

/// Conditional empirical entropy `H(X_{k+1} | X^k)` in bits per symbol under
/// the chosen windowing convention. With `circular = true` this upper-bounds
/// `mu_k`.
pub fn conditional_empirical_entropy(x: &Sequence, k: usize, circular: bool) -> Result<f64> {
    let n = x.len();
    if n < k + 1 {
        return Err(Error::InvalidArgument(format!(
            "need n >= k + 1, got n = {n}, k = {k}"
        )));
    }
    if k == 0 {
        return empirical_entropy(x);
    }
    let joint = EmpiricalDist::new(x, k + 1, circular)?;
    // H(X_{k+1} | X^k) from the joint window counts and the marginal of the
    // first k coordinates of those same windows.
    let mut prefix_counts: HashMap<&[u32], u64> = HashMap::new();
    for (window, &c) in &joint.counts {
        *prefix_counts.entry(&window[..k]).or_insert(0) += c;
    }
    let total = joint.total as f64;
    let mut h = 0.0;
    for (window, &c) in &joint.counts {
        let prefix = prefix_counts[&window[..k]];
        h += c as f64 / total * (prefix as f64 / c as f64).log2();
    }
    Ok(h)
}

/// A deterministic finite-state machine: `M` states, a total next-state
/// function, and an initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStateMachine {
    num_states: u32,
    alphabet_size: u32,
    /// Row-major: `next[s * A + a]`.
    next: Vec<u32>,
    initial: u32,
}

impl FiniteStateMachine {
    pub fn new(num_states: u32, alphabet_size: u32, next: Vec<u32>, initial: u32) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::InvalidArgument("need at least one state".into()));
        }
        if next.len() != (num_states * alphabet_size) as usize {
            return Err(Error::InvalidArgument(format!(
                "next-state table must have {} entries, got {}",
                num_states * alphabet_size,
                next.len()
            )));
        }
        if initial >= num_states || next.iter().any(|&s| s >= num_states) {
            return Err(Error::InvalidArgument("state out of range".into()));
        }
        Ok(Self {
            num_states,
            alphabet_size,
            next,
            initial,
        })
    }

    pub fn num_states(&self) -> u32 {
        self.num_states
    }

    pub fn next_state(&self, state: u32, symbol: u32) -> u32 {
        self.next[(state * self.alphabet_size + symbol) as usize]
    }

    /// The state sequence `s_1..s_n` driven by `x`.
    pub fn run(&self, x: &Sequence) -> Vec<u32> {
        let mut states = Vec::with_capacity(x.len());
        let mut s = self.initial;
        for &a in x.symbols() {
            states.push(s);
            s = self.next_state(s, a);
        }
        states
    }
}

/// Optimal log loss of the machine's SPA class on `x`: the conditional
/// empirical entropy `H(X | S)` of the joint zero-order distribution of the
/// sequence and its state trace.
pub fn lambda_for_machine(x: &Sequence, fsm: &FiniteStateMachine) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    let a_size = x.alphabet().size() as usize;
    let states = fsm.run(x);
    let mut joint: HashMap<u32, Vec<u64>> = HashMap::new();
    for (&a, &s) in x.symbols().iter().zip(&states) {
        joint.entry(s).or_insert_with(|| vec![0; a_size])[a as usize] += 1;
    }
    let n = x.len() as f64;
    Ok(joint
        .values()
        .map(|counts| {
            let group_n: u64 = counts.iter().sum();
            group_n as f64 / n * entropy_of_counts(counts.iter().copied())
        })
        .sum())
}

/// Enumeration budget guard for [`lambda_bruteforce`]: the next-state table
/// has `M * A * log2(M)` bits of freedom, which must stay within `max_bits`.
pub fn bruteforce_bits(num_states: u32, alphabet_size: u32) -> f64 {
    num_states as f64 * alphabet_size as f64 * (num_states as f64).log2()
}

pub const DEFAULT_BRUTEFORCE_BITS: f64 = 16.0;

/// Minimum of [`lambda_for_machine`] over every next-state function and
/// initial state with `num_states` states.
pub fn lambda_bruteforce(x: &Sequence, num_states: u32) -> Result<f64> {
    lambda_bruteforce_with_budget(x, num_states, DEFAULT_BRUTEFORCE_BITS)
}

pub fn lambda_bruteforce_with_budget(x: &Sequence, num_states: u32, max_bits: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    let a_size = x.alphabet().size();
    let bits = bruteforce_bits(num_states, a_size);
    if bits > max_bits {
        return Err(Error::BudgetExceeded(format!(
            "{num_states} states over alphabet {a_size} needs {bits:.1} table bits (max {max_bits})"
        )));
    }
    let entries = (num_states * a_size) as usize;
    let mut table = vec![0u32; entries];
    let mut best = f64::INFINITY;
    loop {
        for initial in 0..num_states {
            let fsm = FiniteStateMachine::new(num_states, a_size, table.clone(), initial)?;
            let loss = lambda_for_machine(x, &fsm)?;
            if loss < best {
                best = loss;
            }
        }
        // Advance the table as a mixed-radix counter, base num_states.
        let mut i = 0;
        while i < entries {
            table[i] += 1;
            if table[i] < num_states {
                break;
            }
            table[i] = 0;
            i += 1;
        }
        if i == entries {
            break;
        }
    }
    Ok(best)
}

/// Summary of the oracle quantities for one sequence.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub mu: Vec<f64>,
    pub conditional_entropy_circular: Vec<f64>,
    pub lambda_bruteforce: Option<(u32, f64)>,
}

/// Computes `mu_k` for `k = 0..=k_max` (plus the circular conditional
/// entropies) and optionally a brute-forced `lambda_M`.
pub fn oracle_report(
    x: &Sequence,
    k_max: usize,
    bruteforce_m: Option<u32>,
) -> Result<OracleReport> {
    let mut mu = Vec::with_capacity(k_max + 1);
    let mut cond = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        mu.push(mu_k(x, k)?);
        if x.len() > k {
            cond.push(conditional_empirical_entropy(x, k, true)?);
        }
    }
    let lambda = match bruteforce_m {
        Some(m) => Some((m, lambda_bruteforce(x, m)?)),
        None => None,
    };
    Ok(OracleReport {
        n: x.len(),
        mu,
        conditional_entropy_circular: cond,
        lambda_bruteforce: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Alphabet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn bseq(symbols: &[u32]) -> Sequence {
        Sequence::new(symbols.to_vec(), Alphabet::binary()).unwrap()
    }

    fn all_binary_sequences(n: usize) -> impl Iterator<Item = Vec<u32>> {
        (0..(1u32 << n)).map(move |bits| (0..n).map(|i| (bits >> i) & 1).collect())
    }

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        }
    }

    #[test]
    fn empirical_entropy_examples() {
        assert_eq!(empirical_entropy(&bseq(&[0, 0, 1, 1])).unwrap(), 1.0);
        assert_eq!(empirical_entropy(&bseq(&[0, 0, 0, 0])).unwrap(), 0.0);
        let h = empirical_entropy(&bseq(&[0, 0, 0, 1])).unwrap();
        assert!((h - h2(0.25)).abs() < 1e-12);
        assert!(matches!(
            empirical_entropy(&Sequence::empty(Alphabet::binary())),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn mu_zero_is_empirical_entropy() {
        for n in 1..=10usize {
            for x in all_binary_sequences(n) {
                let seq = bseq(&x);
                assert_eq!(
                    mu_k(&seq, 0).unwrap(),
                    empirical_entropy(&seq).unwrap(),
                    "{x:?}"
                );
            }
        }
    }

    #[test]
    fn mu_k_examples() {
        assert_eq!(mu_k(&bseq(&[0, 0, 1, 1]), 0).unwrap(), 1.0);
        // Alternating sequence is order-1 deterministic.
        assert_eq!(
            mu_k(&bseq(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]), 1).unwrap(),
            0.0
        );
        // k >= n: everything is in the free prefix.
        assert_eq!(mu_k(&bseq(&[0, 1]), 2).unwrap(), 0.0);
        assert_eq!(mu_k(&bseq(&[0, 1]), 7).unwrap(), 0.0);
    }

    #[test]
    fn conditional_entropy_examples() {
        // Circular pairs of 0101 are 01,10,01,10: each context deterministic.
        assert_eq!(
            conditional_empirical_entropy(&bseq(&[0, 1, 0, 1]), 1, true).unwrap(),
            0.0
        );
        assert_eq!(
            conditional_empirical_entropy(&bseq(&[1, 1, 1, 1, 1]), 3, true).unwrap(),
            0.0
        );
        assert!(conditional_empirical_entropy(&bseq(&[0, 1]), 2, true).is_err());
    }

    #[test]
    fn mu_k_below_circular_conditional_entropy() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..500 {
            let n = rng.random_range(2..=64);
            let x: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let seq = bseq(&x);
            for k in 1..=3usize {
                if n < k + 1 {
                    continue;
                }
                let mu = mu_k(&seq, k).unwrap();
                let bound = conditional_empirical_entropy(&seq, k, true).unwrap();
                assert!(mu <= bound + 1e-12, "x={x:?} k={k}: {mu} > {bound}");
            }
        }
    }

    #[test]
    fn mu_is_monotone_in_k() {
        // Exhaustive: the free prefix grows and contexts refine, so
        // mu_{k+1} <= mu_k exactly.
        for n in 1..=16usize {
            for x in all_binary_sequences(n) {
                let seq = bseq(&x);
                let mut prev = mu_k(&seq, 0).unwrap();
                for k in 1..=3usize {
                    let cur = mu_k(&seq, k).unwrap();
                    assert!(cur <= prev + 1e-12, "{x:?} k={k}");
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn circular_vs_noncircular_l1_within_proof_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..200 {
            let n = rng.random_range(4..=128);
            let x: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let seq = bseq(&x);
            for k in 1..=3usize {
                if n <= k + 1 {
                    continue;
                }
                let circ = EmpiricalDist::new(&seq, k + 1, true).unwrap();
                let plain = EmpiricalDist::new(&seq, k + 1, false).unwrap();
                let l1 = circ.l1_distance(&plain);
                // Each atom moves by at most k/n in probability, over at most
                // A^(k+1) atoms.
                let bound = k as f64 * 2f64.powi(k as i32 + 1) / n as f64;
                assert!(l1 <= bound + 1e-12, "n={n} k={k}: {l1} > {bound}");
            }
        }
    }

    #[test]
    fn circular_marginals_are_stationary() {
        // Every coordinate of the circular k-order distribution has the
        // zero-order empirical distribution, exactly (integer counts).
        for n in 1..=12usize {
            for x in all_binary_sequences(n) {
                let seq = bseq(&x);
                let zero: Vec<u64> = (0..2)
                    .map(|a| x.iter().filter(|&&s| s == a).count() as u64)
                    .collect();
                for k in [2usize, 3] {
                    let dist = EmpiricalDist::new(&seq, k, true).unwrap();
                    for coord in 0..k {
                        let marginal = dist.coordinate_marginal(coord);
                        for a in 0..2u32 {
                            assert_eq!(
                                *marginal.get(&a).unwrap_or(&0),
                                zero[a as usize],
                                "{x:?} k={k} coord={coord}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_single_state_is_empirical_entropy() {
        let x = bseq(&[0, 1, 1, 0, 1, 1, 1, 0]);
        let fsm = FiniteStateMachine::new(1, 2, vec![0, 0], 0).unwrap();
        assert_eq!(
            lambda_for_machine(&x, &fsm).unwrap(),
            empirical_entropy(&x).unwrap()
        );
        assert_eq!(
            lambda_bruteforce(&x, 1).unwrap(),
            empirical_entropy(&x).unwrap()
        );
    }

    #[test]
    fn lambda_previous_symbol_machine_on_alternating_input() {
        // State tracks the previous symbol, which determines the next one.
        // The initial state must be consistent with the first symbol (x
        // starts with 0, so s1 = 1); otherwise the t = 1 pair pollutes one
        // state's group.
        let x: Vec<u32> = (0..20).map(|i| i % 2).collect();
        let fsm = FiniteStateMachine::new(2, 2, vec![0, 1, 0, 1], 1).unwrap();
        assert_eq!(lambda_for_machine(&bseq(&x), &fsm).unwrap(), 0.0);
        // The brute-force minimum finds such a machine regardless.
        assert_eq!(lambda_bruteforce(&bseq(&x), 2).unwrap(), 0.0);
        // With the misaligned initial state, group s=0 holds ten 1s and the
        // stray first 0: H(X|S) = 11/20 * h2(1/11).
        let misaligned = FiniteStateMachine::new(2, 2, vec![0, 1, 0, 1], 0).unwrap();
        let expected = 11.0 / 20.0
            * (-(1.0f64 / 11.0) * (1.0f64 / 11.0).log2()
                - (10.0f64 / 11.0) * (10.0f64 / 11.0).log2());
        assert!((lambda_for_machine(&bseq(&x), &misaligned).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn lambda_constant_state_machine_is_empirical_entropy() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = rng.random_range(1..=40);
            let x: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let seq = bseq(&x);
            // next(s, a) = s: states never change.
            let fsm = FiniteStateMachine::new(3, 2, vec![0, 0, 1, 1, 2, 2], 1).unwrap();
            assert_eq!(
                lambda_for_machine(&seq, &fsm).unwrap(),
                empirical_entropy(&seq).unwrap()
            );
        }
    }

    #[test]
    fn bruteforce_budget_guard() {
        let x = bseq(&[0, 1, 0]);
        assert!(matches!(
            lambda_bruteforce(&x, 8),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn mu_minus_lambda_bound_small_scale() {
        // mu_k - lambda_M <= log2(M) / (k + 1), spot-checked on short inputs.
        for n in 1..=8usize {
            for x in all_binary_sequences(n) {
                let seq = bseq(&x);
                let lambda = lambda_bruteforce(&seq, 2).unwrap();
                for k in 0..=2usize {
                    let mu = mu_k(&seq, k).unwrap();
                    assert!(
                        mu - lambda <= 1.0 / (k as f64 + 1.0) + 1e-12,
                        "x={x:?} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn markov_machine_is_in_the_enumeration() {
        // For M = A^k the k-order Markov machine is enumerated, so lambda_M
        // can exceed mu_k only through the first k symbols, whose groups gain
        // at most one extra element each.
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..300 {
            let n = rng.random_range(2..=14);
            let x: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let seq = bseq(&x);
            let lambda = lambda_bruteforce(&seq, 2).unwrap();
            let mu = mu_k(&seq, 1).unwrap();
            // One boundary symbol mixed into a group of size <= n costs at
            // most (log2(n) + 2) / n bits.
            let slack = ((n as f64).log2() + 2.0) / n as f64;
            assert!(lambda <= mu + slack + 1e-12, "x={x:?}: {lambda} vs {mu}");
        }
    }

    #[test]
    fn theorem_two_trend_on_bernoulli_input() {
        // On i.i.d. Ber(0.3), every mu_k at n = 2^16 sits near h2(0.3) and
        // the LZ78 codelength proxy approaches the same value from above.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 1usize << 16;
        let x: Vec<u32> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.3 { 1 } else { 0 })
            .collect();
        let seq = bseq(&x);
        let target = h2(0.3);
        for k in 0..=6usize {
            let mu = mu_k(&seq, k).unwrap();
            assert!((mu - target).abs() < 0.02, "k={k}: {mu} vs {target}");
        }
        let (_, summary) = crate::tree::parse(&seq).unwrap();
        let proxy = crate::tree::codelength_proxy(&summary) / n as f64;
        assert!(proxy > target);
        assert!(proxy < target + 0.35);
    }
}
