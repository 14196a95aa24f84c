//! The LZ78 probability source: grow a prefix tree while emitting symbols,
//! either from a per-node mixture parameter Theta drawn lazily from the
//! prior, or by sampling the sequential probability assignment directly.
//! The two constructions are statistically equivalent.
//!
//! Realizations are reproducible: sampling is driven by ChaCha12, keyed by a
//! caller-provided seed.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma};

use crate::sequence::{Alphabet, Sequence};
use crate::spa::{dirichlet_prob_raw, BinaryDensity, PriorSpec};
use crate::tree::{parse, Lz78Tree, NodeId};
use crate::{Error, Result};

/// Grid resolution of the inverse-CDF table used to sample binary densities.
const INVERSE_CDF_POINTS: usize = 4097;

/// A probability source built on a growing LZ78 tree.
pub struct Lz78Source {
    tree: Lz78Tree,
    prior: PriorSpec,
    theta_by_node: HashMap<NodeId, Vec<f64>>,
    inverse_cdf: Option<Vec<f64>>,
    rng: ChaCha12Rng,
    self_loss_bits: f64,
}

impl Lz78Source {
    pub fn new(alphabet_size: u32, prior: PriorSpec, seed: u64) -> Result<Self> {
        prior.validate(alphabet_size)?;
        Ok(Self {
            tree: Lz78Tree::new(alphabet_size)?,
            prior,
            theta_by_node: HashMap::new(),
            inverse_cdf: None,
            rng: ChaCha12Rng::seed_from_u64(seed),
            self_loss_bits: 0.0,
        })
    }

    /// Replaces the random stream, e.g. to derive independent draws from a
    /// shared seed.
    pub fn with_rng(mut self, rng: ChaCha12Rng) -> Self {
        self.rng = rng;
        self
    }

    pub fn tree(&self) -> &Lz78Tree {
        &self.tree
    }

    /// Total `-log2` probability of the symbols emitted so far, under the
    /// sampling distribution itself.
    pub fn self_loss_bits(&self) -> f64 {
        self.self_loss_bits
    }

    pub fn normalized_self_loss(&self) -> f64 {
        if self.tree.symbols_seen() == 0 {
            0.0
        } else {
            self.self_loss_bits / self.tree.symbols_seen() as f64
        }
    }

    /// Pins the mixture parameter of a node (mixture perspective only);
    /// mainly useful for tests that condition on a known Theta.
    pub fn force_theta(&mut self, node: NodeId, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.tree.alphabet_size() as usize
            || (theta.iter().sum::<f64>() - 1.0).abs() > 1e-9
            || theta.iter().any(|&p| p < 0.0)
        {
            return Err(Error::InvalidArgument(
                "theta must be a probability vector over the alphabet".into(),
            ));
        }
        self.theta_by_node.insert(node, theta);
        Ok(())
    }

    fn draw_theta(&mut self) -> Result<Vec<f64>> {
        let a_size = self.tree.alphabet_size() as usize;
        match &self.prior {
            PriorSpec::Dirichlet { gamma } => {
                let dist = Gamma::new(*gamma, 1.0)
                    .map_err(|e| Error::InvalidPrior(format!("gamma sampling: {e}")))?;
                let mut theta: Vec<f64> = (0..a_size).map(|_| dist.sample(&mut self.rng)).collect();
                let sum: f64 = theta.iter().sum();
                if sum <= 0.0 {
                    // All-zero draws can happen for tiny gamma; fall back to
                    // a uniform vector rather than produce NaNs.
                    return Ok(vec![1.0 / a_size as f64; a_size]);
                }
                for p in &mut theta {
                    *p /= sum;
                }
                Ok(theta)
            }
            PriorSpec::BernoulliHalf => {
                if self.rng.random::<bool>() {
                    Ok(vec![0.0, 1.0])
                } else {
                    Ok(vec![1.0, 0.0])
                }
            }
            PriorSpec::BinaryDensity { density, .. } => {
                let table = match &self.inverse_cdf {
                    Some(t) => t,
                    None => {
                        self.inverse_cdf = Some(build_inverse_cdf(density));
                        self.inverse_cdf.as_ref().unwrap()
                    }
                };
                let u: f64 = self.rng.random();
                let pos = u * (table.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                let theta1 = if lo + 1 < table.len() {
                    table[lo] * (1.0 - frac) + table[lo + 1] * frac
                } else {
                    table[lo]
                };
                Ok(vec![1.0 - theta1, theta1])
            }
        }
    }

    /// Draws one symbol from the per-node Theta (assigning it lazily) and
    /// traverses/grows the tree. The tracked loss uses the marginal source
    /// probability given the node's emission history (i.e. the SPA value),
    /// not the Theta-conditional one.
    fn step_mixture(&mut self) -> Result<u32> {
        let node = self.tree.cursor();
        let marginal = self.spa_distribution(node)?;
        if !self.theta_by_node.contains_key(&node) {
            let theta = self.draw_theta()?;
            self.theta_by_node.insert(node, theta);
        }
        let theta = &self.theta_by_node[&node];
        let a = sample_index(theta, &mut self.rng);
        self.self_loss_bits -= marginal[a as usize].log2();
        self.tree.step(a)?;
        Ok(a)
    }

    /// Draws one symbol from the SPA value at the current node and
    /// traverses/grows the tree.
    fn step_spa(&mut self) -> Result<u32> {
        let node = self.tree.cursor();
        let dist = self.spa_distribution(node)?;
        let a = sample_index(&dist, &mut self.rng);
        self.self_loss_bits -= dist[a as usize].log2();
        self.tree.step(a)?;
        Ok(a)
    }

    /// The SPA next-symbol distribution at a node, for sampling purposes.
    /// Unlike [`crate::spa::Lz78Spa`], this also supports the Bernoulli(1/2)
    /// point prior, whose conditional is deterministic once a node has
    /// emitted anything.
    pub fn spa_distribution(&self, node: NodeId) -> Result<Vec<f64>> {
        let a_size = self.tree.alphabet_size();
        match &self.prior {
            PriorSpec::Dirichlet { gamma } => Ok((0..a_size)
                .map(|a| {
                    dirichlet_prob_raw(
                        self.tree.context_count(node, a),
                        self.tree.context_total(node),
                        *gamma,
                        a_size,
                    )
                })
                .collect()),
            PriorSpec::BernoulliHalf => {
                let c0 = self.tree.context_count(node, 0);
                let c1 = self.tree.context_count(node, 1);
                match (c0 > 0, c1 > 0) {
                    (false, false) => Ok(vec![0.5, 0.5]),
                    (true, false) => Ok(vec![1.0, 0.0]),
                    (false, true) => Ok(vec![0.0, 1.0]),
                    (true, true) => Err(Error::InvalidPrior(
                        "node emitted both symbols; impossible under the Ber(1/2) prior".into(),
                    )),
                }
            }
            PriorSpec::BinaryDensity {
                density,
                quadrature_points,
            } => {
                let counts = crate::spa::SymbolCounts::from_counts(
                    (0..a_size)
                        .map(|a| self.tree.context_count(node, a))
                        .collect(),
                );
                (0..a_size)
                    .map(|a| {
                        crate::spa::mixture_prob_binary(&counts, a, density, *quadrature_points)
                    })
                    .collect()
            }
        }
    }

    /// Samples `n` symbols via the mixture perspective (per-node Theta).
    pub fn sample_mixture(&mut self, n: usize) -> Result<Sequence> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.step_mixture()?);
        }
        Sequence::new(out, Alphabet::new(self.tree.alphabet_size())?)
    }

    /// Samples `n` symbols via the SPA perspective (draw from the assignment
    /// at the current node).
    pub fn sample_spa(&mut self, n: usize) -> Result<Sequence> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.step_spa()?);
        }
        Sequence::new(out, Alphabet::new(self.tree.alphabet_size())?)
    }
}

fn sample_index(dist: &[f64], rng: &mut ChaCha12Rng) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    (dist.len() - 1) as u32
}

/// Tabulates the normalized CDF of a binary density on a uniform grid of
/// quantiles: entry `i` is the theta with CDF `i / (len - 1)`.
fn build_inverse_cdf(density: &BinaryDensity) -> Vec<f64> {
    let grid = INVERSE_CDF_POINTS;
    // Midpoint evaluation: densities may be endpoint-singular but integrable.
    let mut cdf = Vec::with_capacity(grid + 1);
    let h = 1.0 / grid as f64;
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 0..grid {
        let theta = (i as f64 + 0.5) * h;
        acc += density.log_unnormalized(theta).exp() * h;
        cdf.push(acc);
    }
    let total = acc;
    let mut inverse = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        let target = i as f64 / grid as f64 * total;
        let j = cdf.partition_point(|&c| c < target).min(grid);
        let (lo, hi) = (j.saturating_sub(1), j);
        let (c_lo, c_hi) = (cdf[lo], cdf[hi]);
        let frac = if c_hi > c_lo {
            (target - c_lo) / (c_hi - c_lo)
        } else {
            0.0
        };
        inverse.push((lo as f64 + frac) * h);
    }
    inverse
}

/// Structural report of [`bernoulli_source_check`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BernoulliSourceReport {
    pub complete_phrases: u64,
    pub max_phrase_len: usize,
}

/// Verifies the deterministic structure of a Bernoulli(1/2) source
/// realization: phrase `k` has length `k`, each complete phrase extends the
/// previous one by a single symbol, and the number of completed phrases is
/// the largest `m` with `m (m + 1) / 2 <= n`.
pub fn bernoulli_source_check(x: &Sequence) -> Result<BernoulliSourceReport> {
    let (tree, summary) = parse(x)?;
    let n = x.len() as u64;
    let complete = if summary.last_phrase_complete {
        summary.phrases.len()
    } else {
        summary.phrases.len() - 1
    };
    let syms = x.symbols();
    let mut prev: &[u32] = &[];
    for (idx, &(start, end)) in summary.phrases[..complete].iter().enumerate() {
        let phrase = &syms[start - 1..end];
        let k = idx + 1;
        if phrase.len() != k {
            return Err(Error::NotBernoulliRealization(format!(
                "phrase {k} has length {}, expected {k}",
                phrase.len()
            )));
        }
        if phrase[..k - 1] != *prev {
            return Err(Error::NotBernoulliRealization(format!(
                "phrase {k} does not extend phrase {}",
                k - 1
            )));
        }
        prev = phrase;
    }
    let expected = {
        let mut m = 0u64;
        while (m + 1) * (m + 2) / 2 <= n {
            m += 1;
        }
        m
    };
    if tree.phrase_count() != expected {
        return Err(Error::NotBernoulliRealization(format!(
            "{} completed phrases at n = {n}, expected {expected}",
            tree.phrase_count()
        )));
    }
    Ok(BernoulliSourceReport {
        complete_phrases: tree.phrase_count(),
        max_phrase_len: summary
            .phrases
            .iter()
            .map(|&(s, e)| e - s + 1)
            .max()
            .unwrap_or(0),
    })
}
