//! The family of sequential probability assignments: the per-node mixture
//! rule, its Dirichlet closed form, and the LZ78 wrapper that conditions on
//! the tree context of each symbol.
//!
//! Probabilities are evaluated from per-context symbol counts. The counting
//! convention everywhere includes the phrase currently being parsed, matching
//! [`crate::tree`].

use crate::sequence::Sequence;
use crate::tree::{Lz78Tree, NodeId, StepOutcome, ROOT};
use crate::{Error, Result};

/// Default number of quadrature grid points for binary mixture priors.
pub const DEFAULT_QUADRATURE_POINTS: usize = 1025;

/// Built-in binary prior densities on `[0, 1]` (the probability of symbol 1).
/// Densities may be unnormalized; the mixture rule only uses ratios.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryDensity {
    /// Flat density.
    Uniform,
    /// Gaussian bump restricted to `[0, 1]` with `floor` added so the density
    /// stays bounded away from zero.
    TruncatedGaussian { mean: f64, std_dev: f64, floor: f64 },
    /// The Beta(gamma, gamma) density, i.e. the binary Dirichlet prior.
    /// Requires `gamma <= 1` so the density is bounded away from zero.
    Dirichlet { gamma: f64 },
}

impl BinaryDensity {
    fn validate(&self) -> Result<()> {
        match *self {
            BinaryDensity::Uniform => Ok(()),
            BinaryDensity::TruncatedGaussian { std_dev, floor, .. } => {
                if std_dev <= 0.0 || floor <= 0.0 {
                    Err(Error::InvalidPrior(
                        "truncated Gaussian needs std_dev > 0 and floor > 0".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            BinaryDensity::Dirichlet { gamma } => {
                if gamma > 0.0 && gamma <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidPrior(
                        "Dirichlet density prior needs 0 < gamma <= 1".into(),
                    ))
                }
            }
        }
    }

    /// Smooth (bounded) part of `ln f(theta)`. Power-law factors of the
    /// Dirichlet density are returned by [`Self::extra_exponents`] instead so
    /// the quadrature can fold them into the likelihood exponents.
    fn log_smooth(&self, theta: f64) -> f64 {
        match *self {
            BinaryDensity::Uniform => 0.0,
            BinaryDensity::TruncatedGaussian {
                mean,
                std_dev,
                floor,
            } => {
                let z = (theta - mean) / std_dev;
                ((-0.5 * z * z).exp() + floor).ln()
            }
            BinaryDensity::Dirichlet { .. } => 0.0,
        }
    }

    /// Additional exponents on `theta` and `1 - theta` contributed by the
    /// density itself.
    fn extra_exponents(&self) -> (f64, f64) {
        match *self {
            BinaryDensity::Dirichlet { gamma } => (gamma - 1.0, gamma - 1.0),
            _ => (0.0, 0.0),
        }
    }

    /// Log of the (unnormalized) density, for inverse-CDF tabulation.
    pub(crate) fn log_unnormalized(&self, theta: f64) -> f64 {
        let (e1, e0) = self.extra_exponents();
        self.log_smooth(theta) + e1 * theta.ln() + e0 * (1.0 - theta).ln()
    }
}

/// Prior specification for the mixture SPA.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// Symmetric Dirichlet(gamma) prior; closed-form next-symbol rule.
    Dirichlet { gamma: f64 },
    /// Point masses at theta = 0 and theta = 1, each with probability 1/2.
    /// Valid for probability sources only; the SPA guarantees require a
    /// density bounded away from zero, which this prior violates.
    BernoulliHalf,
    /// Arbitrary built-in density on `[0, 1]`, evaluated by quadrature.
    /// Binary alphabets only.
    BinaryDensity {
        density: BinaryDensity,
        quadrature_points: usize,
    },
}

impl PriorSpec {
    pub fn dirichlet(gamma: f64) -> Self {
        PriorSpec::Dirichlet { gamma }
    }

    pub fn uniform_binary() -> Self {
        PriorSpec::BinaryDensity {
            density: BinaryDensity::Uniform,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        }
    }

    /// The Dirichlet parameter whose SPA equals the leaf-count tree rule:
    /// `gamma = 1 / (A - 1)`.
    pub fn leafcount_gamma(alphabet_size: u32) -> f64 {
        1.0 / (alphabet_size as f64 - 1.0)
    }

    pub fn validate(&self, alphabet_size: u32) -> Result<()> {
        match self {
            PriorSpec::Dirichlet { gamma } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::InvalidPrior("gamma must be positive".into()));
                }
                Ok(())
            }
            PriorSpec::BernoulliHalf => {
                if alphabet_size != 2 {
                    return Err(Error::InvalidPrior(
                        "Bernoulli(1/2) prior is binary-only".into(),
                    ));
                }
                Ok(())
            }
            PriorSpec::BinaryDensity {
                density,
                quadrature_points,
            } => {
                if alphabet_size != 2 {
                    return Err(Error::InvalidPrior("density priors are binary-only".into()));
                }
                if *quadrature_points < 3 || quadrature_points % 2 == 0 {
                    return Err(Error::InvalidPrior(
                        "quadrature_points must be odd and at least 3".into(),
                    ));
                }
                density.validate()
            }
        }
    }
}

/// Per-symbol counts at one context (the `N(a | x^{t-1}, z)` vector).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolCounts {
    counts: Vec<u64>,
    total: u64,
}

impl SymbolCounts {
    pub fn new(alphabet_size: u32) -> Self {
        Self {
            counts: vec![0; alphabet_size as usize],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn observe(&mut self, a: u32) {
        self.counts[a as usize] += 1;
        self.total += 1;
    }

    pub fn count(&self, a: u32) -> u64 {
        self.counts[a as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn alphabet_size(&self) -> u32 {
        self.counts.len() as u32
    }
}

/// The Dirichlet(gamma) closed form: `(N(a) + gamma) / (total + gamma * A)`.
pub fn dirichlet_prob(counts: &SymbolCounts, a: u32, gamma: f64) -> f64 {
    dirichlet_prob_raw(
        counts.count(a),
        counts.total(),
        gamma,
        counts.alphabet_size(),
    )
}

pub(crate) fn dirichlet_prob_raw(count: u64, total: u64, gamma: f64, alphabet_size: u32) -> f64 {
    (count as f64 + gamma) / (total as f64 + gamma * alphabet_size as f64)
}

/// Log of the weighted integral `int f(theta) theta^{e1} (1-theta)^{e0} dtheta`
/// by composite Simpson on `[0, 1]` after the substitution
/// `theta = sin^2(pi u / 2)`, which absorbs integrable endpoint
/// singularities of Beta-type densities. Evaluated in the log domain with
/// max-subtraction.
fn log_weighted_integral(density: &BinaryDensity, e1: f64, e0: f64, points: usize) -> f64 {
    let (x1, x0) = density.extra_exponents();
    let a1 = e1 + x1;
    let a0 = e0 + x0;
    // After substitution: integrand(u) = f_smooth(theta) *
    //   sin(pi u / 2)^(2 a1 + 1) * cos(pi u / 2)^(2 a0 + 1) * pi.
    let c1 = 2.0 * a1 + 1.0;
    let c0 = 2.0 * a0 + 1.0;
    let panels = points - 1;
    let h = 1.0 / panels as f64;
    let log_h_third = (h / 3.0).ln();

    let log_term = |i: usize| -> f64 {
        // i / panels stays in [0, 1] exactly; i * h can overshoot 1 and turn
        // the cosine negative.
        let mut u = i as f64 / panels as f64;
        // A negative exponent on a vanishing factor means the substitution
        // did not fully absorb the singularity; evaluate just inside.
        if (i == 0 && c1 < 0.0) || (i == panels && c0 < 0.0) {
            u = if i == 0 { h * 1e-6 } else { 1.0 - h * 1e-6 };
        }
        let s = (std::f64::consts::FRAC_PI_2 * u).sin();
        let c = (std::f64::consts::FRAC_PI_2 * u).cos();
        let theta = s * s;
        let mut v = density.log_smooth(theta) + std::f64::consts::PI.ln();
        if c1 != 0.0 {
            v += c1 * s.ln();
        }
        if c0 != 0.0 {
            v += c0 * c.ln();
        }
        v
    };

    let mut max = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(points);
    for i in 0..points {
        let w = if i == 0 || i == panels {
            1.0f64
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let t = w.ln() + log_term(i);
        if t > max {
            max = t;
        }
        terms.push(t);
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln() + log_h_third
}

/// The binary mixture rule of the prior-integral form: ratio of the weighted
/// integral with the candidate symbol appended to the one without it.
pub fn mixture_prob_binary(
    counts: &SymbolCounts,
    a: u32,
    density: &BinaryDensity,
    quadrature_points: usize,
) -> Result<f64> {
    if counts.alphabet_size() != 2 {
        return Err(Error::InvalidPrior("density priors are binary-only".into()));
    }
    let n0 = counts.count(0) as f64;
    let n1 = counts.count(1) as f64;
    let (ne1, ne0) = if a == 1 {
        (n1 + 1.0, n0)
    } else {
        (n1, n0 + 1.0)
    };
    let log_num = log_weighted_integral(density, ne1, ne0, quadrature_points);
    let log_den = log_weighted_integral(density, n1, n0, quadrature_points);
    if !log_den.is_finite() {
        return Err(Error::Quadrature(format!(
            "denominator integral underflowed for counts ({}, {})",
            counts.count(0),
            counts.count(1)
        )));
    }
    Ok((log_num - log_den).exp())
}

/// Next-symbol probability for a prior at the given counts.
pub fn prior_prob(counts: &SymbolCounts, a: u32, prior: &PriorSpec) -> Result<f64> {
    match prior {
        PriorSpec::Dirichlet { gamma } => Ok(dirichlet_prob(counts, a, *gamma)),
        PriorSpec::BinaryDensity {
            density,
            quadrature_points,
        } => mixture_prob_binary(counts, a, density, *quadrature_points),
        PriorSpec::BernoulliHalf => Err(Error::InvalidPrior(
            "Bernoulli(1/2) point prior has no SPA (density not bounded away from zero)".into(),
        )),
    }
}

/// Log loss, in bits, of the plain (context-free) mixture SPA over a symbol
/// slice, starting from empty counts.
pub fn qf_sequence_log_loss(prior: &PriorSpec, alphabet_size: u32, symbols: &[u32]) -> Result<f64> {
    let mut counts = SymbolCounts::new(alphabet_size);
    let mut loss = 0.0;
    for &a in symbols {
        let q = prior_prob(&counts, a, prior)?;
        loss -= q.log2();
        counts.observe(a);
    }
    Ok(loss)
}

/// Outcome of one SPA step.
#[derive(Debug, Clone, Copy)]
pub struct SpaStep {
    pub prob: f64,
    pub loss_bits: f64,
    pub tree_step: StepOutcome,
}

/// The LZ78 sequential probability assignment: a prefix tree plus a prior,
/// with exact cumulative log-loss accounting.
#[derive(Debug, Clone)]
pub struct Lz78Spa {
    tree: Lz78Tree,
    prior: PriorSpec,
    log_loss_bits: f64,
    symbols_processed: u64,
    frozen: bool,
}

impl Lz78Spa {
    pub fn new(alphabet_size: u32, prior: PriorSpec) -> Result<Self> {
        let tree = Lz78Tree::new(alphabet_size)?;
        Self::from_tree(tree, prior)
    }

    pub fn from_tree(tree: Lz78Tree, prior: PriorSpec) -> Result<Self> {
        prior.validate(tree.alphabet_size())?;
        if matches!(prior, PriorSpec::BernoulliHalf) {
            return Err(Error::InvalidPrior(
                "Bernoulli(1/2) point prior has no SPA (density not bounded away from zero)".into(),
            ));
        }
        Ok(Self {
            tree,
            prior,
            log_loss_bits: 0.0,
            symbols_processed: 0,
            frozen: false,
        })
    }

    pub fn tree(&self) -> &Lz78Tree {
        &self.tree
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn alphabet_size(&self) -> u32 {
        self.tree.alphabet_size()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Stops tree growth and count updates; evaluation and generation only.
    pub fn freeze(&mut self) {
        self.frozen = true;
        self.tree.reset_cursor();
    }

    pub fn cumulative_log_loss(&self) -> f64 {
        self.log_loss_bits
    }

    pub fn symbols_processed(&self) -> u64 {
        self.symbols_processed
    }

    pub fn normalized_log_loss(&self) -> f64 {
        if self.symbols_processed == 0 {
            0.0
        } else {
            self.log_loss_bits / self.symbols_processed as f64
        }
    }

    pub fn reset_cursor(&mut self) {
        self.tree.reset_cursor();
    }

    /// `q(a | node)` from the node's counts.
    pub fn prob_at(&self, node: NodeId, a: u32) -> Result<f64> {
        if a >= self.alphabet_size() {
            return Err(Error::SymbolOutOfRange {
                symbol: a,
                alphabet_size: self.alphabet_size(),
            });
        }
        match &self.prior {
            PriorSpec::Dirichlet { gamma } => Ok(dirichlet_prob_raw(
                self.tree.context_count(node, a),
                self.tree.context_total(node),
                *gamma,
                self.alphabet_size(),
            )),
            PriorSpec::BinaryDensity {
                density,
                quadrature_points,
            } => {
                let counts = self.counts_at(node);
                mixture_prob_binary(&counts, a, density, *quadrature_points)
            }
            PriorSpec::BernoulliHalf => unreachable!("rejected at construction"),
        }
    }

    /// The full next-symbol distribution at a node.
    pub fn distribution_at(&self, node: NodeId) -> Result<Vec<f64>> {
        (0..self.alphabet_size())
            .map(|a| self.prob_at(node, a))
            .collect()
    }

    pub fn counts_at(&self, node: NodeId) -> SymbolCounts {
        let counts = (0..self.alphabet_size())
            .map(|a| self.tree.context_count(node, a))
            .collect();
        SymbolCounts::from_counts(counts)
    }

    /// Evaluates `q` at the cursor, accrues the loss, and advances the tree
    /// (growing it as needed).
    pub fn train_symbol(&mut self, a: u32) -> Result<SpaStep> {
        if self.frozen {
            return Err(Error::InvalidArgument(
                "model is frozen; training is not allowed".into(),
            ));
        }
        let prob = self.prob_at(self.tree.cursor(), a)?;
        let loss_bits = -prob.log2();
        let tree_step = self.tree.step(a)?;
        self.log_loss_bits += loss_bits;
        self.symbols_processed += 1;
        Ok(SpaStep {
            prob,
            loss_bits,
            tree_step,
        })
    }

    /// Trains on a whole sequence (without resetting the cursor first);
    /// returns the loss incurred on this sequence.
    pub fn train_sequence(&mut self, x: &Sequence) -> Result<f64> {
        let mut loss = 0.0;
        for &a in x.symbols() {
            loss += self.train_symbol(a)?.loss_bits;
        }
        Ok(loss)
    }

    /// Log loss of `x` against the frozen tree: counts never change, and the
    /// cursor falls back to [`backshift_cursor`] when a child is missing.
    /// Pure with respect to the model; each call carries its own cursor.
    pub fn frozen_loss(&self, x: &Sequence, backshift: usize) -> Result<f64> {
        let mut node = ROOT;
        let mut loss = 0.0;
        let syms = x.symbols();
        for (t, &a) in syms.iter().enumerate() {
            let q = self.prob_at(node, a)?;
            loss -= q.log2();
            node = match self.tree.child(node, a) {
                Some(c) => c,
                None => backshift_cursor(&self.tree, &syms[..=t], backshift),
            };
        }
        Ok(loss)
    }
}

/// Total log loss, in bits, of the configured SPA run from a fresh tree.
pub fn spa_log_loss(prior: &PriorSpec, x: &Sequence) -> Result<f64> {
    let mut spa = Lz78Spa::new(x.alphabet().size(), prior.clone())?;
    spa.train_sequence(x)
}

/// Re-seeds a frozen-tree cursor: walks from the root along the last
/// `max_shift` symbols of `recent`, retrying with one fewer symbol until the
/// walk lands on an internal non-root node. A walk that hits a missing child
/// counts as landing on a leaf. Falls back to the root at shift zero.
pub fn backshift_cursor(tree: &Lz78Tree, recent: &[u32], max_shift: usize) -> NodeId {
    let start = max_shift.min(recent.len());
    for m in (1..=start).rev() {
        let suffix = &recent[recent.len() - m..];
        if let Some(node) = walk_from_root(tree, suffix) {
            if node != ROOT && !tree.is_leaf(node) {
                return node;
            }
        }
    }
    ROOT
}

fn walk_from_root(tree: &Lz78Tree, symbols: &[u32]) -> Option<NodeId> {
    let mut node = ROOT;
    for &a in symbols {
        node = tree.child(node, a)?;
    }
    Some(node)
}
