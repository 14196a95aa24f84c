//! Frozen-tree sequence generation: top-k truncation, temperature
//! re-weighting, and back-shift re-seeding of the cursor whenever it lands
//! somewhere uninformative (the root or a leaf).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::sequence::Sequence;
use crate::spa::{backshift_cursor, Lz78Spa};
use crate::tree::{NodeId, ROOT};
use crate::{Error, Result};

/// Below this temperature, sampling collapses to the argmax.
pub const ARGMAX_TEMPERATURE: f64 = 1e-6;

/// Generation hyperparameters. Defaults follow the text-generation
/// experiments: back-shift window 500, top-5, temperature 0.1.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub len: usize,
    pub top_k: u32,
    pub temperature: f64,
    pub backshift: usize,
    pub seed_text: Option<Sequence>,
}

impl GenConfig {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            top_k: 5,
            temperature: 0.1,
            backshift: 500,
            seed_text: None,
        }
    }

    fn validate(&self, alphabet_size: u32) -> Result<()> {
        if self.top_k == 0 || self.top_k > alphabet_size {
            return Err(Error::InvalidArgument(format!(
                "top_k must be in 1..={alphabet_size}"
            )));
        }
        if self.temperature <= 0.0 || self.temperature.is_nan() {
            return Err(Error::InvalidArgument(
                "temperature must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a generation run.
#[derive(Debug, Clone)]
pub struct Generated {
    pub sequence: Sequence,
    /// Log loss of the emitted symbols under the raw (un-truncated) SPA.
    pub log_loss_bits: f64,
    /// True when the model had no phrases, making generation uniform.
    pub degenerate_model: bool,
}

/// The top-k symbol set: highest probabilities first, ties broken toward the
/// smaller symbol index.
pub fn top_k_symbols(dist: &[f64], k: u32) -> Vec<u32> {
    let mut order: Vec<u32> = (0..dist.len() as u32).collect();
    order.sort_by(|&a, &b| {
        dist[b as usize]
            .partial_cmp(&dist[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k as usize);
    order
}

/// The full sampling distribution after top-k truncation and temperature
/// re-weighting: `P(a) ∝ q(a)^(1/T)` over the top-k set, zero elsewhere.
pub fn reweighted_distribution(dist: &[f64], top_k: u32, temperature: f64) -> Vec<f64> {
    let keep = top_k_symbols(dist, top_k);
    let mut out = vec![0.0; dist.len()];
    if temperature < ARGMAX_TEMPERATURE {
        out[keep[0] as usize] = 1.0;
        return out;
    }
    // q^(1/T) in the log domain with max-subtraction.
    let logs: Vec<f64> = keep
        .iter()
        .map(|&a| dist[a as usize].log2() / temperature)
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp2()).collect();
    let total: f64 = weights.iter().sum();
    for (&a, &w) in keep.iter().zip(&weights) {
        out[a as usize] = w / total;
    }
    out
}

/// Draws one symbol from [`reweighted_distribution`]. Temperatures below
/// [`ARGMAX_TEMPERATURE`] take the argmax (smallest symbol index on ties).
pub fn sample_symbol(dist: &[f64], top_k: u32, temperature: f64, rng: &mut ChaCha12Rng) -> u32 {
    let weights = reweighted_distribution(dist, top_k, temperature);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0u32;
    for (a, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = a as u32;
            acc += w;
            if u < acc {
                return a as u32;
            }
        }
    }
    last_positive
}

/// Generates `cfg.len` symbols from a frozen model. The cursor starts at the
/// root, optionally walks the seed text, and is re-seeded by back-shift
/// whenever a traversal lands on the root or a leaf (or the drawn symbol has
/// no child).
pub fn generate(model: &Lz78Spa, cfg: &GenConfig, seed: u64) -> Result<Generated> {
    cfg.validate(model.alphabet_size())?;
    let tree = model.tree();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut cursor: NodeId = ROOT;

    if let Some(seed_text) = &cfg.seed_text {
        for &a in seed_text.symbols() {
            cursor = match tree.child(cursor, a) {
                Some(c) => c,
                None => ROOT,
            };
        }
    }

    let mut out: Vec<u32> = Vec::with_capacity(cfg.len);
    let mut loss = 0.0;
    while out.len() < cfg.len {
        let dist = model.distribution_at(cursor)?;
        let a = sample_symbol(&dist, cfg.top_k, cfg.temperature, &mut rng);
        loss -= dist[a as usize].log2();
        out.push(a);
        let advanced = tree.child(cursor, a);
        cursor = match advanced {
            Some(c) if c != ROOT && !tree.is_leaf(c) => c,
            // Missing child or an uninformative landing spot: re-walk the
            // last backshift symbols of the generated output.
            _ => backshift_cursor(tree, &out, cfg.backshift),
        };
    }

    Ok(Generated {
        sequence: Sequence::new(out, crate::sequence::Alphabet::new(model.alphabet_size())?)?,
        log_loss_bits: loss,
        degenerate_model: tree.phrase_count() == 0,
    })
}
