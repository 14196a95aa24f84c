//! Minimum-log-loss classification: one LZ78 model per class, trained by
//! concatenating each class's samples (cursor reset to the root per sample,
//! optionally for several epochs), then scoring test sequences on every
//! frozen tree.

use crate::sequence::Sequence;
use crate::spa::{Lz78Spa, PriorSpec};
use crate::{Error, Result};

/// Back-shift window used when a frozen-tree walk hits a missing child
/// during inference; same rule as generation.
pub const DEFAULT_INFERENCE_BACKSHIFT: usize = 500;

/// Labeled training data. Labels are dense integers `0..num_classes`.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    samples: Vec<(Sequence, usize)>,
    num_classes: usize,
}

impl LabeledCorpus {
    pub fn new(samples: Vec<(Sequence, usize)>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 || samples.is_empty() {
            return Err(Error::InvalidArgument("corpus must be nonempty".into()));
        }
        let mut seen = vec![false; num_classes];
        for (_, label) in &samples {
            if *label >= num_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {label} out of range for {num_classes} classes"
                )));
            }
            seen[*label] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidArgument(format!(
                "class {missing} has no training samples"
            )));
        }
        Ok(Self {
            samples,
            num_classes,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[(Sequence, usize)] {
        &self.samples
    }
}

/// One frozen model per class.
#[derive(Debug, Clone)]
pub struct Classifier {
    models: Vec<Lz78Spa>,
    epochs: u32,
    gamma: f64,
    backshift: usize,
}

impl Classifier {
    pub fn models(&self) -> &[Lz78Spa] {
        &self.models
    }

    pub fn num_classes(&self) -> usize {
        self.models.len()
    }

    pub fn epochs(&self) -> u32 {
        self.epochs
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn backshift(&self) -> usize {
        self.backshift
    }

    pub fn set_backshift(&mut self, backshift: usize) {
        self.backshift = backshift;
    }

    /// Reassembles a classifier from per-class models (e.g. after loading).
    pub fn from_models(models: Vec<Lz78Spa>, epochs: u32, gamma: f64) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidArgument("no class models".into()));
        }
        Ok(Self {
            models,
            epochs,
            gamma,
            backshift: DEFAULT_INFERENCE_BACKSHIFT,
        })
    }

    /// Frozen log loss of `x` on every class model, and the argmin label
    /// (ties break toward the smaller label).
    pub fn predict(&self, x: &Sequence) -> Result<(usize, Vec<f64>)> {
        let mut losses = Vec::with_capacity(self.models.len());
        for model in &self.models {
            losses.push(model.frozen_loss(x, self.backshift)?);
        }
        let mut best = 0usize;
        for (i, &loss) in losses.iter().enumerate() {
            if loss < losses[best] {
                best = i;
            }
        }
        Ok((best, losses))
    }
}

/// Trains one model per class: for each epoch, for each sample of the class,
/// reset the cursor to the root and feed the sample; freeze everything at
/// the end.
pub fn train(corpus: &LabeledCorpus, epochs: u32, gamma: f64) -> Result<Classifier> {
    if epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be positive".into()));
    }
    let alphabet_size = corpus.samples()[0].0.alphabet().size();
    let mut models: Vec<Lz78Spa> = (0..corpus.num_classes())
        .map(|_| Lz78Spa::new(alphabet_size, PriorSpec::dirichlet(gamma)))
        .collect::<Result<_>>()?;
    for _ in 0..epochs {
        for (sample, label) in corpus.samples() {
            let model = &mut models[*label];
            model.reset_cursor();
            model.train_sequence(sample)?;
        }
    }
    for model in &mut models {
        model.freeze();
    }
    Ok(Classifier {
        models,
        epochs,
        gamma,
        backshift: DEFAULT_INFERENCE_BACKSHIFT,
    })
}
