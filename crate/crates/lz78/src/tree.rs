//! The LZ78 prefix tree: incremental parsing, per-node visit counts, and the
//! streaming cursor that yields each symbol's context.
//!
//! Counts follow the convention that the phrase currently being parsed is
//! included: a node's count is incremented the moment the cursor traverses
//! it, not when the phrase completes. The count stored at a node equals
//! `N(a | x^t, z)` where `z` is the parent's phrase and `a` the node's
//! incoming symbol.

use std::collections::BTreeMap;

use crate::sequence::Sequence;
use crate::{Error, Result};

/// Index into the tree's node table. The root is always `ROOT`.
pub type NodeId = u32;

pub const ROOT: NodeId = 0;

/// Sentinel parent/incoming-symbol value for the root node.
pub const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct Node {
    pub parent: NodeId,
    pub incoming_symbol: u32,
    pub depth: u32,
    /// Number of phrases (including the in-progress one) through this node.
    pub count: u64,
    /// Sum of the counts of this node's children.
    pub children_count_sum: u64,
    /// Children keyed by symbol. A `BTreeMap` keeps iteration order canonical
    /// for serialization.
    pub children: BTreeMap<u32, NodeId>,
}

impl Node {
    fn new(parent: NodeId, incoming_symbol: u32, depth: u32, count: u64) -> Self {
        Self {
            parent,
            incoming_symbol,
            depth,
            count,
            children_count_sum: 0,
            children: BTreeMap::new(),
        }
    }
}

/// Outcome of feeding one symbol to the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    /// The cursor position before the step: the context of this symbol.
    pub context: NodeId,
    /// True when the symbol created a new leaf (the phrase completed).
    pub new_leaf: bool,
}

/// Streaming LZ78 prefix tree.
#[derive(Debug, Clone)]
pub struct Lz78Tree {
    alphabet_size: u32,
    nodes: Vec<Node>,
    cursor: NodeId,
    phrase_count: u64,
    symbols_seen: u64,
    node_budget: Option<usize>,
}

impl Lz78Tree {
    pub fn new(alphabet_size: u32) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::AlphabetTooSmall(alphabet_size));
        }
        Ok(Self {
            alphabet_size,
            nodes: vec![Node::new(NO_NODE, NO_NODE, 0, 0)],
            cursor: ROOT,
            phrase_count: 0,
            symbols_seen: 0,
            node_budget: None,
        })
    }

    /// Caps the number of nodes; once reached, parsing keeps updating counts
    /// along existing paths but adds no leaves.
    pub fn with_node_budget(mut self, budget: usize) -> Self {
        self.node_budget = Some(budget);
        self
    }

    /// Reassembles a tree from a validated node table (deserialization).
    pub(crate) fn from_parts(alphabet_size: u32, nodes: Vec<Node>, symbols_seen: u64) -> Self {
        let phrase_count = nodes.len() as u64 - 1;
        Self {
            alphabet_size,
            nodes,
            cursor: ROOT,
            phrase_count,
            symbols_seen,
            node_budget: None,
        }
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of completed phrases, equal to the number of non-root nodes
    /// when growth is unbounded.
    pub fn phrase_count(&self) -> u64 {
        self.phrase_count
    }

    pub fn symbols_seen(&self) -> u64 {
        self.symbols_seen
    }

    pub fn cursor(&self) -> NodeId {
        self.cursor
    }

    pub fn reset_cursor(&mut self) {
        self.cursor = ROOT;
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn child(&self, z: NodeId, a: u32) -> Option<NodeId> {
        self.nodes[z as usize].children.get(&a).copied()
    }

    pub fn is_leaf(&self, z: NodeId) -> bool {
        self.nodes[z as usize].children.is_empty()
    }

    /// `N(a | x^t, z)`: the number of phrases, including the in-progress one,
    /// that start with the phrase of `z` followed by `a`.
    pub fn context_count(&self, z: NodeId, a: u32) -> u64 {
        match self.child(z, a) {
            Some(c) => self.nodes[c as usize].count,
            None => 0,
        }
    }

    /// Sum of `context_count(z, a)` over the alphabet.
    pub fn context_total(&self, z: NodeId) -> u64 {
        self.nodes[z as usize].children_count_sum
    }

    /// Feeds one symbol: traverses to the matching child (incrementing its
    /// count) or, if absent, grows a leaf, completes the phrase, and returns
    /// the cursor to the root.
    pub fn step(&mut self, a: u32) -> Result<StepOutcome> {
        if a >= self.alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol: a,
                alphabet_size: self.alphabet_size,
            });
        }
        let context = self.cursor;
        let outcome = match self.child(context, a) {
            Some(child) => {
                self.nodes[child as usize].count += 1;
                self.nodes[context as usize].children_count_sum += 1;
                self.cursor = child;
                StepOutcome {
                    context,
                    new_leaf: false,
                }
            }
            None => {
                let frozen = self
                    .node_budget
                    .is_some_and(|budget| self.nodes.len() >= budget);
                if !frozen {
                    let id = self.nodes.len() as NodeId;
                    let depth = self.nodes[context as usize].depth + 1;
                    self.nodes.push(Node::new(context, a, depth, 1));
                    self.nodes[context as usize].children.insert(a, id);
                    self.nodes[context as usize].children_count_sum += 1;
                }
                self.phrase_count += 1;
                self.cursor = ROOT;
                StepOutcome {
                    context,
                    new_leaf: true,
                }
            }
        };
        self.symbols_seen += 1;
        Ok(outcome)
    }

    /// Reconstructs the phrase (symbol string) of a node by walking parents.
    pub fn phrase_of(&self, id: NodeId) -> Vec<u32> {
        let mut syms = Vec::new();
        let mut cur = id;
        while cur != ROOT {
            let node = &self.nodes[cur as usize];
            syms.push(node.incoming_symbol);
            cur = node.parent;
        }
        syms.reverse();
        syms
    }
}

/// Phrase boundaries of a parse. `phrases` partitions `[1, n]` into
/// consecutive windows (1-indexed, inclusive); the final window is the
/// in-progress phrase when `last_phrase_complete` is false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseSummary {
    pub phrases: Vec<(usize, usize)>,
    /// `C(x^n)`: all phrases, including a nonempty in-progress one.
    pub phrase_count: u64,
    pub last_phrase_complete: bool,
}

/// Parses a whole sequence into a fresh tree plus its phrase boundaries.
pub fn parse(x: &Sequence) -> Result<(Lz78Tree, ParseSummary)> {
    let mut tree = Lz78Tree::new(x.alphabet().size())?;
    let mut phrases = Vec::new();
    let mut start = 1usize;
    for (i, &a) in x.symbols().iter().enumerate() {
        let t = i + 1;
        let out = tree.step(a)?;
        if out.new_leaf {
            phrases.push((start, t));
            start = t + 1;
        }
    }
    let last_phrase_complete = tree.cursor() == ROOT;
    if !last_phrase_complete {
        phrases.push((start, x.len()));
    }
    let summary = ParseSummary {
        phrase_count: phrases.len() as u64,
        phrases,
        last_phrase_complete: last_phrase_complete || x.is_empty(),
    };
    Ok((tree, summary))
}

/// Bits emitted by the LZ78 encoder under the convention that phrase `j`
/// names its prefix among the `j` phrases known so far (including the empty
/// phrase) and spends one full symbol:
/// `sum_{j=1..C} ceil(log2 j) + ceil(log2 A)`.
pub fn lz78_codelength_bits(summary: &ParseSummary, alphabet_size: u32) -> f64 {
    let sym_bits = (alphabet_size as f64).log2().ceil();
    let mut bits = 0.0;
    for j in 1..=summary.phrase_count {
        bits += (j as f64).log2().ceil() + sym_bits;
    }
    bits
}

/// The codelength proxy `C(x^n) * log2 C(x^n)`; zero when `C <= 1`.
pub fn codelength_proxy(summary: &ParseSummary) -> f64 {
    let c = summary.phrase_count as f64;
    if summary.phrase_count <= 1 {
        0.0
    } else {
        c * c.log2()
    }
}
