//! Shared helpers for the integration suites: the explicit leaf-count label
//! tree (the label-based formulation of the 1/(A-1)-Dirichlet rule, kept in
//! test code as an independent oracle) and small sampling utilities.

use lz78::sequence::{Alphabet, Sequence};

/// The label-tree formulation: the root starts with one branch per symbol,
/// every completed phrase expands a leaf into A fresh branches, and each
/// node's label counts its descendant leaves. The next-symbol probability is
/// label(child) / label(current).
pub struct LeafCountTree {
    alphabet_size: u32,
    /// Children (full A-slot fan-out once expanded; empty for leaves).
    children: Vec<Vec<usize>>,
    parent: Vec<usize>,
    label: Vec<u64>,
    cursor: usize,
}

impl LeafCountTree {
    pub fn new(alphabet_size: u32) -> Self {
        let mut tree = Self {
            alphabet_size,
            children: vec![Vec::new()],
            parent: vec![usize::MAX],
            label: vec![1],
            cursor: 0,
        };
        tree.expand(0);
        tree
    }

    fn expand(&mut self, node: usize) {
        let a = self.alphabet_size as usize;
        let mut kids = Vec::with_capacity(a);
        for _ in 0..a {
            let id = self.children.len();
            self.children.push(Vec::new());
            self.parent.push(node);
            self.label.push(1);
            kids.push(id);
        }
        self.children[node] = kids;
        // The node stops being a leaf (-1) and gains A leaves below it.
        let delta = self.alphabet_size as u64 - 1;
        let mut cur = node;
        while cur != usize::MAX {
            self.label[cur] += delta;
            cur = self.parent[cur];
        }
        // Adjust for the node itself having started at label 1: after
        // expansion its label must equal the sum of its children.
        // label was 1, became 1 + (A - 1) = A, which is the A unit leaves.
    }

    /// Probability of `a` at the current node, then traversal (expanding the
    /// reached leaf and returning to the root when a phrase completes).
    pub fn step(&mut self, a: u32) -> f64 {
        let child = self.children[self.cursor][a as usize];
        let q = self.label[child] as f64 / self.label[self.cursor] as f64;
        if self.children[child].is_empty() {
            self.expand(child);
            self.cursor = 0;
        } else {
            self.cursor = child;
        }
        q
    }

    pub fn root_label(&self) -> u64 {
        self.label[0]
    }

    /// Label of the node reached by the phrase, if that path exists.
    pub fn label_of_phrase(&self, phrase: &[u32]) -> Option<u64> {
        let mut node = 0usize;
        for &a in phrase {
            if self.children[node].is_empty() {
                return None;
            }
            node = self.children[node][a as usize];
        }
        Some(self.label[node])
    }
}

pub fn binary_seq(symbols: &[u32]) -> Sequence {
    Sequence::new(symbols.to_vec(), Alphabet::binary()).unwrap()
}

pub fn seq_over(symbols: &[u32], alphabet_size: u32) -> Sequence {
    Sequence::new(symbols.to_vec(), Alphabet::new(alphabet_size).unwrap()).unwrap()
}

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}
