//! Bit-exact model serialization. One canonical little-endian layout so
//! byte-identity round trips are meaningful:
//!
//! ```text
//! magic "LZ78SPA1" | alphabet_size u32 | prior (tag u8 + params)
//! | flags u32 (bit 0 = frozen) | node_count u64
//! | node records: id u32, parent u32, incoming u32,
//!                 child_len u32, (symbol u32, count u64)* sorted by symbol
//! ```
//!
//! The root is id 0 with `0xFFFF_FFFF` as its parent and incoming-symbol
//! sentinels; ids are dense and parents precede children. Counts live in the
//! parent's sparse child list. Cursor and loss accounting are not stored: a
//! loaded model starts at the root with zeroed loss.

use bytes::{Buf, BufMut};

use crate::spa::{BinaryDensity, Lz78Spa, PriorSpec};
#[cfg(test)]
use crate::tree::ROOT;
use crate::tree::{Lz78Tree, Node, NO_NODE};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LZ78SPA1";
pub const CLASSIFIER_MAGIC: &[u8; 8] = b"LZ78CLF1";

const FLAG_FROZEN: u32 = 1;

const PRIOR_DIRICHLET: u8 = 0;
const PRIOR_BERNOULLI_HALF: u8 = 1;
const PRIOR_BINARY_UNIFORM: u8 = 2;
const PRIOR_BINARY_TRUNC_GAUSS: u8 = 3;
const PRIOR_BINARY_DIRICHLET: u8 = 4;

fn put_prior(out: &mut Vec<u8>, prior: &PriorSpec) {
    match prior {
        PriorSpec::Dirichlet { gamma } => {
            out.put_u8(PRIOR_DIRICHLET);
            out.put_f64_le(*gamma);
        }
        PriorSpec::BernoulliHalf => out.put_u8(PRIOR_BERNOULLI_HALF),
        PriorSpec::BinaryDensity {
            density,
            quadrature_points,
        } => {
            match density {
                BinaryDensity::Uniform => out.put_u8(PRIOR_BINARY_UNIFORM),
                BinaryDensity::TruncatedGaussian {
                    mean,
                    std_dev,
                    floor,
                } => {
                    out.put_u8(PRIOR_BINARY_TRUNC_GAUSS);
                    out.put_f64_le(*mean);
                    out.put_f64_le(*std_dev);
                    out.put_f64_le(*floor);
                }
                BinaryDensity::Dirichlet { gamma } => {
                    out.put_u8(PRIOR_BINARY_DIRICHLET);
                    out.put_f64_le(*gamma);
                }
            }
            out.put_u32_le(*quadrature_points as u32);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn need(&self, n: usize) -> Result<()> {
        if self.buf.remaining() < n {
            Err(Error::Format("truncated model file".into()))
        } else {
            Ok(())
        }
    }

    fn u8(&mut self) -> Result<u8> {
        self.need(1)?;
        Ok(self.buf.get_u8())
    }

    fn u32(&mut self) -> Result<u32> {
        self.need(4)?;
        Ok(self.buf.get_u32_le())
    }

    fn u64(&mut self) -> Result<u64> {
        self.need(8)?;
        Ok(self.buf.get_u64_le())
    }

    fn f64(&mut self) -> Result<f64> {
        self.need(8)?;
        Ok(self.buf.get_f64_le())
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        self.need(n)?;
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
}

fn get_prior(r: &mut Reader) -> Result<PriorSpec> {
    let tag = r.u8()?;
    match tag {
        PRIOR_DIRICHLET => Ok(PriorSpec::Dirichlet { gamma: r.f64()? }),
        PRIOR_BERNOULLI_HALF => Ok(PriorSpec::BernoulliHalf),
        PRIOR_BINARY_UNIFORM | PRIOR_BINARY_TRUNC_GAUSS | PRIOR_BINARY_DIRICHLET => {
            let density = match tag {
                PRIOR_BINARY_UNIFORM => BinaryDensity::Uniform,
                PRIOR_BINARY_TRUNC_GAUSS => BinaryDensity::TruncatedGaussian {
                    mean: r.f64()?,
                    std_dev: r.f64()?,
                    floor: r.f64()?,
                },
                _ => BinaryDensity::Dirichlet { gamma: r.f64()? },
            };
            Ok(PriorSpec::BinaryDensity {
                density,
                quadrature_points: r.u32()? as usize,
            })
        }
        other => Err(Error::Format(format!("unknown prior tag {other}"))),
    }
}

/// Serializes a model to its canonical byte layout.
pub fn save(model: &Lz78Spa) -> Result<Vec<u8>> {
    let tree = model.tree();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.put_u32_le(tree.alphabet_size());
    put_prior(&mut out, model.prior());
    out.put_u32_le(if model.is_frozen() { FLAG_FROZEN } else { 0 });
    out.put_u64_le(tree.node_count() as u64);
    for (id, node) in tree.nodes().iter().enumerate() {
        out.put_u32_le(id as u32);
        out.put_u32_le(node.parent);
        out.put_u32_le(node.incoming_symbol);
        out.put_u32_le(node.children.len() as u32);
        for (&sym, &child) in &node.children {
            out.put_u32_le(sym);
            out.put_u64_le(tree.node(child).count);
        }
    }
    Ok(out)
}

/// Parses the canonical layout back into a model. The cursor is reset to the
/// root and the loss accumulator starts at zero.
pub fn load(bytes: &[u8]) -> Result<Lz78Spa> {
    let mut r = Reader { buf: bytes };
    if r.bytes(8)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let alphabet_size = r.u32()?;
    if alphabet_size < 2 {
        return Err(Error::Format("alphabet size below 2".into()));
    }
    let prior = get_prior(&mut r)?;
    let flags = r.u32()?;
    let node_count = r.u64()? as usize;
    if node_count == 0 {
        return Err(Error::Format("node table must contain the root".into()));
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(node_count);
    // Child lists as recorded, to be claimed by child nodes below.
    let mut recorded: Vec<Vec<(u32, u64)>> = Vec::with_capacity(node_count);
    for expect_id in 0..node_count {
        let id = r.u32()? as usize;
        if id != expect_id {
            return Err(Error::Format(format!(
                "node ids must be dense: expected {expect_id}, found {id}"
            )));
        }
        let parent = r.u32()?;
        let incoming = r.u32()?;
        if expect_id == 0 {
            if parent != NO_NODE || incoming != NO_NODE {
                return Err(Error::Format("root must carry sentinel parent".into()));
            }
        } else {
            if parent as usize >= expect_id {
                return Err(Error::Format(format!(
                    "parent {parent} of node {expect_id} does not precede it"
                )));
            }
            if incoming >= alphabet_size {
                return Err(Error::Format("incoming symbol out of range".into()));
            }
        }
        let child_len = r.u32()? as usize;
        let mut list = Vec::with_capacity(child_len);
        let mut prev_sym: Option<u32> = None;
        for _ in 0..child_len {
            let sym = r.u32()?;
            let count = r.u64()?;
            if sym >= alphabet_size {
                return Err(Error::Format("child symbol out of range".into()));
            }
            if prev_sym.is_some_and(|p| p >= sym) {
                return Err(Error::Format("child list must be sorted by symbol".into()));
            }
            if count == 0 {
                return Err(Error::Format("child count must be at least 1".into()));
            }
            prev_sym = Some(sym);
            list.push((sym, count));
        }
        recorded.push(list);
        let depth = if expect_id == 0 {
            0
        } else {
            nodes[parent as usize].depth + 1
        };
        nodes.push(Node {
            parent,
            incoming_symbol: incoming,
            depth,
            count: 0, // claimed from the parent's list below
            children_count_sum: 0,
            children: Default::default(),
        });
    }
    if r.buf.has_remaining() {
        return Err(Error::Format("trailing bytes after node table".into()));
    }

    // Wire up children and claim counts.
    for id in 1..node_count {
        let parent = nodes[id].parent as usize;
        let sym = nodes[id].incoming_symbol;
        let count = recorded[parent]
            .iter()
            .find(|&&(s, _)| s == sym)
            .map(|&(_, c)| c)
            .ok_or_else(|| {
                Error::Format(format!("node {id} missing from its parent's child list"))
            })?;
        if nodes[parent].children.insert(sym, id as u32).is_some() {
            return Err(Error::Format(format!(
                "duplicate child symbol {sym} under node {parent}"
            )));
        }
        nodes[id].count = count;
    }
    for id in 0..node_count {
        if recorded[id].len() != nodes[id].children.len() {
            return Err(Error::Format(format!(
                "node {id} lists children that do not exist"
            )));
        }
        nodes[id].children_count_sum = recorded[id].iter().map(|&(_, c)| c).sum();
    }

    let symbols_seen: u64 = nodes.iter().skip(1).map(|n| n.count).sum();
    let tree = Lz78Tree::from_parts(alphabet_size, nodes, symbols_seen);
    let mut spa = Lz78Spa::from_tree(tree, prior)?;
    if flags & FLAG_FROZEN != 0 {
        spa.freeze();
    }
    Ok(spa)
}

/// Serializes a whole classifier: header plus length-prefixed per-class
/// model blobs.
pub fn save_classifier(clf: &crate::classify::Classifier) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(CLASSIFIER_MAGIC);
    out.put_u32_le(clf.num_classes() as u32);
    out.put_u32_le(clf.epochs());
    out.put_f64_le(clf.gamma());
    for model in clf.models() {
        let blob = save(model)?;
        out.put_u64_le(blob.len() as u64);
        out.extend_from_slice(&blob);
    }
    Ok(out)
}

pub fn load_classifier(bytes: &[u8]) -> Result<crate::classify::Classifier> {
    let mut r = Reader { buf: bytes };
    if r.bytes(8)? != CLASSIFIER_MAGIC {
        return Err(Error::Format("bad classifier magic".into()));
    }
    let classes = r.u32()? as usize;
    let epochs = r.u32()?;
    let gamma = r.f64()?;
    let mut models = Vec::with_capacity(classes);
    for _ in 0..classes {
        let len = r.u64()? as usize;
        let blob = r.bytes(len)?;
        let mut model = load(blob)?;
        model.freeze();
        models.push(model);
    }
    if r.buf.has_remaining() {
        return Err(Error::Format("trailing bytes after class models".into()));
    }
    crate::classify::Classifier::from_models(models, epochs, gamma)
}
