//! Alphabets, symbol sequences, and text/byte ingestion.
//!
//! Symbols are dense integers in `0..A`. Text alphabets carry a character map
//! so that character data can be filtered and mapped into symbols; all of the
//! math downstream is alphabet-agnostic.

use std::collections::HashMap;

use crate::{Error, Result};

/// Characters accepted by the default text alphabet: ASCII letters, digits,
/// the punctuation set `.,;:'"!?()-`, space, and newline. Characters outside
/// this set are dropped during ingestion.
pub const DEFAULT_TEXT_CHARS: &str =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:'\"!?()- \n";

/// A finite symbol alphabet, optionally backed by a character map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: u32,
    charmap: Option<Vec<char>>,
    reverse: Option<HashMap<char, u32>>,
}

impl Alphabet {
    /// An alphabet of `size` abstract symbols with no character mapping.
    pub fn new(size: u32) -> Result<Self> {
        if size < 2 {
            return Err(Error::AlphabetTooSmall(size));
        }
        Ok(Self {
            size,
            charmap: None,
            reverse: None,
        })
    }

    /// Binary alphabet `{0, 1}`.
    pub fn binary() -> Self {
        Self::new(2).expect("2 >= 2")
    }

    /// Byte alphabet: 256 symbols, identity mapping onto raw bytes.
    pub fn byte() -> Self {
        Self::new(256).expect("256 >= 2")
    }

    /// An alphabet whose symbols are the given characters, in order.
    pub fn from_chars(chars: &str) -> Result<Self> {
        let charmap: Vec<char> = chars.chars().collect();
        let mut reverse = HashMap::with_capacity(charmap.len());
        for (i, &c) in charmap.iter().enumerate() {
            if reverse.insert(c, i as u32).is_some() {
                return Err(Error::BadCharmap {
                    expected: charmap.len() as u32,
                    got: reverse.len(),
                });
            }
        }
        if charmap.len() < 2 {
            return Err(Error::AlphabetTooSmall(charmap.len() as u32));
        }
        Ok(Self {
            size: charmap.len() as u32,
            charmap: Some(charmap),
            reverse: Some(reverse),
        })
    }

    /// The text alphabet used by the text experiments (see [`DEFAULT_TEXT_CHARS`]).
    pub fn text() -> Self {
        Self::from_chars(DEFAULT_TEXT_CHARS).expect("default charmap is valid")
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn has_charmap(&self) -> bool {
        self.charmap.is_some()
    }

    /// The character for a symbol, when this alphabet has a charmap.
    pub fn symbol_to_char(&self, sym: u32) -> Option<char> {
        self.charmap
            .as_ref()
            .and_then(|m| m.get(sym as usize))
            .copied()
    }

    /// The symbol for a character, when present in the charmap.
    pub fn char_to_symbol(&self, c: char) -> Option<u32> {
        self.reverse.as_ref().and_then(|m| m.get(&c)).copied()
    }

    pub fn validate_symbol(&self, sym: u32) -> Result<()> {
        if sym >= self.size {
            Err(Error::SymbolOutOfRange {
                symbol: sym,
                alphabet_size: self.size,
            })
        } else {
            Ok(())
        }
    }
}

/// A finite sequence of symbols over an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    symbols: Vec<u32>,
    alphabet: Alphabet,
}

impl Sequence {
    pub fn new(symbols: Vec<u32>, alphabet: Alphabet) -> Result<Self> {
        for &s in &symbols {
            alphabet.validate_symbol(s)?;
        }
        Ok(Self { symbols, alphabet })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Self {
            symbols: Vec::new(),
            alphabet,
        }
    }

    /// Wraps raw bytes as a byte-alphabet sequence.
    pub fn from_bytes(data: &[u8]) -> Self {
        Self {
            symbols: data.iter().map(|&b| b as u32).collect(),
            alphabet: Alphabet::byte(),
        }
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn push(&mut self, sym: u32) -> Result<()> {
        self.alphabet.validate_symbol(sym)?;
        self.symbols.push(sym);
        Ok(())
    }

    /// The window `x_k..x_l`, 1-indexed and inclusive on both ends. Returns
    /// the empty sequence when `k > l`.
    pub fn window(&self, k: usize, l: usize) -> Result<Sequence> {
        if k > l {
            return Ok(Sequence::empty(self.alphabet.clone()));
        }
        if k < 1 || l > self.symbols.len() {
            return Err(Error::WindowOutOfRange {
                start: k,
                end: l,
                len: self.symbols.len(),
            });
        }
        Ok(Sequence {
            symbols: self.symbols[k - 1..l].to_vec(),
            alphabet: self.alphabet.clone(),
        })
    }

    /// Number of occurrences of symbol `a`.
    pub fn symbol_count(&self, a: u32) -> Result<u64> {
        self.alphabet.validate_symbol(a)?;
        Ok(self.symbols.iter().filter(|&&s| s == a).count() as u64)
    }

    /// Renders the sequence back into text through the charmap.
    pub fn render(&self) -> Result<String> {
        let mut out = String::with_capacity(self.symbols.len());
        for &s in &self.symbols {
            match self.alphabet.symbol_to_char(s) {
                Some(c) => out.push(c),
                None => {
                    return Err(Error::InvalidArgument(
                        "alphabet has no charmap to render through".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Maps the characters of `text` present in the alphabet's charmap to symbols,
/// in order; all other characters are dropped silently.
pub fn ingest_text(text: &str, alphabet: &Alphabet) -> Result<Sequence> {
    if !alphabet.has_charmap() {
        return Err(Error::InvalidArgument(
            "ingest_text requires an alphabet with a charmap".into(),
        ));
    }
    let symbols = text
        .chars()
        .filter_map(|c| alphabet.char_to_symbol(c))
        .collect();
    Ok(Sequence {
        symbols,
        alphabet: alphabet.clone(),
    })
}
