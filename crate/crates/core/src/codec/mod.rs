//! Robust string grammar over a 16-symbol alphabet.
//!
//! Every non-empty symbol string decodes to a connected, valence-valid
//! molecular graph ([`decode`]). Branch and ring symbols read the following
//! symbol(s) as numeric indices using the alphabet order, so any mutation
//! stays inside the grammar.

mod decode;
mod encode;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::Element;

pub use decode::{decode, decode_with_extent, Derivation};
pub use encode::encode;

/// Default cap on genotype length.
pub const DEFAULT_MAX_LEN: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unknown symbol `{token}` at byte {offset}")]
    UnknownSymbol { token: String, offset: usize },
    #[error("malformed genotype text at byte {offset}")]
    Malformed { offset: usize },
    #[error("genotype must contain at least one symbol")]
    Empty,
    #[error("graph cannot be encoded: {0}")]
    UnencodableGraph(String),
}

/// One grammar symbol. Discriminants are the symbol indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    C = 0,
    DoubleC = 1,
    TripleC = 2,
    N = 3,
    DoubleN = 4,
    TripleN = 5,
    O = 6,
    DoubleO = 7,
    S = 8,
    DoubleS = 9,
    P = 10,
    F = 11,
    Branch1 = 12,
    Branch2 = 13,
    Ring1 = 14,
    Ring2 = 15,
}

impl Symbol {
    pub const COUNT: usize = 16;

    pub const ALL: [Symbol; 16] = [
        Symbol::C,
        Symbol::DoubleC,
        Symbol::TripleC,
        Symbol::N,
        Symbol::DoubleN,
        Symbol::TripleN,
        Symbol::O,
        Symbol::DoubleO,
        Symbol::S,
        Symbol::DoubleS,
        Symbol::P,
        Symbol::F,
        Symbol::Branch1,
        Symbol::Branch2,
        Symbol::Ring1,
        Symbol::Ring2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Symbol {
        Symbol::ALL[i % Self::COUNT]
    }

    /// `(element, requested bond order)` for atom symbols.
    pub fn atom(self) -> Option<(Element, u8)> {
        Some(match self {
            Symbol::C => (Element::C, 1),
            Symbol::DoubleC => (Element::C, 2),
            Symbol::TripleC => (Element::C, 3),
            Symbol::N => (Element::N, 1),
            Symbol::DoubleN => (Element::N, 2),
            Symbol::TripleN => (Element::N, 3),
            Symbol::O => (Element::O, 1),
            Symbol::DoubleO => (Element::O, 2),
            Symbol::S => (Element::S, 1),
            Symbol::DoubleS => (Element::S, 2),
            Symbol::P => (Element::P, 1),
            Symbol::F => (Element::F, 1),
            _ => return None,
        })
    }

    /// The atom symbol for `element` with bond prefix `order`, if the alphabet has one.
    pub fn for_atom(element: Element, order: u8) -> Option<Symbol> {
        Symbol::ALL
            .iter()
            .copied()
            .find(|s| s.atom() == Some((element, order)))
    }

    pub fn text(self) -> &'static str {
        match self {
            Symbol::C => "[C]",
            Symbol::DoubleC => "[=C]",
            Symbol::TripleC => "[#C]",
            Symbol::N => "[N]",
            Symbol::DoubleN => "[=N]",
            Symbol::TripleN => "[#N]",
            Symbol::O => "[O]",
            Symbol::DoubleO => "[=O]",
            Symbol::S => "[S]",
            Symbol::DoubleS => "[=S]",
            Symbol::P => "[P]",
            Symbol::F => "[F]",
            Symbol::Branch1 => "[Branch1]",
            Symbol::Branch2 => "[Branch2]",
            Symbol::Ring1 => "[Ring1]",
            Symbol::Ring2 => "[Ring2]",
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Non-empty symbol string; the unit of mutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genotype(Vec<Symbol>);

impl Genotype {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self, CodecError> {
        if symbols.is_empty() {
            Err(CodecError::Empty)
        } else {
            Ok(Self(symbols))
        }
    }

    /// The single-carbon genotype `[C]`.
    pub fn methane() -> Self {
        Self(vec![Symbol::C])
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(s.text())?;
        }
        Ok(())
    }
}

impl FromStr for Genotype {
    type Err = CodecError;

    /// Parses concatenated bracketed symbols such as `[C][Branch1][C][F][C]`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut symbols = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i].is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if bytes[i] != b'[' {
                return Err(CodecError::Malformed { offset: i });
            }
            let close = text[i..]
                .find(']')
                .map(|e| i + e)
                .ok_or(CodecError::Malformed { offset: i })?;
            let token = &text[i..=close];
            let sym = Symbol::ALL
                .iter()
                .copied()
                .find(|s| s.text() == token)
                .ok_or_else(|| CodecError::UnknownSymbol {
                    token: token.to_string(),
                    offset: i,
                })?;
            symbols.push(sym);
            i = close + 1;
        }
        Genotype::new(symbols)
    }
}

impl Serialize for Genotype {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Uniform i.i.d. symbols with length uniform in `[1, max_len]`.
pub fn random_genotype<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> Genotype {
    assert!(max_len >= 1, "max_len must be at least 1");
    let len = rng.random_range(1..=max_len);
    Genotype(
        (0..len)
            .map(|_| Symbol::from_index(rng.random_range(0..Symbol::COUNT)))
            .collect(),
    )
}
