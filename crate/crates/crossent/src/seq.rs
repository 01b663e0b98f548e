//! Alphabets, symbol sequences, and their text representation.
//!
//! Symbols are dense indices `0..size`; glyphs, when declared, are
//! presentation-only labels used by the text format. A sequence file holds one
//! sequence: the glyph string when glyphs exist, otherwise comma-separated
//! indices. A trailing newline is ignored on read and emitted on write.

use crate::error::{Error, Result};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

/// A finite alphabet of `size` symbols, optionally labelled by distinct glyphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    glyphs: Option<Vec<char>>,
}

impl Alphabet {
    /// Alphabet of `size` unlabelled symbols (text format: comma-separated indices).
    pub fn indexed(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("alphabet size must be >= 1".into()));
        }
        Ok(Alphabet { size, glyphs: None })
    }

    /// Alphabet labelled by the characters of `glyphs`, which must be pairwise distinct.
    pub fn with_glyphs(glyphs: &str) -> Result<Self> {
        let chars: Vec<char> = glyphs.chars().collect();
        if chars.is_empty() {
            return Err(Error::Config("alphabet needs at least one glyph".into()));
        }
        for (i, c) in chars.iter().enumerate() {
            if chars[..i].contains(c) {
                return Err(Error::Config(format!("duplicate glyph {c:?}")));
            }
        }
        Ok(Alphabet {
            size: chars.len(),
            glyphs: Some(chars),
        })
    }

    /// The binary alphabet with glyphs `0` and `1`.
    pub fn binary() -> Self {
        Alphabet::with_glyphs("01").unwrap()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn glyphs(&self) -> Option<&[char]> {
        self.glyphs.as_deref()
    }

    /// Symbol compatibility is decided by size alone; glyphs are labels.
    pub fn compatible(&self, other: &Alphabet) -> bool {
        self.size == other.size
    }

    pub fn symbol(&self, index: usize) -> Result<Symbol> {
        if index >= self.size {
            return Err(Error::Range(format!(
                "symbol index {index} out of range for alphabet of size {}",
                self.size
            )));
        }
        Ok(Symbol(index as u8))
    }

    fn glyph_index(&self, c: char) -> Option<usize> {
        self.glyphs
            .as_ref()
            .and_then(|g| g.iter().position(|&x| x == c))
    }
}

/// A single letter of an alphabet, stored as its dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub u8);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A finite string of symbols over a fixed alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    alphabet: Arc<Alphabet>,
    data: Vec<Symbol>,
}

impl Sequence {
    pub fn new(alphabet: Alphabet, data: Vec<Symbol>) -> Result<Self> {
        let size = alphabet.size();
        if let Some(sym) = data.iter().find(|s| s.index() >= size) {
            return Err(Error::Range(format!(
                "symbol {} invalid for alphabet of size {size}",
                sym.index()
            )));
        }
        Ok(Sequence {
            alphabet: Arc::new(alphabet),
            data,
        })
    }

    /// Builds a sequence from raw indices, validating each against the alphabet.
    pub fn from_indices(alphabet: Alphabet, indices: &[usize]) -> Result<Self> {
        let syms = indices
            .iter()
            .map(|&i| alphabet.symbol(i))
            .collect::<Result<Vec<_>>>()?;
        Sequence::new(alphabet, syms)
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Sequence {
            alphabet: Arc::new(alphabet),
            data: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.data
    }

    pub fn get(&self, i: usize) -> Option<Symbol> {
        self.data.get(i).copied()
    }

    /// Applies the shift map `j` times: drops the first `j` symbols.
    pub fn shift(&self, j: usize) -> Result<Sequence> {
        if j > self.len() {
            return Err(Error::Range(format!(
                "shift by {j} exceeds sequence length {}",
                self.len()
            )));
        }
        Ok(Sequence {
            alphabet: Arc::clone(&self.alphabet),
            data: self.data[j..].to_vec(),
        })
    }

    /// The contiguous subword `[start, end)` as a fresh sequence.
    pub fn slice(&self, start: usize, end: usize) -> Result<Sequence> {
        if start > end || end > self.len() {
            return Err(Error::Range(format!(
                "slice {start}..{end} out of range for length {}",
                self.len()
            )));
        }
        Ok(Sequence {
            alphabet: Arc::clone(&self.alphabet),
            data: self.data[start..end].to_vec(),
        })
    }

    /// Parses the text form: glyph string when the alphabet has glyphs,
    /// otherwise comma-separated indices. One trailing newline is ignored.
    pub fn from_text(text: &str, alphabet: &Alphabet) -> Result<Sequence> {
        let text = text.strip_suffix('\n').unwrap_or(text);
        let text = text.strip_suffix('\r').unwrap_or(text);
        let mut data = Vec::new();
        if alphabet.glyphs().is_some() {
            for (i, c) in text.chars().enumerate() {
                match alphabet.glyph_index(c) {
                    Some(idx) => data.push(Symbol(idx as u8)),
                    None => {
                        return Err(Error::Parse {
                            position: i + 1,
                            message: format!("glyph {c:?} not in alphabet"),
                        })
                    }
                }
            }
        } else if !text.is_empty() {
            for (i, tok) in text.split(',').enumerate() {
                let idx: usize = tok.trim().parse().map_err(|_| Error::Parse {
                    position: i + 1,
                    message: format!("invalid symbol index {tok:?}"),
                })?;
                if idx >= alphabet.size() {
                    return Err(Error::Parse {
                        position: i + 1,
                        message: format!(
                            "index {idx} out of range for alphabet of size {}",
                            alphabet.size()
                        ),
                    });
                }
                data.push(Symbol(idx as u8));
            }
        }
        Ok(Sequence {
            alphabet: Arc::new(alphabet.clone()),
            data,
        })
    }

    /// The text form inverse to [`Sequence::from_text`], without trailing newline.
    pub fn to_text(&self) -> String {
        match self.alphabet.glyphs() {
            Some(glyphs) => self.data.iter().map(|s| glyphs[s.index()]).collect(),
            None => self
                .data
                .iter()
                .map(|s| s.index().to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Reads one sequence from a text file.
pub fn read_sequence(path: &Path, alphabet: &Alphabet) -> Result<Sequence> {
    let text = fs::read_to_string(path)?;
    Sequence::from_text(&text, alphabet)
}

/// Writes one sequence to a text file, with a trailing newline.
pub fn write_sequence(seq: &Sequence, path: &Path) -> Result<()> {
    let mut text = seq.to_text();
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin_seq(text: &str) -> Sequence {
        Sequence::from_text(text, &Alphabet::binary()).unwrap()
    }

    #[test]
    fn shift_identity_and_basic() {
        let s = bin_seq("0110");
        assert_eq!(s.shift(0).unwrap(), s);
        assert_eq!(s.shift(2).unwrap().to_text(), "10");
        assert_eq!(s.shift(4).unwrap().to_text(), "");
        assert!(s.shift(5).is_err());
    }

    #[test]
    fn shift_composes() {
        let s = bin_seq("0110101");
        for a in 0..=s.len() {
            for b in 0..=(s.len() - a) {
                let two_step = s.shift(a).unwrap().shift(b).unwrap();
                assert_eq!(two_step, s.shift(a + b).unwrap());
            }
        }
    }

    #[test]
    fn glyph_text_round_trip() {
        let a = Alphabet::binary();
        let s = Sequence::from_text("011", &a).unwrap();
        assert_eq!(s.symbols(), &[Symbol(0), Symbol(1), Symbol(1)]);
        assert_eq!(s.to_text(), "011");
    }

    #[test]
    fn out_of_alphabet_glyph_names_position() {
        let a = Alphabet::binary();
        match Sequence::from_text("2", &a) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Sequence::from_text("012", &a) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn index_format() {
        let a = Alphabet::indexed(3).unwrap();
        let s = Sequence::from_text("0,1,2", &a).unwrap();
        assert_eq!(s.symbols(), &[Symbol(0), Symbol(1), Symbol(2)]);
        assert_eq!(s.to_text(), "0,1,2");
        assert!(Sequence::from_text("0,3", &a).is_err());
        assert_eq!(Sequence::from_text("", &a).unwrap().len(), 0);
    }

    #[test]
    fn trailing_newline_ignored() {
        let a = Alphabet::binary();
        assert_eq!(Sequence::from_text("01\n", &a).unwrap().to_text(), "01");
        assert_eq!(Sequence::from_text("01\r\n", &a).unwrap().to_text(), "01");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.txt");
        let a = Alphabet::with_glyphs("012").unwrap();
        let s = Sequence::from_text("0120021", &a).unwrap();
        write_sequence(&s, &path).unwrap();
        let back = read_sequence(&path, &a).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn duplicate_glyphs_rejected() {
        assert!(Alphabet::with_glyphs("aba").is_err());
        assert!(Alphabet::indexed(0).is_err());
    }
}
