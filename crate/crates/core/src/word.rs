//! Words over the direction alphabet and the canonical node numbering.
//!
//! Nodes of the full `arity`-ary tree are words. The canonical order sorts
//! them by length first and lexicographically within a length, so the nodes of
//! `Σ^{<h}` are numbered `0..N(h)` with the root at index 0.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A direction `0..arity`.
pub type Letter = u8;

/// Number of nodes in `Σ^{<height}`.
///
/// Panics on overflow; use [`checked_node_count`] for untrusted heights.
pub fn node_count(arity: usize, height: usize) -> usize {
    checked_node_count(arity, height).expect("node count overflows usize")
}

pub fn checked_node_count(arity: usize, height: usize) -> Option<usize> {
    if arity == 1 {
        return Some(height);
    }
    let pow = arity.checked_pow(u32::try_from(height).ok()?)?;
    Some((pow - 1) / (arity - 1))
}

/// Number of nodes on level `level`.
pub(crate) fn level_width(arity: usize, level: usize) -> usize {
    arity.pow(level as u32)
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, letter: Letter) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// The prefix of length `len` (the whole word if it is shorter).
    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn suffix_from(&self, start: usize) -> Word {
        Word(self.0[start.min(self.0.len())..].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn check(&self, arity: usize) -> Result<()> {
        match self.0.iter().find(|&&l| usize::from(l) >= arity) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter, arity }),
            None => Ok(()),
        }
    }

    /// Position of the word among the words of the same length.
    pub(crate) fn position(&self, arity: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * arity + usize::from(l))
    }

    pub fn from_bfs_index(mut index: usize, arity: usize) -> Word {
        let mut len = 0;
        loop {
            let width = level_width(arity, len);
            if index < width {
                break;
            }
            index -= width;
            len += 1;
        }
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % arity) as Letter;
            index /= arity;
        }
        Word(letters)
    }

    pub fn from_position(position: usize, len: usize, arity: usize) -> Word {
        let mut letters = vec![0; len];
        let mut rest = position;
        for slot in letters.iter_mut().rev() {
            *slot = (rest % arity) as Letter;
            rest /= arity;
        }
        Word(letters)
    }
}

/// Canonical index of `w` in `Σ^{<h}` for any `h > |w|`.
pub fn bfs_index(w: &Word, arity: usize) -> Result<usize> {
    w.check(arity)?;
    Ok(node_count(arity, w.len()) + w.position(arity))
}

/// All words of `Σ^{<height}` in canonical order.
pub fn words_below(arity: usize, height: usize) -> impl Iterator<Item = Word> {
    (0..node_count(arity, height)).map(move |i| Word::from_bfs_index(i, arity))
}

pub fn words_of_length(arity: usize, len: usize) -> impl Iterator<Item = Word> {
    (0..level_width(arity, len)).map(move |p| Word::from_position(p, len, arity))
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        if self.0.iter().all(|&l| l < 10) {
            for l in &self.0 {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
            f.write_str(&parts.join("."))
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = Error;

    /// `e` (or the empty string) is the empty word; otherwise either a run
    /// of decimal digits or dot-separated letters.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::empty());
        }
        let bad = || Error::InvalidBlock(format!("malformed word `{s}`"));
        if s.contains('.') {
            s.split('.')
                .map(|p| p.parse::<Letter>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(Word)
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as Letter).ok_or_else(bad))
                .collect::<Result<Vec<_>>>()
                .map(Word)
        }
    }
}

impl From<&[Letter]> for Word {
    fn from(letters: &[Letter]) -> Self {
        Word(letters.to_vec())
    }
}
