use std::fmt;

use crate::block::{Block, Label};
use crate::error::{Error, Result};
use crate::word::{checked_node_count, Letter, Word};

/// The direction alphabet (given by its size) and the label alphabet.
///
/// Labels are stored as small integers `0..labels.len()`; the symbols are only
/// used for display and parsing.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabets {
    arity: usize,
    labels: Vec<String>,
}

impl Alphabets {
    pub fn new<S: Into<String>>(arity: usize, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if arity == 0 {
            return Err(Error::InvalidAlphabet("arity must be at least 1".into()));
        }
        if arity > usize::from(Letter::MAX) + 1 {
            return Err(Error::InvalidAlphabet(format!("arity {arity} too large")));
        }
        if labels.is_empty() {
            return Err(Error::InvalidAlphabet("label alphabet is empty".into()));
        }
        if labels.len() > usize::from(Label::MAX) + 1 {
            return Err(Error::InvalidAlphabet(format!(
                "{} labels exceed the supported 256",
                labels.len()
            )));
        }
        for (i, sym) in labels.iter().enumerate() {
            if sym.is_empty() || sym.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::InvalidAlphabet(format!("bad label symbol `{sym}`")));
            }
            if labels[..i].contains(sym) {
                return Err(Error::InvalidAlphabet(format!("duplicate label `{sym}`")));
            }
        }
        Ok(Alphabets { arity, labels })
    }

    /// Binary trees labelled by `0` and `1`.
    pub fn binary() -> Self {
        Alphabets::new(2, ["0", "1"]).unwrap()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.labels
    }

    pub fn symbol(&self, label: Label) -> &str {
        &self.labels[usize::from(label)]
    }

    pub fn label(&self, symbol: &str) -> Option<Label> {
        self.labels.iter().position(|s| s == symbol).map(|i| i as Label)
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        w.check(self.arity)
    }

    pub fn check_label(&self, label: Label) -> Result<()> {
        if usize::from(label) < self.labels.len() {
            Ok(())
        } else {
            Err(Error::LabelOutOfRange {
                label,
                count: self.labels.len(),
            })
        }
    }

    pub fn check_block(&self, b: &Block) -> Result<()> {
        if b.arity() != self.arity {
            return Err(Error::ArityMismatch(b.arity(), self.arity));
        }
        b.labels().iter().try_for_each(|&l| self.check_label(l))
    }

    /// The single-line text form: symbols in canonical node order.
    pub fn format_block(&self, b: &Block) -> String {
        let parts: Vec<&str> = b.labels().iter().map(|&l| self.symbol(l)).collect();
        parts.join(" ")
    }

    /// Parses the text form; the height is inferred from the number of labels.
    pub fn parse_block(&self, text: &str) -> Result<Block> {
        let labels = text
            .split_whitespace()
            .map(|sym| {
                self.label(sym)
                    .ok_or_else(|| Error::InvalidBlock(format!("unknown label `{sym}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let height = (1..)
            .map_while(|h| checked_node_count(self.arity, h).map(|n| (h, n)))
            .take_while(|&(_, n)| n <= labels.len())
            .find(|&(_, n)| n == labels.len())
            .map(|(h, _)| h)
            .ok_or_else(|| {
                Error::InvalidBlock(format!(
                    "{} labels is not a complete block for arity {}",
                    labels.len(),
                    self.arity
                ))
            })?;
        Block::new(self.arity, height, labels)
    }

    /// `arity=<k> labels=<l0,l1,...>`
    pub fn header(&self) -> String {
        format!("arity={} labels={}", self.arity, self.labels.join(","))
    }
}

impl fmt::Debug for Alphabets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabets({})", self.header())
    }
}
