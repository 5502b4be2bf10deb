//! Blocks (complete labellings of `Σ^{<h}`), truncated trees, the metric and
//! the shift maps.

use std::fmt;

use crate::error::{Error, Result};
use crate::word::{level_width, node_count, Letter, Word};

pub type Label = u8;

/// A labelling of every node of `Σ^{<height}`, stored in canonical node order.
///
/// The derived ordering compares labels lexicographically, which is the
/// canonical block order for blocks of equal arity and height.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    arity: usize,
    height: usize,
    labels: Vec<Label>,
}

impl Block {
    pub fn new(arity: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidBlock("arity must be at least 1".into()));
        }
        if height == 0 {
            return Err(Error::InvalidBlock("height must be at least 1".into()));
        }
        let expected = crate::word::checked_node_count(arity, height)
            .ok_or_else(|| Error::InvalidBlock(format!("height {height} too large")))?;
        if labels.len() != expected {
            return Err(Error::InvalidBlock(format!(
                "height {height} needs {expected} labels, got {}",
                labels.len()
            )));
        }
        Ok(Block { arity, height, labels })
    }

    pub(crate) fn from_raw(arity: usize, height: usize, labels: Vec<Label>) -> Self {
        debug_assert_eq!(labels.len(), node_count(arity, height));
        Block { arity, height, labels }
    }

    pub fn constant(arity: usize, height: usize, label: Label) -> Self {
        Block::from_raw(arity, height, vec![label; node_count(arity, height)])
    }

    /// Builds a block by evaluating `f` on every node in canonical order.
    pub fn from_fn(arity: usize, height: usize, mut f: impl FnMut(&Word) -> Label) -> Self {
        let labels = crate::word::words_below(arity, height).map(|w| f(&w)).collect();
        Block::from_raw(arity, height, labels)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn root(&self) -> Label {
        self.labels[0]
    }

    pub fn get(&self, w: &Word) -> Option<Label> {
        if w.len() >= self.height || w.check(self.arity).is_err() {
            return None;
        }
        Some(self.labels[node_count(self.arity, w.len()) + w.position(self.arity)])
    }

    pub fn level(&self, k: usize) -> &[Label] {
        let start = node_count(self.arity, k);
        &self.labels[start..start + level_width(self.arity, k)]
    }

    /// Copy with the label at `w` replaced.
    pub fn with_label(&self, w: &Word, label: Label) -> Result<Block> {
        w.check(self.arity)?;
        if w.len() >= self.height {
            return Err(Error::WindowOutOfRange {
                offset: w.len(),
                height: 1,
                block_height: self.height,
            });
        }
        let mut labels = self.labels.clone();
        labels[node_count(self.arity, w.len()) + w.position(self.arity)] = label;
        Ok(Block::from_raw(self.arity, self.height, labels))
    }

    /// The sub-block `c` of height `k` with `c_u = b_{at·u}`.
    pub fn restrict(&self, at: &Word, k: usize) -> Result<Block> {
        at.check(self.arity)?;
        if k == 0 {
            return Err(Error::InvalidBlock("window height must be at least 1".into()));
        }
        if at.len() + k > self.height {
            return Err(Error::WindowOutOfRange {
                offset: at.len(),
                height: k,
                block_height: self.height,
            });
        }
        Ok(Block::from_raw(
            self.arity,
            k,
            self.window_labels(at.len(), at.position(self.arity), k),
        ))
    }

    /// Labels of the height-`k` window rooted at the node with the given level
    /// and position. Level `j` of the window is a contiguous run of level
    /// `level + j` of the block. `k` may be zero.
    pub(crate) fn window_labels(&self, level: usize, position: usize, k: usize) -> Vec<Label> {
        debug_assert!(level + k <= self.height);
        let mut out = Vec::with_capacity(node_count(self.arity, k));
        let mut width = 1;
        for j in 0..k {
            let start = node_count(self.arity, level + j) + position * width;
            out.extend_from_slice(&self.labels[start..start + width]);
            width *= self.arity;
        }
        out
    }

    /// The prefix of the block of height `k` (`k ≤ height`).
    pub(crate) fn top(&self, k: usize) -> Block {
        Block::from_raw(self.arity, k, self.labels[..node_count(self.arity, k)].to_vec())
    }

    /// The block one level taller with `level` appended as the bottom row.
    pub(crate) fn with_level(&self, level: &[Label]) -> Block {
        debug_assert_eq!(level.len(), level_width(self.arity, self.height));
        let mut labels = Vec::with_capacity(self.labels.len() + level.len());
        labels.extend_from_slice(&self.labels);
        labels.extend_from_slice(level);
        Block::from_raw(self.arity, self.height + 1, labels)
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block(h={}; ", self.height)?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// Radius `2^{-level}` of a metric ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Resolution(pub usize);

impl Resolution {
    pub fn level(self) -> usize {
        self.0
    }

    pub fn radius(self) -> f64 {
        (-(self.0 as f64)).exp2()
    }
}

/// Outcome of comparing two truncations of equal depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceLevel {
    /// First disagreement on this level; the distance is `2^{-n-1}`.
    Differ(Resolution),
    /// All visible levels agree, so `d < 2^{-depth}` and nothing more is known.
    Indistinguishable,
}

impl DistanceLevel {
    /// True iff the first `n` levels are known to differ.
    pub fn differs_below(self, n: usize) -> bool {
        matches!(self, DistanceLevel::Differ(Resolution(k)) if k < n)
    }
}

/// The first `depth` levels of an otherwise unknown infinite tree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncatedTree(Block);

impl TruncatedTree {
    pub fn new(body: Block) -> Self {
        TruncatedTree(body)
    }

    pub fn depth(&self) -> usize {
        self.0.height
    }

    pub fn arity(&self) -> usize {
        self.0.arity
    }

    pub fn body(&self) -> &Block {
        &self.0
    }

    pub fn into_body(self) -> Block {
        self.0
    }

    pub fn get(&self, w: &Word) -> Option<Label> {
        self.0.get(w)
    }

    pub fn restrict(&self, at: &Word, k: usize) -> Result<Block> {
        self.0.restrict(at, k)
    }

    /// The truncation kept to its first `depth` levels.
    pub fn truncate(&self, depth: usize) -> Result<TruncatedTree> {
        self.0.restrict(&Word::empty(), depth).map(TruncatedTree)
    }

    /// `σ^i`, losing one level of depth.
    pub fn shift(&self, i: Letter) -> Result<TruncatedTree> {
        if usize::from(i) >= self.0.arity {
            return Err(Error::LetterOutOfRange {
                letter: i,
                arity: self.0.arity,
            });
        }
        if self.depth() < 2 {
            return Err(Error::DepthExhausted(self.depth()));
        }
        self.0
            .restrict(&Word::new(vec![i]), self.depth() - 1)
            .map(TruncatedTree)
    }

    /// `σ^w = σ^{w_{n-1}} ∘ … ∘ σ^{w_0}`: the first letter is applied first.
    pub fn shift_word(&self, w: &Word) -> Result<TruncatedTree> {
        w.letters().iter().try_fold(self.clone(), |t, &i| t.shift(i))
    }

    pub fn distance_level(&self, other: &TruncatedTree) -> Result<DistanceLevel> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch(self.arity(), other.arity()));
        }
        if self.depth() != other.depth() {
            return Err(Error::DepthMismatch(self.depth(), other.depth()));
        }
        Ok((0..self.depth())
            .find(|&k| self.0.level(k) != other.0.level(k))
            .map_or(DistanceLevel::Indistinguishable, |k| {
                DistanceLevel::Differ(Resolution(k))
            }))
    }

    /// Whether the tree lies in the cylinder `[b]` as far as the truncation shows.
    pub fn cylinder_match(&self, b: &Block) -> Result<bool> {
        if b.arity != self.arity() {
            return Err(Error::ArityMismatch(b.arity, self.arity()));
        }
        if self.depth() < b.height {
            return Err(Error::TooShallow {
                need: b.height,
                have: self.depth(),
            });
        }
        Ok(self.0.labels.starts_with(&b.labels))
    }
}

impl From<Block> for TruncatedTree {
    fn from(b: Block) -> Self {
        TruncatedTree(b)
    }
}

impl fmt::Debug for TruncatedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tree{:?}", self.0)
    }
}
