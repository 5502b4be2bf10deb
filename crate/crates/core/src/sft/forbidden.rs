use std::collections::{BTreeMap, BTreeSet};

use crate::alphabet::Alphabets;
use crate::block::{Block, Label};
use crate::error::{Error, Result};
use crate::word::{node_count, words_below, Word};

use super::{all_blocks, DEFAULT_BUDGET};

/// A labelling of a finite, prefix-closed, non-empty set of nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    entries: BTreeMap<Word, Label>,
}

impl Pattern {
    pub fn new(alphabets: &Alphabets, entries: impl IntoIterator<Item = (Word, Label)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (w, l) in entries {
            alphabets.check_word(&w)?;
            alphabets.check_label(l)?;
            if map.insert(w.clone(), l).is_some_and(|old| old != l) {
                return Err(Error::InvalidPattern(format!("node {w} labelled twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidPattern("empty domain".into()));
        }
        for w in map.keys() {
            if !w.is_empty() && !map.contains_key(&w.prefix(w.len() - 1)) {
                return Err(Error::InvalidPattern(format!("domain is not prefix-closed at {w}")));
            }
        }
        Ok(Pattern { entries: map })
    }

    pub fn from_block(b: &Block) -> Self {
        let entries = words_below(b.arity(), b.height())
            .zip(b.labels().iter().copied())
            .collect();
        Pattern { entries }
    }

    pub fn entries(&self) -> &BTreeMap<Word, Label> {
        &self.entries
    }

    /// One more than the longest word in the domain.
    pub fn height(&self) -> usize {
        self.entries.keys().map(Word::len).max().unwrap_or(0) + 1
    }

    pub fn matches_at(&self, b: &Block, at: &Word) -> bool {
        self.entries.iter().all(|(w, &l)| b.get(&at.concat(w)) == Some(l))
    }
}

/// A finite set of forbidden patterns.
#[derive(Clone, Debug)]
pub struct ForbiddenSet {
    alphabets: Alphabets,
    patterns: Vec<Pattern>,
}

impl ForbiddenSet {
    pub fn new(alphabets: Alphabets, patterns: Vec<Pattern>) -> Self {
        ForbiddenSet { alphabets, patterns }
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    /// Smallest common block height that accommodates every pattern.
    pub fn min_height(&self) -> usize {
        self.patterns.iter().map(Pattern::height).max().unwrap_or(1)
    }
}

/// A tree-shift of finite type presented by forbidden blocks of one common height.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedSft {
    alphabets: Alphabets,
    height: usize,
    forbidden: BTreeSet<Block>,
}

impl NormalizedSft {
    pub fn new(alphabets: Alphabets, height: usize, forbidden: impl IntoIterator<Item = Block>) -> Result<Self> {
        if height == 0 {
            return Err(Error::InvalidBlock("forbidden height must be at least 1".into()));
        }
        let forbidden: BTreeSet<Block> = forbidden.into_iter().collect();
        for b in &forbidden {
            alphabets.check_block(b)?;
            if b.height() != height {
                return Err(Error::InvalidBlock(format!(
                    "forbidden block of height {} in a height-{height} presentation",
                    b.height()
                )));
            }
        }
        Ok(NormalizedSft {
            alphabets,
            height,
            forbidden,
        })
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forbidden(&self) -> &BTreeSet<Block> {
        &self.forbidden
    }

    pub fn to_forbidden_set(&self) -> ForbiddenSet {
        ForbiddenSet::new(
            self.alphabets.clone(),
            self.forbidden.iter().map(Pattern::from_block).collect(),
        )
    }
}

/// Extends every pattern to all height-`p` blocks that coincide with it on its domain.
pub fn normalize(f: &ForbiddenSet, p: usize) -> Result<NormalizedSft> {
    normalize_with_budget(f, p, DEFAULT_BUDGET)
}

pub fn normalize_with_budget(f: &ForbiddenSet, p: usize, budget: u64) -> Result<NormalizedSft> {
    let needed = f.min_height();
    if p < needed || p == 0 {
        return Err(Error::HeightTooSmall { height: p, needed });
    }
    let alph = f.alphabets();
    let arity = alph.arity();
    let mut forbidden = BTreeSet::new();
    for pattern in f.patterns() {
        let free: Vec<usize> = words_below(arity, p)
            .enumerate()
            .filter(|(_, w)| !pattern.entries().contains_key(w))
            .map(|(i, _)| i)
            .collect();
        let mut template = vec![0; node_count(arity, p)];
        for (w, &l) in pattern.entries() {
            template[crate::word::bfs_index(w, arity)?] = l;
        }
        // enumerate the free nodes as a little block-shaped odometer
        for fill in all_blocks(alph.label_count(), free.len(), budget)? {
            let mut labels = template.clone();
            for (&slot, &l) in free.iter().zip(fill.iter()) {
                labels[slot] = l;
            }
            forbidden.insert(Block::from_raw(arity, p, labels));
        }
    }
    NormalizedSft::new(alph.clone(), p, forbidden)
}

/// No forbidden block occurs in any fully visible height-`p` window of `b`.
pub fn locally_admissible(b: &Block, sft: &NormalizedSft) -> Result<bool> {
    let p = sft.height();
    if b.height() < p {
        return Err(Error::TooShallow {
            need: p,
            have: b.height(),
        });
    }
    if sft.forbidden.is_empty() {
        return Ok(true);
    }
    for level in 0..=b.height() - p {
        for pos in 0..crate::word::level_width(b.arity(), level) {
            let window = Block::from_raw(b.arity(), p, b.window_labels(level, pos, p));
            if sft.forbidden.contains(&window) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn golden() -> NormalizedSft {
        let alph = Alphabets::binary();
        let forbidden = [[1, 0, 1], [1, 1, 0], [1, 1, 1]]
            .iter()
            .map(|l| Block::new(2, 2, l.to_vec()).unwrap());
        NormalizedSft::new(alph, 2, forbidden).unwrap()
    }

    #[test]
    fn pattern_validation() {
        let alph = Alphabets::binary();
        assert!(Pattern::new(&alph, [(w("0"), 1)]).is_err());
        assert!(Pattern::new(&alph, Vec::new()).is_err());
        assert!(Pattern::new(&alph, [(w("e"), 2)]).is_err());
        let p = Pattern::new(&alph, [(w("e"), 1), (w("1"), 0), (w("10"), 0)]).unwrap();
        assert_eq!(p.height(), 3);
    }

    #[test]
    fn normalize_examples() {
        let alph = Alphabets::binary();
        let empty = ForbiddenSet::new(alph.clone(), vec![]);
        assert!(normalize(&empty, 2).unwrap().forbidden().is_empty());

        let root_one = ForbiddenSet::new(alph.clone(), vec![Pattern::new(&alph, [(Word::empty(), 1)]).unwrap()]);
        let p1 = normalize(&root_one, 1).unwrap();
        assert_eq!(
            p1.forbidden().iter().cloned().collect::<Vec<_>>(),
            vec![Block::new(2, 1, vec![1]).unwrap()]
        );
        let p2 = normalize(&root_one, 2).unwrap();
        let expected: Vec<Block> = [[1, 0, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1]]
            .iter()
            .map(|l| Block::new(2, 2, l.to_vec()).unwrap())
            .collect();
        assert_eq!(p2.forbidden().iter().cloned().collect::<Vec<_>>(), expected);

        let tall = ForbiddenSet::new(
            alph.clone(),
            vec![Pattern::new(&alph, [(w("e"), 1), (w("0"), 1)]).unwrap()],
        );
        assert_eq!(normalize(&tall, 1), Err(Error::HeightTooSmall { height: 1, needed: 2 }));
    }

    #[test]
    fn local_admissibility_examples() {
        let full = NormalizedSft::new(Alphabets::binary(), 2, []).unwrap();
        assert!(locally_admissible(&Block::constant(2, 3, 1), &full).unwrap());

        let g = golden();
        assert!(locally_admissible(&Block::new(2, 2, vec![1, 0, 0]).unwrap(), &g).unwrap());
        assert!(!locally_admissible(&Block::new(2, 2, vec![1, 1, 0]).unwrap(), &g).unwrap());
        assert!(locally_admissible(&Block::constant(2, 1, 1), &g).is_err());

        let siblings = NormalizedSft::new(
            Alphabets::binary(),
            2,
            [[0, 0, 0], [1, 0, 0]]
                .iter()
                .map(|l| Block::new(2, 2, l.to_vec()).unwrap()),
        )
        .unwrap();
        let b = Block::constant(2, 3, 1)
            .with_label(&w("00"), 0)
            .unwrap()
            .with_label(&w("01"), 0)
            .unwrap();
        assert!(!locally_admissible(&b, &siblings).unwrap());
    }
}
