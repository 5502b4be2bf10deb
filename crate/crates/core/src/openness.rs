//! Openness of the shift maps `σ^i`.
//!
//! For a shift of finite type with forbidden height `p` and a block `b` of
//! height `m > p`, the image `σ^i([b])` is the whole cylinder of
//! `restrict(b, i, m - 1)`: a member `r ∈ [b]` and a member `s` starting with
//! that prefix glue into `q` with `q_{iw} = s_w` and `q_w = r_w` elsewhere, and
//! every height-`p` window of `q` is a window of `r` or of `s`.

use std::collections::HashMap;
use std::fmt;

use crate::block::{Block, TruncatedTree};
use crate::error::{Error, Result};
use crate::families::{OneZeroRow, Presentation, ShiftOracle, ShiftSpec};
use crate::sft::{check_budget, SftEngine, DEFAULT_BUDGET};
use crate::word::{Letter, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    OpenCertified,
    NotOpenWitness,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::OpenCertified => "open-certified",
            Verdict::NotOpenWitness => "not-open-witness",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A member `preimage ∈ [cylinder]` with `σ^i(preimage)` starting with `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreimageWitness {
    pub cylinder: Block,
    pub target: Block,
    pub preimage: TruncatedTree,
}

/// `image = σ^i(preimage)` lies in `σ^i([b])`; `outsider` agrees with it on
/// all but its last level and has no preimage in `[b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub preimage: TruncatedTree,
    pub image: Block,
    pub outsider: Block,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub verdict: Verdict,
    pub direction: Letter,
    pub block: Block,
    pub probe_depth: usize,
    /// The image prefix `restrict(b, i, m - 1)`, when `b` was not split into
    /// taller cylinders first.
    pub target: Option<Block>,
    /// Height of the cylinders the witnesses live in.
    pub cylinder_height: usize,
    /// Heights `k` of the covered targets.
    pub min_depth: usize,
    pub max_depth: usize,
    pub witness: Option<TruncatedTree>,
    pub witnesses: Vec<PreimageWitness>,
    pub counterexample: Option<Counterexample>,
}

fn check_direction(arity: usize, i: Letter) -> Result<()> {
    if usize::from(i) >= arity {
        Err(Error::LetterOutOfRange { letter: i, arity })
    } else {
        Ok(())
    }
}

fn side(i: Letter) -> Word {
    Word::new(vec![i])
}

/// `restrict(b, i, m - 1)`: every point of `σ^i([b])` starts with it.
pub fn image_prefix(shift: &ShiftSpec, i: Letter, b: &Block) -> Result<Block> {
    check_direction(shift.alphabets().arity(), i)?;
    if b.height() < 2 {
        return Err(Error::Precondition(
            "image prefix needs a block of height at least 2".into(),
        ));
    }
    if !shift.in_language(b) {
        return Err(Error::NotInLanguage);
    }
    b.restrict(&side(i), b.height() - 1)
}

/// Glues `s` below direction `i` of `r`. The result has depth
/// `min(r.depth, s.depth + 1)`, lies in `[b]` and is certified.
pub fn sft_preimage_witness(
    e: &SftEngine,
    i: Letter,
    b: &Block,
    r: &TruncatedTree,
    s: &TruncatedTree,
) -> Result<TruncatedTree> {
    let arity = e.alphabets().arity();
    check_direction(arity, i)?;
    let m = b.height();
    if m <= e.height() {
        return Err(Error::Precondition(format!(
            "block height {m} must exceed the forbidden height {}",
            e.height()
        )));
    }
    if !r.cylinder_match(b)? || !e.certify_membership(r)?.is_certified() {
        return Err(Error::Precondition("r must be a certified member of [b]".into()));
    }
    if s.depth() < m - 1 || !e.certify_membership(s)?.is_certified() {
        return Err(Error::Precondition(
            "s must be a certified member of depth at least m - 1".into(),
        ));
    }
    if s.restrict(&Word::empty(), m - 1)? != b.restrict(&side(i), m - 1)? {
        return Err(Error::Precondition(
            "s does not start with restrict(b, i, m - 1)".into(),
        ));
    }
    let depth = r.depth().min(s.depth() + 1);
    let q = glue(arity, depth, i, s, |x| r.get(x));
    if !e.certify_membership(&q)?.is_certified() {
        return Err(Error::CertificationFailed(format!(
            "glued tree {:?} is not a member",
            e.alphabets().format_block(q.body())
        )));
    }
    Ok(q)
}

fn glue(arity: usize, depth: usize, i: Letter, s: &TruncatedTree, rest: impl Fn(&Word) -> Option<u8>) -> TruncatedTree {
    TruncatedTree::new(Block::from_fn(arity, depth, |x| {
        if x.first() == Some(i) {
            s.get(&x.suffix_from(1))
        } else {
            rest(x)
        }
        .expect("node within both trees")
    }))
}

/// For the one-zero-per-row shift: `r_{iw} = s_w`, `r_w = b_w` for the other
/// nodes of height below `n`, and `r_w = 1` below that.
pub fn one_zero_row_witness(i: Letter, b: &Block, s: &TruncatedTree, t_tilde: &TruncatedTree) -> Result<TruncatedTree> {
    let arity = b.arity();
    check_direction(arity, i)?;
    let oracle = OneZeroRow::new(arity);
    let n = b.height();
    if !oracle.in_language(b) {
        return Err(Error::NotInLanguage);
    }
    if !t_tilde.cylinder_match(b)? || !oracle.certify(t_tilde)?.is_certified() {
        return Err(Error::Precondition("t̃ must be a member of [b]".into()));
    }
    if s.depth() + 1 < n || !oracle.certify(s)?.is_certified() {
        return Err(Error::Precondition("s must be a member of depth at least n - 1".into()));
    }
    if n >= 2 && s.restrict(&Word::empty(), n - 1)? != t_tilde.restrict(&side(i), n - 1)? {
        return Err(Error::Precondition("s does not agree with the i-subtree of t̃".into()));
    }
    let r = glue(arity, s.depth() + 1, i, s, |x| Some(b.get(x).unwrap_or(1)));
    if !oracle.certify(&r)?.is_certified() {
        return Err(Error::CertificationFailed(format!("{:?} is not a member", r)));
    }
    Ok(r)
}

/// Blocks of `B_k(X)` starting with `c` (all of `B_k(X)` when `c` is `None`).
fn extensions_of(shift: &ShiftSpec, c: Option<&Block>, k: usize) -> Result<Vec<Block>> {
    match (shift.presentation(), c) {
        (Presentation::FiniteType(e), Some(c)) => e.extensions(c, k),
        (_, None) => shift.block_language(k),
        (Presentation::Oracle(o), Some(c)) => {
            check_budget(o.block_count(k)?, DEFAULT_BUDGET)?;
            let mut out = Vec::new();
            o.for_each_block(k, &mut |d| {
                if d.top(c.height()) == *c {
                    out.push(d);
                }
            })?;
            Ok(out)
        }
    }
}

enum Method {
    Glue,
    Rule,
    Search,
}

fn method(shift: &ShiftSpec) -> Method {
    match shift.presentation() {
        Presentation::FiniteType(_) => Method::Glue,
        Presentation::Oracle(o) if o.has_preimage_witness() => Method::Rule,
        Presentation::Oracle(_) => Method::Search,
    }
}

/// Cylinder height and target heights used for `b`.
fn plan(shift: &ShiftSpec, b: &Block, probe_depth: usize) -> (usize, usize, usize) {
    let m = b.height();
    let cylinder = match method(shift) {
        Method::Glue => m.max(shift.height().unwrap_or(1) + 1).max(2),
        Method::Rule => m.max(2),
        Method::Search => m,
    };
    let min_depth = (cylinder - 1).max(1);
    let max_depth = match method(shift) {
        Method::Search => probe_depth.max(m).max(2),
        _ => probe_depth.max(min_depth),
    };
    (cylinder, min_depth, max_depth)
}

fn prefix_of(cylinder: &Block, i: Letter) -> Result<Option<Block>> {
    if cylinder.height() < 2 {
        Ok(None)
    } else {
        cylinder.restrict(&side(i), cylinder.height() - 1).map(Some)
    }
}

/// Bounded three-valued openness test for `σ^i` on `[b]`.
///
/// `OpenCertified`: `b` splits into cylinders `[b']` and, for every height `k`
/// up to the probe depth, every block of `B_k(X)` starting with
/// `restrict(b', i, ·)` has a preimage witness in `[b']`. Shifts of finite type
/// and oracles with a witness rule use the constructions; other oracles are
/// searched exhaustively through `B_{P+1}(X)`.
///
/// `NotOpenWitness`: a point of `σ^i([b])` whose neighbourhood of depth `P - 1`
/// contains a height-`P` block with no preimage in `[b]`.
pub fn bounded_openness_check(shift: &ShiftSpec, i: Letter, b: &Block, probe_depth: usize) -> Result<WitnessReport> {
    check_direction(shift.alphabets().arity(), i)?;
    shift.alphabets().check_block(b)?;
    if probe_depth == 0 {
        return Err(Error::Precondition("probe depth must be at least 1".into()));
    }
    if !shift.in_language(b) {
        return Err(Error::NotInLanguage);
    }
    let (cylinder_height, min_depth, max_depth) = plan(shift, b, probe_depth);
    let mut report = WitnessReport {
        verdict: Verdict::OpenCertified,
        direction: i,
        block: b.clone(),
        probe_depth,
        target: if cylinder_height == b.height() {
            prefix_of(b, i)?
        } else {
            None
        },
        cylinder_height,
        min_depth,
        max_depth,
        witness: None,
        witnesses: Vec::new(),
        counterexample: None,
    };
    match method(shift) {
        Method::Glue | Method::Rule => {
            for cyl in extensions_of(shift, Some(b), cylinder_height)? {
                let c = prefix_of(&cyl, i)?;
                for k in min_depth..=max_depth {
                    for s in extensions_of(shift, c.as_ref(), k)? {
                        let preimage = constructed_witness(shift, i, &cyl, &s)?;
                        report.witnesses.push(PreimageWitness {
                            cylinder: cyl.clone(),
                            target: s,
                            preimage,
                        });
                    }
                }
            }
        }
        Method::Search => search(shift, i, b, &mut report)?,
    }
    report.witness = match &report.counterexample {
        Some(c) => Some(c.preimage.clone()),
        None => report.witnesses.last().map(|w| w.preimage.clone()),
    };
    Ok(report)
}

fn constructed_witness(shift: &ShiftSpec, i: Letter, cyl: &Block, s: &Block) -> Result<TruncatedTree> {
    let k = s.height();
    let preimage = match shift.presentation() {
        Presentation::FiniteType(e) => {
            let s_tree = TruncatedTree::new(e.canonical_extension(s, k + 1)?);
            let r = TruncatedTree::new(e.canonical_extension(cyl, k + 2)?);
            sft_preimage_witness(e, i, cyl, &r, &s_tree)?
        }
        Presentation::Oracle(o) => o
            .preimage_witness(i, cyl, &TruncatedTree::new(s.clone()))
            .ok_or_else(|| Error::Precondition(format!("{} has no witness rule", o.name())))??,
    };
    if !shift.certify(&preimage)?.is_certified()
        || !preimage.cylinder_match(cyl)?
        || preimage.restrict(&side(i), k)? != *s
    {
        return Err(Error::CertificationFailed(format!(
            "witness for {} does not check out",
            shift.alphabets().format_block(s)
        )));
    }
    Ok(preimage)
}

fn search(shift: &ShiftSpec, i: Letter, b: &Block, report: &mut WitnessReport) -> Result<()> {
    let depth = report.max_depth;
    let preimages: Vec<Block> = extensions_of(shift, Some(b), depth + 1)?;
    // images at every height, each with its first preimage
    let mut images: Vec<HashMap<Block, usize>> = vec![HashMap::new(); depth + 1];
    for (idx, r) in preimages.iter().enumerate() {
        for (k, map) in images.iter_mut().enumerate().skip(report.min_depth) {
            map.entry(r.restrict(&side(i), k)?).or_insert(idx);
        }
    }
    let c = prefix_of(b, i)?;
    let mut covered = true;
    for (k, image) in images.iter().enumerate().skip(report.min_depth) {
        for s in extensions_of(shift, c.as_ref(), k)? {
            match image.get(&s) {
                Some(&idx) => report.witnesses.push(PreimageWitness {
                    cylinder: b.clone(),
                    target: s,
                    preimage: TruncatedTree::new(preimages[idx].clone()),
                }),
                None => covered = false,
            }
        }
    }
    if covered {
        return Ok(());
    }
    report.witnesses.clear();
    report.verdict = Verdict::Inconclusive;
    let top = &images[depth];
    let language = extensions_of(shift, c.as_ref(), depth)?;
    let mut ordered: Vec<(&Block, &usize)> = top.iter().collect();
    ordered.sort();
    for (image, &idx) in ordered {
        let outsider = language
            .iter()
            .find(|s| !top.contains_key(*s) && s.top(depth - 1) == image.top(depth - 1));
        if let Some(outsider) = outsider {
            report.verdict = Verdict::NotOpenWitness;
            report.counterexample = Some(Counterexample {
                preimage: TruncatedTree::new(preimages[idx].clone()),
                image: image.clone(),
                outsider: outsider.clone(),
            });
            return Ok(());
        }
    }
    Ok(())
}

impl WitnessReport {
    /// Re-verifies the shipped witnesses against the shift.
    pub fn recheck(&self, shift: &ShiftSpec) -> Result<bool> {
        let i = self.direction;
        match self.verdict {
            Verdict::Inconclusive => Ok(true),
            Verdict::OpenCertified => {
                for w in &self.witnesses {
                    let k = w.target.height();
                    if w.cylinder.top(self.block.height()) != self.block
                        || !shift.certify(&w.preimage)?.is_certified()
                        || !w.preimage.cylinder_match(&w.cylinder)?
                        || w.preimage.depth() <= k
                        || w.preimage.restrict(&side(i), k)? != w.target
                    {
                        return Ok(false);
                    }
                }
                // every target the check promises is covered
                let mut expected = 0usize;
                for cyl in extensions_of(shift, Some(&self.block), self.cylinder_height)? {
                    let c = prefix_of(&cyl, i)?;
                    for k in self.min_depth..=self.max_depth {
                        for s in extensions_of(shift, c.as_ref(), k)? {
                            expected += 1;
                            if !self.witnesses.iter().any(|w| w.cylinder == cyl && w.target == s) {
                                return Ok(false);
                            }
                        }
                    }
                }
                Ok(expected == self.witnesses.len())
            }
            Verdict::NotOpenWitness => {
                let Some(c) = &self.counterexample else {
                    return Ok(false);
                };
                let depth = c.image.height();
                if depth < 2
                    || !shift.certify(&c.preimage)?.is_certified()
                    || !c.preimage.cylinder_match(&self.block)?
                    || c.preimage.restrict(&side(i), depth)? != c.image
                    || !shift.in_language(&c.outsider)
                    || c.outsider.height() != depth
                    || c.outsider.top(depth - 1) != c.image.top(depth - 1)
                {
                    return Ok(false);
                }
                for r in extensions_of(shift, Some(&self.block), depth + 1)? {
                    if r.restrict(&side(i), depth)? == c.outsider {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{
        at_most_one_zero_shift, full_shift, golden_mean_tree_sft, one_zero_row_shift, sibling_zeros_shift,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block(h: usize, labels: &[u8]) -> Block {
        Block::new(2, h, labels.to_vec()).unwrap()
    }

    #[test]
    fn image_prefixes() {
        let f = full_shift().unwrap();
        assert_eq!(image_prefix(&f, 0, &block(2, &[1, 0, 1])).unwrap(), block(1, &[0]));
        let g = golden_mean_tree_sft().unwrap();
        assert_eq!(image_prefix(&g, 1, &block(2, &[1, 0, 0])).unwrap(), block(1, &[0]));
        assert_eq!(image_prefix(&g, 1, &block(2, &[1, 1, 0])), Err(Error::NotInLanguage));
        assert!(image_prefix(&g, 0, &block(1, &[1])).is_err());
    }

    #[test]
    fn gluing_own_subtree_is_identity() {
        let g = golden_mean_tree_sft().unwrap();
        let e = g.engine().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let r = e.random_tree(6, &mut rng).unwrap();
            let b = r.restrict(&Word::empty(), 3).unwrap();
            for i in 0..2 {
                let s = r.shift(i).unwrap();
                assert_eq!(sft_preimage_witness(e, i, &b, &r, &s).unwrap(), r);
            }
        }
    }

    #[test]
    fn gluing_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for shift in [golden_mean_tree_sft().unwrap(), sibling_zeros_shift().unwrap()] {
            let e = shift.engine().unwrap();
            for _ in 0..100 {
                let r = e.random_tree(6, &mut rng).unwrap();
                let b = r.restrict(&Word::empty(), 3).unwrap();
                let i = rand::Rng::gen_range(&mut rng, 0..2);
                let c = b.restrict(&side(i), 2).unwrap();
                let s = TruncatedTree::new(e.random_extension(&c, 5, &mut rng).unwrap());
                let q = sft_preimage_witness(e, i, &b, &r, &s).unwrap();
                assert!(q.cylinder_match(&b).unwrap());
                assert_eq!(q.shift(i).unwrap(), s.truncate(5).unwrap());
            }
        }
    }

    #[test]
    fn gluing_preconditions() {
        let g = golden_mean_tree_sft().unwrap();
        let e = g.engine().unwrap();
        let r = TruncatedTree::new(Block::constant(2, 4, 0));
        let b2 = block(2, &[0, 0, 0]);
        assert!(sft_preimage_witness(e, 0, &b2, &r, &r).is_err());
        let b3 = r.restrict(&Word::empty(), 3).unwrap();
        let ones = TruncatedTree::new(Block::constant(2, 3, 1));
        assert!(sft_preimage_witness(e, 0, &b3, &r, &ones).is_err());
    }

    #[test]
    fn one_zero_row_examples() {
        let ones = TruncatedTree::new(Block::constant(2, 3, 1));
        let b = Block::constant(2, 3, 1);
        let r = one_zero_row_witness(0, &b, &ones, &TruncatedTree::new(b.clone())).unwrap();
        assert_eq!(r, TruncatedTree::new(Block::constant(2, 4, 1)));

        let rooted = b.with_label(&Word::empty(), 0).unwrap();
        let padded = Block::constant(2, 4, 1).with_label(&Word::empty(), 0).unwrap();
        let r = one_zero_row_witness(1, &rooted, &ones, &TruncatedTree::new(padded.clone())).unwrap();
        assert_eq!(r.body(), &padded);
    }

    #[test]
    fn sft_blocks_are_open() {
        for shift in [golden_mean_tree_sft().unwrap(), full_shift().unwrap()] {
            for b in shift.block_language(2).unwrap() {
                for i in 0..2 {
                    let r = bounded_openness_check(&shift, i, &b, 3).unwrap();
                    assert_eq!(r.verdict, Verdict::OpenCertified);
                    assert!(r.recheck(&shift).unwrap());
                }
            }
        }
        let g = golden_mean_tree_sft().unwrap();
        let r = bounded_openness_check(&g, 0, &block(1, &[1]), 3).unwrap();
        assert_eq!(r.verdict, Verdict::OpenCertified);
        assert_eq!(r.target, None);
    }

    #[test]
    fn one_zero_row_is_open() {
        let row = one_zero_row_shift().unwrap();
        for b in row.block_language(2).unwrap() {
            let r = bounded_openness_check(&row, 1, &b, 3).unwrap();
            assert_eq!(r.verdict, Verdict::OpenCertified);
            assert!(r.recheck(&row).unwrap());
        }
    }

    #[test]
    fn at_most_one_zero_is_not_open() {
        let one = at_most_one_zero_shift().unwrap();
        let b = block(2, &[0, 1, 1]);
        let r = bounded_openness_check(&one, 0, &b, 4).unwrap();
        assert_eq!(r.verdict, Verdict::NotOpenWitness);
        let c = r.counterexample.as_ref().unwrap();
        assert_eq!(c.image, Block::constant(2, 4, 1));
        assert!(r.recheck(&one).unwrap());
        // a forged counterexample is rejected
        let mut forged = r.clone();
        forged.counterexample.as_mut().unwrap().outsider = Block::constant(2, 4, 1);
        assert!(!forged.recheck(&one).unwrap());
        // the all-ones cylinder maps onto an open set
        let r = bounded_openness_check(&one, 0, &Block::constant(2, 2, 1), 3).unwrap();
        assert_eq!(r.verdict, Verdict::OpenCertified);
        assert!(r.recheck(&one).unwrap());
    }
}
