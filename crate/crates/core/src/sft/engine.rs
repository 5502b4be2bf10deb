use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;

use rand::Rng;

use crate::alphabet::Alphabets;
use crate::block::{Block, Label, TruncatedTree};
use crate::error::{Error, Result};
use crate::word::{level_width, node_count, Letter, Word};

use super::{all_blocks, check_budget, Membership, NormalizedSft, DEFAULT_BUDGET};

/// Decision structure for a tree-shift of finite type with forbidden height `p`.
///
/// `viable` is the greatest set of locally admissible height-`p` blocks in which
/// every block has, in every direction, a viable block overlapping it on `p - 1`
/// levels. It equals `B_p(X)`: a tree lies in `X` iff every height-`p` window is
/// viable, and any viable block can be grown downwards forever by picking
/// overlapping viable windows.
#[derive(Clone, Debug)]
pub struct SftEngine {
    sft: NormalizedSft,
    budget: u64,
    viable: Vec<Block>,
    index: HashMap<Block, usize>,
    /// viable blocks keyed by their top `p - 1` levels (empty key when `p = 1`)
    by_prefix: HashMap<Vec<Label>, Vec<usize>>,
    /// `children[b][i]`: viable blocks whose top `p - 1` levels equal the
    /// `p - 1` levels of `b` below direction `i`
    children: Vec<Vec<Vec<usize>>>,
    /// `short[h]` = `B_h(X)` for `1 ≤ h < p`
    short: Vec<Vec<Block>>,
}

impl SftEngine {
    /// Runs the viability fixpoint.
    pub fn build(sft: NormalizedSft) -> Result<Self> {
        Self::build_with_budget(sft, DEFAULT_BUDGET)
    }

    pub fn build_with_budget(sft: NormalizedSft, budget: u64) -> Result<Self> {
        let arity = sft.alphabets().arity();
        let p = sft.height();
        let top_len = node_count(arity, p - 1);

        let admissible: Vec<Block> = all_blocks(sft.alphabets().label_count(), node_count(arity, p), budget)?
            .map(|labels| Block::from_raw(arity, p, labels))
            .filter(|b| !sft.forbidden().contains(b))
            .collect();

        let mut prefix_map: HashMap<Vec<Label>, Vec<usize>> = HashMap::new();
        for (idx, b) in admissible.iter().enumerate() {
            prefix_map.entry(b.labels()[..top_len].to_vec()).or_default().push(idx);
        }
        let child_keys: Vec<Vec<Vec<Label>>> = admissible
            .iter()
            .map(|b| (0..arity).map(|i| b.window_labels(1, i, p - 1)).collect())
            .collect();

        let mut alive = vec![true; admissible.len()];
        loop {
            let mut removed = false;
            for b in 0..admissible.len() {
                if !alive[b] {
                    continue;
                }
                let supported = child_keys[b]
                    .iter()
                    .all(|key| prefix_map.get(key).is_some_and(|cs| cs.iter().any(|&c| alive[c])));
                if !supported {
                    alive[b] = false;
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }

        let viable: Vec<Block> = admissible
            .into_iter()
            .zip(alive)
            .filter_map(|(b, keep)| keep.then_some(b))
            .collect();
        let index: HashMap<Block, usize> = viable.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let mut by_prefix: HashMap<Vec<Label>, Vec<usize>> = HashMap::new();
        for (idx, b) in viable.iter().enumerate() {
            by_prefix.entry(b.labels()[..top_len].to_vec()).or_default().push(idx);
        }
        let children = viable
            .iter()
            .map(|b| {
                (0..arity)
                    .map(|i| {
                        by_prefix
                            .get(&b.window_labels(1, i, p - 1))
                            .cloned()
                            .unwrap_or_default()
                    })
                    .collect()
            })
            .collect();
        let short = (0..p)
            .map(|h| {
                if h == 0 {
                    return Vec::new();
                }
                let set: BTreeSet<Block> = viable.iter().map(|c| c.top(h)).collect();
                set.into_iter().collect()
            })
            .collect();

        Ok(SftEngine {
            sft,
            budget,
            viable,
            index,
            by_prefix,
            children,
            short,
        })
    }

    pub fn sft(&self) -> &NormalizedSft {
        &self.sft
    }

    pub fn alphabets(&self) -> &Alphabets {
        self.sft.alphabets()
    }

    fn arity(&self) -> usize {
        self.sft.alphabets().arity()
    }

    /// The forbidden height `p`.
    pub fn height(&self) -> usize {
        self.sft.height()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// `B_p(X)` in canonical order.
    pub fn viable(&self) -> &[Block] {
        &self.viable
    }

    pub fn is_viable(&self, b: &Block) -> bool {
        self.index.contains_key(b)
    }

    /// Viable blocks overlapping the viable block `b` below direction `i`.
    pub fn child_rel(&self, b: &Block, i: Letter) -> Option<Vec<&Block>> {
        let idx = *self.index.get(b)?;
        let kids = self.children[idx].get(usize::from(i))?;
        Some(kids.iter().map(|&c| &self.viable[c]).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.viable.is_empty()
    }

    fn check_arity(&self, arity: usize) -> Result<()> {
        if arity == self.arity() {
            Ok(())
        } else {
            Err(Error::ArityMismatch(arity, self.arity()))
        }
    }

    /// First height-`p` window of `b` (a block at least `p` tall) that is not viable.
    fn first_bad_window(&self, b: &Block) -> Option<Word> {
        let p = self.height();
        for level in 0..=b.height() - p {
            for pos in 0..level_width(self.arity(), level) {
                let window = Block::from_raw(self.arity(), p, b.window_labels(level, pos, p));
                if !self.index.contains_key(&window) {
                    return Some(Word::from_position(pos, level, self.arity()));
                }
            }
        }
        None
    }

    /// Whether `b` occurs in some tree of the shift.
    pub fn in_language(&self, b: &Block) -> bool {
        if b.arity() != self.arity() || self.alphabets().check_block(b).is_err() {
            return false;
        }
        if b.height() < self.height() {
            self.short[b.height()].binary_search(b).is_ok()
        } else {
            self.first_bad_window(b).is_none()
        }
    }

    /// Every fully visible height-`p` window decides membership.
    pub fn certify_membership(&self, t: &TruncatedTree) -> Result<Membership> {
        self.check_arity(t.arity())?;
        self.alphabets().check_block(t.body())?;
        if t.depth() < self.height() {
            return Err(Error::TooShallow {
                need: self.height(),
                have: t.depth(),
            });
        }
        Ok(match self.first_bad_window(t.body()) {
            Some(at) => Membership::NotInX { at },
            None => Membership::Certified,
        })
    }

    /// `counts[c]` = number of ways to grow viable window `c` by `extra` levels.
    fn completion_counts(&self, extra: usize) -> Result<Vec<u128>> {
        let mut counts = vec![1u128; self.viable.len()];
        for _ in 0..extra {
            let mut next = Vec::with_capacity(counts.len());
            for kids in &self.children {
                let mut product: u128 = 1;
                for dir in kids {
                    let sum = dir
                        .iter()
                        .try_fold(0u128, |acc, &c| acc.checked_add(counts[c]))
                        .ok_or(Error::CountOverflow)?;
                    product = product.checked_mul(sum).ok_or(Error::CountOverflow)?;
                }
                next.push(product);
            }
            counts = next;
        }
        Ok(counts)
    }

    /// `|B_n(X)|` without materializing the blocks.
    pub fn block_count(&self, n: usize) -> Result<u128> {
        if n == 0 {
            return Err(Error::Precondition("block height must be at least 1".into()));
        }
        let p = self.height();
        if n < p {
            return Ok(self.short[n].len() as u128);
        }
        self.completion_counts(n - p)?
            .into_iter()
            .try_fold(0u128, |acc, c| acc.checked_add(c))
            .ok_or(Error::CountOverflow)
    }

    /// `B_n(X)` in canonical order.
    pub fn block_language(&self, n: usize) -> Result<Vec<Block>> {
        let count = self.block_count(n)?;
        check_budget(count, self.budget)?;
        if n < self.height() {
            return Ok(self.short[n].clone());
        }
        let mut out = Vec::with_capacity(count as usize);
        for c in &self.viable {
            let _ = self.grow_all(c.clone(), n, &mut |b| {
                out.push(b);
                ControlFlow::Continue(())
            });
        }
        Ok(out)
    }

    fn level_candidates(&self, b: &Block) -> Vec<&[usize]> {
        let p = self.height();
        let level = b.height() + 1 - p;
        (0..level_width(self.arity(), level))
            .map(|pos| {
                self.by_prefix
                    .get(&b.window_labels(level, pos, p - 1))
                    .map_or(&[][..], Vec::as_slice)
            })
            .collect()
    }

    fn assemble_level(&self, candidates: &[&[usize]], choice: &[usize]) -> Vec<Label> {
        let p = self.height();
        let mut level = Vec::with_capacity(candidates.len() * level_width(self.arity(), p - 1));
        for (cands, &k) in candidates.iter().zip(choice) {
            level.extend_from_slice(self.viable[cands[k]].level(p - 1));
        }
        level
    }

    /// Depth-first over all completions of `b` (height ≥ p, in the language) to
    /// height `target`, in canonical block order.
    fn grow_all(&self, b: Block, target: usize, f: &mut dyn FnMut(Block) -> ControlFlow<()>) -> ControlFlow<()> {
        if b.height() == target {
            return f(b);
        }
        let candidates = self.level_candidates(&b);
        if candidates.iter().any(|c| c.is_empty()) {
            return ControlFlow::Continue(());
        }
        let mut choice = vec![0usize; candidates.len()];
        loop {
            let next = b.with_level(&self.assemble_level(&candidates, &choice));
            self.grow_all(next, target, f)?;
            let mut k = choice.len();
            loop {
                if k == 0 {
                    return ControlFlow::Continue(());
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < candidates[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    fn viable_with_prefix<'a>(&'a self, b: &'a Block) -> impl Iterator<Item = &'a Block> + 'a {
        self.viable.iter().filter(move |c| c.labels().starts_with(b.labels()))
    }

    fn check_extension_args(&self, b: &Block, height: usize) -> Result<()> {
        self.check_arity(b.arity())?;
        if height < b.height() {
            return Err(Error::Precondition(format!(
                "cannot extend a height-{} block to height {height}",
                b.height()
            )));
        }
        if !self.in_language(b) {
            return Err(Error::NotInLanguage);
        }
        Ok(())
    }

    /// Visits the blocks of `B_height(X)` that restrict to `b`, in canonical
    /// order, until `f` breaks.
    pub fn for_each_extension(
        &self,
        b: &Block,
        height: usize,
        mut f: impl FnMut(Block) -> ControlFlow<()>,
    ) -> Result<()> {
        self.check_extension_args(b, height)?;
        let p = self.height();
        if b.height() >= p {
            let _ = self.grow_all(b.clone(), height, &mut f);
            return Ok(());
        }
        let mut last: Option<Block> = None;
        for c in self.viable_with_prefix(b) {
            let flow = if height <= p {
                let top = c.top(height);
                if last.as_ref() == Some(&top) {
                    continue;
                }
                last = Some(top.clone());
                f(top)
            } else {
                self.grow_all(c.clone(), height, &mut f)
            };
            if flow.is_break() {
                break;
            }
        }
        Ok(())
    }

    /// All blocks of `B_height(X)` restricting to `b`, budget permitting.
    pub fn extensions(&self, b: &Block, height: usize) -> Result<Vec<Block>> {
        self.check_extension_args(b, height)?;
        let count = self.extension_count(b, height - b.height())?;
        check_budget(count, self.budget)?;
        let mut out = Vec::with_capacity(count as usize);
        self.for_each_extension(b, height, |e| {
            out.push(e);
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    /// Number of blocks in `B_{h + extra}(X)` that restrict to `b`.
    pub fn extension_count(&self, b: &Block, extra: usize) -> Result<u128> {
        self.check_extension_args(b, b.height())?;
        let p = self.height();
        let h = b.height();
        if extra == 0 {
            return Ok(1);
        }
        if h < p {
            let target = h + extra;
            if target <= p {
                let tops: BTreeSet<Block> = self.viable_with_prefix(b).map(|c| c.top(target)).collect();
                return Ok(tops.len() as u128);
            }
            let counts = self.completion_counts(target - p)?;
            return self
                .viable_with_prefix(b)
                .map(|c| counts[self.index[c]])
                .try_fold(0u128, |acc, c| acc.checked_add(c))
                .ok_or(Error::CountOverflow);
        }
        let counts = self.completion_counts(extra - 1)?;
        let mut product: u128 = 1;
        for cands in self.level_candidates(b) {
            let sum = cands
                .iter()
                .try_fold(0u128, |acc, &c| acc.checked_add(counts[c]))
                .ok_or(Error::CountOverflow)?;
            product = product.checked_mul(sum).ok_or(Error::CountOverflow)?;
        }
        Ok(product)
    }

    /// The first extension of `b` to `height` in canonical order.
    pub fn canonical_extension(&self, b: &Block, height: usize) -> Result<Block> {
        let mut found = None;
        self.for_each_extension(b, height, |e| {
            found = Some(e);
            ControlFlow::Break(())
        })?;
        found.ok_or(Error::NotInLanguage)
    }

    /// An extension of `b` to `height` built by stitching uniformly chosen
    /// viable windows.
    pub fn random_extension<R: Rng + ?Sized>(&self, b: &Block, height: usize, rng: &mut R) -> Result<Block> {
        self.check_extension_args(b, height)?;
        let p = self.height();
        let mut current = if b.height() < p {
            let cands: Vec<&Block> = self.viable_with_prefix(b).collect();
            let c = cands[rng.gen_range(0..cands.len())];
            if height <= p {
                return Ok(c.top(height));
            }
            c.clone()
        } else {
            b.clone()
        };
        while current.height() < height {
            let candidates = self.level_candidates(&current);
            let choice: Vec<usize> = candidates.iter().map(|c| rng.gen_range(0..c.len())).collect();
            current = current.with_level(&self.assemble_level(&candidates, &choice));
        }
        Ok(current)
    }

    /// A random certified truncation of depth `depth`.
    pub fn random_tree<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> Result<TruncatedTree> {
        if self.is_empty() {
            return Err(Error::EmptyShift);
        }
        if depth == 0 {
            return Err(Error::Precondition("depth must be at least 1".into()));
        }
        let root = &self.viable[rng.gen_range(0..self.viable.len())];
        let body = if depth <= self.height() {
            root.top(depth)
        } else {
            self.random_extension(root, depth, rng)?
        };
        Ok(TruncatedTree::new(body))
    }

    /// Viable blocks whose cylinder is a single tree.
    ///
    /// A viable block is rigid iff in every direction it has exactly one viable
    /// child and that child is rigid again. If `b` had two viable children
    /// `c ≠ c'` in some direction, stitching gives members of `[b]` through
    /// both, so `[b]` has two points. Conversely along a rigid chain every
    /// window is forced, so `[b]` is one tree. `X` has an isolated point iff
    /// some cylinder `[b]` with `b ∈ B_n(X)` is a singleton, and the windows of
    /// such a `b` at depth `n - p` are then rigid, so it suffices to look at
    /// height `p`.
    pub fn rigidity_fixpoint(&self) -> Vec<Block> {
        let mut rigid: Vec<bool> = self
            .children
            .iter()
            .map(|kids| kids.iter().all(|dir| dir.len() == 1))
            .collect();
        loop {
            let mut removed = false;
            for b in 0..rigid.len() {
                if rigid[b] && self.children[b].iter().any(|dir| !rigid[dir[0]]) {
                    rigid[b] = false;
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }
        self.viable
            .iter()
            .zip(rigid)
            .filter(|&(_, r)| r)
            .map(|(b, _)| b.clone())
            .collect()
    }

    /// Non-empty and without isolated points.
    pub fn is_perfect(&self) -> bool {
        !self.is_empty() && self.rigidity_fixpoint().is_empty()
    }
}
