//! Finite pseudo-orbits and their tracing.
//!
//! A family `{t^(w)}` indexed by `Σ^{<N}` is an `[n]`-pseudo-orbit when
//! `σ^i(t^(w))` and `t^(wi)` agree on their first `n` levels. For a tree-shift
//! of finite type with forbidden height `p`, every `[n]`-pseudo-orbit with
//! `n ≥ max(p, m)` is `[m]`-traced by the tree `t_w = t^(w)_ε`, and that tree is
//! again a member of the shift.

mod format;

pub use format::{parse_orbit_file, write_orbit_file};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Alphabets;
use crate::block::{Block, TruncatedTree};
use crate::error::{Error, Result};
use crate::sft::SftEngine;
use crate::word::{bfs_index, node_count, words_below, Letter, Word};

/// A finite family of truncated trees indexed by `Σ^{<order}`.
///
/// `resolution` is only a claim; [`verify_pseudo_orbit`] checks it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoOrbitFamily {
    alphabets: Alphabets,
    order: usize,
    resolution: usize,
    entries: Vec<TruncatedTree>,
}

impl PseudoOrbitFamily {
    /// `entries` are listed in canonical order of their index words.
    pub fn new(alphabets: Alphabets, order: usize, resolution: usize, entries: Vec<TruncatedTree>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Precondition("order must be at least 1".into()));
        }
        let expected = crate::word::checked_node_count(alphabets.arity(), order)
            .ok_or_else(|| Error::Precondition(format!("order {order} too large")))?;
        if entries.len() != expected {
            return Err(Error::Precondition(format!(
                "order {order} needs {expected} entries, got {}",
                entries.len()
            )));
        }
        let depth = entries[0].depth();
        for t in &entries {
            alphabets.check_block(t.body())?;
            if t.depth() != depth {
                return Err(Error::DepthMismatch(depth, t.depth()));
            }
        }
        Ok(PseudoOrbitFamily {
            alphabets,
            order,
            resolution,
            entries,
        })
    }

    /// The exact orbit `t^(w) = σ^w(seed)` cut to `depth` levels.
    pub fn true_orbit(
        alphabets: Alphabets,
        seed: &TruncatedTree,
        order: usize,
        depth: usize,
        resolution: usize,
    ) -> Result<Self> {
        let need = order.saturating_sub(1) + depth;
        if seed.depth() < need {
            return Err(Error::TooShallow {
                need,
                have: seed.depth(),
            });
        }
        let entries = words_below(alphabets.arity(), order)
            .map(|w| seed.restrict(&w, depth).map(TruncatedTree::new))
            .collect::<Result<Vec<_>>>()?;
        PseudoOrbitFamily::new(alphabets, order, resolution, entries)
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    fn arity(&self) -> usize {
        self.alphabets.arity()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Depth `D` shared by all entries.
    pub fn depth(&self) -> usize {
        self.entries[0].depth()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn entries(&self) -> &[TruncatedTree] {
        &self.entries
    }

    pub fn entry(&self, w: &Word) -> Option<&TruncatedTree> {
        if w.len() >= self.order {
            return None;
        }
        self.entries.get(bfs_index(w, self.arity()).ok()?)
    }

    pub fn words(&self) -> impl Iterator<Item = Word> {
        words_below(self.arity(), self.order)
    }

    /// Copy with the entry at `w` replaced, without any verification.
    pub fn with_entry(&self, w: &Word, t: TruncatedTree) -> Result<Self> {
        let idx = bfs_index(w, self.arity())?;
        if w.len() >= self.order {
            return Err(Error::Precondition(format!("{w} is not an index word")));
        }
        let mut entries = self.entries.clone();
        entries[idx] = t;
        PseudoOrbitFamily::new(self.alphabets.clone(), self.order, self.resolution, entries)
    }
}

/// Location of a failed check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Index into the sample list, for checks over sampled trees.
    pub sample: Option<usize>,
    pub word: Word,
    /// The direction (pseudo-orbit and `τ` checks) or the split word `u`
    /// (the identity `t^(w)_{uv} = t^(wu)_v`).
    pub step: Option<Word>,
    pub node: Word,
}

impl Violation {
    pub fn at(word: Word, node: Word) -> Self {
        Violation {
            sample: None,
            word,
            step: None,
            node,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceReport {
    pub passed: bool,
    pub first_violation: Option<Violation>,
    pub checked_depth: usize,
}

impl TraceReport {
    pub fn pass(checked_depth: usize) -> Self {
        TraceReport {
            passed: true,
            first_violation: None,
            checked_depth,
        }
    }

    pub fn fail(violation: Violation, checked_depth: usize) -> Self {
        TraceReport {
            passed: false,
            first_violation: Some(violation),
            checked_depth,
        }
    }
}

/// First node (canonical order) where two equal-height blocks differ.
pub(crate) fn first_difference(a: &Block, b: &Block) -> Option<Word> {
    a.labels()
        .iter()
        .zip(b.labels())
        .position(|(x, y)| x != y)
        .map(|i| Word::from_bfs_index(i, a.arity()))
}

/// Checks `σ^i(t^(w))|Σ^{<n} = t^(wi)|Σ^{<n}` for all `w ∈ Σ^{<N-1}` and `i`.
pub fn verify_pseudo_orbit(f: &PseudoOrbitFamily) -> Result<TraceReport> {
    verify_at(f, f.resolution())
}

pub(crate) fn verify_at(f: &PseudoOrbitFamily, n: usize) -> Result<TraceReport> {
    if f.depth() < n + 1 {
        return Err(Error::TooShallow {
            need: n + 1,
            have: f.depth(),
        });
    }
    if n == 0 {
        return Ok(TraceReport::pass(0));
    }
    for w in words_below(f.arity(), f.order() - 1) {
        let parent = f.entry(&w).expect("index word");
        for i in 0..f.arity() as Letter {
            let child = f.entry(&w.child(i)).expect("index word");
            let seen = parent.restrict(&Word::new(vec![i]), n)?;
            let claimed = child.restrict(&Word::empty(), n)?;
            if let Some(node) = first_difference(&seen, &claimed) {
                return Ok(TraceReport::fail(
                    Violation {
                        sample: None,
                        word: w,
                        step: Some(Word::new(vec![i])),
                        node,
                    },
                    n,
                ));
            }
        }
    }
    Ok(TraceReport::pass(n))
}

/// Builds `{t^(w)}` top-down: `t^(ε)` is a random member, and `t^(wi)` is a
/// random member extending `σ^i(t^(w))|Σ^{<n}`. Every `[n]`-pseudo-orbit of
/// depth-`depth` members arises this way.
pub fn random_pseudo_orbit<R: Rng + ?Sized>(
    e: &SftEngine,
    order: usize,
    depth: usize,
    n: usize,
    rng: &mut R,
) -> Result<PseudoOrbitFamily> {
    if order == 0 {
        return Err(Error::Precondition("order must be at least 1".into()));
    }
    if depth < n + 1 || depth < e.height() {
        return Err(Error::TooShallow {
            need: (n + 1).max(e.height()),
            have: depth,
        });
    }
    let arity = e.alphabets().arity();
    let mut entries: Vec<TruncatedTree> = Vec::with_capacity(node_count(arity, order));
    for w in words_below(arity, order) {
        let entry = match w.letters().split_last() {
            None => e.random_tree(depth, rng)?,
            Some((&i, parent)) if n > 0 => {
                let parent = &entries[bfs_index(&Word::from(parent), arity)?];
                let prefix = parent.restrict(&Word::new(vec![i]), n)?;
                TruncatedTree::new(e.random_extension(&prefix, depth, rng)?)
            }
            Some(_) => e.random_tree(depth, rng)?,
        };
        entries.push(entry);
    }
    PseudoOrbitFamily::new(e.alphabets().clone(), order, n, entries)
}

/// The exact orbit of `seed`, with every entry re-sampled on levels `n + 1`
/// and below. Entries stay certified members and the family stays an
/// `[n]`-pseudo-orbit, since the check reads levels `0..=n` only.
pub fn perturb_orbit(
    e: &SftEngine,
    seed: &TruncatedTree,
    order: usize,
    depth: usize,
    n: usize,
    rng_seed: u64,
) -> Result<PseudoOrbitFamily> {
    if e.is_empty() {
        return Err(Error::EmptyShift);
    }
    if depth < n + 1 || depth < e.height() {
        return Err(Error::TooShallow {
            need: (n + 1).max(e.height()),
            have: depth,
        });
    }
    if !e.certify_membership(seed)?.is_certified() {
        return Err(Error::Precondition("seed tree is not a certified member".into()));
    }
    let exact = PseudoOrbitFamily::true_orbit(e.alphabets().clone(), seed, order, depth, n)?;
    if depth == n + 1 {
        return Ok(exact);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    // a few retries so that some entry actually changes whenever that is possible
    for _ in 0..8 {
        let entries = exact
            .entries()
            .iter()
            .map(|t| {
                let keep = t.restrict(&Word::empty(), n + 1)?;
                e.random_extension(&keep, depth, &mut rng).map(TruncatedTree::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let family = PseudoOrbitFamily::new(e.alphabets().clone(), order, n, entries)?;
        if family != exact {
            return Ok(family);
        }
    }
    Ok(exact)
}

/// The tree `t_w = t^(w)_ε`, continued below level `N - 1` by the deepest
/// entries (`t_{wu} = t^(w)_u` for `|w| = N - 1`). Depth is `N - 1 + D`.
pub fn trace_construct(f: &PseudoOrbitFamily) -> Result<TruncatedTree> {
    if f.resolution() == 0 {
        return Err(Error::Precondition("resolution must be at least 1".into()));
    }
    let report = verify_pseudo_orbit(f)?;
    if let Some(v) = report.first_violation {
        return Err(Error::Unverified {
            word: v.word,
            node: v.node,
        });
    }
    Ok(forced_tree(f))
}

fn forced_tree(f: &PseudoOrbitFamily) -> TruncatedTree {
    let last = f.order() - 1;
    let depth = last + f.depth();
    TruncatedTree::new(Block::from_fn(f.arity(), depth, |x| {
        let k = x.len().min(last);
        f.entry(&x.prefix(k))
            .and_then(|t| t.get(&x.suffix_from(k)))
            .expect("node within the traced depth")
    }))
}

/// Checks `σ^w(t)|Σ^{<m} = t^(w)|Σ^{<m}` for every `w ∈ Σ^{<N}`.
pub fn verify_tracing(t: &TruncatedTree, f: &PseudoOrbitFamily, m: usize) -> Result<TraceReport> {
    if t.arity() != f.arity() {
        return Err(Error::ArityMismatch(t.arity(), f.arity()));
    }
    let need = f.order() - 1 + m;
    if t.depth() < need {
        return Err(Error::TooShallow { need, have: t.depth() });
    }
    if f.depth() < m {
        return Err(Error::TooShallow {
            need: m,
            have: f.depth(),
        });
    }
    if m == 0 {
        return Ok(TraceReport::pass(0));
    }
    for w in f.words() {
        let seen = t.restrict(&w, m)?;
        let wanted = f.entry(&w).expect("index word").restrict(&Word::empty(), m)?;
        if let Some(node) = first_difference(&seen, &wanted) {
            return Ok(TraceReport::fail(Violation::at(w, node), m));
        }
    }
    Ok(TraceReport::pass(m))
}

/// `t^(w)_{uv} = t^(wu)_v` for one triple; `None` when the triple is outside
/// the range `wu ∈ Σ^{<N}`, `uv ∈ Σ^{<n}`.
pub fn po_identity(f: &PseudoOrbitFamily, w: &Word, u: &Word, v: &Word) -> Option<bool> {
    let wu = w.concat(u);
    let uv = u.concat(v);
    if wu.len() >= f.order() || uv.len() >= f.resolution() || uv.len() >= f.depth() {
        return None;
    }
    Some(f.entry(w)?.get(&uv)? == f.entry(&wu)?.get(v)?)
}

/// Exhaustive check of `t^(w)_{uv} = t^(wu)_v` over the whole index range.
///
/// This holds for every verified `[n]`-pseudo-orbit; on a corrupted family it
/// reports the first failing triple.
pub fn lemma_po_check(f: &PseudoOrbitFamily) -> Result<TraceReport> {
    let n = f.resolution();
    if f.depth() < n {
        return Err(Error::TooShallow {
            need: n,
            have: f.depth(),
        });
    }
    let arity = f.arity();
    for w in f.words() {
        for u in words_below(arity, f.order() - w.len()) {
            for v in words_below(arity, n.saturating_sub(u.len())) {
                if po_identity(f, &w, &u, &v) == Some(false) {
                    return Ok(TraceReport::fail(
                        Violation {
                            sample: None,
                            word: w,
                            step: Some(u.clone()),
                            node: u.concat(&v),
                        },
                        n,
                    ));
                }
            }
        }
    }
    Ok(TraceReport::pass(n))
}

/// Every candidate that `[m]`-traces `f` carries the forced labels
/// `t_w = t^(w)_ε` on `Σ^{<N}`, so any two tracing trees agree there.
/// Returns false if two passing candidates disagree.
pub fn uniqueness_check(f: &PseudoOrbitFamily, m: usize, candidates: &[TruncatedTree]) -> Result<bool> {
    if m == 0 {
        return Err(Error::Precondition("tracing level must be at least 1".into()));
    }
    let forced = forced_tree(f).truncate(f.order())?;
    for t in candidates {
        if verify_tracing(t, f, m)?.passed && t.truncate(f.order())? != forced {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The resolution `max(p, m)` at which every pseudo-orbit is `[m]`-traced by
/// a member of the shift.
pub fn shadowing_bound(e: &SftEngine, m: usize) -> Result<usize> {
    if e.is_empty() {
        return Err(Error::EmptyShift);
    }
    Ok(e.height().max(m))
}
