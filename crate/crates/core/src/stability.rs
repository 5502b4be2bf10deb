//! Topological stability machinery.
//!
//! A finite `[n]`-pseudo-orbit `{t^(w)}` is first made injective (entries
//! pairwise distinct, unchanged on their first `n + 1` levels). The maps
//!
//! ```text
//! τ^i(t) = s^(wi)   if t agrees with s^(w) on M levels, w ∈ Σ^{<N-1}
//! τ^i(t) = σ^i(t)   otherwise
//! ```
//!
//! are then `[n]`-close to the shift maps, and `φ(t)_w = τ^w(t)_ε` satisfies
//! `σ^i∘φ = φ∘τ^i`, is `[m]`-close to the identity and `φ(t^(ε))` `[m]`-traces
//! the original family. Perfectness of the shift is what makes the first step
//! possible and is checked up front.

use std::collections::HashMap;
use std::ops::ControlFlow;

use rand::Rng;

use crate::alphabet::Alphabets;
use crate::block::{Block, TruncatedTree};
use crate::error::{Error, Result};
use crate::sft::SftEngine;
use crate::shadowing::{first_difference, verify_tracing, PseudoOrbitFamily, TraceReport, Violation};
use crate::word::{bfs_index, words_below, Letter, Word};

pub const DEFAULT_SLACK: usize = 3;

/// Output depth used by the semiconjugacy check in [`stability_pipeline`].
pub const CONJUGACY_DEPTH: usize = 3;

/// A pseudo-orbit with pairwise distinct entries, together with the depth `M`
/// at which they are told apart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectiveFamily {
    base: PseudoOrbitFamily,
    separating_depth: usize,
    separation_depth: usize,
    replaced: Vec<Word>,
}

impl InjectiveFamily {
    /// The entries `s^(w)`.
    pub fn base(&self) -> &PseudoOrbitFamily {
        &self.base
    }

    pub fn alphabets(&self) -> &Alphabets {
        self.base.alphabets()
    }

    /// Smallest depth at which the entries are pairwise distinct.
    pub fn separating_depth(&self) -> usize {
        self.separating_depth
    }

    /// `M = max(separating depth, n + 1)`; exceeds both `n` and `m ≤ n`.
    pub fn separation_depth(&self) -> usize {
        self.separation_depth
    }

    /// Index words whose entries were replaced.
    pub fn replaced(&self) -> &[Word] {
        &self.replaced
    }
}

fn separating_depth(entries: &[TruncatedTree]) -> usize {
    let mut depth = 0;
    for (k, a) in entries.iter().enumerate() {
        for b in &entries[k + 1..] {
            let level = first_difference(a.body(), b.body())
                .map(|node| node.len() + 1)
                .expect("entries are pairwise distinct");
            depth = depth.max(level);
        }
    }
    depth
}

pub fn injectivize(f: &PseudoOrbitFamily, e: &SftEngine) -> Result<InjectiveFamily> {
    injectivize_with_slack(f, e, DEFAULT_SLACK)
}

/// Entries are first extended canonically to depth `max(D, n + 1 + slack)`.
/// Then, in canonical order of index words, every entry equal to an earlier one
/// is replaced by the first extension of its top `n + 1` levels that differs
/// from all current entries.
pub fn injectivize_with_slack(f: &PseudoOrbitFamily, e: &SftEngine, slack: usize) -> Result<InjectiveFamily> {
    if !e.is_perfect() {
        let rigid = e
            .rigidity_fixpoint()
            .first()
            .map(|b| e.alphabets().format_block(b))
            .unwrap_or_else(|| "shift is empty".into());
        return Err(Error::NotPerfect { rigid });
    }
    if f.alphabets() != e.alphabets() {
        return Err(Error::ArityMismatch(f.alphabets().arity(), e.alphabets().arity()));
    }
    let n = f.resolution();
    let keep = n + 1;
    if f.depth() < keep {
        return Err(Error::TooShallow {
            need: keep,
            have: f.depth(),
        });
    }
    for (w, t) in f.words().zip(f.entries()) {
        if !e.certify_membership(t)?.is_certified() {
            return Err(Error::Precondition(format!("entry {w} is not a certified member")));
        }
    }
    let work = f.depth().max(keep + slack);
    let mut entries: Vec<Block> = f
        .entries()
        .iter()
        .map(|t| e.canonical_extension(t.body(), work))
        .collect::<Result<_>>()?;

    let mut replaced = Vec::new();
    for (k, w) in f.words().enumerate() {
        if !entries[..k].contains(&entries[k]) {
            continue;
        }
        let prefix = entries[k].top(keep);
        let mut found = None;
        e.for_each_extension(&prefix, work, |c| {
            if entries.contains(&c) {
                ControlFlow::Continue(())
            } else {
                found = Some(c);
                ControlFlow::Break(())
            }
        })?;
        match found {
            Some(c) => {
                entries[k] = c;
                replaced.push(w);
            }
            None => {
                return Err(Error::InsufficientDepth {
                    required_slack: required_slack(e, &prefix, entries.len(), slack)?,
                })
            }
        }
    }

    let entries: Vec<TruncatedTree> = entries.into_iter().map(TruncatedTree::new).collect();
    let separating = separating_depth(&entries);
    let base = PseudoOrbitFamily::new(f.alphabets().clone(), f.order(), n, entries)?;
    Ok(InjectiveFamily {
        base,
        separating_depth: separating,
        separation_depth: separating.max(keep),
        replaced,
    })
}

/// Smallest slack leaving room for `needed` distinct extensions of `prefix`.
fn required_slack(e: &SftEngine, prefix: &Block, needed: usize, slack: usize) -> Result<usize> {
    for extra in slack + 1..=64 {
        match e.extension_count(prefix, extra) {
            Ok(c) if c >= needed as u128 => return Ok(extra),
            Ok(_) => {}
            Err(Error::CountOverflow) => return Ok(extra),
            Err(err) => return Err(err),
        }
    }
    Err(Error::Precondition(format!(
        "{} has fewer than {needed} extensions at any depth",
        e.alphabets().format_block(prefix)
    )))
}

/// The maps `τ^i` built from an injective family.
#[derive(Debug)]
pub struct TauFamily<'e> {
    injective: InjectiveFamily,
    engine: &'e SftEngine,
    entries: Vec<Block>,
    index: HashMap<Block, Word>,
}

impl<'e> TauFamily<'e> {
    /// Entries are extended canonically to `reach`, and further on demand.
    pub fn new(injective: InjectiveFamily, engine: &'e SftEngine, reach: usize) -> Result<Self> {
        let m = injective.separation_depth();
        let base = injective.base();
        let entries = base
            .entries()
            .iter()
            .map(|t| engine.canonical_extension(t.body(), reach.max(t.depth())))
            .collect::<Result<Vec<_>>>()?;
        let mut index = HashMap::new();
        for (w, s) in base.words().zip(&entries) {
            if w.len() + 1 < base.order() {
                index.insert(s.restrict(&Word::empty(), m)?, w);
            }
        }
        Ok(TauFamily {
            injective,
            engine,
            entries,
            index,
        })
    }

    pub fn injective(&self) -> &InjectiveFamily {
        &self.injective
    }

    pub fn engine(&self) -> &SftEngine {
        self.engine
    }

    pub fn separation_depth(&self) -> usize {
        self.injective.separation_depth()
    }

    fn arity(&self) -> usize {
        self.injective.alphabets().arity()
    }

    /// `s^(w)` extended canonically to `depth`.
    pub fn entry(&self, w: &Word, depth: usize) -> Result<TruncatedTree> {
        let s = &self.entries[bfs_index(w, self.arity())?];
        if depth <= s.height() {
            Ok(TruncatedTree::new(s.top(depth)))
        } else {
            self.engine.canonical_extension(s, depth).map(TruncatedTree::new)
        }
    }

    /// The `w ∈ Σ^{<N-1}` whose entry agrees with `t` on `M` levels.
    pub fn matched_word(&self, t: &TruncatedTree) -> Result<Option<&Word>> {
        Ok(self.index.get(&t.restrict(&Word::empty(), self.separation_depth())?))
    }

    /// Output depth is `t.depth() - 1` on both branches.
    pub fn tau_apply(&self, i: Letter, t: &TruncatedTree) -> Result<TruncatedTree> {
        let need = self.separation_depth() + 1;
        if t.depth() < need {
            return Err(Error::TooShallow { need, have: t.depth() });
        }
        match self.matched_word(t)? {
            Some(w) => self.entry(&w.child(i), t.depth() - 1),
            None => t.shift(i),
        }
    }

    /// `τ^w(t) = τ^{w_{k-1}}(… τ^{w_0}(t))`.
    pub fn tau_word(&self, w: &Word, t: &TruncatedTree) -> Result<TruncatedTree> {
        w.letters()
            .iter()
            .try_fold(t.clone(), |acc, &i| self.tau_apply(i, &acc))
    }

    /// The depth-`k` tree `φ(t)_w = τ^w(t)_ε`.
    pub fn phi_construct(&self, t: &TruncatedTree, k: usize) -> Result<TruncatedTree> {
        if k == 0 {
            return Err(Error::Precondition("output depth must be at least 1".into()));
        }
        let need = self.separation_depth() + k;
        if t.depth() < need {
            return Err(Error::TooShallow { need, have: t.depth() });
        }
        let arity = self.arity();
        let mut images: Vec<TruncatedTree> = Vec::new();
        for w in words_below(arity, k) {
            let image = match w.letters().split_last() {
                None => t.clone(),
                Some((&i, parent)) => {
                    let parent = &images[bfs_index(&Word::from(parent), arity)?];
                    self.tau_apply(i, parent)?
                }
            };
            images.push(image);
        }
        Ok(TruncatedTree::new(Block::from_fn(arity, k, |w| {
            images[bfs_index(w, arity).expect("word in range")].body().root()
        })))
    }
}

fn violation(sample: usize, step: Letter, node: Word) -> Violation {
    Violation {
        sample: Some(sample),
        word: Word::empty(),
        step: Some(Word::new(vec![step])),
        node,
    }
}

/// `τ^i(t)` and `σ^i(t)` agree on `n` levels for every sample and direction.
pub fn tau_closeness_check(tf: &TauFamily, n: usize, samples: &[TruncatedTree]) -> Result<TraceReport> {
    for (k, t) in samples.iter().enumerate() {
        for i in 0..tf.arity() as Letter {
            let tau = tf.tau_apply(i, t)?.restrict(&Word::empty(), n)?;
            let sigma = t.restrict(&Word::new(vec![i]), n)?;
            if let Some(node) = first_difference(&tau, &sigma) {
                return Ok(TraceReport::fail(violation(k, i, node), n));
            }
        }
    }
    Ok(TraceReport::pass(n))
}

/// `σ^i(φ(t)) = φ(τ^i(t))` at output depth `k - 1`.
pub fn conjugacy_check(tf: &TauFamily, samples: &[TruncatedTree], k: usize) -> Result<TraceReport> {
    if k < 2 {
        return Err(Error::Precondition("conjugacy depth must be at least 2".into()));
    }
    for (idx, t) in samples.iter().enumerate() {
        let phi = tf.phi_construct(t, k)?;
        for i in 0..tf.arity() as Letter {
            let left = phi.shift(i)?;
            let right = tf.phi_construct(&tf.tau_apply(i, t)?, k - 1)?;
            if let Some(node) = first_difference(left.body(), right.body()) {
                return Ok(TraceReport::fail(violation(idx, i, node), k - 1));
            }
        }
    }
    Ok(TraceReport::pass(k - 1))
}

/// `φ(t)` and `t` agree on `m` levels.
pub fn phi_closeness_check(tf: &TauFamily, samples: &[TruncatedTree], m: usize) -> Result<TraceReport> {
    if m == 0 {
        return Ok(TraceReport::pass(0));
    }
    for (k, t) in samples.iter().enumerate() {
        let phi = tf.phi_construct(t, m)?;
        let top = t.restrict(&Word::empty(), m)?;
        if let Some(node) = first_difference(phi.body(), &top) {
            return Ok(TraceReport::fail(
                Violation {
                    sample: Some(k),
                    word: Word::empty(),
                    step: None,
                    node,
                },
                m,
            ));
        }
    }
    Ok(TraceReport::pass(m))
}

/// `τ^w(s^(ε)) = s^(w)` on the common depth, for every `w ∈ Σ^{<N}`.
pub fn orbit_realization_check(tf: &TauFamily, depth: usize) -> Result<TraceReport> {
    let base = tf.injective().base();
    let start = tf.entry(&Word::empty(), depth)?;
    for w in base.words() {
        let image = tf.tau_word(&w, &start)?;
        let wanted = tf.entry(&w, image.depth())?;
        if let Some(node) = first_difference(image.body(), wanted.body()) {
            return Ok(TraceReport::fail(Violation::at(w, node), image.depth()));
        }
    }
    Ok(TraceReport::pass(depth - base.order() + 1))
}

/// Results of one run of [`stability_pipeline`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineReport {
    pub separation_depth: usize,
    pub replaced: Vec<Word>,
    pub samples: usize,
    pub tau_close: TraceReport,
    pub tau_certified: bool,
    pub conjugacy: TraceReport,
    pub phi_close: TraceReport,
    pub tracing: TraceReport,
}

impl PipelineReport {
    pub fn passed(&self) -> bool {
        self.tau_close.passed
            && self.tau_certified
            && self.conjugacy.passed
            && self.phi_close.passed
            && self.tracing.passed
    }
}

/// Injectivize `f`, build `τ`, and check closeness, semiconjugacy and tracing.
///
/// The samples are the entries `s^(w)` (which exercise the matched branch)
/// followed by `random_samples` random members. `φ(s^(ε))`, where `s^(ε)` is
/// a member extending `t^(ε)`, must `[m]`-trace `f`.
pub fn stability_pipeline<R: Rng + ?Sized>(
    e: &SftEngine,
    f: &PseudoOrbitFamily,
    m: usize,
    random_samples: usize,
    rng: &mut R,
) -> Result<PipelineReport> {
    let n = f.resolution();
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    let injective = injectivize(f, e)?;
    let big_m = injective.separation_depth();
    let trace_depth = f.order() - 1 + m;
    let k = CONJUGACY_DEPTH.max(trace_depth);
    let depth = big_m + k;
    let replaced = injective.replaced().to_vec();
    let tf = TauFamily::new(injective, e, depth)?;

    let mut samples: Vec<TruncatedTree> = f.words().map(|w| tf.entry(&w, depth)).collect::<Result<_>>()?;
    for _ in 0..random_samples {
        samples.push(e.random_tree(depth, rng)?);
    }

    let mut tau_certified = true;
    for t in &samples {
        for i in 0..tf.arity() as Letter {
            tau_certified &= e.certify_membership(&tf.tau_apply(i, t)?)?.is_certified();
        }
    }
    let phi = tf.phi_construct(&samples[0], trace_depth)?;
    Ok(PipelineReport {
        separation_depth: big_m,
        replaced,
        samples: samples.len(),
        tau_close: tau_closeness_check(&tf, n, &samples)?,
        tau_certified,
        conjugacy: conjugacy_check(&tf, &samples, CONJUGACY_DEPTH)?,
        phi_close: phi_closeness_check(&tf, &samples, m)?,
        tracing: verify_tracing(&phi, f, m)?,
    })
}
