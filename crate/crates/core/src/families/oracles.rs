use rand::{Rng, RngCore};

use crate::alphabet::Alphabets;
use crate::block::{Block, Label, TruncatedTree};
use crate::error::{Error, Result};
use crate::openness::one_zero_row_witness;
use crate::sft::Membership;
use crate::word::{checked_node_count, level_width, Letter, Word};

use super::{non_sft_witness, ShiftOracle};

// Both oracles are defined by a constraint that a truncation either already
// violates or can be completed by padding with `1`, so `certify` is exact.

fn zero_positions(t: &Block) -> impl Iterator<Item = usize> + '_ {
    t.labels().iter().enumerate().filter(|(_, &l)| l == 0).map(|(i, _)| i)
}

fn binary(arity: usize) -> Alphabets {
    Alphabets::new(arity, ["0", "1"]).expect("binary labels")
}

fn check_height(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Precondition("block height must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Trees with no two zeros on the same level.
#[derive(Clone, Debug)]
pub struct OneZeroRow {
    alphabets: Alphabets,
}

impl OneZeroRow {
    pub fn new(arity: usize) -> Self {
        OneZeroRow {
            alphabets: binary(arity),
        }
    }

    fn arity(&self) -> usize {
        self.alphabets.arity()
    }

    /// Options per level, in canonical order: a zero at position `0..width`,
    /// then no zero.
    fn options(&self, n: usize) -> Vec<usize> {
        (0..n).map(|k| level_width(self.arity(), k) + 1).collect()
    }
}

impl Default for OneZeroRow {
    fn default() -> Self {
        OneZeroRow::new(2)
    }
}

impl ShiftOracle for OneZeroRow {
    fn name(&self) -> &str {
        "one-zero-row"
    }

    fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    fn certify(&self, t: &TruncatedTree) -> Result<Membership> {
        self.alphabets.check_block(t.body())?;
        for k in 0..t.depth() {
            let zeros: Vec<usize> = t
                .body()
                .level(k)
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == 0)
                .map(|(j, _)| j)
                .collect();
            if zeros.len() > 1 {
                return Ok(Membership::NotInX {
                    at: Word::from_position(zeros[1], k, self.arity()),
                });
            }
        }
        Ok(Membership::Certified)
    }

    /// `∏_{k<n} (|Σ|^k + 1)`.
    fn block_count(&self, n: usize) -> Result<u128> {
        check_height(n)?;
        self.options(n)
            .iter()
            .try_fold(1u128, |acc, &o| acc.checked_mul(o as u128))
            .ok_or(Error::CountOverflow)
    }

    fn for_each_block(&self, n: usize, f: &mut dyn FnMut(Block)) -> Result<()> {
        check_height(n)?;
        let options = self.options(n);
        let mut choice = vec![0usize; n];
        loop {
            f(Block::from_fn(self.arity(), n, |w| {
                let k = w.len();
                (choice[k] != w.position(self.arity())) as Label
            }));
            let mut k = n;
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < options[k] {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    fn sample(&self, depth: usize, rng: &mut dyn RngCore) -> Result<TruncatedTree> {
        check_height(depth)?;
        let choice: Vec<usize> = self.options(depth).iter().map(|&o| rng.gen_range(0..o)).collect();
        Ok(TruncatedTree::new(Block::from_fn(self.arity(), depth, |w| {
            (choice[w.len()] != w.position(self.arity())) as Label
        })))
    }

    fn has_preimage_witness(&self) -> bool {
        true
    }

    fn preimage_witness(&self, i: Letter, b: &Block, s: &TruncatedTree) -> Option<Result<TruncatedTree>> {
        // any member of [b] serves as t̃; b padded with ones is one
        let depth = b.height().max(s.depth() + 1);
        let padded = TruncatedTree::new(Block::from_fn(self.arity(), depth, |w| b.get(w).unwrap_or(1)));
        Some(one_zero_row_witness(i, b, s, &padded))
    }

    fn gap_witness(&self, n: usize) -> Option<TruncatedTree> {
        (n >= 1).then(|| non_sft_witness(self.arity(), n))
    }
}

/// Trees with at most one zero overall. `σ^0` maps the cylinder of the root
/// zero with ones below onto the single all-ones tree, which is not open.
#[derive(Clone, Debug)]
pub struct AtMostOneZero {
    alphabets: Alphabets,
}

impl AtMostOneZero {
    pub fn new(arity: usize) -> Self {
        AtMostOneZero {
            alphabets: binary(arity),
        }
    }
}

impl Default for AtMostOneZero {
    fn default() -> Self {
        AtMostOneZero::new(2)
    }
}

impl ShiftOracle for AtMostOneZero {
    fn name(&self) -> &str {
        "at-most-one-zero"
    }

    fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    fn certify(&self, t: &TruncatedTree) -> Result<Membership> {
        self.alphabets.check_block(t.body())?;
        Ok(match zero_positions(t.body()).nth(1) {
            Some(idx) => Membership::NotInX {
                at: Word::from_bfs_index(idx, t.arity()),
            },
            None => Membership::Certified,
        })
    }

    fn block_count(&self, n: usize) -> Result<u128> {
        check_height(n)?;
        checked_node_count(self.alphabets.arity(), n)
            .map(|c| c as u128 + 1)
            .ok_or(Error::CountOverflow)
    }

    fn for_each_block(&self, n: usize, f: &mut dyn FnMut(Block)) -> Result<()> {
        let count = self.block_count(n)? as usize;
        for zero in 0..count {
            f(Block::from_raw(
                self.alphabets.arity(),
                n,
                (0..count - 1).map(|j| (j != zero) as Label).collect(),
            ));
        }
        Ok(())
    }

    fn sample(&self, depth: usize, rng: &mut dyn RngCore) -> Result<TruncatedTree> {
        let count = self.block_count(depth)? as usize;
        let zero = rng.gen_range(0..count);
        Ok(TruncatedTree::new(Block::from_raw(
            self.alphabets.arity(),
            depth,
            (0..count - 1).map(|j| (j != zero) as Label).collect(),
        )))
    }
}
