//! Tree-shifts of finite type: normalization, the viability fixpoint and the
//! queries answered from it.

mod engine;
mod forbidden;
pub mod format;

pub use engine::SftEngine;
pub use forbidden::{locally_admissible, normalize, normalize_with_budget, ForbiddenSet, NormalizedSft, Pattern};

use crate::block::Label;
use crate::error::{Error, Result};
use crate::word::Word;

/// Default cap on the number of blocks any operation will materialize.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Verdict of a membership test on a truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// The truncation extends to a member of the shift.
    Certified,
    /// No member of the shift starts with the truncation; `at` locates the
    /// offending window (or row, for oracle shifts).
    NotInX { at: Word },
    /// The visible part does not decide membership.
    Undetermined,
}

impl Membership {
    pub fn is_certified(&self) -> bool {
        matches!(self, Membership::Certified)
    }
}

/// Checks `count` against `budget`.
pub(crate) fn check_budget(count: u128, budget: u64) -> Result<()> {
    if count > u128::from(budget) {
        Err(Error::BudgetExceeded { needed: count, budget })
    } else {
        Ok(())
    }
}

/// `labels^len` as a `u128`, saturating.
pub(crate) fn power(labels: usize, len: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..len {
        acc = acc.saturating_mul(labels as u128);
    }
    acc
}

/// Every label vector of length `len` in lexicographic order.
pub(crate) fn all_blocks(label_count: usize, len: usize, budget: u64) -> Result<impl Iterator<Item = Vec<Label>>> {
    check_budget(power(label_count, len), budget)?;
    let mut next = Some(vec![0 as Label; len]);
    Ok(std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        let mut carry = true;
        for slot in succ.iter_mut().rev() {
            if usize::from(*slot) + 1 < label_count {
                *slot += 1;
                carry = false;
                break;
            }
            *slot = 0;
        }
        if !carry {
            next = Some(succ);
        }
        Some(current)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_is_lexicographic() {
        let all: Vec<_> = all_blocks(2, 3, DEFAULT_BUDGET).unwrap().collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], vec![0, 0, 0]);
        assert_eq!(all[5], vec![1, 0, 1]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
        assert_eq!(all_blocks(3, 0, 1).unwrap().count(), 1);
        assert!(all_blocks(2, 25, DEFAULT_BUDGET).is_err());
    }
}
