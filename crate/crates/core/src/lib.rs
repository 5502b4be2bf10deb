//! Tree-shifts over labelled `|Σ|`-ary trees.
//!
//! Trees are handled through finite truncations ([`TruncatedTree`]) with an
//! explicit depth. On top of that vocabulary the crate provides
//!
//! - [`sft`]: forbidden-block presentations, the viability fixpoint computing
//!   `B_p(X)`, block languages, emptiness and perfectness,
//! - [`shadowing`]: finite pseudo-orbits, their tracing tree and the checks
//!   around it,
//! - [`stability`]: injectivized pseudo-orbits, the `τ` maps built from them
//!   and the semiconjugacy `φ`,
//! - [`openness`]: preimage witnesses showing that shift maps are open,
//! - [`families`]: the built-in shifts, including an oracle-presented shift
//!   that is open but not of finite type.

pub mod alphabet;
pub mod block;
pub mod error;
pub mod families;
pub mod openness;
pub mod sft;
pub mod shadowing;
pub mod stability;
pub mod word;

pub use alphabet::Alphabets;
pub use block::{Block, DistanceLevel, Label, Resolution, TruncatedTree};
pub use error::{Error, Result};
pub use families::ShiftSpec;
pub use sft::{Membership, NormalizedSft, SftEngine};
pub use word::{bfs_index, Letter, Word};
