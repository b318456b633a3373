//! Integer Heisenberg groups H^{2n+1} as a platform for the
//! Anshel–Anshel–Goldfeld (AAG) commutator key exchange, together with a
//! memory-bounded length-based attack and a reproducible experiment harness.
//!
//! The crate is organized in layers:
//!
//! - [`group`]: exact normal-form arithmetic for H^{2n+1} (closed forms,
//!   overflow-checked).
//! - [`collect`]: a generic collection engine for polycyclic presentations,
//!   kept arithmetically independent of [`group`] so the two serve as
//!   correctness oracles for each other.
//! - [`aag`]: the key-exchange protocol — public sets, private keys, captured
//!   transcripts, shared-key derivation.
//! - [`lba`]: the length-based attack, a beam search over conjugating words
//!   with bounded memory.
//! - [`experiment`]: seeded multi-trial campaigns, parameter grids, CSV/JSON
//!   reporting.

pub mod aag;
pub mod collect;
pub mod error;
pub mod experiment;
pub mod group;
pub mod lba;

pub use aag::{PrivateKey, PublicSet, Session};
pub use collect::{heisenberg_presentation, PcPresentation};
pub use error::{Error, Result};
pub use group::{Element, GroupParams, Sign, Word};
pub use lba::{AttackBudget, AttackConfig, AttackOutcome, AttackResult, CapturedInstance};
