//! Deterministic simulation of RAM-based random number generation on passive
//! RFID tags.
//!
//! The crate models SRAM power-up state and data remanence on a simulated
//! tag ([`sram`]), extracts random bits from uninitialized memory with the PH
//! universal hash ([`extractor`]), measures and budgets the resulting entropy
//! ([`entropy`]), replays the power-off decay experiment with logistic
//! fitting ([`remanence`]) and runs HB+ authentication on harvested bits,
//! including the attacks that keep a tag powered ([`protocol`]).
//!
//! ```
//! use sram_entropy::entropy::budget;
//!
//! let row = budget(376, 0.103, 17_920, 30)?;
//! assert_eq!(row.harvests, 58);
//! # Ok::<(), sram_entropy::Error>(())
//! ```
//!
//! A narrative guide with runnable snippets lives in `book/`; its code blocks
//! are compiled as doctests of this crate.

pub mod bits;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod protocol;
pub mod remanence;
pub mod rng;
pub mod sram;
pub mod wide;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sram-model.md")]
    mod sram_model {}
    #[doc = include_str!("../../../book/src/extractor.md")]
    mod extractor {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/remanence.md")]
    mod remanence {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
