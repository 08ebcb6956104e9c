//! Constructive Ville sequences.
//!
//! Given an enumerated family of selection functions f1 = always, f2, f3, ...,
//! this crate builds a binary sequence bit by bit such that no prefix holds
//! more 1s than 0s, yet every function that selects infinitely many positions
//! sees a limiting frequency of 1/2. The [`analysis`] module checks those
//! properties, and the finer structural facts behind them, on finite prefixes.
//!
//! ```
//! use ville_core::{build, builtin_family, RunConfig, ThresholdRule};
//!
//! let family = builtin_family("two-fn").unwrap();
//! let run = build(&RunConfig::new(family, 7, ThresholdRule::exp(3).unwrap())).unwrap();
//! assert_eq!(run.bits.to_text(), "0101001");
//! ```

pub mod analysis;
pub mod bits;
pub mod construction;
pub mod driver;
pub mod error;
pub mod selection;

pub use bits::BitSequence;
pub use construction::{
    compute_active_set, compute_cutoff, parity_bit, ActiveSet, ConstructionState, CountLedger,
    ParityLedger, StageRecord, ThresholdRule,
};
pub use driver::{build, build_finite, stream, Run, RunConfig, Stream, Trace, TraceRetention};
pub use error::{Error, Result};
pub use selection::{
    builtin_family, evaluate, parse_family, BitPattern, Decision, Family, PrefixState, PrefixView,
    SelectionSpec, SuffixBinary, TailGenerator,
};
