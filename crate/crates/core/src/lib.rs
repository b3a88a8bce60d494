//! Polar codes with bit- and symbol-decision successive-cancellation (list)
//! decoders.
//!
//! The crate covers code construction and encoding ([`polar_code`]), the
//! BPSK/AWGN channel ([`channel`]), Arikan's message updates and the SC
//! decoder ([`sc_kernel`]), symbol-wise channel combination and the
//! symbol-decision SC decoder ([`symbol_kernel`]), list decoding with
//! two-stage pruning ([`list_decoder`]), closed-form memory/latency models
//! ([`hw_model`]), and the Monte Carlo harness and equivalence suites used by
//! the command-line tool ([`sim`], [`oracle`]).

pub mod channel;
pub mod error;
pub mod hw_model;
pub mod list_decoder;
pub mod oracle;
pub mod polar_code;
pub mod sc_kernel;
pub mod sim;
pub mod symbol_kernel;

pub use channel::LLPair;
pub use error::{Error, Result};
pub use polar_code::{CodeSpec, CrcConfig};
pub use sc_kernel::{DecodeOptions, KernelMode};
