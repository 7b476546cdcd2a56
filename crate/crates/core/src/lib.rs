//! # ternhash
//!
//! Ternary hashing as a post-processing step for any learned binary hash
//! function. Real-valued network outputs are mapped to trits in
//! `{-1, 0, +1}` using a per-bit pair of thresholds; the band between the
//! thresholds is the UNKNOWN state, which absorbs outputs that a single sign
//! threshold would assign almost at random.
//!
//! The crate is organised along the pipeline:
//!
//! - [`trit`]: trits, the Łukasiewicz / Kleene / Bochvar equivalence tables
//!   and the scalar ternary Hamming distance.
//! - [`packed`]: two-bits-per-trit machine representation and XOR/popcount
//!   distance kernels.
//! - [`threshold`]: histogram-based exhaustive double-threshold search.
//! - [`encoder`]: sign and double-threshold encoders.
//! - [`eval`]: mAP@k, positive/negative distance histograms, overlap,
//!   ambiguity rate and the Poisson binomial PMF.
//! - [`io`]: `TRNH` / `TRNC` / `TRNT` binary formats, CSV features and the
//!   seeded synthetic feature generator.
//! - [`bench`]: 1-query-vs-database timing harness.
//! - [`cli`]: the `ternhash` command line front end.
//!
//! ```
//! use ternhash::trit::{thd_vector, Logic, Trit};
//! use ternhash::packed::{thd_kleene_packed, PackedTernaryCode};
//!
//! let a = [Trit::Pos, Trit::Unknown, Trit::Neg];
//! let d = thd_vector(&a, &a, Logic::Kleene).unwrap();
//! assert_eq!(d.value(), 0.5);
//!
//! let pa = PackedTernaryCode::pack(&a);
//! assert_eq!(thd_kleene_packed(&pa, &pa).unwrap(), d);
//! ```

pub mod bench;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod io;
pub mod packed;
pub mod threshold;
pub mod trit;

pub use error::{Error, Result};
pub use packed::{Metric, PackedBinaryCode, PackedTernaryCode};
pub use threshold::{ThresholdPair, ThresholdTable};
pub use trit::{Logic, TernaryDistance, Trit};
