//! Online optimization of the program state of a programmable quantum
//! processor.
//!
//! A fixed processor turns a program state `π` into a channel; the optimizer
//! chooses `π` round by round, sees the channel the adversary wanted, pays a
//! simulation loss and updates `π` with matrix exponentiated gradient descent.
//!
//! ```
//! use qprog::channels::{choi_of_channel, dephasing_channel};
//! use qprog::losses::{trace_loss};
//! use qprog::processor::GtpProcessor;
//!
//! let target = choi_of_channel(&dephasing_channel(0.3).unwrap());
//! let gtp = GtpProcessor::new();
//! let sim = gtp.lambda(&target.to_density()).unwrap();
//! assert!(trace_loss(&target, &sim).unwrap() < 1e-10);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod channels;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod losses;
pub mod megd;
pub mod processor;
pub mod random;

pub use error::{Error, Result};
