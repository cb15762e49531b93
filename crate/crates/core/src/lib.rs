//! Verifiable LIME explanations for committed, confidential classifiers.
//!
//! A model owner commits to fixed-point weights, answers each query with a
//! label, a top-K LIME explanation and a certificate, and a verifier replays
//! the certificate against the committed weights.

pub mod crypto;
pub mod encoding;
pub mod eval;
pub mod lime;
pub mod model;
pub mod numeric;
pub mod protocol;
pub mod relation;
