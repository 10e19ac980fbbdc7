//! Key storage compression by key linking.
//!
//! Resource keys are chained into a derivation forest: a key may derive
//! another only when the deriving resource's privileged user set is a
//! proper subset of the derived one's, so linking never widens access.
//! On top of that sit the storage lower bound ceil(m/n), a greedy and an
//! exhaustive linking algorithm, an HMAC-SHA-256 instantiation of the
//! derivation step, three sensor-network key pre-distribution schemes,
//! and a brute-force audit of per-user and coalition entitlements.

pub mod access;
pub mod audit;
pub mod error;
pub mod gen;
pub mod kdf;
pub mod kps;
pub mod linker;

pub use error::{Error, Result};
