//! Quantum chromatic gaps via Pultr functors and label-cover reductions.
//!
//! Finite relational structures, weighted CSPs with classical and quantum
//! values, exact operator assignments, and the constructions that carry
//! quantum homomorphisms between templates.

pub mod colouring;
pub mod csp;
pub mod dkkms;
pub mod dmr;
pub mod error;
pub mod f2linalg;
pub mod pultr;
pub mod qop;
pub mod relstruct;

pub use error::{Error, Result};
