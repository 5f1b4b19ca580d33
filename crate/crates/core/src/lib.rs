//! Adversary bounds for learning symmetric juntas.
//!
//! The crate evaluates weighted Krawtchouk vectors, builds finite-size
//! adversary matrices from Johnson-scheme projectors, solves the limiting
//! Krawtchouk-block program with a cutting-plane method, and verifies
//! explicit dual certificates for group testing, exact-half and majority.

pub mod adversary;
pub mod cgt;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod halfmaj;
pub mod johnson;
pub mod krawtchouk;
pub mod linalg;
pub mod quadrature;
pub mod simplex;
pub mod theorem4;
pub mod weights;

pub use error::{Error, Result};
