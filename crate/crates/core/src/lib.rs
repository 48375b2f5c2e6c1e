//! Partial spectral form factor of dual-unitary brickwork circuits.
//!
//! * [`circuit`] builds disordered Floquet operators and averages the PSFF
//!   over realizations at finite size.
//! * [`tdl`] evaluates the PSFF in the thermodynamic limit from cyclic
//!   permutations, a Gram matrix and its Weingarten inverse.
//! * [`rmt`] holds the random-matrix and Poissonian references.
//! * [`transfer`] builds small folded transfer operators and checks them.

pub mod circuit;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod perm;
pub mod rmt;
pub mod rng;
pub mod series;
pub mod tdl;
pub mod transfer;

pub use error::{PsffError, Result};
