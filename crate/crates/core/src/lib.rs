//! Security analysis of BB84 key distribution with bit- and
//! basis-dependent detector flaws.
//!
//! * [`attacks`] evaluates eavesdropping attacks that exploit detector
//!   efficiency mismatch and the region of `(E, eta)` they break.
//! * [`keyrates`] evaluates the corresponding provable lower bounds.
//! * [`channels`] extracts the mismatch parameter `eta` from efficiency
//!   curves and transfer-matrix models.
//! * [`oracle`] holds independent checks: Monte Carlo attack simulations,
//!   brute-force state discrimination and a truncated Fock-space test.

pub mod attacks;
pub mod channels;
pub mod error;
pub mod keyrates;
pub mod mathcore;
pub mod oracle;

pub use error::{Error, Result};
