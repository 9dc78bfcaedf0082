//! Independent verification engines for the closed forms in [`crate::attacks`]
//! and the vacuum-measurement property relied on by the key-rate bounds.

mod discrimination;
mod fock;
mod sim;

pub use discrimination::{discriminate_brute_force, helstrom_bound, helstrom_bound_states, DensityMatrix};
pub use fock::{verify_vacuum_commutation, FockBasis, FockOpKind, FockOpSpec, MAX_FOCK_DIM};
pub use sim::{resolve_clicks, simulate_faked_states, simulate_time_shift, SimStats};
