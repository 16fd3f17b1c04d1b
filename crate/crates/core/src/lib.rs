//! Transient dynamics of a three-qubit absorption refrigerator.
//!
//! Three qubits (cold `C`, refrigerator `R`, hot `H`) with `E_R = E_C + E_H`
//! exchange excitations through `|010> <-> |101>` while each is reset towards
//! its own bath at rate `p_i`. The dynamics closes on the seven leading
//! diagonal populations plus the single coherence `rho_36`, which is what
//! [`liouvillian::ReducedSystem`] evolves.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod integrate;
pub mod liouvillian;
pub mod observables;
pub mod spectral;

pub use error::{Error, Result};
pub use hilbert::{MachineParams, MachineSpec, Qubit};
