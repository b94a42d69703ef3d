//! Two qubits coupled to a classically driven cavity mode.
//!
//! Exact and integrated evolution, Wootters concurrence, Magnus-expansion
//! propagators for short shaped pulses, and the quasistatic squeezed ground
//! state with its quench dynamics. Units set `ħ = 1`.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod hilbert;
pub mod integrator;
pub mod magnus;
pub mod quasistatic;
pub mod validation;
pub mod pulses;
pub mod quadrature;

pub use error::{Error, Result};
pub use hilbert::{PureState, SystemSpec};
pub use pulses::{Envelope, PulseSpec};
