//! Dense statevector simulation: gate application, exact expectation values,
//! and finite-shot measurement sampling of Pauli observables.

pub mod gate;
pub mod pauli;
pub mod sample;
pub mod state;

pub use gate::{apply_gate, FixedGate, Gate, Rotation};
pub use pauli::{Pauli, PauliObservable, PauliString};
pub use sample::{sample_observable, sample_term, sample_terms_shared, ShotLedger};
pub use state::{StateVector, MAX_QUBITS};
