//! Exact ground energies of small Pauli-sum Hamiltonians.

use crate::error::{Error, Result};
use crate::sim::PauliObservable;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense diagonalization is limited to this register size.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Ground-state energy of `obs` on `num_qubits` qubits. Diagonal (Z-only)
/// Hamiltonians are minimized by bitstring enumeration up to 24 qubits;
/// everything else is densely diagonalized up to [`MAX_DENSE_QUBITS`].
pub fn ground_energy(obs: &PauliObservable, num_qubits: usize) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::InvalidObservable(
            "empty observable has no spectrum".into(),
        ));
    }
    if let Some(max) = obs.max_qubit() {
        if max >= num_qubits {
            return Err(Error::QubitOutOfRange {
                index: max,
                num_qubits,
            });
        }
    }
    let diagonal = obs.terms().iter().all(|(_, s)| s.flip_mask() == 0);
    if diagonal {
        if num_qubits > crate::sim::MAX_QUBITS {
            return Err(Error::InvalidObservable(format!(
                "{num_qubits} qubits exceeds the enumeration limit"
            )));
        }
        return Ok(diagonal_minimum(obs, num_qubits));
    }
    if num_qubits > MAX_DENSE_QUBITS {
        return Err(Error::InvalidObservable(format!(
            "dense diagonalization is capped at {MAX_DENSE_QUBITS} qubits, got {num_qubits}"
        )));
    }
    let matrix = dense_matrix(obs, num_qubits);
    let eigen = nalgebra::SymmetricEigen::new(matrix);
    Ok(eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

/// Minimum of a diagonal Hamiltonian over computational basis states.
fn diagonal_minimum(obs: &PauliObservable, num_qubits: usize) -> f64 {
    let mut best = f64::INFINITY;
    for bits in 0..(1u64 << num_qubits) {
        let mut energy = 0.0;
        for (coeff, string) in obs.terms() {
            let sign = if (bits & string.phase_mask()).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            energy += coeff * sign;
        }
        best = best.min(energy);
    }
    best
}

/// Dense Hermitian matrix of the observable in the computational basis.
pub fn dense_matrix(obs: &PauliObservable, num_qubits: usize) -> DMatrix<Complex64> {
    let dim = 1usize << num_qubits;
    let mut m = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for (coeff, string) in obs.terms() {
        let flip = string.flip_mask() as usize;
        let phase_mask = string.phase_mask();
        let y_phase = match string.y_count() % 4 {
            0 => Complex64::ONE,
            1 => Complex64::I,
            2 => -Complex64::ONE,
            _ => -Complex64::I,
        };
        for col in 0..dim {
            let sign = if (col as u64 & phase_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(col ^ flip, col)] += coeff * sign * y_phase;
        }
    }
    m
}
