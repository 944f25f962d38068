//! Transverse-field Ising VQE benchmark.

use crate::circuits::{build_sigma_block_ansatz, ParamCircuit};
use crate::error::Result;
use crate::rng::RngStream;
use crate::sim::{sample_observable, PauliObservable, PauliString, ShotLedger, StateVector};
use crate::tasks::spectrum;

/// Critical transverse-field Ising chain with open boundaries:
/// sum_j Z_j Z_{j+1} + sum_j X_j, all couplings 1.
pub fn tfim_hamiltonian(num_qubits: usize) -> Result<PauliObservable> {
    let mut terms = Vec::with_capacity(2 * num_qubits - 1);
    for j in 0..num_qubits - 1 {
        terms.push((1.0, PauliString::zz(j, j + 1)?));
    }
    for j in 0..num_qubits {
        terms.push((1.0, PauliString::x(j)));
    }
    PauliObservable::new(terms)
}

/// VQE benchmark: minimize the TFIM energy with a sigma-block ansatz.
#[derive(Debug, Clone)]
pub struct TfimTask {
    pub num_qubits: usize,
    pub num_blocks: usize,
    pub hamiltonian: PauliObservable,
    pub circuit: ParamCircuit,
}

pub fn build_tfim(num_qubits: usize, num_blocks: usize) -> Result<TfimTask> {
    let circuit = build_sigma_block_ansatz(num_qubits, num_blocks)?;
    Ok(TfimTask {
        num_qubits,
        num_blocks,
        hamiltonian: tfim_hamiltonian(num_qubits)?,
        circuit,
    })
}

impl TfimTask {
    /// Uniform random slot values in [0, 2pi).
    pub fn init_theta(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.circuit.num_params())
            .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
            .collect()
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        StateVector::zero_state(self.num_qubits)
    }

    pub fn ground_energy(&self) -> Result<f64> {
        spectrum::ground_energy(&self.hamiltonian, self.num_qubits)
    }

    pub fn exact_loss(&self, theta: &[f64]) -> Result<f64> {
        self.circuit
            .evaluate(theta, &self.initial_state()?)?
            .expectation(&self.hamiltonian)
    }

    pub fn sampled_loss(&self, theta: &[f64], shots: u64, rng: &mut RngStream) -> Result<f64> {
        let state = self.circuit.evaluate(theta, &self.initial_state()?)?;
        let mut ledger = ShotLedger::default();
        sample_observable(&state, &self.hamiltonian, shots, rng, None, &mut ledger)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn term_structure() {
        let task = build_tfim(8, 2).unwrap();
        assert_eq!(task.hamiltonian.num_terms(), 15); // 7 ZZ + 8 X
        assert_eq!(task.circuit.num_params(), 16);
    }

    #[test]
    fn two_qubit_ground_energy() {
        let task = build_tfim(2, 1).unwrap();
        assert_abs_diff_eq!(
            task.ground_energy().unwrap(),
            -(5.0f64.sqrt()),
            epsilon = 1e-9
        );
    }

    #[test]
    fn product_state_energy_from_expectation_oracle() {
        // On |00> the ZZ term contributes +1 and each X term 0.
        let task = build_tfim(2, 1).unwrap();
        let zero = task.initial_state().unwrap();
        assert_abs_diff_eq!(
            zero.expectation(&task.hamiltonian).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_loss_deterministic_and_lower_bounded() {
        let task = build_tfim(3, 2).unwrap();
        let mut rng = RngStream::from_seed(7);
        let ground = task.ground_energy().unwrap();
        for _ in 0..5 {
            let theta = task.init_theta(&mut rng);
            let a = task.exact_loss(&theta).unwrap();
            let b = task.exact_loss(&theta).unwrap();
            assert_eq!(a, b);
            assert!(a >= ground - 1e-9);
        }
    }

    #[test]
    fn sampled_loss_agrees_with_exact() {
        let task = build_tfim(2, 1).unwrap();
        let mut rng = RngStream::from_seed(3);
        let theta = task.init_theta(&mut rng);
        let exact = task.exact_loss(&theta).unwrap();
        let repeats = 200;
        let shots = 200;
        let draws: Vec<f64> = (0..repeats)
            .map(|_| task.sampled_loss(&theta, shots, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / repeats as f64;
        let std = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
            / (repeats - 1) as f64)
            .sqrt();
        assert!(
            (mean - exact).abs() < 5.0 * std / (repeats as f64).sqrt() + 1e-9,
            "mean {mean} vs exact {exact}"
        );
    }

    #[test]
    fn small_sizes_rejected() {
        assert!(build_tfim(1, 1).is_err());
    }
}
