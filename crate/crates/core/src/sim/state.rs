//! Dense statevector storage and gate kernels.
//!
//! Amplitudes are a flat array indexed by bitstring with qubit 0 as the least
//! significant bit.

use crate::error::{Error, Result};
use crate::sim::pauli::{PauliObservable, PauliString};
use num_complex::Complex64;

/// Hard cap on the register size; 24 qubits is 256 MiB of amplitudes.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// |0...0> on `num_qubits` qubits.
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "qubit count {num_qubits} outside [1, {MAX_QUBITS}]"
            )));
        }
        let mut amps = vec![Complex64::ZERO; 1 << num_qubits];
        amps[0] = Complex64::ONE;
        Ok(Self { amps, num_qubits })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the 2-norm must be 1 within 1e-8; the stored amplitudes are
    /// rescaled to unit norm exactly.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "qubit count {num_qubits} outside [1, {MAX_QUBITS}]"
            )));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr.sqrt() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!(
                "amplitudes have 2-norm {}, expected 1",
                norm_sqr.sqrt()
            )));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        let amps = amps.into_iter().map(|a| a * scale).collect();
        Ok(Self { amps, num_qubits })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born-rule probabilities over computational basis states.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Applies an arbitrary 2x2 unitary to `target`.
    pub fn apply_one_qubit(&mut self, target: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        self.check_qubit(target)?;
        let stride = 1usize << target;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0][0] * x0 + m[0][1] * x1;
                *a1 = m[1][0] * x0 + m[1][1] * x1;
            }
        }
        Ok(())
    }

    /// exp(-i alpha X_target): scalar kernel for the hot path.
    fn apply_x_rotation(&mut self, target: usize, cos: f64, sin: f64) {
        let stride = 1usize << target;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = Complex64::new(cos * x0.re + sin * x1.im, cos * x0.im - sin * x1.re);
                *a1 = Complex64::new(cos * x1.re + sin * x0.im, cos * x1.im - sin * x0.re);
            }
        }
    }

    /// exp(-i alpha Y_target): real rotation matrix, scalar kernel.
    fn apply_y_rotation(&mut self, target: usize, cos: f64, sin: f64) {
        let stride = 1usize << target;
        for chunk in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = Complex64::new(cos * x0.re - sin * x1.re, cos * x0.im - sin * x1.im);
                *a1 = Complex64::new(cos * x1.re + sin * x0.re, cos * x1.im + sin * x0.im);
            }
        }
    }

    /// Multiplies each amplitude by `phases[index[b]]`; the caller supplies a
    /// per-basis-state phase index (used for fused diagonal gate runs).
    pub(crate) fn apply_indexed_phases(&mut self, index: &[u32], phases: &[Complex64]) {
        debug_assert_eq!(index.len(), self.amps.len());
        for (amp, &idx) in self.amps.iter_mut().zip(index) {
            *amp *= phases[idx as usize];
        }
    }

    /// CNOT with the given control and target.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidGate(
                "CNOT control and target must differ".into(),
            ));
        }
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// Phase of `P|b>` relative to `|b ^ flip>`: `i^y * (-1)^popcount(b & phase_mask)`.
    #[inline]
    fn pauli_phase(b: usize, phase_mask: u64, y_phase: Complex64) -> Complex64 {
        if (b as u64 & phase_mask).count_ones() % 2 == 0 {
            y_phase
        } else {
            -y_phase
        }
    }

    #[inline]
    fn y_phase(y_count: usize) -> Complex64 {
        match y_count % 4 {
            0 => Complex64::ONE,
            1 => Complex64::I,
            2 => -Complex64::ONE,
            _ => -Complex64::I,
        }
    }

    fn check_string(&self, p: &PauliString) -> Result<()> {
        if let Some(q) = p.max_qubit() {
            self.check_qubit(q)?;
        }
        Ok(())
    }

    /// Applies a Pauli string in place.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_string(p)?;
        let flip = p.flip_mask() as usize;
        let phase_mask = p.phase_mask();
        let y_phase = Self::y_phase(p.y_count());
        if flip == 0 {
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= Self::pauli_phase(b, phase_mask, y_phase);
            }
        } else {
            for b in 0..self.amps.len() {
                let partner = b ^ flip;
                if b < partner {
                    let (ab, ap) = (self.amps[b], self.amps[partner]);
                    self.amps[b] = Self::pauli_phase(partner, phase_mask, y_phase) * ap;
                    self.amps[partner] = Self::pauli_phase(b, phase_mask, y_phase) * ab;
                }
            }
        }
        Ok(())
    }

    /// Applies `exp(-i * alpha * P)` in place.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, alpha: f64) -> Result<()> {
        self.check_string(p)?;
        let (sin, cos) = alpha.sin_cos();
        let flip = p.flip_mask() as usize;
        let phase_mask = p.phase_mask();
        let y_phase = Self::y_phase(p.y_count());
        let minus_i_sin = Complex64::new(0.0, -sin);
        if flip == 0 {
            // Diagonal generator: per-amplitude phase exp(-i alpha (+/-1)).
            let plus = Complex64::new(cos, -sin);
            let minus = Complex64::new(cos, sin);
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= if (b as u64 & phase_mask).count_ones() % 2 == 0 {
                    plus
                } else {
                    minus
                };
            }
            return Ok(());
        }
        if let [(target, letter)] = *p.factors() {
            // Single-qubit generator: branch-free stride kernels.
            match letter {
                crate::sim::pauli::Pauli::X => self.apply_x_rotation(target, cos, sin),
                crate::sim::pauli::Pauli::Y => self.apply_y_rotation(target, cos, sin),
                crate::sim::pauli::Pauli::Z => unreachable!("diagonal handled above"),
            }
            return Ok(());
        }
        // General case: visit each (b, b ^ flip) pair once by walking the
        // indices whose lowest flipped bit is zero.
        let stride = flip & flip.wrapping_neg();
        let block = stride << 1;
        let n = self.amps.len();
        let mut base = 0;
        while base < n {
            for b in base..base + stride {
                let partner = b ^ flip;
                let (ab, ap) = (self.amps[b], self.amps[partner]);
                let phase_from_partner = Self::pauli_phase(partner, phase_mask, y_phase);
                let phase_from_b = Self::pauli_phase(b, phase_mask, y_phase);
                self.amps[b] = cos * ab + minus_i_sin * phase_from_partner * ap;
                self.amps[partner] = cos * ap + minus_i_sin * phase_from_b * ab;
            }
            base += block;
        }
        Ok(())
    }

    /// Exact expectation value `<psi|P|psi>` of a single Pauli string.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_string(p)?;
        let flip = p.flip_mask() as usize;
        let phase_mask = p.phase_mask();
        let y_phase = Self::y_phase(p.y_count());
        let mut acc = Complex64::ZERO;
        for b in 0..self.amps.len() {
            let target = b ^ flip;
            acc += self.amps[target].conj() * Self::pauli_phase(b, phase_mask, y_phase)
                * self.amps[b];
        }
        debug_assert!(
            acc.im.abs() < 1e-9,
            "imaginary residue {} in Pauli expectation",
            acc.im
        );
        Ok(acc.re)
    }

    /// Exact expectation value of a weighted Pauli sum.
    pub fn expectation(&self, obs: &PauliObservable) -> Result<f64> {
        let mut total = 0.0;
        for (coeff, string) in obs.terms() {
            total += coeff * self.pauli_expectation(string)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_state_normalized() {
        let s = StateVector::zero_state(3).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        let s = StateVector::from_amplitudes(vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        assert_eq!(s.num_qubits(), 1);
    }

    #[test]
    fn pauli_x_flips_basis_state() {
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_pauli(&PauliString::x(0)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[0].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pauli_y_phases() {
        // Y|0> = i|1>, Y|1> = -i|0>
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_pauli(&PauliString::y(0)).unwrap();
        assert_abs_diff_eq!((s.amplitudes()[1] - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-12);
        s.apply_pauli(&PauliString::y(0)).unwrap();
        // Y^2 = I
        assert_abs_diff_eq!((s.amplitudes()[0] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn x_rotation_by_pi_gives_minus_i_x() {
        // exp(-i (pi/2) X) |0> = -i |1>  (alpha = theta*scale = pi * 1/2)
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_pauli_rotation(&PauliString::x(0), std::f64::consts::FRAC_PI_2)
            .unwrap();
        assert_abs_diff_eq!((s.amplitudes()[1] - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_angle_rotation_is_identity() {
        let mut s = StateVector::zero_state(2).unwrap();
        let before = s.clone();
        s.apply_pauli_rotation(&PauliString::zz(0, 1).unwrap(), 0.0)
            .unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn rotations_preserve_norm() {
        let mut s = StateVector::zero_state(3).unwrap();
        let strings = [
            PauliString::x(0),
            PauliString::parse_dense("XYZ").unwrap(),
            PauliString::zz(1, 2).unwrap(),
            PauliString::y(1),
        ];
        for (i, p) in strings.iter().enumerate() {
            s.apply_pauli_rotation(p, 0.3 + i as f64).unwrap();
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectation_basics() {
        let s = StateVector::zero_state(1).unwrap();
        assert_abs_diff_eq!(s.pauli_expectation(&PauliString::z(0)).unwrap(), 1.0);
        // |+> via H
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            StateVector::from_amplitudes(vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        assert_abs_diff_eq!(plus.pauli_expectation(&PauliString::z(0)).unwrap(), 0.0);
        assert_abs_diff_eq!(plus.pauli_expectation(&PauliString::x(0)).unwrap(), 1.0);
    }

    #[test]
    fn expectation_out_of_range_errors() {
        let s = StateVector::zero_state(1).unwrap();
        assert!(s.pauli_expectation(&PauliString::z(5)).is_err());
    }

    #[test]
    fn cnot_entangles() {
        // (|0> + |1>)/sqrt2 on control qubit 0, then CNOT(0 -> 1) gives Bell state
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = StateVector::from_amplitudes(vec![
            c(h, 0.0),
            c(h, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ])
        .unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[3].re, h, epsilon = 1e-12);
        let zz = PauliObservable::single(1.0, PauliString::zz(0, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(s.expectation(&zz).unwrap(), 1.0, epsilon = 1e-12);
    }
}
