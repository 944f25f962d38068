//! Gate types: named fixed unitaries and Pauli-generated rotations.

use crate::error::{Error, Result};
use crate::sim::pauli::PauliString;
use crate::sim::state::StateVector;
use num_complex::Complex64;
use std::fmt;

/// Fixed (parameter-free) unitaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedGate {
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    S(usize),
    Sdg(usize),
    Cnot { control: usize, target: usize },
}

impl FixedGate {
    /// 2x2 matrix for single-qubit members; `None` for CNOT.
    pub fn matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let o = Complex64::ZERO;
        let l = Complex64::ONE;
        let i = Complex64::I;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            FixedGate::X(_) => Some([[o, l], [l, o]]),
            FixedGate::Y(_) => Some([[o, -i], [i, o]]),
            FixedGate::Z(_) => Some([[l, o], [o, -l]]),
            FixedGate::H(_) => Some([[h, h], [h, -h]]),
            FixedGate::S(_) => Some([[l, o], [o, i]]),
            FixedGate::Sdg(_) => Some([[l, o], [o, -i]]),
            FixedGate::Cnot { .. } => None,
        }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            FixedGate::Cnot { control, target } => state.apply_cnot(*control, *target),
            FixedGate::X(t) | FixedGate::Y(t) | FixedGate::Z(t) | FixedGate::H(t)
            | FixedGate::S(t) | FixedGate::Sdg(t) => {
                state.apply_one_qubit(*t, self.matrix().unwrap())
            }
        }
    }

    pub fn max_qubit(&self) -> usize {
        match self {
            FixedGate::X(t) | FixedGate::Y(t) | FixedGate::Z(t) | FixedGate::H(t)
            | FixedGate::S(t) | FixedGate::Sdg(t) => *t,
            FixedGate::Cnot { control, target } => (*control).max(*target),
        }
    }
}

impl fmt::Display for FixedGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedGate::X(t) => write!(f, "X {t}"),
            FixedGate::Y(t) => write!(f, "Y {t}"),
            FixedGate::Z(t) => write!(f, "Z {t}"),
            FixedGate::H(t) => write!(f, "H {t}"),
            FixedGate::S(t) => write!(f, "S {t}"),
            FixedGate::Sdg(t) => write!(f, "SDG {t}"),
            FixedGate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
        }
    }
}

/// A rotation `exp(-i * theta * scale * P)` generated by `scale * P` for a
/// Pauli string `P`. The generator has the two eigenvalues +/- scale, so its
/// eigenvalue radius is `|scale|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    generator: PauliString,
    scale: f64,
}

impl Rotation {
    pub fn new(generator: PauliString, scale: f64) -> Result<Self> {
        if generator.is_identity() {
            return Err(Error::InvalidGate(
                "identity generator has no +/-r spectrum".into(),
            ));
        }
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::InvalidGate(format!(
                "rotation scale must be finite and non-zero, got {scale}"
            )));
        }
        Ok(Self { generator, scale })
    }

    /// Pauli rotation `R_sigma(theta) = exp(-i theta sigma / 2)`, radius 1/2.
    pub fn pauli_half(generator: PauliString) -> Result<Self> {
        Self::new(generator, 0.5)
    }

    pub fn generator(&self) -> &PauliString {
        &self.generator
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Eigenvalue radius r of the generator.
    pub fn radius(&self) -> f64 {
        self.scale.abs()
    }

    pub fn apply(&self, state: &mut StateVector, theta: f64) -> Result<()> {
        state.apply_pauli_rotation(&self.generator, theta * self.scale)
    }
}

/// Any gate the simulator can execute.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Fixed(FixedGate),
    Rotation(Rotation),
}

impl Gate {
    pub fn is_rotation(&self) -> bool {
        matches!(self, Gate::Rotation(_))
    }

    pub fn max_qubit(&self) -> Option<usize> {
        match self {
            Gate::Fixed(g) => Some(g.max_qubit()),
            Gate::Rotation(r) => r.generator().max_qubit(),
        }
    }
}

/// Applies `gate` to `state`. `theta` must be supplied exactly when the gate
/// is a rotation.
pub fn apply_gate(state: &mut StateVector, gate: &Gate, theta: Option<f64>) -> Result<()> {
    match (gate, theta) {
        (Gate::Fixed(g), None) => g.apply(state),
        (Gate::Fixed(_), Some(_)) => Err(Error::InvalidGate(
            "angle supplied for a fixed gate".into(),
        )),
        (Gate::Rotation(r), Some(theta)) => r.apply(state, theta),
        (Gate::Rotation(_), None) => Err(Error::InvalidGate(
            "rotation gate requires an angle".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_matrices_are_unitary() {
        let gates = [
            FixedGate::X(0),
            FixedGate::Y(0),
            FixedGate::Z(0),
            FixedGate::H(0),
            FixedGate::S(0),
            FixedGate::Sdg(0),
        ];
        for g in gates {
            let m = g.matrix().unwrap();
            // M * M^dagger = I
            for row in 0..2 {
                for col in 0..2 {
                    let mut acc = Complex64::ZERO;
                    for k in 0..2 {
                        acc += m[row][k] * m[col][k].conj();
                    }
                    let expect = if row == col { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!((acc - expect).norm(), 0.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn x_gate_maps_zero_to_one() {
        let mut s = StateVector::zero_state(1).unwrap();
        apply_gate(&mut s, &Gate::Fixed(FixedGate::X(0)), None).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_angle_contract() {
        let mut s = StateVector::zero_state(1).unwrap();
        let rot = Gate::Rotation(Rotation::pauli_half(PauliString::z(0)).unwrap());
        assert!(apply_gate(&mut s, &rot, None).is_err());
        assert!(apply_gate(&mut s, &Gate::Fixed(FixedGate::X(0)), Some(0.1)).is_err());
        apply_gate(&mut s, &rot, Some(0.0)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rx_pi_gives_minus_i_one() {
        // exp(-i pi X / 2)|0> = -i|1>
        let mut s = StateVector::zero_state(1).unwrap();
        let rot = Gate::Rotation(Rotation::pauli_half(PauliString::x(0)).unwrap());
        apply_gate(&mut s, &rot, Some(std::f64::consts::PI)).unwrap();
        let a1 = s.amplitudes()[1];
        assert_abs_diff_eq!((a1 - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_rotations_rejected() {
        assert!(Rotation::new(PauliString::identity(), 1.0).is_err());
        assert!(Rotation::new(PauliString::z(0), 0.0).is_err());
        assert!(Rotation::new(PauliString::z(0), f64::NAN).is_err());
    }

    #[test]
    fn gate_targets_validated() {
        let mut s = StateVector::zero_state(2).unwrap();
        assert!(apply_gate(&mut s, &Gate::Fixed(FixedGate::X(2)), None).is_err());
        assert!(apply_gate(
            &mut s,
            &Gate::Fixed(FixedGate::Cnot { control: 0, target: 0 }),
            None
        )
        .is_err());
    }
}
