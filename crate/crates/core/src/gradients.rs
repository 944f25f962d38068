//! Parameter-shift rules, exact gradients, and the gradient-norm bound.
//!
//! A slot bound to several gates gets one two-term rule per gate, each entry
//! shifting only its own gate's angle. Adding the shift to the slot value
//! instead would move every bound gate at once, which is a different (and
//! wrong) derivative.

use crate::circuits::ParamCircuit;
use crate::error::{Error, Result};
use crate::sim::{PauliObservable, StateVector};

/// One term of a parameter-shift rule: evaluate the expectation with `shift`
/// added to the angle of the gate at `gate_index` and weigh it by `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftTerm {
    pub gamma: f64,
    pub shift: f64,
    pub gate_index: usize,
}

/// Per-slot shift rules for a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRule {
    slots: Vec<Vec<ShiftTerm>>,
}

impl ShiftRule {
    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn terms(&self, slot: usize) -> Result<&[ShiftTerm]> {
        self.slots
            .get(slot)
            .map(Vec::as_slice)
            .ok_or(Error::SlotOutOfRange {
                slot,
                num_params: self.slots.len(),
            })
    }

    /// K for the slot: the number of expectation evaluations its rule takes.
    pub fn num_terms(&self, slot: usize) -> Result<usize> {
        Ok(self.terms(slot)?.len())
    }
}

/// Builds the shift rule for every slot of `circuit`. Each bound gate is a
/// Pauli-string rotation with eigenvalue radius r, contributing the two-term
/// rule (+r at +pi/(4r), -r at -pi/(4r)) targeting that gate alone.
pub fn derive_shift_rule(circuit: &ParamCircuit) -> Result<ShiftRule> {
    let mut slots = Vec::with_capacity(circuit.num_params());
    for slot in 0..circuit.num_params() {
        let mut entries = Vec::new();
        for gate_index in circuit.gates_for_slot(slot) {
            let rotation = circuit.gates()[gate_index].rotation().ok_or_else(|| {
                Error::InvalidCircuit(format!(
                    "slot {slot} is bound to non-rotation gate {gate_index}"
                ))
            })?;
            let r = rotation.radius();
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::InvalidGate(format!(
                    "gate {gate_index} has eigenvalue radius {r}, expected > 0"
                )));
            }
            let shift = std::f64::consts::FRAC_PI_4 / r;
            entries.push(ShiftTerm {
                gamma: r,
                shift,
                gate_index,
            });
            entries.push(ShiftTerm {
                gamma: -r,
                shift: -shift,
                gate_index,
            });
        }
        slots.push(entries);
    }
    Ok(ShiftRule { slots })
}

/// Exact partial derivative of `<obs>` with respect to `slot`, evaluated by
/// the shift rule with exact expectation values.
pub fn exact_partial(
    circuit: &ParamCircuit,
    obs: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
    slot: usize,
) -> Result<f64> {
    let rule = derive_shift_rule(circuit)?;
    exact_partial_with_rule(circuit, obs, theta, initial, &rule, slot)
}

pub fn exact_partial_with_rule(
    circuit: &ParamCircuit,
    obs: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
    rule: &ShiftRule,
    slot: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    for term in rule.terms(slot)? {
        let state =
            circuit.evaluate_with_gate_shift(theta, initial, term.gate_index, term.shift)?;
        acc += term.gamma * state.expectation(obs)?;
    }
    Ok(acc)
}

/// Exact gradient over all slots.
pub fn exact_gradient(
    circuit: &ParamCircuit,
    obs: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
) -> Result<Vec<f64>> {
    let rule = derive_shift_rule(circuit)?;
    (0..circuit.num_params())
        .map(|slot| exact_partial_with_rule(circuit, obs, theta, initial, &rule, slot))
        .collect()
}

/// Upper bound on the 2-norm of the expectation-value gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzBound {
    /// 2 sqrt(d) * max over generators of |obs| * |generator|, with one-norm
    /// upper bounds standing in for spectral norms.
    pub value: f64,
    /// Per-slot magnitude bound 2 * |obs| * max |generator| over the slot's
    /// gates.
    pub slot_bounds: Vec<f64>,
}

pub fn lipschitz_bound(circuit: &ParamCircuit, obs: &PauliObservable) -> Result<LipschitzBound> {
    let obs_norm = obs.one_norm();
    let mut slot_bounds = Vec::with_capacity(circuit.num_params());
    for slot in 0..circuit.num_params() {
        let mut max_radius: f64 = 0.0;
        for gate_index in circuit.gates_for_slot(slot) {
            let rotation = circuit.gates()[gate_index].rotation().ok_or_else(|| {
                Error::InvalidCircuit(format!(
                    "slot {slot} is bound to non-rotation gate {gate_index}"
                ))
            })?;
            max_radius = max_radius.max(rotation.radius());
        }
        slot_bounds.push(2.0 * obs_norm * max_radius);
    }
    let value = (circuit.num_params() as f64).sqrt()
        * slot_bounds.iter().cloned().fold(0.0, f64::max);
    Ok(LipschitzBound { value, slot_bounds })
}
