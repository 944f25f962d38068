//! Parameterized circuits: slot bindings (several gates may share one slot),
//! the three benchmark ansatz builders, and amplitude encoding.

use crate::error::{Error, Result};
use crate::sim::{FixedGate, Gate, Pauli, PauliObservable, PauliString, Rotation, StateVector};
use num_complex::Complex64;
use std::fmt::Write as _;

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource {
    /// Bound to a variational parameter slot; many gates may share a slot.
    Slot(usize),
    /// Frozen at a constant angle.
    Fixed(f64),
}

/// A gate together with its angle binding (`None` for parameter-free gates).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundGate {
    pub gate: Gate,
    pub angle: Option<AngleSource>,
}

impl BoundGate {
    pub fn slot(&self) -> Option<usize> {
        match self.angle {
            Some(AngleSource::Slot(s)) => Some(s),
            _ => None,
        }
    }

    pub fn rotation(&self) -> Option<&Rotation> {
        match &self.gate {
            Gate::Rotation(r) => Some(r),
            _ => None,
        }
    }
}

/// A maximal run of consecutive diagonal rotations bound to one slot,
/// collapsed into a single per-basis-state phase pass. The run's joint
/// eigenvalue spectrum is tabulated once at construction.
#[derive(Debug, Clone, PartialEq)]
struct DiagonalRun {
    start: usize,
    len: usize,
    slot: usize,
    /// Distinct eigenvalues of sum_j scale_j P_j.
    distinct: Vec<f64>,
    /// Per-basis-state index into `distinct`.
    index: Vec<u32>,
}

impl DiagonalRun {
    fn apply(&self, state: &mut StateVector, angle: f64) {
        let mut phases = [Complex64::ZERO; 64];
        let table: &mut [Complex64] = &mut phases[..self.distinct.len()];
        for (phase, &energy) in table.iter_mut().zip(&self.distinct) {
            let (sin, cos) = (angle * energy).sin_cos();
            *phase = Complex64::new(cos, -sin);
        }
        state.apply_indexed_phases(&self.index, table);
    }
}

/// An ordered gate sequence over a fixed register with `num_params`
/// variational slots. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    num_qubits: usize,
    num_params: usize,
    gates: Vec<BoundGate>,
    /// Fused diagonal runs; `run_at[g]` holds the run starting at gate g.
    runs: Vec<DiagonalRun>,
    run_at: Vec<Option<u32>>,
}

impl ParamCircuit {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[BoundGate] {
        &self.gates
    }

    /// Indices of the gates bound to `slot`, in circuit order.
    pub fn gates_for_slot(&self, slot: usize) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.slot() == Some(slot))
            .map(|(i, _)| i)
            .collect()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::ParamLengthMismatch {
                got: theta.len(),
                expected: self.num_params,
            });
        }
        Ok(())
    }

    fn check_initial(&self, initial: &StateVector) -> Result<()> {
        if initial.num_qubits() != self.num_qubits {
            return Err(Error::InvalidState(format!(
                "initial state has {} qubits, circuit expects {}",
                initial.num_qubits(),
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn angle_of(&self, bound: &BoundGate, theta: &[f64]) -> Option<f64> {
        match bound.angle {
            Some(AngleSource::Slot(s)) => Some(theta[s]),
            Some(AngleSource::Fixed(a)) => Some(a),
            None => None,
        }
    }

    /// Applies gates `from..to` at `theta` to `state`. Diagonal runs fully
    /// inside the range execute as single fused phase passes.
    pub fn apply_range(
        &self,
        theta: &[f64],
        mut state: StateVector,
        from: usize,
        to: usize,
    ) -> Result<StateVector> {
        self.check_theta(theta)?;
        if from > to || to > self.gates.len() {
            return Err(Error::InvalidCircuit(format!(
                "gate range {from}..{to} out of bounds"
            )));
        }
        let mut i = from;
        while i < to {
            if let Some(run_idx) = self.run_at[i] {
                let run = &self.runs[run_idx as usize];
                if i + run.len <= to {
                    run.apply(&mut state, theta[run.slot]);
                    i += run.len;
                    continue;
                }
            }
            let bound = &self.gates[i];
            crate::sim::apply_gate(&mut state, &bound.gate, self.angle_of(bound, theta))?;
            i += 1;
        }
        Ok(state)
    }

    /// Applies only the gate at `index`, with `delta` added to its angle.
    pub fn apply_gate_shifted(
        &self,
        theta: &[f64],
        mut state: StateVector,
        index: usize,
        delta: f64,
    ) -> Result<StateVector> {
        self.check_theta(theta)?;
        let bound = self.gates.get(index).ok_or_else(|| {
            Error::InvalidCircuit(format!("gate index {index} out of range"))
        })?;
        let angle = self
            .angle_of(bound, theta)
            .ok_or_else(|| Error::InvalidCircuit(format!("gate {index} takes no angle")))?;
        crate::sim::apply_gate(&mut state, &bound.gate, Some(angle + delta))?;
        Ok(state)
    }

    fn run(
        &self,
        theta: &[f64],
        initial: &StateVector,
        shift: Option<(usize, f64)>,
    ) -> Result<StateVector> {
        self.check_theta(theta)?;
        self.check_initial(initial)?;
        let state = initial.clone();
        match shift {
            None => self.apply_range(theta, state, 0, self.gates.len()),
            Some((target, delta)) => {
                let state = self.apply_range(theta, state, 0, target)?;
                let state = self.apply_gate_shifted(theta, state, target, delta)?;
                self.apply_range(theta, state, target + 1, self.gates.len())
            }
        }
    }

    /// Applies the circuit at `theta` to `initial`.
    pub fn evaluate(&self, theta: &[f64], initial: &StateVector) -> Result<StateVector> {
        self.run(theta, initial, None)
    }

    /// Evaluates with `delta` added to the angle of the single gate at
    /// `gate_index`, leaving every other gate (including gates sharing the
    /// same slot) at its unshifted angle.
    pub fn evaluate_with_gate_shift(
        &self,
        theta: &[f64],
        initial: &StateVector,
        gate_index: usize,
        delta: f64,
    ) -> Result<StateVector> {
        if gate_index >= self.gates.len() {
            return Err(Error::InvalidCircuit(format!(
                "gate index {gate_index} out of range"
            )));
        }
        self.run(theta, initial, Some((gate_index, delta)))
    }

    /// Plain-text dump, one gate per line: `GATE targets [slot=k|angle=v]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for bound in &self.gates {
            match &bound.gate {
                Gate::Fixed(g) => {
                    let _ = writeln!(out, "{g}");
                }
                Gate::Rotation(rot) => {
                    let mut name = String::from("R");
                    let mut targets = String::new();
                    for &(q, p) in rot.generator().factors() {
                        name.push(p.as_char());
                        let _ = write!(targets, " {q}");
                    }
                    let binding = match bound.angle {
                        Some(AngleSource::Slot(s)) => format!("slot={s}"),
                        Some(AngleSource::Fixed(a)) => format!("angle={a}"),
                        None => String::new(),
                    };
                    // Single-qubit R gates default to scale 1/2, multi-qubit to 1.
                    let default_scale = if rot.generator().weight() == 1 { 0.5 } else { 1.0 };
                    if (rot.scale() - default_scale).abs() > 1e-15 {
                        let _ = writeln!(out, "{name}{targets} {binding} scale={}", rot.scale());
                    } else {
                        let _ = writeln!(out, "{name}{targets} {binding}");
                    }
                }
            }
        }
        out
    }
}

/// Incremental [`ParamCircuit`] construction with target validation.
#[derive(Debug)]
pub struct CircuitBuilder {
    num_qubits: usize,
    gates: Vec<BoundGate>,
}

impl CircuitBuilder {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    fn check_gate(&self, gate: &Gate) -> Result<()> {
        if let Some(q) = gate.max_qubit() {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        Ok(())
    }

    pub fn fixed(&mut self, gate: FixedGate) -> Result<&mut Self> {
        let gate = Gate::Fixed(gate);
        self.check_gate(&gate)?;
        self.gates.push(BoundGate { gate, angle: None });
        Ok(self)
    }

    pub fn rotation(
        &mut self,
        generator: PauliString,
        scale: f64,
        angle: AngleSource,
    ) -> Result<&mut Self> {
        let gate = Gate::Rotation(Rotation::new(generator, scale)?);
        self.check_gate(&gate)?;
        self.gates.push(BoundGate {
            gate,
            angle: Some(angle),
        });
        Ok(self)
    }

    /// Finalizes the circuit. The parameter count is one past the highest
    /// bound slot, and every slot below it must be bound to at least one gate.
    pub fn finish(self) -> Result<ParamCircuit> {
        let num_params = self
            .gates
            .iter()
            .filter_map(BoundGate::slot)
            .map(|s| s + 1)
            .max()
            .unwrap_or(0);
        let mut bound = vec![false; num_params];
        for gate in &self.gates {
            if let Some(s) = gate.slot() {
                bound[s] = true;
            }
        }
        if let Some(unused) = bound.iter().position(|&b| !b) {
            return Err(Error::InvalidCircuit(format!(
                "parameter slot {unused} is bound to no gate"
            )));
        }
        let (runs, run_at) = find_diagonal_runs(&self.gates, self.num_qubits);
        Ok(ParamCircuit {
            num_qubits: self.num_qubits,
            num_params,
            gates: self.gates,
            runs,
            run_at,
        })
    }
}

/// Registers larger than this skip diagonal-run tabulation.
const MAX_FUSED_QUBITS: usize = 16;

/// Scans for maximal runs of >= 2 consecutive diagonal rotations sharing one
/// slot and tabulates their joint spectra.
fn find_diagonal_runs(
    gates: &[BoundGate],
    num_qubits: usize,
) -> (Vec<DiagonalRun>, Vec<Option<u32>>) {
    let mut runs = Vec::new();
    let mut run_at = vec![None; gates.len()];
    if num_qubits > MAX_FUSED_QUBITS {
        return (runs, run_at);
    }
    let diag_slot = |g: &BoundGate| -> Option<usize> {
        let rotation = g.rotation()?;
        if rotation.generator().flip_mask() != 0 {
            return None;
        }
        g.slot()
    };
    let dim = 1usize << num_qubits;
    let mut start = 0;
    while start < gates.len() {
        let Some(slot) = diag_slot(&gates[start]) else {
            start += 1;
            continue;
        };
        let mut end = start + 1;
        while end < gates.len() && diag_slot(&gates[end]) == Some(slot) {
            end += 1;
        }
        let len = end - start;
        if len >= 2 {
            let mut energies = vec![0.0f64; dim];
            for g in &gates[start..end] {
                let rotation = g.rotation().expect("run members are rotations");
                let mask = rotation.generator().phase_mask();
                let scale = rotation.scale();
                for (b, e) in energies.iter_mut().enumerate() {
                    if (b as u64 & mask).count_ones() % 2 == 0 {
                        *e += scale;
                    } else {
                        *e -= scale;
                    }
                }
            }
            let mut distinct = energies.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() <= 64 {
                let index = energies
                    .iter()
                    .map(|e| {
                        distinct.partition_point(|d| d.total_cmp(e).is_lt()) as u32
                    })
                    .collect();
                run_at[start] = Some(runs.len() as u32);
                runs.push(DiagonalRun {
                    start,
                    len,
                    slot,
                    distinct,
                    index,
                });
            }
        }
        start = end;
    }
    (runs, run_at)
}

fn cnot_ladders(builder: &mut CircuitBuilder, num_qubits: usize) -> Result<()> {
    // Even-control pairs first, then odd-control pairs; an unpaired last
    // qubit receives no CNOT.
    for control in (0..num_qubits.saturating_sub(1)).step_by(2) {
        builder.fixed(FixedGate::Cnot {
            control,
            target: control + 1,
        })?;
    }
    for control in (1..num_qubits.saturating_sub(1)).step_by(2) {
        builder.fixed(FixedGate::Cnot {
            control,
            target: control + 1,
        })?;
    }
    Ok(())
}

/// Rotation-block ansatz: an initial Y-block with all angles frozen at pi/4,
/// followed by `num_blocks` parameterized blocks cycling X, Y, Z. Each block
/// is a layer of single-qubit rotations (one fresh slot per qubit) and two
/// CNOT ladders. Total slots: `num_blocks * num_qubits`.
pub fn build_sigma_block_ansatz(num_qubits: usize, num_blocks: usize) -> Result<ParamCircuit> {
    if num_qubits < 2 {
        return Err(Error::InvalidCircuit(format!(
            "sigma-block ansatz needs at least 2 qubits, got {num_qubits}"
        )));
    }
    if num_blocks < 1 {
        return Err(Error::InvalidCircuit("need at least one block".into()));
    }
    let mut builder = CircuitBuilder::new(num_qubits);
    for q in 0..num_qubits {
        builder.rotation(
            PauliString::y(q),
            0.5,
            AngleSource::Fixed(std::f64::consts::FRAC_PI_4),
        )?;
    }
    cnot_ladders(&mut builder, num_qubits)?;

    const CYCLE: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    for block in 0..num_blocks {
        let sigma = CYCLE[block % 3];
        for q in 0..num_qubits {
            builder.rotation(
                PauliString::single(q, sigma),
                0.5,
                AngleSource::Slot(block * num_qubits + q),
            )?;
        }
        cnot_ladders(&mut builder, num_qubits)?;
    }
    builder.finish()
}

/// Alternating-evolution ansatz with `depth` alternations: layer l applies
/// one rotation per problem term, all bound to slot 2l, then one rotation per
/// mixer term bound to slot 2l+1. Requires all problem terms to commute with
/// each other, likewise the mixer terms.
pub fn build_qaoa_ansatz(
    num_qubits: usize,
    problem: &PauliObservable,
    mixer: &PauliObservable,
    depth: usize,
) -> Result<ParamCircuit> {
    if depth < 1 {
        return Err(Error::InvalidCircuit("QAOA depth must be >= 1".into()));
    }
    for (label, obs) in [("problem", problem), ("mixer", mixer)] {
        if obs.is_empty() {
            return Err(Error::InvalidCircuit(format!(
                "{label} Hamiltonian has no terms"
            )));
        }
        if !obs.all_terms_commute() {
            return Err(Error::InvalidCircuit(format!(
                "{label} Hamiltonian terms do not mutually commute"
            )));
        }
    }
    let mut builder = CircuitBuilder::new(num_qubits);
    for layer in 0..depth {
        for (coeff, string) in problem.terms() {
            builder.rotation(string.clone(), *coeff, AngleSource::Slot(2 * layer))?;
        }
        for (coeff, string) in mixer.terms() {
            builder.rotation(string.clone(), *coeff, AngleSource::Slot(2 * layer + 1))?;
        }
    }
    builder.finish()
}

/// Loads a normalized real vector directly as the state amplitudes.
pub fn build_amplitude_encoder(data: &[f64]) -> Result<StateVector> {
    StateVector::from_amplitudes(data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
}

/// How a data vector is injected as the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    Amplitude,
}

/// A parameterized circuit together with a data-injection rule.
#[derive(Debug, Clone)]
pub struct EncodingCircuit {
    pub encoder: Encoder,
    pub circuit: ParamCircuit,
}

impl EncodingCircuit {
    pub fn new(encoder: Encoder, circuit: ParamCircuit) -> Self {
        Self { encoder, circuit }
    }

    pub fn initial_state(&self, x: &[f64]) -> Result<StateVector> {
        let state = match self.encoder {
            Encoder::Amplitude => build_amplitude_encoder(x)?,
        };
        if state.num_qubits() != self.circuit.num_qubits() {
            return Err(Error::InvalidState(format!(
                "encoded state has {} qubits, circuit expects {}",
                state.num_qubits(),
                self.circuit.num_qubits()
            )));
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn triangle_problem() -> PauliObservable {
        PauliObservable::new(vec![
            (1.0, PauliString::zz(0, 1).unwrap()),
            (1.0, PauliString::zz(1, 2).unwrap()),
            (1.0, PauliString::zz(0, 2).unwrap()),
        ])
        .unwrap()
    }

    fn x_mixer(n: usize) -> PauliObservable {
        PauliObservable::new((0..n).map(|q| (1.0, PauliString::x(q))).collect()).unwrap()
    }

    /// |+...+>, the conventional QAOA start; a basis state would make the
    /// leading (diagonal) problem layer a pure phase.
    fn plus_state(n: usize) -> StateVector {
        let mut s = StateVector::zero_state(n).unwrap();
        for q in 0..n {
            FixedGate::H(q).apply(&mut s).unwrap();
        }
        s
    }

    #[test]
    fn sigma_block_slot_counts() {
        assert_eq!(build_sigma_block_ansatz(8, 50).unwrap().num_params(), 400);
        assert_eq!(build_sigma_block_ansatz(4, 3).unwrap().num_params(), 12);
        assert!(build_sigma_block_ansatz(1, 1).is_err());
    }

    #[test]
    fn sigma_block_gate_count_n2_k1() {
        // 2 fixed Y rotations + 1 even-ladder CNOT + 2 rotations + 1 CNOT.
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        assert_eq!(circuit.num_params(), 2);
        assert_eq!(circuit.gates().len(), 6);
        let cnots = circuit
            .gates()
            .iter()
            .filter(|g| matches!(g.gate, Gate::Fixed(FixedGate::Cnot { .. })))
            .count();
        assert_eq!(cnots, 2);
    }

    #[test]
    fn sigma_block_odd_width_ladders() {
        // N=3: even ladder CNOT(0,1); odd ladder CNOT(1,2); qubit 2 unpaired in
        // the even ladder.
        let circuit = build_sigma_block_ansatz(3, 1).unwrap();
        let cnots: Vec<(usize, usize)> = circuit
            .gates()
            .iter()
            .filter_map(|g| match g.gate {
                Gate::Fixed(FixedGate::Cnot { control, target }) => Some((control, target)),
                _ => None,
            })
            .collect();
        assert_eq!(cnots, vec![(0, 1), (1, 2), (0, 1), (1, 2)]);
    }

    #[test]
    fn sigma_block_zero_angles_match_prefix_plus_ladders() {
        let circuit = build_sigma_block_ansatz(3, 2).unwrap();
        let zero = StateVector::zero_state(3).unwrap();
        let at_zero = circuit.evaluate(&vec![0.0; 6], &zero).unwrap();

        // Hand-built reference: fixed Y block + its ladders, then two bare
        // ladder pairs (zero rotations are identity).
        let mut builder = CircuitBuilder::new(3);
        for q in 0..3 {
            builder
                .rotation(
                    PauliString::y(q),
                    0.5,
                    AngleSource::Fixed(std::f64::consts::FRAC_PI_4),
                )
                .unwrap();
        }
        for _ in 0..3 {
            cnot_ladders(&mut builder, 3).unwrap();
        }
        let reference = builder.finish().unwrap().evaluate(&[], &zero).unwrap();
        for (a, b) in at_zero.amplitudes().iter().zip(reference.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qaoa_slot_sharing() {
        let circuit = build_qaoa_ansatz(3, &triangle_problem(), &x_mixer(3), 1).unwrap();
        assert_eq!(circuit.num_params(), 2);
        assert_eq!(circuit.gates_for_slot(0).len(), 3);
        assert_eq!(circuit.gates_for_slot(1).len(), 3);
        let deep = build_qaoa_ansatz(3, &triangle_problem(), &x_mixer(3), 50).unwrap();
        assert_eq!(deep.num_params(), 100);
    }

    #[test]
    fn qaoa_zero_angles_is_identity() {
        let circuit = build_qaoa_ansatz(3, &triangle_problem(), &x_mixer(3), 2).unwrap();
        let mut initial = StateVector::zero_state(3).unwrap();
        for q in 0..3 {
            initial.apply_pauli_rotation(&PauliString::y(q), 0.3 + q as f64).unwrap();
        }
        let out = circuit.evaluate(&vec![0.0; 4], &initial).unwrap();
        for (a, b) in out.amplitudes().iter().zip(initial.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qaoa_rejects_non_commuting_terms() {
        let bad = PauliObservable::new(vec![
            (1.0, PauliString::z(0)),
            (1.0, PauliString::x(0)),
        ])
        .unwrap();
        assert!(build_qaoa_ansatz(2, &bad, &x_mixer(2), 1).is_err());
    }

    #[test]
    fn qaoa_slot_sharing_matches_unrolled_copy() {
        let shared = build_qaoa_ansatz(3, &triangle_problem(), &x_mixer(3), 2).unwrap();

        // Unrolled twin: every gate gets its own slot.
        let mut builder = CircuitBuilder::new(3);
        let mut slot = 0;
        for layer in 0..2 {
            let _ = layer;
            for (c, s) in triangle_problem().terms() {
                builder
                    .rotation(s.clone(), *c, AngleSource::Slot(slot))
                    .unwrap();
                slot += 1;
            }
            for (c, s) in x_mixer(3).terms() {
                builder
                    .rotation(s.clone(), *c, AngleSource::Slot(slot))
                    .unwrap();
                slot += 1;
            }
        }
        let unrolled = builder.finish().unwrap();

        let shared_theta = [0.7, -0.2, 0.15, 1.1];
        let expand = |t: &[f64]| -> Vec<f64> {
            let mut out = Vec::new();
            for layer in 0..2 {
                out.extend(std::iter::repeat(t[2 * layer]).take(3));
                out.extend(std::iter::repeat(t[2 * layer + 1]).take(3));
            }
            out
        };
        let plus = plus_state(3);
        let obs = triangle_problem();

        let a = shared.evaluate(&shared_theta, &plus).unwrap();
        let b = unrolled.evaluate(&expand(&shared_theta), &plus).unwrap();
        assert_abs_diff_eq!(
            a.expectation(&obs).unwrap(),
            b.expectation(&obs).unwrap(),
            epsilon = 1e-12
        );

        // Perturbing a shared slot must move every bound gate.
        let mut perturbed = shared_theta;
        perturbed[0] += 0.3;
        let a2 = shared.evaluate(&perturbed, &plus).unwrap();
        let b2 = unrolled.evaluate(&expand(&perturbed), &plus).unwrap();
        assert_abs_diff_eq!(
            a2.expectation(&obs).unwrap(),
            b2.expectation(&obs).unwrap(),
            epsilon = 1e-12
        );
        assert!((a2.expectation(&obs).unwrap() - a.expectation(&obs).unwrap()).abs() > 1e-6);
    }

    #[test]
    fn amplitude_encoder_examples() {
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        let s = build_amplitude_encoder(&x).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 1.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = build_amplitude_encoder(&[h, h, 0.0, 0.0]).unwrap();
        assert_eq!(s.num_qubits(), 2);
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, h, epsilon = 1e-12);

        assert!(build_amplitude_encoder(&[1.0, 2.0]).is_err());
        assert!(build_amplitude_encoder(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn evaluate_contracts() {
        let circuit = CircuitBuilder::new(2).finish().unwrap();
        let zero = StateVector::zero_state(2).unwrap();
        let out = circuit.evaluate(&[], &zero).unwrap();
        assert_eq!(out, zero);
        assert!(circuit.evaluate(&[0.1], &zero).is_err());

        let mut builder = CircuitBuilder::new(2);
        builder
            .rotation(PauliString::x(0), 0.5, AngleSource::Slot(0))
            .unwrap();
        let one_rot = builder.finish().unwrap();
        let out = one_rot.evaluate(&[0.0], &zero).unwrap();
        assert_eq!(out, zero);
    }

    #[test]
    fn unbound_slot_rejected() {
        let mut builder = CircuitBuilder::new(2);
        builder
            .rotation(PauliString::x(0), 0.5, AngleSource::Slot(1))
            .unwrap();
        assert!(builder.finish().is_err());
    }

    #[test]
    fn gate_and_inverse_cancel() {
        let circuit = build_sigma_block_ansatz(3, 1).unwrap();
        let theta = [0.3, -0.8, 1.2];
        let zero = StateVector::zero_state(3).unwrap();
        let obs = PauliObservable::single(1.0, PauliString::z(1)).unwrap();
        let base = circuit
            .evaluate(&theta, &zero)
            .unwrap()
            .expectation(&obs)
            .unwrap();

        let mut state = circuit.evaluate(&theta, &zero).unwrap();
        let gen = PauliString::parse_dense("XYZ").unwrap();
        state.apply_pauli_rotation(&gen, 0.77).unwrap();
        state.apply_pauli_rotation(&gen, -0.77).unwrap();
        assert_abs_diff_eq!(state.expectation(&obs).unwrap(), base, epsilon = 1e-10);
    }

    #[test]
    fn pauli_half_rotation_period_is_4pi() {
        let circuit = build_sigma_block_ansatz(2, 2).unwrap();
        let theta: Vec<f64> = (0..4).map(|i| 0.2 + i as f64 * 0.4).collect();
        let shifted: Vec<f64> = theta
            .iter()
            .map(|t| t + 4.0 * std::f64::consts::PI)
            .collect();
        let zero = StateVector::zero_state(2).unwrap();
        let a = circuit.evaluate(&theta, &zero).unwrap();
        let b = circuit.evaluate(&shifted, &zero).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn gate_shift_targets_single_gate() {
        // In a shared-slot circuit, a gate shift must differ from a slot shift.
        let circuit = build_qaoa_ansatz(3, &triangle_problem(), &x_mixer(3), 1).unwrap();
        let theta = [0.4, 0.9];
        let plus = plus_state(3);
        let obs = triangle_problem();
        let gate_idx = circuit.gates_for_slot(0)[0];

        let gate_shifted = circuit
            .evaluate_with_gate_shift(&theta, &plus, gate_idx, 0.5)
            .unwrap()
            .expectation(&obs)
            .unwrap();
        let slot_shifted = circuit
            .evaluate(&[theta[0] + 0.5, theta[1]], &plus)
            .unwrap()
            .expectation(&obs)
            .unwrap();
        assert!((gate_shifted - slot_shifted).abs() > 1e-6);
    }

    #[test]
    fn text_dump_format() {
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let text = circuit.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("RY 0 angle="));
        assert_eq!(lines[2], "CNOT 0 1");
        assert_eq!(lines[3], "RX 0 slot=0");

        let qaoa = build_qaoa_ansatz(3, &triangle_problem(), &x_mixer(3), 1).unwrap();
        let text = qaoa.to_text();
        assert!(text.lines().next().unwrap().starts_with("RZZ 0 1 slot=0"));
    }
}
