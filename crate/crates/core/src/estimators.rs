//! Unbiased stochastic gradient estimators.
//!
//! All estimators share one structure: a partial derivative is a linear
//! combination of expectation values (over Hamiltonian terms, parameter-shift
//! terms, or data instances), each expectation is replaced by an n-shot
//! sample mean, and any of the linear combinations may additionally be
//! subsampled with the matching correction factor. Every estimator reports
//! the exact number of Born samples and state preparations it consumed.

use crate::circuits::{EncodingCircuit, ParamCircuit};
use crate::error::{Error, Result};
use crate::gradients::{derive_shift_rule, ShiftRule, ShiftTerm};
use crate::rng::RngStream;
use crate::sim::{
    sample_term, sample_terms_shared, PauliObservable, ShotLedger, StateVector,
};

/// How the sum over Hamiltonian terms is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianSampling {
    /// Evaluate every term.
    None,
    /// Sample one term uniformly, correction factor M.
    UniformTerm,
    /// Sample one qubit-wise commuting group uniformly, correction factor
    /// (number of groups); terms inside the group share contexts.
    UniformGroup,
}

/// How the sum over parameter-shift terms is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSampling {
    None,
    /// Sample one shift term per slot.
    Uniform,
}

/// Weighting used when `ShiftSampling::Uniform` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// prob(k) = 1/K, correction K * gamma_k.
    Uniform,
    /// prob(k) = |gamma_k| / sum |gamma|, correction gamma_k / prob(k).
    Importance,
}

/// How mini-batches are drawn in data-driven estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Independent uniform draws each step; keeps the estimator exactly
    /// unbiased.
    WithReplacement,
    /// Shuffle-and-walk within an epoch; handled by the training loop via
    /// [`estimate_mse_batch`].
    EpochShuffle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Shots per expectation estimate (n >= 1).
    pub shots: u64,
    pub hamiltonian_sampling: HamiltonianSampling,
    pub shift_sampling: ShiftSampling,
    pub weighting: Weighting,
    /// Mini-batch size for data-driven estimators.
    pub batch_size: usize,
    pub batch_mode: BatchMode,
}

impl EstimatorConfig {
    pub fn full(shots: u64) -> Self {
        Self {
            shots,
            hamiltonian_sampling: HamiltonianSampling::None,
            shift_sampling: ShiftSampling::None,
            weighting: Weighting::Uniform,
            batch_size: 1,
            batch_mode: BatchMode::WithReplacement,
        }
    }

    pub fn term_sampled(shots: u64) -> Self {
        Self {
            hamiltonian_sampling: HamiltonianSampling::UniformTerm,
            ..Self::full(shots)
        }
    }

    pub fn group_sampled(shots: u64) -> Self {
        Self {
            hamiltonian_sampling: HamiltonianSampling::UniformGroup,
            ..Self::full(shots)
        }
    }

    pub fn doubly(shots: u64) -> Self {
        Self {
            hamiltonian_sampling: HamiltonianSampling::UniformTerm,
            shift_sampling: ShiftSampling::Uniform,
            ..Self::full(shots)
        }
    }

    pub fn with_batch(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// A stochastic gradient sample together with its exact measurement cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    /// Born-rule samples consumed.
    pub measurements_used: u64,
    /// State preparations executed.
    pub circuits_executed: u64,
}

impl GradientEstimate {
    fn from_ledger(values: Vec<f64>, ledger: ShotLedger) -> Self {
        Self {
            values,
            measurements_used: ledger.measurements,
            circuits_executed: ledger.circuits,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Prefix-state cache for the many gate-shifted evaluations of one step: the
/// state before gate g at the base parameters is computed once, so a shifted
/// evaluation only replays the circuit from g onward. Falls back to full
/// re-evaluation when the cache would not fit the memory budget.
struct ShiftedStates<'a> {
    circuit: &'a ParamCircuit,
    theta: &'a [f64],
    initial: &'a StateVector,
    /// prefixes[g] = state after gates 0..g; empty when disabled.
    prefixes: Vec<StateVector>,
}

impl<'a> ShiftedStates<'a> {
    /// Amplitude budget for cached prefixes (~512 MiB of Complex64).
    const MAX_CACHED_AMPLITUDES: usize = 1 << 25;

    fn new(
        circuit: &'a ParamCircuit,
        theta: &'a [f64],
        initial: &'a StateVector,
    ) -> Result<Self> {
        let gates = circuit.gates().len();
        let amplitudes = gates.saturating_mul(1 << initial.num_qubits());
        let prefixes = if amplitudes <= Self::MAX_CACHED_AMPLITUDES {
            let mut prefixes = Vec::with_capacity(gates);
            let mut state = initial.clone();
            for (index, _) in circuit.gates().iter().enumerate() {
                prefixes.push(state.clone());
                state = circuit.apply_range(theta, state, index, index + 1)?;
            }
            prefixes
        } else {
            Vec::new()
        };
        Ok(Self {
            circuit,
            theta,
            initial,
            prefixes,
        })
    }

    fn shifted(&self, gate_index: usize, delta: f64) -> Result<StateVector> {
        match self.prefixes.get(gate_index) {
            None => self
                .circuit
                .evaluate_with_gate_shift(self.theta, self.initial, gate_index, delta),
            Some(prefix) => {
                let state = self.circuit.apply_gate_shifted(
                    self.theta,
                    prefix.clone(),
                    gate_index,
                    delta,
                )?;
                self.circuit.apply_range(
                    self.theta,
                    state,
                    gate_index + 1,
                    self.circuit.gates().len(),
                )
            }
        }
    }
}

/// Per-slot selection of Hamiltonian terms.
enum TermSelection {
    All,
    /// (term index, correction factor M)
    Term(usize, f64),
    /// (term indices, correction factor G)
    Group(Vec<usize>, f64),
}

fn select_terms(
    h: &PauliObservable,
    groups: Option<&[Vec<usize>]>,
    mode: HamiltonianSampling,
    rng: &mut RngStream,
) -> TermSelection {
    match mode {
        HamiltonianSampling::None => TermSelection::All,
        HamiltonianSampling::UniformTerm => {
            let m = h.num_terms();
            if m == 1 {
                TermSelection::Term(0, 1.0)
            } else {
                TermSelection::Term(rng.gen_range(m as u64) as usize, m as f64)
            }
        }
        HamiltonianSampling::UniformGroup => {
            let groups = groups.expect("groups required for group sampling");
            let g = groups.len();
            let pick = if g == 1 {
                0
            } else {
                rng.gen_range(g as u64) as usize
            };
            TermSelection::Group(groups[pick].clone(), g as f64)
        }
    }
}

/// Per-slot selection of shift-rule terms: (term, weight) pairs.
fn select_shifts<'a>(
    entries: &'a [ShiftTerm],
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Vec<(&'a ShiftTerm, f64)> {
    match config.shift_sampling {
        ShiftSampling::None => entries.iter().map(|t| (t, t.gamma)).collect(),
        ShiftSampling::Uniform => {
            let k = entries.len();
            match config.weighting {
                Weighting::Uniform => {
                    let pick = rng.gen_range(k as u64) as usize;
                    vec![(&entries[pick], k as f64 * entries[pick].gamma)]
                }
                Weighting::Importance => {
                    let total: f64 = entries.iter().map(|t| t.gamma.abs()).sum();
                    let mut u = rng.next_f64() * total;
                    let mut pick = k - 1;
                    for (i, t) in entries.iter().enumerate() {
                        u -= t.gamma.abs();
                        if u < 0.0 {
                            pick = i;
                            break;
                        }
                    }
                    // gamma / prob = sign(gamma) * total
                    vec![(&entries[pick], entries[pick].gamma.signum() * total)]
                }
            }
        }
    }
}

/// Evaluates the selected Hamiltonian terms on the gate-shifted state.
fn sampled_hamiltonian_value(
    state: &StateVector,
    h: &PauliObservable,
    selection: &TermSelection,
    shots: u64,
    rng: &mut RngStream,
    ledger: &mut ShotLedger,
) -> Result<f64> {
    match selection {
        TermSelection::All => {
            let mut acc = 0.0;
            for (idx, (coeff, string)) in h.terms().iter().enumerate() {
                let _ = idx;
                acc += coeff * sample_term(state, string, shots, rng, ledger)?;
            }
            Ok(acc)
        }
        TermSelection::Term(idx, correction) => {
            let (coeff, string) = &h.terms()[*idx];
            Ok(correction * coeff * sample_term(state, string, shots, rng, ledger)?)
        }
        TermSelection::Group(indices, correction) => Ok(correction
            * sample_terms_shared(state, h, indices, shots, rng, ledger)?),
    }
}

/// Generic stochastic estimator for the gradient of `<H>`. Dispatches on the
/// configured sampling modes; the named wrappers below pin the canonical
/// configurations.
pub fn estimate_vqe(
    circuit: &ParamCircuit,
    h: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    config.validate()?;
    if h.is_empty() {
        return Err(Error::InvalidObservable(
            "cannot estimate gradients of an empty Hamiltonian".into(),
        ));
    }
    let rule = derive_shift_rule(circuit)?;
    let groups = match config.hamiltonian_sampling {
        HamiltonianSampling::UniformGroup => Some(h.qubit_wise_groups()),
        _ => None,
    };
    let states = ShiftedStates::new(circuit, theta, initial)?;
    let mut ledger = ShotLedger::default();
    let mut values = Vec::with_capacity(circuit.num_params());
    for slot in 0..circuit.num_params() {
        let mut slot_rng = rng.child(slot as u64);
        values.push(estimate_slot(
            &states,
            h,
            groups.as_deref(),
            &rule,
            slot,
            config,
            &mut slot_rng,
            &mut ledger,
        )?);
    }
    Ok(GradientEstimate::from_ledger(values, ledger))
}

#[allow(clippy::too_many_arguments)]
fn estimate_slot(
    states: &ShiftedStates<'_>,
    h: &PauliObservable,
    groups: Option<&[Vec<usize>]>,
    rule: &ShiftRule,
    slot: usize,
    config: &EstimatorConfig,
    rng: &mut RngStream,
    ledger: &mut ShotLedger,
) -> Result<f64> {
    let selection = select_terms(h, groups, config.hamiltonian_sampling, rng);
    let entries = rule.terms(slot)?;
    let chosen = select_shifts(entries, config, rng);
    let mut acc = 0.0;
    for (term, weight) in chosen {
        let state = states.shifted(term.gate_index, term.shift)?;
        acc += weight
            * sampled_hamiltonian_value(&state, h, &selection, config.shots, rng, ledger)?;
    }
    Ok(acc)
}

/// Full n-shot estimator: every Hamiltonian term at every shift term.
/// Costs n*K*M measurements per slot.
pub fn estimate_vqe_full(
    circuit: &ParamCircuit,
    h: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    if config.hamiltonian_sampling != HamiltonianSampling::None
        || config.shift_sampling != ShiftSampling::None
    {
        return Err(Error::InvalidConfig(
            "full estimator requires both sampling modes off".into(),
        ));
    }
    estimate_vqe(circuit, h, theta, initial, config, rng)
}

/// Hamiltonian-sampled estimator: one term (or commuting group) per slot,
/// all shift terms. Costs n*K measurements per slot in term mode.
pub fn estimate_vqe_term_sampled(
    circuit: &ParamCircuit,
    h: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    if config.hamiltonian_sampling == HamiltonianSampling::None {
        return Err(Error::InvalidConfig(
            "term-sampled estimator requires Hamiltonian sampling".into(),
        ));
    }
    if config.shift_sampling != ShiftSampling::None {
        return Err(Error::InvalidConfig(
            "term-sampled estimator keeps shift sampling off".into(),
        ));
    }
    estimate_vqe(circuit, h, theta, initial, config, rng)
}

/// Doubly stochastic estimator: one Hamiltonian term (or group) and one shift
/// term per slot. Costs n measurements per slot in term mode.
pub fn estimate_vqe_doubly(
    circuit: &ParamCircuit,
    h: &PauliObservable,
    theta: &[f64],
    initial: &StateVector,
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    if config.hamiltonian_sampling == HamiltonianSampling::None
        || config.shift_sampling != ShiftSampling::Uniform
    {
        return Err(Error::InvalidConfig(
            "doubly stochastic estimator requires both sampling modes".into(),
        ));
    }
    estimate_vqe(circuit, h, theta, initial, config, rng)
}

/// A labeled data instance for regression/classification losses.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: f64,
}

/// The two measurement contexts of one mean-squared-error factor pair:
/// the value estimate and the derivative estimate must come from disjoint
/// substreams.
pub fn mse_factor_streams(pair_stream: &RngStream) -> (RngStream, RngStream) {
    (pair_stream.child(0), pair_stream.child(1))
}

/// Doubly stochastic estimator for the dataset mean-squared-error loss with
/// the batch drawn inside (independent uniform draws). Costs
/// |B|*(K+1)*n measurements per slot for a single-term readout.
pub fn estimate_mse(
    encoding: &EncodingCircuit,
    obs: &PauliObservable,
    theta: &[f64],
    data: &[Instance],
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    if config.batch_mode != BatchMode::WithReplacement {
        return Err(Error::InvalidConfig(
            "epoch-shuffled batches are drawn by the training loop; use estimate_mse_batch".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::InvalidDataset("dataset is empty".into()));
    }
    if config.batch_size > data.len() {
        return Err(Error::InvalidConfig(format!(
            "batch size {} exceeds dataset size {}",
            config.batch_size,
            data.len()
        )));
    }
    let mut batch_rng = rng.child(u64::MAX);
    let batch: Vec<usize> = (0..config.batch_size)
        .map(|_| batch_rng.gen_range(data.len() as u64) as usize)
        .collect();
    estimate_mse_batch(encoding, obs, theta, data, &batch, config, rng)
}

/// Same estimator over an explicit batch of instance indices.
pub fn estimate_mse_batch(
    encoding: &EncodingCircuit,
    obs: &PauliObservable,
    theta: &[f64],
    data: &[Instance],
    batch: &[usize],
    config: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    config.validate()?;
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let circuit = &encoding.circuit;
    let rule = derive_shift_rule(circuit)?;
    let mut ledger = ShotLedger::default();
    let mut values = vec![0.0; circuit.num_params()];

    for slot in 0..circuit.num_params() {
        let slot_rng = rng.child(slot as u64);
        let mut acc = 0.0;
        for (pos, &j) in batch.iter().enumerate() {
            let instance = data.get(j).ok_or_else(|| {
                Error::InvalidDataset(format!("instance index {j} out of range"))
            })?;
            let initial = encoding.initial_state(&instance.features)?;
            let pair_stream = slot_rng.child(pos as u64);
            let (mut value_rng, mut deriv_rng) = mse_factor_streams(&pair_stream);

            // Value factor: n-shot estimate of <O> at theta, independent
            // contexts from the derivative factor.
            let state = circuit.evaluate(theta, &initial)?;
            let mut o_tilde = 0.0;
            for (coeff, string) in obs.terms() {
                o_tilde +=
                    coeff * sample_term(&state, string, config.shots, &mut value_rng, &mut ledger)?;
            }

            // Derivative factor via the shift rule; the same draw serves both
            // product terms.
            let entries = rule.terms(slot)?;
            let chosen = select_shifts(entries, config, &mut deriv_rng);
            let mut d_tilde = 0.0;
            for (term, weight) in chosen {
                let shifted = circuit.evaluate_with_gate_shift(
                    theta,
                    &initial,
                    term.gate_index,
                    term.shift,
                )?;
                let mut sample = 0.0;
                for (coeff, string) in obs.terms() {
                    sample += coeff
                        * sample_term(
                            &shifted,
                            string,
                            config.shots,
                            &mut deriv_rng,
                            &mut ledger,
                        )?;
                }
                d_tilde += weight * sample;
            }

            acc += 2.0 * (o_tilde - instance.label) * d_tilde;
        }
        values[slot] = acc / batch.len() as f64;
    }
    Ok(GradientEstimate::from_ledger(values, ledger))
}

/// A differentiable penalty added to a loss function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// lambda * |theta|^2, gradient 2 * lambda * theta.
    L2 { lambda: f64 },
}

impl Regularizer {
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Regularizer::L2 { lambda } => theta.iter().map(|t| 2.0 * lambda * t).collect(),
        }
    }
}

/// Adds the (deterministic) regularizer gradient to an estimate; unbiasedness
/// and the cost ledger are untouched.
pub fn add_regularizer(
    mut est: GradientEstimate,
    reg: &Regularizer,
    theta: &[f64],
) -> Result<GradientEstimate> {
    if est.values.len() != theta.len() {
        return Err(Error::InvalidConfig(format!(
            "estimate has {} components, theta has {}",
            est.values.len(),
            theta.len()
        )));
    }
    for (v, g) in est.values.iter_mut().zip(reg.gradient(theta)) {
        *v += g;
    }
    Ok(est)
}

/// Unbiased estimator for a polynomial of an expectation value, evaluated as
/// the U-statistic of the kernel h(x_1..x_k) = a_0 + sum_j a_j x_1*...*x_j
/// over all ordered k-arrangements of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialEstimator {
    /// a_0..a_k with a_k != 0 (trailing zeros trimmed).
    coefficients: Vec<f64>,
}

impl PolynomialEstimator {
    pub fn new(mut coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "polynomial coefficients must be finite".into(),
            ));
        }
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            return Err(Error::InvalidConfig("empty polynomial".into()));
        }
        Ok(Self { coefficients })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Evaluates f itself (for oracles and reporting).
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    /// The U-statistic over `samples`. Requires at least `degree` samples.
    ///
    /// For this kernel the sum over ordered arrangements reduces to
    /// elementary symmetric polynomials: the monomial x^j contributes
    /// e_j(samples) / C(m, j). Samples are sorted first so the result is
    /// bit-identical under permutation of the input.
    pub fn u_statistic(&self, samples: &[f64]) -> Result<f64> {
        let k = self.degree();
        let m = samples.len();
        if m < k {
            return Err(Error::InvalidConfig(format!(
                "{m} samples cannot support a degree-{k} kernel"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("samples must be finite".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);

        // e[j] accumulates the elementary symmetric polynomial of degree j.
        let mut e = vec![0.0; k + 1];
        e[0] = 1.0;
        for &x in &sorted {
            for j in (1..=k).rev() {
                e[j] += e[j - 1] * x;
            }
        }
        let mut result = self.coefficients[0];
        let mut arrangements = 1.0; // m!/(m-j)! running product
        for j in 1..=k {
            arrangements *= (m - j + 1) as f64;
            // j! * e_j / (m!/(m-j)!)
            let factorial_j: f64 = (1..=j).map(|i| i as f64).product();
            result += self.coefficients[j] * factorial_j * e[j] / arrangements;
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_sigma_block_ansatz, AngleSource, CircuitBuilder, Encoder};
    use crate::gradients::exact_gradient;
    use crate::sim::PauliString;
    use approx::assert_abs_diff_eq;

    fn tfim_2q() -> PauliObservable {
        PauliObservable::new(vec![
            (1.0, PauliString::zz(0, 1).unwrap()),
            (1.0, PauliString::x(0)),
            (1.0, PauliString::x(1)),
        ])
        .unwrap()
    }

    fn rx_encoding() -> EncodingCircuit {
        let mut b = CircuitBuilder::new(1);
        b.rotation(PauliString::x(0), 0.5, AngleSource::Slot(0))
            .unwrap();
        EncodingCircuit::new(Encoder::Amplitude, b.finish().unwrap())
    }

    #[test]
    fn full_estimator_cost_is_nkm_per_slot() {
        // d=2 slots, K=2 per slot, M=3 terms, n=1: 1*2*3 per slot, 12 total.
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = tfim_2q();
        let zero = StateVector::zero_state(2).unwrap();
        let mut rng = RngStream::from_seed(4);
        let est = estimate_vqe_full(
            &circuit,
            &h,
            &[0.3, 0.9],
            &zero,
            &EstimatorConfig::full(1),
            &mut rng,
        )
        .unwrap();
        assert_eq!(est.measurements_used, 12);
        assert_eq!(est.circuits_executed, 12);
    }

    #[test]
    fn term_sampled_cost_is_nk_per_slot() {
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = tfim_2q();
        let zero = StateVector::zero_state(2).unwrap();
        let mut rng = RngStream::from_seed(4);
        let est = estimate_vqe_term_sampled(
            &circuit,
            &h,
            &[0.3, 0.9],
            &zero,
            &EstimatorConfig::term_sampled(5),
            &mut rng,
        )
        .unwrap();
        // 2 slots * n=5 * K=2
        assert_eq!(est.measurements_used, 20);
    }

    #[test]
    fn doubly_cost_is_n_per_slot() {
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = tfim_2q();
        let zero = StateVector::zero_state(2).unwrap();
        let mut rng = RngStream::from_seed(4);
        let est = estimate_vqe_doubly(
            &circuit,
            &h,
            &[0.3, 0.9],
            &zero,
            &EstimatorConfig::doubly(7),
            &mut rng,
        )
        .unwrap();
        assert_eq!(est.measurements_used, 14);
    }

    #[test]
    fn config_preconditions_enforced() {
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = tfim_2q();
        let zero = StateVector::zero_state(2).unwrap();
        let mut rng = RngStream::from_seed(4);
        let theta = [0.3, 0.9];
        assert!(estimate_vqe_full(
            &circuit,
            &h,
            &theta,
            &zero,
            &EstimatorConfig::doubly(1),
            &mut rng
        )
        .is_err());
        assert!(estimate_vqe_term_sampled(
            &circuit,
            &h,
            &theta,
            &zero,
            &EstimatorConfig::full(1),
            &mut rng
        )
        .is_err());
        assert!(estimate_vqe_doubly(
            &circuit,
            &h,
            &theta,
            &zero,
            &EstimatorConfig::term_sampled(1),
            &mut rng
        )
        .is_err());
        let empty = PauliObservable::new(vec![]).unwrap();
        assert!(estimate_vqe(
            &circuit,
            &empty,
            &theta,
            &zero,
            &EstimatorConfig::full(1),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn zero_coefficient_hamiltonian_gives_zero_variance() {
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = PauliObservable::single(0.0, PauliString::z(0)).unwrap();
        let zero = StateVector::zero_state(2).unwrap();
        let mut rng = RngStream::from_seed(11);
        for _ in 0..10 {
            let est = estimate_vqe_full(
                &circuit,
                &h,
                &[0.3, 0.9],
                &zero,
                &EstimatorConfig::full(1),
                &mut rng,
            )
            .unwrap();
            assert_eq!(est.values, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn single_term_hamiltonian_term_sampling_matches_full_bitwise() {
        // With M=1 there is nothing to sample, so the estimators consume the
        // same stream and agree exactly.
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = PauliObservable::single(1.0, PauliString::zz(0, 1).unwrap()).unwrap();
        let zero = StateVector::zero_state(2).unwrap();
        let theta = [1.1, 0.4];
        let a = estimate_vqe_full(
            &circuit,
            &h,
            &theta,
            &zero,
            &EstimatorConfig::full(3),
            &mut RngStream::from_seed(5),
        )
        .unwrap();
        let b = estimate_vqe_term_sampled(
            &circuit,
            &h,
            &theta,
            &zero,
            &EstimatorConfig::term_sampled(3),
            &mut RngStream::from_seed(5),
        )
        .unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn degenerate_point_doubly_equals_full() {
        // <Z> for exp(-i theta X / 2)|0> at theta = pi/2: both shifted states
        // are Z eigenstates, so every branch of the doubly stochastic draw
        // returns exactly -1, same as the full estimator.
        let encoding = rx_encoding();
        let h = PauliObservable::single(1.0, PauliString::z(0)).unwrap();
        let zero = StateVector::zero_state(1).unwrap();
        let theta = [std::f64::consts::FRAC_PI_2];
        for seed in 0..20 {
            let full = estimate_vqe_full(
                &encoding.circuit,
                &h,
                &theta,
                &zero,
                &EstimatorConfig::full(1),
                &mut RngStream::from_seed(seed),
            )
            .unwrap();
            let doubly = estimate_vqe_doubly(
                &encoding.circuit,
                &h,
                &theta,
                &zero,
                &EstimatorConfig::doubly(1),
                &mut RngStream::from_seed(seed + 1000),
            )
            .unwrap();
            assert_abs_diff_eq!(full.values[0], -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(doubly.values[0], -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn group_sampled_cost_counts_group_contexts() {
        // TFIM groups into {ZZ} and {X0, X1}: sampling a group costs n*K
        // circuits per slot; measurements depend on the group size.
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = tfim_2q();
        let zero = StateVector::zero_state(2).unwrap();
        let mut rng = RngStream::from_seed(4);
        let est = estimate_vqe(
            &circuit,
            &h,
            &[0.3, 0.9],
            &zero,
            &EstimatorConfig::group_sampled(1),
            &mut rng,
        )
        .unwrap();
        assert_eq!(est.circuits_executed, 4); // 2 slots * K=2 * n=1
        assert!(est.measurements_used >= 4 && est.measurements_used <= 8);
    }

    #[test]
    fn mse_cost_is_k_plus_one_n_per_slot_per_instance() {
        let encoding = rx_encoding();
        let obs = PauliObservable::single(1.0, PauliString::z(0)).unwrap();
        let data = vec![Instance {
            features: vec![1.0, 0.0],
            label: 0.5,
        }];
        let mut rng = RngStream::from_seed(2);
        let est = estimate_mse(
            &encoding,
            &obs,
            &[0.7],
            &data,
            &EstimatorConfig::full(4).with_batch(1),
            &mut rng,
        )
        .unwrap();
        // 1 slot * |B|=1 * (K+1)=3 contexts * n=4
        assert_eq!(est.measurements_used, 12);
    }

    #[test]
    fn mse_zero_residual_has_zero_expectation() {
        // Labels equal to the exact expectation at the current parameters:
        // the estimator averages to zero.
        let encoding = rx_encoding();
        let obs = PauliObservable::single(1.0, PauliString::z(0)).unwrap();
        let theta = [0.9f64];
        let exact_value = theta[0].cos();
        let data = vec![Instance {
            features: vec![1.0, 0.0],
            label: exact_value,
        }];
        let mut rng = RngStream::from_seed(31);
        let repeats = 40_000;
        let draws: Vec<f64> = (0..repeats)
            .map(|_| {
                estimate_mse(
                    &encoding,
                    &obs,
                    &theta,
                    &data,
                    &EstimatorConfig::full(1).with_batch(1),
                    &mut rng.child(0).child(rng.next_u64()),
                )
                .unwrap()
                .values[0]
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / repeats as f64;
        let std = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
            / (repeats - 1) as f64)
            .sqrt();
        assert!(
            mean.abs() < 5.0 * std / (repeats as f64).sqrt(),
            "mean {mean}, std {std}"
        );
    }

    #[test]
    fn mse_factor_streams_are_disjoint() {
        let parent = RngStream::from_seed(8).child(3).child(0);
        let (value, deriv) = mse_factor_streams(&parent);
        assert_ne!(value.stream_id(), deriv.stream_id());
    }

    #[test]
    fn mse_batch_validation() {
        let encoding = rx_encoding();
        let obs = PauliObservable::single(1.0, PauliString::z(0)).unwrap();
        let data = vec![Instance {
            features: vec![1.0, 0.0],
            label: 0.5,
        }];
        let mut rng = RngStream::from_seed(2);
        assert!(estimate_mse(
            &encoding,
            &obs,
            &[0.7],
            &[],
            &EstimatorConfig::full(1),
            &mut rng
        )
        .is_err());
        assert!(estimate_mse(
            &encoding,
            &obs,
            &[0.7],
            &data,
            &EstimatorConfig::full(1).with_batch(2),
            &mut rng
        )
        .is_err());
        assert!(estimate_mse_batch(
            &encoding,
            &obs,
            &[0.7],
            &data,
            &[],
            &EstimatorConfig::full(1),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn regularizer_gradient_and_addition() {
        let reg = Regularizer::L2 { lambda: 0.1 };
        let theta = [1.0, -2.0];
        assert_eq!(reg.gradient(&theta), vec![0.2, -0.4]);

        let est = GradientEstimate {
            values: vec![1.0, 1.0],
            measurements_used: 10,
            circuits_executed: 10,
        };
        let out = add_regularizer(est.clone(), &reg, &theta).unwrap();
        assert_abs_diff_eq!(out.values[0], 1.2);
        assert_abs_diff_eq!(out.values[1], 0.6);
        assert_eq!(out.measurements_used, 10);

        // lambda = 0 and theta = 0 leave the estimate unchanged.
        let zero_reg = Regularizer::L2 { lambda: 0.0 };
        assert_eq!(
            add_regularizer(est.clone(), &zero_reg, &theta).unwrap().values,
            est.values
        );
        let at_origin = add_regularizer(est.clone(), &reg, &[0.0, 0.0]).unwrap();
        assert_eq!(at_origin.values, est.values);

        assert!(add_regularizer(est, &reg, &[0.0]).is_err());
    }

    /// Brute-force U-statistic by enumerating ordered arrangements.
    fn u_statistic_brute(coeffs: &[f64], samples: &[f64]) -> f64 {
        let k = coeffs.len() - 1;
        let m = samples.len();
        fn arrangements(
            m: usize,
            k: usize,
            used: &mut Vec<bool>,
            chosen: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if chosen.len() == k {
                out.push(chosen.clone());
                return;
            }
            for i in 0..m {
                if !used[i] {
                    used[i] = true;
                    chosen.push(i);
                    arrangements(m, k, used, chosen, out);
                    chosen.pop();
                    used[i] = false;
                }
            }
        }
        let mut all = Vec::new();
        arrangements(m, k, &mut vec![false; m], &mut Vec::new(), &mut all);
        let total: f64 = all
            .iter()
            .map(|arr| {
                let mut h = coeffs[0];
                let mut prod = 1.0;
                for (j, &idx) in arr.iter().enumerate() {
                    prod *= samples[idx];
                    h += coeffs[j + 1] * prod;
                }
                h
            })
            .sum();
        total / all.len() as f64
    }

    #[test]
    fn u_statistic_linear_is_sample_mean() {
        let poly = PolynomialEstimator::new(vec![0.0, 1.0]).unwrap();
        let samples = [1.0, -1.0, 1.0, 1.0];
        assert_abs_diff_eq!(poly.u_statistic(&samples).unwrap(), 0.5);
    }

    #[test]
    fn u_statistic_square_of_two_samples_is_product() {
        let poly = PolynomialEstimator::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(poly.u_statistic(&[3.0, 5.0]).unwrap(), 15.0);
        assert_abs_diff_eq!(poly.u_statistic(&[-1.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn u_statistic_matches_arrangement_enumeration() {
        let mut rng = RngStream::from_seed(17);
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..4).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let poly = PolynomialEstimator::new(coeffs.clone()).unwrap();
            let m = 3 + rng.gen_range(4) as usize;
            let samples: Vec<f64> = (0..m).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let fast = poly.u_statistic(&samples).unwrap();
            let brute = u_statistic_brute(poly.coefficients(), &samples);
            assert_abs_diff_eq!(fast, brute, epsilon = 1e-10);
        }
    }

    #[test]
    fn u_statistic_permutation_symmetric_bitwise() {
        let poly = PolynomialEstimator::new(vec![0.3, -1.0, 0.7, 0.2]).unwrap();
        let samples = [0.25, 0.9, -0.4, 0.11, 0.6];
        let base = poly.u_statistic(&samples).unwrap();
        let mut perm = samples;
        perm.reverse();
        assert_eq!(base.to_bits(), poly.u_statistic(&perm).unwrap().to_bits());
        perm.swap(0, 2);
        assert_eq!(base.to_bits(), poly.u_statistic(&perm).unwrap().to_bits());
    }

    #[test]
    fn u_statistic_budget_checked() {
        let poly = PolynomialEstimator::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(poly.u_statistic(&[1.0]).is_err());
        assert!(poly.u_statistic(&[1.0, 2.0]).is_ok());
    }

    #[test]
    fn unbiasedness_full_estimator_quick() {
        // Smaller-scale version of the acceptance battery: empirical mean over
        // 20k draws within 5 standard errors of the exact gradient.
        let circuit = build_sigma_block_ansatz(2, 1).unwrap();
        let h = tfim_2q();
        let zero = StateVector::zero_state(2).unwrap();
        let theta = [0.8, 2.1];
        let exact = exact_gradient(&circuit, &h, &theta, &zero).unwrap();
        let root = RngStream::from_seed(123);
        let repeats = 20_000;
        let mut sums = vec![0.0; 2];
        let mut sq = vec![0.0; 2];
        for i in 0..repeats {
            let mut rng = root.child(i);
            let est = estimate_vqe_full(
                &circuit,
                &h,
                &theta,
                &zero,
                &EstimatorConfig::full(1),
                &mut rng,
            )
            .unwrap();
            for (c, v) in est.values.iter().enumerate() {
                sums[c] += v;
                sq[c] += v * v;
            }
        }
        for c in 0..2 {
            let mean = sums[c] / repeats as f64;
            let var = sq[c] / repeats as f64 - mean * mean;
            let se = (var / repeats as f64).sqrt();
            assert!(
                (mean - exact[c]).abs() < 5.0 * se,
                "slot {c}: mean {mean} vs exact {} (se {se})",
                exact[c]
            );
        }
    }
}
