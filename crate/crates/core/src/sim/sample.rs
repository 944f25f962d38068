//! Finite-shot measurement sampling of Pauli observables.
//!
//! Sampling follows the hardware procedure: rotate into the joint eigenbasis
//! of a (qubit-wise commuting) set of strings with local basis-change gates,
//! then draw computational-basis bitstrings from the Born distribution. All
//! strings of one group read their eigenvalues off the same bitstrings.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sim::gate::FixedGate;
use crate::sim::pauli::{Pauli, PauliObservable, PauliString};
use crate::sim::state::StateVector;

/// Running totals of simulated measurement effort.
///
/// `measurements` counts Born-rule samples consumed (one per term per shot);
/// `circuits` counts state preparations (one per shot per measurement
/// context). The two differ only when commuting terms share contexts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShotLedger {
    pub measurements: u64,
    pub circuits: u64,
}

impl ShotLedger {
    pub fn add(&mut self, other: ShotLedger) {
        self.measurements += other.measurements;
        self.circuits += other.circuits;
    }
}

/// Rotates a copy of `state` so that measuring Z on each assigned qubit
/// realizes a measurement of the given letter.
fn rotate_to_joint_basis(state: &StateVector, letters: &[(usize, Pauli)]) -> Result<StateVector> {
    let mut rotated = state.clone();
    for &(qubit, letter) in letters {
        match letter {
            Pauli::Z => {}
            Pauli::X => FixedGate::H(qubit).apply(&mut rotated)?,
            Pauli::Y => {
                FixedGate::Sdg(qubit).apply(&mut rotated)?;
                FixedGate::H(qubit).apply(&mut rotated)?;
            }
        }
    }
    Ok(rotated)
}

/// Merges the letters of a qubit-wise commuting set of strings into one
/// qubit -> letter assignment.
fn joint_letters(strings: &[&PauliString]) -> Result<Vec<(usize, Pauli)>> {
    let mut letters: Vec<(usize, Pauli)> = Vec::new();
    for string in strings {
        for &(q, p) in string.factors() {
            match letters.iter().find(|&&(lq, _)| lq == q) {
                Some(&(_, existing)) if existing != p => {
                    return Err(Error::InvalidGrouping(format!(
                        "conflicting letters {} and {} on qubit {q}",
                        existing.as_char(),
                        p.as_char()
                    )))
                }
                Some(_) => {}
                None => letters.push((q, p)),
            }
        }
    }
    Ok(letters)
}

/// Cumulative Born distribution of `state`.
fn cumulative_distribution(state: &StateVector) -> Vec<f64> {
    let mut cumulative = state.probabilities();
    let mut acc = 0.0;
    for p in cumulative.iter_mut() {
        acc += *p;
        *p = acc;
    }
    cumulative
}

#[inline]
fn draw_bitstring(cumulative: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.next_f64();
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

/// Draws `n` basis-state indices from the Born distribution of `state`.
fn draw_bitstrings(state: &StateVector, n: u64, rng: &mut RngStream) -> Vec<usize> {
    let cumulative = cumulative_distribution(state);
    (0..n).map(|_| draw_bitstring(&cumulative, rng)).collect()
}

#[inline]
fn eigenvalue(bits: usize, support_mask: u64) -> f64 {
    if (bits as u64 & support_mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Mean of `n` single-shot eigenvalue samples of one Pauli string.
pub fn sample_term(
    state: &StateVector,
    pauli: &PauliString,
    n: u64,
    rng: &mut RngStream,
    ledger: &mut ShotLedger,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroShots);
    }
    if let Some(q) = pauli.max_qubit() {
        state.check_qubit(q)?;
    }
    // Z-only strings are measured in the computational basis as-is; anything
    // else measures a locally rotated copy.
    let cumulative = if pauli.flip_mask() == 0 {
        cumulative_distribution(state)
    } else {
        let rotated = rotate_to_joint_basis(state, &joint_letters(&[pauli])?)?;
        cumulative_distribution(&rotated)
    };
    let support = pauli.support_mask();
    let mut sum = 0.0;
    for _ in 0..n {
        sum += eigenvalue(draw_bitstring(&cumulative, rng), support);
    }
    ledger.measurements += n;
    ledger.circuits += n;
    Ok(sum / n as f64)
}

/// n-shot sample estimate of a full observable. Terms inside one group of
/// `grouping` share measurement contexts; without a grouping every term gets
/// its own independent n-shot context.
pub fn sample_observable(
    state: &StateVector,
    obs: &PauliObservable,
    n: u64,
    rng: &mut RngStream,
    grouping: Option<&[Vec<usize>]>,
    ledger: &mut ShotLedger,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroShots);
    }
    if let Some(q) = obs.max_qubit() {
        state.check_qubit(q)?;
    }
    let singleton_groups;
    let groups: &[Vec<usize>] = match grouping {
        Some(groups) => {
            obs.validate_grouping(groups)?;
            groups
        }
        None => {
            singleton_groups = (0..obs.num_terms()).map(|i| vec![i]).collect::<Vec<_>>();
            &singleton_groups
        }
    };

    let mut total = 0.0;
    for group in groups {
        total += sample_terms_shared(state, obs, group, n, rng, ledger)?;
    }
    Ok(total)
}

/// Samples the listed terms of `obs` from `n` shared measurement contexts
/// (the terms must be qubit-wise commuting) and returns the weighted sum of
/// the per-term sample means.
pub fn sample_terms_shared(
    state: &StateVector,
    obs: &PauliObservable,
    term_indices: &[usize],
    n: u64,
    rng: &mut RngStream,
    ledger: &mut ShotLedger,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroShots);
    }
    let strings: Vec<&PauliString> = term_indices
        .iter()
        .map(|&i| {
            obs.terms()
                .get(i)
                .map(|(_, s)| s)
                .ok_or_else(|| Error::InvalidGrouping(format!("term index {i} out of range")))
        })
        .collect::<Result<_>>()?;
    let letters = joint_letters(&strings)?;
    let cumulative = if letters.iter().all(|&(_, p)| p == Pauli::Z) {
        cumulative_distribution(state)
    } else {
        cumulative_distribution(&rotate_to_joint_basis(state, &letters)?)
    };
    let mut sums = vec![0.0; term_indices.len()];
    for _ in 0..n {
        let bits = draw_bitstring(&cumulative, rng);
        for (sum, &idx) in sums.iter_mut().zip(term_indices) {
            *sum += eigenvalue(bits, obs.terms()[idx].1.support_mask());
        }
    }
    let mut total = 0.0;
    for (sum, &idx) in sums.iter().zip(term_indices) {
        total += obs.terms()[idx].0 * sum / n as f64;
    }
    ledger.circuits += n;
    ledger.measurements += n * term_indices.len() as u64;
    Ok(total)
}
