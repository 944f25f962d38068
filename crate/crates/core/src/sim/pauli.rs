//! Pauli strings and weighted Pauli-sum observables.

use crate::error::{Error, Result};
use std::fmt;

/// Single-qubit Pauli factor. Identity factors are represented by absence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis, stored sparsely as
/// `(qubit, factor)` pairs sorted by qubit. The empty string is the identity.
/// Basis-action masks are precomputed; gate kernels hit them every call.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<(usize, Pauli)>,
    flip_mask: u64,
    phase_mask: u64,
    support_mask: u64,
    y_count: usize,
}

impl PauliString {
    pub fn new(mut factors: Vec<(usize, Pauli)>) -> Result<Self> {
        factors.sort_by_key(|&(q, _)| q);
        for pair in factors.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidObservable(format!(
                    "duplicate qubit {} in Pauli string",
                    pair[0].0
                )));
            }
        }
        let mut flip_mask = 0;
        let mut phase_mask = 0;
        let mut support_mask = 0;
        let mut y_count = 0;
        for &(q, p) in &factors {
            let bit = 1u64 << q;
            support_mask |= bit;
            if p != Pauli::Z {
                flip_mask |= bit;
            }
            if p != Pauli::X {
                phase_mask |= bit;
            }
            if p == Pauli::Y {
                y_count += 1;
            }
        }
        Ok(Self {
            factors,
            flip_mask,
            phase_mask,
            support_mask,
            y_count,
        })
    }

    pub fn identity() -> Self {
        Self::new(vec![]).expect("identity is always valid")
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self::new(vec![(qubit, p)]).expect("single factor is always valid")
    }

    pub fn x(qubit: usize) -> Self {
        Self::single(qubit, Pauli::X)
    }

    pub fn y(qubit: usize) -> Self {
        Self::single(qubit, Pauli::Y)
    }

    pub fn z(qubit: usize) -> Self {
        Self::single(qubit, Pauli::Z)
    }

    pub fn zz(a: usize, b: usize) -> Result<Self> {
        Self::new(vec![(a, Pauli::Z), (b, Pauli::Z)])
    }

    /// Parses a dense letter string, e.g. `"ZIX"` puts Z on qubit 0 and X on
    /// qubit 2.
    pub fn parse_dense(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for (q, c) in s.chars().enumerate() {
            match c {
                'I' | 'i' => {}
                'X' | 'x' => factors.push((q, Pauli::X)),
                'Y' | 'y' => factors.push((q, Pauli::Y)),
                'Z' | 'z' => factors.push((q, Pauli::Z)),
                other => {
                    return Err(Error::InvalidObservable(format!(
                        "unknown Pauli letter '{other}'"
                    )))
                }
            }
        }
        Self::new(factors)
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn factor_on(&self, qubit: usize) -> Option<Pauli> {
        self.factors
            .iter()
            .find(|&&(q, _)| q == qubit)
            .map(|&(_, p)| p)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.last().map(|&(q, _)| q)
    }

    /// Bit mask of qubits where the string acts non-trivially.
    #[inline]
    pub fn support_mask(&self) -> u64 {
        self.support_mask
    }

    /// Bit mask of qubits flipped in the computational basis (X or Y).
    #[inline]
    pub fn flip_mask(&self) -> u64 {
        self.flip_mask
    }

    /// Bit mask of qubits contributing a (-1)^bit phase (Y or Z).
    #[inline]
    pub fn phase_mask(&self) -> u64 {
        self.phase_mask
    }

    #[inline]
    pub fn y_count(&self) -> usize {
        self.y_count
    }

    /// Qubit-wise commutation: on every shared qubit the factors agree.
    pub fn qubit_wise_commutes(&self, other: &Self) -> bool {
        let (mut a, mut b) = (self.factors.iter().peekable(), other.factors.iter().peekable());
        while let (Some(&&(qa, pa)), Some(&&(qb, pb))) = (a.peek(), b.peek()) {
            match qa.cmp(&qb) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    if pa != pb {
                        return false;
                    }
                    a.next();
                    b.next();
                }
            }
        }
        true
    }

    /// Full Pauli commutation: the strings commute iff they disagree on an
    /// even number of shared qubits.
    pub fn commutes(&self, other: &Self) -> bool {
        let mut disagreements = 0usize;
        for &(q, p) in &self.factors {
            if let Some(p2) = other.factor_on(q) {
                if p != p2 {
                    disagreements += 1;
                }
            }
        }
        disagreements % 2 == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "I");
        }
        for (i, &(q, p)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", p.as_char(), q)?;
        }
        Ok(())
    }
}

/// A real-weighted sum of Pauli strings. Duplicate strings are merged on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliObservable {
    terms: Vec<(f64, PauliString)>,
}

impl PauliObservable {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut merged: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        for (coeff, string) in terms {
            if !coeff.is_finite() {
                return Err(Error::InvalidObservable(format!(
                    "non-finite coefficient for {string}"
                )));
            }
            match merged.iter_mut().find(|(_, s)| *s == string) {
                Some((c, _)) => *c += coeff,
                None => merged.push((coeff, string)),
            }
        }
        Ok(Self { terms: merged })
    }

    pub fn single(coeff: f64, string: PauliString) -> Result<Self> {
        Self::new(vec![(coeff, string)])
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficients; an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(_, s)| s.max_qubit()).max()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(c, s)| (c * factor, s.clone()))
                .collect(),
        }
    }

    /// True when every pair of terms commutes (full Pauli commutation).
    pub fn all_terms_commute(&self) -> bool {
        for (i, (_, a)) in self.terms.iter().enumerate() {
            for (_, b) in &self.terms[i + 1..] {
                if !a.commutes(b) {
                    return false;
                }
            }
        }
        true
    }

    /// Greedy first-fit partition into qubit-wise commuting groups. Returns
    /// term indices; every term lands in exactly one group.
    pub fn qubit_wise_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (idx, (_, string)) in self.terms.iter().enumerate() {
            let fit = groups.iter_mut().find(|group| {
                group
                    .iter()
                    .all(|&member| self.terms[member].1.qubit_wise_commutes(string))
            });
            match fit {
                Some(group) => group.push(idx),
                None => groups.push(vec![idx]),
            }
        }
        groups
    }

    /// Validates a caller-supplied grouping: a partition of term indices into
    /// qubit-wise commuting classes.
    pub fn validate_grouping(&self, groups: &[Vec<usize>]) -> Result<()> {
        let mut seen = vec![false; self.terms.len()];
        for group in groups {
            for &idx in group {
                let Some(slot) = seen.get_mut(idx) else {
                    return Err(Error::InvalidGrouping(format!(
                        "term index {idx} out of range"
                    )));
                };
                if *slot {
                    return Err(Error::InvalidGrouping(format!(
                        "term index {idx} appears in more than one group"
                    )));
                }
                *slot = true;
            }
            for (i, &a) in group.iter().enumerate() {
                for &b in &group[i + 1..] {
                    if !self.terms[a].1.qubit_wise_commutes(&self.terms[b].1) {
                        return Err(Error::InvalidGrouping(format!(
                            "terms {a} and {b} are not qubit-wise commuting"
                        )));
                    }
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidGrouping(
                "grouping does not cover every term".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*({s})")?;
        }
        Ok(())
    }
}
