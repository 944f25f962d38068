//! MaxCut QAOA benchmark.

use crate::circuits::{build_qaoa_ansatz, ParamCircuit};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sim::{
    sample_observable, FixedGate, PauliObservable, PauliString, ShotLedger, StateVector,
};
use crate::tasks::spectrum;

/// MaxCut QAOA benchmark on a simple undirected graph. The problem
/// Hamiltonian carries one ZZ term of weight +1 per edge; its ground states
/// encode maximum cuts.
#[derive(Debug, Clone)]
pub struct MaxCutTask {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub problem: PauliObservable,
    pub mixer: PauliObservable,
    /// Total slot count d (= 2 * alternations).
    pub depth: usize,
    pub circuit: ParamCircuit,
    pub ground_energy: f64,
}

fn normalize_edges(num_vertices: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut normalized = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        if a == b {
            return Err(Error::InvalidConfig(format!("self-loop on vertex {a}")));
        }
        if a >= num_vertices || b >= num_vertices {
            return Err(Error::InvalidConfig(format!(
                "edge ({a}, {b}) outside vertex range 0..{num_vertices}"
            )));
        }
        normalized.push((a.min(b), a.max(b)));
    }
    let mut dedup = normalized.clone();
    dedup.sort_unstable();
    dedup.dedup();
    if dedup.len() != normalized.len() {
        return Err(Error::InvalidConfig("duplicate edge in graph".into()));
    }
    Ok(normalized)
}

pub fn build_maxcut(
    num_vertices: usize,
    edges: &[(usize, usize)],
    depth: usize,
) -> Result<MaxCutTask> {
    if num_vertices < 2 {
        return Err(Error::InvalidConfig("need at least 2 vertices".into()));
    }
    if depth < 2 || depth % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "depth must be an even slot count >= 2, got {depth}"
        )));
    }
    let edges = normalize_edges(num_vertices, edges)?;
    if edges.is_empty() {
        return Err(Error::InvalidConfig("graph has no edges".into()));
    }
    let problem = PauliObservable::new(
        edges
            .iter()
            .map(|&(a, b)| Ok((1.0, PauliString::zz(a, b)?)))
            .collect::<Result<_>>()?,
    )?;
    let mixer = PauliObservable::new(
        (0..num_vertices)
            .map(|v| (1.0, PauliString::x(v)))
            .collect(),
    )?;
    let circuit = build_qaoa_ansatz(num_vertices, &problem, &mixer, depth / 2)?;
    let ground_energy = spectrum::ground_energy(&problem, num_vertices)?;
    Ok(MaxCutTask {
        num_vertices,
        edges,
        problem,
        mixer,
        depth,
        circuit,
        ground_energy,
    })
}

impl MaxCutTask {
    /// Linear-interpolation initialization: with 1-based slot index j, odd
    /// slots (problem layers) start at j/d and even slots (mixer layers) at
    /// 1 - j/d.
    pub fn init_theta(&self) -> Vec<f64> {
        let d = self.depth as f64;
        (1..=self.depth)
            .map(|j| {
                if j % 2 == 1 {
                    j as f64 / d
                } else {
                    1.0 - j as f64 / d
                }
            })
            .collect()
    }

    /// Uniform superposition |+...+>.
    pub fn initial_state(&self) -> Result<StateVector> {
        let mut state = StateVector::zero_state(self.num_vertices)?;
        for q in 0..self.num_vertices {
            FixedGate::H(q).apply(&mut state)?;
        }
        Ok(state)
    }

    /// Size of a maximum cut: each cut edge lowers the energy by 2 from |E|.
    pub fn max_cut(&self) -> usize {
        ((self.edges.len() as f64 - self.ground_energy) / 2.0).round() as usize
    }

    pub fn exact_loss(&self, theta: &[f64]) -> Result<f64> {
        self.circuit
            .evaluate(theta, &self.initial_state()?)?
            .expectation(&self.problem)
    }

    pub fn sampled_loss(&self, theta: &[f64], shots: u64, rng: &mut RngStream) -> Result<f64> {
        let state = self.circuit.evaluate(theta, &self.initial_state()?)?;
        let mut ledger = ShotLedger::default();
        sample_observable(&state, &self.problem, shots, rng, None, &mut ledger)
    }

    /// Energy normalized by |ground energy| and shifted by +1, so the minimum
    /// over states is 0 and random guessing sits near 1.
    pub fn normalized_cost(&self, energy: f64) -> f64 {
        energy / self.ground_energy.abs() + 1.0
    }
}

/// Draws a uniformly random simple graph with exactly `num_edges` edges.
pub fn random_maxcut_instance(
    num_vertices: usize,
    num_edges: usize,
    rng: &mut RngStream,
) -> Result<Vec<(usize, usize)>> {
    let max_edges = num_vertices * num_vertices.saturating_sub(1) / 2;
    if num_edges > max_edges {
        return Err(Error::InvalidConfig(format!(
            "{num_edges} edges requested but {num_vertices} vertices admit at most {max_edges}"
        )));
    }
    if num_edges == 0 {
        return Err(Error::InvalidConfig("need at least one edge".into()));
    }
    let mut all: Vec<(usize, usize)> = (0..num_vertices)
        .flat_map(|a| ((a + 1)..num_vertices).map(move |b| (a, b)))
        .collect();
    // Partial Fisher-Yates: the first num_edges entries are a uniform sample
    // without replacement.
    for i in 0..num_edges {
        let j = i + rng.gen_range((all.len() - i) as u64) as usize;
        all.swap(i, j);
    }
    all.truncate(num_edges);
    all.sort_unstable();
    Ok(all)
}
