//! MSE binary classification benchmark with amplitude encoding.

use crate::circuits::{build_sigma_block_ansatz, Encoder, EncodingCircuit};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_mse_batch, BatchMode, EstimatorConfig, GradientEstimate, Instance,
};
use crate::gradients::exact_gradient;
use crate::optimizers::{OptimizerConfig, OptimizerState};
use crate::rng::RngStream;
use crate::sim::{sample_term, PauliObservable, PauliString, ShotLedger};
use crate::tasks::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

/// Binary classifier: amplitude-encoded features, a variational circuit, a
/// single-qubit Z readout, and the decision rule sign(<Z>).
#[derive(Debug, Clone)]
pub struct ClassifierTask {
    pub encoding: EncodingCircuit,
    pub readout: PauliObservable,
    pub dataset: Dataset,
}

/// Sigma-block classifier over the dataset's feature dimension (which must be
/// a power of two). The readout is Z on the first qubit.
pub fn build_classifier(num_blocks: usize, dataset: Dataset) -> Result<ClassifierTask> {
    dataset.validate()?;
    let dim = dataset.feature_dim();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidDataset(format!(
            "feature dimension {dim} is not a power of two >= 2"
        )));
    }
    let num_qubits = dim.trailing_zeros() as usize;
    let circuit = build_sigma_block_ansatz(num_qubits, num_blocks)?;
    Ok(ClassifierTask {
        encoding: EncodingCircuit::new(Encoder::Amplitude, circuit),
        readout: PauliObservable::single(1.0, PauliString::z(0))?,
        dataset,
    })
}

impl ClassifierTask {
    pub fn new(encoding: EncodingCircuit, readout: PauliObservable, dataset: Dataset) -> Self {
        Self {
            encoding,
            readout,
            dataset,
        }
    }

    pub fn num_params(&self) -> usize {
        self.encoding.circuit.num_params()
    }

    pub fn init_theta(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.num_params())
            .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
            .collect()
    }

    pub fn split(&self, split: Split) -> &[Instance] {
        match split {
            Split::Train => &self.dataset.train,
            Split::Validation => &self.dataset.validation,
        }
    }

    /// Exact readout expectation for one feature vector.
    pub fn expectation_for(&self, theta: &[f64], features: &[f64]) -> Result<f64> {
        let initial = self.encoding.initial_state(features)?;
        self.encoding
            .circuit
            .evaluate(theta, &initial)?
            .expectation(&self.readout)
    }

    /// Decision rule: +1 when the readout expectation is >= 0, else -1.
    pub fn predict(&self, theta: &[f64], features: &[f64]) -> Result<f64> {
        Ok(if self.expectation_for(theta, features)? >= 0.0 {
            1.0
        } else {
            -1.0
        })
    }

    /// Mean squared residual over a split, exact expectations.
    pub fn exact_loss(&self, theta: &[f64], split: Split) -> Result<f64> {
        let instances = self.split(split);
        if instances.is_empty() {
            return Err(Error::InvalidDataset("empty split".into()));
        }
        let mut total = 0.0;
        for instance in instances {
            let o = self.expectation_for(theta, &instance.features)?;
            total += (o - instance.label).powi(2);
        }
        Ok(total / instances.len() as f64)
    }

    /// Mean squared residual with n-shot readout estimates.
    pub fn sampled_loss(
        &self,
        theta: &[f64],
        split: Split,
        shots: u64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let instances = self.split(split);
        if instances.is_empty() {
            return Err(Error::InvalidDataset("empty split".into()));
        }
        let mut ledger = ShotLedger::default();
        let mut total = 0.0;
        for instance in instances {
            let initial = self.encoding.initial_state(&instance.features)?;
            let state = self.encoding.circuit.evaluate(theta, &initial)?;
            let mut o = 0.0;
            for (coeff, string) in self.readout.terms() {
                o += coeff * sample_term(&state, string, shots, rng, &mut ledger)?;
            }
            total += (o - instance.label).powi(2);
        }
        Ok(total / instances.len() as f64)
    }

    /// Fraction of validation instances with sign(<O>) equal to the label,
    /// exact expectations.
    pub fn validation_accuracy(&self, theta: &[f64]) -> Result<f64> {
        let instances = &self.dataset.validation;
        if instances.is_empty() {
            return Err(Error::InvalidDataset("empty validation split".into()));
        }
        let mut correct = 0usize;
        for instance in instances {
            if self.predict(theta, &instance.features)? == instance.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / instances.len() as f64)
    }

    /// Exact gradient of the single-instance squared residual:
    /// 2 (<O> - y) * d<O>/dtheta.
    pub fn exact_instance_gradient(&self, theta: &[f64], instance: &Instance) -> Result<Vec<f64>> {
        let initial = self.encoding.initial_state(&instance.features)?;
        let o = self
            .encoding
            .circuit
            .evaluate(theta, &initial)?
            .expectation(&self.readout)?;
        let mut grad = exact_gradient(&self.encoding.circuit, &self.readout, theta, &initial)?;
        let residual = 2.0 * (o - instance.label);
        for g in &mut grad {
            *g *= residual;
        }
        Ok(grad)
    }

    /// Exact gradient of the full dataset MSE loss.
    pub fn exact_batch_gradient(&self, theta: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let mut acc = vec![0.0; self.num_params()];
        for &j in batch {
            let instance = self
                .dataset
                .train
                .get(j)
                .ok_or_else(|| Error::InvalidDataset(format!("train index {j} out of range")))?;
            let g = self.exact_instance_gradient(theta, instance)?;
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= batch.len() as f64;
        }
        Ok(acc)
    }
}

/// How training gradients are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingMode {
    /// Finite-shot doubly stochastic estimation per the estimator config.
    DoublyStochastic(EstimatorConfig),
    /// Exact expectation values (simulator privilege); consumes no
    /// measurements.
    ExactSgd { batch_size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub validation_accuracy: f64,
    /// Exact train loss after the epoch (monitoring only).
    pub train_loss: f64,
    /// Learning rate after the epoch.
    pub alpha: f64,
    /// Mean gradient-estimate norm over the epoch's steps.
    pub mean_grad_norm: f64,
    pub cumulative_measurements: u64,
    pub cumulative_circuits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub epochs: Vec<EpochRecord>,
    pub final_theta: Vec<f64>,
}

/// Epoch-based training: each epoch takes ceil(train/batch) optimization
/// steps and ends with an exact-expectation validation pass. Deterministic
/// given the rng stream.
pub fn train_classifier(
    task: &ClassifierTask,
    initial_theta: Vec<f64>,
    optimizer: &OptimizerConfig,
    mode: &TrainingMode,
    num_epochs: usize,
    rng: &RngStream,
) -> Result<TrainingOutcome> {
    if num_epochs == 0 {
        return Err(Error::InvalidConfig("need at least one epoch".into()));
    }
    let train_len = task.dataset.train.len();
    if train_len == 0 {
        return Err(Error::InvalidDataset("empty training split".into()));
    }
    let (batch_size, batch_mode) = match mode {
        TrainingMode::DoublyStochastic(config) => {
            config.validate()?;
            if config.batch_size > train_len {
                return Err(Error::InvalidConfig(format!(
                    "batch size {} exceeds training size {train_len}",
                    config.batch_size
                )));
            }
            (config.batch_size, config.batch_mode)
        }
        TrainingMode::ExactSgd { batch_size } => {
            if *batch_size == 0 || *batch_size > train_len {
                return Err(Error::InvalidConfig(format!(
                    "batch size {batch_size} outside 1..={train_len}"
                )));
            }
            (*batch_size, BatchMode::EpochShuffle)
        }
    };
    let steps_per_epoch = train_len.div_ceil(batch_size);
    let mut state = OptimizerState::new(initial_theta, optimizer)?;
    let mut ledger = ShotLedger::default();
    let mut epochs = Vec::with_capacity(num_epochs);

    for epoch in 0..num_epochs {
        let epoch_rng = rng.child(epoch as u64);
        let mut order: Vec<usize> = (0..train_len).collect();
        if batch_mode == BatchMode::EpochShuffle {
            let mut shuffle_rng = epoch_rng.child(u64::MAX);
            shuffle_rng.shuffle(&mut order);
        }
        let mut grad_norm_sum = 0.0;
        for step in 0..steps_per_epoch {
            let mut step_rng = epoch_rng.child(step as u64);
            let batch: Vec<usize> = match batch_mode {
                BatchMode::EpochShuffle => order
                    .iter()
                    .cycle()
                    .skip(step * batch_size)
                    .take(batch_size)
                    .copied()
                    .collect(),
                BatchMode::WithReplacement => {
                    let mut draw_rng = step_rng.child(u64::MAX);
                    (0..batch_size)
                        .map(|_| draw_rng.gen_range(train_len as u64) as usize)
                        .collect()
                }
            };
            let estimate = match mode {
                TrainingMode::DoublyStochastic(config) => estimate_mse_batch(
                    &task.encoding,
                    &task.readout,
                    &state.theta,
                    &task.dataset.train,
                    &batch,
                    config,
                    &mut step_rng,
                )?,
                TrainingMode::ExactSgd { .. } => GradientEstimate {
                    values: task.exact_batch_gradient(&state.theta, &batch)?,
                    measurements_used: 0,
                    circuits_executed: 0,
                },
            };
            ledger.measurements += estimate.measurements_used;
            ledger.circuits += estimate.circuits_executed;
            grad_norm_sum += estimate.norm();
            // Plateau monitoring uses the exact batch residual.
            let batch_loss = {
                let mut total = 0.0;
                for &j in &batch {
                    let instance = &task.dataset.train[j];
                    let o = task.expectation_for(&state.theta, &instance.features)?;
                    total += (o - instance.label).powi(2);
                }
                total / batch.len() as f64
            };
            state.step(&estimate, Some(batch_loss))?;
        }
        epochs.push(EpochRecord {
            epoch,
            validation_accuracy: task.validation_accuracy(&state.theta)?,
            train_loss: task.exact_loss(&state.theta, Split::Train)?,
            alpha: state.alpha,
            mean_grad_norm: grad_norm_sum / steps_per_epoch as f64,
            cumulative_measurements: ledger.measurements,
            cumulative_circuits: ledger.circuits,
        });
    }
    Ok(TrainingOutcome {
        epochs,
        final_theta: state.theta,
    })
}
