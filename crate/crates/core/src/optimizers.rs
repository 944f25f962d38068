//! The outer optimization loop with constant, plateau-decay, and Adam
//! learning-rate strategies.

use crate::error::{Error, Result};
use crate::estimators::GradientEstimate;
use crate::rng::RngStream;

/// Learning-rate strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Constant,
    /// Halve the learning rate when the monitored loss has not decreased in
    /// the last `window` steps.
    PlateauDecay { window: usize, factor: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Strategy {
    /// Plateau decay with the window of 20 steps and factor 2.
    pub fn plateau_default() -> Self {
        Strategy::PlateauDecay {
            window: 20,
            factor: 2.0,
        }
    }

    pub fn adam_default() -> Self {
        Strategy::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub strategy: Strategy,
    /// Initial learning rate.
    pub alpha0: f64,
    /// Number of optimization steps.
    pub max_steps: usize,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.alpha0
            )));
        }
        match self.strategy {
            Strategy::PlateauDecay { window, factor } => {
                if window < 1 {
                    return Err(Error::InvalidConfig("plateau window must be >= 1".into()));
                }
                if !(factor > 1.0) {
                    return Err(Error::InvalidConfig(
                        "plateau decay factor must exceed 1".into(),
                    ));
                }
            }
            Strategy::Adam { beta1, beta2, .. } => {
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                    return Err(Error::InvalidConfig(
                        "Adam betas must lie in [0, 1)".into(),
                    ));
                }
            }
            Strategy::Constant => {}
        }
        Ok(())
    }
}

/// Mutable optimizer state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    pub step: usize,
    pub alpha: f64,
    strategy: Strategy,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    best_loss: Option<f64>,
    steps_since_improvement: usize,
}

impl OptimizerState {
    pub fn new(theta: Vec<f64>, config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let d = theta.len();
        Ok(Self {
            theta,
            step: 0,
            alpha: config.alpha0,
            strategy: config.strategy,
            first_moment: vec![0.0; d],
            second_moment: vec![0.0; d],
            best_loss: None,
            steps_since_improvement: 0,
        })
    }

    /// Applies one update. `loss_observation` feeds the plateau detector and
    /// is required for the plateau strategy.
    pub fn step(
        &mut self,
        estimate: &GradientEstimate,
        loss_observation: Option<f64>,
    ) -> Result<()> {
        if estimate.values.len() != self.theta.len() {
            return Err(Error::InvalidConfig(format!(
                "gradient has {} components, theta has {}",
                estimate.values.len(),
                self.theta.len()
            )));
        }
        match self.strategy {
            Strategy::Constant => {
                self.apply_plain(&estimate.values);
            }
            Strategy::PlateauDecay { window, factor } => {
                let loss = loss_observation.ok_or_else(|| {
                    Error::InvalidConfig(
                        "plateau decay requires a loss observation per step".into(),
                    )
                })?;
                // "Has not decreased" tracks the running best: a step without
                // a strict improvement grows the counter, `window` stale steps
                // trigger one halving, then the counter restarts.
                match self.best_loss {
                    Some(best) if loss < best => {
                        self.best_loss = Some(loss);
                        self.steps_since_improvement = 0;
                    }
                    Some(_) => {
                        self.steps_since_improvement += 1;
                        if self.steps_since_improvement >= window {
                            self.alpha /= factor;
                            self.steps_since_improvement = 0;
                        }
                    }
                    None => {
                        self.best_loss = Some(loss);
                        self.steps_since_improvement = 0;
                    }
                }
                self.apply_plain(&estimate.values);
            }
            Strategy::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let t = (self.step + 1) as i32;
                let bias1 = 1.0 - beta1.powi(t);
                let bias2 = 1.0 - beta2.powi(t);
                for i in 0..self.theta.len() {
                    let g = estimate.values[i];
                    self.first_moment[i] = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
                    self.second_moment[i] =
                        beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.first_moment[i] / bias1;
                    let v_hat = self.second_moment[i] / bias2;
                    self.theta[i] -= self.alpha * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
        self.step += 1;
        Ok(())
    }

    fn apply_plain(&mut self, gradient: &[f64]) {
        for (t, g) in self.theta.iter_mut().zip(gradient) {
            *t -= self.alpha * g;
        }
    }
}

/// One per-step record of an optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    /// Exact loss, monitored for inspection; its evaluation is not charged to
    /// the measurement ledger.
    pub loss: f64,
    pub alpha: f64,
    pub grad_norm: f64,
    pub cumulative_measurements: u64,
    pub cumulative_circuits: u64,
}

/// Full per-step trace of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_theta: Vec<f64>,
}

impl RunTrace {
    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }
}

/// The task closures driving a run: a stochastic gradient estimator and an
/// exact loss for monitoring.
pub struct RunSpec<'a> {
    pub estimator: &'a mut dyn FnMut(&[f64], &mut RngStream) -> Result<GradientEstimate>,
    pub exact_loss: &'a dyn Fn(&[f64]) -> Result<f64>,
}

/// Runs the optimization loop for `config.max_steps` steps. Deterministic
/// given the seed stream: step t draws from `rng.child(t)`.
pub fn run(
    initial_theta: Vec<f64>,
    spec: &mut RunSpec<'_>,
    config: &OptimizerConfig,
    rng: &RngStream,
) -> Result<RunTrace> {
    run_with_observer(initial_theta, spec, config, rng, &mut |_| {})
}

/// Same as [`run`] with a per-record callback (used for incremental trace
/// flushing).
pub fn run_with_observer(
    initial_theta: Vec<f64>,
    spec: &mut RunSpec<'_>,
    config: &OptimizerConfig,
    rng: &RngStream,
    observer: &mut dyn FnMut(&TraceRecord),
) -> Result<RunTrace> {
    if config.max_steps == 0 {
        return Err(Error::InvalidConfig("run needs at least one step".into()));
    }
    let mut state = OptimizerState::new(initial_theta, config)?;
    let mut records = Vec::with_capacity(config.max_steps);
    let mut cumulative = (0u64, 0u64);
    for t in 0..config.max_steps {
        let loss = (spec.exact_loss)(&state.theta)?;
        let mut step_rng = rng.child(t as u64);
        let estimate = (spec.estimator)(&state.theta, &mut step_rng)
            .map_err(|e| Error::StepFailed {
                step: t,
                source: Box::new(e),
            })?;
        cumulative.0 += estimate.measurements_used;
        cumulative.1 += estimate.circuits_executed;
        state.step(&estimate, Some(loss))?;
        let record = TraceRecord {
            step: t,
            loss,
            alpha: state.alpha,
            grad_norm: estimate.norm(),
            cumulative_measurements: cumulative.0,
            cumulative_circuits: cumulative.1,
        };
        observer(&record);
        records.push(record);
    }
    Ok(RunTrace {
        records,
        final_theta: state.theta,
    })
}
