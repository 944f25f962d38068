//! Seeded ensemble execution and CSV trace emission.

use crate::error::{Error, Result};
use crate::estimators::estimate_vqe;
use crate::gradients::derive_shift_rule;
use crate::harness::specfile::{EdgeSpec, ExperimentSpec, TaskSpec};
use crate::optimizers::{self, RunTrace, TraceRecord};
use crate::rng::{run_seed, RngStream};
use crate::tasks::{
    build_classifier, build_maxcut, build_tfim, load_classification_data, random_maxcut_instance,
    train_classifier, ClassifierTask, MaxCutTask, TfimTask, TrainingMode,
};
use rayon::prelude::*;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Rows land in trace files in batches of this size so long runs stay
/// inspectable while they execute.
const FLUSH_EVERY: usize = 50;

/// Substream index reserved for parameter initialization within one run.
const INIT_STREAM: u64 = u64::MAX;

/// A task instantiated from its spec.
pub enum BuiltTask {
    Tfim(TfimTask),
    MaxCut(MaxCutTask),
    Classifier { task: ClassifierTask, epochs: usize },
}

pub fn build_task(spec: &TaskSpec) -> Result<BuiltTask> {
    match spec {
        TaskSpec::Tfim { qubits, blocks } => Ok(BuiltTask::Tfim(build_tfim(*qubits, *blocks)?)),
        TaskSpec::MaxCut {
            vertices,
            edges,
            depth,
        } => {
            let edge_list = match edges {
                EdgeSpec::Explicit(list) => list.clone(),
                EdgeSpec::Random { count, graph_seed } => {
                    let mut rng = RngStream::from_seed(*graph_seed);
                    random_maxcut_instance(*vertices, *count, &mut rng)?
                }
            };
            Ok(BuiltTask::MaxCut(build_maxcut(*vertices, &edge_list, *depth)?))
        }
        TaskSpec::Classifier {
            blocks,
            source,
            epochs,
        } => {
            let dataset = load_classification_data(source)?;
            Ok(BuiltTask::Classifier {
                task: build_classifier(*blocks, dataset)?,
                epochs: *epochs,
            })
        }
    }
}

/// Measurement cost per optimization step of the ungrouped 1-shot full
/// estimator for this task; the normalization unit of measurement axes.
pub fn reference_step_cost(task: &BuiltTask) -> Result<u64> {
    match task {
        BuiltTask::Tfim(t) => {
            let rule = derive_shift_rule(&t.circuit)?;
            let m = t.hamiltonian.num_terms() as u64;
            let k_total: u64 = (0..t.circuit.num_params())
                .map(|s| rule.num_terms(s).map(|k| k as u64))
                .sum::<Result<u64>>()?;
            Ok(k_total * m)
        }
        BuiltTask::MaxCut(t) => {
            let rule = derive_shift_rule(&t.circuit)?;
            let m = t.problem.num_terms() as u64;
            let k_total: u64 = (0..t.circuit.num_params())
                .map(|s| rule.num_terms(s).map(|k| k as u64))
                .sum::<Result<u64>>()?;
            Ok(k_total * m)
        }
        BuiltTask::Classifier { task, .. } => {
            let rule = derive_shift_rule(&task.encoding.circuit)?;
            let k_plus_one_total: u64 = (0..task.encoding.circuit.num_params())
                .map(|s| rule.num_terms(s).map(|k| k as u64 + 1))
                .sum::<Result<u64>>()?;
            Ok(k_plus_one_total)
        }
    }
}

/// Ensemble aggregate of one step across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub step: usize,
    pub loss_min: f64,
    pub loss_mean: f64,
    pub loss_max: f64,
    pub alpha_mean: f64,
    /// Mean cumulative measurements at this step.
    pub meas_cum: f64,
    pub circ_cum: f64,
}

/// Validation-accuracy aggregate (classifier ensembles only).
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub epoch: usize,
    pub acc_min: f64,
    pub acc_mean: f64,
    pub acc_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub task: TaskSpec,
    pub traces: Vec<RunTrace>,
    pub summary: Vec<SummaryRow>,
    pub accuracy: Option<Vec<AccuracyRow>>,
    /// 1-shot full-estimator cost per step (measurement-axis unit).
    pub mc1: u64,
}

fn one_run(
    task: &BuiltTask,
    spec: &ExperimentSpec,
    seed: u64,
    trace_path: Option<&Path>,
) -> Result<(RunTrace, Option<Vec<crate::tasks::EpochRecord>>)> {
    let run_root = RngStream::from_seed(seed);
    let mut init_rng = run_root.child(INIT_STREAM);
    match task {
        BuiltTask::Tfim(t) => {
            let theta0 = t.init_theta(&mut init_rng);
            let initial = t.initial_state()?;
            let config = spec.estimator;
            let mut estimator = |theta: &[f64], rng: &mut RngStream| {
                estimate_vqe(&t.circuit, &t.hamiltonian, theta, &initial, &config, rng)
            };
            let exact_loss = |theta: &[f64]| t.exact_loss(theta);
            let mut run_spec = optimizers::RunSpec {
                estimator: &mut estimator,
                exact_loss: &exact_loss,
            };
            let trace = run_traced(theta0, &mut run_spec, spec, &run_root, trace_path)?;
            Ok((trace, None))
        }
        BuiltTask::MaxCut(t) => {
            let theta0 = t.init_theta();
            let initial = t.initial_state()?;
            let config = spec.estimator;
            let mut estimator = |theta: &[f64], rng: &mut RngStream| {
                estimate_vqe(&t.circuit, &t.problem, theta, &initial, &config, rng)
            };
            let exact_loss = |theta: &[f64]| t.exact_loss(theta);
            let mut run_spec = optimizers::RunSpec {
                estimator: &mut estimator,
                exact_loss: &exact_loss,
            };
            let trace = run_traced(theta0, &mut run_spec, spec, &run_root, trace_path)?;
            Ok((trace, None))
        }
        BuiltTask::Classifier { task, epochs } => {
            let theta0 = task.init_theta(&mut init_rng);
            let mode = TrainingMode::DoublyStochastic(spec.estimator);
            let outcome =
                train_classifier(task, theta0, &spec.optimizer, &mode, *epochs, &run_root)?;
            let records: Vec<TraceRecord> = outcome
                .epochs
                .iter()
                .map(|e| TraceRecord {
                    step: e.epoch,
                    loss: e.train_loss,
                    alpha: e.alpha,
                    grad_norm: e.mean_grad_norm,
                    cumulative_measurements: e.cumulative_measurements,
                    cumulative_circuits: e.cumulative_circuits,
                })
                .collect();
            let trace = RunTrace {
                records,
                final_theta: outcome.final_theta,
            };
            if let Some(path) = trace_path {
                let mut writer = TraceWriter::create(path, seed)?;
                for record in &trace.records {
                    writer.push(record)?;
                }
                writer.finish()?;
            }
            Ok((trace, Some(outcome.epochs)))
        }
    }
}

/// Streams per-step rows into a CSV file, flushing in blocks.
struct TraceWriter {
    writer: BufWriter<File>,
    path: String,
    pending: usize,
}

impl TraceWriter {
    fn create(path: &Path, seed: u64) -> Result<Self> {
        let file =
            File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "# seed={seed}")
            .and_then(|()| writeln!(writer, "step,loss,alpha,grad_norm,meas_cum,circ_cum"))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(Self {
            writer,
            path: path.display().to_string(),
            pending: 0,
        })
    }

    fn push(&mut self, r: &TraceRecord) -> Result<()> {
        writeln!(
            self.writer,
            "{},{},{},{},{},{}",
            r.step, r.loss, r.alpha, r.grad_norm, r.cumulative_measurements, r.cumulative_circuits
        )
        .map_err(|e| Error::io(self.path.clone(), e))?;
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.writer
                .flush()
                .map_err(|e| Error::io(self.path.clone(), e))?;
            self.pending = 0;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.writer
            .flush()
            .map_err(|e| Error::io(self.path.clone(), e))
    }
}

fn run_traced(
    theta0: Vec<f64>,
    run_spec: &mut optimizers::RunSpec<'_>,
    spec: &ExperimentSpec,
    run_root: &RngStream,
    trace_path: Option<&Path>,
) -> Result<RunTrace> {
    match trace_path {
        None => optimizers::run(theta0, run_spec, &spec.optimizer, run_root),
        Some(path) => {
            let seed_marker = run_root.stream_id();
            let mut writer = TraceWriter::create(path, seed_marker)?;
            let every = spec.trace_every;
            let last = spec.optimizer.max_steps - 1;
            let mut io_error: Option<Error> = None;
            let trace = optimizers::run_with_observer(
                theta0,
                run_spec,
                &spec.optimizer,
                run_root,
                &mut |record| {
                    if io_error.is_none() && (record.step % every == 0 || record.step == last) {
                        if let Err(e) = writer.push(record) {
                            io_error = Some(e);
                        }
                    }
                },
            )?;
            if let Some(e) = io_error {
                return Err(e);
            }
            writer.finish()?;
            Ok(trace)
        }
    }
}

/// Runs `spec.repeats` runs with seeds derived from the base seed, optionally
/// writing per-run trace CSVs plus summary CSVs into `outdir`. Runs execute
/// concurrently up to `jobs` threads (0 = all cores); results are merged by
/// run index so the output is independent of completion order.
pub fn run_ensemble(
    spec: &ExperimentSpec,
    jobs: usize,
    outdir: Option<&Path>,
) -> Result<EnsembleResult> {
    spec.validate()?;
    let task = build_task(&spec.task)?;
    let mc1 = reference_step_cost(&task)?;
    if let Some(dir) = outdir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let runs: Vec<(RunTrace, Option<Vec<crate::tasks::EpochRecord>>)> = pool.install(|| {
        (0..spec.repeats)
            .into_par_iter()
            .map(|i| {
                let seed = run_seed(spec.base_seed, i as u64);
                let path: Option<PathBuf> =
                    outdir.map(|d| d.join(format!("run_{i:03}.csv")));
                one_run(&task, spec, seed, path.as_deref())
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let traces: Vec<RunTrace> = runs.iter().map(|(t, _)| t.clone()).collect();
    let summary = summarize(&traces, spec.trace_every)?;
    let accuracy = summarize_accuracy(&runs);

    if let Some(dir) = outdir {
        write_summary_csv(&dir.join("summary.csv"), &summary, mc1)?;
        if let Some(acc) = &accuracy {
            write_accuracy_csv(&dir.join("accuracy.csv"), acc)?;
        }
    }
    Ok(EnsembleResult {
        task: spec.task.clone(),
        traces,
        summary,
        accuracy,
        mc1,
    })
}

fn summarize(traces: &[RunTrace], trace_every: usize) -> Result<Vec<SummaryRow>> {
    let len = traces
        .first()
        .map(|t| t.records.len())
        .ok_or_else(|| Error::InvalidConfig("no runs".into()))?;
    if traces.iter().any(|t| t.records.len() != len) {
        return Err(Error::InvalidConfig(
            "runs produced traces of different lengths".into(),
        ));
    }
    let n = traces.len() as f64;
    let mut rows = Vec::new();
    for idx in 0..len {
        let step = traces[0].records[idx].step;
        if idx % trace_every != 0 && idx != len - 1 {
            continue;
        }
        let losses: Vec<f64> = traces.iter().map(|t| t.records[idx].loss).collect();
        let row = SummaryRow {
            step,
            loss_min: losses.iter().cloned().fold(f64::INFINITY, f64::min),
            loss_mean: losses.iter().sum::<f64>() / n,
            loss_max: losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            alpha_mean: traces.iter().map(|t| t.records[idx].alpha).sum::<f64>() / n,
            meas_cum: traces
                .iter()
                .map(|t| t.records[idx].cumulative_measurements as f64)
                .sum::<f64>()
                / n,
            circ_cum: traces
                .iter()
                .map(|t| t.records[idx].cumulative_circuits as f64)
                .sum::<f64>()
                / n,
        };
        rows.push(row);
    }
    Ok(rows)
}

fn summarize_accuracy(
    runs: &[(RunTrace, Option<Vec<crate::tasks::EpochRecord>>)],
) -> Option<Vec<AccuracyRow>> {
    let epochs: Vec<&Vec<crate::tasks::EpochRecord>> =
        runs.iter().filter_map(|(_, e)| e.as_ref()).collect();
    if epochs.len() != runs.len() || epochs.is_empty() {
        return None;
    }
    let len = epochs[0].len();
    let n = epochs.len() as f64;
    Some(
        (0..len)
            .map(|i| {
                let accs: Vec<f64> = epochs.iter().map(|e| e[i].validation_accuracy).collect();
                AccuracyRow {
                    epoch: i,
                    acc_min: accs.iter().cloned().fold(f64::INFINITY, f64::min),
                    acc_mean: accs.iter().sum::<f64>() / n,
                    acc_max: accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect(),
    )
}

pub const SUMMARY_HEADER: &str = "step,loss_min,loss_mean,loss_max,alpha_mean,meas_cum,circ_cum";

pub fn summary_to_csv(rows: &[SummaryRow], mc1: u64) -> String {
    let mut out = format!("# mc1={mc1}\n{SUMMARY_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.step, r.loss_min, r.loss_mean, r.loss_max, r.alpha_mean, r.meas_cum, r.circ_cum
        ));
    }
    out
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow], mc1: u64) -> Result<()> {
    std::fs::write(path, summary_to_csv(rows, mc1))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_accuracy_csv(path: &Path, rows: &[AccuracyRow]) -> Result<()> {
    let mut out = String::from("epoch,acc_min,acc_mean,acc_max\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch, r.acc_min, r.acc_mean, r.acc_max
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
