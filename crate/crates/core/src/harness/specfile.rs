//! Experiment specification files: flat `section.key = value` text, checked
//! against the known key set at load time.

use crate::error::{Error, Result};
use crate::estimators::{BatchMode, EstimatorConfig, HamiltonianSampling, ShiftSampling, Weighting};
use crate::optimizers::{OptimizerConfig, Strategy};
use crate::tasks::{DataSource, SyntheticConfig};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Which benchmark an experiment runs.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskSpec {
    Tfim {
        qubits: usize,
        blocks: usize,
    },
    MaxCut {
        vertices: usize,
        edges: EdgeSpec,
        depth: usize,
    },
    Classifier {
        blocks: usize,
        source: DataSource,
        epochs: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeSpec {
    Explicit(Vec<(usize, usize)>),
    Random { count: usize, graph_seed: u64 },
}

/// A full experiment: task, estimator, optimizer, and ensemble settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub task: TaskSpec,
    pub estimator: EstimatorConfig,
    pub optimizer: OptimizerConfig,
    pub repeats: usize,
    pub base_seed: u64,
    /// Emit every k-th step to trace CSVs (the final step is always kept).
    pub trace_every: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::SpecParse("run.repeats must be >= 1".into()));
        }
        if self.trace_every < 1 {
            return Err(Error::SpecParse("run.trace_every must be >= 1".into()));
        }
        self.estimator.validate()?;
        self.optimizer.validate()?;
        match &self.task {
            TaskSpec::Tfim { qubits, blocks } => {
                if *qubits < 2 || *blocks < 1 {
                    return Err(Error::SpecParse(
                        "tfim needs task.qubits >= 2 and task.blocks >= 1".into(),
                    ));
                }
            }
            TaskSpec::MaxCut { depth, .. } => {
                if *depth < 2 || depth % 2 != 0 {
                    return Err(Error::SpecParse(
                        "maxcut needs an even task.depth >= 2".into(),
                    ));
                }
            }
            TaskSpec::Classifier { blocks, epochs, .. } => {
                if *blocks < 1 || *epochs < 1 {
                    return Err(Error::SpecParse(
                        "classifier needs task.blocks >= 1 and task.epochs >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

const KNOWN_KEYS: &[&str] = &[
    "task.kind",
    "task.qubits",
    "task.blocks",
    "task.vertices",
    "task.edges",
    "task.random_edges",
    "task.graph_seed",
    "task.depth",
    "task.epochs",
    "task.data",
    "task.data_dir",
    "task.synthetic_qubits",
    "task.synthetic_train_per_class",
    "task.synthetic_validation_per_class",
    "task.synthetic_noise",
    "task.synthetic_seed",
    "estimator.shots",
    "estimator.hamiltonian_sampling",
    "estimator.shift_sampling",
    "estimator.weighting",
    "estimator.batch_size",
    "estimator.batch_mode",
    "optimizer.strategy",
    "optimizer.alpha0",
    "optimizer.max_steps",
    "optimizer.adam_beta1",
    "optimizer.adam_beta2",
    "optimizer.adam_epsilon",
    "optimizer.plateau_window",
    "optimizer.plateau_factor",
    "run.repeats",
    "run.base_seed",
    "run.trace_every",
];

struct KeyMap {
    values: BTreeMap<String, String>,
}

impl KeyMap {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::SpecParse(format!("missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::SpecParse(format!("key '{key}': cannot parse '{raw}'"))
            }),
        }
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn parse_required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?;
        Ok(self.parse(key)?.unwrap())
    }
}

fn parse_key_values(text: &str) -> Result<KeyMap> {
    let mut values = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::SpecParse(format!(
                "line {}: expected 'key = value', got '{line}'",
                line_no + 1
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::SpecParse(format!(
                "line {}: unknown key '{key}'",
                line_no + 1
            )));
        }
        if values.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::SpecParse(format!(
                "line {}: duplicate key '{key}'",
                line_no + 1
            )));
        }
    }
    Ok(KeyMap { values })
}

fn parse_edges(raw: &str) -> Result<Vec<(usize, usize)>> {
    raw.split(',')
        .map(|pair| {
            let pair = pair.trim();
            let Some((a, b)) = pair.split_once('-') else {
                return Err(Error::SpecParse(format!(
                    "edge '{pair}' is not of the form a-b"
                )));
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::SpecParse(format!("bad vertex '{s}'")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn parse_task(map: &KeyMap) -> Result<TaskSpec> {
    match map.require("task.kind")? {
        "tfim" => Ok(TaskSpec::Tfim {
            qubits: map.parse_required("task.qubits")?,
            blocks: map.parse_required("task.blocks")?,
        }),
        "maxcut" => {
            let vertices = map.parse_required("task.vertices")?;
            let edges = match (map.get("task.edges"), map.get("task.random_edges")) {
                (Some(list), None) => EdgeSpec::Explicit(parse_edges(list)?),
                (None, Some(_)) => EdgeSpec::Random {
                    count: map.parse_required("task.random_edges")?,
                    graph_seed: map.parse_or("task.graph_seed", 0)?,
                },
                (Some(_), Some(_)) => {
                    return Err(Error::SpecParse(
                        "give either task.edges or task.random_edges, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::SpecParse(
                        "maxcut needs task.edges or task.random_edges".into(),
                    ))
                }
            };
            Ok(TaskSpec::MaxCut {
                vertices,
                edges,
                depth: map.parse_required("task.depth")?,
            })
        }
        "classifier" => {
            let source = match map.parse_or("task.data", "synthetic".to_string())?.as_str() {
                "synthetic" => DataSource::Synthetic(SyntheticConfig {
                    num_qubits: map.parse_or("task.synthetic_qubits", 2)?,
                    train_per_class: map.parse_or("task.synthetic_train_per_class", 32)?,
                    validation_per_class: map
                        .parse_or("task.synthetic_validation_per_class", 24)?,
                    noise: map.parse_or("task.synthetic_noise", 0.25)?,
                    seed: map.parse_or("task.synthetic_seed", 1)?,
                }),
                "mnist" => DataSource::MnistFiles {
                    dir: map.get("task.data_dir").map(PathBuf::from),
                },
                other => {
                    return Err(Error::SpecParse(format!(
                        "task.data must be synthetic or mnist, got '{other}'"
                    )))
                }
            };
            Ok(TaskSpec::Classifier {
                blocks: map.parse_required("task.blocks")?,
                source,
                epochs: map.parse_required("task.epochs")?,
            })
        }
        other => Err(Error::SpecParse(format!(
            "task.kind must be tfim, maxcut, or classifier, got '{other}'"
        ))),
    }
}

fn parse_estimator(map: &KeyMap) -> Result<EstimatorConfig> {
    let hamiltonian_sampling =
        match map.parse_or("estimator.hamiltonian_sampling", "none".to_string())?.as_str() {
            "none" => HamiltonianSampling::None,
            "term" => HamiltonianSampling::UniformTerm,
            "group" => HamiltonianSampling::UniformGroup,
            other => {
                return Err(Error::SpecParse(format!(
                    "estimator.hamiltonian_sampling: none|term|group, got '{other}'"
                )))
            }
        };
    let shift_sampling =
        match map.parse_or("estimator.shift_sampling", "none".to_string())?.as_str() {
            "none" => ShiftSampling::None,
            "uniform" => ShiftSampling::Uniform,
            other => {
                return Err(Error::SpecParse(format!(
                    "estimator.shift_sampling: none|uniform, got '{other}'"
                )))
            }
        };
    let weighting = match map.parse_or("estimator.weighting", "uniform".to_string())?.as_str() {
        "uniform" => Weighting::Uniform,
        "importance" => Weighting::Importance,
        other => {
            return Err(Error::SpecParse(format!(
                "estimator.weighting: uniform|importance, got '{other}'"
            )))
        }
    };
    let batch_mode = match map.parse_or("estimator.batch_mode", "replacement".to_string())?.as_str()
    {
        "replacement" => BatchMode::WithReplacement,
        "shuffle" => BatchMode::EpochShuffle,
        other => {
            return Err(Error::SpecParse(format!(
                "estimator.batch_mode: replacement|shuffle, got '{other}'"
            )))
        }
    };
    Ok(EstimatorConfig {
        shots: map.parse_required("estimator.shots")?,
        hamiltonian_sampling,
        shift_sampling,
        weighting,
        batch_size: map.parse_or("estimator.batch_size", 1)?,
        batch_mode,
    })
}

fn parse_optimizer(map: &KeyMap) -> Result<OptimizerConfig> {
    let strategy = match map.require("optimizer.strategy")? {
        "constant" => Strategy::Constant,
        "plateau" => Strategy::PlateauDecay {
            window: map.parse_or("optimizer.plateau_window", 20)?,
            factor: map.parse_or("optimizer.plateau_factor", 2.0)?,
        },
        "adam" => Strategy::Adam {
            beta1: map.parse_or("optimizer.adam_beta1", 0.9)?,
            beta2: map.parse_or("optimizer.adam_beta2", 0.999)?,
            epsilon: map.parse_or("optimizer.adam_epsilon", 1e-8)?,
        },
        other => {
            return Err(Error::SpecParse(format!(
                "optimizer.strategy: constant|plateau|adam, got '{other}'"
            )))
        }
    };
    Ok(OptimizerConfig {
        strategy,
        alpha0: map.parse_required("optimizer.alpha0")?,
        max_steps: map.parse_or("optimizer.max_steps", 1000)?,
    })
}

/// Parses an experiment spec from text.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let map = parse_key_values(text)?;
    let spec = ExperimentSpec {
        task: parse_task(&map)?,
        estimator: parse_estimator(&map)?,
        optimizer: parse_optimizer(&map)?,
        repeats: map.parse_or("run.repeats", 1)?,
        base_seed: map.parse_or("run.base_seed", 0)?,
        trace_every: map.parse_or("run.trace_every", 1)?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_spec(&text)
}
