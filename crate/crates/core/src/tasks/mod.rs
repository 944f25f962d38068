//! Benchmark problem definitions: transverse-field Ising VQE, MaxCut QAOA,
//! and MSE binary classification, with their datasets and initializations.

pub mod classifier;
pub mod data;
pub mod maxcut;
pub mod spectrum;
pub mod tfim;

pub use classifier::{
    build_classifier, train_classifier, ClassifierTask, EpochRecord, Split, TrainingMode,
    TrainingOutcome,
};
pub use data::{
    load_classification_data, read_split_csv, synthetic_separable, write_split_csv, DataSource,
    Dataset, SyntheticConfig, DATA_DIR_ENV,
};
pub use maxcut::{build_maxcut, random_maxcut_instance, MaxCutTask};
pub use spectrum::ground_energy;
pub use tfim::{build_tfim, tfim_hamiltonian, TfimTask};
