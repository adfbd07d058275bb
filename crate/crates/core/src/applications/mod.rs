pub mod classify;
pub mod detect;

pub use classify::{
    alpha_for_fidelity, classify, standard_alpha_grid, sweep_alpha, Classification, ClassifierConfig,
    RegularizationForm, RegularizationProblem, SweepRow, SweepTable,
};
pub use detect::{detect_malfunction, Calibration, Detection, DetectorConfig};
