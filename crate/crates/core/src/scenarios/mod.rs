//! Concrete physical models: beam splitters and the Mach–Zehnder
//! interferometer, an instrument measuring a system with Born-rule recovery
//! from final-boundary sampling, and the Type I / Type II classifier.

mod classify;
mod measurement;
pub mod mzi;

pub use classify::{
    classify_subsystems, computational_bases, is_generalized_permutation, ClassificationReport, EventType,
    FactoredSchedule, IntervalFactor, Side, SubsystemVerdict,
};
pub use measurement::{
    born_recovery_experiment, build_measurement_model, gleason_sample, outcome_blocks, BornReport, MeasurementDims,
    MeasurementModel, OutcomeFrequency, ProductBasis,
};
pub use mzi::{beam_splitter, mzi_closed_form, mzi_distribution, sqm_reference, MziOutcome, MziSetup, PathProbabilities};
