//! Thermodynamic formalism on one-sided subshifts of finite type with
//! finite-range potentials: transfer operators, pressure, equilibrium
//! states, large-deviation rate functions and explicit lower bounds on them.
//!
//! Symbols are 1-based in every public interface (words are written like
//! `"121"`); internally they are 0-based.

pub mod bounds;
pub mod error;
pub mod ldp;
pub mod measure;
pub mod models;
pub mod potential;
pub mod rate;
pub mod sft;
pub mod spread;
pub mod transfer;

pub use bounds::{
    constants_for, evaluate_bound, measured_rpf_constants, paper_constants_for_family, paper_rpf_constants,
    theorem1_constants, verify_bound, verify_tilted_family, BoundReport, ConstantsMode, RpfConstants, TiltedCheck,
    Verdict,
};
pub use error::{Error, Result};
pub use ldp::{exact_window_mass, ldp_scan, sample_paths, window_reference, LdpScan, Method, WindowMass};
pub use measure::{equilibrium_measure, integrate, MarkovMeasure};
pub use potential::{affine_combine, indicator_example, shift_nonnegative, truncation_error_bound, Potential};
pub use rate::{
    entropy, gamma, pressure, pressure_curve, rate_function, PressureCurve, RateProblem, RateStatus, RateValue,
    TiltedFamily,
};
pub use sft::{cylinder_distance, enumerate_words, TransitionMatrix, Word, WordSpace};
pub use spread::{cohomology_spread, CohomologySpread};
pub use transfer::{
    build_transfer_matrix, normalization_defect, normalize_potential, rpf_solve, verify_rpf_bounds, RpfBoundsReport,
    RpfSolution, RpfStep, TransferMatrix,
};
