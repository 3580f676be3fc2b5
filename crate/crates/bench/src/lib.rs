//! Inputs shared by the benchmarks.

use thermo_core::models::{self, Model};
use thermo_core::{normalize_potential, Potential};

/// A reference model with its potential normalized.
pub fn normalized(model: Model) -> (Potential, Potential) {
    let phi = normalize_potential(&model.f).expect("reference models normalize");
    (phi, model.psi)
}

pub fn reference_models() -> Vec<Model> {
    models::all()
}
