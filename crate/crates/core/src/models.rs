//! Small reference models used by tests, benches and the shipped fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::potential::Potential;
use crate::sft::{TransitionMatrix, Word};

/// A shift with a potential `f` and an observable `psi`.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: &'static str,
    pub f: Potential,
    pub psi: Potential,
}

impl Model {
    pub fn shift(&self) -> &TransitionMatrix {
        self.f.shift()
    }

    pub fn theta(&self) -> f64 {
        self.f.theta()
    }
}

/// Full 2-shift, `f = 0`, `psi = 1_{x0 = 1}`.
pub fn bernoulli() -> Model {
    let shift = TransitionMatrix::full(2);
    Model {
        name: "bernoulli",
        f: Potential::constant(&shift, 0.5, 0.0).expect("valid"),
        psi: Potential::cylinder_indicator(&shift, &Word::parse("1").expect("valid"), 0.5).expect("valid"),
    }
}

/// Golden-mean shift, `f = 0.2 * 1_{x0 = x1 = 2}`, `psi = 1_{x0 = 1}`.
pub fn golden_mean() -> Model {
    let shift = TransitionMatrix::golden_mean();
    Model {
        name: "golden",
        f: Potential::from_fn(&shift, 2, 0.5, |w| if w.symbols() == [2, 2] { 0.2 } else { 0.0 }).expect("valid"),
        psi: Potential::cylinder_indicator(&shift, &Word::parse("1").expect("valid"), 0.5).expect("valid"),
    }
}

pub const RANDOM3_SEED: u64 = 20_240_607;

/// Three-symbol aperiodic shift with a range-3 potential uniform in
/// `(-1, 1)` and a range-2 observable uniform in `(0, 1)`, drawn from
/// `ChaCha8Rng` seeded with `seed`.
pub fn random3(seed: u64) -> Model {
    let shift = TransitionMatrix::new(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]]).expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Potential::from_fn(&shift, 3, 0.5, |_| rng.random_range(-1.0..1.0)).expect("valid");
    let psi = Potential::from_fn(&shift, 2, 0.5, |_| rng.random_range(0.0..1.0)).expect("valid");
    Model { name: "random3", f, psi }
}

pub fn all() -> Vec<Model> {
    vec![bernoulli(), golden_mean(), random3(RANDOM3_SEED)]
}
