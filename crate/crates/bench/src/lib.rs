//! Random problem instances shared by the step benchmarks.

use ekfadmm::ekf::FilterState;
use ekfadmm::{AdmmState, Covariance, Predicted, Scaled};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub filter: FilterState<Predicted>,
    pub admm: AdmmState<Scaled>,
    pub c: DMatrix<f64>,
    pub r: Covariance,
    pub q: Covariance,
    pub y: DVector<f64>,
}

/// A well-conditioned instance with `n_x` parameters and `n_y` outputs.
pub fn instance(n_x: usize, n_y: usize, n_a: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let a = uniform(n_x, n_x);
    let p = &a * a.transpose() / n_x as f64 + DMatrix::identity(n_x, n_x);
    let c = uniform(n_y, n_x);
    let x = uniform(n_x, 1).column(0).into_owned();
    let y = uniform(n_y, 1).column(0).into_owned();
    Instance {
        filter: FilterState::new(x.clone(), p).expect("SPD by construction"),
        admm: AdmmState::<Scaled>::new(&x, 1.0, n_a).expect("valid rho"),
        c,
        r: Covariance::scaled_identity(1.0),
        q: Covariance::scaled_identity(1e-4),
        y,
    }
}
