//! Online learning of parametric models by extended Kalman filtering
//! intertwined with ADMM iterations, supporting non-smooth regularizers
//! (`l1`, `l0`, box constraints).
//!
//! The building blocks are layered bottom-up:
//!
//! * [`model`]: measurement models and their Jacobians,
//! * [`prox`]: regularizers and proximal operators,
//! * [`ekf`]: Kalman correction / prediction and a batch least-squares oracle,
//! * [`ekf_admm`]: the EKF-ADMM steps (naive, fast and frozen-covariance),
//! * [`regret`]: regret functionals, hindsight solvers and performance indices,
//! * [`experiment`]: seeded data generators and the experiment runner.

pub mod ekf;
pub mod ekf_admm;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod regret;
pub mod rng;
pub mod selftest;

pub use ekf::{Corrected, FilterState, Phase, Predicted};
pub use ekf_admm::{AdmmState, FrozenConfig, Scaled, StepOutcome, Unscaled};
pub use error::{Error, Result};
pub use linalg::Covariance;
pub use model::{ModelSpec, MlpSpec, ParamVector, Regressor, Sample};
pub use prox::{Bound, ExtReal, RegSpec};
pub use regret::{HindsightSolution, PerfIndices, Trace};
