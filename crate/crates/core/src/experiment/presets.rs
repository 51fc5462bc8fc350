//! Preset configurations of the three experiments.

use std::path::PathBuf;

use super::config::{Experiment, ExperimentConfig, Filter, HindsightConfig, Hyper, OutputConfig};
use super::data::{LASSO_NOISE_SIGMA, NN_NOISE_SIGMA};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::prox::RegSpec;

pub const PRESETS: [&str; 4] = ["lasso", "static-l1", "static-bounds", "switching-l0"];

/// Regularization weight of the regression preset.
pub const LASSO_LAMBDA: f64 = 1.0;
/// Weight of the `l1` and `l0` penalties on the network.
pub const NN_LAMBDA: f64 = 1e-4;

fn network() -> ModelSpec {
    ModelSpec::mlp(2, vec![8, 8], 1).expect("valid widths")
}

fn base(experiment: Experiment, steps: usize, model: ModelSpec, reg: RegSpec, filter: Filter, hyper: Hyper) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        steps,
        seed: 0,
        filter,
        noise_sigma: NN_NOISE_SIGMA,
        input_half_width: 1.0,
        output_dir: PathBuf::from("results").join(experiment.name()),
        model,
        reg,
        hyper,
        hindsight: HindsightConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Frozen-covariance EKF-ADMM on sparse regression; `rho` and `eta` grow
/// with `sqrt(N)`, see [`lasso_schedule`].
pub fn lasso(steps: usize) -> ExperimentConfig {
    let mut cfg = base(
        Experiment::Lasso,
        steps,
        ModelSpec::LinearTv { n_x: 3, n_y: 2 },
        RegSpec::L1 { lambda: LASSO_LAMBDA },
        Filter::FrozenAdmm,
        Hyper {
            k_n: 1000,
            q_scale: 1e-6,
            r_scale: 1e-3,
            p0_scale: 1.0,
            ..Hyper::default()
        },
    );
    cfg.noise_sigma = LASSO_NOISE_SIGMA;
    cfg.hindsight.max_iter = 5000;
    lasso_schedule(&mut cfg);
    cfg
}

/// `rho = 1e4 sqrt(N)`, `eta = 1e-6 sqrt(N)`.
pub fn lasso_schedule(cfg: &mut ExperimentConfig) {
    let root = (cfg.steps as f64).sqrt();
    cfg.hyper.rho = 1e4 * root;
    cfg.hyper.eta = 1e-6 * root;
}

/// Network with `l1` penalty, `rho = 10 lambda`, one ADMM iteration.
pub fn static_l1(steps: usize) -> ExperimentConfig {
    let mut cfg = base(
        Experiment::StaticL1,
        steps,
        network(),
        RegSpec::L1 { lambda: NN_LAMBDA },
        Filter::EkfAdmm,
        Hyper {
            rho: 10.0 * NN_LAMBDA,
            ..Hyper::default()
        },
    );
    cfg.hindsight.max_iter = 100;
    cfg
}

/// Network with `|x_i| <= 0.5`, `rho = 1`, five ADMM iterations.
pub fn static_bounds(steps: usize) -> ExperimentConfig {
    let mut cfg = base(
        Experiment::StaticBounds,
        steps,
        network(),
        RegSpec::symmetric_box(0.5),
        Filter::EkfAdmm,
        Hyper {
            rho: 1.0,
            n_a: 5,
            ..Hyper::default()
        },
    );
    cfg.hindsight.max_iter = 100;
    cfg
}

/// Network on switching data with `l0` penalty, `rho = 1e3 lambda` and
/// forgetting factor 0.9.
pub fn switching_l0(steps: usize) -> ExperimentConfig {
    let mut cfg = base(
        Experiment::SwitchingL0,
        steps,
        network(),
        RegSpec::L0 { lambda: NN_LAMBDA },
        Filter::EkfAdmm,
        Hyper {
            rho: 1e3 * NN_LAMBDA,
            alpha_forget: 0.9,
            ..Hyper::default()
        },
    );
    cfg.hindsight.max_iter = 100;
    cfg
}

/// Preset by name with its default horizon.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name.replace('_', "-").as_str() {
        "lasso" => Ok(lasso(2000)),
        "static-l1" => Ok(static_l1(20_000)),
        "static-bounds" => Ok(static_bounds(20_000)),
        "switching-l0" => Ok(switching_l0(30_000)),
        _ => Err(Error::config(
            "preset",
            format!("unknown preset `{name}`, expected one of {}", PRESETS.join(", ")),
        )),
    }
}
