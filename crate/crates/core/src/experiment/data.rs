//! Seeded data generators.
//!
//! Every generator draws the regressors (and any true parameter vector)
//! from the [`Stream::Data`] substream and the measurement noise from
//! [`Stream::Noise`], so the noise-free part of a dataset does not depend
//! on the noise level.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Regressor, Sample};
use crate::rng::{self, Stream};

/// Default measurement noise of the regression data, matching `R = 1e-3 I`.
pub const LASSO_NOISE_SIGMA: f64 = 0.031_622_776_601_683_79;
/// Default measurement noise of the network data.
pub const NN_NOISE_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Params(DVector<f64>),
    StaticFunction,
    SwitchingFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub truth: Truth,
    /// Segment boundaries `0 = b_0 < b_1 < ... = N` over which the
    /// data-generating system is constant.
    pub segments: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N", "dataset needs at least one sample"));
    }
    Ok(())
}

fn noise(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::invalid("noise_sigma", e.to_string()))
}

/// Sparse-regression data `y_k = C_k x_true + r_k` with `x_true` and the
/// entries of `C_k` standard normal and `r_k ~ N(0, sigma² I)`.
pub fn gen_lasso(seed: u64, n: usize, n_x: usize, n_y: usize, noise_sigma: f64) -> Result<Dataset> {
    check_len(n)?;
    let mut data = rng::stream(seed, Stream::Data);
    let mut eps = rng::stream(seed, Stream::Noise);
    let r = noise(noise_sigma)?;
    let truth = DVector::from_fn(n_x, |_, _| StandardNormal.sample(&mut data));
    let samples = (0..n)
        .map(|k| {
            let c = DMatrix::from_fn(n_y, n_x, |_, _| StandardNormal.sample(&mut data));
            let y = &c * &truth + DVector::from_fn(n_y, |_, _| r.sample(&mut eps));
            Sample {
                k,
                input: Regressor::Matrix(c),
                y,
            }
        })
        .collect();
    Ok(Dataset {
        samples,
        truth: Truth::Params(truth),
        segments: vec![0, n],
    })
}

/// `(a z1² - exp(z2 / d)) / (3 + |z1 + z2|)`.
fn rational(z1: f64, z2: f64, a: f64, d: f64) -> f64 {
    (a * z1 * z1 - (z2 / d).exp()) / (3.0 + (z1 + z2).abs())
}

/// Noise-free static system.
pub fn static_target(z1: f64, z2: f64) -> f64 {
    rational(z1, z2, 1.0, 10.0)
}

/// Noise-free switching system in regime `branch` (1, 2 or 3).
pub fn switching_target(branch: usize, z1: f64, z2: f64) -> f64 {
    match branch {
        1 => rational(z1, z2, 1.0, 10.0),
        2 => rational(z1, z2, 1.0, 2.0),
        _ => rational(z1, z2, 0.3, 2.0),
    }
}

/// Regime active at step `k` of an `n`-step switching run: 1 for
/// `k <= n/3`, 2 for `k <= 2n/3`, 3 afterwards.
pub fn switching_branch(k: usize, n: usize) -> usize {
    if 3 * k <= n {
        1
    } else if 3 * k <= 2 * n {
        2
    } else {
        3
    }
}

/// Boundaries between constant regimes, consistent with [`switching_branch`].
pub fn switching_boundaries(n: usize) -> Vec<usize> {
    vec![0, n / 3 + 1, 2 * n / 3 + 1, n]
}

/// Noise level and input range of the network data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkData {
    pub noise_sigma: f64,
    /// `z` is uniform on `[-a, a]²`.
    pub input_half_width: f64,
}

impl NetworkData {
    pub fn new(noise_sigma: f64) -> Self {
        NetworkData {
            noise_sigma,
            input_half_width: 1.0,
        }
    }
}

fn gen_network_data(
    seed: u64,
    n: usize,
    params: NetworkData,
    target: impl Fn(usize, f64, f64) -> f64,
) -> Result<Vec<Sample>> {
    let a = params.input_half_width;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("input_half_width", format!("{a} must be positive")));
    }
    let mut data = rng::stream(seed, Stream::Data);
    let mut eps = rng::stream(seed, Stream::Noise);
    let r = noise(params.noise_sigma)?;
    Ok((0..n)
        .map(|k| {
            let z1 = data.random_range(-a..=a);
            let z2 = data.random_range(-a..=a);
            let y = target(k, z1, z2) + r.sample(&mut eps);
            Sample {
                k,
                input: Regressor::Features(DVector::from_row_slice(&[z1, z2])),
                y: DVector::from_element(1, y),
            }
        })
        .collect())
}

/// Static nonlinear system with `z` uniform on `[-1, 1]²`.
pub fn gen_static(seed: u64, n: usize, noise_sigma: f64) -> Result<Dataset> {
    gen_static_with(seed, n, NetworkData::new(noise_sigma))
}

pub fn gen_static_with(seed: u64, n: usize, params: NetworkData) -> Result<Dataset> {
    check_len(n)?;
    Ok(Dataset {
        samples: gen_network_data(seed, n, params, |_, z1, z2| static_target(z1, z2))?,
        truth: Truth::StaticFunction,
        segments: vec![0, n],
    })
}

/// Three-regime switching system with `z` uniform on `[-1, 1]²`. `n` is
/// rounded down to a multiple of 3.
pub fn gen_switching(seed: u64, n: usize, noise_sigma: f64) -> Result<Dataset> {
    gen_switching_with(seed, n, NetworkData::new(noise_sigma))
}

pub fn gen_switching_with(seed: u64, n: usize, params: NetworkData) -> Result<Dataset> {
    let n = n - n % 3;
    if n < 3 {
        return Err(Error::invalid("N", "switching data needs at least 3 samples"));
    }
    Ok(Dataset {
        samples: gen_network_data(seed, n, params, |k, z1, z2| {
            switching_target(switching_branch(k, n), z1, z2)
        })?,
        truth: Truth::SwitchingFunction,
        segments: switching_boundaries(n),
    })
}
