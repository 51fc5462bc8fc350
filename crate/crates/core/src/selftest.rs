//! Oracle-equivalence suites.
//!
//! Each suite compares a production path against an independent
//! computation (dense batch solve, brute-force grid, finite differences,
//! the unoptimized step, plain EKF) on seeded random instances and reports
//! the worst discrepancy found.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ekf::{batch_solve, BatchStep, FilterState, Predicted};
use crate::ekf_admm::{self, AdmmState, Scaled, TheoremConstants};
use crate::error::Result;
use crate::linalg::Covariance;
use crate::model::{self, ModelSpec, Regressor, Sample};
use crate::prox::{self, RegSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    /// Largest error measured over all cases.
    pub worst: f64,
    pub tolerance: f64,
    pub elapsed: Duration,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} cases, worst {:.3e} (tolerance {:.1e}), {:.2} s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance,
            self.elapsed.as_secs_f64()
        )
    }
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }

    fn finish(self, name: &'static str, cases: usize, worst: f64, tolerance: f64) -> Check {
        Check {
            name,
            cases,
            worst,
            tolerance,
            elapsed: self.0.elapsed(),
        }
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let a = uniform_matrix(rng, n, n);
    &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

/// Recursive `x_{k|k}` versus the dense batch least-squares solution on
/// random linear time-varying problems, at the first, middle and last step.
pub fn batch_recursive(instances: usize, seed: u64) -> Result<Check> {
    let timer = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=3);
        let len = rng.random_range(1..=50);
        let x0 = uniform_vector(&mut rng, n);
        let p0 = random_spd(&mut rng, n, 0.2);
        let truth = uniform_vector(&mut rng, n);
        let steps: Vec<BatchStep> = (0..len)
            .map(|_| {
                let c = uniform_matrix(&mut rng, m, n);
                let y = &c * &truth + uniform_vector(&mut rng, m) * 0.1;
                BatchStep {
                    c,
                    r: Covariance::Full(random_spd(&mut rng, m, 0.1)),
                    y,
                    q: Covariance::scaled_identity(rng.random_range(0.01..1.0)),
                }
            })
            .collect();

        let mut filter = FilterState::new(x0.clone(), p0.clone())?;
        let mut filtered = Vec::with_capacity(len);
        for s in &steps {
            let corrected = filter.correct(&s.c, &s.r, &s.y)?;
            filtered.push(corrected.xhat().clone());
            filter = corrected.predict(&s.q)?;
        }
        let mut at = vec![0, len / 2, len - 1];
        at.dedup();
        for k in at {
            let blocks = batch_solve(&x0, &p0, &steps[..=k])?;
            let want = &blocks[k];
            worst = worst.max((&filtered[k] - want).norm() / want.norm().max(f64::MIN_POSITIVE));
        }
    }
    Ok(timer.finish("batch-recursive equivalence", instances, worst, 1e-8))
}

fn random_reg(rng: &mut ChaCha8Rng, i: usize) -> RegSpec {
    match i % 4 {
        0 => RegSpec::L1 { lambda: rng.random_range(0.01..0.5) },
        1 => RegSpec::L0 { lambda: rng.random_range(0.001..0.1) },
        2 => RegSpec::symmetric_box(rng.random_range(0.1..1.0)),
        _ => RegSpec::None,
    }
}

/// Two-stage EKF-ADMM step versus the stacked one.
pub fn fast_naive(instances: usize, seed: u64) -> Result<Check> {
    let timer = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let n = rng.random_range(1..=20);
        let m = rng.random_range(1..=3);
        let n_a = [1, 5, 20][i % 3];
        let rho = 10f64.powf(rng.random_range(-1.0..1.0));
        let fs = FilterState::new(uniform_vector(&mut rng, n), random_spd(&mut rng, n, 0.1))?;
        let admm = AdmmState::<Scaled>::with_parts(uniform_vector(&mut rng, n), uniform_vector(&mut rng, n) * 0.3, rho, n_a)?;
        let c = uniform_matrix(&mut rng, m, n);
        let r = Covariance::Full(random_spd(&mut rng, m, 0.2));
        let q = Covariance::scaled_identity(rng.random_range(1e-4..1e-2));
        let y = uniform_vector(&mut rng, m);
        let reg = random_reg(&mut rng, i);

        let a = ekf_admm::step_naive(fs.clone(), admm.clone(), &c, &r, &q, &y, &reg)?;
        let b = ekf_admm::step_fast(fs, admm, &c, &r, &q, &y, &reg)?;
        let diffs = [
            (a.filter.xhat() - b.filter.xhat()).amax(),
            (a.filter.cov() - b.filter.cov()).amax(),
            (&a.admm.nu - &b.admm.nu).amax(),
            (&a.admm.w - &b.admm.w).amax(),
        ];
        worst = diffs.into_iter().fold(worst, f64::max);
    }
    Ok(timer.finish("fast-naive EKF-ADMM equivalence", instances, worst, 1e-9))
}

fn prox_objective(reg: &RegSpec, nu: f64, v: f64, rho: f64) -> f64 {
    prox::reg_value(reg, &DVector::from_element(1, nu)).to_f64() + 0.5 * rho * (nu - v) * (nu - v)
}

/// Scalar proximal operators versus a brute-force grid search of
/// `g(nu) + (rho/2)(nu - v)²`. Reports the largest amount by which the
/// operator's objective exceeds the best grid point.
pub fn prox_grid(cases: usize, seed: u64) -> Result<Check> {
    const POINTS: usize = 20_001;
    let timer = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for make in [
        (|rng: &mut ChaCha8Rng| RegSpec::L1 { lambda: rng.random_range(0.0..2.0) }) as fn(&mut ChaCha8Rng) -> RegSpec,
        |rng| RegSpec::L0 { lambda: rng.random_range(0.0..2.0) },
        |rng| {
            let lo = rng.random_range(-2.0..1.0);
            RegSpec::Box {
                lo: prox::Bound::Scalar(lo),
                hi: prox::Bound::Scalar(lo + rng.random_range(0.0..2.0)),
            }
        },
    ] {
        for _ in 0..cases {
            let reg = make(&mut rng);
            let v = rng.random_range(-4.0..4.0);
            let rho = 10f64.powf(rng.random_range(-1.0..1.0));
            let got = prox::prox_apply(&reg, &DVector::from_element(1, v), rho)?[0];
            let f_got = prox_objective(&reg, got, v, rho);
            let (a, b) = (v.min(-5.0) - 1.0, v.max(5.0) + 1.0);
            let mut best = prox_objective(&reg, 0.0, v, rho);
            if let RegSpec::Box { lo, hi } = &reg {
                best = best.min(prox_objective(&reg, lo.at(0), v, rho)).min(prox_objective(&reg, hi.at(0), v, rho));
            }
            for j in 0..POINTS {
                let nu = a + (b - a) * j as f64 / (POINTS - 1) as f64;
                best = best.min(prox_objective(&reg, nu, v, rho));
            }
            worst = worst.max(f_got - best);
        }
    }
    Ok(timer.finish("prox versus grid search", 3 * cases, worst, 1e-9))
}

/// Central finite differences of the network output, step `h`.
pub fn finite_difference_jacobian(spec: &ModelSpec, x: &DVector<f64>, sample: &Sample, h: f64) -> Result<DMatrix<f64>> {
    let m = spec.output_dim();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = model::model_eval(spec, &probe, sample)?;
        probe[i] = x[i] - h;
        let down = model::model_eval(spec, &probe, sample)?;
        probe[i] = x[i];
        jac.set_column(i, &((up - down) / (2.0 * h)));
    }
    Ok(jac)
}

/// Analytic network Jacobian versus central differences with step 1e-6 on
/// the 2-8-8-1 network, relative Frobenius error.
pub fn jacobian_fd(cases: usize, seed: u64) -> Result<Check> {
    let timer = Timer::start();
    let spec = ModelSpec::mlp(2, vec![8, 8], 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..cases {
        let x = model::mlp_init(&spec, seed.wrapping_add(i as u64))?.into_inner()
            + uniform_vector(&mut rng, spec.param_count()) * 0.2;
        let sample = Sample {
            k: 0,
            input: Regressor::Features(uniform_vector(&mut rng, 2) * 1.5),
            y: DVector::zeros(1),
        };
        let analytic = model::model_jacobian(&spec, &x, &sample)?;
        let fd = finite_difference_jacobian(&spec, &x, &sample, 1e-6)?;
        worst = worst.max((&analytic - &fd).norm() / fd.norm().max(f64::MIN_POSITIVE));
    }
    let mut check = timer.finish("network Jacobian versus finite differences", cases, worst, 1e-5);
    if spec.param_count() != 105 {
        check.worst = f64::INFINITY;
    }
    Ok(check)
}

/// EKF-ADMM with no regularizer and `rho = 1e-10` versus plain EKF over a
/// run of `steps` steps; worst estimate difference along the run.
pub fn degenerate_limit(steps: usize, seed: u64) -> Result<Check> {
    let timer = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (5, 2);
    let x0 = uniform_vector(&mut rng, n);
    let truth = uniform_vector(&mut rng, n);
    let p0 = DMatrix::identity(n, n);
    let r = Covariance::scaled_identity(0.1);
    let q = Covariance::scaled_identity(1e-3);
    let mut plain: FilterState<Predicted> = FilterState::new(x0.clone(), p0.clone())?;
    let mut admm_filter = FilterState::new(x0.clone(), p0)?;
    let mut admm = AdmmState::<Scaled>::new(&x0, 1e-10, 1)?;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let c = uniform_matrix(&mut rng, m, n);
        let y = &c * &truth + uniform_vector(&mut rng, m) * 0.1;
        plain = plain.correct(&c, &r, &y)?.predict(&q)?;
        let out = ekf_admm::step_fast(admm_filter, admm, &c, &r, &q, &y, &RegSpec::None)?;
        admm_filter = out.filter;
        admm = out.admm;
        worst = worst.max((plain.xhat() - admm_filter.xhat()).amax());
    }
    Ok(timer.finish("vanishing-rho limit versus plain EKF", steps, worst, 1e-6))
}

/// `theorem_schedule` versus the closed-form expressions on random
/// constants, plus the decay of the bounds divided by `N`.
pub fn theorem_schedule_check(sets: usize, seed: u64) -> Result<Check> {
    let timer = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    for _ in 0..sets {
        let mut draw = || 10f64.powf(rng.random_range(-2.0..2.0));
        let c = TheoremConstants {
            g_f: draw(),
            d_x: draw(),
            d_nu: draw(),
            f: draw(),
            m_kn: draw(),
            alpha_strong: draw(),
        };
        let n = rng.random_range(1..100_000usize);
        let s = ekf_admm::theorem_schedule(&c, n)?;
        let nf = n as f64;
        let eta = c.g_f * nf.sqrt() / (c.d_x * (2.0 * c.alpha_strong).sqrt());
        worst = worst.max(rel(s.eta, eta)).max(rel(s.rho, nf.sqrt()));

        let rates = [100usize, 10_000, 1_000_000].map(|n| {
            let s = ekf_admm::theorem_schedule(&c, n).expect("valid constants");
            (s.r_f_max / n as f64, s.r_c_max / n as f64)
        });
        for w in rates.windows(2) {
            // sqrt(N) / N shrinks ten-fold per hundred-fold N; constants only help
            let shrink = (w[1].0 / w[0].0).max(w[1].1 / w[0].1);
            worst = worst.max((shrink - 0.1).max(0.0));
        }
    }
    Ok(timer.finish("regret-bound schedule", sets, worst, 1e-12))
}

/// Every suite at its default size.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        batch_recursive(50, seed)?,
        fast_naive(200, seed)?,
        prox_grid(1000, seed)?,
        jacobian_fd(100, seed)?,
        degenerate_limit(100, seed)?,
        theorem_schedule_check(20, seed)?,
    ])
}
