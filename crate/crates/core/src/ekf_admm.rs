//! EKF-ADMM: Kalman correction steps interleaved with ADMM iterations so
//! that a non-smooth regularizer `g` can be handled online.
//!
//! At step `k` the regularized correction
//!
//! ```text
//! min_x ½||x - x_{k|k-1}||²_{P^{-1}} + ½||y_k - C_k x||²_{R^{-1}} + g(x)
//! ```
//!
//! is split as `x = nu` and solved by scaled ADMM. The `x`-update of ADMM
//! is itself a Kalman correction with `n_x` extra "fake" measurements of
//! the parameters, `nu - w`, each with variance `1 / rho`.
//!
//! Two dual conventions coexist:
//!
//! * [`Scaled`] (used by [`step_naive`] / [`step_fast`]): `w <- w + x - nu`,
//!   prox argument `x + w`;
//! * [`Unscaled`] (used by [`step_frozen`]): `w <- w + rho (x - nu)`, prox
//!   argument `x + w / rho`.
//!
//! They are related by `w_scaled = w_unscaled / rho`.

use std::marker::PhantomData;

use nalgebra::{DMatrix, DVector};

use crate::ekf::{Corrected, FilterState, Predicted};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Covariance};
use crate::prox::{self, RegSpec};

/// Scaled dual variable convention.
#[derive(Debug, Clone, Copy)]
pub struct Scaled;

/// Unscaled dual variable convention.
#[derive(Debug, Clone, Copy)]
pub struct Unscaled;

/// ADMM consensus copy `nu`, dual `w`, penalty `rho` and the number of inner
/// iterations per step. The dual is carried from one step to the next.
#[derive(Debug, Clone)]
pub struct AdmmState<D = Scaled> {
    pub nu: DVector<f64>,
    pub w: DVector<f64>,
    pub rho: f64,
    pub n_a: usize,
    _convention: PhantomData<D>,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("rho", format!("{rho} must be positive and finite")))
    }
}

impl<D> AdmmState<D> {
    fn build(nu: DVector<f64>, w: DVector<f64>, rho: f64, n_a: usize) -> Result<Self> {
        check_rho(rho)?;
        check_dim("dual w", nu.len(), w.len())?;
        if n_a == 0 {
            return Err(Error::invalid("n_a", "at least one ADMM iteration is required"));
        }
        Ok(AdmmState {
            nu,
            w,
            rho,
            n_a,
            _convention: PhantomData,
        })
    }

    /// Sets `rho` for the next step without touching `w`.
    pub fn set_rho(&mut self, rho: f64) -> Result<()> {
        check_rho(rho)?;
        self.rho = rho;
        Ok(())
    }
}

impl AdmmState<Scaled> {
    /// `nu = x0`, `w = 0`.
    pub fn new(x0: &DVector<f64>, rho: f64, n_a: usize) -> Result<Self> {
        Self::build(x0.clone(), DVector::zeros(x0.len()), rho, n_a)
    }

    pub fn with_parts(nu: DVector<f64>, w: DVector<f64>, rho: f64, n_a: usize) -> Result<Self> {
        Self::build(nu, w, rho, n_a)
    }

    pub fn to_unscaled(&self) -> AdmmState<Unscaled> {
        AdmmState {
            nu: self.nu.clone(),
            w: &self.w * self.rho,
            rho: self.rho,
            n_a: self.n_a,
            _convention: PhantomData,
        }
    }
}

impl AdmmState<Unscaled> {
    /// `nu = x0`, `w = 0`, one ADMM iteration per step.
    pub fn new(x0: &DVector<f64>, rho: f64) -> Result<Self> {
        Self::build(x0.clone(), DVector::zeros(x0.len()), rho, 1)
    }

    pub fn with_parts(nu: DVector<f64>, w: DVector<f64>, rho: f64) -> Result<Self> {
        Self::build(nu, w, rho, 1)
    }

    pub fn to_scaled(&self) -> AdmmState<Scaled> {
        AdmmState {
            nu: self.nu.clone(),
            w: &self.w / self.rho,
            rho: self.rho,
            n_a: self.n_a,
            _convention: PhantomData,
        }
    }
}

/// Result of an EKF-ADMM correction, before the time update.
#[derive(Debug, Clone)]
pub struct AdmmCorrection {
    pub filter: FilterState<Corrected>,
    pub admm: AdmmState<Scaled>,
    pub prox_evals: usize,
}

impl AdmmCorrection {
    /// Time update `P <- P + Q`.
    pub fn predict(self, q: &Covariance) -> Result<StepOutcome<Scaled>> {
        Ok(StepOutcome {
            filter: self.filter.predict(q)?,
            admm: self.admm,
            prox_evals: self.prox_evals,
        })
    }
}

/// Result of a full step: corrected and then propagated filter state.
#[derive(Debug, Clone)]
pub struct StepOutcome<D = Scaled> {
    pub filter: FilterState<Predicted>,
    pub admm: AdmmState<D>,
    pub prox_evals: usize,
}

fn check_step(fs: &FilterState<Predicted>, nu: &DVector<f64>, c: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    check_dim("consensus nu", fs.dim(), nu.len())?;
    check_dim("C columns", fs.dim(), c.ncols())?;
    check_dim("measurement y", c.nrows(), y.len())
}

/// One ADMM sweep on the consensus variables: `nu <- prox(x + w)`,
/// `w <- w + x - nu`.
fn dual_sweep(admm: &mut AdmmState<Scaled>, xhat: &DVector<f64>, reg: &RegSpec) -> Result<()> {
    admm.nu = prox::prox_apply(reg, &(xhat + &admm.w), admm.rho)?;
    admm.w += xhat - &admm.nu;
    Ok(())
}

/// EKF-ADMM correction exactly as the basic algorithm reads: the true and
/// fake measurements are stacked, `C̄ = [C; I]`, `R̄ = diag(R, I / rho)`,
/// the gain is computed once and every inner iteration restarts from
/// `x_{k|k-1}`.
pub fn correct_naive(
    fs: FilterState<Predicted>,
    mut admm: AdmmState<Scaled>,
    c: &DMatrix<f64>,
    r: &Covariance,
    y: &DVector<f64>,
    reg: &RegSpec,
) -> Result<AdmmCorrection> {
    check_step(&fs, &admm.nu, c, y)?;
    let (n, m) = (fs.dim(), c.nrows());
    r.validate(m, "R")?;

    let mut cbar = DMatrix::zeros(m + n, n);
    cbar.rows_mut(0, m).copy_from(c);
    cbar.view_mut((m, 0), (n, n)).fill_with_identity();
    let mut rbar = DMatrix::zeros(m + n, m + n);
    rbar.view_mut((0, 0), (m, m)).copy_from(&r.to_matrix(m));
    rbar.view_mut((m, m), (n, n)).fill_diagonal(1.0 / admm.rho);

    let (prior, p) = fs.into_parts();
    let (gain, _) = linalg::kalman_gain(&p, &cbar, &rbar)?;
    let predicted = &cbar * &prior;

    let mut xhat = prior.clone();
    let mut ybar = DVector::zeros(m + n);
    ybar.rows_mut(0, m).copy_from(y);
    for _ in 0..admm.n_a {
        let mut fake = ybar.rows_mut(m, n);
        fake.copy_from(&(&admm.nu - &admm.w));
        xhat = &prior + &gain * (&ybar - &predicted);
        dual_sweep(&mut admm, &xhat, reg)?;
    }

    let cov = linalg::joseph_update(&p, &gain, &cbar, &rbar);
    Ok(AdmmCorrection {
        filter: FilterState::from_parts(xhat, cov),
        prox_evals: admm.n_a,
        admm,
    })
}

/// Same contract as [`correct_naive`], computed in two stages: the true
/// measurement is absorbed once, then the fake measurements are processed
/// coordinate by coordinate. The fake-measurement gain is
/// `K_f = P'(P' + I/rho)^{-1} = rho P_{k|k}`, so the inner loop only needs
/// matrix-vector products.
///
/// An empty measurement (`C` with zero rows) is allowed: only the
/// regularization part runs.
pub fn correct_fast(
    fs: FilterState<Predicted>,
    mut admm: AdmmState<Scaled>,
    c: &DMatrix<f64>,
    r: &Covariance,
    y: &DVector<f64>,
    reg: &RegSpec,
) -> Result<AdmmCorrection> {
    check_step(&fs, &admm.nu, c, y)?;
    let (after_true, mut p) = fs.correct(c, r, y)?.into_parts();

    linalg::isotropic_update(&mut p, 1.0 / admm.rho)?;

    let mut xhat = after_true.clone();
    for _ in 0..admm.n_a {
        let residual = &admm.nu - &admm.w - &after_true;
        xhat.copy_from(&after_true);
        xhat.gemv(admm.rho, &p, &residual, 1.0);
        dual_sweep(&mut admm, &xhat, reg)?;
    }

    Ok(AdmmCorrection {
        filter: FilterState::from_parts(xhat, p),
        prox_evals: admm.n_a,
        admm,
    })
}

/// [`correct_naive`] followed by the time update with `Q`.
pub fn step_naive(
    fs: FilterState<Predicted>,
    admm: AdmmState<Scaled>,
    c: &DMatrix<f64>,
    r: &Covariance,
    q: &Covariance,
    y: &DVector<f64>,
    reg: &RegSpec,
) -> Result<StepOutcome<Scaled>> {
    correct_naive(fs, admm, c, r, y, reg)?.predict(q)
}

/// [`correct_fast`] followed by the time update with `Q`.
pub fn step_fast(
    fs: FilterState<Predicted>,
    admm: AdmmState<Scaled>,
    c: &DMatrix<f64>,
    r: &Covariance,
    q: &Covariance,
    y: &DVector<f64>,
    reg: &RegSpec,
) -> Result<StepOutcome<Scaled>> {
    correct_fast(fs, admm, c, r, y, reg)?.predict(q)
}

/// Penalty schedule `rho_k = 10^(k/N - 2) * lambda`, increasing from
/// `lambda / 100` towards `lambda / 10`.
pub fn rho_tv(k: usize, horizon: usize, lambda: f64) -> f64 {
    10f64.powf(k as f64 / horizon as f64 - 2.0) * lambda
}

/// Hyper-parameters of the single-iteration, frozen-covariance variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenConfig {
    pub eta: f64,
    pub rho: f64,
    /// Covariance is updated for steps `k < k_n` and frozen afterwards.
    pub k_n: usize,
}

impl FrozenConfig {
    pub fn new(eta: f64, rho: f64, k_n: usize) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta", format!("{eta} must be positive")));
        }
        check_rho(rho)?;
        Ok(FrozenConfig { eta, rho, k_n })
    }
}

/// Weighted least squares with prior `(x, P)`, measurement `(C, R, y)` and
/// a direct measurement `target` of every coordinate with variance `sigma`.
/// Returns the posterior estimate and covariance.
fn fused_correction(
    x: &DVector<f64>,
    p: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &Covariance,
    y: &DVector<f64>,
    target: &DVector<f64>,
    sigma: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (after_true, mut post) = FilterState::<Predicted>::from_parts(x.clone(), p.clone())
        .correct(c, r, y)?
        .into_parts();
    linalg::isotropic_update(&mut post, sigma)?;
    let mut out = after_true.clone();
    out.gemv(1.0 / sigma, &post, &(target - &after_true), 1.0);
    Ok((out, post))
}

/// One step of the frozen-covariance variant (one ADMM iteration, unscaled
/// dual):
///
/// ```text
/// x_{k+1}  = argmin ½||y - C x||²_{R^{-1}} + w'(x - nu) + (rho/2)||x - nu||² + (eta/2)||x - x_k||²_{P_k^{-1}}
/// nu_{k+1} = prox_{g/rho}(x_{k+1} + w / rho)
/// w_{k+1}  = w + rho (x_{k+1} - nu_{k+1})
/// ```
///
/// The `x`-update is the Kalman correction of the prior `(x_k, P_k / eta)`
/// with `y` and the direct measurement `nu - w / rho` of variance `1 / rho`.
/// For `k < k_n`, `P_{k+1} = (P_k^{-1} + C̄' R̄^{-1} C̄)^{-1} + Q`; afterwards
/// `P` is left untouched.
#[allow(clippy::too_many_arguments)]
pub fn step_frozen(
    fs: FilterState<Predicted>,
    mut admm: AdmmState<Unscaled>,
    cfg: &FrozenConfig,
    c: &DMatrix<f64>,
    r: &Covariance,
    q: &Covariance,
    y: &DVector<f64>,
    reg: &RegSpec,
    k: usize,
) -> Result<StepOutcome<Unscaled>> {
    check_step(&fs, &admm.nu, c, y)?;
    check_rho(cfg.rho)?;
    let rho = cfg.rho;
    admm.rho = rho;
    let sigma = 1.0 / rho;
    let (x_k, p_k) = fs.into_parts();

    let target = &admm.nu - &admm.w / rho;
    let (x_next, _) = fused_correction(&x_k, &(&p_k / cfg.eta), c, r, y, &target, sigma)?;

    admm.nu = prox::prox_apply(reg, &(&x_next + &admm.w / rho), rho)?;
    admm.w += (&x_next - &admm.nu) * rho;

    let p_next = if k < cfg.k_n {
        let (_, mut post) = fused_correction(&x_k, &p_k, c, r, y, &target, sigma)?;
        q.validate(post.nrows(), "Q")?;
        q.add_to(&mut post);
        post
    } else {
        p_k
    };

    Ok(StepOutcome {
        filter: FilterState::from_parts(x_next, p_next),
        admm,
        prox_evals: 1,
    })
}

/// Constants of the regret bound for the frozen-covariance variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    /// Bound on the observed gradient norms `||∇f_k(x_k)||`.
    pub g_f: f64,
    /// `½||x*||²_{P_k^{-1}} <= D_x²`.
    pub d_x: f64,
    /// `||nu*||² <= D_nu`.
    pub d_nu: f64,
    /// Lower bound on the per-step suboptimality, `>= -F`.
    pub f: f64,
    /// Accumulated covariance-transient term up to `k_n`.
    pub m_kn: f64,
    /// Strong-convexity modulus of the `P_k^{-1}` metric,
    /// `||v||²_{P_k^{-1}} >= alpha ||v||²`. Unrelated to the forgetting factor.
    pub alpha_strong: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremSchedule {
    pub eta: f64,
    pub rho: f64,
    /// Upper bound on `R_f(N)`.
    pub r_f_max: f64,
    /// Upper bound on `R_c(N)`.
    pub r_c_max: f64,
}

/// `eta = G_f sqrt(N) / (D_x sqrt(2 alpha))`, `rho = sqrt(N)` and the
/// resulting sublinear bounds on both regrets.
pub fn theorem_schedule(consts: &TheoremConstants, n: usize) -> Result<TheoremSchedule> {
    let named = [
        ("g_f", consts.g_f),
        ("d_x", consts.d_x),
        ("d_nu", consts.d_nu),
        ("f", consts.f),
        ("alpha_strong", consts.alpha_strong),
    ];
    for (name, v) in named {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("{v} must be positive")));
        }
    }
    if !(consts.m_kn >= 0.0 && consts.m_kn.is_finite()) {
        return Err(Error::invalid("m_kn", "must be >= 0"));
    }
    if n == 0 {
        return Err(Error::invalid("N", "horizon must be positive"));
    }
    let TheoremConstants { g_f, d_x, d_nu, f, m_kn, alpha_strong } = *consts;
    let sqrt_n = (n as f64).sqrt();
    let root = (2.0 * alpha_strong).sqrt();
    let eta = g_f * sqrt_n / (d_x * root);
    let rho = sqrt_n;
    let r_f_max = sqrt_n * d_nu / 2.0 + g_f * d_x * sqrt_n / root + g_f * sqrt_n * (d_x * d_x + m_kn) / (d_x * root);
    let r_c_max = 2.0 * f * sqrt_n + d_nu + 2.0 * g_f / (d_x * root) * (d_x * d_x + m_kn);
    Ok(TheoremSchedule { eta, rho, r_f_max, r_c_max })
}
