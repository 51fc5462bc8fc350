//! Kalman correction/prediction for parameter estimation with a random-walk
//! parameter model `x_{k+1} = x_k + q_k`, `y_k = C_k x_k + r_k`.
//!
//! The correct/predict alternation is encoded in the type of
//! [`FilterState`]: only a `FilterState<Predicted>` can be corrected and
//! only a `FilterState<Corrected>` can be propagated.

use std::marker::PhantomData;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Covariance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Predicted,
    Corrected,
}

pub trait PhaseMarker {
    const PHASE: Phase;
}

/// State after a time update: `x_{k|k-1}`, `P_{k|k-1}`.
#[derive(Debug, Clone, Copy)]
pub struct Predicted;

/// State after a measurement update: `x_{k|k}`, `P_{k|k}`.
#[derive(Debug, Clone, Copy)]
pub struct Corrected;

impl PhaseMarker for Predicted {
    const PHASE: Phase = Phase::Predicted;
}

impl PhaseMarker for Corrected {
    const PHASE: Phase = Phase::Corrected;
}

/// Parameter estimate and its covariance.
#[derive(Debug, Clone)]
pub struct FilterState<P> {
    xhat: DVector<f64>,
    cov: DMatrix<f64>,
    _phase: PhantomData<P>,
}

impl<P: PhaseMarker> FilterState<P> {
    pub(crate) fn from_parts(xhat: DVector<f64>, mut cov: DMatrix<f64>) -> Self {
        linalg::symmetrize(&mut cov);
        FilterState {
            xhat,
            cov,
            _phase: PhantomData,
        }
    }

    pub fn xhat(&self) -> &DVector<f64> {
        &self.xhat
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn phase(&self) -> Phase {
        P::PHASE
    }

    pub fn dim(&self) -> usize {
        self.xhat.len()
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.xhat, self.cov)
    }

    /// Forgetting-factor inflation `P <- P / alpha`, `0 < alpha <= 1`.
    pub fn forget(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha_forget", format!("{alpha} not in (0, 1]")));
        }
        if alpha != 1.0 {
            self.cov /= alpha;
        }
        Ok(self)
    }
}

impl FilterState<Predicted> {
    /// Initial belief `x_{0|-1}`, `P_{0|-1}`.
    pub fn new(x0: DVector<f64>, p0: DMatrix<f64>) -> Result<Self> {
        check_dim("P0 rows", x0.len(), p0.nrows())?;
        check_dim("P0 columns", x0.len(), p0.ncols())?;
        if x0.iter().chain(p0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial filter state"));
        }
        if linalg::asymmetry(&p0) > 1e-10 * p0.amax().max(1.0) {
            return Err(Error::invalid("P0", "covariance must be symmetric"));
        }
        if !linalg::is_positive_definite(&p0) {
            return Err(Error::NotPositiveDefinite("P0"));
        }
        Ok(Self::from_parts(x0, p0))
    }

    /// Measurement update with `y = C x + r`, `r ~ N(0, R)`:
    /// `x <- x + K (y - C x)` and the Joseph-form covariance update.
    pub fn correct(
        self,
        c: &DMatrix<f64>,
        r: &Covariance,
        y: &DVector<f64>,
    ) -> Result<FilterState<Corrected>> {
        check_dim("correct: C columns", self.dim(), c.ncols())?;
        check_dim("correct: y", c.nrows(), y.len())?;
        r.validate(c.nrows(), "R")?;
        if c.nrows() == 0 {
            return Ok(FilterState::from_parts(self.xhat, self.cov));
        }
        let r = r.to_matrix(c.nrows());
        let (k, _) = linalg::kalman_gain(&self.cov, c, &r)?;
        let innovation = y - c * &self.xhat;
        let xhat = &self.xhat + &k * innovation;
        let cov = linalg::joseph_update(&self.cov, &k, c, &r);
        Ok(FilterState::from_parts(xhat, cov))
    }
}

impl FilterState<Corrected> {
    /// Time update `x_{k+1|k} = x_{k|k}`, `P_{k+1|k} = P_{k|k} + Q`.
    pub fn predict(mut self, q: &Covariance) -> Result<FilterState<Predicted>> {
        q.validate(self.dim(), "Q")?;
        q.add_to(&mut self.cov);
        Ok(FilterState::from_parts(self.xhat, self.cov))
    }

    /// Replaces the estimate, keeping the covariance (used by clipping).
    pub fn with_estimate(self, xhat: DVector<f64>) -> Result<Self> {
        check_dim("estimate", self.dim(), xhat.len())?;
        Ok(FilterState { xhat, ..self })
    }
}

/// `K = P C^T (R + C P C^T)^{-1}` via a Cholesky solve.
pub fn gain(p: &DMatrix<f64>, c: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(linalg::kalman_gain(p, c, r)?.0)
}

/// One measurement and the random-walk step that follows it.
#[derive(Debug, Clone)]
pub struct BatchStep {
    pub c: DMatrix<f64>,
    pub r: Covariance,
    pub y: DVector<f64>,
    pub q: Covariance,
}

/// Solves the full least-squares problem over `x_0, ..., x_{k+1}`
///
/// `||x_0 - x0||^2_{P0^{-1}} + sum_i ||y_i - C_i x_i||^2_{R_i^{-1}} + ||x_{i+1} - x_i||^2_{Q_i^{-1}}`
///
/// by assembling the block-tridiagonal normal equations and factoring them
/// densely. Returns `[x_{0|k}, ..., x_{k|k}, x_{k+1|k}]`. Meant as an
/// oracle for small problems.
pub fn batch_solve(x0: &DVector<f64>, p0: &DMatrix<f64>, steps: &[BatchStep]) -> Result<Vec<DVector<f64>>> {
    let n = x0.len();
    check_dim("batch: P0", n, p0.nrows())?;
    if steps.is_empty() {
        return Err(Error::invalid("steps", "batch problem needs at least one measurement"));
    }
    let blocks = steps.len() + 1;
    let dim = blocks * n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);

    let p0_chol = linalg::cholesky(p0.clone(), "P0")?;
    let eye = DMatrix::<f64>::identity(n, n);
    let p0_info = p0_chol.solve(&eye);
    add_block(&mut h, 0, 0, &p0_info, 1.0);
    let mut head = b.rows_mut(0, n);
    head += &p0_info * x0;

    for (i, step) in steps.iter().enumerate() {
        let m = step.c.nrows();
        check_dim("batch: C columns", n, step.c.ncols())?;
        check_dim("batch: y", m, step.y.len())?;
        let at = i * n;
        if m > 0 {
            let r_chol = linalg::cholesky(step.r.to_matrix(m), "R")?;
            let rinv_c = r_chol.solve(&step.c);
            let rinv_y = r_chol.solve(&step.y);
            add_block(&mut h, at, at, &(step.c.transpose() * &rinv_c), 1.0);
            let mut seg = b.rows_mut(at, n);
            seg += step.c.transpose() * rinv_y;
        }
        let q_info = linalg::cholesky(step.q.to_matrix(n), "Q")?.solve(&eye);
        let next = at + n;
        add_block(&mut h, at, at, &q_info, 1.0);
        add_block(&mut h, next, next, &q_info, 1.0);
        add_block(&mut h, at, next, &q_info, -1.0);
        add_block(&mut h, next, at, &q_info, -1.0);
    }

    linalg::symmetrize(&mut h);
    let z = linalg::cholesky(h, "batch normal matrix")?.solve(&b);
    Ok((0..blocks).map(|i| z.rows(i * n, n).into_owned()).collect())
}


fn add_block(h: &mut DMatrix<f64>, row: usize, col: usize, block: &DMatrix<f64>, sign: f64) {
    let mut view = h.view_mut((row, col), block.shape());
    view += block * sign;
}
