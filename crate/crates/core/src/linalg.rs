//! Dense helpers shared by the filters: covariance shorthands, SPD
//! factorizations, gains and covariance corrections.
//!
//! Nothing in here forms an explicit matrix inverse. Innovation
//! covariances are factored with Cholesky and gains are obtained by
//! triangular solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};

/// A covariance matrix, either `scale * I` or a full SPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    ScaledIdentity(f64),
    Full(DMatrix<f64>),
}

impl Covariance {
    pub fn scaled_identity(scale: f64) -> Self {
        Covariance::ScaledIdentity(scale)
    }

    /// Checks the shape (for full matrices) and positivity.
    pub fn validate(&self, dim: usize, context: &'static str) -> Result<()> {
        match self {
            Covariance::ScaledIdentity(s) => {
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::invalid(context, format!("scale {s} must be finite and >= 0")));
                }
                Ok(())
            }
            Covariance::Full(m) => {
                check_dim(context, dim, m.nrows())?;
                check_dim(context, dim, m.ncols())?;
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(context));
                }
                Ok(())
            }
        }
    }

    pub fn to_matrix(&self, dim: usize) -> DMatrix<f64> {
        match self {
            Covariance::ScaledIdentity(s) => DMatrix::from_diagonal_element(dim, dim, *s),
            Covariance::Full(m) => m.clone(),
        }
    }

    /// `target += self`.
    pub fn add_to(&self, target: &mut DMatrix<f64>) {
        match self {
            Covariance::ScaledIdentity(s) => {
                for i in 0..target.nrows() {
                    target[(i, i)] += *s;
                }
            }
            Covariance::Full(m) => *target += m,
        }
    }

    pub fn scaled(&self, factor: f64) -> Covariance {
        match self {
            Covariance::ScaledIdentity(s) => Covariance::ScaledIdentity(s * factor),
            Covariance::Full(m) => Covariance::Full(m * factor),
        }
    }
}

/// Replaces `m` by `(m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn cholesky(m: DMatrix<f64>, context: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite(context))
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && Cholesky::new(m.clone()).is_some()
}

/// Kalman gain `K = P C^T (R + C P C^T)^{-1}` together with `U = P C^T`.
pub fn kalman_gain(
    p: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_dim("gain: C columns vs P", p.nrows(), c.ncols())?;
    check_dim("gain: R rows vs C rows", c.nrows(), r.nrows())?;
    check_dim("gain: R columns", c.nrows(), r.ncols())?;
    let u = p * c.transpose();
    let mut s = c * &u + r;
    symmetrize(&mut s);
    let chol = cholesky(s, "innovation covariance")?;
    // S K^T = U^T, S symmetric
    let k = chol.solve(&u.transpose()).transpose();
    Ok((k, u))
}

/// Joseph-form covariance correction
/// `(I - K C) P (I - K C)^T + K R K^T`, evaluated without forming `I - K C`.
pub fn joseph_update(
    p: &DMatrix<f64>,
    k: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> DMatrix<f64> {
    // A = (I - K C) P = P - K (P C^T)^T
    let u = p * c.transpose();
    let a = p - k * u.transpose();
    let mut out = &a - (&a * c.transpose()) * k.transpose() + k * r * k.transpose();
    symmetrize(&mut out);
    out
}

/// Processes `n` independent scalar measurements of each coordinate with
/// common variance `sigma`, one by one, updating `p` in place to
/// `(P^{-1} + sigma^{-1} I)^{-1}`.
///
/// Only the lower triangle is touched while processing; it is mirrored at
/// the end. Costs `n^3 / 2` multiply-adds and performs no factorization.
pub fn isotropic_update(p: &mut DMatrix<f64>, sigma: f64) -> Result<()> {
    let n = p.nrows();
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("fake measurement variance", format!("{sigma} must be positive")));
    }
    let mut u = vec![0.0; n];
    {
        let data = p.as_mut_slice();
        for i in 0..n {
            // column i of the symmetric matrix, read from the lower triangle
            for (r, ur) in u.iter_mut().enumerate() {
                *ur = if r >= i { data[i * n + r] } else { data[r * n + i] };
            }
            let s = u[i] + sigma;
            if !(s > 0.0) {
                return Err(Error::NotPositiveDefinite("covariance during fake update"));
            }
            let inv_s = 1.0 / s;
            for j in 0..n {
                let f = u[j] * inv_s;
                if f == 0.0 {
                    continue;
                }
                let col = &mut data[j * n + j..(j + 1) * n];
                for (dst, &src) in col.iter_mut().zip(&u[j..]) {
                    *dst -= src * f;
                }
            }
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            p[(j, i)] = p[(i, j)];
        }
    }
    Ok(())
}

/// Squared Euclidean norm of `a - b`.
pub fn dist_sq(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let a = DMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn isotropic_update_matches_information_form() {
        let p0 = spd(6, 3);
        let sigma = 0.7;
        let mut p = p0.clone();
        isotropic_update(&mut p, sigma).unwrap();
        let info = p0.clone().try_inverse().unwrap() + DMatrix::identity(6, 6) / sigma;
        let expected = info.try_inverse().unwrap();
        assert!((p - expected).amax() < 1e-12);
    }

    #[test]
    fn joseph_matches_simple_form_for_optimal_gain() {
        let p = spd(4, 9);
        let c = DMatrix::from_row_slice(2, 4, &[1.0, 0.5, 0.0, -1.0, 0.2, 0.0, 1.0, 0.3]);
        let r = DMatrix::from_diagonal_element(2, 2, 0.3);
        let (k, _) = kalman_gain(&p, &c, &r).unwrap();
        let joseph = joseph_update(&p, &k, &c, &r);
        let simple = (DMatrix::identity(4, 4) - &k * &c) * &p;
        assert!((joseph - simple).amax() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_fake_variance() {
        let mut p = DMatrix::identity(2, 2);
        assert!(isotropic_update(&mut p, 0.0).is_err());
    }
}
