//! Regularizers `g` and their proximal operators
//! `prox_{g/rho}(v) = argmin_nu g(nu) + (rho/2) ||nu - v||^2`.
//!
//! All supported regularizers are separable, so every prox is an O(n)
//! elementwise map.

use std::fmt;
use std::ops::Add;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A value in `R ∪ {+∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// Lossy conversion, mapping `+∞` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scale(self, factor: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * factor),
            ExtReal::PosInfinity => ExtReal::PosInfinity,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInfinity,
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::Finite(rhs)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => f.write_str("inf"),
        }
    }
}

/// Box bound: one value for every coordinate, or one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    PerCoordinate(Vec<f64>),
}

impl Bound {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Bound::Scalar(v) => *v,
            Bound::PerCoordinate(v) => v[i],
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self {
            Bound::Scalar(_) => Ok(()),
            Bound::PerCoordinate(v) => check_dim("box bound", n, v.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegSpec {
    None,
    /// `lambda * ||x||_1`
    L1 { lambda: f64 },
    /// `lambda * ||x||_0`
    L0 { lambda: f64 },
    /// Indicator of `lo <= x <= hi`.
    Box { lo: Bound, hi: Bound },
}

impl RegSpec {
    pub fn symmetric_box(half_width: f64) -> Self {
        RegSpec::Box {
            lo: Bound::Scalar(-half_width),
            hi: Bound::Scalar(half_width),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            RegSpec::L1 { lambda } | RegSpec::L0 { lambda } => Some(*lambda),
            _ => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, RegSpec::L0 { .. })
    }

    /// Checks `lambda >= 0`, `lo <= hi` and bound lengths against `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            RegSpec::None => Ok(()),
            RegSpec::L1 { lambda } | RegSpec::L0 { lambda } => {
                if lambda.is_finite() && *lambda >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("lambda", format!("{lambda} must be finite and >= 0")))
                }
            }
            RegSpec::Box { lo, hi } => {
                lo.check_len(n)?;
                hi.check_len(n)?;
                for i in 0..n {
                    if !(lo.at(i) <= hi.at(i)) {
                        return Err(Error::invalid("box bounds", format!("lo > hi at coordinate {i}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// The same regularizer multiplied by `factor > 0` (the box indicator is
    /// invariant).
    pub fn scaled(&self, factor: f64) -> RegSpec {
        match self {
            RegSpec::L1 { lambda } => RegSpec::L1 { lambda: lambda * factor },
            RegSpec::L0 { lambda } => RegSpec::L0 { lambda: lambda * factor },
            other => other.clone(),
        }
    }
}

pub fn reg_value(reg: &RegSpec, x: &DVector<f64>) -> ExtReal {
    match reg {
        RegSpec::None => ExtReal::ZERO,
        RegSpec::L1 { lambda } => ExtReal::Finite(lambda * x.iter().map(|v| v.abs()).sum::<f64>()),
        RegSpec::L0 { lambda } => ExtReal::Finite(lambda * x.iter().filter(|v| **v != 0.0).count() as f64),
        RegSpec::Box { lo, hi } => {
            if x.iter().enumerate().all(|(i, v)| lo.at(i) <= *v && *v <= hi.at(i)) {
                ExtReal::ZERO
            } else {
                ExtReal::PosInfinity
            }
        }
    }
}

pub fn soft_threshold(v: f64, kappa: f64) -> f64 {
    v.signum() * (v.abs() - kappa).max(0.0)
}

/// Hard threshold for `prox_{(lambda/rho) ||.||_0}`: keep `v` iff
/// `v^2 > 2 lambda / rho`. The tie resolves to zero.
pub fn hard_threshold(v: f64, threshold_sq: f64) -> f64 {
    if v * v > threshold_sq {
        v
    } else {
        0.0
    }
}

pub fn prox_apply(reg: &RegSpec, v: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("{rho} must be positive and finite")));
    }
    Ok(match reg {
        RegSpec::None => v.clone(),
        RegSpec::L1 { lambda } => {
            let kappa = lambda / rho;
            v.map(|vi| soft_threshold(vi, kappa))
        }
        RegSpec::L0 { lambda } => {
            let t = 2.0 * lambda / rho;
            v.map(|vi| hard_threshold(vi, t))
        }
        RegSpec::Box { lo, hi } => {
            lo.check_len(v.len())?;
            hi.check_len(v.len())?;
            DVector::from_fn(v.len(), |i, _| v[i].clamp(lo.at(i), hi.at(i)))
        }
    })
}

/// Euclidean projection onto `[lo, hi]`.
pub fn project_box(x: &DVector<f64>, lo: &Bound, hi: &Bound) -> Result<DVector<f64>> {
    RegSpec::Box { lo: lo.clone(), hi: hi.clone() }.validate(x.len())?;
    Ok(DVector::from_fn(x.len(), |i, _| x[i].clamp(lo.at(i), hi.at(i))))
}

/// `||x - Π_C(x)||^2` for the box of `reg`, zero for any other regularizer.
pub fn box_violation(reg: &RegSpec, x: &DVector<f64>) -> f64 {
    match reg {
        RegSpec::Box { lo, hi } => x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = v - v.clamp(lo.at(i), hi.at(i));
                d * d
            })
            .sum(),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn reg_values() {
        assert!((reg_value(&RegSpec::L1 { lambda: 1e-4 }, &dv(&[1.0, -2.0, 0.0])).to_f64() - 3e-4).abs() < 1e-18);
        assert_eq!(reg_value(&RegSpec::L0 { lambda: 1e-4 }, &dv(&[0.0, 0.3, 0.0])), ExtReal::Finite(1e-4));
        assert_eq!(reg_value(&RegSpec::symmetric_box(0.5), &dv(&[0.6, 0.0])), ExtReal::PosInfinity);
        assert_eq!(reg_value(&RegSpec::symmetric_box(0.5), &dv(&[0.5, -0.5])), ExtReal::ZERO);
        assert_eq!(reg_value(&RegSpec::None, &dv(&[4.0])), ExtReal::ZERO);
    }

    #[test]
    fn infinity_absorbs_sums() {
        let s = ExtReal::Finite(1.0) + ExtReal::PosInfinity + 2.0;
        assert!(!s.is_finite());
        assert_eq!(s.to_string(), "inf");
    }

    #[test]
    fn soft_threshold_example() {
        let out = prox_apply(&RegSpec::L1 { lambda: 0.03 }, &dv(&[1.0, -0.2, 0.05]), 0.3).unwrap();
        let want = [0.9, -0.1, 0.0];
        for (o, w) in out.iter().zip(want) {
            assert!((o - w).abs() < 1e-15);
        }
    }

    #[test]
    fn hard_threshold_example() {
        let reg = RegSpec::L0 { lambda: 1e-4 };
        let out = prox_apply(&reg, &dv(&[0.05, 0.04, -0.05]), 0.1).unwrap();
        assert_eq!(out.as_slice(), &[0.05, 0.0, -0.05]);
    }

    #[test]
    fn hard_threshold_tie_goes_to_zero() {
        // v^2 == 2 lambda / rho exactly: 2 * 0.125 / 1 = 0.25 = 0.5^2
        let out = prox_apply(&RegSpec::L0 { lambda: 0.125 }, &dv(&[0.5, -0.5]), 1.0).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn box_clamp_example() {
        let out = prox_apply(&RegSpec::symmetric_box(0.5), &dv(&[0.7, -0.9, 0.1]), 3.0).unwrap();
        assert_eq!(out.as_slice(), &[0.5, -0.5, 0.1]);
    }

    #[test]
    fn rho_must_be_positive() {
        assert!(prox_apply(&RegSpec::None, &dv(&[1.0]), 0.0).is_err());
        assert!(prox_apply(&RegSpec::None, &dv(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn project_box_examples() {
        let lo = Bound::Scalar(-0.5);
        let hi = Bound::Scalar(0.5);
        assert_eq!(project_box(&dv(&[2.0]), &lo, &hi).unwrap().as_slice(), &[0.5]);
        assert_eq!(project_box(&dv(&[0.2, -0.1]), &lo, &hi).unwrap().as_slice(), &[0.2, -0.1]);
        assert!(project_box(&dv(&[0.0]), &hi, &lo).is_err());
    }

    #[test]
    fn validation() {
        assert!(RegSpec::L1 { lambda: -1.0 }.validate(3).is_err());
        assert!(RegSpec::Box { lo: Bound::PerCoordinate(vec![0.0, 1.0]), hi: Bound::Scalar(0.5) }.validate(2).is_err());
        assert!(RegSpec::Box { lo: Bound::PerCoordinate(vec![0.0]), hi: Bound::Scalar(0.5) }.validate(2).is_err());
    }

    fn any_reg() -> impl Strategy<Value = RegSpec> {
        prop_oneof![
            Just(RegSpec::None),
            (0.0..2.0f64).prop_map(|lambda| RegSpec::L1 { lambda }),
            (0.0..2.0f64).prop_map(|lambda| RegSpec::L0 { lambda }),
            (0.0..2.0f64).prop_map(RegSpec::symmetric_box),
        ]
    }

    proptest! {
        #[test]
        fn none_is_identity(v in proptest::collection::vec(-10.0..10.0f64, 1..8), rho in 1e-6..1e3f64) {
            let v = DVector::from_vec(v);
            prop_assert_eq!(prox_apply(&RegSpec::None, &v, rho).unwrap(), v);
        }

        #[test]
        fn prox_shrinks_norm(reg in any_reg(), v in proptest::collection::vec(-10.0..10.0f64, 1..8), rho in 1e-3..1e3f64) {
            let v = DVector::from_vec(v);
            let out = prox_apply(&reg, &v, rho).unwrap();
            prop_assert!(out.norm() <= v.norm() + 1e-12);
        }

        #[test]
        fn prox_is_separable(reg in any_reg(), v in proptest::collection::vec(-10.0..10.0f64, 2..8), rho in 1e-3..1e3f64, shift in 0usize..8) {
            let n = v.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let v = DVector::from_vec(v);
            let permuted = DVector::from_fn(n, |i, _| v[perm[i]]);
            let a = prox_apply(&reg, &permuted, rho).unwrap();
            let b = prox_apply(&reg, &v, rho).unwrap();
            for i in 0..n {
                prop_assert_eq!(a[i], b[perm[i]]);
            }
        }

        #[test]
        fn projection_is_idempotent(v in proptest::collection::vec(-10.0..10.0f64, 1..8), w in 0.0..3.0f64) {
            let (lo, hi) = (Bound::Scalar(-w), Bound::Scalar(w));
            let once = project_box(&DVector::from_vec(v), &lo, &hi).unwrap();
            prop_assert_eq!(project_box(&once, &lo, &hi).unwrap(), once);
        }

        #[test]
        fn large_lambda_zeroes_l1(v in proptest::collection::vec(-10.0..10.0f64, 1..8), rho in 1e-2..1e2f64) {
            let v = DVector::from_vec(v);
            // one ulp of slack so that lambda / rho >= max |v| survives rounding
            let lambda = rho * v.amax() * (1.0 + 4.0 * f64::EPSILON);
            let out = prox_apply(&RegSpec::L1 { lambda }, &v, rho).unwrap();
            prop_assert!(out.iter().all(|x| *x == 0.0));
        }
    }
}
