//! Derivatives of scalar fields on the slit tangent bundle.
//!
//! [`eval_jet`] propagates nested dual numbers (one nesting level per
//! derivative order, one seed direction per pass) and is exact to machine
//! precision. [`fd_check`] computes the same blocks by central differences
//! and exists as an independent cross-check.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::scalar::{Dual, Scalar};

/// A base point `x` and a nonzero tangent vector `y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlitPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SlitPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(FinslerError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if let Some(bad) = x.iter().chain(y.iter()).position(|v| !v.is_finite()) {
            return Err(FinslerError::NonFinite {
                what: format!("slit point coordinate {bad}"),
            });
        }
        if y.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
            return Err(FinslerError::ZeroTangent);
        }
        Ok(SlitPoint { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same base point, tangent scaled by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        SlitPoint {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }
}

/// A scalar function of `(x, y)` that can be evaluated on any [`Scalar`].
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S;
}

/// Value and first/second derivatives of a scalar field at a slit point.
#[derive(Clone, Debug, Serialize)]
pub struct Jet2Value {
    pub value: f64,
    pub dy: Array1<f64>,
    pub dyy: Array2<f64>,
    pub dx: Array1<f64>,
    /// `dxy[[i, j]] = ∂²f / ∂x^i ∂y^j`.
    pub dxy: Array2<f64>,
}

impl Jet2Value {
    fn check_finite(&self) -> Result<()> {
        let bad = |what: String| Err(FinslerError::NonFinite { what });
        if !self.value.is_finite() {
            return bad("value".into());
        }
        for (i, v) in self.dy.iter().enumerate() {
            if !v.is_finite() {
                return bad(format!("dy[{i}]"));
            }
        }
        for (i, v) in self.dx.iter().enumerate() {
            if !v.is_finite() {
                return bad(format!("dx[{i}]"));
            }
        }
        for ((i, j), v) in self.dyy.indexed_iter() {
            if !v.is_finite() {
                return bad(format!("dyy[{i}][{j}]"));
            }
        }
        for ((i, j), v) in self.dxy.indexed_iter() {
            if !v.is_finite() {
                return bad(format!("dxy[{i}][{j}]"));
            }
        }
        Ok(())
    }
}

fn check_point<F: ScalarField>(f: &F, p: &SlitPoint) -> Result<()> {
    if p.dim() != f.dim() {
        return Err(FinslerError::DimensionMismatch {
            expected: f.dim(),
            got: p.dim(),
        });
    }
    if p.y_norm() == 0.0 {
        return Err(FinslerError::ZeroTangent);
    }
    Ok(())
}

/// Evaluates `f` on second-order duals with the outer infinitesimal seeded
/// on variable `a` and the inner one on `b`, where variables `0..n` are `x`
/// and `n..2n` are `y`.
fn eval_pair<F: ScalarField, S: Scalar>(
    f: &F,
    x: &[S],
    y: &[S],
    a: usize,
    b: usize,
) -> Dual<Dual<S>> {
    let n = x.len();
    let lift = |k: usize, v: S| {
        let inner = if k == b { S::one() } else { S::zero() };
        let outer = if k == a { S::one() } else { S::zero() };
        Dual::new(Dual::new(v, inner), Dual::new(outer, S::zero()))
    };
    let xs: Vec<_> = x.iter().enumerate().map(|(k, &v)| lift(k, v)).collect();
    let ys: Vec<_> = y.iter().enumerate().map(|(k, &v)| lift(n + k, v)).collect();
    f.eval(&xs, &ys)
}

/// Value, y-gradient and y-Hessian of `f` at `(x, y)` in any scalar type.
///
/// Used with `S = f64` for the fundamental tensor and with nested duals
/// whenever derivatives of the Hessian itself are required.
pub fn y_hessian<F: ScalarField, S: Scalar>(f: &F, x: &[S], y: &[S]) -> (S, Vec<S>, Array2<S>) {
    let n = x.len();
    let mut value = S::zero();
    let mut grad = vec![S::zero(); n];
    let mut hess = Array2::from_elem((n, n), S::zero());
    for i in 0..n {
        for j in i..n {
            let r = eval_pair(f, x, y, n + i, n + j);
            if i == j {
                value = r.val.val;
                grad[i] = r.val.eps;
            }
            hess[[i, j]] = r.eps.eps;
            hess[[j, i]] = r.eps.eps;
        }
    }
    (value, grad, hess)
}

/// Value and y-gradient of `f` in any scalar type.
pub fn y_gradient<F: ScalarField, S: Scalar>(f: &F, x: &[S], y: &[S]) -> (S, Vec<S>) {
    let xs: Vec<Dual<S>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut value = S::zero();
    let mut grad = Vec::with_capacity(y.len());
    for k in 0..y.len() {
        let ys = crate::scalar::seed(y, Some(k));
        let r = f.eval(&xs, &ys);
        value = r.val;
        grad.push(r.eps);
    }
    (value, grad)
}

/// All first and second derivative blocks of `f` at `p` by nested dual
/// propagation.
pub fn eval_jet<F: ScalarField>(f: &F, p: &SlitPoint) -> Result<Jet2Value> {
    check_point(f, p)?;
    let n = p.dim();
    let mut jet = Jet2Value {
        value: 0.0,
        dy: Array1::zeros(n),
        dyy: Array2::zeros((n, n)),
        dx: Array1::zeros(n),
        dxy: Array2::zeros((n, n)),
    };
    for i in 0..n {
        for j in i..n {
            let r = eval_pair(f, &p.x, &p.y, n + i, n + j);
            if i == j {
                jet.value = r.val.val;
                jet.dy[i] = r.val.eps;
            }
            jet.dyy[[i, j]] = r.eps.eps;
            jet.dyy[[j, i]] = r.eps.eps;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let r = eval_pair(f, &p.x, &p.y, i, n + j);
            if j == 0 {
                jet.dx[i] = r.eps.val;
            }
            jet.dxy[[i, j]] = r.eps.eps;
        }
    }
    jet.check_finite()?;
    Ok(jet)
}

/// Central-difference estimate of the same blocks as [`eval_jet`].
pub fn fd_check<F: ScalarField>(f: &F, p: &SlitPoint, h: f64) -> Result<Jet2Value> {
    check_point(f, p)?;
    if !(h > 0.0) {
        return Err(FinslerError::InvalidParams(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    if 2.0 * h >= p.y_norm() {
        return Err(FinslerError::StencilLeavesSlitBundle {
            step: h,
            y_norm: p.y_norm(),
        });
    }
    let n = p.dim();
    // shifted evaluation: variables 0..n are x, n..2n are y
    let at = |shifts: &[(usize, f64)]| -> f64 {
        let mut x = p.x.clone();
        let mut y = p.y.clone();
        for &(k, d) in shifts {
            if k < n {
                x[k] += d;
            } else {
                y[k - n] += d;
            }
        }
        f.eval::<f64>(&x, &y)
    };
    let f0 = at(&[]);
    let d1 = |k: usize| (at(&[(k, h)]) - at(&[(k, -h)])) / (2.0 * h);
    let d2 = |a: usize, b: usize| {
        if a == b {
            (at(&[(a, h)]) - 2.0 * f0 + at(&[(a, -h)])) / (h * h)
        } else {
            (at(&[(a, h), (b, h)]) - at(&[(a, h), (b, -h)]) - at(&[(a, -h), (b, h)])
                + at(&[(a, -h), (b, -h)]))
                / (4.0 * h * h)
        }
    };
    let jet = Jet2Value {
        value: f0,
        dy: Array1::from_shape_fn(n, |i| d1(n + i)),
        dyy: Array2::from_shape_fn((n, n), |(i, j)| d2(n + i, n + j)),
        dx: Array1::from_shape_fn(n, d1),
        dxy: Array2::from_shape_fn((n, n), |(i, j)| d2(i, n + j)),
    };
    jet.check_finite()?;
    Ok(jet)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct SumSquares;
    impl ScalarField for SumSquares {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
            y[0] * y[0] + y[1] * y[1]
        }
    }

    struct Bilinear;
    impl ScalarField for Bilinear {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
            x[0] * y[0]
        }
    }

    struct Constant;
    impl ScalarField for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, _x: &[S], _y: &[S]) -> S {
            S::from_f64(3.5)
        }
    }

    struct Norm;
    impl ScalarField for Norm {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
            (y[0] * y[0] + y[1] * y[1]).sqrt()
        }
    }

    struct Blowup;
    impl ScalarField for Blowup {
        fn dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
            y[0] / x[1]
        }
    }

    #[test]
    fn quadratic_jet() {
        let p = SlitPoint::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let j = eval_jet(&SumSquares, &p).unwrap();
        assert_eq!(j.value, 5.0);
        assert_eq!(j.dy.to_vec(), vec![2.0, 4.0]);
        assert_eq!(j.dyy, Array2::eye(2) * 2.0);
        assert_eq!(j.dx.to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn bilinear_jet() {
        let p = SlitPoint::new(vec![3.0, 0.0], vec![2.0, 1.0]).unwrap();
        let j = eval_jet(&Bilinear, &p).unwrap();
        assert_eq!(j.value, 6.0);
        assert_eq!(j.dy.to_vec(), vec![3.0, 0.0]);
        assert_eq!(j.dx.to_vec(), vec![2.0, 0.0]);
        let mut expected = Array2::zeros((2, 2));
        expected[[0, 0]] = 1.0;
        assert_eq!(j.dxy, expected);
    }

    #[test]
    fn zero_tangent_rejected() {
        assert_eq!(
            SlitPoint::new(vec![0.0, 0.0], vec![0.0, 0.0]),
            Err(FinslerError::ZeroTangent)
        );
    }

    #[test]
    fn non_finite_names_block() {
        let p = SlitPoint::new(vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        match eval_jet(&Blowup, &p) {
            Err(FinslerError::NonFinite { what }) => assert_eq!(what, "value"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fd_constant_is_flat() {
        let p = SlitPoint::new(vec![0.3, -1.0], vec![0.2, 0.9]).unwrap();
        let j = fd_check(&Constant, &p, 1e-4).unwrap();
        assert!(j.dy.iter().chain(j.dx.iter()).all(|v| v.abs() < 1e-10));
        assert!(j.dyy.iter().chain(j.dxy.iter()).all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn fd_norm_gradient_on_axis() {
        let p = SlitPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let j = fd_check(&Norm, &p, 1e-5).unwrap();
        assert!((j.dy[0] - 1.0).abs() < 1e-8);
        assert!(j.dy[1].abs() < 1e-8);
    }

    #[test]
    fn fd_refuses_stencil_through_origin() {
        let p = SlitPoint::new(vec![0.0, 0.0], vec![1e-3, 0.0]).unwrap();
        assert!(matches!(
            fd_check(&Norm, &p, 1e-3),
            Err(FinslerError::StencilLeavesSlitBundle { .. })
        ));
    }

    #[test]
    fn hessian_helper_matches_jet() {
        let p = SlitPoint::new(vec![0.0, 0.0], vec![0.6, -0.8]).unwrap();
        let (v, g, h) = y_hessian(&Norm, &p.x, &p.y);
        let j = eval_jet(&Norm, &p).unwrap();
        assert_eq!(v, j.value);
        assert_eq!(g, j.dy.to_vec());
        assert_eq!(h, j.dyy);
        let (v2, g2) = y_gradient(&Norm, &p.x, &p.y);
        assert_eq!(v2, v);
        assert_eq!(g2, g);
    }
}
