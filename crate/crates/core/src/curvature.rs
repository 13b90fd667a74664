//! hh- and hv-curvature of the Chern connection, flag curvature and the
//! Landsberg tensor.
//!
//! Convention: `R^i_jkl = δ_k Γ^i_jl − δ_l Γ^i_jk + Γ^i_hk Γ^h_jl − Γ^i_hl Γ^h_jk`,
//! which reduces to the classical Riemann tensor (`R^φ_θφθ = sin²φ` on the
//! unit sphere) and makes the flag curvature of the unit sphere `+1`.

use ndarray::{Array3, Array4};
use serde::Serialize;

use crate::connection::{chern_coefficients, chern_jet, ChernJet};
use crate::error::{FinslerError, Result};
use crate::jet::SlitPoint;
use crate::model::FinslerModel;

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureValue {
    pub r: Array4<f64>,
    pub p: Array4<f64>,
    pub point: SlitPoint,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlagValue {
    pub k: f64,
    pub flag: SlitPoint,
    pub transverse: Vec<f64>,
}

pub fn r_from_jet(j: &ChernJet) -> Array4<f64> {
    let n = j.gamma.shape()[0];
    // δ_l Γ^i_jk stored as [[i, j, k, l]]
    let delta = Array4::from_shape_fn((n, n, n, n), |(i, jj, k, l)| {
        let mut s = j.dx[[i, jj, k, l]];
        for m in 0..n {
            s -= j.n[[m, l]] * j.dy[[i, jj, k, m]];
        }
        s
    });
    riemann_from(&j.gamma, &delta)
}

/// Curvature from Γ and its δ-derivatives `d[[i, j, k, l]] = δ_l Γ^i_jk`.
pub fn riemann_from(gamma: &Array3<f64>, d: &Array4<f64>) -> Array4<f64> {
    let n = gamma.shape()[0];
    Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        let mut s = d[[i, j, l, k]] - d[[i, j, k, l]];
        for h in 0..n {
            s += gamma[[i, h, k]] * gamma[[h, j, l]] - gamma[[i, h, l]] * gamma[[h, j, k]];
        }
        s
    })
}

pub fn p_from_jet(j: &ChernJet) -> Array4<f64> {
    j.dy.mapv(|v| -j.f * v)
}

/// Both curvature tensors from one differentiation pass.
pub fn curvature(m: &FinslerModel, p: &SlitPoint) -> Result<CurvatureValue> {
    let j = chern_jet(m, p, true)?;
    Ok(CurvatureValue {
        r: r_from_jet(&j),
        p: p_from_jet(&j),
        point: p.clone(),
    })
}

pub fn hh_curvature(m: &FinslerModel, p: &SlitPoint) -> Result<Array4<f64>> {
    Ok(r_from_jet(&chern_jet(m, p, true)?))
}

/// `P^i_jkl = −F ∂Γ^i_jk/∂y^l`.
pub fn hv_curvature(m: &FinslerModel, p: &SlitPoint) -> Result<Array4<f64>> {
    Ok(p_from_jet(&chern_jet(m, p, false)?))
}

/// Lowers the first index: `R_ijkl = g_im R^m_jkl`.
pub fn lower(g: &ndarray::Array2<f64>, r: &Array4<f64>) -> Array4<f64> {
    let n = g.nrows();
    Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        (0..n).map(|m| g[[i, m]] * r[[m, j, k, l]]).sum()
    })
}

pub fn flag_curvature(m: &FinslerModel, p: &SlitPoint, v: &[f64]) -> Result<FlagValue> {
    let n = p.dim();
    if v.len() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let j = chern_jet(m, p, true)?;
    let k = flag_from(&j.g, &r_from_jet(&j), &p.y, v)?;
    Ok(FlagValue {
        k,
        flag: p.clone(),
        transverse: v.to_vec(),
    })
}

/// `K = V^i y^j R_ijkl V^k y^l / (g(V,V) g(y,y) − g(y,V)²)`.
pub fn flag_from(g: &ndarray::Array2<f64>, r: &Array4<f64>, y: &[f64], v: &[f64]) -> Result<f64> {
    let n = y.len();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[[i, j]] * a[i] * b[j];
            }
        }
        s
    };
    let (vv, yy, yv) = (ip(v, v), ip(y, y), ip(y, v));
    let denom = vv * yy - yv * yv;
    if !(denom > 1e-12 * vv * yy) {
        return Err(FinslerError::DegenerateFlag { denominator: denom });
    }
    let rl = lower(g, r);
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    num += v[i] * y[j] * rl[[i, j, k, l]] * v[k] * y[l];
                }
            }
        }
    }
    Ok(num / denom)
}

/// `Ȧ_ikl = −(y^j/F) g_jm P^m_ikl`.
pub fn landsberg_tensor(m: &FinslerModel, p: &SlitPoint) -> Result<Array3<f64>> {
    let j = chern_jet(m, p, false)?;
    Ok(landsberg_from(&j.g, &p_from_jet(&j), &p.y, j.f))
}

pub fn landsberg_from(g: &ndarray::Array2<f64>, pc: &Array4<f64>, y: &[f64], f: f64) -> Array3<f64> {
    let n = y.len();
    let yl: Vec<f64> = (0..n)
        .map(|m| (0..n).map(|j| y[j] * g[[j, m]]).sum::<f64>() / f)
        .collect();
    Array3::from_shape_fn((n, n, n), |(i, k, l)| {
        -(0..n).map(|m| yl[m] * pc[[m, i, k, l]]).sum::<f64>()
    })
}

/// Richardson-extrapolated central difference `(4 D(h/2) − D(h)) / 3`.
pub fn richardson<F>(f: F, h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let central = |s: f64| -> Result<Vec<f64>> {
        let a = f(s)?;
        let b = f(-s)?;
        Ok(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * s)).collect())
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

/// Finite-difference oracle for the hh-curvature: δ-derivatives of Γ by
/// Richardson-extrapolated central differences in `x` and `y`.
pub fn hh_curvature_fd(m: &FinslerModel, p: &SlitPoint) -> Result<Array4<f64>> {
    let n = p.dim();
    let gamma = chern_coefficients(m, p)?;
    let nl = crate::connection::nonlinear_connection(m, p)?.n;
    let mut dx = Array4::zeros((n, n, n, n));
    let mut dy = Array4::zeros((n, n, n, n));
    for l in 0..n {
        let hx = 1e-5 * (1.0 + p.x[l].abs());
        let d = richardson(
            |s| {
                let mut x = p.x.clone();
                x[l] += s;
                Ok(chern_coefficients(m, &SlitPoint::new(x, p.y.clone())?)?.into_raw_vec_and_offset().0)
            },
            hx,
        )?;
        let hy = 1e-5 * p.y_norm();
        let e = richardson(
            |s| {
                let mut y = p.y.clone();
                y[l] += s;
                Ok(chern_coefficients(m, &SlitPoint::new(p.x.clone(), y)?)?.into_raw_vec_and_offset().0)
            },
            hy,
        )?;
        for (idx, (a, b)) in d.iter().zip(&e).enumerate() {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            dx[[i, j, k, l]] = *a;
            dy[[i, j, k, l]] = *b;
        }
    }
    let delta = Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        let mut s = dx[[i, j, k, l]];
        for mm in 0..n {
            s -= nl[[mm, l]] * dy[[i, j, k, mm]];
        }
        s
    });
    Ok(riemann_from(&gamma, &delta))
}

/// Curvature of a y-independent coefficient field `x ↦ Γ(x)` by
/// Richardson-extrapolated central differences with step `1e-5·(1+|x|)`.
pub fn affine_curvature_fd<F>(gamma_at: F, x: &[f64]) -> Result<Array4<f64>>
where
    F: Fn(&[f64]) -> Result<Array3<f64>>,
{
    let n = x.len();
    let gamma = gamma_at(x)?;
    let mut d = Array4::zeros((n, n, n, n));
    for l in 0..n {
        let h = 1e-5 * (1.0 + x[l].abs());
        let col = richardson(
            |s| {
                let mut xs = x.to_vec();
                xs[l] += s;
                Ok(gamma_at(&xs)?.into_raw_vec_and_offset().0)
            },
            h,
        )?;
        for (idx, v) in col.iter().enumerate() {
            d[[idx / (n * n), (idx / n) % n, idx % n, l]] = *v;
        }
    }
    Ok(riemann_from(&gamma, &d))
}
