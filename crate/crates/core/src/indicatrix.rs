//! Quadrature on the indicatrix `F(x, ·) = 1` and indicatrix averages of
//! connections, metrics and curvature.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use ndarray::{Array2, Array3, Array4, ArrayD, IxDyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{berwald_coefficients, chern_coefficients};
use crate::curvature::{affine_curvature_fd, hh_curvature};
use crate::error::{FinslerError, Result};
use crate::jet::{y_hessian, ScalarField, SlitPoint};
use crate::linalg::{self, spd_det};
use crate::model::{FinslerModel, HalfSquare, MatrixField};
use crate::sampling::frame_from_axis;
use crate::scalar::{Dual, Scalar};

/// Default rule order for averages (n = 3 uses `order × 2·order` nodes).
pub const DEFAULT_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let m = order;
    let mut out = vec![(0.0, 0.0); m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..m {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        out[i] = (c - h * z, h * w);
        out[m - 1 - i] = (c + h * z, h * w);
    }
    out
}

/// Averaging source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Chern,
    Berwald,
}

/// Nodes on the indicatrix with induced-volume weights.
#[derive(Clone, Debug, Serialize)]
pub struct IndicatrixQuadrature {
    pub x: Vec<f64>,
    pub nodes: Vec<SlitPoint>,
    pub weights: Vec<f64>,
    pub order: usize,
    pub cone_restricted: bool,
}

/// Angular rule: for each node the angles and the product of 1-D weights.
fn angular_rule(n: usize, order: usize, half_angle: Option<f64>) -> Vec<(Vec<f64>, f64)> {
    if n == 2 {
        return match half_angle {
            None => (0..order)
                .map(|k| (vec![2.0 * PI * k as f64 / order as f64], 2.0 * PI / order as f64))
                .collect(),
            Some(h) => gauss_legendre(order, -h, h)
                .into_iter()
                .map(|(t, w)| (vec![t], w))
                .collect(),
        };
    }
    let first = gauss_legendre(order, 0.0, half_angle.unwrap_or(PI));
    let middle = gauss_legendre(order, 0.0, PI);
    let naz = 2 * order;
    let azimuth: Vec<(f64, f64)> = (0..naz)
        .map(|k| (2.0 * PI * k as f64 / naz as f64, 2.0 * PI / naz as f64))
        .collect();
    let mut rule: Vec<(Vec<f64>, f64)> = first.iter().map(|&(a, w)| (vec![a], w)).collect();
    for _ in 1..n - 2 {
        rule = rule
            .into_iter()
            .flat_map(|(v, w)| {
                middle.iter().map(move |&(a, wa)| {
                    let mut v2 = v.clone();
                    v2.push(a);
                    (v2, w * wa)
                })
            })
            .collect();
    }
    rule.into_iter()
        .flat_map(|(v, w)| {
            azimuth.iter().map(move |&(b, wb)| {
                let mut v2 = v.clone();
                v2.push(b);
                (v2, w * wb)
            })
        })
        .collect()
}

/// Unit direction from angles, pole along `e_0` before the frame rotation.
fn direction<S: Scalar>(angles: &[S], n: usize, frame: &[Vec<f64>]) -> Vec<S> {
    let mut local = Vec::with_capacity(n);
    if n == 2 {
        local.push(angles[0].cos());
        local.push(angles[0].sin());
    } else {
        let mut prod = S::one();
        for a in &angles[..n - 2] {
            local.push(prod * a.cos());
            prod = prod * a.sin();
        }
        let b = angles[n - 2];
        local.push(prod * b.cos());
        local.push(prod * b.sin());
    }
    frame
        .iter()
        .map(|row| {
            let mut s = S::zero();
            for (q, u) in row.iter().zip(&local) {
                s += *u * *q;
            }
            s
        })
        .collect()
}

struct Rule {
    frame: Vec<Vec<f64>>,
    angles: Vec<(Vec<f64>, f64)>,
    cone_restricted: bool,
}

fn rule_for(m: &FinslerModel, order: usize) -> Result<Rule> {
    if order < 2 {
        return Err(FinslerError::InvalidParams(format!(
            "quadrature order must be at least 2, got {order}"
        )));
    }
    let n = m.dim();
    let (frame, half) = match &m.cone {
        Some(c) => (frame_from_axis(&c.axis), Some(c.half_angle)),
        None if m.is_y_local() => return Err(FinslerError::ConeRequired),
        None => (
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            None,
        ),
    };
    Ok(Rule {
        frame,
        angles: angular_rule(n, order, half),
        cone_restricted: half.is_some(),
    })
}

/// Node `y = u/F(x, u)` and weight `w·√det(JᵀgJ)` with `J = ∂y/∂angles`,
/// plus `g(x, y)`.
fn node_generic<S: Scalar>(
    m: &FinslerModel,
    x: &[S],
    angles: &[f64],
    w: f64,
    frame: &[Vec<f64>],
) -> Result<(Vec<S>, S, Array2<S>)> {
    let n = x.len();
    let k = n - 1;
    let xd: Vec<Dual<S>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut y = Vec::new();
    let mut jac = Array2::from_elem((n, k), S::zero());
    for a in 0..k {
        let ang: Vec<Dual<S>> = angles
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual::new(S::from_f64(v), if i == a { S::one() } else { S::zero() }))
            .collect();
        let u = direction(&ang, n, frame);
        let f = m.eval(&xd, &u);
        let yd: Vec<Dual<S>> = u.iter().map(|&c| c / f).collect();
        for i in 0..n {
            jac[[i, a]] = yd[i].eps;
        }
        if a == 0 {
            y = yd.iter().map(|v| v.val).collect();
        }
    }
    let yre: Vec<f64> = y.iter().map(|v| v.re()).collect();
    let xre: Vec<f64> = x.iter().map(|v| v.re()).collect();
    let p = SlitPoint::new(xre.clone(), yre.clone())?;
    if !m.in_convexity_domain(&p) {
        return Err(FinslerError::OutsideConvexityDomain { x: xre, y: yre });
    }
    let (_, _, g) = y_hessian(&HalfSquare(m), x, &y);
    let pull = Array2::from_shape_fn((k, k), |(a, b)| {
        let mut s = S::zero();
        for i in 0..n {
            for j in 0..n {
                s += jac[[i, a]] * g[[i, j]] * jac[[j, b]];
            }
        }
        s
    });
    let gre = g.mapv(|v| v.re());
    let det = spd_det(&pull).map_err(|_| FinslerError::StrongConvexityViolation {
        eigenvalue: linalg::min_eigenvalue(&gre),
        x: p.x.clone(),
        y: p.y.clone(),
    })?;
    if !(linalg::min_eigenvalue(&gre) > 0.0) {
        return Err(FinslerError::StrongConvexityViolation {
            eigenvalue: linalg::min_eigenvalue(&gre),
            x: p.x,
            y: p.y,
        });
    }
    Ok((y, det.sqrt() * w, g))
}

pub fn build_indicatrix_quadrature(
    m: &FinslerModel,
    x: &[f64],
    order: usize,
) -> Result<IndicatrixQuadrature> {
    if x.len() != m.dim() {
        return Err(FinslerError::DimensionMismatch {
            expected: m.dim(),
            got: x.len(),
        });
    }
    let rule = rule_for(m, order)?;
    let nodes: Vec<(Vec<f64>, f64)> = rule
        .angles
        .par_iter()
        .map(|(ang, w)| node_generic::<f64>(m, x, ang, *w, &rule.frame).map(|(y, w, _)| (y, w)))
        .collect::<Result<_>>()?;
    let (ys, weights): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
    Ok(IndicatrixQuadrature {
        x: x.to_vec(),
        nodes: ys
            .into_iter()
            .map(|y| SlitPoint { x: x.to_vec(), y })
            .collect(),
        weights,
        order,
        cone_restricted: rule.cone_restricted,
    })
}

pub fn indicatrix_volume(q: &IndicatrixQuadrature) -> f64 {
    q.weights.iter().sum()
}

/// `⟨T⟩ = (1/vol) Σ w_k T(node_k)`, evaluated in parallel and summed in node
/// order.
pub fn average_tensor<T>(q: &IndicatrixQuadrature, t: T) -> Result<ArrayD<f64>>
where
    T: Fn(&SlitPoint) -> Result<ArrayD<f64>> + Sync,
{
    let values: Vec<ArrayD<f64>> = q
        .nodes
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            t(p).map_err(|e| FinslerError::NodeEvaluation {
                node: k,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let vol = indicatrix_volume(q);
    let mut acc = ArrayD::zeros(values[0].raw_dim());
    for (v, w) in values.iter().zip(&q.weights) {
        acc.scaled_add(*w, v);
    }
    Ok(acc / vol)
}

/// Averaged connection at one base point.
#[derive(Clone, Debug, Serialize)]
pub struct AveragedConnection {
    pub x: Vec<f64>,
    pub coefficients: Array3<f64>,
    pub quadrature_order: usize,
    pub source: Source,
    pub cone_restricted: bool,
}

pub fn averaged_connection(
    m: &FinslerModel,
    source: Source,
    x: &[f64],
    order: usize,
) -> Result<AveragedConnection> {
    let q = build_indicatrix_quadrature(m, x, order)?;
    let avg = average_tensor(&q, |p| {
        let c = match source {
            Source::Chern => chern_coefficients(m, p)?,
            Source::Berwald => berwald_coefficients(m, p)?,
        };
        Ok(c.into_dyn())
    })?;
    let n = m.dim();
    let mut coefficients = avg.into_shape_with_order((n, n, n)).expect("rank-3 average");
    // average of symmetric arrays: remove roundoff asymmetry
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                let s = 0.5 * (coefficients[[i, j, k]] + coefficients[[i, k, j]]);
                coefficients[[i, j, k]] = s;
                coefficients[[i, k, j]] = s;
            }
        }
    }
    Ok(AveragedConnection {
        x: x.to_vec(),
        coefficients,
        quadrature_order: order,
        source,
        cone_restricted: q.cone_restricted,
    })
}

/// `⟨g⟩(x)` in any scalar type.
pub fn averaged_metric_generic<S: Scalar>(m: &FinslerModel, x: &[S], order: usize) -> Result<Array2<S>> {
    let n = m.dim();
    let rule = rule_for(m, order)?;
    let parts: Vec<(S, Array2<S>)> = rule
        .angles
        .par_iter()
        .map(|(ang, w)| node_generic(m, x, ang, *w, &rule.frame).map(|(_, w, g)| (w, g)))
        .collect::<Result<_>>()?;
    let mut vol = S::zero();
    let mut acc = Array2::from_elem((n, n), S::zero());
    for (w, g) in &parts {
        vol += *w;
        for (a, b) in acc.iter_mut().zip(g.iter()) {
            *a += *w * *b;
        }
    }
    Ok(acc.mapv(|v| v / vol))
}

pub fn averaged_metric(m: &FinslerModel, x: &[f64], order: usize) -> Result<Array2<f64>> {
    if x.len() != m.dim() {
        return Err(FinslerError::DimensionMismatch {
            expected: m.dim(),
            got: x.len(),
        });
    }
    averaged_metric_generic(m, x, order)
}

/// `⟨R⟩(x)`: average of the hh-curvature over the indicatrix.
pub fn averaged_curvature(m: &FinslerModel, x: &[f64], order: usize) -> Result<Array4<f64>> {
    let q = build_indicatrix_quadrature(m, x, order)?;
    let n = m.dim();
    let avg = average_tensor(&q, |p| Ok(hh_curvature(m, p)?.into_dyn()))?;
    Ok(avg
        .into_shape_with_order(IxDyn(&[n, n, n, n]))
        .expect("rank-4 average")
        .into_dimensionality()
        .expect("rank-4 average"))
}

/// Curvature of the affine connection `⟨Γ⟩` by differences of averages.
pub fn averaged_connection_curvature(
    m: &FinslerModel,
    source: Source,
    x: &[f64],
    order: usize,
) -> Result<Array4<f64>> {
    affine_curvature_fd(|xs| Ok(averaged_connection(m, source, xs, order)?.coefficients), x)
}

/// `F_t = (1−t)F + t√(h(y, y))`.
pub fn interpolated_family(m: &Arc<FinslerModel>, h: MatrixField, t: f64) -> Result<FinslerModel> {
    m.interpolate(h, t)
}

/// `x ↦ ⟨g⟩(x)` as a matrix field, memoizing the last real base point.
#[derive(Debug)]
pub struct AveragedMetricField {
    pub model: Arc<FinslerModel>,
    pub order: usize,
    memo: Mutex<Option<(Vec<f64>, Array2<f64>)>>,
}

impl AveragedMetricField {
    pub fn new(model: Arc<FinslerModel>, order: usize) -> Self {
        AveragedMetricField {
            model,
            order,
            memo: Mutex::new(None),
        }
    }

    /// NaN entries signal a failed average; they surface later as
    /// non-finite evaluation errors.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Array2<S> {
        let n = self.model.dim();
        let nan = || Array2::from_elem((n, n), S::from_f64(f64::NAN));
        if x.iter().all(|v| v.is_real()) {
            let xr: Vec<f64> = x.iter().map(|v| v.re()).collect();
            let mut memo = self.memo.lock().expect("memo lock");
            if let Some((xm, g)) = memo.as_ref() {
                if *xm == xr {
                    return g.mapv(S::from_f64);
                }
            }
            return match averaged_metric(&self.model, &xr, self.order) {
                Ok(g) => {
                    let out = g.mapv(S::from_f64);
                    *memo = Some((xr, g));
                    out
                }
                Err(_) => nan(),
            };
        }
        // First-order Taylor expansion with exact derivatives: callers only
        // differentiate the fundamental tensor of an interpolated model once
        // in x. Working in a fixed scalar type also keeps the instantiation
        // of nested interpolated models finite.
        let x0: Vec<f64> = x.iter().map(|v| v.re()).collect();
        let g0 = self.eval::<f64>(&x0);
        let mut out = g0.mapv(S::from_f64);
        for k in 0..n {
            let dk = x[k] - S::from_f64(x0[k]);
            if dk.is_real() {
                continue;
            }
            let xs = crate::scalar::seed(&x0, Some(k));
            match averaged_metric_generic::<Dual<f64>>(&self.model, &xs, self.order) {
                Ok(gd) => {
                    for (o, d) in out.iter_mut().zip(gd.iter()) {
                        *o += dk * d.eps;
                    }
                }
                Err(_) => return nan(),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{euclidean, riemannian, MetricField};
    use crate::expr::Expr;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let r = gauss_legendre(5, 0.0, 2.0);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let w: f64 = r.iter().map(|(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn euclidean_volumes() {
        let q2 = build_indicatrix_quadrature(&euclidean(2).unwrap(), &[0.0, 0.0], 16).unwrap();
        assert!((indicatrix_volume(&q2) - 2.0 * PI).abs() < 1e-12);
        let q3 = build_indicatrix_quadrature(&euclidean(3).unwrap(), &[0.0; 3], 12).unwrap();
        assert!((indicatrix_volume(&q3) - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn ellipse_perimeter() {
        // g = diag(4, 1): unit ball is an ellipse with semi-axes 1/2 and 1,
        // measured in g its perimeter is the length of the unit g-circle, 2π
        let g = MetricField::new(vec![
            vec![Expr::c(4.0), Expr::c(0.0)],
            vec![Expr::c(0.0), Expr::c(1.0)],
        ])
        .unwrap();
        let m = riemannian(g).unwrap();
        let q = build_indicatrix_quadrature(&m, &[0.0, 0.0], 64).unwrap();
        assert!((indicatrix_volume(&q) - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn odd_integrand_averages_to_zero() {
        let q = build_indicatrix_quadrature(&euclidean(3).unwrap(), &[0.0; 3], 8).unwrap();
        let avg = average_tensor(&q, |p| Ok(ndarray::arr1(&p.y).into_dyn())).unwrap();
        assert!(avg.iter().all(|v| v.abs() < 1e-12));
    }
}
