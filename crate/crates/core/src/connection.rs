//! Formal Christoffel symbols, the nonlinear connection, adapted-frame
//! derivatives and the Chern, Berwald and Cartan connections.

use ndarray::{Array2, Array3};
use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::jet::{y_gradient, ScalarField, SlitPoint};
use crate::linalg::{self, spd_inverse};
use crate::model::{metric_jet, FinslerModel, HalfSquare, MetricField};
use crate::scalar::{lift_f64, seed, Dual, Scalar};

/// Everything the connection formulas need at one point of the slit bundle.
#[derive(Clone, Debug)]
pub struct PointGeometry<S> {
    pub f: S,
    pub g: Array2<S>,
    pub ginv: Array2<S>,
    pub dg_dx: Array3<S>,
    pub dg_dy: Array3<S>,
    /// formal Christoffel symbols `γ^i_jk`
    pub gamma: Array3<S>,
    /// `N^i_j`
    pub n: Array2<S>,
}

fn convexity_error(x: &[f64], y: &[f64], g: &Array2<f64>) -> FinslerError {
    FinslerError::StrongConvexityViolation {
        eigenvalue: linalg::min_eigenvalue(g),
        x: x.to_vec(),
        y: y.to_vec(),
    }
}

/// Raises the first index of a rank-3 array: `T^i_jk = g^is T_sjk`.
pub fn raise<S: Scalar>(ginv: &Array2<S>, t: &Array3<S>) -> Array3<S> {
    let n = ginv.nrows();
    Array3::from_shape_fn((n, n, n), |(i, j, k)| {
        let mut s = S::zero();
        for m in 0..n {
            s += ginv[[i, m]] * t[[m, j, k]];
        }
        s
    })
}

/// `½ g^is (d_k g_sj − d_s g_jk + d_j g_sk)` for a derivative array
/// `d[[i, j, k]] = d_k g_ij`.
fn christoffel_form<S: Scalar>(ginv: &Array2<S>, d: &Array3<S>) -> Array3<S> {
    let n = ginv.nrows();
    let lowered = Array3::from_shape_fn((n, n, n), |(s, j, k)| {
        (d[[s, j, k]] - d[[j, k, s]] + d[[s, k, j]]) * 0.5
    });
    raise(ginv, &lowered)
}

impl<S: Scalar> PointGeometry<S> {
    pub fn new(m: &FinslerModel, x: &[S], y: &[S]) -> Result<Self> {
        let jet = metric_jet(m, x, y);
        let ginv = spd_inverse(&jet.g).map_err(|_| {
            let x0: Vec<f64> = x.iter().map(|v| v.re()).collect();
            let y0: Vec<f64> = y.iter().map(|v| v.re()).collect();
            convexity_error(&x0, &y0, &jet.g.mapv(|v| v.re()))
        })?;
        let n = x.len();
        let gamma = christoffel_form(&ginv, &jet.dg_dx);
        let cartan_up = raise(&ginv, &jet.cartan());
        // G^k = γ^k_rs y^r y^s
        let spray: Vec<S> = (0..n)
            .map(|k| {
                let mut s = S::zero();
                for r in 0..n {
                    for t in 0..n {
                        s += gamma[[k, r, t]] * y[r] * y[t];
                    }
                }
                s
            })
            .collect();
        let nl = Array2::from_shape_fn((n, n), |(i, j)| {
            let mut a = S::zero();
            for k in 0..n {
                a += gamma[[i, j, k]] * y[k];
            }
            let mut b = S::zero();
            for k in 0..n {
                b += cartan_up[[i, j, k]] * spray[k];
            }
            a - b / jet.f
        });
        Ok(PointGeometry {
            f: jet.f,
            g: jet.g,
            ginv,
            dg_dx: jet.dg_dx,
            dg_dy: jet.dg_dy,
            gamma,
            n: nl,
        })
    }

    /// `δg_ij/δx^k = ∂g_ij/∂x^k − N^m_k ∂g_ij/∂y^m`.
    pub fn delta_g(&self) -> Array3<S> {
        let n = self.g.nrows();
        Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            let mut s = self.dg_dx[[i, j, k]];
            for m in 0..n {
                s -= self.n[[m, k]] * self.dg_dy[[i, j, m]];
            }
            s
        })
    }

    /// Chern coefficients `Γ^l_jk`.
    pub fn chern(&self) -> Array3<S> {
        christoffel_form(&self.ginv, &self.delta_g())
    }

    /// Cartan tensor with the first index raised.
    pub fn cartan_up(&self) -> Array3<S> {
        let a = self.dg_dy.mapv(|v| v * self.f * 0.5);
        raise(&self.ginv, &a)
    }
}

fn geometry(m: &FinslerModel, p: &SlitPoint) -> Result<PointGeometry<f64>> {
    check_domain(m, p)?;
    PointGeometry::new(m, &p.x, &p.y)
}

pub(crate) fn check_domain(m: &FinslerModel, p: &SlitPoint) -> Result<()> {
    if p.dim() != m.dim() {
        return Err(FinslerError::DimensionMismatch {
            expected: m.dim(),
            got: p.dim(),
        });
    }
    if !m.in_convexity_domain(p) {
        return Err(FinslerError::OutsideConvexityDomain {
            x: p.x.clone(),
            y: p.y.clone(),
        });
    }
    Ok(())
}

fn finite3(a: Array3<f64>, what: &str) -> Result<Array3<f64>> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(a)
    } else {
        Err(FinslerError::NonFinite { what: what.into() })
    }
}

pub fn formal_christoffel(m: &FinslerModel, p: &SlitPoint) -> Result<Array3<f64>> {
    finite3(geometry(m, p)?.gamma, "formal Christoffel symbols")
}

/// `N^i_j` at a point.
#[derive(Clone, Debug, Serialize)]
pub struct NonlinearConnectionValue {
    pub n: Array2<f64>,
    pub point: SlitPoint,
}

pub fn nonlinear_connection(m: &FinslerModel, p: &SlitPoint) -> Result<NonlinearConnectionValue> {
    let geo = geometry(m, p)?;
    Ok(NonlinearConnectionValue {
        n: geo.n,
        point: p.clone(),
    })
}

/// `δf/δx^k = ∂f/∂x^k − N^i_k ∂f/∂y^i`.
pub fn horizontal_derivative<F: ScalarField>(
    m: &FinslerModel,
    f: &F,
    p: &SlitPoint,
    k: usize,
) -> Result<f64> {
    if k >= m.dim() {
        return Err(FinslerError::InvalidParams(format!("index {k} out of range")));
    }
    let geo = geometry(m, p)?;
    let xs = seed(&p.x, Some(k));
    let ys = seed(&p.y, None);
    let dx = f.eval(&xs, &ys).eps;
    let (_, dy) = y_gradient(f, &p.x, &p.y);
    let mut s = dx;
    for (i, d) in dy.iter().enumerate() {
        s -= geo.n[[i, k]] * d;
    }
    if s.is_finite() {
        Ok(s)
    } else {
        Err(FinslerError::NonFinite {
            what: "horizontal derivative".into(),
        })
    }
}

pub fn chern_coefficients(m: &FinslerModel, p: &SlitPoint) -> Result<Array3<f64>> {
    finite3(geometry(m, p)?.chern(), "Chern coefficients")
}

/// Chern coefficients in any scalar type, for differentiation through Γ.
pub fn chern_generic<S: Scalar>(m: &FinslerModel, x: &[S], y: &[S]) -> Result<Array3<S>> {
    Ok(PointGeometry::new(m, x, y)?.chern())
}

/// Γ together with `∂Γ/∂x^l` and `∂Γ/∂y^l`, stored as `[[i, j, k, l]]`.
pub struct ChernJet {
    pub gamma: Array3<f64>,
    pub n: Array2<f64>,
    pub f: f64,
    pub g: Array2<f64>,
    pub dx: ndarray::Array4<f64>,
    pub dy: ndarray::Array4<f64>,
}

/// Exact first derivatives of the Chern coefficients by one more dual level.
pub fn chern_jet(m: &FinslerModel, p: &SlitPoint, with_x: bool) -> Result<ChernJet> {
    let geo = geometry(m, p)?;
    let n = p.dim();
    let gamma = geo.chern();
    let mut dx = ndarray::Array4::zeros((n, n, n, n));
    let mut dy = ndarray::Array4::zeros((n, n, n, n));
    let dirs = if with_x { 2 * n } else { n };
    for d in 0..dirs {
        let (xs, ys): (Vec<Dual<f64>>, Vec<Dual<f64>>) = if d < n && with_x {
            (seed(&p.x, Some(d)), seed(&p.y, None))
        } else {
            let l = if with_x { d - n } else { d };
            (seed(&p.x, None), seed(&p.y, Some(l)))
        };
        let gd = chern_generic(m, &xs, &ys)?;
        for ((i, j, k), v) in gd.indexed_iter() {
            if d < n && with_x {
                dx[[i, j, k, d]] = v.eps;
            } else {
                let l = if with_x { d - n } else { d };
                dy[[i, j, k, l]] = v.eps;
            }
        }
    }
    if dx.iter().chain(dy.iter()).any(|v| !v.is_finite()) {
        return Err(FinslerError::NonFinite {
            what: "derivatives of Chern coefficients".into(),
        });
    }
    Ok(ChernJet {
        gamma,
        n: geo.n,
        f: geo.f,
        g: geo.g,
        dx,
        dy,
    })
}

/// `G^i_jk = ∂N^i_j/∂y^k`.
pub fn berwald_coefficients(m: &FinslerModel, p: &SlitPoint) -> Result<Array3<f64>> {
    check_domain(m, p)?;
    let n = p.dim();
    let xs: Vec<Dual<f64>> = lift_f64(&p.x);
    let mut out = Array3::zeros((n, n, n));
    for k in 0..n {
        let ys = seed(&p.y, Some(k));
        let geo = PointGeometry::new(m, &xs, &ys)?;
        for i in 0..n {
            for j in 0..n {
                out[[i, j, k]] = geo.n[[i, j]].eps;
            }
        }
    }
    finite3(out, "Berwald coefficients")
}

/// Horizontal and vertical parts of the Cartan connection.
#[derive(Clone, Debug, Serialize)]
pub struct CartanConnection {
    pub horizontal: Array3<f64>,
    pub vertical: Array3<f64>,
}

pub fn cartan_connection_coefficients(m: &FinslerModel, p: &SlitPoint) -> Result<CartanConnection> {
    let geo = geometry(m, p)?;
    Ok(CartanConnection {
        horizontal: finite3(geo.chern(), "Cartan connection")?,
        vertical: finite3(geo.cartan_up(), "Cartan connection")?,
    })
}

/// Maximum residuals of the structure equations over a sample.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub metric_compatibility: f64,
    pub torsion: f64,
    pub vertical_compatibility: f64,
    pub samples: usize,
}

pub fn verify_structure_equations(m: &FinslerModel, samples: usize) -> Result<StructureReport> {
    let mut rep = StructureReport {
        metric_compatibility: 0.0,
        torsion: 0.0,
        vertical_compatibility: 0.0,
        samples: 0,
    };
    let n = m.dim();
    for p in m.sample_points(samples, 23) {
        let geo = geometry(m, &p)?;
        let gam = geo.chern();
        let dg = geo.delta_g();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dg[[i, j, k]];
                    for s in 0..n {
                        r -= geo.g[[s, j]] * gam[[s, i, k]] + geo.g[[i, s]] * gam[[s, j, k]];
                    }
                    rep.metric_compatibility = rep.metric_compatibility.max(r.abs());
                    rep.torsion = rep.torsion.max((gam[[i, j, k]] - gam[[i, k, j]]).abs());
                }
            }
        }
        // vertical: F ∂g/∂y by central differences against 2A from the jet
        let h = 1e-4 * p.y_norm();
        let a2 = geo.dg_dy.mapv(|v| v * geo.f);
        for k in 0..n {
            let mut yp = p.y.clone();
            let mut ym = p.y.clone();
            yp[k] += h;
            ym[k] -= h;
            let gp = hessian_f64(m, &p.x, &yp);
            let gm = hessian_f64(m, &p.x, &ym);
            for i in 0..n {
                for j in 0..n {
                    let fd = geo.f * (gp[[i, j]] - gm[[i, j]]) / (2.0 * h);
                    rep.vertical_compatibility =
                        rep.vertical_compatibility.max((fd - a2[[i, j, k]]).abs());
                }
            }
        }
        rep.samples += 1;
    }
    Ok(rep)
}

fn hessian_f64(m: &FinslerModel, x: &[f64], y: &[f64]) -> Array2<f64> {
    crate::jet::y_hessian(&HalfSquare(m), x, y).2
}

/// Coefficient field of a linear connection, possibly depending on `y`.
pub trait ConnectionField: Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn y_independent(&self) -> bool;
    fn torsion_free(&self) -> bool;
    fn coefficients(&self, x: &[f64], y: &[f64]) -> Result<Array3<f64>>;
}

/// The Chern connection of a model.
pub struct ChernField<'a> {
    pub model: &'a FinslerModel,
}

impl ConnectionField for ChernField<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn name(&self) -> String {
        format!("chern({})", self.model.name)
    }
    fn y_independent(&self) -> bool {
        false
    }
    fn torsion_free(&self) -> bool {
        true
    }
    fn coefficients(&self, x: &[f64], y: &[f64]) -> Result<Array3<f64>> {
        let p = SlitPoint::new(x.to_vec(), y.to_vec())?;
        chern_coefficients(self.model, &p)
    }
}

/// The Berwald connection `G = ∂N/∂y` of a model.
pub struct BerwaldField<'a> {
    pub model: &'a FinslerModel,
}

impl ConnectionField for BerwaldField<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn name(&self) -> String {
        format!("berwald({})", self.model.name)
    }
    fn y_independent(&self) -> bool {
        false
    }
    fn torsion_free(&self) -> bool {
        true
    }
    fn coefficients(&self, x: &[f64], y: &[f64]) -> Result<Array3<f64>> {
        let p = SlitPoint::new(x.to_vec(), y.to_vec())?;
        berwald_coefficients(self.model, &p)
    }
}

/// Levi-Civita connection of a Riemannian metric field.
pub struct LeviCivitaField {
    pub metric: MetricField,
}

impl LeviCivitaField {
    pub fn new(metric: MetricField) -> Self {
        LeviCivitaField { metric }
    }

    pub fn generic<S: Scalar>(&self, x: &[S]) -> Result<Array3<S>> {
        levi_civita(&self.metric, x)
    }
}

/// Christoffel symbols of `a(x)` by forward differentiation of its entries.
pub fn levi_civita<S: Scalar>(a: &MetricField, x: &[S]) -> Result<Array3<S>> {
    let n = a.dim();
    let g = a.eval(x);
    let ginv = spd_inverse(&g).map_err(|_| {
        FinslerError::NotPositiveDefinite(format!(
            "metric at x = {:?}",
            x.iter().map(|v| v.re()).collect::<Vec<_>>()
        ))
    })?;
    let mut d = Array3::from_elem((n, n, n), S::zero());
    for k in 0..n {
        let gk = a.eval(&seed(x, Some(k)));
        for i in 0..n {
            for j in 0..n {
                d[[i, j, k]] = gk[[i, j]].eps;
            }
        }
    }
    Ok(christoffel_form(&ginv, &d))
}

impl ConnectionField for LeviCivitaField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }
    fn name(&self) -> String {
        "levi_civita".into()
    }
    fn y_independent(&self) -> bool {
        true
    }
    fn torsion_free(&self) -> bool {
        true
    }
    fn coefficients(&self, x: &[f64], _y: &[f64]) -> Result<Array3<f64>> {
        finite3(levi_civita(&self.metric, x)?, "Levi-Civita coefficients")
    }
}

/// Γ ≡ 0 in the chart.
pub struct FlatField {
    pub dim: usize,
}

impl ConnectionField for FlatField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> String {
        "flat".into()
    }
    fn y_independent(&self) -> bool {
        true
    }
    fn torsion_free(&self) -> bool {
        true
    }
    fn coefficients(&self, _x: &[f64], _y: &[f64]) -> Result<Array3<f64>> {
        Ok(Array3::zeros((self.dim, self.dim, self.dim)))
    }
}
