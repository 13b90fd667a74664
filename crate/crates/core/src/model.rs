//! Finsler models, the built-in catalog, axiom checks, and the fundamental
//! and Cartan tensors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::expr::{Env, Expr};
use crate::indicatrix::AveragedMetricField;
use crate::jet::{y_gradient, y_hessian, ScalarField, SlitPoint};
use crate::linalg::{self, spd_inverse};
use crate::sampling::{apply, frame_from_axis, to_box, unit_vector, Halton};
use crate::scalar::{lift_f64, seed, Dual, Scalar};

/// Default number of quasi-random points for sampled axiom checks.
pub const DEFAULT_CONVEXITY_SAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Euclidean,
    Riemannian,
    Randers,
    Numata,
    BerwaldRund,
    SphereCircleRanders,
    Slope,
    Custom,
    Interpolated,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "euclidean" => Family::Euclidean,
            "riemannian" => Family::Riemannian,
            "randers" => Family::Randers,
            "numata" => Family::Numata,
            "berwald_rund" => Family::BerwaldRund,
            "sphere_circle_randers" => Family::SphereCircleRanders,
            "slope" => Family::Slope,
            "custom" => Family::Custom,
            other => return Err(FinslerError::UnknownFamily(other.to_string())),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::Riemannian => "riemannian",
            Family::Randers => "randers",
            Family::Numata => "numata",
            Family::BerwaldRund => "berwald_rund",
            Family::SphereCircleRanders => "sphere_circle_randers",
            Family::Slope => "slope",
            Family::Custom => "custom",
            Family::Interpolated => "interpolated",
        }
    }
}

/// A parameter value in a model definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
    List(Vec<ParamValue>),
}

pub type Params = BTreeMap<String, ParamValue>;

/// Serializable model definition: `{"family", "dim", "params"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub params: Params,
}

/// Circular cone of tangent directions around `axis`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub axis: Vec<f64>,
    pub half_angle: f64,
}

impl Cone {
    pub fn new(axis: Vec<f64>, half_angle: f64) -> Result<Cone> {
        let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !(half_angle > 0.0 && half_angle <= PI) {
            return Err(FinslerError::InvalidParams(format!(
                "cone needs nonzero axis and half-angle in (0, π], got {axis:?}, {half_angle}"
            )));
        }
        Ok(Cone {
            axis: axis.iter().map(|v| v / norm).collect(),
            half_angle,
        })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c: f64 = y.iter().zip(&self.axis).map(|(a, b)| a * b).sum::<f64>() / ny;
        c.clamp(-1.0, 1.0).acos() <= self.half_angle + 1e-12
    }
}

/// Where in each tangent space strong convexity is claimed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum YDomain {
    Global,
    /// `y[k] > 0`.
    PositiveComponent(usize),
}

/// Symmetric matrix-valued function of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    pub entries: Vec<Vec<Expr>>,
}

impl MetricField {
    pub fn new(entries: Vec<Vec<Expr>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(FinslerError::InvalidParams("metric must be a square matrix".into()));
        }
        for row in &entries {
            for e in row {
                e.validate(n, true, false, false)?;
            }
        }
        Ok(MetricField { entries })
    }

    pub fn identity(n: usize) -> Self {
        MetricField {
            entries: (0..n)
                .map(|i| (0..n).map(|j| Expr::c(if i == j { 1.0 } else { 0.0 })).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Symmetrized value at `x`.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Array2<S> {
        let n = self.dim();
        let raw = Array2::from_shape_fn((n, n), |(i, j)| self.entries[i][j].eval_x(x));
        Array2::from_shape_fn((n, n), |(i, j)| (raw[[i, j]] + raw[[j, i]]) * 0.5)
    }
}

/// Covector field `b_i(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub entries: Vec<Expr>,
}

impl OneForm {
    pub fn new(entries: Vec<Expr>) -> Result<Self> {
        let n = entries.len();
        for e in &entries {
            e.validate(n, true, false, false)?;
        }
        Ok(OneForm { entries })
    }

    pub fn zero(n: usize) -> Self {
        OneForm {
            entries: vec![Expr::c(0.0); n],
        }
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        self.entries.iter().map(|e| e.eval_x(x)).collect()
    }
}

/// Riemannian data `a` and one-form `b` of a Randers model.
#[derive(Clone, Debug, PartialEq)]
pub struct RandersData {
    pub a: MetricField,
    pub b: OneForm,
}

/// Source of the SPD field `h` in an interpolated family.
#[derive(Clone, Debug)]
pub enum MatrixField {
    Constant(Array2<f64>),
    Expr(MetricField),
    Averaged(Arc<AveragedMetricField>),
}

impl MatrixField {
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Array2<S> {
        match self {
            MatrixField::Constant(m) => m.mapv(S::from_f64),
            MatrixField::Expr(f) => f.eval(x),
            MatrixField::Averaged(a) => a.eval(x),
        }
    }
}

#[derive(Clone, Debug)]
enum ModelBody {
    Expr(Expr),
    /// `F = (y⁰ + ξ y¹)² / y¹` with `x⁰ + x¹ ξ = ψ(ξ)`.
    BerwaldRund {
        psi: Expr,
        bracket: (f64, f64),
    },
    Interpolated {
        base: Arc<FinslerModel>,
        h: MatrixField,
        t: f64,
    },
}

/// A Finsler function on a single coordinate chart.
#[derive(Clone, Debug)]
pub struct FinslerModel {
    pub name: String,
    pub family: Family,
    dim: usize,
    body: ModelBody,
    /// Coordinate box used for sampling base points.
    pub domain: Vec<(f64, f64)>,
    pub y_domain: YDomain,
    /// Directions used for indicatrix averages of y-local models.
    pub cone: Option<Cone>,
    pub randers: Option<RandersData>,
}

impl ScalarField for FinslerModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        match &self.body {
            ModelBody::Expr(e) => e.eval(&Env { x, y, s: S::zero() }),
            ModelBody::BerwaldRund { psi, bracket } => {
                let xi = implicit_xi(psi, *bracket, x);
                let w = y[0] + xi * y[1];
                w * w / y[1]
            }
            ModelBody::Interpolated { base, h, t } => {
                let norm_h = || {
                    let hm = h.eval(x);
                    let n = y.len();
                    let mut q = S::zero();
                    for i in 0..n {
                        for j in 0..n {
                            q += hm[[i, j]] * y[i] * y[j];
                        }
                    }
                    q.sqrt()
                };
                if *t == 0.0 {
                    base.eval(x, y)
                } else if *t == 1.0 {
                    norm_h()
                } else {
                    base.eval(x, y) * (1.0 - t) + norm_h() * *t
                }
            }
        }
    }
}

/// `F²/2` as a scalar field.
pub struct HalfSquare<'a>(pub &'a FinslerModel);

impl ScalarField for HalfSquare<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let f = self.0.eval(x, y);
        f * f * 0.5
    }
}

/// Root of `x⁰ + x¹ ξ − ψ(ξ) = 0` in `[lo, hi]` by safeguarded Newton with
/// bisection fallback.
pub fn solve_xi(psi: &Expr, bracket: (f64, f64), x0: f64, x1: f64) -> Option<f64> {
    let phi = |xi: f64| {
        let p = psi.eval(&Env { x: &[], y: &[], s: Dual::variable(xi) });
        (x0 + x1 * xi - p.val, x1 - p.eps)
    };
    let (mut lo, mut hi) = bracket;
    let (flo, _) = phi(lo);
    let (fhi, _) = phi(hi);
    if !(flo * fhi <= 0.0) {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    let increasing = fhi > flo;
    let mut xi = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = phi(xi);
        if f == 0.0 {
            return Some(xi);
        }
        if (f > 0.0) == increasing {
            hi = xi;
        } else {
            lo = xi;
        }
        let newton = xi - f / df;
        let next = if df != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let tol = 1e-12 * (1.0 + next.abs());
        if (next - xi).abs() < tol || (hi - lo) < tol {
            return Some(next);
        }
        xi = next;
    }
    Some(xi)
}

/// `ξ(x)` in an arbitrary scalar type: solved in `f64`, then refined by
/// Newton steps carried out in `S` so the tangent parts pick up the
/// implicit-function derivatives.
fn implicit_xi<S: Scalar>(psi: &Expr, bracket: (f64, f64), x: &[S]) -> S {
    let xi0 = match solve_xi(psi, bracket, x[0].re(), x[1].re()) {
        Some(v) => v,
        None => return S::from_f64(f64::NAN),
    };
    let mut xi = S::from_f64(xi0);
    if x[0].is_real() && x[1].is_real() {
        return xi;
    }
    // each step doubles the number of correct Taylor orders
    for _ in 0..4 {
        let p = psi.eval(&Env { x: &[], y: &[], s: Dual::variable(xi) });
        let f = x[0] + x[1] * xi - p.val;
        let df = x[1] - p.eps;
        xi = xi - f / df;
    }
    xi
}

fn params_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(FinslerError::InvalidParams(msg.into()))
}

fn param_expr(v: &ParamValue, what: &str) -> Result<Expr> {
    match v {
        ParamValue::Number(c) => Ok(Expr::c(*c)),
        ParamValue::Text(s) => Expr::parse(s),
        ParamValue::List(_) => params_err(format!("`{what}` must be a number or expression")),
    }
}

fn param_number(params: &Params, key: &str) -> Result<Option<f64>> {
    match params.get(key) {
        None => Ok(None),
        Some(ParamValue::Number(c)) => Ok(Some(*c)),
        Some(_) => params_err(format!("`{key}` must be a number")),
    }
}

fn param_vector(params: &Params, key: &str) -> Result<Option<Vec<Expr>>> {
    match params.get(key) {
        None => Ok(None),
        Some(ParamValue::List(items)) => items
            .iter()
            .map(|v| param_expr(v, key))
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => params_err(format!("`{key}` must be a list")),
    }
}

fn param_numbers(params: &Params, key: &str) -> Result<Option<Vec<f64>>> {
    match params.get(key) {
        None => Ok(None),
        Some(ParamValue::List(items)) => items
            .iter()
            .map(|v| match v {
                ParamValue::Number(c) => Ok(*c),
                _ => params_err(format!("`{key}` must be a list of numbers")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => params_err(format!("`{key}` must be a list of numbers")),
    }
}

fn param_matrix(params: &Params, key: &str) -> Result<Option<Vec<Vec<Expr>>>> {
    match params.get(key) {
        None => Ok(None),
        Some(ParamValue::List(rows)) => rows
            .iter()
            .map(|row| match row {
                ParamValue::List(items) => items.iter().map(|v| param_expr(v, key)).collect(),
                _ => params_err(format!("`{key}` must be a list of rows")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => params_err(format!("`{key}` must be a matrix")),
    }
}

fn param_domain(params: &Params, n: usize) -> Result<Option<Vec<(f64, f64)>>> {
    match params.get("domain") {
        None => Ok(None),
        Some(ParamValue::List(rows)) => {
            let dom = rows
                .iter()
                .map(|row| match row {
                    ParamValue::List(v) if v.len() == 2 => match (&v[0], &v[1]) {
                        (ParamValue::Number(a), ParamValue::Number(b)) if a < b => Ok((*a, *b)),
                        _ => params_err("domain bounds must be increasing numbers"),
                    },
                    _ => params_err("domain must be a list of [lo, hi] pairs"),
                })
                .collect::<Result<Vec<_>>>()?;
            if dom.len() != n {
                return params_err(format!("domain has {} intervals, dimension is {n}", dom.len()));
            }
            Ok(Some(dom))
        }
        Some(_) => params_err("domain must be a list of [lo, hi] pairs"),
    }
}

fn require<T>(v: Option<T>, family: &str, key: &str) -> Result<T> {
    v.ok_or_else(|| FinslerError::InvalidParams(format!("family `{family}` requires `{key}`")))
}

impl FinslerModel {
    fn from_expr(name: &str, family: Family, dim: usize, f: Expr) -> Self {
        FinslerModel {
            name: name.to_string(),
            family,
            dim,
            body: ModelBody::Expr(f),
            domain: vec![(-1.0, 1.0); dim],
            y_domain: YDomain::Global,
            cone: None,
            randers: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_y_local(&self) -> bool {
        self.y_domain != YDomain::Global
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Self {
        assert_eq!(domain.len(), self.dim);
        self.domain = domain;
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn f(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval::<f64>(x, y)
    }

    /// `y` lies in the claimed convexity domain and `F(x, y) > 0`.
    pub fn in_convexity_domain(&self, p: &SlitPoint) -> bool {
        let ok = match self.y_domain {
            YDomain::Global => true,
            YDomain::PositiveComponent(k) => p.y[k] > 0.0,
        };
        ok && self.cone.as_ref().map_or(true, |_| true) && {
            let f = self.f(&p.x, &p.y);
            f.is_finite() && f > 0.0
        }
    }

    fn check_point(&self, p: &SlitPoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(FinslerError::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        if !self.in_convexity_domain(p) {
            return Err(FinslerError::OutsideConvexityDomain {
                x: p.x.clone(),
                y: p.y.clone(),
            });
        }
        Ok(())
    }

    /// Quasi-random base point in the sampling box.
    pub fn sample_base_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut h = Halton::new(self.dim, seed);
        (0..count).map(|_| to_box(&h.next_point(), &self.domain)).collect()
    }

    /// Quasi-random directions at `x`, restricted to the cone (if any) and the
    /// convexity domain.
    pub fn sample_directions(&self, x: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut h = Halton::new(n + n % 2, seed ^ 0x5eed_d1ec);
        let mut out = Vec::with_capacity(count);
        let frame = self.cone.as_ref().map(|c| (frame_from_axis(&c.axis), c.half_angle));
        let mut attempts = 0;
        while out.len() < count && attempts < 1000 * count.max(1) {
            attempts += 1;
            let u = h.next_point();
            let dir = match &frame {
                None => unit_vector(&u, n),
                Some((q, half)) => {
                    // polar angle from the axis, remaining directions uniform
                    let alpha = half * u[0];
                    let mut local = vec![alpha.cos()];
                    if n == 2 {
                        let sign = if u[1] < 0.5 { -1.0 } else { 1.0 };
                        local.push(sign * alpha.sin());
                    } else {
                        let rest = unit_vector(&u[1..].iter().chain([0.5].iter()).copied().collect::<Vec<_>>(), n - 1);
                        local.extend(rest.iter().map(|v| v * alpha.sin()));
                    }
                    apply(q, &local)
                }
            };
            let p = SlitPoint {
                x: x.to_vec(),
                y: dir,
            };
            if self.in_convexity_domain(&p) {
                out.push(p.y);
            }
        }
        out
    }

    /// `count` points with one direction each.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<SlitPoint> {
        self.sample_base_points(count, seed)
            .into_iter()
            .enumerate()
            .filter_map(|(k, x)| {
                let y = self.sample_directions(&x, 1, seed.wrapping_add(k as u64 + 1)).pop()?;
                Some(SlitPoint { x, y })
            })
            .collect()
    }

    /// The interpolated norm `F_t = (1−t)F + t√(h(y, y))`.
    pub fn interpolate(self: &Arc<Self>, h: MatrixField, t: f64) -> Result<FinslerModel> {
        if !(0.0..=1.0).contains(&t) {
            return params_err(format!("interpolation parameter must lie in [0, 1], got {t}"));
        }
        for x in self.sample_base_points(8, 17) {
            let hm = h.eval::<f64>(&x);
            if hm.nrows() != self.dim || linalg::cholesky(&hm).is_err() {
                return Err(FinslerError::NotPositiveDefinite(format!(
                    "interpolation field h at x = {x:?}"
                )));
            }
        }
        Ok(FinslerModel {
            name: format!("{}@t={t}", self.name),
            family: Family::Interpolated,
            dim: self.dim,
            body: ModelBody::Interpolated {
                base: Arc::clone(self),
                h,
                t,
            },
            domain: self.domain.clone(),
            y_domain: self.y_domain.clone(),
            cone: self.cone.clone(),
            randers: None,
        })
    }
}

/// Builds a catalog model from a family name and parameters.
pub fn make_catalog_model(family: &str, dim: Option<usize>, params: &Params) -> Result<FinslerModel> {
    let fam = Family::parse(family)?;
    let mut model = match fam {
        Family::Euclidean => euclidean(dim.unwrap_or(2))?,
        Family::Riemannian => {
            let m = require(param_matrix(params, "metric")?, family, "metric")?;
            riemannian(MetricField::new(m)?)?
        }
        Family::Randers => {
            let a = MetricField::new(require(param_matrix(params, "a")?, family, "a")?)?;
            let b = match param_vector(params, "b")? {
                Some(b) => OneForm::new(b)?,
                None => OneForm::zero(a.dim()),
            };
            let mut m = randers(a, b)?;
            if let Some(dom) = param_domain(params, m.dim)? {
                m.domain = dom;
            }
            validate_randers(&m, DEFAULT_CONVEXITY_SAMPLES)?;
            m
        }
        Family::Numata => {
            let g = require(param_matrix(params, "g")?, family, "g")?;
            let n = g.len();
            let b = param_vector(params, "b")?.unwrap_or_else(|| vec![Expr::c(0.0); n]);
            numata(g, b)?
        }
        Family::BerwaldRund => {
            let psi = match params.get("psi") {
                Some(v) => param_expr(v, "psi")?,
                None => Expr::parse("s^2")?,
            };
            let bracket = match param_numbers(params, "xi_bracket")? {
                Some(b) if b.len() == 2 && b[0] < b[1] => (b[0], b[1]),
                Some(_) => return params_err("`xi_bracket` must be [lo, hi] with lo < hi"),
                None => (0.0, 100.0),
            };
            let axis = param_numbers(params, "cone_axis")?.unwrap_or_else(|| vec![1.0, 1.0]);
            let half = param_number(params, "cone_half_angle")?.unwrap_or(0.6);
            berwald_rund(psi, bracket, Cone::new(axis, half)?)?
        }
        Family::SphereCircleRanders => {
            let eps = param_number(params, "epsilon")?.unwrap_or(0.3);
            sphere_circle_randers(eps)?
        }
        Family::Slope => {
            let eta = require(param_matrix(params, "eta")?, family, "eta")?;
            let c = match params.get("c") {
                Some(v) => param_expr(v, "c")?,
                None => return params_err("family `slope` requires `c`"),
            };
            slope(MetricField::new(eta)?, c)?
        }
        Family::Custom => {
            let f = match params.get("F") {
                Some(v) => param_expr(v, "F")?,
                None => return params_err("family `custom` requires `F`"),
            };
            let n = require(dim, family, "dim")?;
            custom(n, f)?
        }
        Family::Interpolated => return Err(FinslerError::UnknownFamily(family.into())),
    };
    if let Some(d) = dim {
        if d != model.dim {
            return Err(FinslerError::DimensionMismatch {
                expected: model.dim,
                got: d,
            });
        }
    }
    if let Some(dom) = param_domain(params, model.dim)? {
        model.domain = dom;
    }
    Ok(model)
}

impl ModelSpec {
    pub fn build(&self) -> Result<FinslerModel> {
        let mut m = make_catalog_model(&self.family, self.dim, &self.params)?;
        if let Some(name) = &self.name {
            m.name = name.clone();
        }
        Ok(m)
    }
}

/// `F = |y|` in `n` dimensions.
pub fn euclidean(n: usize) -> Result<FinslerModel> {
    if n < 2 {
        return params_err("dimension must be at least 2");
    }
    let ident = MetricField::identity(n);
    let f = Expr::sqrt(Expr::quadratic_form(&ident.entries));
    Ok(FinslerModel::from_expr("euclidean", Family::Euclidean, n, f))
}

/// `F = √(g_ij(x) yⁱ yʲ)`.
pub fn riemannian(g: MetricField) -> Result<FinslerModel> {
    let n = g.dim();
    if n < 2 {
        return params_err("dimension must be at least 2");
    }
    let f = Expr::sqrt(Expr::quadratic_form(&g.entries));
    let mut m = FinslerModel::from_expr("riemannian", Family::Riemannian, n, f);
    m.randers = Some(RandersData { a: g, b: OneForm::zero(n) });
    Ok(m)
}

/// Unit round 2-sphere in coordinates `(θ, φ)`: `F² = sin²φ (y^θ)² + (y^φ)²`.
pub fn round_sphere() -> FinslerModel {
    let g = MetricField::new(vec![
        vec![Expr::parse("sin(x[1])^2").unwrap(), Expr::c(0.0)],
        vec![Expr::c(0.0), Expr::c(1.0)],
    ])
    .unwrap();
    riemannian(g)
        .unwrap()
        .with_name("round_sphere")
        .with_domain(vec![(0.0, 2.0 * PI), (0.3, PI - 0.3)])
}

/// `F = √(a(y, y)) + b(y)`.
pub fn randers(a: MetricField, b: OneForm) -> Result<FinslerModel> {
    let n = a.dim();
    if b.entries.len() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: b.entries.len(),
        });
    }
    let f = Expr::add(
        Expr::sqrt(Expr::quadratic_form(&a.entries)),
        Expr::linear_form(&b.entries),
    );
    let mut m = FinslerModel::from_expr("randers", Family::Randers, n, f);
    m.randers = Some(RandersData { a, b });
    Ok(m)
}

/// Rejects Randers data with `‖b‖_a ≥ 1` or non-SPD `a` on a sample.
pub fn validate_randers(m: &FinslerModel, samples: usize) -> Result<f64> {
    let data = m
        .randers
        .as_ref()
        .ok_or_else(|| FinslerError::InvalidParams("not a Randers model".into()))?;
    let mut sup = 0.0f64;
    for x in m.sample_base_points(samples, 1) {
        let norm = b_norm(data, &x)?;
        if !(norm < 1.0) {
            return Err(FinslerError::RandersNormBound { norm, x });
        }
        sup = sup.max(norm);
    }
    Ok(sup)
}

/// `‖b‖_a = √(a^{ij} b_i b_j)` at `x`.
pub fn b_norm(data: &RandersData, x: &[f64]) -> Result<f64> {
    let a = data.a.eval::<f64>(x);
    let ainv = spd_inverse(&a).map_err(|_| {
        FinslerError::NotPositiveDefinite(format!("Randers metric a at x = {x:?}"))
    })?;
    let b = data.b.eval::<f64>(x);
    let n = b.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += ainv[[i, j]] * b[i] * b[j];
        }
    }
    Ok(s.sqrt())
}

/// Randers metric on S²×S¹ with round `a` and parallel `b = ε dt`,
/// coordinates `(θ, φ, t)`.
pub fn sphere_circle_randers(eps: f64) -> Result<FinslerModel> {
    if !(eps.abs() < 1.0) {
        return Err(FinslerError::RandersNormBound {
            norm: eps.abs(),
            x: vec![],
        });
    }
    let a = MetricField::new(vec![
        vec![Expr::parse("sin(x[1])^2")?, Expr::c(0.0), Expr::c(0.0)],
        vec![Expr::c(0.0), Expr::c(1.0), Expr::c(0.0)],
        vec![Expr::c(0.0), Expr::c(0.0), Expr::c(1.0)],
    ])?;
    let b = OneForm::new(vec![Expr::c(0.0), Expr::c(0.0), Expr::c(eps)])?;
    let mut m = randers(a, b)?;
    m.name = format!("sphere_circle_randers(eps={eps})");
    m.family = Family::SphereCircleRanders;
    m.domain = vec![(0.0, 2.0 * PI), (0.3, PI - 0.3), (0.0, 2.0 * PI)];
    Ok(m)
}

/// Randers metric on the S²×S¹ chart with an arbitrary one-form `b`.
pub fn sphere_circle_randers_with(b: &[&str]) -> Result<FinslerModel> {
    let a = MetricField::new(vec![
        vec![Expr::parse("sin(x[1])^2")?, Expr::c(0.0), Expr::c(0.0)],
        vec![Expr::c(0.0), Expr::c(1.0), Expr::c(0.0)],
        vec![Expr::c(0.0), Expr::c(0.0), Expr::c(1.0)],
    ])?;
    let b = OneForm::new(b.iter().map(|s| Expr::parse(s)).collect::<Result<_>>()?)?;
    let mut m = randers(a, b)?;
    m.domain = vec![(0.0, 2.0 * PI), (0.3, PI - 0.3), (0.0, 2.0 * PI)];
    validate_randers(&m, DEFAULT_CONVEXITY_SAMPLES)?;
    Ok(m)
}

/// `F = √(g_ij(y) yⁱ yʲ) + b_i(x) yⁱ` with a user-supplied degree-0
/// homogeneous quadratic form `g(y)`.
pub fn numata(g: Vec<Vec<Expr>>, b: Vec<Expr>) -> Result<FinslerModel> {
    let n = g.len();
    if n < 2 || g.iter().any(|r| r.len() != n) || b.len() != n {
        return params_err("numata needs an n×n `g` and length-n `b`");
    }
    for e in g.iter().flatten() {
        e.validate(n, false, true, false)?;
    }
    for e in &b {
        e.validate(n, true, false, false)?;
    }
    let f = Expr::add(Expr::sqrt(Expr::quadratic_form(&g)), Expr::linear_form(&b));
    Ok(FinslerModel::from_expr("numata", Family::Numata, n, f))
}

/// Berwald–Rund surface `F = (y⁰ + ξ y¹)² / y¹`, convex on `y¹ > 0`.
pub fn berwald_rund(psi: Expr, bracket: (f64, f64), cone: Cone) -> Result<FinslerModel> {
    psi.validate(0, false, false, true)?;
    if cone.axis.len() != 2 {
        return params_err("berwald_rund cone axis must have two components");
    }
    Ok(FinslerModel {
        name: "berwald_rund".into(),
        family: Family::BerwaldRund,
        dim: 2,
        body: ModelBody::BerwaldRund { psi, bracket },
        domain: vec![(0.2, 1.2), (-0.5, 0.5)],
        y_domain: YDomain::PositiveComponent(1),
        cone: Some(cone),
        randers: None,
    })
}

/// Berwald–Rund surface with `ψ(ξ) = ξ²` and the default cone.
pub fn berwald_rund_quadratic() -> FinslerModel {
    berwald_rund(
        Expr::parse("s^2").unwrap(),
        (0.0, 100.0),
        Cone::new(vec![1.0, 1.0], 0.6).unwrap(),
    )
    .unwrap()
}

/// Slope-of-a-mountain metric `F = √(η(y, y)) / c(x, y)` with a degree-0
/// speed function `c`.
pub fn slope(eta: MetricField, c: Expr) -> Result<FinslerModel> {
    let n = eta.dim();
    c.validate(n, true, true, false)?;
    let f = Expr::div(Expr::sqrt(Expr::quadratic_form(&eta.entries)), c);
    Ok(FinslerModel::from_expr("slope", Family::Slope, n, f))
}

/// A slope metric on a bump-shaped hill, uphill travel slower than downhill.
pub fn slope_example() -> FinslerModel {
    // height h = 0.3 exp(-(x0²+x1²)), η = δ + ∇h ∇hᵀ, c = 1 − 0.3 dh(y)/|y|_η
    let hx = "(-0.6*x[0]*exp(-(x[0]^2+x[1]^2)))";
    let hy = "(-0.6*x[1]*exp(-(x[0]^2+x[1]^2)))";
    let eta = MetricField::new(vec![
        vec![Expr::parse(&format!("1 + {hx}*{hx}")).unwrap(), Expr::parse(&format!("{hx}*{hy}")).unwrap()],
        vec![Expr::parse(&format!("{hx}*{hy}")).unwrap(), Expr::parse(&format!("1 + {hy}*{hy}")).unwrap()],
    ])
    .unwrap();
    let alpha = format!("sqrt((1 + {hx}*{hx})*y[0]^2 + 2*{hx}*{hy}*y[0]*y[1] + (1 + {hy}*{hy})*y[1]^2)");
    let c = Expr::parse(&format!("1 - 0.3*({hx}*y[0] + {hy}*y[1])/{alpha}")).unwrap();
    slope(eta, c).unwrap().with_name("slope_example")
}

/// Arbitrary expression model.
pub fn custom(n: usize, f: Expr) -> Result<FinslerModel> {
    if n < 2 {
        return params_err("dimension must be at least 2");
    }
    f.validate(n, true, true, false)?;
    Ok(FinslerModel::from_expr("custom", Family::Custom, n, f))
}

/// Homogeneity residuals over a sample.
#[derive(Clone, Debug, Serialize)]
pub struct HomogeneityReport {
    /// max |F(x, λy) − λF(x, y)| / (λF) over λ ∈ {0.5, 2, 7.3}
    pub scaling_residual: f64,
    /// max |y·∂F/∂y − F| / F
    pub euler_residual: f64,
    pub samples: usize,
}

pub fn check_homogeneity(m: &FinslerModel, samples: usize) -> Result<HomogeneityReport> {
    if samples == 0 {
        return params_err("homogeneity check needs at least one sample");
    }
    let mut scaling = 0.0f64;
    let mut euler = 0.0f64;
    let pts = m.sample_points(samples, 7);
    for p in &pts {
        let f = m.f(&p.x, &p.y);
        for lambda in [0.5, 2.0, 7.3] {
            let fl = m.f(&p.x, &p.scaled(lambda).y);
            scaling = scaling.max((fl - lambda * f).abs() / (lambda * f).abs());
        }
        let (v, grad) = y_gradient(m, &p.x, &p.y);
        let dot: f64 = grad.iter().zip(&p.y).map(|(a, b)| a * b).sum();
        euler = euler.max((dot - v).abs() / v.abs());
    }
    if !(scaling.is_finite() && euler.is_finite()) {
        return Err(FinslerError::NonFinite {
            what: "homogeneity residual".into(),
        });
    }
    Ok(HomogeneityReport {
        scaling_residual: scaling,
        euler_residual: euler,
        samples: pts.len(),
    })
}

/// Fundamental tensor at a point.
#[derive(Clone, Debug, Serialize)]
pub struct MetricValue {
    pub g: Array2<f64>,
    pub point: SlitPoint,
}

/// Cartan tensor `A_ijk` at a point.
#[derive(Clone, Debug, Serialize)]
pub struct CartanValue {
    pub a: Array3<f64>,
    pub point: SlitPoint,
}

pub fn fundamental_tensor(m: &FinslerModel, p: &SlitPoint) -> Result<MetricValue> {
    m.check_point(p)?;
    let (_, _, g) = y_hessian(&HalfSquare(m), &p.x, &p.y);
    check_spd(&g, p)?;
    Ok(MetricValue {
        g,
        point: p.clone(),
    })
}

fn check_spd(g: &Array2<f64>, p: &SlitPoint) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::NonFinite {
            what: format!("fundamental tensor at x = {:?}, y = {:?}", p.x, p.y),
        });
    }
    let trace: f64 = (0..g.nrows()).map(|i| g[[i, i]]).sum();
    let ev = linalg::min_eigenvalue(g);
    if !(ev > linalg::PIVOT_FLOOR * trace.abs()) {
        return Err(FinslerError::StrongConvexityViolation {
            eigenvalue: ev,
            x: p.x.clone(),
            y: p.y.clone(),
        });
    }
    Ok(())
}

pub fn cartan_tensor(m: &FinslerModel, p: &SlitPoint) -> Result<CartanValue> {
    m.check_point(p)?;
    let jet = metric_jet::<f64>(m, &p.x, &p.y);
    check_spd(&jet.g, p)?;
    Ok(CartanValue {
        a: jet.cartan(),
        point: p.clone(),
    })
}

/// Sampled strong-convexity check; returns the smallest eigenvalue of g
/// normalized by its trace.
pub fn check_convexity(m: &FinslerModel, samples: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for p in m.sample_points(samples, 11) {
        let g = fundamental_tensor(m, &p)?.g;
        let trace: f64 = (0..g.nrows()).map(|i| g[[i, i]]).sum();
        worst = worst.min(linalg::min_eigenvalue(&g) / trace);
    }
    Ok(worst)
}

/// `F`, `g` and the first derivatives of `g` at a point, in any scalar type.
#[derive(Clone, Debug)]
pub struct MetricJet<S> {
    pub f: S,
    pub g: Array2<S>,
    /// `dg_dx[[i, j, k]] = ∂g_ij/∂x^k`
    pub dg_dx: Array3<S>,
    /// `dg_dy[[i, j, k]] = ∂g_ij/∂y^k`
    pub dg_dy: Array3<S>,
}

impl<S: Scalar> MetricJet<S> {
    /// `A_ijk = (F/2) ∂g_ij/∂y^k`.
    pub fn cartan(&self) -> Array3<S> {
        self.dg_dy.mapv(|v| v * self.f * 0.5)
    }
}

/// Differentiates each entry of `g` along every coordinate direction of
/// `(x, y)` by one extra dual level.
pub fn metric_jet<S: Scalar>(m: &FinslerModel, x: &[S], y: &[S]) -> MetricJet<S> {
    let n = x.len();
    let half = HalfSquare(m);
    let mut g = Array2::from_elem((n, n), S::zero());
    let mut dg_dx = Array3::from_elem((n, n, n), S::zero());
    let mut dg_dy = Array3::from_elem((n, n, n), S::zero());
    for d in 0..2 * n {
        let (xs, ys): (Vec<Dual<S>>, Vec<Dual<S>>) = if d < n {
            (seed(x, Some(d)), seed(y, None))
        } else {
            (seed(x, None), seed(y, Some(d - n)))
        };
        let (_, _, h) = y_hessian(&half, &xs, &ys);
        for i in 0..n {
            for j in 0..n {
                let e = h[[i, j]];
                g[[i, j]] = e.val;
                if d < n {
                    dg_dx[[i, j, d]] = e.eps;
                } else {
                    dg_dy[[i, j, d - n]] = e.eps;
                }
            }
        }
    }
    MetricJet {
        f: m.eval(x, y),
        g,
        dg_dx,
        dg_dy,
    }
}

/// `F` of `m` evaluated at plain coordinates lifted into `S`.
pub fn eval_lifted<S: Scalar>(m: &FinslerModel, x: &[f64], y: &[f64]) -> S {
    m.eval(&lift_f64::<S>(x), &lift_f64::<S>(y))
}
