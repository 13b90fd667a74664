//! Geodesics, horizontal lifts, parallel transport and the probes built on
//! them.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{nonlinear_connection, ConnectionField};
use crate::error::{FinslerError, Result};
use crate::indicatrix::{averaged_connection, build_indicatrix_quadrature, Source};
use crate::jet::SlitPoint;
use crate::model::FinslerModel;
use crate::ode::{dopri5, OdeOptions, Trajectory};

/// One piece of a base curve, parametrized by `s ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Segment {
    Line { from: Vec<f64>, to: Vec<f64> },
    /// Great-circle arc between unit vectors `p` and `q` of R³, drawn in the
    /// sphere chart `(θ, φ) = (atan2(z₁, z₀), acos z₂)` and followed by
    /// constant trailing coordinates.
    GreatArc { p: [f64; 3], q: [f64; 3], trailing: Vec<f64> },
}

impl Segment {
    fn eval(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            Segment::Line { from, to } => (
                from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect(),
                from.iter().zip(to).map(|(a, b)| b - a).collect(),
            ),
            Segment::GreatArc { p, q, trailing } => {
                let dot = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0);
                let om = dot.acos();
                let so = om.sin();
                let a = ((1.0 - s) * om).sin() / so;
                let b = (s * om).sin() / so;
                let da = -om * ((1.0 - s) * om).cos() / so;
                let db = om * (s * om).cos() / so;
                let z: Vec<f64> = (0..3).map(|i| a * p[i] + b * q[i]).collect();
                let dz: Vec<f64> = (0..3).map(|i| da * p[i] + db * q[i]).collect();
                let r2 = z[0] * z[0] + z[1] * z[1];
                let mut x = vec![z[1].atan2(z[0]), z[2].clamp(-1.0, 1.0).acos()];
                let mut v = vec![
                    (z[0] * dz[1] - z[1] * dz[0]) / r2,
                    -dz[2] / (1.0 - z[2] * z[2]).sqrt(),
                ];
                x.extend(trailing.iter().copied());
                v.extend(trailing.iter().map(|_| 0.0));
                (x, v)
            }
        }
    }
}

/// Piecewise base curve; segment `k` covers parameters `[k, k+1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Path {
    pub segments: Vec<Segment>,
}

impl Path {
    pub fn new(segments: Vec<Segment>) -> Self {
        assert!(!segments.is_empty(), "a path needs at least one segment");
        Path { segments }
    }

    pub fn line(from: Vec<f64>, to: Vec<f64>) -> Self {
        Path::new(vec![Segment::Line { from, to }])
    }

    /// Closed polygon through `corners` (back to the first).
    pub fn polygon(corners: &[Vec<f64>]) -> Self {
        let n = corners.len();
        Path::new(
            (0..n)
                .map(|i| Segment::Line {
                    from: corners[i].clone(),
                    to: corners[(i + 1) % n].clone(),
                })
                .collect(),
        )
    }

    /// Loop `x + 2π s e_k`, closed for a periodic coordinate.
    pub fn coordinate_loop(x: &[f64], k: usize) -> Self {
        let mut to = x.to_vec();
        to[k] += 2.0 * PI;
        Path::line(x.to_vec(), to)
    }

    /// Geodesic triangle with three right angles on the unit sphere, centred
    /// on the chart equator at `θ = 0`, followed by `trailing` coordinates.
    pub fn octant_triangle(trailing: Vec<f64>) -> Self {
        let s = (2.0f64 / 3.0).sqrt();
        let v: Vec<[f64; 3]> = (0..3)
            .map(|k| {
                let a = 0.3 + 2.0 * PI * k as f64 / 3.0;
                [1.0 / 3f64.sqrt(), s * a.cos(), s * a.sin()]
            })
            .collect();
        Path::new(
            (0..3)
                .map(|k| Segment::GreatArc {
                    p: v[k],
                    q: v[(k + 1) % 3],
                    trailing: trailing.clone(),
                })
                .collect(),
        )
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        Path::new(
            self.segments
                .iter()
                .rev()
                .map(|s| match s {
                    Segment::Line { from, to } => Segment::Line {
                        from: to.clone(),
                        to: from.clone(),
                    },
                    Segment::GreatArc { p, q, trailing } => Segment::GreatArc {
                        p: *q,
                        q: *p,
                        trailing: trailing.clone(),
                    },
                })
                .collect(),
        )
    }

    pub fn t_end(&self) -> f64 {
        self.segments.len() as f64
    }

    /// Position and velocity at parameter `t ∈ [0, t_end]`.
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let k = (t.floor().max(0.0) as usize).min(self.segments.len() - 1);
        self.segments[k].eval(t - k as f64)
    }

    pub fn dim(&self) -> usize {
        self.eval(0.0).0.len()
    }
}

/// Integrates `rhs(x, ẋ, state)` along `path` one segment at a time, so
/// corners of the curve fall on step boundaries.
fn along_path<F>(path: &Path, y0: &[f64], tol: f64, rhs: F) -> Result<Trajectory>
where
    F: Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>>,
{
    let opts = OdeOptions { tol, ..Default::default() };
    let mut total: Option<Trajectory> = None;
    let mut y = y0.to_vec();
    for (k, seg) in path.segments.iter().enumerate() {
        let t0 = k as f64;
        let tr = dopri5(
            |t, s| {
                let (x, v) = seg.eval(t - t0);
                rhs(&x, &v, s)
            },
            t0,
            &y,
            t0 + 1.0,
            opts,
        )?;
        y = tr.y_end.clone();
        match &mut total {
            None => total = Some(tr),
            Some(acc) => acc.append(tr),
        }
    }
    Ok(total.expect("path has segments"))
}

fn contract(gamma: &Array3<f64>, a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += gamma[[i, j, k]] * a[j] * b[k];
                }
            }
            s
        })
        .collect()
}

/// Geodesic samples `(t, x, ẋ)`.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSolution {
    pub samples: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub tolerance: f64,
    pub connection: String,
    pub steps: usize,
}

impl GeodesicSolution {
    pub fn end(&self) -> (&[f64], &[f64]) {
        let last = self.samples.last().expect("nonempty samples");
        (&last.1, &last.2)
    }
}

/// Samples per unit of curve parameter in trajectory output.
pub const SAMPLES_PER_UNIT: usize = 64;

/// `ẍ^i + Γ^i_jk(x, ẋ) ẋ^j ẋ^k = 0`.
pub fn integrate_geodesic<C: ConnectionField + ?Sized>(
    field: &C,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    tol: f64,
) -> Result<GeodesicSolution> {
    let n = field.dim();
    if x0.len() != n || v0.len() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: x0.len().max(v0.len()),
        });
    }
    let mut y0 = x0.to_vec();
    y0.extend_from_slice(v0);
    let traj = dopri5(
        |_, s| {
            let (x, v) = s.split_at(n);
            let acc = contract(&field.coefficients(x, v)?, v, v);
            let mut out = v.to_vec();
            out.extend(acc.iter().map(|a| -a));
            Ok(out)
        },
        0.0,
        &y0,
        t_end,
        OdeOptions { tol, ..Default::default() },
    )?;
    let count = ((t_end.abs() * SAMPLES_PER_UNIT as f64).ceil() as usize).max(1);
    Ok(GeodesicSolution {
        samples: traj
            .sample(count)
            .into_iter()
            .map(|(t, s)| (t, s[..n].to_vec(), s[n..].to_vec()))
            .collect(),
        tolerance: tol * traj.max_error.max(f64::EPSILON),
        connection: field.name(),
        steps: traj.steps,
    })
}

/// State along a transported curve.
#[derive(Clone, Debug, Serialize)]
pub struct TransportState {
    pub t: f64,
    pub x: Vec<f64>,
    /// Reference (horizontally lifted) vector, if one is carried.
    pub u: Option<Vec<f64>>,
    pub w: Vec<f64>,
    /// `F(x, u)` when a reference is carried, else `F(x, W)`.
    pub f: f64,
}

fn states(
    m: &FinslerModel,
    path: &Path,
    traj: &Trajectory,
    with_u: bool,
) -> Vec<TransportState> {
    let n = path.dim();
    let count = (path.t_end() as usize * SAMPLES_PER_UNIT).max(1);
    traj.sample(count)
        .into_iter()
        .map(|(t, s)| {
            let (x, _) = path.eval(t);
            let (u, w) = if with_u {
                (Some(s[..n].to_vec()), s[n..].to_vec())
            } else {
                (None, s.clone())
            };
            let f = m.f(&x, u.as_ref().unwrap_or(&w));
            TransportState { t, x, u, w, f }
        })
        .collect()
}

fn n_times(m: &FinslerModel, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let p = SlitPoint::new(x.to_vec(), u.to_vec())?;
    let nl = nonlinear_connection(m, &p)?.n;
    Ok((0..x.len())
        .map(|i| (0..x.len()).map(|j| nl[[i, j]] * v[j]).sum())
        .collect())
}

/// `du^i/dt = −N^i_j(x, u) ẋ^j`.
pub fn horizontal_lift(m: &FinslerModel, path: &Path, u0: &[f64], tol: f64) -> Result<Vec<TransportState>> {
    check_path(m.dim(), path, u0)?;
    let traj = along_path(path, u0, tol, |x, v, u| {
        Ok(n_times(m, x, u, v)?.iter().map(|a| -a).collect())
    })?;
    Ok(states(m, path, &traj, false)
        .into_iter()
        .map(|mut s| {
            s.u = Some(s.w.clone());
            s
        })
        .collect())
}

fn check_path(n: usize, path: &Path, v: &[f64]) -> Result<()> {
    if path.dim() != n || v.len() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: if v.len() != n { v.len() } else { path.dim() },
        });
    }
    Ok(())
}

/// `dW^i/dt + Γ^i_jk(x, u) W^j ẋ^k = 0`, with `u` carried by the horizontal
/// lift when the field depends on `y`.
pub fn parallel_transport<C: ConnectionField + ?Sized>(
    field: &C,
    m: &FinslerModel,
    path: &Path,
    w0: &[f64],
    u0: Option<&[f64]>,
    tol: f64,
) -> Result<Vec<TransportState>> {
    let n = field.dim();
    check_path(n, path, w0)?;
    match (field.y_independent(), u0) {
        (false, None) => Err(FinslerError::MissingReference(field.name())),
        (true, None) => {
            let traj = along_path(path, w0, tol, |x, v, w| {
                let gam = field.coefficients(x, v)?;
                Ok(contract(&gam, w, v).iter().map(|a| -a).collect())
            })?;
            Ok(states(m, path, &traj, false))
        }
        (_, Some(u0)) => {
            check_path(n, path, u0)?;
            let mut s0 = u0.to_vec();
            s0.extend_from_slice(w0);
            let traj = along_path(path, &s0, tol, |x, v, s| {
                let (u, w) = s.split_at(n);
                let mut out: Vec<f64> = n_times(m, x, u, v)?.iter().map(|a| -a).collect();
                let gam = field.coefficients(x, u)?;
                out.extend(contract(&gam, w, v).iter().map(|a| -a));
                Ok(out)
            })?;
            Ok(states(m, path, &traj, true))
        }
    }
}

/// Linear map `W(0) ↦ W(end)` of a y-independent field along `path`.
pub fn transport_matrix<C: ConnectionField + ?Sized>(field: &C, path: &Path, tol: f64) -> Result<Array2<f64>> {
    let n = field.dim();
    if !field.y_independent() {
        return Err(FinslerError::MissingReference(field.name()));
    }
    if path.dim() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: path.dim(),
        });
    }
    // columns stacked: state[c*n + i] = M[i][c]
    let mut s0 = vec![0.0; n * n];
    for c in 0..n {
        s0[c * n + c] = 1.0;
    }
    let traj = along_path(path, &s0, tol, |x, v, s| {
        let gam = field.coefficients(x, v)?;
        let mut out = Vec::with_capacity(n * n);
        for c in 0..n {
            out.extend(contract(&gam, &s[c * n..(c + 1) * n], v).iter().map(|a| -a));
        }
        Ok(out)
    })?;
    Ok(Array2::from_shape_fn((n, n), |(i, c)| traj.y_end[c * n + i]))
}

/// The indicatrix-averaged connection as a y-independent field.
pub struct AveragedField<'a> {
    pub model: &'a FinslerModel,
    pub source: Source,
    pub order: usize,
}

impl ConnectionField for AveragedField<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn name(&self) -> String {
        format!("averaged_{:?}({})", self.source, self.model.name).to_lowercase()
    }
    fn y_independent(&self) -> bool {
        true
    }
    fn torsion_free(&self) -> bool {
        true
    }
    fn coefficients(&self, x: &[f64], _y: &[f64]) -> Result<Array3<f64>> {
        Ok(averaged_connection(self.model, self.source, x, self.order)?.coefficients)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub max_deviation: f64,
    pub worst_node: usize,
    pub nodes: usize,
    pub path_end: Vec<f64>,
}

/// Transports the indicatrix of `m` at the start of `path` with a
/// y-independent field and reports `max |F(x_end, W_end) − 1|`.
pub fn indicatrix_invariance_probe<C: ConnectionField + ?Sized>(
    m: &FinslerModel,
    field: &C,
    path: &Path,
    order: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    let mat = transport_matrix(field, path, tol)?;
    invariance_with_matrix(m, &mat, path, order)
}

/// As [`indicatrix_invariance_probe`] with a precomputed transport matrix.
pub fn invariance_with_matrix(
    m: &FinslerModel,
    mat: &Array2<f64>,
    path: &Path,
    order: usize,
) -> Result<InvarianceReport> {
    let (x0, _) = path.eval(0.0);
    let (x1, _) = path.eval(path.t_end());
    let q = build_indicatrix_quadrature(m, &x0, order)?;
    let mut worst = (0.0, 0);
    for (k, node) in q.nodes.iter().enumerate() {
        let w = mat.dot(&ndarray::arr1(&node.y)).to_vec();
        let dev = (m.f(&x1, &w) - 1.0).abs();
        if !dev.is_finite() {
            return Err(FinslerError::NodeEvaluation {
                node: k,
                source: Box::new(FinslerError::NonFinite {
                    what: "F at transported node".into(),
                }),
            });
        }
        if dev > worst.0 {
            worst = (dev, k);
        }
    }
    Ok(InvarianceReport {
        max_deviation: worst.0,
        worst_node: worst.1,
        nodes: q.nodes.len(),
        path_end: x1,
    })
}

/// Difference operator `B = Γ₁ − Γ₂` with its symmetric and skew parts.
#[derive(Clone, Debug, Serialize)]
pub struct DifferenceTensor {
    pub b: Array3<f64>,
    pub s: Array3<f64>,
    pub a: Array3<f64>,
}

pub fn difference_tensor<C1, C2>(f1: &C1, f2: &C2, p: &SlitPoint) -> Result<DifferenceTensor>
where
    C1: ConnectionField + ?Sized,
    C2: ConnectionField + ?Sized,
{
    if f1.dim() != f2.dim() || p.dim() != f1.dim() {
        return Err(FinslerError::DimensionMismatch {
            expected: f1.dim(),
            got: if f2.dim() != f1.dim() { f2.dim() } else { p.dim() },
        });
    }
    let b = f1.coefficients(&p.x, &p.y)? - f2.coefficients(&p.x, &p.y)?;
    let n = p.dim();
    let s = Array3::from_shape_fn((n, n, n), |(i, j, k)| 0.5 * (b[[i, j, k]] + b[[i, k, j]]));
    let a = Array3::from_shape_fn((n, n, n), |(i, j, k)| 0.5 * (b[[i, j, k]] - b[[i, k, j]]));
    Ok(DifferenceTensor { b, s, a })
}

fn max_abs(a: &Array3<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub max_separation: f64,
    pub max_symmetric: f64,
    pub max_skew: f64,
    /// Separation and `max|S|` fall on the same side of `threshold`.
    pub consistent: bool,
    pub threshold: f64,
}

/// Initial data `(x0, v0)` with `F(x0, v0) = speed`.
pub fn initial_conditions(m: &FinslerModel, trials: usize, speed: f64, seed: u64) -> Vec<SlitPoint> {
    m.sample_points(trials, seed)
        .into_iter()
        .map(|p| {
            let f = m.f(&p.x, &p.y);
            p.scaled(speed / f)
        })
        .collect()
}

/// Compares the geodesics of two fields from common initial data.
pub fn geodesic_equivalence_probe<C1, C2>(
    f1: &C1,
    f2: &C2,
    starts: &[SlitPoint],
    t_end: f64,
    tol: f64,
    threshold: f64,
) -> Result<EquivalenceReport>
where
    C1: ConnectionField + ?Sized,
    C2: ConnectionField + ?Sized,
{
    if starts.is_empty() {
        return Err(FinslerError::InvalidParams("need at least one trial".into()));
    }
    let per: Vec<(f64, f64, f64)> = starts
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64)> {
            let g1 = integrate_geodesic(f1, &p.x, &p.y, t_end, tol)?;
            let g2 = integrate_geodesic(f2, &p.x, &p.y, t_end, tol)?;
            let mut sep = 0.0f64;
            for (a, b) in g1.samples.iter().zip(&g2.samples) {
                let d = a.1.iter().zip(&b.1).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
                sep = sep.max(d);
            }
            let (mut sym, mut skew) = (0.0f64, 0.0f64);
            // S along the first trajectory at a few samples
            let stride = (g1.samples.len() / 4).max(1);
            for (_, x, v) in g1.samples.iter().step_by(stride) {
                let d = difference_tensor(f1, f2, &SlitPoint::new(x.clone(), v.clone())?)?;
                sym = sym.max(max_abs(&d.s));
                skew = skew.max(max_abs(&d.a));
            }
            Ok((sep, sym, skew))
        })
        .collect::<Result<_>>()?;
    let max_separation = per.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_symmetric = per.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_skew = per.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        trials: starts.len(),
        max_separation,
        max_symmetric,
        max_skew,
        consistent: (max_separation < threshold) == (max_symmetric < threshold),
        threshold,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReversibilityReport {
    pub trials: usize,
    pub max_return_gap: f64,
    pub max_norm_defect: f64,
}

/// Return gap of reversed Chern geodesics and `max |F(x,y) − F(x,−y)|/F`.
pub fn reversibility_probe<C: ConnectionField + ?Sized>(
    m: &FinslerModel,
    chern: &C,
    starts: &[SlitPoint],
    tol: f64,
) -> Result<ReversibilityReport> {
    let per: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let fwd = integrate_geodesic(chern, &p.x, &p.y, 1.0, tol)?;
            let (x1, v1) = fwd.end();
            let back: Vec<f64> = v1.iter().map(|v| -v).collect();
            let ret = integrate_geodesic(chern, x1, &back, 1.0, tol)?;
            let (x2, _) = ret.end();
            let gap = x2.iter().zip(&p.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let neg: Vec<f64> = p.y.iter().map(|v| -v).collect();
            let f = m.f(&p.x, &p.y);
            Ok((gap, (f - m.f(&p.x, &neg)).abs() / f))
        })
        .collect::<Result<_>>()?;
    Ok(ReversibilityReport {
        trials: starts.len(),
        max_return_gap: per.iter().map(|r| r.0).fold(0.0, f64::max),
        max_norm_defect: per.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// Writes `t, x…, u…, W…, F` rows.
pub fn write_transport_csv<W: Write>(out: &mut W, states: &[TransportState]) -> std::io::Result<()> {
    let Some(first) = states.first() else {
        return Ok(());
    };
    let n = first.x.len();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    if first.u.is_some() {
        header.extend((0..n).map(|i| format!("u{i}")));
    }
    header.extend((0..n).map(|i| format!("W{i}")));
    header.push("F".into());
    writeln!(out, "{}", header.join(","))?;
    for s in states {
        let mut row = vec![format!("{:.17e}", s.t)];
        row.extend(s.x.iter().map(|v| format!("{v:.17e}")));
        if let Some(u) = &s.u {
            row.extend(u.iter().map(|v| format!("{v:.17e}")));
        }
        row.extend(s.w.iter().map(|v| format!("{v:.17e}")));
        row.push(format!("{:.17e}", s.f));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes `t, x…, v…, F` rows for a geodesic.
pub fn write_geodesic_csv<W: Write>(
    out: &mut W,
    m: &FinslerModel,
    sol: &GeodesicSolution,
) -> std::io::Result<()> {
    let n = m.dim();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..n).map(|i| format!("v{i}")));
    header.push("F".into());
    writeln!(out, "{}", header.join(","))?;
    for (t, x, v) in &sol.samples {
        let mut row = vec![format!("{t:.17e}")];
        row.extend(x.iter().chain(v).map(|c| format!("{c:.17e}")));
        row.push(format!("{:.17e}", m.f(x, v)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
