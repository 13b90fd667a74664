//! Residual-based classification: Riemannian, Berwald, Landsberg, locally
//! Minkowski, and the pure-Landsberg diagnostic.

use std::sync::Arc;

use ndarray::Array3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{chern_jet, levi_civita, ChernField};
use crate::curvature::{landsberg_from, p_from_jet, r_from_jet};
use crate::error::{FinslerError, Result};
use crate::indicatrix::{averaged_connection, DEFAULT_ORDER, interpolated_family, AveragedMetricField, Source};
use crate::jet::SlitPoint;
use crate::model::{cartan_tensor, FinslerModel, MatrixField, MetricField, OneForm};
use crate::sampling::{to_box, Halton, SampleSpec};
use crate::scalar::seed;
use crate::transport::{invariance_with_matrix, transport_matrix, AveragedField, Path};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

/// Relative decision thresholds, multiplied by the report scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub yes_below: f64,
    pub no_above: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            yes_below: 1e-6,
            no_above: 1e-5,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.yes_below > 0.0 && self.no_above >= self.yes_below) {
            return Err(FinslerError::InvalidParams(format!(
                "thresholds must satisfy 0 < yes_below <= no_above, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn decide(&self, residual: f64, scale: f64) -> Verdict {
        if !residual.is_finite() {
            Verdict::Inconclusive
        } else if residual < self.yes_below * scale {
            Verdict::Yes
        } else if residual > self.no_above * scale {
            Verdict::No
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub cartan_norm: f64,
    pub hv_norm: f64,
    #[serde(rename = "dGamma_dy_norm")]
    pub dgamma_dy_norm: f64,
    pub hh_norm: f64,
    pub landsberg_norm: f64,
    pub berwald_avg_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub randers_parallel_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppliedThresholds {
    pub scale: f64,
    pub yes_below: f64,
    pub no_above: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdicts {
    pub riemannian: Verdict,
    pub berwald: Verdict,
    pub landsberg: Verdict,
    pub locally_minkowski: Verdict,
    pub pure_landsberg_candidate: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub model: String,
    pub dim: usize,
    pub sample_spec: SampleSpec,
    pub quadrature_order: usize,
    pub cone_restricted: bool,
    pub residuals: Residuals,
    pub thresholds: AppliedThresholds,
    pub verdicts: Verdicts,
    pub notes: Vec<String>,
}

/// A classification aborted by an evaluation failure.
#[derive(Debug, thiserror::Error)]
#[error("classification of `{model}` aborted: {error}")]
pub struct ClassifyFailure {
    pub model: String,
    #[source]
    pub error: FinslerError,
    /// Residuals accumulated over the points evaluated before the failure.
    pub partial: Residuals,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyOptions {
    pub samples: SampleSpec,
    pub thresholds: Thresholds,
    pub quad_order: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            samples: SampleSpec::default(),
            thresholds: Thresholds::default(),
            quad_order: DEFAULT_ORDER,
        }
    }
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn max_diff(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

/// Residuals at one base point over its sampled directions, plus `max|Γ|`.
#[derive(Default)]
struct PointResult {
    res: Residuals,
    gamma_max: f64,
}

fn merge(acc: &mut Residuals, r: &Residuals) {
    acc.cartan_norm = acc.cartan_norm.max(r.cartan_norm);
    acc.hv_norm = acc.hv_norm.max(r.hv_norm);
    acc.dgamma_dy_norm = acc.dgamma_dy_norm.max(r.dgamma_dy_norm);
    acc.hh_norm = acc.hh_norm.max(r.hh_norm);
    acc.landsberg_norm = acc.landsberg_norm.max(r.landsberg_norm);
    acc.berwald_avg_gap = acc.berwald_avg_gap.max(r.berwald_avg_gap);
}

fn evaluate_point(m: &FinslerModel, x: &[f64], dirs: &[Vec<f64>], order: usize) -> Result<PointResult> {
    let avg = averaged_connection(m, Source::Chern, x, order)?.coefficients;
    let mut out = PointResult::default();
    let mut first: Option<Array3<f64>> = None;
    for y in dirs {
        let p = SlitPoint::new(x.to_vec(), y.clone())?;
        let a = cartan_tensor(m, &p)?.a;
        let j = chern_jet(m, &p, true)?;
        let r = r_from_jet(&j);
        let pc = p_from_jet(&j);
        let ad = landsberg_from(&j.g, &pc, y, j.f);
        let res = &mut out.res;
        res.cartan_norm = res.cartan_norm.max(max_abs(a.iter()));
        res.hv_norm = res.hv_norm.max(max_abs(pc.iter()));
        res.hh_norm = res.hh_norm.max(max_abs(r.iter()));
        res.landsberg_norm = res.landsberg_norm.max(max_abs(ad.iter()));
        res.berwald_avg_gap = res.berwald_avg_gap.max(max_diff(&j.gamma, &avg));
        match &first {
            None => first = Some(j.gamma.clone()),
            Some(g0) => res.dgamma_dy_norm = res.dgamma_dy_norm.max(max_diff(&j.gamma, g0)),
        }
        out.gamma_max = out.gamma_max.max(max_abs(j.gamma.iter()));
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn classify(m: &FinslerModel, opts: &ClassifyOptions) -> std::result::Result<ClassificationReport, ClassifyFailure> {
    let fail = |error: FinslerError, partial: Residuals| ClassifyFailure {
        model: m.name.clone(),
        error,
        partial,
    };
    let spec = &opts.samples;
    if spec.points == 0 || spec.directions < 2 {
        return Err(fail(
            FinslerError::InvalidParams("need at least one point and two directions".into()),
            Residuals::default(),
        ));
    }
    opts.thresholds.validate().map_err(|e| fail(e, Residuals::default()))?;
    let bases = m.sample_base_points(spec.points, spec.seed);
    let per: Vec<Result<PointResult>> = bases
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let dirs = m.sample_directions(x, spec.directions, spec.seed.wrapping_add(k as u64 + 1));
            evaluate_point(m, x, &dirs, opts.quad_order)
        })
        .collect();
    let mut residuals = Residuals::default();
    let mut gamma_max = Vec::with_capacity(per.len());
    for r in per {
        match r {
            Ok(pr) => {
                merge(&mut residuals, &pr.res);
                gamma_max.push(pr.gamma_max);
            }
            Err(e) => return Err(fail(e, residuals)),
        }
    }
    let mut notes = Vec::new();
    if let Some(data) = &m.randers {
        match randers_berwald_criterion(&data.a, &data.b, &m.domain, spec, &opts.thresholds) {
            Ok(c) => residuals.randers_parallel_residual = Some(c.max_covariant_derivative),
            Err(e) => notes.push(format!("randers criterion unavailable: {e}")),
        }
    }
    let scale = median(gamma_max) + 1.0;
    let th = &opts.thresholds;
    let riemannian = th.decide(residuals.cartan_norm, scale);
    let hv = th.decide(residuals.hv_norm, scale);
    let dgy = th.decide(residuals.dgamma_dy_norm, scale);
    let mut berwald = if hv == dgy { hv } else { Verdict::Inconclusive };
    if hv != dgy {
        notes.push(format!(
            "hv-curvature test ({hv:?}) and y-variation of Γ ({dgy:?}) disagree"
        ));
    }
    let avg = th.decide(residuals.berwald_avg_gap, scale);
    if berwald != Verdict::Inconclusive && avg != Verdict::Inconclusive && avg != berwald {
        notes.push(format!("average-gap test gives {avg:?}, pointwise tests give {berwald:?}"));
    }
    let mut landsberg = th.decide(residuals.landsberg_norm, scale);
    let hh = th.decide(residuals.hh_norm, scale);
    let locally_minkowski = match (hh, hv) {
        (Verdict::Yes, Verdict::Yes) => Verdict::Yes,
        (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
        _ => Verdict::Inconclusive,
    };
    if riemannian == Verdict::Yes && berwald != Verdict::Yes {
        notes.push(format!("berwald set to yes by the Riemannian verdict (tests gave {berwald:?})"));
        berwald = Verdict::Yes;
    }
    if berwald == Verdict::Yes && landsberg != Verdict::Yes {
        notes.push(format!("landsberg set to yes by the Berwald verdict (test gave {landsberg:?})"));
        landsberg = Verdict::Yes;
    }
    let pure_landsberg_candidate = match (landsberg, berwald) {
        (Verdict::Yes, Verdict::No) => Verdict::Yes,
        (Verdict::No, _) | (_, Verdict::Yes) => Verdict::No,
        _ => Verdict::Inconclusive,
    };
    if m.is_y_local() {
        notes.push("averages and directions restricted to the model's cone of convexity".into());
    }
    if m.dim() == 2 {
        notes.push(
            "in dimension 2 a (y-global) Berwald structure is expected to be Riemannian or locally Minkowski"
                .into(),
        );
        if berwald == Verdict::Yes && riemannian == Verdict::No && locally_minkowski == Verdict::No {
            notes.push(
                "noteworthy: Berwald but neither Riemannian nor locally Minkowski on the sampled region"
                    .into(),
            );
        }
    }
    Ok(ClassificationReport {
        model: m.name.clone(),
        dim: m.dim(),
        sample_spec: spec.clone(),
        quadrature_order: opts.quad_order,
        cone_restricted: m.cone.is_some(),
        residuals,
        thresholds: AppliedThresholds {
            scale,
            yes_below: th.yes_below * scale,
            no_above: th.no_above * scale,
        },
        verdicts: Verdicts {
            riemannian,
            berwald,
            landsberg,
            locally_minkowski,
            pure_landsberg_candidate,
        },
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandersCriterion {
    pub sup_b_norm: f64,
    pub max_covariant_derivative: f64,
    pub berwald: bool,
}

/// `sup ‖b‖_a` and `max |∂_k b_j − b_s γ^s_jk|` over sampled points of
/// `domain`, with the Levi-Civita symbols of `a`.
pub fn randers_berwald_criterion(
    a: &MetricField,
    b: &OneForm,
    domain: &[(f64, f64)],
    spec: &SampleSpec,
    thresholds: &Thresholds,
) -> Result<RandersCriterion> {
    let n = a.dim();
    if b.entries.len() != n || domain.len() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: if b.entries.len() != n { b.entries.len() } else { domain.len() },
        });
    }
    let mut h = Halton::new(n, spec.seed);
    let mut sup = 0.0f64;
    let mut cov = 0.0f64;
    for _ in 0..spec.points.max(1) {
        let x = to_box(&h.next_point(), domain);
        let data = crate::model::RandersData {
            a: a.clone(),
            b: b.clone(),
        };
        sup = sup.max(crate::model::b_norm(&data, &x)?);
        let gamma = levi_civita::<f64>(a, &x)?;
        let bx = b.eval::<f64>(&x);
        for k in 0..n {
            let db = b.eval(&seed(&x, Some(k)));
            for j in 0..n {
                let mut r = db[j].eps;
                for s in 0..n {
                    r -= bx[s] * gamma[[s, j, k]];
                }
                cov = cov.max(r.abs());
            }
        }
    }
    Ok(RandersCriterion {
        sup_b_norm: sup,
        max_covariant_derivative: cov,
        berwald: sup < 1.0 && cov < thresholds.yes_below,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LandsbergProbeEntry {
    pub t: f64,
    pub loop_index: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PureLandsbergReport {
    pub entries: Vec<LandsbergProbeEntry>,
    pub max_deviation: f64,
    pub witness: Option<LandsbergProbeEntry>,
    pub interpretation: String,
}

/// Interpolation parameters of the indicatrix family.
pub const FAMILY_T: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Transports the indicatrices of `F_t = (1−t)F + t√⟨g⟩(y, y)` around each
/// loop with the averaged connection and reports the deviation of `F_t`.
pub fn pure_landsberg_diagnostic(
    m: &Arc<FinslerModel>,
    loops: &[Path],
    order: usize,
    tol: f64,
) -> Result<PureLandsbergReport> {
    if loops.is_empty() {
        return Err(FinslerError::InvalidParams("need at least one loop".into()));
    }
    let field = AveragedField {
        model: m,
        source: Source::Chern,
        order,
    };
    let h = MatrixField::Averaged(Arc::new(AveragedMetricField::new(Arc::clone(m), order)));
    let mut entries = Vec::new();
    for (li, path) in loops.iter().enumerate() {
        let mat = transport_matrix(&field, path, tol)?;
        for &t in &FAMILY_T {
            let mt = interpolated_family(m, h.clone(), t)?;
            let rep = invariance_with_matrix(&mt, &mat, path, order)?;
            entries.push(LandsbergProbeEntry {
                t,
                loop_index: li,
                deviation: rep.max_deviation,
            });
        }
    }
    let witness = entries
        .iter()
        .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
        .cloned();
    let max_deviation = witness.as_ref().map_or(0.0, |w| w.deviation);
    let interpretation = if max_deviation < 1e-5 {
        "invariant family ⇒ not a pure-Landsberg witness".to_string()
    } else if max_deviation > 1e-3 {
        "family not invariant under the averaged connection; consistent with pure-Landsberg candidacy only if the structure is Landsberg and not Berwald".to_string()
    } else {
        "inconclusive deviation".to_string()
    };
    Ok(PureLandsbergReport {
        entries,
        max_deviation,
        witness,
        interpretation,
    })
}

/// The Chern field of a model; convenience for report code.
pub fn chern_field(m: &FinslerModel) -> ChernField<'_> {
    ChernField { model: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{euclidean, round_sphere};

    fn small() -> ClassifyOptions {
        ClassifyOptions {
            samples: SampleSpec {
                points: 6,
                directions: 4,
                seed: 42,
            },
            ..Default::default()
        }
    }

    #[test]
    fn euclidean_is_locally_minkowski() {
        let r = classify(&euclidean(2).unwrap(), &small()).unwrap();
        assert_eq!(r.verdicts.riemannian, Verdict::Yes);
        assert_eq!(r.verdicts.berwald, Verdict::Yes);
        assert_eq!(r.verdicts.landsberg, Verdict::Yes);
        assert_eq!(r.verdicts.locally_minkowski, Verdict::Yes);
    }

    #[test]
    fn sphere_is_riemannian_not_flat() {
        let r = classify(&round_sphere(), &small()).unwrap();
        assert_eq!(r.verdicts.riemannian, Verdict::Yes);
        assert_eq!(r.verdicts.locally_minkowski, Verdict::No);
        assert!(r.residuals.hh_norm > 0.5);
    }

    #[test]
    fn threshold_band() {
        let t = Thresholds::default();
        assert_eq!(t.decide(1e-7, 1.0), Verdict::Yes);
        assert_eq!(t.decide(5e-6, 1.0), Verdict::Inconclusive);
        assert_eq!(t.decide(1e-4, 1.0), Verdict::No);
        assert_eq!(t.decide(f64::NAN, 1.0), Verdict::Inconclusive);
    }

    #[test]
    fn zero_one_form_is_berwald() {
        let a = MetricField::identity(2);
        let c = randers_berwald_criterion(
            &a,
            &OneForm::zero(2),
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &SampleSpec::default(),
            &Thresholds::default(),
        )
        .unwrap();
        assert_eq!((c.sup_b_norm, c.max_covariant_derivative, c.berwald), (0.0, 0.0, true));
    }
}
