//! Batch front end: loads a model file, runs one computation and writes a
//! JSON report or a CSV trajectory.

use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{ArrayD, Axis};
use serde_json::{json, Value};

use finsler_core::classify::{classify, ClassifyFailure, ClassifyOptions, Thresholds};
use finsler_core::connection::{
    berwald_coefficients, chern_jet, formal_christoffel, nonlinear_connection, BerwaldField, ChernField,
    ConnectionField, FlatField, LeviCivitaField,
};
use finsler_core::curvature::{landsberg_from, p_from_jet, r_from_jet};
use finsler_core::indicatrix::{
    averaged_connection, averaged_connection_curvature, averaged_curvature, averaged_metric,
    build_indicatrix_quadrature, indicatrix_volume, Source, DEFAULT_ORDER,
};
use finsler_core::model::{cartan_tensor, check_convexity, check_homogeneity, ModelSpec};
use finsler_core::sampling::SampleSpec;
use finsler_core::transport::{
    difference_tensor, geodesic_equivalence_probe, indicatrix_invariance_probe, initial_conditions,
    integrate_geodesic, parallel_transport, write_geodesic_csv, write_transport_csv, AveragedField, Path,
};
use finsler_core::{FinslerError, FinslerModel, SlitPoint};

/// Largest accepted homogeneity residual when loading a model.
pub const HOMOGENEITY_GATE: f64 = 1e-6;
/// Points used by the load-time homogeneity and convexity checks.
const LOAD_CHECK_SAMPLES: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: FinslerError,
    },
    #[error("{path}: homogeneity gate failed: {residual} residual {value:e} exceeds {HOMOGENEITY_GATE:e}")]
    Homogeneity {
        path: String,
        residual: &'static str,
        value: f64,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] FinslerError),
    #[error(transparent)]
    Classify(#[from] Box<ClassifyFailure>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Numerical Finsler geometry: reports, tensors and trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model definition (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Gauss–Legendre order of indicatrix quadrature.
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER)]
    pub quad_order: usize,
    /// Integrator tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Directions per base point (classify) or trials (compare).
    #[arg(long, global = true, default_value_t = 20)]
    pub samples: usize,
    /// Number of sampled base points.
    #[arg(long, global = true, default_value_t = 50)]
    pub points: usize,
    /// Final curve parameter for geodesics.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldKind {
    Chern,
    Berwald,
    Averaged,
    AveragedBerwald,
    LeviCivita,
    Flat,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Residuals and Riemannian/Berwald/Landsberg/Minkowski verdicts.
    Classify,
    /// Pointwise tensors at `x0,x1,..:y0,y1,..` points (sampled when none given).
    Tensors { at: Vec<String> },
    /// Indicatrix averages at base points `x0,x1,..` (sampled when none given).
    Average {
        at: Vec<String>,
        #[arg(long, value_enum, default_value_t = AverageSource::Chern)]
        source: AverageSource,
    },
    /// Geodesic from `x0` with velocity `v0` as CSV.
    Geodesic {
        x0: Option<String>,
        v0: Option<String>,
        #[arg(long, value_enum, default_value_t = FieldKind::Chern)]
        connection: FieldKind,
    },
    /// Parallel transport of `--w0` along the polyline through the corners, as CSV.
    Transport {
        #[arg(required = true, num_args = 2..)]
        corners: Vec<String>,
        #[arg(long)]
        w0: String,
        /// Reference direction for y-dependent connections (defaults to the first leg).
        #[arg(long)]
        u0: Option<String>,
        #[arg(long, value_enum, default_value_t = FieldKind::Chern)]
        connection: FieldKind,
        /// Return to the first corner.
        #[arg(long)]
        closed: bool,
    },
    /// Indicatrix deviation after transport around the closed polygon through the corners.
    ProbeIndicatrix {
        #[arg(required = true, num_args = 2..)]
        corners: Vec<String>,
        #[arg(long, value_enum, default_value_t = FieldKind::Averaged)]
        connection: FieldKind,
        /// Also probe the interpolated family toward the averaged metric.
        #[arg(long)]
        family: bool,
    },
    /// Difference tensor and geodesic-equivalence report for two fields.
    Compare {
        #[arg(long, value_enum, default_value_t = FieldKind::Chern)]
        first: FieldKind,
        #[arg(long, value_enum, default_value_t = FieldKind::Averaged)]
        second: FieldKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AverageSource {
    Chern,
    Berwald,
}

/// Parses a model definition, reporting JSON errors with line and column.
pub fn parse_model_str(text: &str, origin: &str) -> Result<FinslerModel, CliError> {
    let spec: ModelSpec = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let model = spec.build().map_err(|source| CliError::Model {
        path: origin.to_string(),
        source,
    })?;
    gate(&model, origin)?;
    Ok(model)
}

/// Reads, builds and validates a model file.
pub fn load_model(path: &FsPath) -> Result<FinslerModel, CliError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: origin.clone(),
        source,
    })?;
    parse_model_str(&text, &origin)
}

fn gate(m: &FinslerModel, origin: &str) -> Result<(), CliError> {
    let model_err = |source| CliError::Model {
        path: origin.to_string(),
        source,
    };
    let h = check_homogeneity(m, LOAD_CHECK_SAMPLES).map_err(model_err)?;
    for (residual, value) in [("scaling", h.scaling_residual), ("euler", h.euler_residual)] {
        if !(value < HOMOGENEITY_GATE) {
            return Err(CliError::Homogeneity {
                path: origin.to_string(),
                residual,
                value,
            });
        }
    }
    check_convexity(m, LOAD_CHECK_SAMPLES).map_err(model_err)?;
    Ok(())
}

fn validate(c: &Common) -> Result<(), CliError> {
    let bad = |what: &str| Err(CliError::Usage(format!("{what} must be positive")));
    if c.quad_order < 2 {
        return Err(CliError::Usage("--quad-order must be at least 2".into()));
    }
    if !(c.tol > 0.0) {
        return bad("--tol");
    }
    if c.samples == 0 {
        return bad("--samples");
    }
    if c.points == 0 {
        return bad("--points");
    }
    if !(c.t_end > 0.0 && c.t_end.is_finite()) {
        return bad("--t-end");
    }
    Ok(())
}

fn parse_vector(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("{what} `{s}`: {e}")))?;
    if v.len() != n {
        return Err(CliError::Usage(format!("{what} `{s}` has {} components, expected {n}", v.len())));
    }
    Ok(v)
}

fn parse_point(s: &str, n: usize) -> Result<SlitPoint, CliError> {
    let (x, y) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("point `{s}` must look like x0,x1,..:y0,y1,..")))?;
    Ok(SlitPoint::new(parse_vector(x, n, "base point")?, parse_vector(y, n, "direction")?)?)
}

/// Rank-k array as nested JSON arrays.
pub fn nested(a: &ArrayD<f64>) -> Value {
    if a.ndim() == 0 {
        return json!(a.iter().next().copied().unwrap_or(0.0));
    }
    if a.ndim() == 1 {
        return Value::Array(a.iter().map(|v| json!(v)).collect());
    }
    Value::Array(a.axis_iter(Axis(0)).map(|s| nested(&s.to_owned())).collect())
}

fn nd<D: ndarray::Dimension>(a: ndarray::Array<f64, D>) -> Value {
    nested(&a.into_dyn())
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => io::stdout().write_all(bytes).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn field<'a>(kind: FieldKind, m: &'a FinslerModel, order: usize) -> Result<Box<dyn ConnectionField + 'a>, CliError> {
    Ok(match kind {
        FieldKind::Chern => Box::new(ChernField { model: m }),
        FieldKind::Berwald => Box::new(BerwaldField { model: m }),
        FieldKind::Averaged => Box::new(AveragedField {
            model: m,
            source: Source::Chern,
            order,
        }),
        FieldKind::AveragedBerwald => Box::new(AveragedField {
            model: m,
            source: Source::Berwald,
            order,
        }),
        FieldKind::LeviCivita => match &m.randers {
            Some(data) => Box::new(LeviCivitaField::new(data.a.clone())),
            None => {
                return Err(CliError::Usage(format!(
                    "model `{}` carries no Riemannian part for the Levi-Civita field",
                    m.name
                )))
            }
        },
        FieldKind::Flat => Box::new(FlatField { dim: m.dim() }),
    })
}

/// Runs one command and writes its artifact.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    validate(c)?;
    let path = c
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("--model is required".into()))?;
    let model = load_model(path)?;
    let bytes = render(&cli.command, c, model)?;
    emit(&c.out, &bytes)
}

/// Computes the artifact of `cmd` for an already loaded model.
pub fn render(cmd: &Command, c: &Common, model: FinslerModel) -> Result<Vec<u8>, CliError> {
    let n = model.dim();
    match cmd {
        Command::Classify => {
            let opts = ClassifyOptions {
                samples: SampleSpec {
                    points: c.points,
                    directions: c.samples,
                    seed: c.seed,
                },
                thresholds: Thresholds::default(),
                quad_order: c.quad_order,
            };
            let report = classify(&model, &opts).map_err(Box::new)?;
            Ok(to_json(&report).into_bytes())
        }
        Command::Tensors { at } => {
            let pts = if at.is_empty() {
                model.sample_points(c.points, c.seed)
            } else {
                at.iter().map(|s| parse_point(s, n)).collect::<Result<_, _>>()?
            };
            let mut rows = Vec::with_capacity(pts.len());
            for p in &pts {
                let j = chern_jet(&model, p, true)?;
                let pc = p_from_jet(&j);
                rows.push(json!({
                    "x": p.x,
                    "y": p.y,
                    "F": j.f,
                    "g": nd(j.g.clone()),
                    "A": nd(cartan_tensor(&model, p)?.a),
                    "gamma": nd(formal_christoffel(&model, p)?),
                    "N": nd(nonlinear_connection(&model, p)?.n),
                    "Gamma": nd(j.gamma.clone()),
                    "G": nd(berwald_coefficients(&model, p)?),
                    "R": nd(r_from_jet(&j)),
                    "P": nd(pc.clone()),
                    "landsberg": nd(landsberg_from(&j.g, &pc, &p.y, j.f)),
                }));
            }
            Ok(to_json(&json!({ "model": model.name, "points": rows })).into_bytes())
        }
        Command::Average { at, source } => {
            let source = match source {
                AverageSource::Chern => Source::Chern,
                AverageSource::Berwald => Source::Berwald,
            };
            let bases = if at.is_empty() {
                model.sample_base_points(c.points, c.seed)
            } else {
                at.iter()
                    .map(|s| parse_vector(s, n, "base point"))
                    .collect::<Result<_, _>>()?
            };
            let mut rows = Vec::with_capacity(bases.len());
            let mut cone = false;
            for x in &bases {
                let q = build_indicatrix_quadrature(&model, x, c.quad_order)?;
                cone = q.cone_restricted;
                let gamma = averaged_connection(&model, source, x, c.quad_order)?.coefficients;
                let r_avg = averaged_curvature(&model, x, c.quad_order)?;
                let r_of = averaged_connection_curvature(&model, source, x, c.quad_order)?;
                let gap = r_avg.iter().zip(r_of.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                rows.push(json!({
                    "x": x,
                    "volume": indicatrix_volume(&q),
                    "Gamma_avg": nd(gamma),
                    "g_avg": nd(averaged_metric(&model, x, c.quad_order)?),
                    "R_avg": nd(r_avg),
                    "R_of_Gamma_avg": nd(r_of),
                    "curvature_gap": gap,
                }));
            }
            Ok(to_json(&json!({
                "model": model.name,
                "source": format!("{source:?}").to_lowercase(),
                "quadrature_order": c.quad_order,
                "cone_restricted": cone,
                "points": rows,
            }))
            .into_bytes())
        }
        Command::Geodesic { x0, v0, connection } => {
            let start = match (x0, v0) {
                (Some(x), Some(v)) => SlitPoint::new(parse_vector(x, n, "x0")?, parse_vector(v, n, "v0")?)?,
                (None, None) => initial_conditions(&model, 1, 1.0, c.seed)
                    .pop()
                    .ok_or_else(|| CliError::Usage("could not sample initial data".into()))?,
                _ => return Err(CliError::Usage("give both x0 and v0 or neither".into())),
            };
            let f = field(*connection, &model, c.quad_order)?;
            let sol = integrate_geodesic(&*f, &start.x, &start.y, c.t_end, c.tol)?;
            let mut buf = Vec::new();
            write_geodesic_csv(&mut buf, &model, &sol).expect("in-memory write");
            Ok(buf)
        }
        Command::Transport {
            corners,
            w0,
            u0,
            connection,
            closed,
        } => {
            let path = polyline(corners, n, *closed)?;
            let w0 = parse_vector(w0, n, "w0")?;
            let f = field(*connection, &model, c.quad_order)?;
            let u0 = match u0 {
                Some(u) => Some(parse_vector(u, n, "u0")?),
                None if !f.y_independent() => Some(path.eval(0.0).1),
                None => None,
            };
            let states = parallel_transport(&*f, &model, &path, &w0, u0.as_deref(), c.tol)?;
            let mut buf = Vec::new();
            write_transport_csv(&mut buf, &states).expect("in-memory write");
            Ok(buf)
        }
        Command::ProbeIndicatrix {
            corners,
            connection,
            family,
        } => {
            let path = polyline(corners, n, true)?;
            let f = field(*connection, &model, c.quad_order)?;
            let report = indicatrix_invariance_probe(&model, &*f, &path, c.quad_order, c.tol)?;
            let mut out = json!({
                "model": model.name,
                "connection": f.name(),
                "quadrature_order": c.quad_order,
                "loop": corners,
                "report": report,
            });
            if *family {
                let shared = Arc::new(model.clone());
                let diag = finsler_core::classify::pure_landsberg_diagnostic(
                    &shared,
                    std::slice::from_ref(&path),
                    c.quad_order,
                    c.tol,
                )?;
                out["family"] = serde_json::to_value(&diag).expect("report serializes");
            }
            Ok(to_json(&out).into_bytes())
        }
        Command::Compare { first, second } => {
            let f1 = field(*first, &model, c.quad_order)?;
            let f2 = field(*second, &model, c.quad_order)?;
            let pts = model.sample_points(c.points, c.seed);
            let mut rows = Vec::with_capacity(pts.len());
            for p in &pts {
                let d = difference_tensor(&*f1, &*f2, p)?;
                rows.push(json!({ "x": p.x, "y": p.y, "S": nd(d.s), "A": nd(d.a) }));
            }
            let starts = initial_conditions(&model, c.samples, 0.35, c.seed);
            let eq = geodesic_equivalence_probe(&*f1, &*f2, &starts, c.t_end, c.tol, 1e-6)?;
            Ok(to_json(&json!({
                "model": model.name,
                "first": f1.name(),
                "second": f2.name(),
                "difference": rows,
                "geodesic_equivalence": eq,
            }))
            .into_bytes())
        }
    }
}

fn polyline(corners: &[String], n: usize, closed: bool) -> Result<Path, CliError> {
    let pts = corners
        .iter()
        .map(|s| parse_vector(s, n, "corner"))
        .collect::<Result<Vec<_>, _>>()?;
    if pts.len() < 2 {
        return Err(CliError::Usage("a path needs at least two corners".into()));
    }
    Ok(if closed {
        Path::polygon(&pts)
    } else {
        Path::new(
            pts.windows(2)
                .map(|w| finsler_core::transport::Segment::Line {
                    from: w[0].clone(),
                    to: w[1].clone(),
                })
                .collect(),
        )
    })
}
