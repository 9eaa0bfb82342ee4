//! Geodesic traces and incompleteness witnesses.
//!
//! Geodesics are integrated for the metric (torsion-free) connection with a
//! fixed-step fourth-order Runge-Kutta scheme. Along a trace a scalar series
//! can be tracked; near a singularity the series follows one of a few simple
//! laws, and fitting the transformed series with a free-slope line both
//! certifies the law and estimates the blow-up time.

use nalgebra::DVector;

use crate::chart::{GeometryError, MetricSpec};
use crate::connection::christoffels;
use crate::expr::{self, Expr};

/// Step size used when the caller does not override it.
pub const DEFAULT_STEP: f64 = 1e-3;

/// A trace halts with a blow-up verdict once the velocity reaches this size.
pub const VELOCITY_LIMIT: f64 = 1e8;

/// Relative slope deviation beyond which a fit refuses the requested model.
pub const MISMATCH_FRAC: f64 = 0.05;

const MAX_STEPS: usize = 20_000_000;

#[derive(Debug, thiserror::Error)]
pub enum GeodesicError {
    #[error("bad geodesic input: {0}")]
    BadInput(String),
    #[error("fitted slope {found:.6e} is incompatible with model slope {expected:.6e}")]
    ModelMismatch { expected: f64, found: f64 },
    #[error("series cannot be fitted: {0}")]
    InvalidSeries(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How a trace ended.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceStatus {
    /// The requested window was covered.
    Completed,
    /// The next sample fell outside the chart box; it is not recorded.
    LeftDomain,
    /// The velocity grew past [`VELOCITY_LIMIT`] or stopped being finite
    /// at the given time; the offending sample is not recorded.
    BlowUp { t_est: f64 },
}

/// Scalar series recorded along a trace.
pub enum TrackField {
    /// Inner product of the velocity with the chart's torsion generator.
    Xi,
    /// Inner product of the velocity with the chart's canonical parallel
    /// isotropic field, resolved from the chart name and coordinates.
    P0,
    /// One velocity component.
    Velocity(usize),
    /// An expression over the chart coordinates, evaluated at each sample.
    Scalar(Expr),
}

/// A sampled geodesic: uniform times, positions, velocities, the tracked
/// scalar series, and the halt status.
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub status: TraceStatus,
}

/// The canonical parallel isotropic field of a chart, by name convention:
/// wave charts carry -e^{-u} d_v, the Walker family carries d_v.
pub fn resolve_p0(spec: &MetricSpec) -> Result<Vec<Expr>, GeodesicError> {
    let v_ix = spec
        .coords
        .iter()
        .position(|c| c == "v")
        .ok_or_else(|| GeodesicError::BadInput("chart has no coordinate named 'v'".into()))?;
    let mut p0 = vec![Expr::constant(0.0); spec.dim];
    if spec.name.starts_with("plane_wave") {
        let u_ix = spec
            .coords
            .iter()
            .position(|c| c == "u")
            .ok_or_else(|| GeodesicError::BadInput("chart has no coordinate named 'u'".into()))?;
        p0[v_ix] = Expr::coord(u_ix).neg().exp().neg();
    } else {
        p0[v_ix] = Expr::constant(1.0);
    }
    Ok(p0)
}

struct Tracker {
    field_needs_metric: bool,
    exprs: Option<Vec<Expr>>,
    velocity_slot: Option<usize>,
    scalar: Option<Expr>,
}

fn prepare_tracker(spec: &MetricSpec, track: &TrackField) -> Result<Tracker, GeodesicError> {
    match track {
        TrackField::Xi => {
            let xi = spec
                .xi
                .as_ref()
                .ok_or_else(|| GeodesicError::BadInput("chart has no torsion generator".into()))?;
            Ok(Tracker {
                field_needs_metric: true,
                exprs: Some(xi.clone()),
                velocity_slot: None,
                scalar: None,
            })
        }
        TrackField::P0 => Ok(Tracker {
            field_needs_metric: true,
            exprs: Some(resolve_p0(spec)?),
            velocity_slot: None,
            scalar: None,
        }),
        TrackField::Velocity(k) => {
            if *k >= spec.dim {
                return Err(GeodesicError::BadInput(format!(
                    "velocity slot {k} out of range for dimension {}",
                    spec.dim
                )));
            }
            Ok(Tracker {
                field_needs_metric: false,
                exprs: None,
                velocity_slot: Some(*k),
                scalar: None,
            })
        }
        TrackField::Scalar(e) => Ok(Tracker {
            field_needs_metric: false,
            exprs: None,
            velocity_slot: None,
            scalar: Some(e.clone()),
        }),
    }
}

impl Tracker {
    fn value(
        &self,
        spec: &MetricSpec,
        x: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<f64, GeodesicError> {
        if let Some(k) = self.velocity_slot {
            return Ok(v[k]);
        }
        if let Some(e) = &self.scalar {
            return Ok(expr::eval_value(e, x.as_slice(), &spec.param_values)
                .map_err(GeometryError::from)?);
        }
        let exprs = self.exprs.as_ref().expect("field tracker carries expressions");
        let mut w = DVector::zeros(spec.dim);
        for (k, e) in exprs.iter().enumerate() {
            w[k] = expr::eval_value(e, x.as_slice(), &spec.param_values)
                .map_err(GeometryError::from)?;
        }
        debug_assert!(self.field_needs_metric);
        let mv = spec.metric_at(x.as_slice())?;
        Ok(mv.inner(v, &w))
    }
}

/// Geodesic acceleration a^k = -Gamma^k_ij v^i v^j of the metric connection.
fn acceleration(
    spec: &MetricSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, GeodesicError> {
    let mv = spec.metric_at(x.as_slice())?;
    let (gamma, _) = christoffels(&mv);
    let n = spec.dim;
    let mut a = DVector::zeros(n);
    for k in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s -= gamma.get(i, j, k) * v[i] * v[j];
            }
        }
        a[k] = s;
    }
    Ok(a)
}

/// Integrates the geodesic equation from `(x0, v0)` over `[0, t_max]`
/// (backward when `t_max < 0`) with fixed step size `step`, recording the
/// tracked series at every kept sample. The window is quantized to whole
/// steps. The trace stops early when a sample leaves the chart box or the
/// velocity blows up; offending samples are not recorded.
pub fn integrate(
    spec: &MetricSpec,
    x0: &[f64],
    v0: &[f64],
    t_max: f64,
    step: f64,
    track: &TrackField,
) -> Result<GeodesicTrace, GeodesicError> {
    if x0.len() != spec.dim || v0.len() != spec.dim {
        return Err(GeodesicError::BadInput(format!(
            "initial data must have {} components",
            spec.dim
        )));
    }
    if x0.iter().chain(v0).any(|c| !c.is_finite()) {
        return Err(GeodesicError::BadInput("initial data must be finite".into()));
    }
    if !spec.contains(x0) {
        return Err(GeodesicError::BadInput("initial point lies outside the chart box".into()));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(GeodesicError::BadInput("step must be positive and finite".into()));
    }
    if !t_max.is_finite() || t_max == 0.0 {
        return Err(GeodesicError::BadInput("t_max must be finite and nonzero".into()));
    }
    let n_steps = (t_max.abs() / step).round() as usize;
    if n_steps == 0 {
        return Err(GeodesicError::BadInput("window is shorter than one step".into()));
    }
    if n_steps > MAX_STEPS {
        return Err(GeodesicError::BadInput(format!(
            "window needs {n_steps} steps, limit is {MAX_STEPS}"
        )));
    }
    let h = step.copysign(t_max);
    let tracker = prepare_tracker(spec, track)?;

    let mut x = DVector::from_column_slice(x0);
    let mut v = DVector::from_column_slice(v0);
    let mut trace = GeodesicTrace {
        times: Vec::with_capacity(n_steps + 1),
        points: Vec::with_capacity(n_steps + 1),
        velocities: Vec::with_capacity(n_steps + 1),
        alpha: Vec::with_capacity(n_steps + 1),
        status: TraceStatus::Completed,
    };
    let record = |t: f64,
                  x: &DVector<f64>,
                  v: &DVector<f64>,
                  trace: &mut GeodesicTrace|
     -> Result<(), GeodesicError> {
        trace.times.push(t);
        trace.points.push(x.as_slice().to_vec());
        trace.velocities.push(v.as_slice().to_vec());
        trace.alpha.push(tracker.value(spec, x, v)?);
        Ok(())
    };
    record(0.0, &x, &v, &mut trace)?;

    for i in 1..=n_steps {
        let t = i as f64 * h;
        let step_result = (|| -> Result<(DVector<f64>, DVector<f64>), GeodesicError> {
            let a1 = acceleration(spec, &x, &v)?;
            let x2 = &x + &v * (h / 2.0);
            let v2 = &v + &a1 * (h / 2.0);
            let a2 = acceleration(spec, &x2, &v2)?;
            let x3 = &x + &v2 * (h / 2.0);
            let v3 = &v + &a2 * (h / 2.0);
            let a3 = acceleration(spec, &x3, &v3)?;
            let x4 = &x + &v3 * h;
            let v4 = &v + &a3 * h;
            let a4 = acceleration(spec, &x4, &v4)?;
            let xn = &x + (&v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
            let vn = &v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
            Ok((xn, vn))
        })();
        let (xn, vn) = match step_result {
            Ok(pair) => pair,
            // an evaluation failure inside a stage means the stage points
            // already left the region where the chart makes sense
            Err(GeodesicError::Geometry(_)) => {
                trace.status = TraceStatus::BlowUp { t_est: t };
                return Ok(trace);
            }
            Err(e) => return Err(e),
        };
        let speed = vn.amax();
        if !speed.is_finite() || speed > VELOCITY_LIMIT || xn.iter().any(|c| !c.is_finite()) {
            trace.status = TraceStatus::BlowUp { t_est: t };
            return Ok(trace);
        }
        if !spec.contains(xn.as_slice()) {
            trace.status = TraceStatus::LeftDomain;
            return Ok(trace);
        }
        x = xn;
        v = vn;
        record(t, &x, &v, &mut trace)?;
    }
    Ok(trace)
}

/// Kinetic scalar g(v, v) at every sample; conserved along exact geodesics.
pub fn energy(spec: &MetricSpec, trace: &GeodesicTrace) -> Result<Vec<f64>, GeodesicError> {
    let mut out = Vec::with_capacity(trace.times.len());
    for (p, vel) in trace.points.iter().zip(&trace.velocities) {
        let mv = spec.metric_at(p)?;
        let v = DVector::from_column_slice(vel);
        out.push(mv.inner(&v, &v));
    }
    Ok(out)
}

fn uniform_spacing(times: &[f64]) -> Result<f64, GeodesicError> {
    if times.len() < 5 {
        return Err(GeodesicError::InvalidSeries(format!(
            "need at least 5 samples, got {}",
            times.len()
        )));
    }
    let h = times[1] - times[0];
    if h == 0.0 || !h.is_finite() {
        return Err(GeodesicError::InvalidSeries("times are not strictly ordered".into()));
    }
    for i in 1..times.len() {
        if (times[i] - times[i - 1] - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(GeodesicError::InvalidSeries("times are not uniformly spaced".into()));
        }
    }
    Ok(h)
}

/// Largest defect of the first-order law  da/dt + a^2 = rhs  over the series.
/// The derivative uses a five-point fourth-order stencil in the interior and
/// three-point second-order one-sided stencils at the two ends.
pub fn riccati_residual(times: &[f64], alpha: &[f64], rhs: f64) -> Result<f64, GeodesicError> {
    if times.len() != alpha.len() {
        return Err(GeodesicError::InvalidSeries("series length mismatch".into()));
    }
    let h = uniform_spacing(times)?;
    let n = alpha.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let da = if i >= 2 && i + 2 < n {
            (alpha[i - 2] - 8.0 * alpha[i - 1] + 8.0 * alpha[i + 1] - alpha[i + 2]) / (12.0 * h)
        } else if i + 2 < n {
            (-3.0 * alpha[i] + 4.0 * alpha[i + 1] - alpha[i + 2]) / (2.0 * h)
        } else {
            (3.0 * alpha[i] - 4.0 * alpha[i - 1] + alpha[i - 2]) / (2.0 * h)
        };
        worst = worst.max((da + alpha[i] * alpha[i] - rhs).abs());
    }
    Ok(worst)
}

/// Blow-up law for a tracked series `a(t)`. Each model names a transform
/// `z(a)` that is an affine function of time with a known slope when the law
/// holds; the slope parameters come from the initial data.
pub enum BlowupModel {
    /// a = 1/(t + c): transform z = 1/a, slope 1.
    Reciprocal,
    /// e^a is affine with prescribed slope: transform z = e^a.
    ExpLinear { slope: f64 },
    /// da/dt = -(1 + a^2): transform z = arctan(a), slope -1.
    Arctan,
    /// da/dt = s^2 - a^2 with |a| > s: transform z = ln((a+s)/(a-s)),
    /// slope 2s.
    LogRatio { scale: f64 },
}

impl BlowupModel {
    fn transform(&self, a: f64) -> f64 {
        match self {
            BlowupModel::Reciprocal => 1.0 / a,
            BlowupModel::ExpLinear { .. } => a.exp(),
            BlowupModel::Arctan => a.atan(),
            BlowupModel::LogRatio { scale } => ((a + scale) / (a - scale)).ln(),
        }
    }

    fn model_slope(&self) -> f64 {
        match self {
            BlowupModel::Reciprocal => 1.0,
            BlowupModel::ExpLinear { slope } => *slope,
            BlowupModel::Arctan => -1.0,
            BlowupModel::LogRatio { scale } => 2.0 * scale,
        }
    }
}

/// A fitted blow-up law: the affine coefficients of the transformed series,
/// the estimated singular time (signed), and the largest fit defect.
#[derive(Debug, Clone)]
pub struct BlowupFit {
    pub slope: f64,
    pub intercept: f64,
    pub t_singular: f64,
    pub residual: f64,
}

/// Fits the transformed series with a free-slope line by least squares.
/// Refuses with [`GeodesicError::ModelMismatch`] when the fitted slope is
/// farther than [`MISMATCH_FRAC`] (relative) from the model slope.
pub fn fit_blowup(
    times: &[f64],
    series: &[f64],
    model: &BlowupModel,
) -> Result<BlowupFit, GeodesicError> {
    if times.len() != series.len() {
        return Err(GeodesicError::InvalidSeries("series length mismatch".into()));
    }
    if times.len() < 5 {
        return Err(GeodesicError::InvalidSeries(format!(
            "need at least 5 samples, got {}",
            times.len()
        )));
    }
    let z: Vec<f64> = series.iter().map(|&a| model.transform(a)).collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(GeodesicError::InvalidSeries(
            "transformed series is not finite everywhere".into(),
        ));
    }
    let n = times.len() as f64;
    let t_mean = times.iter().sum::<f64>() / n;
    let z_mean = z.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, zv) in times.iter().zip(&z) {
        num += (t - t_mean) * (zv - z_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Err(GeodesicError::InvalidSeries("times are all equal".into()));
    }
    let slope = num / den;
    let intercept = z_mean - slope * t_mean;

    let expected = model.model_slope();
    if (slope - expected).abs() > MISMATCH_FRAC * expected.abs().max(1.0) {
        return Err(GeodesicError::ModelMismatch { expected, found: slope });
    }
    if slope == 0.0 {
        return Err(GeodesicError::InvalidSeries("fitted slope is zero".into()));
    }

    let t_singular = match model {
        // the transform runs to zero at the singular time
        BlowupModel::Reciprocal | BlowupModel::ExpLinear { .. } | BlowupModel::LogRatio { .. } => {
            -intercept / slope
        }
        // arctan runs into the nearest branch end +-pi/2 along the slope
        BlowupModel::Arctan => {
            (std::f64::consts::FRAC_PI_2.copysign(slope) - intercept) / slope
        }
    };
    let mut residual: f64 = 0.0;
    for (t, zv) in times.iter().zip(&z) {
        residual = residual.max((zv - (slope * t + intercept)).abs());
    }
    Ok(BlowupFit { slope, intercept, t_singular, residual })
}
