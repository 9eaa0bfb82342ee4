//! Named residual checks and the report runner.
//!
//! Every check has a stable id, a one-line description, a verbatim formula
//! anchor, and a pinned tolerance. A check samples its own points from a
//! dedicated PRNG substream keyed by its id, so adding or removing checks
//! never changes what any other check sees. Reports list checks in id order
//! and are byte-reproducible for a fixed (spec, seed, points, version).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{GeometryError, MetricSpec};
use crate::connection::{self, at_point, curvature, fd_nabla_curvature, nabla_vector, Part, PointData};
use crate::expr::Expr;
use crate::sample::{sample_point, SplitMix64, CHECK_MARGIN};
use crate::torsion;

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("unknown check id '{0}'")]
    UnknownCheck(String),
    #[error("check '{check}' is not applicable here: {reason}")]
    Unsupported { check: String, reason: String },
    #[error("bad check request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn unsupported(check: &str, reason: impl Into<String>) -> CheckError {
    CheckError::Unsupported { check: check.into(), reason: reason.into() }
}

/// One evaluated check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check_id: String,
    pub description: String,
    pub paper_anchor: String,
    pub n_points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// A full check run over one chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub tool_version: String,
    pub spec_name: String,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub overall_pass: bool,
}

type CheckFn = fn(&MetricSpec, &mut SplitMix64, usize) -> Result<f64, CheckError>;

/// A registered check: id, human description, formula anchor, tolerance.
pub struct CheckDef {
    pub id: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    pub tolerance: f64,
    run: CheckFn,
}

// ---------------------------------------------------------------------------
// shared helpers

fn for_each_point(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
    mut f: impl FnMut(&PointData) -> Result<f64, CheckError>,
) -> Result<f64, CheckError> {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = sample_point(spec, rng, CHECK_MARGIN);
        let pd = at_point(spec, &x)?;
        worst = worst.max(f(&pd)?);
    }
    Ok(worst)
}

fn coord_ix(spec: &MetricSpec, name: &str) -> Option<usize> {
    spec.coords.iter().position(|c| c == name)
}

fn require_s<'a>(pd: &'a PointData, check: &str) -> Result<&'a crate::tensor::MultiForm, CheckError> {
    pd.s
        .as_ref()
        .map(|(s, _)| s)
        .ok_or_else(|| unsupported(check, "chart declares no skew torsion part"))
}

/// The Kundt family's isotropic field p = e^{-a x} d_v, reconstructed from
/// the chart's own names: a parameter `a` and coordinates `v`, `x`.
fn kundt_p(spec: &MetricSpec, check: &str) -> Result<Vec<Expr>, CheckError> {
    let a_ix = spec
        .param_names
        .iter()
        .position(|n| n == "a")
        .ok_or_else(|| unsupported(check, "chart has no parameter 'a'"))?;
    let v_ix = coord_ix(spec, "v").ok_or_else(|| unsupported(check, "no coordinate 'v'"))?;
    let x_ix = coord_ix(spec, "x").ok_or_else(|| unsupported(check, "no coordinate 'x'"))?;
    let mut p = vec![Expr::constant(0.0); spec.dim];
    p[v_ix] = (Expr::param(a_ix) * Expr::coord(x_ix)).neg().exp();
    Ok(p)
}

/// Levi-Civita derivative of a vector field given by expressions:
/// out[(k, m)] = (nabla_m p)^k.
fn lc_gradient(
    spec: &MetricSpec,
    pd: &PointData,
    p: &[Expr],
) -> Result<(DVector<f64>, DMatrix<f64>), CheckError> {
    let (pv, dp) = connection::vector_jets(p, &pd.point, &spec.param_values)
        .map_err(GeometryError::from)?;
    let grad = nabla_vector(&pd.conn, Part::LeviCivita, &pv, &dp);
    Ok((pv, grad))
}

/// Squared g-norm of a twice-covariant matrix b[(m, k)].
fn cov2_norm2(g_inv: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = g_inv.nrows();
    let mut total = 0.0;
    for m in 0..n {
        for k in 0..n {
            for a in 0..n {
                for c in 0..n {
                    total += g_inv[(m, a)] * g_inv[(k, c)] * b[(m, k)] * b[(a, c)];
                }
            }
        }
    }
    total
}

/// Lowered gradient b[(m, k)] = (nabla_m p_flat)_k from the raised one.
fn lower_gradient(pd: &PointData, grad: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pd.conn.dim;
    let mut b = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let mut v = 0.0;
            for l in 0..n {
                v += pd.mv.g[(k, l)] * grad[(l, m)];
            }
            b[(m, k)] = v;
        }
    }
    b
}

// ---------------------------------------------------------------------------
// check bodies

fn check_bianchi(spec: &MetricSpec, rng: &mut SplitMix64, points: usize) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let (r_up, _) = curvature(&pd.conn, &pd.mv, Part::Full);
        Ok(torsion::bianchi_residual(pd, &r_up))
    })
}

fn check_constant_curvature(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let mut k_const: Option<f64> = None;
    for_each_point(spec, rng, points, |pd| {
        let (_, r_low) = curvature(&pd.conn, &pd.mv, Part::LeviCivita);
        let k = match k_const {
            Some(k) => k,
            None => {
                let den = pd.mv.g[(0, 0)] * pd.mv.g[(1, 1)] - pd.mv.g[(0, 1)] * pd.mv.g[(0, 1)];
                if den.abs() < 1e-10 {
                    return Err(unsupported(
                        "constant_curvature",
                        "degenerate (0,1) coordinate plane at the first sample",
                    ));
                }
                let k = r_low.get(0, 1, 0, 1) / den;
                k_const = Some(k);
                k
            }
        };
        let n = pd.conn.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let want =
                            k * (pd.mv.g[(i, a)] * pd.mv.g[(j, b)] - pd.mv.g[(i, b)] * pd.mv.g[(j, a)]);
                        worst = worst.max((r_low.get(i, j, a, b) - want).abs());
                    }
                }
            }
        }
        Ok(worst)
    })
}

fn check_flat_curvature(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let (r_up, _) = curvature(&pd.conn, &pd.mv, Part::LeviCivita);
        Ok(r_up.max_abs())
    })
}

fn check_kundt_geodesic(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let p = kundt_p(spec, "kundt_geodesic")?;
    for_each_point(spec, rng, points, |pd| {
        let (pv, grad) = lc_gradient(spec, pd, &p)?;
        let n = pd.conn.dim;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let mut acc = 0.0;
            for m in 0..n {
                acc += pv[m] * grad[(k, m)];
            }
            worst = worst.max(acc.abs());
        }
        Ok(worst)
    })
}

fn check_kundt_expansion(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let p = kundt_p(spec, "kundt_expansion")?;
    for_each_point(spec, rng, points, |pd| {
        let (_, grad) = lc_gradient(spec, pd, &p)?;
        Ok(grad.trace().abs())
    })
}

fn check_kundt_shear(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let p = kundt_p(spec, "kundt_shear")?;
    for_each_point(spec, rng, points, |pd| {
        let (_, grad) = lc_gradient(spec, pd, &p)?;
        let b = lower_gradient(pd, &grad);
        let sym = (&b + b.transpose()) * 0.5;
        Ok(cov2_norm2(&pd.mv.g_inv, &sym).abs())
    })
}

fn check_kundt_twist(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let p = kundt_p(spec, "kundt_twist")?;
    for_each_point(spec, rng, points, |pd| {
        let (_, grad) = lc_gradient(spec, pd, &p)?;
        let b = lower_gradient(pd, &grad);
        let alt = (&b - b.transpose()) * 0.5;
        Ok(cov2_norm2(&pd.mv.g_inv, &alt).abs())
    })
}

fn check_kundt_p_condition(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let p = kundt_p(spec, "kundt_p_condition")?;
    for_each_point(spec, rng, points, |pd| {
        let (pv, grad) = lc_gradient(spec, pd, &p)?;
        let n = pd.conn.dim;
        let p_flat = pd.mv.lower(&pv);
        let mut worst: f64 = 0.0;
        for m in 0..n {
            for k in 0..n {
                // half the skew part applied to (d_m, p), raised on the end
                let mut half_s = 0.0;
                if let Some((s, _)) = &pd.s {
                    for c in 0..n {
                        for l in 0..n {
                            half_s += 0.5 * pd.mv.g_inv[(k, l)] * s.get(&[m, c, l]) * pv[c];
                        }
                    }
                }
                let res = grad[(k, m)] + p_flat[m] * pv[k] + half_s;
                worst = worst.max(res.abs());
            }
        }
        Ok(worst)
    })
}

fn check_lorentzian_signature(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = sample_point(spec, rng, CHECK_MARGIN);
        if !spec.is_lorentzian_at(&x)? {
            worst = 1.0;
        }
    }
    Ok(worst)
}

fn check_metric_compatibility(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| Ok(pd.nabla_metric(Part::Full).max_abs()))
}

fn check_nabla_curvature(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = sample_point(spec, rng, CHECK_MARGIN);
        let dr = fd_nabla_curvature(spec, &x, Part::Full, 1e-4)?;
        worst = worst.max(dr.max_abs());
    }
    Ok(worst)
}

fn check_nabla_s(spec: &MetricSpec, rng: &mut SplitMix64, points: usize) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let ns = pd
            .nabla_s(Part::Full)
            .ok_or_else(|| unsupported("nabla_s", "chart declares no skew torsion part"))?;
        Ok(ns.iter().map(|m| m.max_abs()).fold(0.0, f64::max))
    })
}

fn check_nabla_xi(spec: &MetricSpec, rng: &mut SplitMix64, points: usize) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let nx = pd
            .nabla_xi(Part::Full)
            .ok_or_else(|| unsupported("nabla_xi", "chart declares no torsion generator"))?;
        Ok(nx.amax())
    })
}

fn check_parallel_torsion(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| Ok(torsion::parallel_torsion_residual(pd)))
}

/// Wave-chart canonical field -e^{-u} d_v, reconstructed from coordinates.
fn wave_p0(spec: &MetricSpec, check: &str) -> Result<(Vec<Expr>, usize), CheckError> {
    let v_ix = coord_ix(spec, "v").ok_or_else(|| unsupported(check, "no coordinate 'v'"))?;
    let u_ix = coord_ix(spec, "u").ok_or_else(|| unsupported(check, "no coordinate 'u'"))?;
    let mut p = vec![Expr::constant(0.0); spec.dim];
    p[v_ix] = Expr::coord(u_ix).neg().exp().neg();
    Ok((p, u_ix))
}

fn check_wave_p0_gradient(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let (p, u_ix) = wave_p0(spec, "plane_wave_p0_gradient")?;
    for_each_point(spec, rng, points, |pd| {
        let (pv, _) = connection::vector_jets(&p, &pd.point, &spec.param_values)
            .map_err(GeometryError::from)?;
        let p_flat = pd.mv.lower(&pv);
        let mut worst: f64 = 0.0;
        for m in 0..pd.conn.dim {
            let want = if m == u_ix { -(-pd.point[u_ix]).exp() } else { 0.0 };
            worst = worst.max((p_flat[m] - want).abs());
        }
        Ok(worst)
    })
}

fn check_wave_p0_parallel(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let (p, _) = wave_p0(spec, "plane_wave_p0_parallel")?;
    for_each_point(spec, rng, points, |pd| {
        let (_, grad) = lc_gradient(spec, pd, &p)?;
        Ok(grad.amax())
    })
}

fn check_s_norm_isotropic(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let s = require_s(pd, "s_norm_isotropic")?;
        Ok(torsion::form_norm2(&pd.mv, s).abs())
    })
}

/// Residual is the shortfall of min |S|^2 below 1e-6; tolerance is zero,
/// so the check passes only when the norm stays bounded away from zero.
fn check_s_norm_nonzero(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let mut least = f64::INFINITY;
    for _ in 0..points {
        let x = sample_point(spec, rng, CHECK_MARGIN);
        let pd = at_point(spec, &x)?;
        let s = require_s(&pd, "s_norm_nonzero")?;
        least = least.min(torsion::form_norm2(&pd.mv, s).abs());
    }
    Ok((1e-6 - least).max(0.0))
}

fn skew_residuals_at(pd: &PointData, check: &str) -> Result<torsion::SkewPointResiduals, CheckError> {
    let (tau, dtau) = pd
        .s
        .as_ref()
        .ok_or_else(|| unsupported(check, "chart declares no skew torsion part"))?;
    Ok(torsion::skew_point_residuals(pd, tau, dtau))
}

fn check_sigma_four_form(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        Ok(skew_residuals_at(pd, "sigma_four_form")?.four_form_defect)
    })
}

fn check_skew_action(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        Ok(skew_residuals_at(pd, "skew_action_identity")?.action_residual)
    })
}

fn check_skew_exterior(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        Ok(skew_residuals_at(pd, "skew_exterior_identity")?.dt1_residual)
    })
}

fn check_skew_gradient(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        Ok(skew_residuals_at(pd, "skew_gradient_identity")?.dt2_residual)
    })
}

fn check_torsion_closed_form(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let from_coeffs = pd.torsion_from_coefficients();
        let closed = pd.torsion_closed_form();
        let n = pd.conn.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    worst = worst.max((from_coeffs.get(i, j, l) - closed.get(i, j, l)).abs());
                }
            }
        }
        Ok(worst)
    })
}

fn check_torsion_decomposition(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    for_each_point(spec, rng, points, |pd| {
        let parts = torsion::decompose_torsion(&pd.mv, &pd.torsion_from_coefficients());
        let n = pd.conn.dim;
        let mut worst = parts.q.max_abs();
        for k in 0..n {
            let declared = pd.xi.as_ref().map(|(v, _)| v[k]).unwrap_or(0.0);
            worst = worst.max((parts.xi[k] - declared).abs());
        }
        match &pd.s {
            Some((s, _)) => worst = worst.max(parts.s.max_abs_diff(s)),
            None => worst = worst.max(parts.s.max_abs()),
        }
        Ok(worst)
    })
}

/// Walker-chart canonical field d_v with potential phi = log u.
fn walker_p0(spec: &MetricSpec, check: &str) -> Result<(Vec<Expr>, usize), CheckError> {
    let v_ix = coord_ix(spec, "v").ok_or_else(|| unsupported(check, "no coordinate 'v'"))?;
    let u_ix = coord_ix(spec, "u").ok_or_else(|| unsupported(check, "no coordinate 'u'"))?;
    let mut p = vec![Expr::constant(0.0); spec.dim];
    p[v_ix] = Expr::constant(1.0);
    Ok((p, u_ix))
}

fn check_walker_p0_gradient(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let (p, u_ix) = walker_p0(spec, "walker_p0_gradient")?;
    for_each_point(spec, rng, points, |pd| {
        let (pv, _) = connection::vector_jets(&p, &pd.point, &spec.param_values)
            .map_err(GeometryError::from)?;
        let p_flat = pd.mv.lower(&pv);
        let mut worst: f64 = 0.0;
        for m in 0..pd.conn.dim {
            // d(e^phi) = d(u) since phi = log u
            let want = if m == u_ix { 1.0 } else { 0.0 };
            worst = worst.max((p_flat[m] - want).abs());
        }
        Ok(worst)
    })
}

fn check_walker_p0_parallel(
    spec: &MetricSpec,
    rng: &mut SplitMix64,
    points: usize,
) -> Result<f64, CheckError> {
    let (p, _) = walker_p0(spec, "walker_p0_parallel")?;
    for_each_point(spec, rng, points, |pd| {
        let (_, grad) = lc_gradient(spec, pd, &p)?;
        Ok(grad.amax())
    })
}

// ---------------------------------------------------------------------------
// registry

/// All registered checks, ordered by id.
pub static CHECKS: &[CheckDef] = &[
    CheckDef {
        id: "bianchi_cyclic",
        description: "cyclic curvature sum matches the torsion side terms",
        anchor: "𝔖 R(X,Y)Z = 𝔖 S(S(X,Y),Z) + 𝔖 g(X,ξ)S(Y,Z) + 𝔖 S(Y,Z,ξ)X",
        tolerance: 1e-7,
        run: check_bianchi,
    },
    CheckDef {
        id: "constant_curvature",
        description: "curvature is a constant multiple of the metric area tensor",
        anchor: "R_{ijkl} = K(g_{ik}g_{jl} − g_{il}g_{jk})",
        tolerance: 1e-7,
        run: check_constant_curvature,
    },
    CheckDef {
        id: "flat_curvature",
        description: "metric curvature tensor vanishes",
        anchor: "R^g = 0",
        tolerance: 1e-10,
        run: check_flat_curvature,
    },
    CheckDef {
        id: "kundt_expansion",
        description: "isotropic congruence has zero expansion",
        anchor: "tr ∇^g p = 0",
        tolerance: 1e-9,
        run: check_kundt_expansion,
    },
    CheckDef {
        id: "kundt_geodesic",
        description: "isotropic field is geodesic",
        anchor: "∇^g_p p = 0",
        tolerance: 1e-9,
        run: check_kundt_geodesic,
    },
    CheckDef {
        id: "kundt_p_condition",
        description: "metric gradient of the isotropic field matches its closed form",
        anchor: "∇^g_X p = −g(X,p)p − ½S(X,p)",
        tolerance: 1e-9,
        run: check_kundt_p_condition,
    },
    CheckDef {
        id: "kundt_shear",
        description: "isotropic congruence has zero shear",
        anchor: "‖sym ∇^g p♭‖² = 0",
        tolerance: 1e-9,
        run: check_kundt_shear,
    },
    CheckDef {
        id: "kundt_twist",
        description: "isotropic congruence has zero twist",
        anchor: "‖alt ∇^g p♭‖² = 0",
        tolerance: 1e-9,
        run: check_kundt_twist,
    },
    CheckDef {
        id: "lorentzian_signature",
        description: "metric has exactly one negative direction",
        anchor: "signature (1, n+1)",
        tolerance: 0.5,
        run: check_lorentzian_signature,
    },
    CheckDef {
        id: "metric_compatibility",
        description: "connection preserves the metric",
        anchor: "∇g = 0",
        tolerance: 1e-10,
        run: check_metric_compatibility,
    },
    CheckDef {
        id: "nabla_curvature",
        description: "curvature tensor is parallel",
        anchor: "∇R = 0",
        tolerance: 1e-5,
        run: check_nabla_curvature,
    },
    CheckDef {
        id: "nabla_s",
        description: "skew torsion part is parallel",
        anchor: "∇S = 0",
        tolerance: 1e-9,
        run: check_nabla_s,
    },
    CheckDef {
        id: "nabla_xi",
        description: "torsion generator is parallel",
        anchor: "∇ξ = 0",
        tolerance: 1e-9,
        run: check_nabla_xi,
    },
    CheckDef {
        id: "parallel_torsion",
        description: "full torsion tensor is parallel",
        anchor: "∇T = 0",
        tolerance: 1e-8,
        run: check_parallel_torsion,
    },
    CheckDef {
        id: "plane_wave_p0_gradient",
        description: "rescaled isotropic field is the gradient of e^(-u)",
        anchor: "p₀♭ = d(e^{−u})",
        tolerance: 1e-9,
        run: check_wave_p0_gradient,
    },
    CheckDef {
        id: "plane_wave_p0_parallel",
        description: "rescaled isotropic field is parallel for the torsion-free connection",
        anchor: "∇^g p₀ = 0",
        tolerance: 1e-9,
        run: check_wave_p0_parallel,
    },
    CheckDef {
        id: "s_norm_isotropic",
        description: "skew torsion part has zero norm",
        anchor: "‖S‖² = 0",
        tolerance: 1e-9,
        run: check_s_norm_isotropic,
    },
    CheckDef {
        id: "s_norm_nonzero",
        description: "skew torsion part stays bounded away from zero",
        anchor: "‖S‖² ≠ 0",
        tolerance: 0.0,
        run: check_s_norm_nonzero,
    },
    CheckDef {
        id: "sigma_four_form",
        description: "sigma of the skew part is fully alternating",
        anchor: "σ_τ ∈ Λ⁴",
        tolerance: 1e-10,
        run: check_sigma_four_form,
    },
    CheckDef {
        id: "skew_action_identity",
        description: "form action of the skew part equals minus a sigma slice",
        anchor: "(τ(X)·τ) = −σ_τ(X,·,·,·)",
        tolerance: 1e-10,
        run: check_skew_action,
    },
    CheckDef {
        id: "skew_exterior_identity",
        description: "exterior derivative identity for the half-skew connection",
        anchor: "dτ(X,Y,Z,V) = 𝔖(∇_Xτ)(Y,Z,V) − (∇_Vτ)(X,Y,Z) + 2σ_τ(X,Y,Z,V)",
        tolerance: 1e-7,
        run: check_skew_exterior,
    },
    CheckDef {
        id: "skew_gradient_identity",
        description: "covariant gradients of the two connections differ by half sigma",
        anchor: "∇τ = ∇^g τ − ½σ_τ",
        tolerance: 1e-7,
        run: check_skew_gradient,
    },
    CheckDef {
        id: "torsion_closed_form",
        description: "coefficient torsion equals its closed form",
        anchor: "T(X,Y) = (X∧Y)ξ + S(X,Y)",
        tolerance: 1e-10,
        run: check_torsion_closed_form,
    },
    CheckDef {
        id: "torsion_decomposition",
        description: "realized torsion splits into the declared parts with no remainder",
        anchor: "T − V(ξ) − S = 0",
        tolerance: 1e-10,
        run: check_torsion_decomposition,
    },
    CheckDef {
        id: "walker_p0_gradient",
        description: "parallel isotropic field is the gradient of e^phi with phi = log u",
        anchor: "p₀♭ = d(e^φ), φ = ln u",
        tolerance: 1e-9,
        run: check_walker_p0_gradient,
    },
    CheckDef {
        id: "walker_p0_parallel",
        description: "isotropic field is parallel for the torsion-free connection",
        anchor: "∇^{g₀} p₀ = 0",
        tolerance: 1e-9,
        run: check_walker_p0_parallel,
    },
];

/// Looks a check up by id.
pub fn find_check(id: &str) -> Result<&'static CheckDef, CheckError> {
    CHECKS
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| CheckError::UnknownCheck(id.to_string()))
}

/// The identity suite used when a chart carries no manifest: signature and
/// compatibility always, the torsion closed form when torsion data exists,
/// and the four skew-form identities when a skew part exists.
pub fn default_suite(spec: &MetricSpec) -> Vec<String> {
    let mut ids = vec!["lorentzian_signature".to_string(), "metric_compatibility".to_string()];
    if spec.xi.is_some() || spec.s_entries.is_some() {
        ids.push("torsion_closed_form".to_string());
    }
    if spec.s_entries.is_some() {
        ids.push("sigma_four_form".to_string());
        ids.push("skew_action_identity".to_string());
        ids.push("skew_exterior_identity".to_string());
        ids.push("skew_gradient_identity".to_string());
    }
    ids.sort();
    ids
}

/// The chart's manifest if it has one, the default suite otherwise.
pub fn manifest_or_default(spec: &MetricSpec) -> Vec<String> {
    match &spec.manifest {
        Some(ids) if !ids.is_empty() => ids.clone(),
        _ => default_suite(spec),
    }
}

/// Runs the named checks and assembles a report. Checks run in parallel but
/// each draws from its own substream of `seed`, and the report lists them in
/// id order, so the result does not depend on scheduling.
pub fn run_checks(
    spec: &MetricSpec,
    ids: &[String],
    seed: u64,
    points: usize,
    tol_overrides: &BTreeMap<String, f64>,
) -> Result<CheckReport, CheckError> {
    if points == 0 {
        return Err(CheckError::BadRequest("need at least one sample point".into()));
    }
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    sorted.dedup();
    let defs: Vec<&CheckDef> = sorted
        .iter()
        .map(|id| find_check(id))
        .collect::<Result<_, _>>()?;
    for id in tol_overrides.keys() {
        find_check(id)?;
    }

    let checks: Vec<CheckOutcome> = defs
        .par_iter()
        .map(|def| -> Result<CheckOutcome, CheckError> {
            let mut rng = SplitMix64::substream(seed, def.id);
            let max_residual = (def.run)(spec, &mut rng, points)?;
            let tolerance = tol_overrides.get(def.id).copied().unwrap_or(def.tolerance);
            Ok(CheckOutcome {
                check_id: def.id.to_string(),
                description: def.description.to_string(),
                paper_anchor: def.anchor.to_string(),
                n_points: points,
                max_residual,
                tolerance,
                pass: max_residual <= tolerance,
            })
        })
        .collect::<Result<_, _>>()?;

    let overall_pass = checks.iter().all(|c| c.pass);
    Ok(CheckReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        spec_name: spec.name.clone(),
        seed,
        checks,
        overall_pass,
    })
}
