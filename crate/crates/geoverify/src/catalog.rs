//! Chart constructors and the named-entry registry.
//!
//! Every constructor validates its inputs and, where the construction only
//! works under hypotheses on the ingredients (a parallel base form, a
//! parallel isotropic vector, a gradient relation), verifies those
//! hypotheses numerically at seeded sample points before assembling the
//! output chart. A failed hypothesis is a construction error, not a failed
//! check on the result.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::chart::{GeometryError, MetricSpec, SparseFormEntry};
use crate::connection::{self, Part};
use crate::expr::Expr;
use crate::sample::{sample_point, SplitMix64};
use crate::tensor::{MultiForm, Tensor3};
use crate::torsion;

/// Residual limit for numerically verified construction hypotheses.
pub const PRECONDITION_TOL: f64 = 1e-8;

const PRE_SEED: u64 = 0xCA7A_1000_0000_0007;
const PRE_POINTS: usize = 32;
const PRE_MARGIN: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),
    #[error("parameter '{name}': {message}")]
    BadParameter { name: String, message: String },
    #[error("construction hypothesis '{what}' fails: residual {residual:.3e} exceeds {limit:.3e}")]
    Precondition { what: String, residual: f64, limit: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn bad(name: &str, message: impl Into<String>) -> CatalogError {
    CatalogError::BadParameter { name: name.into(), message: message.into() }
}

// ---------------------------------------------------------------------------
// small expression helpers

/// Shifts every coordinate index in `e` up by `k` (re-homing an expression
/// written over a sub-chart into a product chart).
fn shift_expr(e: &Expr, k: usize) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(*c),
        Expr::Coord(i) => Expr::Coord(i + k),
        Expr::Param(i) => Expr::Param(*i),
        Expr::Neg(a) => Expr::Neg(Box::new(shift_expr(a, k))),
        Expr::Add(a, b) => Expr::Add(Box::new(shift_expr(a, k)), Box::new(shift_expr(b, k))),
        Expr::Sub(a, b) => Expr::Sub(Box::new(shift_expr(a, k)), Box::new(shift_expr(b, k))),
        Expr::Mul(a, b) => Expr::Mul(Box::new(shift_expr(a, k)), Box::new(shift_expr(b, k))),
        Expr::Div(a, b) => Expr::Div(Box::new(shift_expr(a, k)), Box::new(shift_expr(b, k))),
        Expr::Pow(a, c) => Expr::Pow(Box::new(shift_expr(a, k)), *c),
        Expr::Un(f, a) => Expr::Un(*f, Box::new(shift_expr(a, k))),
    }
}

/// Largest coordinate index used by `e`, if any.
fn max_coord(e: &Expr) -> Option<usize> {
    match e {
        Expr::Const(_) | Expr::Param(_) => None,
        Expr::Coord(i) => Some(*i),
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Un(_, a) => max_coord(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            match (max_coord(a), max_coord(b)) {
                (None, m) | (m, None) => m,
                (Some(x), Some(y)) => Some(x.max(y)),
            }
        }
    }
}

/// `factor * e`, collapsing the trivial cases so emitted charts stay legible.
fn scale_by(factor: &Expr, e: &Expr) -> Expr {
    match e {
        Expr::Const(c) if *c == 0.0 => Expr::constant(0.0),
        Expr::Const(c) if *c == 1.0 => factor.clone(),
        _ => factor.clone() * e.clone(),
    }
}

fn center(spec: &MetricSpec) -> Vec<f64> {
    spec.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
}

// ---------------------------------------------------------------------------
// construction hypothesis verification

/// A chart equal to `base` but carrying `form` as its skew field, used to
/// evaluate covariant derivatives of candidate base forms.
fn with_form(base: &MetricSpec, form: &[SparseFormEntry]) -> Result<MetricSpec, GeometryError> {
    MetricSpec::new(
        format!("{}-hypothesis", base.name),
        base.coords.clone(),
        base.param_names.clone(),
        base.param_values.clone(),
        base.metric_entries().into_iter().map(|(i, j, e)| (i, j, e.clone())).collect(),
        None,
        Some(form.to_vec()),
        base.domain.clone(),
        None,
    )
}

/// Verifies that `form` is parallel for the base Levi-Civita connection and
/// (when `need_sigma` is set) that its sigma 4-form vanishes, at seeded
/// points of the base box.
fn verify_base_form(
    base: &MetricSpec,
    form: &[SparseFormEntry],
    need_sigma: bool,
    label: &str,
) -> Result<(), CatalogError> {
    if form.is_empty() {
        return Ok(());
    }
    let probe = with_form(base, form)?;
    let mut rng = SplitMix64::substream(PRE_SEED, label);
    let mut worst_parallel: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for _ in 0..PRE_POINTS {
        let x = sample_point(&probe, &mut rng, PRE_MARGIN);
        let pd = connection::at_point(&probe, &x)?;
        if let Some(ns) = pd.nabla_s(Part::LeviCivita) {
            for m in &ns {
                worst_parallel = worst_parallel.max(m.max_abs());
            }
        }
        if need_sigma {
            let tau = &pd.s.as_ref().expect("probe chart carries the form").0;
            worst_sigma = worst_sigma.max(torsion::sigma_tau(&pd.mv.g_inv, tau).max_abs());
        }
    }
    if worst_parallel > PRECONDITION_TOL {
        return Err(CatalogError::Precondition {
            what: format!("{label} parallel on the base"),
            residual: worst_parallel,
            limit: PRECONDITION_TOL,
        });
    }
    if worst_sigma > PRECONDITION_TOL {
        return Err(CatalogError::Precondition {
            what: format!("sigma form of {label} vanishes"),
            residual: worst_sigma,
            limit: PRECONDITION_TOL,
        });
    }
    Ok(())
}

fn require_signature(
    spec: &MetricSpec,
    want_neg: usize,
    name: &str,
    message: &str,
) -> Result<(), CatalogError> {
    let (neg, zero, _) = spec.signature_at(&center(spec))?;
    if neg != want_neg || zero != 0 {
        return Err(bad(name, message));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// flat building blocks

/// Positive-definite flat chart with coordinates `prefix1..prefixN` on the
/// cube of the given half width.
pub fn flat_riemannian(prefix: &str, dim: usize, half_width: f64) -> MetricSpec {
    let coords: Vec<String> = (1..=dim).map(|k| format!("{prefix}{k}")).collect();
    let metric = (0..dim).map(|i| (i, i, Expr::constant(1.0))).collect();
    MetricSpec::new(
        format!("flat_{prefix}{dim}"),
        coords,
        vec![],
        vec![],
        metric,
        None,
        None,
        vec![(-half_width, half_width); dim],
        None,
    )
    .expect("flat chart parts are well formed")
}

// ---------------------------------------------------------------------------
// warped products

/// Product chart `eps (dt)^2 + e^{2 eps t} g_base` with generator `xi = d_t`
/// and skew part `e^{3 eps t} tau_base`. The base must be Riemannian for
/// `eps = -1` and Lorentzian for `eps = +1`; `tau_base` must be parallel on
/// the base with vanishing sigma form (both verified numerically).
pub fn warped_product(
    eps: f64,
    t_box: (f64, f64),
    base: &MetricSpec,
    tau_base: &[SparseFormEntry],
) -> Result<MetricSpec, CatalogError> {
    if eps != 1.0 && eps != -1.0 {
        return Err(bad("eps", format!("must be +1 or -1, got {eps}")));
    }
    if base.coords.iter().any(|c| c == "t") {
        return Err(bad("base", "already uses the coordinate name 't'"));
    }
    if eps < 0.0 {
        require_signature(base, 0, "base", "must be Riemannian when eps = -1")?;
    } else {
        require_signature(base, 1, "base", "must be Lorentzian when eps = +1")?;
    }
    verify_base_form(base, tau_base, true, "warp skew form")?;

    let mut coords = vec!["t".to_string()];
    coords.extend(base.coords.iter().cloned());
    let warp2 = (Expr::constant(2.0 * eps) * Expr::coord(0)).exp();
    let warp3 = (Expr::constant(3.0 * eps) * Expr::coord(0)).exp();

    let mut metric = vec![(0, 0, Expr::constant(eps))];
    for (i, j, e) in base.metric_entries() {
        metric.push((i + 1, j + 1, warp2.clone() * shift_expr(e, 1)));
    }
    let dim = coords.len();
    let mut xi = vec![Expr::constant(0.0); dim];
    xi[0] = Expr::constant(1.0);
    let s_entries: Vec<SparseFormEntry> = tau_base
        .iter()
        .map(|e| SparseFormEntry {
            idx: [e.idx[0] + 1, e.idx[1] + 1, e.idx[2] + 1],
            expr: scale_by(&warp3, &shift_expr(&e.expr, 1)),
        })
        .collect();

    let mut manifest = vec![
        "bianchi_cyclic".to_string(),
        "lorentzian_signature".to_string(),
        "metric_compatibility".to_string(),
        "nabla_xi".to_string(),
        "parallel_torsion".to_string(),
        "torsion_closed_form".to_string(),
    ];
    if !s_entries.is_empty() {
        manifest.push("nabla_s".to_string());
    }
    manifest.sort();

    let mut domain = vec![t_box];
    domain.extend(base.domain.iter().cloned());

    Ok(MetricSpec::new(
        format!("warped_{}", base.name),
        coords,
        base.param_names.clone(),
        base.param_values.clone(),
        metric,
        Some(xi),
        if s_entries.is_empty() { None } else { Some(s_entries) },
        domain,
        Some(manifest),
    )?)
}

// ---------------------------------------------------------------------------
// three-dimensional Kundt chart

/// Chart `2 dv du + 2 a v dx du + dx^2 + (-2 v e^{-a x} + C(x, u)) du^2` with
/// isotropic generator `xi = e^{-a x} d_v` and skew part proportional to the
/// volume form. `a` must be nonzero; `profile` is an expression over (x, u).
pub fn kundt3(a: f64, profile: &Expr) -> Result<MetricSpec, CatalogError> {
    if a == 0.0 || !a.is_finite() {
        return Err(bad("a", "requires a nonzero finite scaling, a != 0"));
    }
    if let Some(m) = max_coord(profile) {
        if m > 1 {
            return Err(bad("profile", "may only depend on (x, u)"));
        }
    }
    let coords: Vec<String> = ["v", "x", "u"].iter().map(|s| s.to_string()).collect();
    // profile arrives over (x, u) = (0, 1); the chart orders (v, x, u)
    let c_expr = shift_expr(profile, 1);
    let ax = Expr::param(0) * Expr::coord(1);
    let g_uu = Expr::constant(-2.0) * Expr::coord(0) * ax.clone().neg().exp() + c_expr;
    let metric = vec![
        (0, 2, Expr::constant(1.0)),
        (1, 1, Expr::constant(1.0)),
        (1, 2, Expr::param(0) * Expr::coord(0)),
        (2, 2, g_uu),
    ];
    let xi = vec![ax.neg().exp(), Expr::constant(0.0), Expr::constant(0.0)];
    let s_entries = vec![SparseFormEntry { idx: [0, 1, 2], expr: Expr::param(0).neg() }];
    let manifest = vec![
        "bianchi_cyclic",
        "kundt_expansion",
        "kundt_geodesic",
        "kundt_p_condition",
        "kundt_shear",
        "kundt_twist",
        "lorentzian_signature",
        "metric_compatibility",
        "nabla_s",
        "nabla_xi",
        "parallel_torsion",
        "torsion_closed_form",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    Ok(MetricSpec::new(
        "kundt3",
        coords,
        vec!["a".to_string()],
        vec![a],
        metric,
        Some(xi),
        Some(s_entries),
        vec![(-6.0, 6.0), (-2.0, 2.0), (-6.0, 6.0)],
        Some(manifest),
    )?)
}

// ---------------------------------------------------------------------------
// plane waves

/// Profile choice for [`plane_wave`]: either the rotating quadratic form
/// `A(e^{-uF/2} x, e^{-uF/2} x)` or an arbitrary expression `H(x, u)`.
pub enum PlaneWaveMode {
    Homogeneous { a: DMatrix<f64> },
    Generic { h: Expr },
}

/// Chart `2 dv du + sum (dx^i)^2 + (H + 2v) du^2` on (v, x^1..x^n, u) with
/// generator `xi = -d_v` and skew part `du ^ sum F_ij dx^i dx^j`. `f` must be
/// antisymmetric with even size; the homogeneous profile additionally needs
/// `f` in 2x2 rotation-block normal form and a symmetric coefficient matrix.
///
/// With the half-weight of the skew part in the connection, the screen
/// rotates at rate F/2 along u, so the homogeneous profile co-rotates with
/// `e^{-uF/2}`; that is the choice that makes the curvature parallel.
pub fn plane_wave(f: &DMatrix<f64>, mode: &PlaneWaveMode) -> Result<MetricSpec, CatalogError> {
    let n = f.nrows();
    if n == 0 || n % 2 != 0 || f.ncols() != n {
        return Err(bad("f", "needs an even-sized square matrix"));
    }
    let skew_defect = (f + f.transpose()).amax();
    if skew_defect > 1e-14 {
        return Err(bad("f", format!("must be antisymmetric, defect {skew_defect:.2e}")));
    }

    let u_ix = n + 1;
    let x_ix = |k: usize| k + 1; // spatial slot k lives at coordinate k + 1

    let h_expr: Option<Expr> = match mode {
        PlaneWaveMode::Generic { h } => {
            if let Some(m) = max_coord(h) {
                if m > n {
                    return Err(bad("h", "may only depend on (x^1..x^n, u)"));
                }
            }
            Some(shift_expr(h, 1))
        }
        PlaneWaveMode::Homogeneous { a } => {
            if a.nrows() != n || a.ncols() != n {
                return Err(bad("a", "must match the size of f"));
            }
            if (a - a.transpose()).amax() > 1e-14 {
                return Err(bad("a", "must be symmetric"));
            }
            for i in 0..n {
                for j in 0..n {
                    let in_block = i / 2 == j / 2;
                    if !in_block && f[(i, j)].abs() > 1e-14 {
                        return Err(bad(
                            "f",
                            "homogeneous profile needs f in 2x2 rotation-block normal form",
                        ));
                    }
                }
            }
            // rotated coordinates y = e^{-uF/2} x, blockwise
            let mut y: Vec<Expr> = Vec::with_capacity(n);
            for b in 0..n / 2 {
                let (i0, i1) = (2 * b, 2 * b + 1);
                let freq = f[(i0, i1)];
                if freq == 0.0 {
                    y.push(Expr::coord(x_ix(i0)));
                    y.push(Expr::coord(x_ix(i1)));
                } else {
                    let angle = Expr::constant(freq / 2.0) * Expr::coord(u_ix);
                    let (c, s) = (angle.clone().cos(), angle.sin());
                    y.push(
                        c.clone() * Expr::coord(x_ix(i0)) - s.clone() * Expr::coord(x_ix(i1)),
                    );
                    y.push(s * Expr::coord(x_ix(i0)) + c * Expr::coord(x_ix(i1)));
                }
            }
            let mut acc: Option<Expr> = None;
            for k in 0..n {
                for l in k..n {
                    let coeff = if k == l { a[(k, k)] } else { 2.0 * a[(k, l)] };
                    if coeff == 0.0 {
                        continue;
                    }
                    let term = Expr::constant(coeff) * y[k].clone() * y[l].clone();
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => prev + term,
                    });
                }
            }
            acc
        }
    };

    let coords: Vec<String> = std::iter::once("v".to_string())
        .chain((1..=n).map(|k| format!("x{k}")))
        .chain(std::iter::once("u".to_string()))
        .collect();
    let two_v = Expr::constant(2.0) * Expr::coord(0);
    let g_uu = match h_expr {
        Some(h) => h + two_v,
        None => two_v,
    };
    let mut metric = vec![(0, u_ix, Expr::constant(1.0)), (u_ix, u_ix, g_uu)];
    for k in 0..n {
        metric.push((x_ix(k), x_ix(k), Expr::constant(1.0)));
    }

    let dim = n + 2;
    let mut xi = vec![Expr::constant(0.0); dim];
    xi[0] = Expr::constant(-1.0);
    let mut s_entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if f[(i, j)] != 0.0 {
                s_entries.push(SparseFormEntry {
                    idx: [x_ix(i), x_ix(j), u_ix],
                    expr: Expr::constant(f[(i, j)]),
                });
            }
        }
    }

    let mut manifest: Vec<String> = vec![
        "bianchi_cyclic",
        "lorentzian_signature",
        "metric_compatibility",
        "nabla_xi",
        "parallel_torsion",
        "plane_wave_p0_gradient",
        "plane_wave_p0_parallel",
        "torsion_closed_form",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    if !s_entries.is_empty() {
        manifest.push("nabla_s".to_string());
        manifest.push("s_norm_isotropic".to_string());
    }
    if matches!(mode, PlaneWaveMode::Homogeneous { .. }) {
        manifest.push("nabla_curvature".to_string());
    }
    manifest.sort();

    let mut domain = vec![(-6.0, 6.0)];
    domain.extend(std::iter::repeat((-3.0, 3.0)).take(n));
    domain.push((-4.0, 4.0));

    Ok(MetricSpec::new(
        "plane_wave",
        coords,
        vec![],
        vec![],
        metric,
        Some(xi),
        if s_entries.is_empty() { None } else { Some(s_entries) },
        domain,
        Some(manifest),
    )?)
}

// ---------------------------------------------------------------------------
// Walker charts and isotropic torsion constructions

/// Chart `2 dv du + g_base + H du^2` on (v, base.., u). The base must be
/// Riemannian, `h` is an expression over (base coords.., u), and the u box
/// must stay strictly positive so that `phi = log(u)` is defined.
pub fn walker(
    base: &MetricSpec,
    h: &Expr,
    u_box: (f64, f64),
) -> Result<MetricSpec, CatalogError> {
    require_signature(base, 0, "base", "must be Riemannian")?;
    for taken in ["v", "u"] {
        if base.coords.iter().any(|c| c == taken) {
            return Err(bad("base", format!("already uses the coordinate name '{taken}'")));
        }
    }
    if !(u_box.0 > 0.0 && u_box.0 < u_box.1) {
        return Err(bad("u_box", "must be an interval inside (0, +inf)"));
    }
    let nb = base.dim;
    if let Some(m) = max_coord(h) {
        if m > nb {
            return Err(bad("h", "may only depend on (base coordinates, u)"));
        }
    }

    let coords: Vec<String> = std::iter::once("v".to_string())
        .chain(base.coords.iter().cloned())
        .chain(std::iter::once("u".to_string()))
        .collect();
    let u_ix = nb + 1;
    let mut metric = vec![(0, u_ix, Expr::constant(1.0))];
    for (i, j, e) in base.metric_entries() {
        metric.push((i + 1, j + 1, shift_expr(e, 1)));
    }
    match h {
        Expr::Const(c) if *c == 0.0 => {}
        _ => metric.push((u_ix, u_ix, shift_expr(h, 1))),
    }

    let manifest = vec![
        "lorentzian_signature",
        "metric_compatibility",
        "walker_p0_gradient",
        "walker_p0_parallel",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let mut domain = vec![(-6.0, 6.0)];
    domain.extend(base.domain.iter().cloned());
    domain.push(u_box);

    Ok(MetricSpec::new(
        format!("walker_{}", base.name),
        coords,
        base.param_names.clone(),
        base.param_values.clone(),
        metric,
        None,
        None,
        domain,
        Some(manifest),
    )?)
}

/// Ingredients for the isotropic torsion constructions: a bare chart, a
/// candidate parallel isotropic vector `p0`, a potential `phi` with
/// `p0 flat = d(e^phi)`, and a skew form `tau0` parallel for the chart's
/// Levi-Civita connection. All three relations are verified numerically.
pub struct IsotropicData {
    pub spec: MetricSpec,
    pub p0: Vec<Expr>,
    pub phi: Expr,
    pub tau0: Vec<SparseFormEntry>,
}

/// Minimal two-dimensional chart `2 dv du` with `p0 = d_v`, `phi = log(u)`.
pub fn witt2_data() -> IsotropicData {
    let coords: Vec<String> = ["v", "u"].iter().map(|s| s.to_string()).collect();
    let spec = MetricSpec::new(
        "witt2",
        coords,
        vec![],
        vec![],
        vec![(0, 1, Expr::constant(1.0))],
        None,
        None,
        vec![(-6.0, 6.0), (0.5, 4.0)],
        None,
    )
    .expect("plane chart parts are well formed");
    IsotropicData {
        spec,
        p0: vec![Expr::constant(1.0), Expr::constant(0.0)],
        phi: Expr::coord(1).log(),
        tau0: vec![],
    }
}

/// Walker chart bundled with its canonical `p0 = d_v`, `phi = log(u)` data
/// and an optional parallel form `tau0` (indices over the walker chart).
pub fn walker_data(
    base: &MetricSpec,
    h: &Expr,
    u_box: (f64, f64),
    tau0: Vec<SparseFormEntry>,
) -> Result<IsotropicData, CatalogError> {
    let spec = walker(base, h, u_box)?;
    let dim = spec.dim;
    let mut p0 = vec![Expr::constant(0.0); dim];
    p0[0] = Expr::constant(1.0);
    let phi = Expr::coord(dim - 1).log();
    Ok(IsotropicData { spec, p0, phi, tau0 })
}

/// Verifies the three hypotheses carried by `data` at seeded points.
fn verify_isotropic_data(data: &IsotropicData, label: &str) -> Result<(), CatalogError> {
    let spec = &data.spec;
    if data.p0.len() != spec.dim {
        return Err(bad("p0", "component count must match the chart dimension"));
    }
    let mut rng = SplitMix64::substream(PRE_SEED, label);
    let mut worst_parallel: f64 = 0.0;
    let mut worst_gradient: f64 = 0.0;
    for _ in 0..PRE_POINTS {
        let x = sample_point(spec, &mut rng, PRE_MARGIN);
        let pd = connection::at_point(spec, &x)?;
        let (p0v, dp0) = connection::vector_jets(&data.p0, &x, &spec.param_values)
            .map_err(GeometryError::from)?;
        worst_parallel = worst_parallel
            .max(connection::nabla_vector(&pd.conn, Part::LeviCivita, &p0v, &dp0).amax());
        let jet = crate::expr::eval_jet2(&data.phi, &x, &spec.param_values)
            .map_err(GeometryError::from)?;
        let p_flat = pd.mv.lower(&p0v);
        for m in 0..spec.dim {
            worst_gradient =
                worst_gradient.max((p_flat[m] - jet.value.exp() * jet.grad[m]).abs());
        }
    }
    if worst_parallel > PRECONDITION_TOL {
        return Err(CatalogError::Precondition {
            what: format!("{label}: p0 parallel"),
            residual: worst_parallel,
            limit: PRECONDITION_TOL,
        });
    }
    if worst_gradient > PRECONDITION_TOL {
        return Err(CatalogError::Precondition {
            what: format!("{label}: p0 flat equals d(e^phi)"),
            residual: worst_gradient,
            limit: PRECONDITION_TOL,
        });
    }
    verify_base_form(spec, &data.tau0, false, &format!("{label}: tau0"))?;
    Ok(())
}

/// Equips the chart in `data` with the degenerate isotropic torsion pair
/// `xi = e^{-phi} p0`, `S = e^{-phi} tau0`.
pub fn deg_isotropic(data: &IsotropicData) -> Result<MetricSpec, CatalogError> {
    verify_isotropic_data(data, "degenerate isotropic chart")?;
    let spec = &data.spec;
    let damp = data.phi.clone().neg().exp();
    let xi: Vec<Expr> = data.p0.iter().map(|e| scale_by(&damp, e)).collect();
    let s_entries: Vec<SparseFormEntry> = data
        .tau0
        .iter()
        .map(|e| SparseFormEntry { idx: e.idx, expr: scale_by(&damp, &e.expr) })
        .collect();

    let mut manifest: Vec<String> = vec![
        "bianchi_cyclic",
        "lorentzian_signature",
        "metric_compatibility",
        "nabla_xi",
        "parallel_torsion",
        "torsion_closed_form",
        "torsion_decomposition",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    if !s_entries.is_empty() {
        manifest.push("nabla_s".to_string());
        manifest.push("s_norm_isotropic".to_string());
    }
    if let Some(prior) = &spec.manifest {
        for id in prior {
            if id.starts_with("walker_") {
                manifest.push(id.clone());
            }
        }
    }
    manifest.sort();

    Ok(MetricSpec::new(
        format!("{}_deg", spec.name),
        spec.coords.clone(),
        spec.param_names.clone(),
        spec.param_values.clone(),
        spec.metric_entries().into_iter().map(|(i, j, e)| (i, j, e.clone())).collect(),
        Some(xi),
        if s_entries.is_empty() { None } else { Some(s_entries) },
        spec.domain.clone(),
        Some(manifest),
    )?)
}

/// Product of the chart in `data` with a Riemannian factor scaled by
/// `e^{2 phi}`, carrying `xi = e^{-phi} p0` and
/// `S = e^{-phi} tau0 + e^{3 phi} tau_n`. The factor form `tau_n` must be
/// nonzero, parallel on the factor, and have vanishing sigma form.
pub fn nondeg_isotropic_product(
    data: &IsotropicData,
    n_riem: &MetricSpec,
    tau_n: &[SparseFormEntry],
) -> Result<MetricSpec, CatalogError> {
    verify_isotropic_data(data, "isotropic product, degenerate factor")?;
    require_signature(n_riem, 0, "n_riem", "must be Riemannian")?;
    for c in &n_riem.coords {
        if data.spec.coords.contains(c) {
            return Err(bad("n_riem", format!("coordinate name '{c}' collides")));
        }
    }
    if !n_riem.param_names.is_empty() {
        return Err(bad("n_riem", "parameters on the factor are not supported"));
    }
    // the construction degenerates without a skew contribution from the factor
    let mut tau_scale: f64 = 0.0;
    {
        let mut rng = SplitMix64::substream(PRE_SEED, "factor form size");
        for _ in 0..8 {
            let y = sample_point(n_riem, &mut rng, PRE_MARGIN);
            for e in tau_n {
                let v = crate::expr::eval_value(&e.expr, &y, &[])
                    .map_err(GeometryError::from)?;
                tau_scale = tau_scale.max(v.abs());
            }
        }
    }
    if tau_scale < 1e-12 {
        return Err(bad("tau_n", "must be a nonzero form on the factor"));
    }
    verify_base_form(n_riem, tau_n, true, "factor skew form")?;

    let m0 = &data.spec;
    let off = m0.dim;
    let mut coords = m0.coords.clone();
    coords.extend(n_riem.coords.iter().cloned());

    let grow2 = (Expr::constant(2.0) * data.phi.clone()).exp();
    let grow3 = (Expr::constant(3.0) * data.phi.clone()).exp();
    let damp = data.phi.clone().neg().exp();

    let mut metric: Vec<(usize, usize, Expr)> =
        m0.metric_entries().into_iter().map(|(i, j, e)| (i, j, e.clone())).collect();
    for (i, j, e) in n_riem.metric_entries() {
        metric.push((i + off, j + off, scale_by(&grow2, &shift_expr(e, off))));
    }

    let dim = coords.len();
    let mut xi = vec![Expr::constant(0.0); dim];
    for (k, e) in data.p0.iter().enumerate() {
        xi[k] = scale_by(&damp, e);
    }
    let mut s_entries: Vec<SparseFormEntry> = data
        .tau0
        .iter()
        .map(|e| SparseFormEntry { idx: e.idx, expr: scale_by(&damp, &e.expr) })
        .collect();
    for e in tau_n {
        s_entries.push(SparseFormEntry {
            idx: [e.idx[0] + off, e.idx[1] + off, e.idx[2] + off],
            expr: scale_by(&grow3, &shift_expr(&e.expr, off)),
        });
    }

    let mut manifest: Vec<String> = vec![
        "bianchi_cyclic",
        "lorentzian_signature",
        "metric_compatibility",
        "nabla_s",
        "nabla_xi",
        "parallel_torsion",
        "s_norm_nonzero",
        "torsion_closed_form",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    if let Some(prior) = &m0.manifest {
        for id in prior {
            if id.starts_with("walker_") {
                manifest.push(id.clone());
            }
        }
    }
    manifest.sort();

    let mut domain = m0.domain.clone();
    domain.extend(n_riem.domain.iter().cloned());

    Ok(MetricSpec::new(
        format!("{}_x_{}", m0.name, n_riem.name),
        coords,
        m0.param_names.clone(),
        m0.param_values.clone(),
        metric,
        Some(xi),
        Some(s_entries),
        domain,
        Some(manifest),
    )?)
}

// ---------------------------------------------------------------------------
// algebraic point data

/// A metric Lie algebra snapshot: bracket coefficients `c^k_ij` (layout
/// `bracket.get(i, j, k)`), an ad-invariant inner product, and the canonical
/// 3-form `tau(x, y, z) = <[x, y], z>`.
pub struct LiePointData {
    pub name: String,
    pub dim: usize,
    pub bracket: Tensor3,
    pub inner: DMatrix<f64>,
    pub tau: MultiForm,
}

/// Builds the canonical 3-form for named algebras: "su2", "su2xsu2", or
/// "abelian(n)" with 1 <= n <= 9.
pub fn lie_point_data(name: &str) -> Result<LiePointData, CatalogError> {
    let eps_block = |bracket: &mut Tensor3, base: usize| {
        for (i, j, k, sign) in [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (1, 0, 2, -1.0),
            (2, 1, 0, -1.0),
            (0, 2, 1, -1.0),
        ] {
            bracket.set(base + i, base + j, base + k, sign);
        }
    };
    let (dim, bracket) = match name {
        "su2" => {
            let mut b = Tensor3::zeros(3);
            eps_block(&mut b, 0);
            (3, b)
        }
        "su2xsu2" => {
            let mut b = Tensor3::zeros(6);
            eps_block(&mut b, 0);
            eps_block(&mut b, 3);
            (6, b)
        }
        other => {
            let inner = other
                .strip_prefix("abelian(")
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| CatalogError::UnknownEntry(other.to_string()))?;
            let n: usize = inner
                .parse()
                .map_err(|_| bad("abelian", format!("bad dimension '{inner}'")))?;
            if !(1..=9).contains(&n) {
                return Err(bad("abelian", "dimension must be between 1 and 9"));
            }
            (n, Tensor3::zeros(n))
        }
    };
    let inner = DMatrix::identity(dim, dim);
    let mut tau = MultiForm::zeros(dim, 3);
    if dim >= 3 {
        for tuple in MultiForm::increasing_tuples(dim, 3) {
            let (i, j, k) = (tuple[0], tuple[1], tuple[2]);
            let mut v = 0.0;
            for l in 0..dim {
                v += bracket.get(i, j, l) * inner[(l, k)];
            }
            tau.set_antisym(&tuple, v);
        }
    }
    Ok(LiePointData { name: name.to_string(), dim, bracket, inner, tau })
}

// ---------------------------------------------------------------------------
// named entries

/// One tunable number of a catalog entry.
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub doc: &'static str,
}

/// A named, parameterized chart family.
pub struct CatalogEntry {
    pub name: &'static str,
    /// The structural law the entry instantiates.
    pub law: &'static str,
    pub params: &'static [ParamSpec],
    pub build: fn(&BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError>,
}

fn as_dim(p: &BTreeMap<String, f64>, name: &str) -> Result<usize, CatalogError> {
    let v = p[name];
    if v.fract() != 0.0 || !(2.0..=9.0).contains(&v) {
        return Err(bad(name, "must be an integer between 2 and 9"));
    }
    Ok(v as usize)
}

fn build_minkowski(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let dim = as_dim(p, "dim")?;
    let mut spec = crate::chart::minkowski(dim);
    spec.manifest = Some(vec![
        "flat_curvature".to_string(),
        "lorentzian_signature".to_string(),
        "metric_compatibility".to_string(),
    ]);
    Ok(spec)
}

fn build_de_sitter(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let dim = as_dim(p, "dim")?;
    let base = flat_riemannian("y", dim - 1, 50.0);
    let mut spec = warped_product(-1.0, (-4.0, 4.0), &base, &[])?;
    spec.name = "de_sitter".to_string();
    let manifest = spec.manifest.get_or_insert_with(Vec::new);
    manifest.push("constant_curvature".to_string());
    manifest.sort();
    Ok(spec)
}

fn build_warped_vol(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let c = p["c"];
    let base = flat_riemannian("y", 3, 8.0);
    let tau = [SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(c) }];
    let mut spec = warped_product(-1.0, (-2.0, 2.0), &base, &tau)?;
    spec.name = "warped_vol".to_string();
    Ok(spec)
}

fn build_warped_mink_vol(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let c = p["c"];
    let base = crate::chart::minkowski(3);
    let tau = [SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(c) }];
    let mut spec = warped_product(1.0, (-2.0, 2.0), &base, &tau)?;
    spec.name = "warped_mink_vol".to_string();
    Ok(spec)
}

fn build_kundt3(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    // profile C = c_amp sin(x) u over the (x, u) slots
    let profile =
        Expr::constant(p["c_amp"]) * Expr::coord(0).sin() * Expr::coord(1);
    kundt3(p["a"], &profile)
}

fn rotation_f(freq: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, freq, -freq, 0.0])
}

fn rotation_blocks(n: usize, freq: f64) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(n, n);
    for b in 0..n / 2 {
        f[(2 * b, 2 * b + 1)] = freq;
        f[(2 * b + 1, 2 * b)] = -freq;
    }
    f
}

fn build_plane_wave(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let n_raw = p["n"];
    if n_raw.fract() != 0.0 || !(2.0..=6.0).contains(&n_raw) || (n_raw as usize) % 2 != 0 {
        return Err(bad("n", "must be an even integer between 2 and 6"));
    }
    let n = n_raw as usize;
    // profile eigenvalues alternate between a1 and a2 across the screen
    let diag: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { p["a1"] } else { p["a2"] }).collect();
    let a = DMatrix::from_diagonal(&DVector::from_vec(diag));
    plane_wave(&rotation_blocks(n, p["f"]), &PlaneWaveMode::Homogeneous { a })
}

fn build_plane_wave_generic(_p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let h = Expr::coord(0).pow(4.0); // (x^1)^4 over the (x^1, x^2, u) slots
    let mut spec = plane_wave(&rotation_f(1.0), &PlaneWaveMode::Generic { h })?;
    spec.name = "plane_wave_generic".to_string();
    Ok(spec)
}

fn build_walker(_p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let base = flat_riemannian("x", 2, 8.0);
    let h = Expr::coord(0).pow(2.0) * Expr::coord(2); // x1^2 u over (x1, x2, u)
    let mut spec = walker(&base, &h, (0.5, 4.0))?;
    spec.name = "walker".to_string();
    Ok(spec)
}

fn build_deg_isotropic_walker(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let base = flat_riemannian("x", 2, 8.0);
    // tau0 = du ^ (c dx1 dx2), constant screen 2-form over (v, x1, x2, u)
    let tau0 =
        vec![SparseFormEntry { idx: [1, 2, 3], expr: Expr::constant(p["c"]) }];
    let data = walker_data(&base, &Expr::constant(0.0), (0.5, 4.0), tau0)?;
    let mut spec = deg_isotropic(&data)?;
    spec.name = "deg_isotropic_walker".to_string();
    Ok(spec)
}

fn build_nondeg_product(p: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let factor = flat_riemannian("y", 3, 8.0);
    let tau = [SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(p["c"]) }];
    let mut spec = nondeg_isotropic_product(&witt2_data(), &factor, &tau)?;
    spec.name = "nondeg_product".to_string();
    Ok(spec)
}

/// All named entries, in presentation order.
pub fn entries() -> &'static [CatalogEntry] {
    const DIM: ParamSpec =
        ParamSpec { name: "dim", default: 4.0, doc: "chart dimension, 2 to 9" };
    const AMP_C: ParamSpec =
        ParamSpec { name: "c", default: 1.0, doc: "skew amplitude" };
    static ENTRIES: &[CatalogEntry] = &[
        CatalogEntry {
            name: "minkowski",
            law: "flat model space, torsion-free reference",
            params: &[DIM],
            build: build_minkowski,
        },
        CatalogEntry {
            name: "de_sitter",
            law: "warped line over a flat base: constant curvature, parallel vectorial torsion",
            params: &[DIM],
            build: build_de_sitter,
        },
        CatalogEntry {
            name: "warped_vol",
            law: "warped line over a flat Riemannian base with scaled volume skew torsion",
            params: &[AMP_C],
            build: build_warped_vol,
        },
        CatalogEntry {
            name: "warped_mink_vol",
            law: "spacelike warped line over a Lorentzian base with scaled volume skew torsion",
            params: &[AMP_C],
            build: build_warped_mink_vol,
        },
        CatalogEntry {
            name: "kundt3",
            law: "3d Kundt chart: isotropic generator with volume skew part, parallel torsion",
            params: &[
                ParamSpec { name: "a", default: 1.0, doc: "scaling exponent, nonzero" },
                ParamSpec { name: "c_amp", default: 1.0, doc: "profile amplitude of sin(x) u" },
            ],
            build: build_kundt3,
        },
        CatalogEntry {
            name: "plane_wave",
            law: "homogeneous rotating plane wave: degenerate isotropic torsion, parallel curvature",
            params: &[
                ParamSpec { name: "n", default: 2.0, doc: "screen dimension, even, 2 to 6" },
                ParamSpec { name: "f", default: 1.0, doc: "screen rotation frequency" },
                ParamSpec { name: "a1", default: 1.0, doc: "odd-slot profile eigenvalue" },
                ParamSpec { name: "a2", default: 2.0, doc: "even-slot profile eigenvalue" },
            ],
            build: build_plane_wave,
        },
        CatalogEntry {
            name: "plane_wave_generic",
            law: "plane wave with quartic profile: parallel torsion, curvature not parallel",
            params: &[],
            build: build_plane_wave_generic,
        },
        CatalogEntry {
            name: "walker",
            law: "Walker chart: parallel isotropic vector field with gradient potential",
            params: &[],
            build: build_walker,
        },
        CatalogEntry {
            name: "deg_isotropic_walker",
            law: "degenerate isotropic torsion pair e^{-phi}(p0, tau0) on a Walker chart",
            params: &[AMP_C],
            build: build_deg_isotropic_walker,
        },
        CatalogEntry {
            name: "nondeg_product",
            law: "isotropic product with e^{3 phi}-scaled factor volume: nondegenerate skew part",
            params: &[AMP_C],
            build: build_nondeg_product,
        },
    ];
    ENTRIES
}

/// Builds a named entry with defaults overridden by `overrides`. Unknown
/// entry names and unknown parameter names are errors.
pub fn build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<MetricSpec, CatalogError> {
    let entry = entries()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownEntry(name.to_string()))?;
    let mut merged: BTreeMap<String, f64> =
        entry.params.iter().map(|p| (p.name.to_string(), p.default)).collect();
    for (k, v) in overrides {
        if !merged.contains_key(k) {
            return Err(bad(k, format!("entry '{name}' has no such parameter")));
        }
        if !v.is_finite() {
            return Err(bad(k, "must be finite"));
        }
        merged.insert(k.clone(), *v);
    }
    (entry.build)(&merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{at_point, curvature, fd_nabla_curvature, nabla_vector};
    use crate::expr::parse;
    use crate::torsion::{
        bianchi_residual, decompose_torsion, form_norm2, parallel_torsion_residual, sigma_tau,
    };

    fn no_overrides() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn overrides(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn sampled_points(spec: &MetricSpec, n: usize, label: &str) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::substream(17, label);
        (0..n).map(|_| sample_point(spec, &mut rng, 0.05)).collect()
    }

    #[test]
    fn registry_builds_every_entry_on_defaults() {
        let all = entries();
        assert!(all.len() >= 8, "registry has {} entries", all.len());
        for entry in all {
            let spec = build(entry.name, &no_overrides())
                .unwrap_or_else(|e| panic!("{} fails to build: {e}", entry.name));
            assert!(spec.manifest.as_ref().is_some_and(|m| !m.is_empty()), "{}", entry.name);
            assert!(
                spec.is_lorentzian_at(&center(&spec)).unwrap(),
                "{} is not Lorentzian at its box center",
                entry.name
            );
            assert!(!entry.law.is_empty());
        }
    }

    #[test]
    fn build_rejects_unknown_names_and_parameters() {
        assert!(matches!(
            build("nosuch", &no_overrides()),
            Err(CatalogError::UnknownEntry(_))
        ));
        assert!(matches!(
            build("kundt3", &overrides(&[("nosuch", 1.0)])),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            build("kundt3", &overrides(&[("a", f64::NAN)])),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(build("plane_wave", &overrides(&[("f", 2.0)])).is_ok());
        // wider screens build too; odd or out-of-range ones do not
        let wide = build("plane_wave", &overrides(&[("n", 4.0)])).unwrap();
        assert_eq!(wide.dim, 6);
        assert!(matches!(
            build("plane_wave", &overrides(&[("n", 3.0)])),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            build("plane_wave", &overrides(&[("n", 8.0)])),
            Err(CatalogError::BadParameter { .. })
        ));
    }

    #[test]
    fn warped_flat_base_volume_torsion_is_parallel() {
        let spec = build("warped_vol", &no_overrides()).unwrap();
        for x in sampled_points(&spec, 12, "warped_vol") {
            let pd = at_point(&spec, &x).unwrap();
            let res = parallel_torsion_residual(&pd);
            assert!(res < 1e-9, "torsion derivative {res} at {x:?}");
            let (r_up, _) = curvature(&pd.conn, &pd.mv, Part::Full);
            let b = bianchi_residual(&pd, &r_up);
            assert!(b < 1e-9, "cyclic curvature defect {b} at {x:?}");
        }
    }

    #[test]
    fn warped_lorentzian_base_torsion_is_parallel() {
        let spec = build("warped_mink_vol", &no_overrides()).unwrap();
        for x in sampled_points(&spec, 12, "warped_mink_vol") {
            let pd = at_point(&spec, &x).unwrap();
            let res = parallel_torsion_residual(&pd);
            assert!(res < 1e-9, "torsion derivative {res} at {x:?}");
        }
    }

    #[test]
    fn expanding_chart_has_constant_negative_curvature() {
        let spec = build("de_sitter", &no_overrides()).unwrap();
        for x in sampled_points(&spec, 6, "de_sitter") {
            let pd = at_point(&spec, &x).unwrap();
            let (_, r_low) = curvature(&pd.conn, &pd.mv, Part::LeviCivita);
            let mut defect: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in 0..4 {
                            let want = -(pd.mv.g[(i, k)] * pd.mv.g[(j, l)]
                                - pd.mv.g[(i, l)] * pd.mv.g[(j, k)]);
                            defect = defect.max((r_low.get(i, j, k, l) - want).abs());
                        }
                    }
                }
            }
            assert!(defect < 1e-9, "curvature is not constant: {defect} at {x:?}");
        }
    }

    #[test]
    fn warped_product_validations() {
        // base of the wrong signature
        let lorentzian = crate::chart::minkowski(3);
        assert!(matches!(
            warped_product(-1.0, (-2.0, 2.0), &lorentzian, &[]),
            Err(CatalogError::BadParameter { .. })
        ));
        let riem = flat_riemannian("y", 3, 8.0);
        assert!(matches!(
            warped_product(1.0, (-2.0, 2.0), &riem, &[]),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            warped_product(0.5, (-2.0, 2.0), &riem, &[]),
            Err(CatalogError::BadParameter { .. })
        ));
        // a base form that is not parallel
        let cc: Vec<&str> = riem.coords.iter().map(|s| s.as_str()).collect();
        let badform = [SparseFormEntry {
            idx: [0, 1, 2],
            expr: parse("y1", &cc, &[] as &[&str]).unwrap(),
        }];
        assert!(matches!(
            warped_product(-1.0, (-2.0, 2.0), &riem, &badform),
            Err(CatalogError::Precondition { .. })
        ));
    }

    #[test]
    fn kundt_chart_carries_parallel_torsion() {
        for c_amp in [1.0, 0.0] {
            let spec = build("kundt3", &overrides(&[("c_amp", c_amp)])).unwrap();
            for x in sampled_points(&spec, 20, "kundt3") {
                let pd = at_point(&spec, &x).unwrap();
                let nx = pd.nabla_xi(Part::Full).unwrap().amax();
                assert!(nx < 1e-10, "generator derivative {nx} at {x:?}");
                let ns = pd
                    .nabla_s(Part::Full)
                    .unwrap()
                    .iter()
                    .map(|m| m.max_abs())
                    .fold(0.0, f64::max);
                assert!(ns < 1e-10, "skew derivative {ns} at {x:?}");
                let res = parallel_torsion_residual(&pd);
                assert!(res < 1e-10, "torsion derivative {res} at {x:?}");
                let (r_up, _) = curvature(&pd.conn, &pd.mv, Part::Full);
                let b = bianchi_residual(&pd, &r_up);
                assert!(b < 1e-9, "cyclic curvature defect {b} at {x:?}");
            }
        }
    }

    #[test]
    fn kundt_constructor_validations() {
        let zero = Expr::constant(0.0);
        assert!(matches!(kundt3(0.0, &zero), Err(CatalogError::BadParameter { .. })));
        assert!(matches!(kundt3(f64::NAN, &zero), Err(CatalogError::BadParameter { .. })));
        // profile indices beyond (x, u)
        assert!(matches!(
            kundt3(1.0, &Expr::coord(2)),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(kundt3(-0.7, &Expr::coord(0).sin()).is_ok());
    }

    #[test]
    fn plane_wave_torsion_is_parallel_and_isotropic() {
        let spec = build("plane_wave", &no_overrides()).unwrap();
        let cc: Vec<&str> = spec.coords.iter().map(|s| s.as_str()).collect();
        let p0: Vec<Expr> = ["-exp(-u)", "0", "0", "0"]
            .iter()
            .map(|t| parse(t, &cc, &[] as &[&str]).unwrap())
            .collect();
        for x in sampled_points(&spec, 15, "plane_wave") {
            let pd = at_point(&spec, &x).unwrap();
            assert!(pd.nabla_xi(Part::Full).unwrap().amax() < 1e-10);
            let ns = pd
                .nabla_s(Part::Full)
                .unwrap()
                .iter()
                .map(|m| m.max_abs())
                .fold(0.0, f64::max);
            assert!(ns < 1e-10, "skew derivative {ns} at {x:?}");
            let s = &pd.s.as_ref().unwrap().0;
            assert!(form_norm2(&pd.mv, s).abs() < 1e-12, "skew part is not isotropic");
            // the rescaled generator is parallel already for Levi-Civita
            let (p0v, dp0) = connection::vector_jets(&p0, &x, &[]).unwrap();
            let lc = nabla_vector(&pd.conn, Part::LeviCivita, &p0v, &dp0).amax();
            assert!(lc < 1e-10, "p0 fails to be parallel: {lc} at {x:?}");
        }
    }

    #[test]
    fn homogeneous_wave_has_parallel_curvature() {
        let spec = build("plane_wave", &no_overrides()).unwrap();
        for x in sampled_points(&spec, 4, "plane_wave_dr") {
            let dr = fd_nabla_curvature(&spec, &x, Part::Full, 1e-4).unwrap();
            assert!(dr.max_abs() < 1e-5, "curvature derivative {} at {x:?}", dr.max_abs());
        }
    }

    #[test]
    fn generic_wave_curvature_is_not_parallel() {
        let spec = build("plane_wave_generic", &no_overrides()).unwrap();
        let mut worst: f64 = 0.0;
        for x in sampled_points(&spec, 20, "plane_wave_generic") {
            let dr = fd_nabla_curvature(&spec, &x, Part::Full, 1e-4).unwrap();
            worst = worst.max(dr.max_abs());
        }
        assert!(worst > 1e-2, "quartic profile should break parallel curvature, got {worst}");
    }

    #[test]
    fn plane_wave_constructor_validations() {
        let not_skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let mode = PlaneWaveMode::Generic { h: Expr::constant(0.0) };
        assert!(matches!(plane_wave(&not_skew, &mode), Err(CatalogError::BadParameter { .. })));

        let odd = DMatrix::zeros(3, 3);
        assert!(matches!(plane_wave(&odd, &mode), Err(CatalogError::BadParameter { .. })));

        // off-block coupling is fine for a generic profile but not homogeneous
        let coupled = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert!(plane_wave(&coupled, &mode).is_ok());
        let hom = PlaneWaveMode::Homogeneous { a: DMatrix::identity(4, 4) };
        assert!(matches!(plane_wave(&coupled, &hom), Err(CatalogError::BadParameter { .. })));

        let asym = PlaneWaveMode::Homogeneous {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]),
        };
        assert!(matches!(
            plane_wave(&rotation_f(1.0), &asym),
            Err(CatalogError::BadParameter { .. })
        ));

        // the profile may not see the isotropic coordinate slot
        let h_bad = PlaneWaveMode::Generic { h: Expr::coord(3) };
        assert!(matches!(
            plane_wave(&rotation_f(1.0), &h_bad),
            Err(CatalogError::BadParameter { .. })
        ));

        // zero rotation and zero profile still build
        let flatwave = plane_wave(
            &DMatrix::zeros(2, 2),
            &PlaneWaveMode::Generic { h: Expr::constant(0.0) },
        )
        .unwrap();
        assert!(flatwave.s_entries.is_none());
    }

    #[test]
    fn walker_chart_has_parallel_isotropic_vector() {
        let spec = build("walker", &no_overrides()).unwrap();
        let u_ix = spec.dim - 1;
        let mut p0 = vec![Expr::constant(0.0); spec.dim];
        p0[0] = Expr::constant(1.0);
        for x in sampled_points(&spec, 12, "walker") {
            let pd = at_point(&spec, &x).unwrap();
            let (p0v, dp0) = connection::vector_jets(&p0, &x, &spec.param_values).unwrap();
            let lc = nabla_vector(&pd.conn, Part::LeviCivita, &p0v, &dp0).amax();
            assert!(lc < 1e-12, "p0 fails to be parallel: {lc} at {x:?}");
            let flat = pd.mv.lower(&p0v);
            for m in 0..spec.dim {
                let want = if m == u_ix { 1.0 } else { 0.0 };
                assert!((flat[m] - want).abs() < 1e-12, "p0 flat is not du at {x:?}");
            }
        }
    }

    #[test]
    fn walker_constructor_validations() {
        let base = flat_riemannian("x", 2, 8.0);
        let h = Expr::constant(0.0);
        assert!(matches!(
            walker(&base, &h, (0.0, 4.0)),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            walker(&base, &h, (-1.0, 2.0)),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            walker(&crate::chart::minkowski(2), &h, (0.5, 4.0)),
            Err(CatalogError::BadParameter { .. })
        ));
        // profile indices beyond (x1, x2, u)
        assert!(matches!(
            walker(&base, &Expr::coord(3), (0.5, 4.0)),
            Err(CatalogError::BadParameter { .. })
        ));
    }

    #[test]
    fn degenerate_isotropic_chart_checks() {
        let spec = build("deg_isotropic_walker", &no_overrides()).unwrap();
        for x in sampled_points(&spec, 10, "deg_walker") {
            let pd = at_point(&spec, &x).unwrap();
            assert!(pd.nabla_xi(Part::Full).unwrap().amax() < 1e-9);
            let ns = pd
                .nabla_s(Part::Full)
                .unwrap()
                .iter()
                .map(|m| m.max_abs())
                .fold(0.0, f64::max);
            assert!(ns < 1e-9, "skew derivative {ns} at {x:?}");
            assert!(parallel_torsion_residual(&pd) < 1e-9);
            let s = &pd.s.as_ref().unwrap().0;
            assert!(form_norm2(&pd.mv, s).abs() < 1e-12);

            // the realized torsion decomposes back into the declared pair
            let parts = decompose_torsion(&pd.mv, &pd.torsion_closed_form());
            assert!(parts.q.max_abs() < 1e-10, "leftover part {}", parts.q.max_abs());
            let u = x[3];
            let want_xi = [1.0 / u, 0.0, 0.0, 0.0];
            for k in 0..4 {
                assert!((parts.xi[k] - want_xi[k]).abs() < 1e-10);
            }
            assert!(parts.s.max_abs_diff(s) < 1e-10);
        }
    }

    #[test]
    fn isotropic_data_verification_catches_a_wrong_potential() {
        let base = flat_riemannian("x", 2, 8.0);
        let mut data = walker_data(&base, &Expr::constant(0.0), (0.5, 4.0), vec![]).unwrap();
        data.phi = Expr::coord(3); // should be log(u)
        assert!(matches!(deg_isotropic(&data), Err(CatalogError::Precondition { .. })));
    }

    #[test]
    fn nondeg_product_chart_checks() {
        let spec = build("nondeg_product", &no_overrides()).unwrap();
        assert_eq!(spec.dim, 5);
        for x in sampled_points(&spec, 15, "nondeg") {
            let pd = at_point(&spec, &x).unwrap();
            assert!(parallel_torsion_residual(&pd) < 1e-9, "torsion derivative at {x:?}");
            let s = &pd.s.as_ref().unwrap().0;
            // |S|^2 = c^2 on this chart, bounded away from zero
            assert!((form_norm2(&pd.mv, s) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn nondeg_product_validations() {
        let factor = flat_riemannian("y", 3, 8.0);
        // zero factor form is rejected
        assert!(matches!(
            nondeg_isotropic_product(&witt2_data(), &factor, &[]),
            Err(CatalogError::BadParameter { .. })
        ));
        let zero = [SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(0.0) }];
        assert!(matches!(
            nondeg_isotropic_product(&witt2_data(), &factor, &zero),
            Err(CatalogError::BadParameter { .. })
        ));
        // coordinate collision
        let clash = flat_riemannian("u", 1, 8.0);
        let vol = [SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(1.0) }];
        let three = flat_riemannian("y", 3, 8.0);
        assert!(nondeg_isotropic_product(&witt2_data(), &three, &vol).is_ok());
        let volc = [SparseFormEntry { idx: [0, 0, 1], expr: Expr::constant(1.0) }];
        assert!(nondeg_isotropic_product(&witt2_data(), &clash, &volc).is_err());
    }

    #[test]
    fn six_dimensional_isotropic_product_over_a_walker_line() {
        // one-dimensional base, then a flat 3d factor
        let base = flat_riemannian("x", 1, 8.0);
        let data = walker_data(&base, &Expr::constant(0.0), (0.5, 4.0), vec![]).unwrap();
        let factor = flat_riemannian("y", 3, 8.0);
        let vol = [SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(1.0) }];
        let spec = nondeg_isotropic_product(&data, &factor, &vol).unwrap();
        assert_eq!(spec.dim, 6);
        for x in sampled_points(&spec, 8, "nondeg6") {
            let pd = at_point(&spec, &x).unwrap();
            assert!(parallel_torsion_residual(&pd) < 1e-9);
        }
    }

    #[test]
    fn lie_point_data_cases() {
        let su2 = lie_point_data("su2").unwrap();
        assert_eq!(su2.dim, 3);
        assert_eq!(su2.tau.get(&[0, 1, 2]), 1.0);
        assert_eq!(su2.tau.get(&[1, 0, 2]), -1.0);
        let id3 = DMatrix::identity(3, 3);
        assert_eq!(sigma_tau(&id3, &su2.tau).max_abs(), 0.0);

        let pair = lie_point_data("su2xsu2").unwrap();
        assert_eq!(pair.dim, 6);
        assert_eq!(pair.tau.get(&[0, 1, 2]), 1.0);
        assert_eq!(pair.tau.get(&[3, 4, 5]), 1.0);
        assert_eq!(pair.tau.get(&[0, 1, 3]), 0.0);
        let id6 = DMatrix::identity(6, 6);
        assert!(sigma_tau(&id6, &pair.tau).max_abs() < 1e-12);

        let flat5 = lie_point_data("abelian(5)").unwrap();
        assert_eq!(flat5.dim, 5);
        assert_eq!(flat5.tau.max_abs(), 0.0);

        assert!(matches!(lie_point_data("so3"), Err(CatalogError::UnknownEntry(_))));
        assert!(matches!(lie_point_data("abelian(0)"), Err(CatalogError::BadParameter { .. })));
        assert!(matches!(lie_point_data("abelian(x)"), Err(CatalogError::BadParameter { .. })));
    }

    #[test]
    fn structure_constants_satisfy_jacobi() {
        for name in ["su2", "su2xsu2", "abelian(4)"] {
            let data = lie_point_data(name).unwrap();
            let n = data.dim;
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for m in 0..n {
                            let mut total = 0.0;
                            for l in 0..n {
                                total += data.bracket.get(i, j, l) * data.bracket.get(l, k, m)
                                    + data.bracket.get(j, k, l) * data.bracket.get(l, i, m)
                                    + data.bracket.get(k, i, l) * data.bracket.get(l, j, m);
                            }
                            worst = worst.max(total.abs());
                        }
                    }
                }
            }
            assert!(worst < 1e-14, "{name} violates the Jacobi identity: {worst}");
        }
    }
}
