//! Coordinate charts with pseudo-Riemannian metrics given by closed-form
//! expressions, plus the pointwise metric data everything else consumes:
//! metric matrix, inverse, first and second coordinate derivatives,
//! signatures, index raising/lowering and Witt frames along isotropic
//! directions.

use crate::expr::{self, EvalError, Expr};
use crate::tensor::{Tensor3, Tensor4};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("metric matrix is degenerate (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    DegenerateMetric { pivot: f64, threshold: f64 },
    #[error("vector is not isotropic: g(p,p) = {0:.3e}")]
    NotIsotropic(f64),
    #[error("vector is numerically zero")]
    ZeroVector,
    #[error("screen complement is not positive definite (candidate norm^2 = {0:.3e})")]
    BadScreen(f64),
    #[error("could not complete a Witt frame: only {found} of {needed} screen vectors")]
    IncompleteFrame { found: usize, needed: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid chart data: {0}")]
    Invalid(String),
}

/// One stored component of a totally antisymmetric (0,3) field,
/// indices strictly increasing.
#[derive(Debug, Clone)]
pub struct SparseFormEntry {
    pub idx: [usize; 3],
    pub expr: Expr,
}

/// A chart: coordinates, bound parameters, metric components (upper triangle,
/// missing entries are zero), optional torsion data (vectorial generator `xi`
/// as a contravariant vector, skew part `s` as a lowered 3-form), a sampling
/// box per coordinate, and an optional list of check ids to run against it.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    pub dim: usize,
    pub coords: Vec<String>,
    pub param_names: Vec<String>,
    pub param_values: Vec<f64>,
    metric: Vec<Option<Expr>>,
    pub xi: Option<Vec<Expr>>,
    pub s_entries: Option<Vec<SparseFormEntry>>,
    pub domain: Vec<(f64, f64)>,
    pub manifest: Option<Vec<String>>,
}

impl MetricSpec {
    /// Builds and validates a spec from parts. `metric` lists (i, j, expr)
    /// components; (i, j) and (j, i) may not both appear.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        param_names: Vec<String>,
        param_values: Vec<f64>,
        metric: Vec<(usize, usize, Expr)>,
        xi: Option<Vec<Expr>>,
        s_entries: Option<Vec<SparseFormEntry>>,
        domain: Vec<(f64, f64)>,
        manifest: Option<Vec<String>>,
    ) -> Result<MetricSpec, GeometryError> {
        let dim = coords.len();
        if dim == 0 {
            return Err(GeometryError::Invalid("chart needs at least one coordinate".into()));
        }
        if param_names.len() != param_values.len() {
            return Err(GeometryError::Invalid("parameter names and values differ in length".into()));
        }
        for c in &coords {
            if param_names.contains(c) {
                return Err(GeometryError::Invalid(format!(
                    "symbol '{c}' is both a coordinate and a parameter"
                )));
            }
        }
        if domain.len() != dim {
            return Err(GeometryError::Dimension { expected: dim, got: domain.len() });
        }
        for (k, (lo, hi)) in domain.iter().enumerate() {
            if !(lo < hi) {
                return Err(GeometryError::Invalid(format!(
                    "empty domain box on coordinate '{}': [{lo}, {hi}]",
                    coords[k]
                )));
            }
        }
        let mut tri: Vec<Option<Expr>> = vec![None; dim * dim];
        for (i, j, e) in metric {
            if i >= dim || j >= dim {
                return Err(GeometryError::Dimension { expected: dim, got: i.max(j) + 1 });
            }
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            if tri[a * dim + b].is_some() {
                return Err(GeometryError::Invalid(format!(
                    "metric component ({a},{b}) given more than once"
                )));
            }
            tri[a * dim + b] = Some(e);
        }
        if let Some(v) = &xi {
            if v.len() != dim {
                return Err(GeometryError::Dimension { expected: dim, got: v.len() });
            }
        }
        if let Some(entries) = &s_entries {
            for e in entries {
                let [i, j, k] = e.idx;
                if !(i < j && j < k) {
                    return Err(GeometryError::Invalid(format!(
                        "skew-form entry indices must be strictly increasing, got ({i},{j},{k})"
                    )));
                }
                if k >= dim {
                    return Err(GeometryError::Dimension { expected: dim, got: k + 1 });
                }
            }
        }
        Ok(MetricSpec {
            name: name.into(),
            dim,
            coords,
            param_names,
            param_values,
            metric: tri,
            xi,
            s_entries,
            domain,
            manifest,
        })
    }

    /// The stored expression for component (i, j), honoring symmetry.
    pub fn metric_expr(&self, i: usize, j: usize) -> Option<&Expr> {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.metric[a * self.dim + b].as_ref()
    }

    /// Upper-triangle components as (i, j, expr) with i <= j, for serialization.
    pub fn metric_entries(&self) -> Vec<(usize, usize, &Expr)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i..self.dim {
                if let Some(e) = &self.metric[i * self.dim + j] {
                    out.push((i, j, e));
                }
            }
        }
        out
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names.iter().position(|n| n == name).map(|i| self.param_values[i])
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim
            && point
                .iter()
                .zip(&self.domain)
                .all(|(x, (lo, hi))| x.is_finite() && *lo <= *x && *x <= *hi)
    }

    /// Metric matrix, inverse and coordinate derivatives at a point, all from
    /// exact expression jets.
    pub fn metric_at(&self, point: &[f64]) -> Result<MetricValue, GeometryError> {
        if point.len() != self.dim {
            return Err(GeometryError::Dimension { expected: self.dim, got: point.len() });
        }
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        let mut dg = Tensor3::zeros(n);
        let mut d2g = Tensor4::zeros(n);
        for i in 0..n {
            for j in i..n {
                if let Some(e) = &self.metric[i * n + j] {
                    let jet = expr::eval_jet2(e, point, &self.param_values)?;
                    g[(i, j)] = jet.value;
                    g[(j, i)] = jet.value;
                    for k in 0..n {
                        dg.set(i, j, k, jet.grad[k]);
                        dg.set(j, i, k, jet.grad[k]);
                        for l in 0..n {
                            d2g.set(i, j, k, l, jet.hess[(k, l)]);
                            d2g.set(j, i, k, l, jet.hess[(k, l)]);
                        }
                    }
                }
            }
        }
        let g_inv = invert_pivoted(&g)?;
        Ok(MetricValue { g, g_inv, dg, d2g })
    }

    /// Counts of (negative, zero, positive) eigenvalues of the metric at the
    /// point. Zero means within 1e-10 of the spectral scale.
    pub fn signature_at(&self, point: &[f64]) -> Result<(usize, usize, usize), GeometryError> {
        if point.len() != self.dim {
            return Err(GeometryError::Dimension { expected: self.dim, got: point.len() });
        }
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                if let Some(e) = &self.metric[i * n + j] {
                    let v = expr::eval_value(e, point, &self.param_values)?;
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
        }
        let eig = g.symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = 1e-10 * scale.max(1e-300);
        let mut counts = (0, 0, 0);
        for v in eig.iter() {
            if v.abs() <= tol {
                counts.1 += 1;
            } else if *v < 0.0 {
                counts.0 += 1;
            } else {
                counts.2 += 1;
            }
        }
        Ok(counts)
    }

    /// True when the signature at the point is Lorentzian
    /// (exactly one negative eigenvalue, no null ones).
    pub fn is_lorentzian_at(&self, point: &[f64]) -> Result<bool, GeometryError> {
        let (neg, zero, pos) = self.signature_at(point)?;
        Ok(neg == 1 && zero == 0 && pos == self.dim - 1)
    }

    /// Values of the vectorial torsion generator at a point, if declared.
    pub fn xi_at(&self, point: &[f64]) -> Result<Option<DVector<f64>>, GeometryError> {
        match &self.xi {
            None => Ok(None),
            Some(exprs) => {
                let mut v = DVector::zeros(self.dim);
                for (i, e) in exprs.iter().enumerate() {
                    v[i] = expr::eval_value(e, point, &self.param_values)?;
                }
                Ok(Some(v))
            }
        }
    }

    /// Values of the lowered skew torsion 3-form at a point, if declared.
    pub fn s_at(&self, point: &[f64]) -> Result<Option<crate::tensor::MultiForm>, GeometryError> {
        match &self.s_entries {
            None => Ok(None),
            Some(entries) => {
                let mut f = crate::tensor::MultiForm::zeros(self.dim, 3);
                for e in entries {
                    let v = expr::eval_value(&e.expr, point, &self.param_values)?;
                    f.set_antisym(&[e.idx[0], e.idx[1], e.idx[2]], v);
                }
                Ok(Some(f))
            }
        }
    }

    /// Builds a Witt frame (p, e_1..e_n, q) at the point along the isotropic
    /// vector `p`: g(p,q) = 1, g(q,q) = 0, screen vectors g-orthonormal and
    /// orthogonal to both p and q. Construction is deterministic: candidates
    /// are coordinate basis vectors in order.
    pub fn witt_frame_at(&self, point: &[f64], p: &DVector<f64>) -> Result<WittFrame, GeometryError> {
        let mv = self.metric_at(point)?;
        let g = &mv.g;
        let n = self.dim;
        let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let p_inf = p.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if p_inf == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        let gpp = (p.transpose() * g * p)[(0, 0)];
        if gpp.abs() > 1e-10 * scale * p_inf * p_inf {
            return Err(GeometryError::NotIsotropic(gpp));
        }
        let gp = g * p; // lowered p
        // first coordinate direction not g-orthogonal to p
        let w_idx = (0..n)
            .find(|&i| gp[i].abs() > 1e-8 * scale * p_inf)
            .ok_or(GeometryError::ZeroVector)?;
        let mut w = DVector::zeros(n);
        w[w_idx] = 1.0 / gp[w_idx];
        let gww = (w.transpose() * g * &w)[(0, 0)];
        let q = &w - p * (0.5 * gww);

        let gq = g * &q;
        let mut screen: Vec<DVector<f64>> = Vec::with_capacity(n.saturating_sub(2));
        for i in 0..n {
            if screen.len() + 2 == n {
                break;
            }
            let mut u = DVector::zeros(n);
            u[i] = 1.0;
            // project out the isotropic pair, then the screen collected so far
            let cu_q = gq.dot(&u);
            let cu_p = gp.dot(&u);
            u -= p * cu_q;
            u -= &q * cu_p;
            for e in &screen {
                let c = (e.transpose() * g * &u)[(0, 0)];
                u -= e * c;
            }
            let nrm2 = (u.transpose() * g * &u)[(0, 0)];
            if nrm2.abs() <= 1e-8 * scale {
                continue;
            }
            if nrm2 < 0.0 {
                return Err(GeometryError::BadScreen(nrm2));
            }
            screen.push(u / nrm2.sqrt());
        }
        if screen.len() + 2 != n {
            return Err(GeometryError::IncompleteFrame { found: screen.len(), needed: n - 2 });
        }
        Ok(WittFrame { p: p.clone(), screen, q, g: g.clone() })
    }
}

/// Pointwise metric data: matrix, inverse, and coordinate derivatives.
/// Layouts: `dg[(i,j,k)]` = d_k g_ij, `d2g[(i,j,k,l)]` = d_k d_l g_ij.
#[derive(Debug, Clone)]
pub struct MetricValue {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub dg: Tensor3,
    pub d2g: Tensor4,
}

impl MetricValue {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Index lowering: v^i -> g_ij v^j.
    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    /// Index raising: w_i -> g^ij w_j.
    pub fn raise(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.g_inv * w
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.g * b)[(0, 0)]
    }
}

/// Witt frame p, e_1..e_n, q at a point, together with the chart metric there.
#[derive(Debug, Clone)]
pub struct WittFrame {
    pub p: DVector<f64>,
    pub screen: Vec<DVector<f64>>,
    pub q: DVector<f64>,
    pub g: DMatrix<f64>,
}

impl WittFrame {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Frame vectors in order p, e_1..e_n, q.
    pub fn vectors(&self) -> Vec<&DVector<f64>> {
        let mut v = vec![&self.p];
        v.extend(self.screen.iter());
        v.push(&self.q);
        v
    }

    /// Largest deviation of the frame Gram matrix from the standard Witt
    /// Gram matrix (g(p,q) = 1, screen orthonormal, all else zero).
    pub fn gram_defect(&self) -> f64 {
        let vs = self.vectors();
        let n = vs.len();
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let inner = (vs[i].transpose() * &self.g * vs[j])[(0, 0)];
                let expected = expected_witt_gram(n, i, j);
                defect = defect.max((inner - expected).abs());
            }
        }
        defect
    }
}

/// Standard Witt Gram entry for basis order p, e_1..e_n, q.
pub fn expected_witt_gram(dim: usize, i: usize, j: usize) -> f64 {
    let last = dim - 1;
    if (i == 0 && j == last) || (i == last && j == 0) {
        1.0
    } else if i == j && i != 0 && i != last {
        1.0
    } else {
        0.0
    }
}

/// Matrix inverse by Gauss-Jordan elimination with partial pivoting.
/// Fails when any pivot falls below 1e-12 times the largest input entry.
pub fn invert_pivoted(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let scale = m.iter().fold(0.0_f64, |mx, v| mx.max(v.abs())).max(1e-300);
    let threshold = 1e-12 * scale;
    let mut a = m.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[(r, col)].abs() > a[(piv, col)].abs() {
                piv = r;
            }
        }
        let pval = a[(piv, col)];
        if pval.abs() <= threshold {
            return Err(GeometryError::DegenerateMetric { pivot: pval.abs(), threshold });
        }
        if piv != col {
            a.swap_rows(piv, col);
            inv.swap_rows(piv, col);
        }
        let d = a[(col, col)];
        for c in 0..n {
            a[(col, c)] /= d;
            inv[(col, c)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f != 0.0 {
                for c in 0..n {
                    a[(r, c)] -= f * a[(col, c)];
                    inv[(r, c)] -= f * inv[(col, c)];
                }
            }
        }
    }
    Ok(inv)
}

/// Flat Minkowski chart of the given dimension, signature (-, +, .., +),
/// coordinates x0..x{dim-1}, box [-5, 5] on each axis.
pub fn minkowski(dim: usize) -> MetricSpec {
    let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let mut metric = Vec::new();
    metric.push((0, 0, Expr::constant(-1.0)));
    for i in 1..dim {
        metric.push((i, i, Expr::constant(1.0)));
    }
    MetricSpec::new(
        "minkowski",
        coords,
        vec![],
        vec![],
        metric,
        None,
        None,
        vec![(-5.0, 5.0); dim],
        Some(vec!["lorentzian_signature".into(), "metric_compatibility".into()]),
    )
    .expect("static chart data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn kundt_style_spec() -> MetricSpec {
        let coords = vec!["v".to_string(), "x".to_string(), "u".to_string()];
        let params = vec!["a".to_string()];
        let pc: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
        let cc: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
        let metric = vec![
            (0, 2, parse("1", &cc, &pc).unwrap()),
            (1, 1, parse("1", &cc, &pc).unwrap()),
            (1, 2, parse("a*v", &cc, &pc).unwrap()),
            (2, 2, parse("-2*v*exp(-a*x) + sin(x)*u", &cc, &pc).unwrap()),
        ];
        MetricSpec::new(
            "kundt3-test",
            coords,
            params,
            vec![1.0],
            metric,
            None,
            None,
            vec![(-6.0, 6.0), (-2.0, 2.0), (-6.0, 6.0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn minkowski_values() {
        let spec = minkowski(4);
        let mv = spec.metric_at(&[0.3, -1.0, 2.0, 0.1]).unwrap();
        assert_eq!(mv.g[(0, 0)], -1.0);
        assert_eq!(mv.g[(1, 1)], 1.0);
        assert_eq!(mv.g[(0, 1)], 0.0);
        assert_eq!(mv.g_inv[(0, 0)], -1.0);
        assert_eq!(mv.dg.max_abs(), 0.0);
        assert_eq!(spec.signature_at(&[0.0; 4]).unwrap(), (1, 0, 3));
    }

    #[test]
    fn isotropic_chart_values_at_point() {
        let spec = kundt_style_spec();
        let mv = spec.metric_at(&[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(mv.g[(0, 2)], 1.0);
        assert_eq!(mv.g[(1, 1)], 1.0);
        assert_eq!(mv.g[(1, 2)], 1.0);
        assert_eq!(mv.g[(2, 2)], -2.0);
        // g * g_inv = identity
        let id = &mv.g * &mv.g_inv;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-12);
            }
        }
        // independently derived signature: det = -1, mixed second invariant
        assert_eq!(spec.signature_at(&[1.0, 0.0, 2.0]).unwrap(), (1, 0, 2));
    }

    #[test]
    fn degenerate_metric_detected() {
        let coords = vec!["x".to_string(), "y".to_string()];
        let metric = vec![(0, 0, Expr::constant(1.0))]; // second row identically zero
        let spec = MetricSpec::new(
            "degenerate",
            coords,
            vec![],
            vec![],
            metric,
            None,
            None,
            vec![(-1.0, 1.0); 2],
            None,
        )
        .unwrap();
        assert!(matches!(
            spec.metric_at(&[0.0, 0.0]).unwrap_err(),
            GeometryError::DegenerateMetric { .. }
        ));
    }

    #[test]
    fn null_direction_counts() {
        let coords = vec!["x".to_string(), "y".to_string()];
        let metric = vec![(1, 1, Expr::constant(1.0))];
        let spec = MetricSpec::new(
            "half-degenerate",
            coords,
            vec![],
            vec![],
            metric,
            None,
            None,
            vec![(-1.0, 1.0); 2],
            None,
        )
        .unwrap();
        assert_eq!(spec.signature_at(&[0.0, 0.0]).unwrap(), (0, 1, 1));
    }

    #[test]
    fn lower_and_raise_witt_plane() {
        let coords = vec!["v".to_string(), "u".to_string()];
        let metric = vec![(0, 1, Expr::constant(1.0))];
        let spec = MetricSpec::new(
            "witt2",
            coords,
            vec![],
            vec![],
            metric,
            None,
            None,
            vec![(-1.0, 1.0); 2],
            None,
        )
        .unwrap();
        let mv = spec.metric_at(&[0.0, 0.0]).unwrap();
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let low = mv.lower(&v);
        assert_eq!((low[0], low[1]), (0.0, 1.0));
        let back = mv.raise(&low);
        assert_eq!((back[0], back[1]), (1.0, 0.0));
    }

    #[test]
    fn witt_frame_on_minkowski() {
        let spec = minkowski(4);
        let p = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let frame = spec.witt_frame_at(&[0.0; 4], &p).unwrap();
        assert!(frame.gram_defect() < 1e-10, "gram defect {}", frame.gram_defect());
        assert_eq!(frame.screen.len(), 2);
    }

    #[test]
    fn witt_frame_on_curved_chart() {
        let spec = kundt_style_spec();
        let pt = [0.7, -0.4, 1.3];
        // p = exp(-a x) d_v is isotropic for this chart
        let p = DVector::from_vec(vec![(0.4_f64).exp(), 0.0, 0.0]);
        let frame = spec.witt_frame_at(&pt, &p).unwrap();
        assert!(frame.gram_defect() < 1e-10, "gram defect {}", frame.gram_defect());
    }

    #[test]
    fn witt_frame_rejects_non_isotropic() {
        let spec = minkowski(4);
        let p = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            spec.witt_frame_at(&[0.0; 4], &p).unwrap_err(),
            GeometryError::NotIsotropic(_)
        ));
        let z = DVector::zeros(4);
        assert!(matches!(
            spec.witt_frame_at(&[0.0; 4], &z).unwrap_err(),
            GeometryError::ZeroVector
        ));
    }

    #[test]
    fn spec_validation_errors() {
        let coords = vec!["x".to_string()];
        // empty box
        assert!(MetricSpec::new(
            "bad",
            coords.clone(),
            vec![],
            vec![],
            vec![(0, 0, Expr::constant(1.0))],
            None,
            None,
            vec![(1.0, 1.0)],
            None,
        )
        .is_err());
        // duplicate component
        assert!(MetricSpec::new(
            "bad",
            vec!["x".into(), "y".into()],
            vec![],
            vec![],
            vec![(0, 1, Expr::constant(1.0)), (1, 0, Expr::constant(2.0))],
            None,
            None,
            vec![(-1.0, 1.0); 2],
            None,
        )
        .is_err());
        // skew entry with non-increasing indices
        assert!(MetricSpec::new(
            "bad",
            vec!["x".into(), "y".into(), "z".into()],
            vec![],
            vec![],
            vec![(0, 0, Expr::constant(1.0)), (1, 1, Expr::constant(1.0)), (2, 2, Expr::constant(1.0))],
            None,
            Some(vec![SparseFormEntry { idx: [0, 1, 1], expr: Expr::constant(1.0) }]),
            vec![(-1.0, 1.0); 3],
            None,
        )
        .is_err());
    }
}
