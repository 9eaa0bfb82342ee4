//! Pointwise Lie-algebra toolkit for the Lorentz algebra so(1, n+1) in a
//! fixed Witt basis (p, e_1..e_n, q): bivector/matrix identification,
//! stabilizer subalgebras of the isotropic line and vector, derivation
//! actions on multivectors, annihilator subalgebras of 3-vectors, invariant
//! subspace membership checks, and the screen projection.
//!
//! Everything here is plain linear algebra at one point; charts connect to
//! this basis through `MetricSpec::witt_frame_at`.

use crate::chart::{MetricValue, WittFrame};
use crate::tensor::{MultiForm, Tensor3, Tensor4};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LorentzError {
    #[error("matrix is not in stabilizer block shape: entry ({0},{1}) = {2:.3e}")]
    NotStabilizerShape(usize, usize, f64),
    #[error("vector is not orthogonal to p: <p,v> = {0:.3e}")]
    NotPerp(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Gram matrix of the Witt basis (p, e_1..e_n, q):
/// <p,q> = 1, screen orthonormal, everything else zero. Involutive.
pub fn witt_gram_matrix(n: usize) -> DMatrix<f64> {
    let d = n + 2;
    let mut g = DMatrix::zeros(d, d);
    g[(0, d - 1)] = 1.0;
    g[(d - 1, 0)] = 1.0;
    for i in 1..=n {
        g[(i, i)] = 1.0;
    }
    g
}

/// Constant pointwise metric data for the Witt inner product, so that chart
/// utilities (norms, raising) apply verbatim in this basis.
pub fn witt_metric_value(n: usize) -> MetricValue {
    let g = witt_gram_matrix(n);
    MetricValue {
        g_inv: g.clone(), // the Witt Gram matrix is its own inverse
        g,
        dg: Tensor3::zeros(n + 2),
        d2g: Tensor4::zeros(n + 2),
    }
}

/// Element of so(1, n+1) preserving the flag structure of the isotropic
/// direction p, written as the bivector -a p^q + A + p^X. Its matrix in the
/// Witt basis is
///
///   [ a  -X^t   0 ]
///   [ 0    A    X ]
///   [ 0    0   -a ]
///
/// with A the n x n skew screen block.
#[derive(Debug, Clone)]
pub struct LorentzBivector {
    pub n: usize,
    pub a: f64,
    pub so_part: DMatrix<f64>,
    pub x: DVector<f64>,
}

impl LorentzBivector {
    pub fn new(n: usize, a: f64, so_part: DMatrix<f64>, x: DVector<f64>) -> LorentzBivector {
        assert_eq!(so_part.nrows(), n);
        assert_eq!(so_part.ncols(), n);
        assert_eq!(x.len(), n);
        LorentzBivector { n, a, so_part, x }
    }

    pub fn zero(n: usize) -> LorentzBivector {
        LorentzBivector::new(n, 0.0, DMatrix::zeros(n, n), DVector::zeros(n))
    }

    /// Matrix form in the Witt basis.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let d = n + 2;
        let mut m = DMatrix::zeros(d, d);
        m[(0, 0)] = self.a;
        m[(d - 1, d - 1)] = -self.a;
        for i in 0..n {
            m[(0, 1 + i)] = -self.x[i];
            m[(1 + i, d - 1)] = self.x[i];
            for j in 0..n {
                m[(1 + i, 1 + j)] = self.so_part[(i, j)];
            }
        }
        m
    }

    /// Reads (a, A, X) off a matrix in the displayed block shape. Entries
    /// that must vanish or pair up are checked to 1e-12 relative to the
    /// largest entry; the skew and trace structure is then symmetrized so
    /// that exact inputs round-trip exactly.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<LorentzBivector, LorentzError> {
        let d = m.nrows();
        if d < 2 || m.ncols() != d {
            return Err(LorentzError::Dimension { expected: d.max(2), got: m.ncols() });
        }
        let n = d - 2;
        let scale = m.iter().fold(0.0_f64, |mx, v| mx.max(v.abs())).max(1e-300);
        let tol = 1e-12 * scale;
        let nearly = |i: usize, j: usize, want: f64| -> Result<(), LorentzError> {
            if (m[(i, j)] - want).abs() > tol {
                return Err(LorentzError::NotStabilizerShape(i, j, m[(i, j)] - want));
            }
            Ok(())
        };
        for i in 1..d {
            nearly(i, 0, 0.0)?; // first column below the corner
        }
        for j in 0..=n {
            nearly(d - 1, j, 0.0)?; // last row left of the corner
        }
        nearly(0, d - 1, 0.0)?;
        nearly(d - 1, d - 1, -m[(0, 0)])?;
        for i in 0..n {
            // p-row screen entries must mirror the q-column
            nearly(0, 1 + i, -m[(1 + i, d - 1)])?;
            for j in 0..n {
                if (m[(1 + i, 1 + j)] + m[(1 + j, 1 + i)]).abs() > tol {
                    return Err(LorentzError::NotStabilizerShape(
                        1 + i,
                        1 + j,
                        m[(1 + i, 1 + j)] + m[(1 + j, 1 + i)],
                    ));
                }
            }
        }
        let a = 0.5 * (m[(0, 0)] - m[(d - 1, d - 1)]);
        let mut so_part = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                so_part[(i, j)] = 0.5 * (m[(1 + i, 1 + j)] - m[(1 + j, 1 + i)]);
            }
        }
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = m[(1 + i, d - 1)];
        }
        Ok(LorentzBivector::new(n, a, so_part, x))
    }

    /// Action on a vector computed from the bivector expansion
    /// (Y^Z) v = <Y,v> Z - <Z,v> Y; an independent oracle for `matrix`.
    pub fn bivector_action(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let d = n + 2;
        let g = witt_gram_matrix(n);
        let mut p = DVector::zeros(d);
        p[0] = 1.0;
        let mut q = DVector::zeros(d);
        q[d - 1] = 1.0;
        let inner = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &g * b)[(0, 0)];
        // -a p^q part
        let mut out = (&p * inner(&q, v) - &q * inner(&p, v)) * self.a;
        // screen rotation
        for i in 0..n {
            for j in 0..n {
                out[1 + i] += self.so_part[(i, j)] * v[1 + j];
            }
        }
        // p^X part
        let mut xfull = DVector::zeros(d);
        for i in 0..n {
            xfull[1 + i] = self.x[i];
        }
        out += &xfull * inner(&p, v) - &p * inner(&xfull, v);
        out
    }

    /// Largest violation of antisymmetry with respect to the Witt inner
    /// product, max |(GM)^t + GM|.
    pub fn witt_antisymmetry_defect(&self) -> f64 {
        let g = witt_gram_matrix(self.n);
        let m = self.matrix();
        let gm = &g * &m;
        let s = &gm + gm.transpose();
        s.iter().fold(0.0_f64, |mx, v| mx.max(v.abs()))
    }

    pub fn scaled_sum(parts: &[(f64, &LorentzBivector)]) -> LorentzBivector {
        let n = parts.first().map(|(_, b)| b.n).unwrap_or(0);
        let mut out = LorentzBivector::zero(n);
        for (c, b) in parts {
            out.a += c * b.a;
            out.so_part += &b.so_part * *c;
            out.x += &b.x * *c;
        }
        out
    }
}

/// Which flag the subalgebra stabilizes: the isotropic line R p or the
/// isotropic vector p itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizerKind {
    Line,
    Vector,
}

/// Deterministic basis of the stabilizer subalgebra inside so(1, n+1).
/// Line stabilizer: the p^q element, then the so(n) block elements
/// E_ij - E_ji for i < j, then the p^e_i elements; dimension
/// 1 + n(n-1)/2 + n. The vector stabilizer drops the p^q element.
pub fn stabilizer_basis(kind: StabilizerKind, n: usize) -> Vec<LorentzBivector> {
    let mut out = Vec::new();
    if kind == StabilizerKind::Line {
        let mut b = LorentzBivector::zero(n);
        b.a = 1.0;
        out.push(b);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut b = LorentzBivector::zero(n);
            b.so_part[(i, j)] = 1.0;
            b.so_part[(j, i)] = -1.0;
            out.push(b);
        }
    }
    for i in 0..n {
        let mut b = LorentzBivector::zero(n);
        b.x[i] = 1.0;
        out.push(b);
    }
    out
}

/// Derivation action of an endomorphism on a contravariant alternating
/// multivector: L.(v1^..^vk) = sum_i v1^..^(L v_i)^..^vk.
pub fn multivector_action(m: &DMatrix<f64>, t: &MultiForm) -> MultiForm {
    let d = t.dim;
    let k = t.rank;
    let mut out = MultiForm::zeros(d, k);
    let mut idx = vec![0usize; k];
    for tuple in MultiForm::increasing_tuples(d, k) {
        let mut v = 0.0;
        for pos in 0..k {
            idx.copy_from_slice(&tuple);
            for c in 0..d {
                let w = m[(tuple[pos], c)];
                if w != 0.0 {
                    idx[pos] = c;
                    v += w * t.get(&idx);
                }
            }
        }
        out.set_antisym(&tuple, v);
    }
    out
}

/// Null space basis of a rectangular matrix by reduced row echelon form with
/// partial pivoting. Pivots at or below `tol` times the largest entry of the
/// input count as zero. Output is the standard free-column parameterization,
/// deterministic for identical input.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let rows = m.nrows();
    let cols = m.ncols();
    let scale = m.iter().fold(0.0_f64, |mx, v| mx.max(v.abs())).max(1e-300);
    let thresh = tol * scale;
    let mut a = m.clone();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut piv = r;
        for rr in (r + 1)..rows {
            if a[(rr, c)].abs() > a[(piv, c)].abs() {
                piv = rr;
            }
        }
        if a[(piv, c)].abs() <= thresh {
            continue;
        }
        a.swap_rows(piv, r);
        let d = a[(r, c)];
        for cc in 0..cols {
            a[(r, cc)] /= d;
        }
        for rr in 0..rows {
            if rr == r {
                continue;
            }
            let f = a[(rr, c)];
            if f != 0.0 {
                for cc in 0..cols {
                    a[(rr, cc)] -= f * a[(r, cc)];
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::new();
    for f in 0..cols {
        if pivot_cols.contains(&f) {
            continue;
        }
        let mut v = DVector::zeros(cols);
        v[f] = 1.0;
        for &(pr, pc) in &pivots {
            v[pc] = -a[(pr, f)];
        }
        basis.push(v);
    }
    basis
}

/// Basis of the subspace of `subalg`'s span annihilating the 3-vector `tau`
/// under the derivation action. Elimination threshold passed through to the
/// rank decision; 1e-10 is the standard choice here.
pub fn annihilator(
    tau: &MultiForm,
    subalg: &[LorentzBivector],
    tol: f64,
) -> Vec<LorentzBivector> {
    if subalg.is_empty() {
        return Vec::new();
    }
    let n = subalg[0].n;
    let tuples = MultiForm::increasing_tuples(n + 2, tau.rank);
    let mut mat = DMatrix::zeros(tuples.len().max(1), subalg.len());
    for (j, b) in subalg.iter().enumerate() {
        let acted = multivector_action(&b.matrix(), tau);
        for (r, t) in tuples.iter().enumerate() {
            mat[(r, j)] = acted.get(t);
        }
    }
    null_space(&mat, tol)
        .into_iter()
        .map(|c| {
            let parts: Vec<(f64, &LorentzBivector)> =
                c.iter().cloned().zip(subalg.iter()).collect();
            LorentzBivector::scaled_sum(&parts)
        })
        .collect()
}

/// Shape of a 3-vector relative to the distinguished isotropic direction p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Zero,
    /// p ^ (screen 2-vector)
    PWedgeOmega,
    /// p ^ (screen 2-vector) + pure screen 3-vector
    PWedgeOmegaPlusScreen,
    /// anything with a q leg
    Other,
}

/// Classification result with the extracted screen parts (indices relative
/// to the screen subspace, dimension n).
#[derive(Debug, Clone)]
pub struct ShapeParts {
    pub kind: ShapeKind,
    /// Screen 2-vector omega with S = p ^ omega + omega_e.
    pub omega: Option<MultiForm>,
    /// Pure screen 3-vector part.
    pub omega_e: Option<MultiForm>,
}

/// Classifies a contravariant 3-vector in the Witt basis. A component on the
/// q leg (last index) above 1e-10 of the overall scale forces `Other`;
/// otherwise the p-leg part defines omega via omega_ab = S^{0ab} and the
/// pure screen part defines omega_e.
pub fn classify_shape(s: &MultiForm) -> ShapeParts {
    assert_eq!(s.rank, 3);
    let d = s.dim;
    assert!(d >= 2);
    let n = d - 2;
    let scale = s.max_abs();
    if scale == 0.0 {
        return ShapeParts { kind: ShapeKind::Zero, omega: None, omega_e: None };
    }
    let eps = 1e-10 * scale;
    for tuple in MultiForm::increasing_tuples(d, 3) {
        if tuple[2] == d - 1 && s.get(&tuple).abs() > eps {
            return ShapeParts { kind: ShapeKind::Other, omega: None, omega_e: None };
        }
    }
    let mut omega = MultiForm::zeros(n, 2);
    let mut omega_e = MultiForm::zeros(n, 3);
    let mut has_omega = false;
    let mut has_screen = false;
    for tuple in MultiForm::increasing_tuples(d, 3) {
        let v = s.get(&tuple);
        if v == 0.0 {
            continue;
        }
        if tuple[0] == 0 {
            // p-leg component: S^{0ab} = omega_{ab} on screen indices
            omega.set_antisym(&[tuple[1] - 1, tuple[2] - 1], v);
            if v.abs() > eps {
                has_omega = true;
            }
        } else {
            omega_e.set_antisym(&[tuple[0] - 1, tuple[1] - 1, tuple[2] - 1], v);
            if v.abs() > eps {
                has_screen = true;
            }
        }
    }
    let kind = if !has_omega && !has_screen {
        ShapeKind::Zero
    } else if has_screen {
        ShapeKind::PWedgeOmegaPlusScreen
    } else {
        ShapeKind::PWedgeOmega
    };
    ShapeParts {
        kind,
        omega: if has_omega { Some(omega) } else { None },
        omega_e: if has_screen { Some(omega_e) } else { None },
    }
}

/// Lifts a screen multivector (dimension n) into the full Witt space by
/// shifting indices past the leading p slot.
pub fn embed_screen(f: &MultiForm, total_dim: usize) -> MultiForm {
    assert!(f.dim + 2 == total_dim);
    let mut out = MultiForm::zeros(total_dim, f.rank);
    for tuple in MultiForm::increasing_tuples(f.dim, f.rank) {
        let shifted: Vec<usize> = tuple.iter().map(|&i| i + 1).collect();
        out.set_antisym(&shifted, f.get(&tuple));
    }
    out
}

/// True when every generator maps the subspace into itself: for each basis
/// vector v and generator M, the part of M v outside the span stays below
/// 1e-10 relative to its size.
pub fn invariant_subspace_check(gens: &[LorentzBivector], subspace: &[DVector<f64>]) -> bool {
    if subspace.is_empty() {
        return true;
    }
    let d = subspace[0].len();
    // orthonormalize the subspace in the plain euclidean sense; projection
    // residuals are basis-independent
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for v in subspace {
        let mut u = v.clone();
        for e in &ortho {
            let c = e.dot(&u);
            u -= e * c;
        }
        let nrm = u.norm();
        if nrm > 1e-12 {
            ortho.push(u / nrm);
        }
    }
    for g in gens {
        let m = g.matrix();
        assert_eq!(m.nrows(), d);
        for v in subspace {
            let w = &m * v;
            let mut resid = w.clone();
            for e in &ortho {
                let c = e.dot(&resid);
                resid -= e * c;
            }
            if resid.norm() > 1e-10 * (1.0 + w.norm()) {
                return false;
            }
        }
    }
    true
}

/// Coefficients of a p-orthogonal chart vector on the screen part of a Witt
/// frame (the class modulo the p direction). Errors when v is not
/// orthogonal to p.
pub fn screen_project(frame: &WittFrame, v: &DVector<f64>) -> Result<DVector<f64>, LorentzError> {
    let g = &frame.g;
    let gv = g * v;
    let scale = g.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    let vs = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    let gp_v = frame.p.dot(&gv);
    if gp_v.abs() > 1e-10 * scale * vs {
        return Err(LorentzError::NotPerp(gp_v));
    }
    let mut out = DVector::zeros(frame.screen.len());
    for (i, e) in frame.screen.iter().enumerate() {
        out[i] = e.dot(&gv);
    }
    Ok(out)
}
