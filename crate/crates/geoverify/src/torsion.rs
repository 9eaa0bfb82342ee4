//! Pointwise torsion algebra: splitting a torsion tensor into vectorial,
//! totally skew and residual parts, the quadratic 4-form sigma built from a
//! skew 3-form, the differential identities tying sigma to exterior and
//! covariant derivatives, the parallel-torsion curvature identity, and norms.

use crate::chart::MetricValue;
use crate::connection::{
    exterior_derivative, nabla_form3, nabla_tensor3, ConnectionValue, Part, PointData,
};
use crate::tensor::{perm_sign, MultiForm, Tensor3, Tensor4};
use nalgebra::{DMatrix, DVector};

/// Components of a torsion tensor T_ijl (antisymmetric in i,j) under the
/// orthogonal splitting into a vector part, a totally skew part, and a
/// remainder with vanishing traces and vanishing cyclic sum.
#[derive(Debug, Clone)]
pub struct TorsionParts {
    /// Contravariant generator of the vector part.
    pub xi: DVector<f64>,
    /// Totally skew part as a lowered 3-form.
    pub s: MultiForm,
    /// Remainder, same layout as the input torsion.
    pub q: Tensor3,
}

/// Splits a lowered torsion tensor. The vector part is recovered from the
/// trace g^il T_ijl = -(d-1) xi_j, the skew part is a third of the cyclic
/// sum, and the remainder is whatever is left.
pub fn decompose_torsion(mv: &MetricValue, t: &Tensor3) -> TorsionParts {
    let n = mv.dim();
    let mut xil = DVector::zeros(n);
    for j in 0..n {
        let mut tr = 0.0;
        for i in 0..n {
            for l in 0..n {
                tr += mv.g_inv[(i, l)] * t.get(i, j, l);
            }
        }
        xil[j] = -tr / (n as f64 - 1.0);
    }
    let xi = mv.raise(&xil);

    let mut s = MultiForm::zeros(n, 3);
    for tuple in MultiForm::increasing_tuples(n, 3) {
        let (i, j, l) = (tuple[0], tuple[1], tuple[2]);
        let cyc = t.get(i, j, l) + t.get(j, l, i) + t.get(l, i, j);
        s.set_antisym(&tuple, cyc / 3.0);
    }

    let mut q = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let vec_part = xil[i] * mv.g[(j, l)] - xil[j] * mv.g[(i, l)];
                q.set(i, j, l, t.get(i, j, l) - vec_part - s.get(&[i, j, l]));
            }
        }
    }
    TorsionParts { xi, s, q }
}

/// Rebuilds the torsion tensor from its parts.
pub fn recompose_torsion(mv: &MetricValue, parts: &TorsionParts) -> Tensor3 {
    let n = mv.dim();
    let xil = mv.lower(&parts.xi);
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                t.set(
                    i,
                    j,
                    l,
                    xil[i] * mv.g[(j, l)] - xil[j] * mv.g[(i, l)]
                        + parts.s.get(&[i, j, l])
                        + parts.q.get(i, j, l),
                );
            }
        }
    }
    t
}

/// Largest of the two metric traces of a torsion-shaped tensor; both vanish
/// on the remainder part of a decomposition.
pub fn trace_residual(mv: &MetricValue, t: &Tensor3) -> f64 {
    let n = mv.dim();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut tr13 = 0.0; // slots 1 and 3
        let mut tr23 = 0.0; // slots 2 and 3
        for i in 0..n {
            for l in 0..n {
                tr13 += mv.g_inv[(i, l)] * t.get(i, j, l);
                tr23 += mv.g_inv[(i, l)] * t.get(j, i, l);
            }
        }
        worst = worst.max(tr13.abs()).max(tr23.abs());
    }
    worst
}

/// Largest cyclic sum T_ijl + T_jli + T_lij; vanishes on the remainder part.
pub fn cyclic_residual(t: &Tensor3) -> f64 {
    let n = t.dim;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                worst = worst.max((t.get(i, j, l) + t.get(j, l, i) + t.get(l, i, j)).abs());
            }
        }
    }
    worst
}

/// One component of sigma_tau(X,Y,Z,V) = cyc_XYZ tau(tau(X,Y)#, Z, V)
/// on coordinate vectors, with the middle contraction through g^{-1}.
pub fn sigma_component(
    g_inv: &DMatrix<f64>,
    tau: &MultiForm,
    x: usize,
    y: usize,
    z: usize,
    v: usize,
) -> f64 {
    let n = tau.dim;
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            let w = g_inv[(a, b)];
            if w == 0.0 {
                continue;
            }
            s += w
                * (tau.get(&[x, y, b]) * tau.get(&[a, z, v])
                    + tau.get(&[y, z, b]) * tau.get(&[a, x, v])
                    + tau.get(&[z, x, b]) * tau.get(&[a, y, v]));
        }
    }
    s
}

/// The quadratic 4-form sigma_tau, assembled on increasing index tuples.
pub fn sigma_tau(g_inv: &DMatrix<f64>, tau: &MultiForm) -> MultiForm {
    let n = tau.dim;
    let mut out = MultiForm::zeros(n, 4);
    for t in MultiForm::increasing_tuples(n, 4) {
        out.set_antisym(&t, sigma_component(g_inv, tau, t[0], t[1], t[2], t[3]));
    }
    out
}

/// Every component of sigma_tau with no antisymmetry assumed; comparing this
/// against the form built on increasing tuples certifies that the cyclic
/// construction really is alternating.
pub fn sigma_tau_dense(g_inv: &DMatrix<f64>, tau: &MultiForm) -> Tensor4 {
    let n = tau.dim;
    let mut out = Tensor4::zeros(n);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for v in 0..n {
                    out.set(x, y, z, v, sigma_component(g_inv, tau, x, y, z, v));
                }
            }
        }
    }
    out
}

/// Action of an endomorphism on an alternating form:
/// (L . w)(X_1..X_k) = -sum_i w(X_1, .., L X_i, .., X_k).
/// Matrix layout lam[(c, i)] = component c of L(d_i).
pub fn form_action(lam: &DMatrix<f64>, omega: &MultiForm) -> MultiForm {
    let n = omega.dim;
    let k = omega.rank;
    let mut out = MultiForm::zeros(n, k);
    let mut idx = vec![0usize; k];
    for tuple in MultiForm::increasing_tuples(n, k) {
        let mut v = 0.0;
        for pos in 0..k {
            idx.copy_from_slice(&tuple);
            for c in 0..n {
                idx[pos] = c;
                let w = lam[(c, tuple[pos])];
                if w != 0.0 {
                    v -= w * omega.get(&idx);
                }
            }
        }
        out.set_antisym(&tuple, v);
    }
    out
}

/// The endomorphism Y -> (tau(X, Y, .))# for a fixed vector X.
pub fn tau_endomorphism(g_inv: &DMatrix<f64>, tau: &MultiForm, x: &DVector<f64>) -> DMatrix<f64> {
    let n = tau.dim;
    let mut out = DMatrix::zeros(n, n);
    for y in 0..n {
        for c in 0..n {
            let mut v = 0.0;
            for w in 0..n {
                if x[w] == 0.0 {
                    continue;
                }
                for b in 0..n {
                    v += x[w] * g_inv[(c, b)] * tau.get(&[w, y, b]);
                }
            }
            out[(c, y)] = v;
        }
    }
    out
}

/// The fixed-first-slot slice w(i,j,k) = omega(x,i,j,k) of a 4-form,
/// itself an alternating 3-form.
pub fn slice_first(omega: &MultiForm, x: usize) -> MultiForm {
    let n = omega.dim;
    let mut out = MultiForm::zeros(n, 3);
    for tuple in MultiForm::increasing_tuples(n, 3) {
        out.set_antisym(&tuple, omega.get(&[x, tuple[0], tuple[1], tuple[2]]));
    }
    out
}

/// Pointwise residuals of the identities tying a skew 3-form tau to the
/// connection nabla = nabla^g + (1/2) tau#:
///
///   four_form_defect  sigma built densely deviates from full antisymmetry
///   action_residual   (tau(X) . tau) + sigma(X,.,.,.)
///   dt1_residual      d tau - [cyc_XYZ (nabla_X tau)(Y,Z,V)
///                              - (nabla_V tau)(X,Y,Z) + 2 sigma(X,Y,Z,V)]
///   dt2_residual      nabla tau - [nabla^g tau - (1/2) sigma]
///
/// plus the plain maxima that feed the equivalence-of-conditions checks.
#[derive(Debug, Clone)]
pub struct SkewPointResiduals {
    pub four_form_defect: f64,
    pub action_residual: f64,
    pub dt1_residual: f64,
    pub dt2_residual: f64,
    pub nabla_tau: f64,
    pub nabla_g_tau: f64,
    pub dtau: f64,
    pub sigma: f64,
}

/// Evaluates all skew-torsion identities at one point. `tau` and `dtau` are
/// the form values and per-direction coordinate derivatives there; the
/// chart's own vectorial generator, if any, plays no role here.
pub fn skew_point_residuals(
    pd: &PointData,
    tau: &MultiForm,
    dtau: &[MultiForm],
) -> SkewPointResiduals {
    let n = pd.conn.dim;
    let mv = &pd.mv;

    let sigma = sigma_tau(&mv.g_inv, tau);
    let dense = sigma_tau_dense(&mv.g_inv, tau);
    let mut four_form_defect: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for v in 0..n {
                    four_form_defect = four_form_defect
                        .max((dense.get(x, y, z, v) - sigma.get(&[x, y, z, v])).abs());
                }
            }
        }
    }

    let mut action_residual: f64 = 0.0;
    for x in 0..n {
        let mut ex = DVector::zeros(n);
        ex[x] = 1.0;
        let lam = tau_endomorphism(&mv.g_inv, tau, &ex);
        let acted = form_action(&lam, tau);
        let slice = slice_first(&sigma, x);
        action_residual = action_residual.max(acted.add(&slice).max_abs());
    }

    // connection with contorsion (1/2) tau#, independent of the chart's xi
    let skew_conn = with_half_skew(&pd.conn, mv, tau);
    let nab_tau = nabla_form3(&skew_conn, Part::Full, tau, dtau);
    let nab_g_tau = nabla_form3(&pd.conn, Part::LeviCivita, tau, dtau);
    let dta = exterior_derivative(dtau);

    let mut dt2_residual: f64 = 0.0;
    for m in 0..n {
        let slice = slice_first(&sigma, m);
        let rhs = nab_g_tau[m].add(&slice.scale(-0.5));
        dt2_residual = dt2_residual.max(nab_tau[m].max_abs_diff(&rhs));
    }

    let mut dt1_residual: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for v in 0..n {
                    let lhs = dta.get(&[x, y, z, v]);
                    let rhs = nab_tau[x].get(&[y, z, v])
                        + nab_tau[y].get(&[z, x, v])
                        + nab_tau[z].get(&[x, y, v])
                        - nab_tau[v].get(&[x, y, z])
                        + 2.0 * sigma.get(&[x, y, z, v]);
                    dt1_residual = dt1_residual.max((lhs - rhs).abs());
                }
            }
        }
    }

    SkewPointResiduals {
        four_form_defect,
        action_residual,
        dt1_residual,
        dt2_residual,
        nabla_tau: nab_tau.iter().map(|f| f.max_abs()).fold(0.0, f64::max),
        nabla_g_tau: nab_g_tau.iter().map(|f| f.max_abs()).fold(0.0, f64::max),
        dtau: dta.max_abs(),
        sigma: sigma.max_abs(),
    }
}

/// Copy of the connection with its contorsion replaced by (1/2) tau#.
fn with_half_skew(conn: &ConnectionValue, mv: &MetricValue, tau: &MultiForm) -> ConnectionValue {
    let n = conn.dim;
    let mut out = conn.clone();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                out.a_low.set(i, j, l, 0.5 * tau.get(&[i, j, l]));
            }
            for k in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += mv.g_inv[(k, l)] * 0.5 * tau.get(&[i, j, l]);
                }
                out.a_up.set(i, j, k, v);
            }
        }
    }
    // derivative pieces are not used by consumers of this copy
    out
}

/// Aggregated maxima of the four quantities entering the equivalence of
/// parallelism conditions, and the booleans they induce at a threshold.
#[derive(Debug, Clone, Copy)]
pub struct ParallelismVerdict {
    /// nabla tau = 0 and d tau = 0
    pub closed_parallel: bool,
    /// nabla tau = 0 and sigma = 0
    pub sigma_parallel: bool,
    /// nabla^g tau = 0 and sigma = 0
    pub riemannian_parallel: bool,
}

impl ParallelismVerdict {
    pub fn from_maxima(
        nabla_tau: f64,
        nabla_g_tau: f64,
        dtau: f64,
        sigma: f64,
        threshold: f64,
    ) -> ParallelismVerdict {
        ParallelismVerdict {
            closed_parallel: nabla_tau < threshold && dtau < threshold,
            sigma_parallel: nabla_tau < threshold && sigma < threshold,
            riemannian_parallel: nabla_g_tau < threshold && sigma < threshold,
        }
    }

    /// The three conditions are provably equivalent; disagreement flags
    /// either a numerical problem or a broken implementation.
    pub fn agree(&self) -> bool {
        self.closed_parallel == self.sigma_parallel
            && self.sigma_parallel == self.riemannian_parallel
    }
}

/// Covariant derivative of the full torsion under the full connection,
/// largest component. Zero exactly when both generators are parallel.
pub fn parallel_torsion_residual(pd: &PointData) -> f64 {
    let (t, dt) = pd.torsion_with_derivs();
    nabla_tensor3(&pd.conn, Part::Full, &t, &dt).max_abs()
}

/// Residual of the first curvature identity for connections with parallel
/// torsion: for all coordinate triples,
///
///   cyc R(X,Y)Z = cyc S(S(X,Y)#, Z)# + cyc g(X,xi) S(Y,Z)# + cyc S(Y,Z,xi) X
///
/// with cyclic sums over (X,Y,Z). Meaningful only when the chart's torsion
/// is parallel for the full connection.
pub fn bianchi_residual(pd: &PointData, r_up: &Tensor4) -> f64 {
    let n = pd.conn.dim;
    let mv = &pd.mv;
    let zero_v = DVector::zeros(n);
    let zero_s = MultiForm::zeros(n, 3);
    let xi = pd.xi.as_ref().map(|(v, _)| v).unwrap_or(&zero_v);
    let s = pd.s.as_ref().map(|(f, _)| f).unwrap_or(&zero_s);
    let xil = mv.lower(xi);

    // s_up[(l, i*n+j)] = component l of S(d_i, d_j)#
    let mut s_up = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut v = 0.0;
                for b in 0..n {
                    v += mv.g_inv[(l, b)] * s.get(&[i, j, b]);
                }
                s_up[(i * n + j) * n + l] = v;
            }
        }
    }
    // s_xi[i*n+j] = S(d_i, d_j, xi#)... = S_ijb xi^b contracted on the last slot
    let mut s_xi = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            for b in 0..n {
                v += s.get(&[i, j, b]) * xi[b];
            }
            s_xi[i * n + j] = v;
        }
    }

    let term = |x: usize, y: usize, z: usize, l: usize| -> f64 {
        // S(S(X,Y)#, Z)^l + g(X,xi) S(Y,Z)^l + S(Y,Z,xi) delta_x^l
        let mut v = 0.0;
        for c in 0..n {
            v += s_up[(x * n + y) * n + c] * s_up[(c * n + z) * n + l];
        }
        v += xil[x] * s_up[(y * n + z) * n + l];
        if l == x {
            v += s_xi[y * n + z];
        }
        v
    };

    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs =
                        r_up.get(i, j, k, l) + r_up.get(j, k, i, l) + r_up.get(k, i, j, l);
                    let rhs = term(i, j, k, l) + term(j, k, i, l) + term(k, i, j, l);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

/// Metric square norm of an alternating form, one term per increasing tuple
/// (equivalently the full contraction divided by rank factorial). Indefinite
/// metrics make this signed.
pub fn form_norm2(mv: &MetricValue, f: &MultiForm) -> f64 {
    let n = mv.dim();
    let k = f.rank;
    // raises every slot of the component on `tuple`; depth is rank <= 4
    fn raise_rec(
        mv: &MetricValue,
        f: &MultiForm,
        tuple: &[usize],
        slot: usize,
        idx: &mut Vec<usize>,
        weight: f64,
        acc: &mut f64,
    ) {
        let n = mv.dim();
        if slot == tuple.len() {
            *acc += weight * f.get(idx);
            return;
        }
        for c in 0..n {
            let w = mv.g_inv[(tuple[slot], c)];
            if w != 0.0 {
                idx[slot] = c;
                raise_rec(mv, f, tuple, slot + 1, idx, weight * w, acc);
            }
        }
    }
    let mut total = 0.0;
    let mut raised_idx = vec![0usize; k];
    for tuple in MultiForm::increasing_tuples(n, k) {
        let mut raised = 0.0;
        raise_rec(mv, f, &tuple, 0, &mut raised_idx, 1.0, &mut raised);
        total += f.get(&tuple) * raised;
    }
    total
}

/// Full-contraction square norm of a rank-3 tensor, no combinatorial factor.
pub fn tensor3_norm2(mv: &MetricValue, t: &Tensor3) -> f64 {
    let n = mv.dim();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                if t.get(i, j, l) == 0.0 {
                    continue;
                }
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            total += t.get(i, j, l)
                                * mv.g_inv[(i, a)]
                                * mv.g_inv[(j, b)]
                                * mv.g_inv[(l, c)]
                                * t.get(a, b, c);
                        }
                    }
                }
            }
        }
    }
    total
}

/// Sign of the permutation; re-exported adapter kept close to the torsion
/// algebra that uses it most.
pub fn tuple_sign(idx: &[usize]) -> i32 {
    perm_sign(idx)
}
