//! Connection coefficients and curvature at a point.
//!
//! The connections handled here differ from Levi-Civita by a contorsion built
//! from a vector field `xi` and a totally skew 3-form `S`:
//!
//!   nabla_X Y = nabla^g_X Y + g(X,Y) xi - g(xi,Y) X + (1/2) S(X,Y)#
//!
//! where # raises the free index with the metric. Lowered contorsion
//! A_ijl = g_ij xi_l - xi_j g_il + (1/2) S_ijl is antisymmetric in (j,l), so
//! the full connection is still metric. Its torsion in lowered form is
//! T_ijl = xi_i g_jl - xi_j g_il + S_ijl.
//!
//! Index layout conventions used throughout:
//!   gamma.get(i,j,k)      Gamma^k_ij, derivative direction first
//!   dgamma.get(m,i,j,k)   d_m Gamma^k_ij
//!   r_up.get(i,j,k,l)     component along dx^l of R(d_i,d_j)d_k
//!   r_low.get(i,j,k,l)    g(R(d_i,d_j)d_k, d_l)

use crate::chart::{GeometryError, MetricSpec, MetricValue};
use crate::expr::{self, EvalError, Expr};
use crate::tensor::{MultiForm, Tensor3, Tensor4, Tensor5};
use nalgebra::{DMatrix, DVector};

/// Which connection to use: the metric's Levi-Civita connection or the full
/// one including the contorsion from the chart's torsion data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    LeviCivita,
    Full,
}

/// Connection coefficients and their first coordinate derivatives at a point.
/// The contorsion pieces are zero tensors when the chart declares no torsion.
#[derive(Debug, Clone)]
pub struct ConnectionValue {
    pub dim: usize,
    /// Levi-Civita coefficients, get(i,j,k) = Gamma^k_ij.
    pub gamma: Tensor3,
    /// d_m Gamma^k_ij at get(m,i,j,k).
    pub dgamma: Tensor4,
    /// Lowered contorsion, get(i,j,l) = A_ijl.
    pub a_low: Tensor3,
    /// Raised contorsion, get(i,j,k) = A^k_ij.
    pub a_up: Tensor3,
    /// d_m A^k_ij at get(m,i,j,k).
    pub da_up: Tensor4,
}

impl ConnectionValue {
    /// Coefficient of the selected connection.
    #[inline]
    pub fn coeff(&self, part: Part, i: usize, j: usize, k: usize) -> f64 {
        match part {
            Part::LeviCivita => self.gamma.get(i, j, k),
            Part::Full => self.gamma.get(i, j, k) + self.a_up.get(i, j, k),
        }
    }

    /// Coordinate derivative d_m of the selected coefficient.
    #[inline]
    pub fn dcoeff(&self, part: Part, m: usize, i: usize, j: usize, k: usize) -> f64 {
        match part {
            Part::LeviCivita => self.dgamma.get(m, i, j, k),
            Part::Full => self.dgamma.get(m, i, j, k) + self.da_up.get(m, i, j, k),
        }
    }
}

/// Levi-Civita coefficients and their coordinate derivatives from pointwise
/// metric data. Returns (gamma, dgamma).
pub fn christoffels(mv: &MetricValue) -> (Tensor3, Tensor4) {
    let n = mv.dim();
    let dginv = inverse_derivative(mv);
    let mut low = Tensor3::zeros(n); // (1/2)(d_i g_jl + d_j g_il - d_l g_ij)
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let v = 0.5 * (mv.dg.get(j, l, i) + mv.dg.get(i, l, j) - mv.dg.get(i, j, l));
                low.set(i, j, l, v);
            }
        }
    }
    let mut gamma = Tensor3::zeros(n);
    let mut dgamma = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += mv.g_inv[(k, l)] * low.get(i, j, l);
                }
                gamma.set(i, j, k, v);
                for m in 0..n {
                    let mut d = 0.0;
                    for l in 0..n {
                        // d_m of the lowered symbol, from second metric jets
                        let dlow = 0.5
                            * (mv.d2g.get(j, l, i, m) + mv.d2g.get(i, l, j, m)
                                - mv.d2g.get(i, j, l, m));
                        d += dginv.get(k, l, m) * low.get(i, j, l) + mv.g_inv[(k, l)] * dlow;
                    }
                    dgamma.set(m, i, j, k, d);
                }
            }
        }
    }
    (gamma, dgamma)
}

/// d_m g^ij from d g^{-1} = -g^{-1} (d g) g^{-1}; layout get(i,j,m).
fn inverse_derivative(mv: &MetricValue) -> Tensor3 {
    let n = mv.dim();
    let mut out = Tensor3::zeros(n);
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        v -= mv.g_inv[(i, a)] * mv.dg.get(a, b, m) * mv.g_inv[(b, j)];
                    }
                }
                out.set(i, j, m, v);
            }
        }
    }
    out
}

/// Everything needed at one chart point: metric data, connection
/// coefficients, and first jets of the torsion generators.
#[derive(Debug, Clone)]
pub struct PointData {
    pub point: Vec<f64>,
    pub mv: MetricValue,
    pub conn: ConnectionValue,
    /// (values, derivatives) of the contravariant generator;
    /// dxi[(k,m)] = d_m xi^k.
    pub xi: Option<(DVector<f64>, DMatrix<f64>)>,
    /// (values, per-direction coordinate derivatives) of the skew 3-form.
    pub s: Option<(MultiForm, Vec<MultiForm>)>,
}

/// Evaluates metric, connection and torsion jets at a chart point.
pub fn at_point(spec: &MetricSpec, point: &[f64]) -> Result<PointData, GeometryError> {
    let mv = spec.metric_at(point)?;
    let n = spec.dim;
    let (gamma, dgamma) = christoffels(&mv);

    let xi = match &spec.xi {
        None => None,
        Some(exprs) => Some(vector_jets(exprs, point, &spec.param_values)?),
    };
    let s = match &spec.s_entries {
        None => None,
        Some(entries) => {
            let pairs: Vec<([usize; 3], &Expr)> = entries.iter().map(|e| (e.idx, &e.expr)).collect();
            Some(form3_jets(&pairs, n, point, &spec.param_values)?)
        }
    };

    let zero_v = DVector::zeros(n);
    let zero_dv = DMatrix::zeros(n, n);
    let zero_s = MultiForm::zeros(n, 3);
    let zero_ds = vec![MultiForm::zeros(n, 3); n];
    let (xi_v, dxi) = xi.as_ref().map(|(v, d)| (v, d)).unwrap_or((&zero_v, &zero_dv));
    let (s_v, ds) = s
        .as_ref()
        .map(|(v, d)| (v, d.as_slice()))
        .unwrap_or((&zero_s, zero_ds.as_slice()));
    let (a_low, a_up, da_up) = contorsion(&mv, xi_v, dxi, s_v, ds);

    let conn = ConnectionValue { dim: n, gamma, dgamma, a_low, a_up, da_up };
    Ok(PointData { point: point.to_vec(), mv, conn, xi, s })
}

/// Contorsion tensors from torsion generator jets:
/// A_ijl = g_ij xi_l - xi_j g_il + (1/2) S_ijl with xi lowered.
fn contorsion(
    mv: &MetricValue,
    xi: &DVector<f64>,
    dxi: &DMatrix<f64>,
    s: &MultiForm,
    ds: &[MultiForm],
) -> (Tensor3, Tensor3, Tensor4) {
    let n = mv.dim();
    let xil = mv.lower(xi);
    // d_m (g xi)_j
    let mut dxil = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for m in 0..n {
            let mut v = 0.0;
            for c in 0..n {
                v += mv.dg.get(j, c, m) * xi[c] + mv.g[(j, c)] * dxi[(c, m)];
            }
            dxil[(j, m)] = v;
        }
    }
    let dginv = inverse_derivative(mv);

    let mut a_low = Tensor3::zeros(n);
    let mut da_low = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                a_low.set(
                    i,
                    j,
                    l,
                    mv.g[(i, j)] * xil[l] - xil[j] * mv.g[(i, l)] + 0.5 * s.get(&[i, j, l]),
                );
                for m in 0..n {
                    let v = mv.dg.get(i, j, m) * xil[l] + mv.g[(i, j)] * dxil[(l, m)]
                        - dxil[(j, m)] * mv.g[(i, l)]
                        - xil[j] * mv.dg.get(i, l, m)
                        + 0.5 * ds[m].get(&[i, j, l]);
                    da_low.set(m, i, j, l, v);
                }
            }
        }
    }

    let mut a_up = Tensor3::zeros(n);
    let mut da_up = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += mv.g_inv[(k, l)] * a_low.get(i, j, l);
                }
                a_up.set(i, j, k, v);
                for m in 0..n {
                    let mut d = 0.0;
                    for l in 0..n {
                        d += dginv.get(k, l, m) * a_low.get(i, j, l)
                            + mv.g_inv[(k, l)] * da_low.get(m, i, j, l);
                    }
                    da_up.set(m, i, j, k, d);
                }
            }
        }
    }
    (a_low, a_up, da_up)
}

/// Values and first derivatives of a contravariant vector field given by
/// expressions; dv[(k,m)] = d_m v^k.
pub fn vector_jets(
    exprs: &[Expr],
    point: &[f64],
    params: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>), EvalError> {
    let n = exprs.len();
    let mut v = DVector::zeros(n);
    let mut dv = DMatrix::zeros(n, point.len());
    for (k, e) in exprs.iter().enumerate() {
        let jet = expr::eval_jet2(e, point, params)?;
        v[k] = jet.value;
        for m in 0..point.len() {
            dv[(k, m)] = jet.grad[m];
        }
    }
    Ok((v, dv))
}

/// Values and first derivatives of a sparse alternating 3-form field.
/// Returns (form, per-direction derivative forms).
pub fn form3_jets(
    entries: &[([usize; 3], &Expr)],
    dim: usize,
    point: &[f64],
    params: &[f64],
) -> Result<(MultiForm, Vec<MultiForm>), EvalError> {
    let mut f = MultiForm::zeros(dim, 3);
    let mut df = vec![MultiForm::zeros(dim, 3); dim];
    for (idx, e) in entries {
        let jet = expr::eval_jet2(e, point, params)?;
        f.set_antisym(idx, jet.value);
        for m in 0..dim {
            df[m].set_antisym(idx, jet.grad[m]);
        }
    }
    Ok((f, df))
}

/// Covariant derivative of a vector field from its jets:
/// out[(k,m)] = (nabla_m v)^k = d_m v^k + Gamma~^k_mc v^c.
pub fn nabla_vector(
    conn: &ConnectionValue,
    part: Part,
    v: &DVector<f64>,
    dv: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = conn.dim;
    let mut out = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let mut val = dv[(k, m)];
            for c in 0..n {
                val += conn.coeff(part, m, c, k) * v[c];
            }
            out[(k, m)] = val;
        }
    }
    out
}

/// Covariant derivative of an alternating 3-form from its jets:
/// out[m] = nabla_m tau, each an alternating 3-form.
pub fn nabla_form3(
    conn: &ConnectionValue,
    part: Part,
    tau: &MultiForm,
    dtau: &[MultiForm],
) -> Vec<MultiForm> {
    let n = conn.dim;
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let mut nm = MultiForm::zeros(n, 3);
        for tuple in MultiForm::increasing_tuples(n, 3) {
            let (i, j, k) = (tuple[0], tuple[1], tuple[2]);
            let mut v = dtau[m].get(&[i, j, k]);
            for c in 0..n {
                v -= conn.coeff(part, m, i, c) * tau.get(&[c, j, k])
                    + conn.coeff(part, m, j, c) * tau.get(&[i, c, k])
                    + conn.coeff(part, m, k, c) * tau.get(&[i, j, c]);
            }
            nm.set_antisym(&[i, j, k], v);
        }
        out.push(nm);
    }
    out
}

/// Covariant derivative of a (0,3) tensor from its values and coordinate
/// derivatives dt.get(m,i,j,l) = d_m t_ijl; out.get(m,i,j,l) = (nabla_m t)_ijl.
pub fn nabla_tensor3(conn: &ConnectionValue, part: Part, t: &Tensor3, dt: &Tensor4) -> Tensor4 {
    let n = conn.dim;
    let mut out = Tensor4::zeros(n);
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = dt.get(m, i, j, l);
                    for c in 0..n {
                        v -= conn.coeff(part, m, i, c) * t.get(c, j, l)
                            + conn.coeff(part, m, j, c) * t.get(i, c, l)
                            + conn.coeff(part, m, l, c) * t.get(i, j, c);
                    }
                    out.set(m, i, j, l, v);
                }
            }
        }
    }
    out
}

impl PointData {
    /// Torsion of the full connection by antisymmetrizing coefficients,
    /// lowered: T_ijl = g_lk (Gamma~^k_ij - Gamma~^k_ji).
    pub fn torsion_from_coefficients(&self) -> Tensor3 {
        let n = self.conn.dim;
        let mut out = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for k in 0..n {
                        v += self.mv.g[(l, k)]
                            * (self.conn.coeff(Part::Full, i, j, k)
                                - self.conn.coeff(Part::Full, j, i, k));
                    }
                    out.set(i, j, l, v);
                }
            }
        }
        out
    }

    /// Lowered torsion from the generators directly:
    /// T_ijl = xi_i g_jl - xi_j g_il + S_ijl.
    pub fn torsion_closed_form(&self) -> Tensor3 {
        let n = self.conn.dim;
        let zero_v = DVector::zeros(n);
        let xi = self.xi.as_ref().map(|(v, _)| v).unwrap_or(&zero_v);
        let xil = self.mv.lower(xi);
        let mut out = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = xil[i] * self.mv.g[(j, l)] - xil[j] * self.mv.g[(i, l)];
                    if let Some((s, _)) = &self.s {
                        v += s.get(&[i, j, l]);
                    }
                    out.set(i, j, l, v);
                }
            }
        }
        out
    }

    /// Lowered torsion plus its coordinate derivatives, both analytic;
    /// returns (T, dT) with dT.get(m,i,j,l) = d_m T_ijl.
    pub fn torsion_with_derivs(&self) -> (Tensor3, Tensor4) {
        let n = self.conn.dim;
        let t = self.torsion_closed_form();
        let zero_v = DVector::zeros(n);
        let zero_dv = DMatrix::zeros(n, n);
        let (xi, dxi) = self
            .xi
            .as_ref()
            .map(|(v, d)| (v, d))
            .unwrap_or((&zero_v, &zero_dv));
        let xil = self.mv.lower(xi);
        let mut dxil = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for m in 0..n {
                let mut v = 0.0;
                for c in 0..n {
                    v += self.mv.dg.get(j, c, m) * xi[c] + self.mv.g[(j, c)] * dxi[(c, m)];
                }
                dxil[(j, m)] = v;
            }
        }
        let mut dt = Tensor4::zeros(n);
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let mut v = dxil[(i, m)] * self.mv.g[(j, l)]
                            + xil[i] * self.mv.dg.get(j, l, m)
                            - dxil[(j, m)] * self.mv.g[(i, l)]
                            - xil[j] * self.mv.dg.get(i, l, m);
                        if let Some((_, ds)) = &self.s {
                            v += ds[m].get(&[i, j, l]);
                        }
                        dt.set(m, i, j, l, v);
                    }
                }
            }
        }
        (t, dt)
    }

    /// Covariant derivative of the metric, get(m,i,j) = (nabla_m g)_ij.
    /// Vanishes identically for both connection parts; nonzero values expose
    /// assembly errors.
    pub fn nabla_metric(&self, part: Part) -> Tensor3 {
        let n = self.conn.dim;
        let mut out = Tensor3::zeros(n);
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = self.mv.dg.get(i, j, m);
                    for c in 0..n {
                        v -= self.conn.coeff(part, m, i, c) * self.mv.g[(c, j)]
                            + self.conn.coeff(part, m, j, c) * self.mv.g[(i, c)];
                    }
                    out.set(m, i, j, v);
                }
            }
        }
        out
    }

    /// Covariant derivative of the chart's generator vector field, if any;
    /// out[(k,m)] = (nabla_m xi)^k.
    pub fn nabla_xi(&self, part: Part) -> Option<DMatrix<f64>> {
        self.xi
            .as_ref()
            .map(|(v, dv)| nabla_vector(&self.conn, part, v, dv))
    }

    /// Covariant derivative of the chart's skew 3-form, if any.
    pub fn nabla_s(&self, part: Part) -> Option<Vec<MultiForm>> {
        self.s
            .as_ref()
            .map(|(s, ds)| nabla_form3(&self.conn, part, s, ds))
    }
}

/// Curvature tensors of the selected connection; see module docs for layout.
/// R^l_kij = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik.
pub fn curvature(conn: &ConnectionValue, mv: &MetricValue, part: Part) -> (Tensor4, Tensor4) {
    let n = conn.dim;
    let mut r_up = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = conn.dcoeff(part, i, j, k, l) - conn.dcoeff(part, j, i, k, l);
                    for m in 0..n {
                        v += conn.coeff(part, i, m, l) * conn.coeff(part, j, k, m)
                            - conn.coeff(part, j, m, l) * conn.coeff(part, i, k, m);
                    }
                    r_up.set(i, j, k, l, v);
                }
            }
        }
    }
    let mut r_low = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        v += r_up.get(i, j, k, m) * mv.g[(m, l)];
                    }
                    r_low.set(i, j, k, l, v);
                }
            }
        }
    }
    (r_up, r_low)
}

/// Covariant derivative of the curvature tensor of the selected connection.
/// The coordinate derivative of R is taken by central differences with the
/// given step; connection corrections are analytic at the center point.
/// Layout: out.get(m,i,j,k,l) = (nabla_m R)^l_kij.
pub fn fd_nabla_curvature(
    spec: &MetricSpec,
    point: &[f64],
    part: Part,
    step: f64,
) -> Result<Tensor5, GeometryError> {
    let n = spec.dim;
    let center = at_point(spec, point)?;
    let (r_up, _) = curvature(&center.conn, &center.mv, part);

    let mut dr = Tensor5::zeros(n);
    let mut shifted = point.to_vec();
    for m in 0..n {
        shifted[m] = point[m] + step;
        let plus = at_point(spec, &shifted)?;
        let (r_plus, _) = curvature(&plus.conn, &plus.mv, part);
        shifted[m] = point[m] - step;
        let minus = at_point(spec, &shifted)?;
        let (r_minus, _) = curvature(&minus.conn, &minus.mv, part);
        shifted[m] = point[m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let fd = (r_plus.get(i, j, k, l) - r_minus.get(i, j, k, l)) / (2.0 * step);
                        dr.set(m, i, j, k, l, fd);
                    }
                }
            }
        }
    }

    let mut out = Tensor5::zeros(n);
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = dr.get(m, i, j, k, l);
                        for c in 0..n {
                            v += center.conn.coeff(part, m, c, l) * r_up.get(i, j, k, c)
                                - center.conn.coeff(part, m, k, c) * r_up.get(i, j, c, l)
                                - center.conn.coeff(part, m, i, c) * r_up.get(c, j, k, l)
                                - center.conn.coeff(part, m, j, c) * r_up.get(i, c, k, l);
                        }
                        out.set(m, i, j, k, l, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exterior derivative of an alternating form from its per-direction
/// coordinate derivatives: (d w)_{i0..ir} = sum_m (-1)^m d_{i_m} w_{..without i_m..}.
pub fn exterior_derivative(dform: &[MultiForm]) -> MultiForm {
    let dim = dform.len();
    assert!(dim > 0);
    let rank = dform[0].rank;
    let mut out = MultiForm::zeros(dim, rank + 1);
    for tuple in MultiForm::increasing_tuples(dim, rank + 1) {
        let mut v = 0.0;
        for (pos, &m) in tuple.iter().enumerate() {
            let rest: Vec<usize> = tuple
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != pos)
                .map(|(_, &x)| x)
                .collect();
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            v += sign * dform[m].get(&rest);
        }
        out.set_antisym(&tuple, v);
    }
    out
}
