//! Levi-Civita connection and the extrinsic geometry of `(D, D⊥)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{AltTensor, Variance};
use crate::fields::{d, Chart, Env, FormField, FramedScene, Local, MetricField, ScalarField, VectorField};
use crate::jets::Jet;
use crate::linalg;

/// Default threshold on `‖H⊥‖` defining the open set U.
pub const U_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionAt {
    pub point: Vec<f64>,
    /// `gamma[k][i][j] = Γ^k_{ij}`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
}

/// Metric jets and Christoffel symbols at a point of a scene.
pub struct Geo {
    pub local: Local,
    pub g: Vec<Vec<Jet>>,
    pub g_inv: Vec<Vec<Jet>>,
    pub sqrt_det: Jet,
    pub gamma: Vec<Vec<Vec<Jet>>>,
}

impl Geo {
    pub fn new(scene: &FramedScene, point: &[f64], order: usize) -> Result<Geo> {
        if order < 1 {
            return Err(Error::InsufficientOrder { need: 1, have: order });
        }
        let env = scene.env(point, order)?;
        let g = scene.metric_at(&env)?.ok_or_else(|| Error::Scene("scene has no metric".into()))?;
        let local = scene.local_at(env)?;
        Geo::from_metric(local, g)
    }

    pub fn from_metric(local: Local, g: Vec<Vec<Jet>>) -> Result<Geo> {
        let n = g.len();
        let g_inv = linalg::inverse(&g).map_err(|_| Error::Singular(format!("metric at {:?}", local.point())))?;
        let det = linalg::det(&g)?;
        if det.value() <= 0.0 {
            return Err(Error::Singular(format!("metric at {:?} is not positive definite", local.point())));
        }
        let sqrt_det = det.sqrt()?;
        let dg: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|l| (0..n).map(|i| (0..n).map(|j| g[i][j].derivative(l)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        // first kind: [ij,l] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let proto = dg[0][0][0].zero_like();
        let mut first = vec![vec![vec![proto.clone(); n]; n]; n];
        for i in 0..n {
            for j in 0..=i {
                for l in 0..n {
                    let mut s = dg[i][j][l].clone();
                    s.add_scaled(&dg[j][i][l], 1.0);
                    s.add_scaled(&dg[l][i][j], -1.0);
                    let s = s.scale(0.5);
                    first[i][j][l] = s.clone();
                    first[j][i][l] = s;
                }
            }
        }
        let mut gamma = vec![vec![vec![proto.clone(); n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..=i {
                    let mut s = proto.clone();
                    for l in 0..n {
                        s.add_product(&g_inv[k][l], &first[i][j][l], 1.0);
                    }
                    gamma[k][i][j] = s.clone();
                    gamma[k][j][i] = s;
                }
            }
        }
        Ok(Geo { local, g, g_inv, sqrt_det, gamma })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn q(&self) -> usize {
        self.local.q
    }

    pub fn t(&self) -> &[Vec<Jet>] {
        &self.local.t
    }

    pub fn env(&self) -> &Env {
        &self.local.env
    }

    pub fn dot(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let n = self.dim();
        let mut s = x[0].zero_like();
        for i in 0..n {
            let mut gy = x[0].zero_like();
            for j in 0..n {
                gy.add_product(&self.g[i][j], &y[j], 1.0);
            }
            s.add_product(&x[i], &gy, 1.0);
        }
        s
    }

    /// `X(f)`.
    pub fn apply(&self, x: &[Jet], f: &Jet) -> Result<Jet> {
        let mut s = f.derivative(0)?.zero_like();
        for (i, xi) in x.iter().enumerate() {
            s.add_product(xi, &f.derivative(i)?, 1.0);
        }
        Ok(s)
    }

    /// `∇_X Y`.
    pub fn cov(&self, x: &[Jet], y: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut s = self.apply(x, &y[k])?;
                for i in 0..n {
                    for j in 0..n {
                        let xy = x[i].mul(&y[j]);
                        s.add_product(&self.gamma[k][i][j], &xy, 1.0);
                    }
                }
                Ok(s)
            })
            .collect()
    }

    pub fn bracket(&self, x: &[Jet], y: &[Jet]) -> Result<Vec<Jet>> {
        (0..self.dim()).map(|k| Ok(self.apply(x, &y[k])? - self.apply(y, &x[k])?)).collect()
    }

    /// Orthogonal projection onto D.
    pub fn top(&self, v: &[Jet]) -> Vec<Jet> {
        let mut out = v.to_vec();
        for t in self.t() {
            let c = self.dot(v, t);
            for (o, ti) in out.iter_mut().zip(t) {
                o.add_product(&c, ti, -1.0);
            }
        }
        out
    }

    /// Orthogonal projection onto D⊥.
    pub fn perp(&self, v: &[Jet]) -> Vec<Jet> {
        let top = self.top(v);
        v.iter().zip(&top).map(|(a, b)| a - b).collect()
    }

    pub fn flat(&self, v: &[Jet]) -> AltTensor<Jet> {
        let n = self.dim();
        let comps = (0..n)
            .map(|a| {
                let mut s = v[0].zero_like();
                for b in 0..n {
                    s.add_product(&self.g[a][b], &v[b], 1.0);
                }
                s
            })
            .collect();
        AltTensor::covector(comps)
    }

    /// `(1/√g) ∂_i(√g X^i)`.
    pub fn div(&self, x: &[Jet]) -> Result<Jet> {
        let mut s = self.sqrt_det.derivative(0)?.zero_like();
        for (i, xi) in x.iter().enumerate() {
            s.add_scaled(&self.sqrt_det.mul(xi).derivative(i)?, 1.0);
        }
        s.div(&self.sqrt_det)
    }

    pub fn connection(&self) -> ConnectionAt {
        let vals = |m: &Vec<Vec<Jet>>| m.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
        ConnectionAt {
            point: self.local.point().to_vec(),
            gamma: self.gamma.iter().map(vals).collect(),
            g: vals(&self.g),
            g_inv: vals(&self.g_inv),
        }
    }

    /// `H⊥ = Σ_i (∇_{T_i} T_i)^⊤`.
    pub fn h_perp(&self) -> Result<Vec<Jet>> {
        let n = self.dim();
        let mut acc = vec![self.sqrt_det.derivative(0)?.zero_like(); n];
        for t in self.t() {
            let v = self.cov(t, t)?;
            for (a, b) in acc.iter_mut().zip(&v) {
                a.add_scaled(b, 1.0);
            }
        }
        Ok(self.top(&acc))
    }

    /// Principal normal, `‖H⊥‖` and binormal frame as jets, or `None` outside U.
    pub fn normal_frame(&self, tol: f64) -> Result<Option<NormalFrame>> {
        let h = self.h_perp()?;
        let sq = self.dot(&h, &h);
        if sq.value() <= tol * tol {
            return Ok(None);
        }
        let norm = sq.sqrt()?;
        let inv = norm.recip()?;
        let nv: Vec<Jet> = h.iter().map(|x| x.mul(&inv)).collect();
        let n = self.dim();
        let q = self.q();
        let mut b: Vec<Vec<Jet>> = Vec::new();
        for k in 0..n {
            if b.len() == q {
                break;
            }
            let e: Vec<Jet> = (0..n).map(|i| nv[0].constant_like(if i == k { 1.0 } else { 0.0 })).collect();
            let mut w = self.top(&e);
            for u in std::iter::once(&nv).chain(b.iter()) {
                let c = self.dot(&w, u);
                for (wi, ui) in w.iter_mut().zip(u) {
                    wi.add_product(&c, ui, -1.0);
                }
            }
            let nn = self.dot(&w, &w);
            if nn.value() <= 1e-4 * self.g[k][k].value() {
                continue;
            }
            let s = nn.sqrt()?.recip()?;
            b.push(w.iter().map(|x| x.mul(&s)).collect());
        }
        if b.len() != q {
            return Err(Error::Singular("binormal frame".into()));
        }
        let mut cols: Vec<Vec<f64>> = self.t().iter().map(|v| v.iter().map(Jet::value).collect()).collect();
        cols.push(nv.iter().map(Jet::value).collect());
        cols.extend(b.iter().map(|v| v.iter().map(Jet::value).collect::<Vec<_>>()));
        let orient = linalg::det(&cols)?;
        if orient.abs() < 1e-12 {
            return Err(Error::Singular("degenerate (T, N, B) orientation".into()));
        }
        if orient < 0.0 {
            let last = b.last_mut().unwrap();
            for x in last.iter_mut() {
                *x = x.scale(-1.0);
            }
        }
        Ok(Some(NormalFrame { h, norm, n: nv, b }))
    }
}

pub struct NormalFrame {
    pub h: Vec<Jet>,
    pub norm: Jet,
    pub n: Vec<Jet>,
    pub b: Vec<Vec<Jet>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Frenet {
    pub curvature: f64,
    pub torsion: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtrinsicData {
    pub point: Vec<f64>,
    pub h_perp: Vec<f64>,
    pub h_norm: f64,
    pub in_u: bool,
    pub n: Option<Vec<f64>>,
    pub b: Option<Vec<Vec<f64>>>,
    /// Orthonormal frame of D the tensors below are expressed in:
    /// `(N, B_1..B_q)` on U.
    pub d_frame: Vec<Vec<f64>>,
    /// `h[a][b][i] = ⟨∇_{E_a} E_b, T_i⟩`.
    pub h: Vec<Vec<Vec<f64>>>,
    /// `h_perp_form[i][j] = (∇_{T_i} T_j)^⊤`.
    pub h_perp_form: Vec<Vec<Vec<f64>>>,
    /// `integrability[a][b][i] = ⟨𝒯_{E_a,E_b}, T_i⟩`.
    pub integrability: Vec<Vec<Vec<f64>>>,
    pub frenet: Option<Frenet>,
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

fn dot_f(g: &[Vec<Jet>], x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in 0..y.len() {
            s += g[i][j].value() * x[i] * y[j];
        }
    }
    s
}

/// Extrinsic data of D and D⊥ at a point.
pub fn extrinsic(scene: &FramedScene, point: &[f64]) -> Result<ExtrinsicData> {
    extrinsic_with(scene, point, U_TOL)
}

pub fn extrinsic_with(scene: &FramedScene, point: &[f64], tol: f64) -> Result<ExtrinsicData> {
    let geo = Geo::new(scene, point, 2)?;
    let n = geo.dim();
    let q = geo.q();
    let frame = geo.normal_frame(tol)?;
    let h = geo.h_perp()?;
    let h_norm = geo.dot(&h, &h).value().max(0.0).sqrt();
    let e: Vec<Vec<Jet>> = match &frame {
        Some(f) => std::iter::once(f.n.clone()).chain(f.b.iter().cloned()).collect(),
        None => orthonormal_d_frame(&geo)?,
    };
    let ev: Vec<Vec<f64>> = e.iter().map(|v| values(v)).collect();
    // h_{X,Y}·T_i = −⟨Y, ∇_X T_i⟩ for Y ∈ D.
    let nabla_t: Vec<Vec<Vec<f64>>> = e
        .iter()
        .map(|x| geo.t().iter().map(|t| geo.cov(x, t).map(|v| values(&v))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let hh: Vec<Vec<Vec<f64>>> = (0..e.len())
        .map(|a| (0..e.len()).map(|b| (0..q).map(|i| -dot_f(&geo.g, &ev[b], &nabla_t[a][i])).collect()).collect())
        .collect();
    let integrability = (0..e.len())
        .map(|a| (0..e.len()).map(|b| (0..q).map(|i| 0.5 * (hh[a][b][i] - hh[b][a][i])).collect()).collect())
        .collect();
    let h_perp_form = geo
        .t()
        .iter()
        .map(|ti| geo.t().iter().map(|tj| geo.cov(ti, tj).map(|v| values(&geo.top(&v)))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let frenet = match (&frame, q) {
        (Some(f), 1) => {
            let t = &geo.t()[0];
            let dtn = values(&geo.cov(t, &f.n)?);
            Some(Frenet { curvature: f.norm.value(), torsion: dot_f(&geo.g, &dtn, &values(&f.b[0])) })
        }
        _ => None,
    };
    let _ = n;
    Ok(ExtrinsicData {
        point: point.to_vec(),
        h_perp: values(&h),
        h_norm,
        in_u: frame.is_some(),
        n: frame.as_ref().map(|f| values(&f.n)),
        b: frame.as_ref().map(|f| f.b.iter().map(|v| values(v)).collect()),
        d_frame: ev,
        h: hh,
        h_perp_form,
        integrability,
        frenet,
    })
}

fn orthonormal_d_frame(geo: &Geo) -> Result<Vec<Vec<Jet>>> {
    let n = geo.dim();
    let mut out: Vec<Vec<Jet>> = Vec::new();
    let proto = geo.t()[0][0].zero_like();
    for k in 0..n {
        if out.len() == n - geo.q() {
            break;
        }
        let e: Vec<Jet> = (0..n).map(|i| proto.constant_like(if i == k { 1.0 } else { 0.0 })).collect();
        let mut w = geo.top(&e);
        for u in &out {
            let c = geo.dot(&w, u);
            for (wi, ui) in w.iter_mut().zip(u) {
                wi.add_product(&c, ui, -1.0);
            }
        }
        let nn = geo.dot(&w, &w);
        if nn.value() <= 1e-4 * geo.g[k][k].value() {
            continue;
        }
        let s = nn.sqrt()?.recip()?;
        out.push(w.iter().map(|x| x.mul(&s)).collect());
    }
    Ok(out)
}

/// `η = (−1)^{q−1} (H⊥)♭`.
pub fn eta_metric(scene: &FramedScene, point: &[f64]) -> Result<AltTensor<f64>> {
    let geo = Geo::new(scene, point, 1)?;
    let sign = if geo.q() % 2 == 1 { 1.0 } else { -1.0 };
    Ok(geo.flat(&geo.h_perp()?).values().scale(sign))
}

#[derive(Clone, Debug, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub formula: f64,
    pub direct: f64,
}

impl TableEntry {
    pub fn defect(&self) -> f64 {
        (self.formula - self.direct).abs()
    }
}

/// Values of dη on pairs of `(T, N, B)` by the extrinsic formulas, next to
/// direct evaluation of `d(ι_T dω)`; also `⟨∇_X H⊥, Y⟩ − ⟨∇_Y H⊥, X⟩` on
/// coordinate pairs.
pub fn d_eta_components(scene: &FramedScene, point: &[f64]) -> Result<Vec<TableEntry>> {
    let geo = Geo::new(scene, point, 3)?;
    let q = geo.q();
    let n = geo.dim();
    let fr = geo.normal_frame(U_TOL)?.ok_or(Error::OutsideU { norm: geo.h_perp()?.iter().map(|x| x.value().abs()).fold(0.0, f64::max), point: point.to_vec() })?;
    let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
    let deta = d(&geo.local.eta()?)?.values();
    let ev = |x: &[f64], y: &[f64]| deta.eval(&[x.to_vec(), y.to_vec()]).unwrap();
    let hn = fr.norm.value();
    let nv = values(&fr.n);
    let bv: Vec<Vec<f64>> = fr.b.iter().map(|v| values(v)).collect();
    let tv: Vec<Vec<f64>> = geo.t().iter().map(|v| values(v)).collect();
    let gdot = |x: &[f64], y: &[f64]| dot_f(&geo.g, x, y);
    let nabla = |x: &[Jet], y: &[Jet]| -> Result<Vec<f64>> { Ok(values(&geo.cov(x, y)?)) };
    let mut out = Vec::new();
    let nabla_nn = nabla(&fr.n, &fr.n)?;
    for (i, b) in fr.b.iter().enumerate() {
        let f = hn * gdot(&nabla_nn, &bv[i]) - geo.apply(b, &fr.norm)?.value();
        out.push(TableEntry { name: format!("dη(N,B{})", i + 1), formula: sign * f, direct: ev(&nv, &bv[i]) });
    }
    for (i, t) in geo.t().iter().enumerate() {
        let dtn = nabla(t, &fr.n)?;
        for (j, b) in fr.b.iter().enumerate() {
            let dbn = nabla(b, &fr.n)?;
            let f = hn * (gdot(&dtn, &bv[j]) - gdot(&dbn, &tv[i]));
            out.push(TableEntry { name: format!("dη(T{},B{})", i + 1, j + 1), formula: sign * f, direct: ev(&tv[i], &bv[j]) });
        }
        let f = geo.apply(t, &fr.norm)?.value() - hn * gdot(&nabla_nn, &tv[i]);
        out.push(TableEntry { name: format!("dη(T{},N)", i + 1), formula: sign * f, direct: ev(&tv[i], &nv) });
    }
    for i in 0..q {
        for j in i + 1..q {
            let bt = values(&geo.bracket(&geo.t()[i], &geo.t()[j])?);
            out.push(TableEntry {
                name: format!("dη(T{},T{})", i + 1, j + 1),
                formula: -sign * hn * gdot(&bt, &nv),
                direct: ev(&tv[i], &tv[j]),
            });
            // ⟨[B_i,B_j],N⟩ = ⟨B_i, ∇_{B_j}N⟩ − ⟨B_j, ∇_{B_i}N⟩
            let bb = gdot(&bv[i], &nabla(&fr.b[j], &fr.n)?) - gdot(&bv[j], &nabla(&fr.b[i], &fr.n)?);
            out.push(TableEntry { name: format!("dη(B{},B{})", i + 1, j + 1), formula: -sign * hn * bb, direct: ev(&bv[i], &bv[j]) });
        }
    }
    let h = geo.h_perp()?;
    let unit = |k: usize| -> Vec<Jet> { (0..n).map(|i| h[0].constant_like(if i == k { 1.0 } else { 0.0 })).collect() };
    for a in 0..n {
        for b in a + 1..n {
            let (ea, eb) = (unit(a), unit(b));
            let f = gdot(&nabla(&ea, &h)?, &values(&eb)) - gdot(&nabla(&eb, &h)?, &values(&ea));
            out.push(TableEntry {
                name: format!("dη(∂{},∂{})", a + 1, b + 1),
                formula: sign * f,
                direct: ev(&values(&ea), &values(&eb)),
            });
        }
    }
    Ok(out)
}

/// Integrability of D⊥ or of B at a point, measured by `⟨[T_i,T_j],N⟩` and
/// `⟨[B_i,B_j],N⟩`.
pub fn t00_hypothesis(geo: &Geo, fr: &NormalFrame) -> Result<(f64, f64)> {
    let q = geo.q();
    let nv = values(&fr.n);
    let (mut tt, mut bb) = (0.0f64, 0.0f64);
    for i in 0..q {
        for j in i + 1..q {
            let br = values(&geo.bracket(&geo.t()[i], &geo.t()[j])?);
            tt = tt.max(dot_f(&geo.g, &br, &nv).abs());
            let bi = values(&fr.b[i]);
            let bj = values(&fr.b[j]);
            let x = dot_f(&geo.g, &bi, &values(&geo.cov(&fr.b[j], &fr.n)?)) - dot_f(&geo.g, &bj, &values(&geo.cov(&fr.b[i], &fr.n)?));
            bb = bb.max(x.abs());
        }
    }
    Ok((tt, bb))
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub point: Vec<f64>,
    pub h_norm: f64,
    /// `M_ij = ⟨∇_{T_i}N, B_j⟩ − ⟨h_{B_j,N}, T_i⟩`.
    pub matrix: Vec<Vec<f64>>,
    pub a1: Vec<Vec<f64>>,
    pub a2: Vec<Vec<f64>>,
    pub formula: f64,
    pub sigma_form: f64,
    pub direct: f64,
}

/// Signed factor relating `(η∧(dη)^q)(T,N,B)` to `‖H⊥‖^{q+1} det M`.
pub fn density_factor(q: usize) -> f64 {
    let fact: f64 = (1..=q).map(|k| k as f64).product();
    let pf = if (q * (q - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    -fact * pf
}

/// `(η∧(dη)^q)(T,N,B)` from the extrinsic determinant formula, its
/// σ-invariant form, and by direct evaluation.
pub fn gv_density_metric(scene: &FramedScene, point: &[f64]) -> Result<DensityReport> {
    let geo = Geo::new(scene, point, 2)?;
    let q = geo.q();
    let fr = geo
        .normal_frame(U_TOL)?
        .ok_or(Error::OutsideU { norm: geo.dot(&geo.h_perp()?, &geo.h_perp()?).value().max(0.0).sqrt(), point: point.to_vec() })?;
    let (tt, bb) = t00_hypothesis(&geo, &fr)?;
    if tt.min(bb) > 1e-8 {
        return Err(Error::Hypothesis(format!("neither D⊥ nor B is integrable at {point:?} ({tt:e}, {bb:e})")));
    }
    let nv = values(&fr.n);
    let bv: Vec<Vec<f64>> = fr.b.iter().map(|v| values(v)).collect();
    let tv: Vec<Vec<f64>> = geo.t().iter().map(|v| values(v)).collect();
    let mut a1 = vec![vec![0.0; q]; q];
    let mut a2 = vec![vec![0.0; q]; q];
    for i in 0..q {
        let dtn = values(&geo.cov(&geo.t()[i], &fr.n)?);
        for j in 0..q {
            let dbn = values(&geo.cov(&fr.b[j], &fr.n)?);
            a1[i][j] = dot_f(&geo.g, &dtn, &bv[j]);
            a2[i][j] = -dot_f(&geo.g, &dbn, &tv[i]);
        }
    }
    let m: Vec<Vec<f64>> = (0..q).map(|i| (0..q).map(|j| a1[i][j] + a2[i][j]).collect()).collect();
    let hn = fr.norm.value();
    let scale = density_factor(q) * hn.powi(q as i32 + 1);
    let formula = scale * linalg::det(&m)?;
    let sigma_form = scale
        * (0..=q).map(|k| sigma_invariants(&[a1.clone(), a2.clone()], &[k, q - k])).sum::<Result<f64>>()?;
    let mut args = tv.clone();
    args.push(nv);
    args.extend(bv);
    let direct = density_form(&geo.local)?.values().eval(&args)?;
    Ok(DensityReport { point: point.to_vec(), h_norm: hn, matrix: m, a1, a2, formula, sigma_form, direct })
}

/// `η∧(dη)^q` at a point from the scene's jets.
pub fn density_form(local: &Local) -> Result<AltTensor<Jet>> {
    let eta = local.eta()?;
    let deta = d(&eta)?;
    eta.wedge(&deta.wedge_power(local.q)?)
}

/// Coefficient of `t^λ` in `det(I + Σ_k t_k A_k)`.
pub fn sigma_invariants(a: &[Vec<Vec<f64>>], lambda: &[usize]) -> Result<f64> {
    let nv = a.len();
    if nv == 0 || lambda.len() != nv {
        return Err(Error::Dimension("one exponent per matrix required".into()));
    }
    let m = a[0].len();
    if a.iter().any(|x| x.len() != m || x.iter().any(|r| r.len() != m)) {
        return Err(Error::Dimension("matrices must be square of equal size".into()));
    }
    if lambda.iter().sum::<usize>() > m {
        return Ok(0.0);
    }
    let t: Vec<Jet> = (0..nv).map(|k| Jet::variable(0.0, k, nv, m)).collect();
    let mat: Vec<Vec<Jet>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = Jet::constant(if i == j { 1.0 } else { 0.0 }, nv, m);
                    for k in 0..nv {
                        s.add_scaled(&t[k], a[k][i][j]);
                    }
                    s
                })
                .collect()
        })
        .collect();
    Ok(linalg::det(&mat)?.coeff(lambda))
}

/// `(−1)^{q−1}` scaled `‖H⊥‖·(dη)^q(T,B)`.
pub fn gv_d_density(geo: &Geo, tol: f64) -> Result<f64> {
    let Some(fr) = geo.normal_frame(tol)? else { return Ok(0.0) };
    let deta = d(&geo.local.eta()?)?.values();
    let mut args: Vec<Vec<f64>> = geo.t().iter().map(|v| values(v)).collect();
    args.extend(fr.b.iter().map(|v| values(v)));
    let val = deta.wedge_power(geo.q())?.eval(&args)?;
    Ok(-fr.norm.value() * val * geo.sqrt_det.value())
}

/// Unit field tangent to the helices of radius ρ = √(x²+y²) and pitch `b`
/// around the z-axis, with `ω = T♭` in the Euclidean metric.
pub fn helix_scene(pitch: f64) -> Result<FramedScene> {
    let chart = Chart::new(&["x", "y", "z"], &[0.5, -0.5, 0.0], &[1.5, 0.5, 1.0], &[false, false, false])?;
    let params = vec![("b".to_string(), pitch)];
    let t = ["-y/sqrt(x^2+y^2+b^2)", "x/sqrt(x^2+y^2+b^2)", "b/sqrt(x^2+y^2+b^2)"];
    let comps = t.iter().map(|s| ScalarField::parse(s, &chart, &params)).collect::<Result<Vec<_>>>()?;
    let omega = FormField::from_components(3, 1, comps.clone())?;
    let mut s = FramedScene::new("helix", chart, omega, vec![VectorField::from_components(comps)])?;
    s.params = params;
    s.metric = Some(euclidean_metric(3));
    Ok(s)
}

pub fn euclidean_metric(n: usize) -> MetricField {
    MetricField::Explicit((0..n).map(|i| (0..n).map(|j| ScalarField::Const(if i == j { 1.0 } else { 0.0 })).collect()).collect())
}

/// Twisted product `B^{q+1} ×_φ F^q` with `g = Σ db² + φ² Σ df²`, fibers
/// spanned by `T_i = φ⁻¹ ∂_{f_i}` and `ω = φ^q df_1∧…∧df_q`. Coordinates
/// are ordered `(b_0..b_q, f_1..f_q)`.
pub fn twisted_product(q: usize, phi: ScalarField, chart: Chart) -> Result<FramedScene> {
    let n = 2 * q + 1;
    if chart.dim() != n {
        return Err(Error::Scene("twisted product chart must have dimension 2q+1".into()));
    }
    let phi = Arc::new(phi);
    let p = phi.clone();
    let omega = FormField::native(n, q, move |env| {
        let f = p.eval(env)?;
        let mut acc = AltTensor::zeros(n, q, Variance::Covariant, &env.constant(0.0));
        let mask: u32 = ((1u32 << q) - 1) << (q + 1);
        *acc.get_mut(mask) = f.powi(q as i32)?;
        Ok(acc)
    });
    let t = (0..q)
        .map(|i| {
            let p = phi.clone();
            VectorField::native(n, move |env| {
                let inv = p.eval(env)?.recip()?;
                Ok((0..n).map(|k| if k == q + 1 + i { inv.clone() } else { env.constant(0.0) }).collect())
            })
        })
        .collect();
    let mut s = FramedScene::new("twisted_product", chart, omega, t)?;
    s.d_frame = Some((0..=q).map(|k| VectorField::coordinate(n, k)).collect());
    let p = phi.clone();
    s.metric = Some(MetricField::Native(Arc::new(move |env| {
        let f = p.eval(env)?;
        let f2 = f.mul(&f);
        Ok((0..n)
            .map(|i| (0..n).map(|j| if i != j { env.constant(0.0) } else if i <= q { env.constant(1.0) } else { f2.clone() }).collect())
            .collect())
    })));
    s.integrable = true;
    Ok(s)
}
