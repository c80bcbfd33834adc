//! Godbillon-Vey type functionals, their variations and critical-point
//! residuals.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{contract, multivector, AltTensor, PointMetric, Variance};
use crate::fields::{d, lie, sample_points_with, Env, FormField, FramedScene, Local, ScalarField, VectorField};
use crate::geometry::{Geo, U_TOL};
use crate::jets::Jet;
use crate::quadrature::{integrate, lp_norm_check, LpReport, QuadResult, QuadratureSpec, Verdict};

/// Seeded sample set used by residual reports.
#[derive(Clone, Debug, Serialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
    /// Σ-tube excluded from sampling, as a fraction of box width.
    pub eps: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { count: 256, seed: 20_130_501, eps: 1e-3 }
    }
}

impl Sampling {
    pub fn points(&self, scene: &FramedScene) -> Vec<Vec<f64>> {
        sample_points_with(&scene.chart, self.count, self.seed, self.eps)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub sup: f64,
    pub l2: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualReport {
    pub fn from_values(name: &str, values: &[f64], tolerance: f64, seed: u64) -> ResidualReport {
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = if values.is_empty() { 0.0 } else { (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt() };
        let finite = values.iter().all(|v| v.is_finite());
        ResidualReport { name: name.into(), sup, l2, tolerance, pass: finite && sup <= tolerance, seed, samples: values.len(), note: None }
    }

    pub fn with_note(mut self, note: &str) -> ResidualReport {
        self.note = Some(note.into());
        self
    }
}

/// Evaluates `f` on every sample point in parallel, keeping sample order.
pub fn sample_values<F>(points: &[Vec<f64>], f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let vals: Vec<Result<f64>> = points.par_iter().map(|p| f(p)).collect();
    vals.into_iter().collect()
}

pub fn residual<F>(name: &str, scene: &FramedScene, sampling: &Sampling, tol: f64, f: F) -> Result<ResidualReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let pts = sampling.points(scene);
    Ok(ResidualReport::from_values(name, &sample_values(&pts, f)?, tol, sampling.seed))
}

fn top_value(a: &AltTensor<Jet>) -> f64 {
    a.comps()[0].value()
}

/// `(dη)^q` with `η` computed from the local jets.
fn deta_power(loc: &Local) -> Result<(AltTensor<Jet>, AltTensor<Jet>)> {
    let eta = loc.eta()?;
    let deta = d(&eta)?;
    let p = deta.wedge_power(loc.q)?;
    Ok((eta, p))
}

/// `η∧(dη)^q` coordinate density at a point.
pub fn gv_density(scene: &FramedScene, p: &[f64]) -> Result<f64> {
    let loc = scene.local(p, 2)?;
    let (eta, p) = deta_power(&loc)?;
    Ok(top_value(&eta.wedge(&p)?))
}

pub fn gv_number(scene: &FramedScene, spec: &QuadratureSpec) -> Result<QuadResult> {
    integrate(&scene.chart, spec, |p| gv_density(scene, p))
}

/// `∫ η∧(dη)^{s_0}∧(dω_1)^{s_1}∧…∧(dω_q)^{s_q}`.
pub fn gv_s_number(scene: &FramedScene, s: &[usize], spec: &QuadratureSpec) -> Result<QuadResult> {
    let q = scene.q();
    let coframe = scene.coframe.as_ref().ok_or_else(|| Error::Scene("gv_s needs a coframe ω_1..ω_q".into()))?;
    if s.len() != q + 1 || 1 + 2 * s.iter().sum::<usize>() != scene.dim() {
        return Err(Error::Dimension(format!("multi-index {s:?} does not give a top-degree form")));
    }
    integrate(&scene.chart, spec, |p| {
        let env = scene.env(p, 2)?;
        let loc = scene.local_at(env.clone())?;
        let eta = loc.eta()?;
        let mut acc = eta.clone();
        if s[0] > 0 {
            acc = acc.wedge(&d(&eta)?.wedge_power(s[0])?)?;
        }
        for (i, w) in coframe.iter().enumerate() {
            if s[i + 1] > 0 {
                acc = acc.wedge(&d(&w.eval(&env)?)?.wedge_power(s[i + 1])?)?;
            }
        }
        Ok(top_value(&acc))
    })
}

/// Pointwise derivatives of a one-parameter family at `t = 0`.
pub struct Derivs {
    pub omega_dot: AltTensor<Jet>,
    pub omega_ddot: AltTensor<Jet>,
    pub t_dot: Vec<Vec<Jet>>,
    pub t_ddot: Vec<Vec<Jet>>,
}

/// Admissible variations of `(ω, T)` keeping `ι_T ω ≡ 1`.
#[derive(Clone)]
pub enum Variation {
    /// `T_i(t) = C_i^j(t) T_j`, `ω(t) = det C(t)⁻¹ ω` with `C(t) = I + tĊ`.
    Gauge(Vec<Vec<ScalarField>>),
    /// `T_i(t) = T_i + t X_i` with `X_i` tangent to D; ω fixed.
    Tangential(Vec<VectorField>),
    /// `ω(t) = ω + t ω̇` with `ι_T ω̇ = 0`; T fixed.
    Form(FormField),
    /// `ω + tω̇ + t²ω̈/2`, `T + tṪ + t²T̈/2`.
    Polynomial { omega: [FormField; 2], t: [Vec<VectorField>; 2] },
}

impl Variation {
    pub fn zero(scene: &FramedScene) -> Variation {
        let n = scene.dim();
        let z = FormField::zero(n, scene.q());
        let zt = vec![VectorField::zero(n); scene.q()];
        Variation::Polynomial { omega: [z.clone(), z], t: [zt.clone(), zt] }
    }

    pub fn derivs(&self, scene: &FramedScene, loc: &Local) -> Result<Derivs> {
        let env = &loc.env;
        let n = scene.dim();
        let q = scene.q();
        let zero_form = || AltTensor::zeros(n, q, Variance::Covariant, &env.constant(0.0));
        let zero_t = || vec![vec![env.constant(0.0); n]; q];
        match self {
            Variation::Gauge(c) => {
                let c: Vec<Vec<Jet>> = c.iter().map(|r| r.iter().map(|f| f.eval(env)).collect()).collect::<Result<_>>()?;
                let mut tr = env.constant(0.0);
                let mut tr2 = env.constant(0.0);
                for i in 0..q {
                    tr.add_scaled(&c[i][i], 1.0);
                    for j in 0..q {
                        tr2.add_product(&c[i][j], &c[j][i], 1.0);
                    }
                }
                let t_dot = (0..q)
                    .map(|i| {
                        (0..n)
                            .map(|k| {
                                let mut s = env.constant(0.0);
                                for j in 0..q {
                                    s.add_product(&c[i][j], &loc.t[j][k], 1.0);
                                }
                                s
                            })
                            .collect()
                    })
                    .collect();
                let mut w2 = tr.mul(&tr);
                w2.add_scaled(&tr2, 1.0);
                Ok(Derivs {
                    omega_dot: loc.omega.scale_by(&tr).scale(-1.0),
                    omega_ddot: loc.omega.scale_by(&w2),
                    t_dot,
                    t_ddot: zero_t(),
                })
            }
            Variation::Tangential(x) => Ok(Derivs {
                omega_dot: zero_form(),
                omega_ddot: zero_form(),
                t_dot: x.iter().map(|v| v.eval(env)).collect::<Result<_>>()?,
                t_ddot: zero_t(),
            }),
            Variation::Form(w) => Ok(Derivs { omega_dot: w.eval(env)?, omega_ddot: zero_form(), t_dot: zero_t(), t_ddot: zero_t() }),
            Variation::Polynomial { omega, t } => Ok(Derivs {
                omega_dot: omega[0].eval(env)?,
                omega_ddot: omega[1].eval(env)?,
                t_dot: t[0].iter().map(|v| v.eval(env)).collect::<Result<_>>()?,
                t_ddot: t[1].iter().map(|v| v.eval(env)).collect::<Result<_>>()?,
            }),
        }
    }

    /// The family member at parameter `t`, rescaled so `ι_T ω = 1`.
    pub fn scene_at(&self, scene: &FramedScene, t: f64) -> Result<FramedScene> {
        let n = scene.dim();
        let q = scene.q();
        let mut s = match self {
            Variation::Gauge(c) => {
                let m = (0..q)
                    .map(|i| {
                        (0..q)
                            .map(|j| {
                                let f = c[i][j].clone();
                                let delta = if i == j { 1.0 } else { 0.0 };
                                ScalarField::native(move |env| Ok(f.eval(env)?.scale(t).add_const(delta)))
                            })
                            .collect()
                    })
                    .collect();
                scene.gauge_transform(m)?
            }
            Variation::Tangential(x) => {
                let mut s = scene.clone();
                s.t = scene.t.iter().zip(x).map(|(ti, xi)| ti.plus(xi, t)).collect();
                s
            }
            Variation::Form(w) => {
                let mut s = scene.clone();
                s.omega = scene.omega.plus(w, t);
                s
            }
            Variation::Polynomial { omega, t: tv } => {
                let mut s = scene.clone();
                s.omega = scene.omega.plus(&omega[0], t).plus(&omega[1], 0.5 * t * t);
                s.t = (0..q).map(|i| scene.t[i].plus(&tv[0][i], t).plus(&tv[1][i], 0.5 * t * t)).collect();
                s
            }
        };
        s.metric = None;
        let base = s.clone();
        let t1 = s.t[0].clone();
        s.t[0] = VectorField::native(n, move |env| {
            let loc = base.local_at(env.clone())?;
            let inv = contract(&loc.tm, &loc.omega)?.comps()[0].recip()?;
            Ok(t1.eval(env)?.iter().map(|x| x.mul(&inv)).collect())
        });
        Ok(s)
    }
}

fn replaced(t: &[Vec<Jet>], repl: &[(usize, &Vec<Jet>)], n: usize) -> Result<AltTensor<Jet>> {
    let mut vs = t.to_vec();
    for (i, v) in repl {
        vs[*i] = (*v).clone();
    }
    multivector(&vs, n, &t[0][0].zero_like())
}

/// `Ṫ` and `T̈` of the multivector `T_1∧…∧T_q`.
pub fn multivector_derivs(t: &[Vec<Jet>], dv: &Derivs, n: usize) -> Result<(AltTensor<Jet>, AltTensor<Jet>)> {
    let q = t.len();
    let mut first = replaced(t, &[(0, &dv.t_dot[0])], n)?;
    for i in 1..q {
        first = first.add(&replaced(t, &[(i, &dv.t_dot[i])], n)?)?;
    }
    let mut second = replaced(t, &[(0, &dv.t_ddot[0])], n)?;
    for i in 1..q {
        second = second.add(&replaced(t, &[(i, &dv.t_ddot[i])], n)?)?;
    }
    for i in 0..q {
        for j in i + 1..q {
            second = second.combine(&replaced(t, &[(i, &dv.t_dot[i]), (j, &dv.t_dot[j])], n)?, 2.0)?;
        }
    }
    Ok((first, second))
}

/// `(η̇, η̈)` for `η_t = ι_{T_t} dω_t`.
pub fn eta_derivs(loc: &Local, dv: &Derivs) -> Result<(AltTensor<Jet>, AltTensor<Jet>)> {
    let n = loc.dim();
    let (td, tdd) = multivector_derivs(&loc.t, dv, n)?;
    let dw = d(&loc.omega)?;
    let dwd = d(&dv.omega_dot)?;
    let dwdd = d(&dv.omega_ddot)?;
    let eta_dot = contract(&td, &dw)?.add(&contract(&loc.tm, &dwd)?)?;
    let eta_ddot = contract(&tdd, &dw)?.combine(&contract(&td, &dwd)?, 2.0)?.add(&contract(&loc.tm, &dwdd)?)?;
    Ok((eta_dot, eta_ddot))
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub formula: f64,
    /// Richardson combination of the two smallest steps.
    pub extrapolated: f64,
    /// `(t, finite difference)` pairs.
    pub finite_differences: Vec<(f64, f64)>,
    pub relative_errors: Vec<f64>,
    pub extrapolated_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp: Option<LpReport>,
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Normalization defect `ι_T ω̇ + ι_Ṫ ω` sampled.
pub fn variation_normalization(scene: &FramedScene, v: &Variation, sampling: &Sampling) -> Result<ResidualReport> {
    residual("normalization derivative", scene, sampling, 1e-9, |p| {
        let loc = scene.local(p, 0)?;
        let dv = v.derivs(scene, &loc)?;
        let (td, _) = multivector_derivs(&loc.t, &dv, loc.dim())?;
        let a = contract(&loc.tm, &dv.omega_dot)?.comps()[0].value();
        let b = contract(&td, &loc.omega)?.comps()[0].value();
        Ok(a + b)
    })
}

fn lp_guard(scene: &FramedScene, integrand: FormField, spec: &QuadratureSpec) -> Result<Option<LpReport>> {
    if scene.chart.sigma.is_empty() {
        return Ok(None);
    }
    let r = lp_norm_check(scene, &integrand, 2.0, spec)?;
    if !r.exponent_ok || r.verdict == Verdict::Divergent {
        return Err(Error::Hypothesis(format!(
            "improper-integral condition fails (verdict {:?}, exponent condition {})",
            r.verdict, r.exponent_ok
        )));
    }
    Ok(Some(r))
}

/// `(q+1) ∫ η̇∧(dη)^q` against centered differences of gv along the family.
pub fn first_variation(scene: &FramedScene, v: &Variation, spec: &QuadratureSpec, steps: &[f64]) -> Result<VariationReport> {
    let q = scene.q();
    let sc = Arc::new(scene.clone());
    let vv = Arc::new(v.clone());
    let guard = {
        let (sc, vv) = (sc.clone(), vv.clone());
        FormField::native(scene.dim(), scene.dim() - 1, move |env| {
            let loc = sc.local_at(env.clone())?;
            let dv = vv.derivs(&sc, &loc)?;
            let (ed, _) = eta_derivs(&loc, &dv)?;
            let eta = loc.eta()?;
            let mut acc = ed.wedge(&eta)?;
            if q > 1 {
                acc = acc.wedge(&d(&eta)?.wedge_power(q - 1)?)?;
            }
            Ok(acc)
        })
    };
    let lp = lp_guard(scene, guard, spec)?;
    let formula = integrate(&scene.chart, spec, |p| {
        let loc = scene.local(p, 2)?;
        let dv = v.derivs(scene, &loc)?;
        let (ed, _) = eta_derivs(&loc, &dv)?;
        let (_, dq) = deta_power(&loc)?;
        Ok((q + 1) as f64 * top_value(&ed.wedge(&dq)?))
    })?
    .value;
    let floor = 1e-9 * gv_abs_scale(scene, spec)?;
    let mut fds = Vec::new();
    for &h in steps {
        let plus = gv_number(&v.scene_at(scene, h)?, spec)?.value;
        let minus = gv_number(&v.scene_at(scene, -h)?, spec)?.value;
        fds.push((h, (plus - minus) / (2.0 * h)));
    }
    Ok(finish(formula, fds, floor, 1e-3, lp))
}

fn finish(formula: f64, fds: Vec<(f64, f64)>, floor: f64, tol: f64, lp: Option<LpReport>) -> VariationReport {
    let errs: Vec<f64> = fds.iter().map(|(_, fd)| rel_err(formula, *fd, floor)).collect();
    // both differences carry an O(h²) error
    let extrapolated = match fds.as_slice() {
        [.., (h1, f1), (h2, f2)] => {
            let r = (h1 / h2).powi(2);
            (r * f2 - f1) / (r - 1.0)
        }
        [(_, f)] => *f,
        [] => f64::NAN,
    };
    let extrapolated_error = rel_err(formula, extrapolated, floor);
    VariationReport {
        formula,
        extrapolated,
        pass: extrapolated_error <= tol,
        finite_differences: fds,
        relative_errors: errs,
        extrapolated_error,
        tolerance: tol,
        lp,
    }
}

fn gv_abs_scale(scene: &FramedScene, spec: &QuadratureSpec) -> Result<f64> {
    let coarse = QuadratureSpec { estimate: false, resolution: spec.resolution.iter().map(|r| (r / 2).max(4)).collect(), ..spec.clone() };
    Ok(integrate(&scene.chart, &coarse, |p| gv_density(scene, p).map(f64::abs))?.value.max(1.0))
}

/// `(q+1) ∫ (η̈∧(dη)^q + q η̇∧dη̇∧(dη)^{q−1})` against second differences.
pub fn second_variation(scene: &FramedScene, v: &Variation, spec: &QuadratureSpec, steps: &[f64]) -> Result<VariationReport> {
    let q = scene.q();
    let formula = integrate(&scene.chart, spec, |p| {
        let loc = scene.local(p, 2)?;
        let dv = v.derivs(scene, &loc)?;
        let (ed, edd) = eta_derivs(&loc, &dv)?;
        let eta = loc.eta()?;
        let deta = d(&eta)?;
        let mut b = ed.wedge(&d(&ed)?)?;
        if q > 1 {
            b = b.wedge(&deta.wedge_power(q - 1)?)?;
        }
        let a = edd.wedge(&deta.wedge_power(q)?)?;
        Ok((q + 1) as f64 * (top_value(&a) + q as f64 * top_value(&b)))
    })?
    .value;
    let g0 = gv_number(scene, spec)?.value;
    let floor = 1e-9 * gv_abs_scale(scene, spec)?;
    let mut fds = Vec::new();
    for &h in steps {
        let plus = gv_number(&v.scene_at(scene, h)?, spec)?.value;
        let minus = gv_number(&v.scene_at(scene, -h)?, spec)?.value;
        fds.push((h, (plus - 2.0 * g0 + minus) / (h * h)));
    }
    Ok(finish(formula, fds, floor, 1e-2, None))
}

/// Jets of the pieces entering the criticality conditions at a point.
pub struct CriticalAt {
    pub eta: AltTensor<Jet>,
    pub deta_q: AltTensor<Jet>,
    /// `ι_T L_T (dη)^q`.
    pub residual: AltTensor<Jet>,
    /// `Ω = η∧ι_T(dη)^q + (−1)^q L_T (dη)^q`.
    pub omega_form: AltTensor<Jet>,
}

pub fn critical_at(loc: &Local) -> Result<CriticalAt> {
    let q = loc.q;
    let (eta, dq) = deta_power(loc)?;
    let l = lie(&loc.tm, &dq)?;
    let residual = contract(&loc.tm, &l)?;
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    let omega_form = eta.wedge(&contract(&loc.tm, &dq)?)?.combine(&l, sign)?;
    Ok(CriticalAt { eta, deta_q: dq, residual, omega_form })
}

/// `(L_T)^k a`.
pub fn lie_power(loc: &Local, a: &AltTensor<Jet>, k: usize) -> Result<AltTensor<Jet>> {
    let mut acc = a.clone();
    for _ in 0..k {
        acc = loc.lie(&acc)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalityReport {
    pub residual: ResidualReport,
    pub omega: ResidualReport,
    pub iota_omega: ResidualReport,
    /// `ι_T Ω = 0 ⇔ Ω = 0` held on every sample.
    pub reduction_holds: bool,
    pub integrability: ResidualReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lt_cubed: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lt_cubed_agreement: Option<ResidualReport>,
}

/// Integrability certificate: `|ω∧dω|` for q = 1, `|ω_i∧ω_0|` otherwise.
pub fn integrability_value(scene: &FramedScene, env: &Env) -> Result<f64> {
    let loc = scene.local_at(env.clone())?;
    if scene.q() == 1 {
        return Ok(loc.omega.wedge(&d(&loc.omega)?)?.sup_norm());
    }
    let Some(cf) = &scene.coframe else {
        return Err(Error::Scene("integrability certificate for q ≥ 2 needs a coframe".into()));
    };
    let ws = cf.iter().map(|w| w.eval(env)).collect::<Result<Vec<_>>>()?;
    let mut w0 = d(&ws[0])?;
    for w in &ws[1..] {
        w0 = w0.wedge(&d(w)?)?;
    }
    let mut m = 0.0f64;
    for w in &ws {
        m = m.max(w.wedge(&w0)?.sup_norm());
    }
    Ok(m)
}

pub fn criticality_residual(scene: &FramedScene, sampling: &Sampling, tol: f64) -> Result<CriticalityReport> {
    let pts = sampling.points(scene);
    let seed = sampling.seed;
    let rows: Vec<Result<[f64; 6]>> = pts
        .par_iter()
        .map(|p| {
            let env = scene.env(p, 3)?;
            let loc = scene.local_at(env.clone())?;
            let c = critical_at(&loc)?;
            let iota = contract(&loc.tm, &c.omega_form)?;
            let cert = integrability_value(scene, &scene.env(p, 1)?)?;
            let (l3, agree) = if scene.q() == 1 {
                let l3 = lie_power(&loc, &loc.omega, 3)?;
                (l3.sup_norm(), l3.sub(&c.residual)?.sup_norm())
            } else {
                (0.0, 0.0)
            };
            Ok([c.residual.sup_norm(), c.omega_form.sup_norm(), iota.sup_norm(), cert, l3, agree])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let reduction_holds = rows.iter().all(|r| (r[2] <= tol) == (r[1] <= tol));
    let q1 = scene.q() == 1;
    let mut integrability = ResidualReport::from_values("integrability certificate", &col(3), 1e-8, seed);
    if !scene.integrable {
        integrability = integrability.with_note("scene does not declare ker ω integrable");
    }
    Ok(CriticalityReport {
        residual: ResidualReport::from_values("ι_T L_T (dη)^q", &col(0), tol, seed),
        omega: ResidualReport::from_values("Ω", &col(1), tol, seed),
        iota_omega: ResidualReport::from_values("ι_T Ω", &col(2), tol, seed),
        reduction_holds,
        integrability,
        lt_cubed: q1.then(|| ResidualReport::from_values("(L_T)^3 ω", &col(4), tol, seed)),
        lt_cubed_agreement: q1.then(|| ResidualReport::from_values("(L_T)^3 ω − ι_T L_T dη", &col(5), 1e-9, seed)),
    })
}

/// `J_i = ∫ ω_i∧ω_0` with `ω_0 = dω_1∧…∧dω_q`; for q = 1 without a coframe,
/// `∫ ω∧dω`.
pub fn average_integrability(scene: &FramedScene, spec: &QuadratureSpec) -> Result<Vec<QuadResult>> {
    let q = scene.q();
    let forms: Vec<FormField> = match &scene.coframe {
        Some(cf) => cf.clone(),
        None if q == 1 => vec![scene.omega.clone()],
        None => return Err(Error::Scene("average integrability needs a coframe".into())),
    };
    (0..q)
        .map(|i| {
            integrate(&scene.chart, spec, |p| {
                let env = scene.env(p, 1)?;
                let ws = forms.iter().map(|w| w.eval(&env)).collect::<Result<Vec<_>>>()?;
                let mut w0 = d(&ws[0])?;
                for w in &ws[1..] {
                    w0 = w0.wedge(&d(w)?)?;
                }
                Ok(top_value(&ws[i].wedge(&w0)?))
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LagrangeReport {
    pub lambda: Vec<f64>,
    pub residual: ResidualReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lie_gv_density: Option<ResidualReport>,
}

/// Pointwise Lagrange residual: `(L_T)^3 ω − λ L_T ω` for q = 1; for q ≥ 2
/// `(−1)^{i−1} ω̂_i∧Ω − Σ_j λ_j (δ_ij ω_0 + dω_j∧ω̂_{0i})` over i.
pub fn lagrange_at(scene: &FramedScene, env: &Env, lambda: &[f64]) -> Result<(f64, f64)> {
    let q = scene.q();
    let loc = scene.local_at(env.clone())?;
    if q == 1 {
        let l1 = loc.lie(&loc.omega)?;
        let l3 = lie_power(&loc, &l1, 2)?;
        let r = l3.combine(&l1, -lambda[0])?.sup_norm();
        let eta = loc.eta()?;
        let g = eta.wedge(&d(&eta)?)?;
        let lg = loc.lie(&g)?.sup_norm();
        return Ok((r, lg));
    }
    let cf = scene.coframe.as_ref().ok_or_else(|| Error::Scene("Lagrange residual for q ≥ 2 needs a coframe".into()))?;
    let ws = cf.iter().map(|w| w.eval(env)).collect::<Result<Vec<_>>>()?;
    let dws = ws.iter().map(d).collect::<Result<Vec<_>>>()?;
    let omega_form = critical_at(&loc)?.omega_form;
    let wedge_except = |xs: &[AltTensor<Jet>], skip: usize| -> Result<Option<AltTensor<Jet>>> {
        let mut acc: Option<AltTensor<Jet>> = None;
        for (j, x) in xs.iter().enumerate() {
            if j != skip {
                acc = Some(match acc {
                    None => x.clone(),
                    Some(a) => a.wedge(x)?,
                });
            }
        }
        Ok(acc)
    };
    let mut w0 = dws[0].clone();
    for x in &dws[1..] {
        w0 = w0.wedge(x)?;
    }
    let mut m = 0.0f64;
    for i in 0..q {
        let hat = wedge_except(&ws, i)?.unwrap();
        let hat0 = wedge_except(&dws, i)?.unwrap();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut r = hat.wedge(&omega_form)?.scale(sign);
        for j in 0..q {
            let mut g = dws[j].wedge(&hat0)?;
            if i == j {
                g = g.add(&w0)?;
            }
            r = r.combine(&g, -lambda[j])?;
        }
        m = m.max(r.sup_norm());
    }
    Ok((m, 0.0))
}

pub fn lagrange_residual(scene: &FramedScene, lambda: &[f64], sampling: &Sampling, tol: f64) -> Result<LagrangeReport> {
    if lambda.len() != scene.q() {
        return Err(Error::Dimension("one multiplier per ω_i required".into()));
    }
    let pts = sampling.points(scene);
    let rows: Vec<Result<(f64, f64)>> = pts.par_iter().map(|p| lagrange_at(scene, &scene.env(p, 3)?, lambda)).collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let r: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let g: Vec<f64> = rows.iter().map(|x| x.1).collect();
    Ok(LagrangeReport {
        lambda: lambda.to_vec(),
        residual: ResidualReport::from_values("Lagrange residual", &r, tol, sampling.seed),
        lie_gv_density: (scene.q() == 1).then(|| ResidualReport::from_values("L_T(η∧dη)", &g, tol, sampling.seed)),
    })
}

/// `L_T(L_T dα∧(dη)^{q−1})`, the (q+1)-form paired with β in the index form.
pub fn index_integrand(loc: &Local, alpha: &AltTensor<Jet>) -> Result<AltTensor<Jet>> {
    let q = loc.q;
    let mut a = loc.lie(&d(alpha)?)?;
    if q > 1 {
        let deta = d(&loc.eta()?)?;
        a = a.wedge(&deta.wedge_power(q - 1)?)?;
    }
    loc.lie(&a)
}

pub fn index_form(scene: &FramedScene, alpha: &FormField, beta: &FormField, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate(&scene.chart, spec, |p| {
        let env = scene.env(p, 3)?;
        let loc = scene.local_at(env.clone())?;
        let a = index_integrand(&loc, &alpha.eval(&env)?)?;
        Ok(top_value(&a.wedge(&beta.eval(&env)?)?))
    })?
    .value)
}

/// `D(α) = ⋆ L_T(L_T dα∧(dη)^{q−1})`.
pub fn jacobi_operator(scene: &FramedScene, alpha: &FormField, point: &[f64]) -> Result<AltTensor<f64>> {
    let env = scene.env(point, 3)?;
    let g = scene.metric_at(&env)?.ok_or_else(|| Error::Scene("Jacobi operator needs a metric".into()))?;
    let pm = PointMetric::new(g.iter().map(|r| r.iter().map(Jet::value).collect()).collect())?;
    let loc = scene.local_at(env.clone())?;
    pm.hodge(&index_integrand(&loc, &alpha.eval(&env)?)?.values())
}

/// `∫ ⟨D(α), β⟩ dV_g`, equal to the index form.
pub fn index_form_via_jacobi(scene: &FramedScene, alpha: &FormField, beta: &FormField, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate(&scene.chart, spec, |p| {
        let env = scene.env(p, 3)?;
        let g = scene.metric_at(&env)?.ok_or_else(|| Error::Scene("Jacobi operator needs a metric".into()))?;
        let pm = PointMetric::new(g.iter().map(|r| r.iter().map(Jet::value).collect()).collect())?;
        let loc = scene.local_at(env.clone())?;
        let da = pm.hodge(&index_integrand(&loc, &alpha.eval(&env)?)?.values())?;
        Ok(pm.inner(&da, &beta.eval(&env)?.values())? * pm.sqrt_det)
    })?
    .value)
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricElReport {
    pub residuals: Vec<ResidualReport>,
    pub gv_d: f64,
    pub u_fraction: f64,
}

fn eval_on(a: &AltTensor<Jet>, vs: &[&Vec<Jet>]) -> Result<Jet> {
    let owned: Vec<Vec<Jet>> = vs.iter().map(|v| (*v).clone()).collect();
    a.eval(&owned)
}

/// Pointwise Euler-Lagrange residuals of the metric functional; `None`
/// outside U.
pub fn metric_el_at(scene: &FramedScene, p: &[f64]) -> Result<Option<Vec<f64>>> {
    let geo = Geo::new(scene, p, 4)?;
    let Some(fr) = geo.normal_frame(U_TOL)? else { return Ok(None) };
    let q = geo.q();
    let t = geo.t().to_vec();
    if q == 1 {
        let tv = &t[0];
        // s = ⟨𝒯_{N,B}, T⟩ = ½⟨[N,B], T⟩
        let s = geo.dot(&geo.bracket(&fr.n, &fr.b[0])?, tv).scale(0.5);
        let st: Vec<Jet> = tv.iter().map(|x| x.mul(&s)).collect();
        let div1 = geo.div(&st)?;
        let x2: Vec<Jet> = tv.iter().map(|x| x.mul(&div1)).collect();
        let r1 = geo.div(&x2)?.value();
        let logk = fr.norm.ln()?;
        let hnn = geo.dot(&geo.cov(&fr.n, &fr.n)?, tv).value();
        let r2 = div1.value() - (geo.apply(tv, &logk)?.value() - hnn) * s.value();
        let hbn = geo.dot(&geo.cov(&fr.b[0], &fr.n)?, tv).value();
        let tau = geo.dot(&geo.cov(tv, &fr.n)?, &fr.b[0]).value();
        let r3 = (tau - hbn) * s.value();
        return Ok(Some(vec![r1, r2, r3]));
    }
    let deta = d(&geo.local.eta()?)?;
    let dq = deta.wedge_power(q)?;
    let dw = d(&geo.local.omega)?;
    let hat = |skip: usize| -> Vec<&Vec<Jet>> { t.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, v)| v).collect() };
    let sgn = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    // (dη)^q(T̂_i, N, B)
    let a_i = (0..q)
        .map(|i| {
            let mut vs = hat(i);
            vs.push(&fr.n);
            vs.extend(fr.b.iter());
            eval_on(&dq, &vs)
        })
        .collect::<Result<Vec<_>>>()?;
    // (dη)^q(T, N, B̂_k)
    let c_k = (0..q)
        .map(|k| {
            let mut vs: Vec<&Vec<Jet>> = t.iter().collect();
            vs.push(&fr.n);
            vs.extend(fr.b.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v));
            eval_on(&dq, &vs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = vec![t[0][0].zero_like(); geo.dim()];
    for i in 0..q {
        // (−1)^i with 1-based i
        let s = -sgn(i);
        for (xk, tk) in x.iter_mut().zip(&t[i]) {
            xk.add_product(&a_i[i], tk, s);
        }
    }
    let mut out = vec![geo.div(&x)?.value()];
    let hn = fr.norm.value();
    for i in 0..q {
        let mut r = a_i[i].value() * hn;
        for k in 0..q {
            let mut vs = vec![&fr.n];
            vs.extend(hat(i));
            vs.push(&fr.b[k]);
            r += -sgn(k) * c_k[k].value() * eval_on(&dw, &vs)?.value();
        }
        out.push(r);
    }
    let mut bt: Vec<&Vec<Jet>> = fr.b.iter().collect();
    bt.extend(t.iter());
    let dbt = eval_on(&dq, &bt)?.value();
    for i in 0..q {
        for j in 0..q {
            let mut vs = vec![&fr.b[j]];
            vs.extend(hat(i));
            vs.push(&fr.n);
            let mut r = dbt * eval_on(&dw, &vs)?.value();
            for k in 0..q {
                let mut vs = vec![&fr.b[j]];
                vs.extend(hat(i));
                vs.push(&fr.b[k]);
                r += sgn(q + k + 1) * c_k[k].value() * eval_on(&dw, &vs)?.value();
            }
            out.push(r);
        }
    }
    Ok(Some(out))
}

pub fn metric_el_residuals(scene: &FramedScene, sampling: &Sampling, spec: &QuadratureSpec, tol: f64) -> Result<MetricElReport> {
    if scene.metric.is_none() {
        return Err(Error::Scene("metric Euler-Lagrange residuals need a metric".into()));
    }
    let pts = sampling.points(scene);
    let rows: Vec<Result<Option<Vec<f64>>>> = pts.par_iter().map(|p| metric_el_at(scene, p)).collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let inside: Vec<Vec<f64>> = rows.iter().flatten().cloned().collect();
    let u_fraction = inside.len() as f64 / pts.len().max(1) as f64;
    let names: Vec<String> = if scene.q() == 1 {
        vec!["Div(Div(𝒯_{N,B}·T)·T)".into(), "Div(𝒯_{N,B}·T) − (T(log k) − h_{N,N})𝒯_{N,B}".into(), "(τ − h_{B,N})𝒯_{N,B}".into()]
    } else {
        vec!["divergence equation".into(), "D⊥–N equations".into(), "D⊥–B equations".into()]
    };
    let q = scene.q();
    let groups: Vec<std::ops::Range<usize>> =
        if q == 1 { vec![0..1, 1..2, 2..3] } else { vec![0..1, 1..1 + q, 1 + q..1 + q + q * q] };
    let residuals = names
        .iter()
        .zip(groups)
        .map(|(name, g)| {
            let vals: Vec<f64> = inside.iter().map(|r| r[g.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
            let rep = ResidualReport::from_values(name, &vals, tol, sampling.seed);
            if inside.is_empty() {
                rep.with_note("U is empty on the sample set; residual trivially zero")
            } else {
                rep
            }
        })
        .collect();
    let gv_d = gv_d(scene, spec)?;
    Ok(MetricElReport { residuals, gv_d, u_fraction })
}

/// `−∫_U ‖H⊥‖·(dη)^q(T,B) dV_g`.
pub fn gv_d(scene: &FramedScene, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate(&scene.chart, spec, |p| {
        let geo = Geo::new(scene, p, 2)?;
        crate::geometry::gv_d_density(&geo, U_TOL)
    })?
    .value)
}

/// Case-1 metric family `T_t = (1 + tφ)T`: centered difference of gv
/// against `−(q+1) ∫ φ Div(Σ_i (−1)^i (dη)^q(T̂_i,N,B) T_i) dV_g`.
pub fn metric_family_check(scene: &FramedScene, phi: ScalarField, spec: &QuadratureSpec, h: f64) -> Result<(f64, f64)> {
    if scene.q() != 1 {
        return Err(Error::Invalid("metric family check is implemented for q = 1".into()));
    }
    let v = Variation::Gauge(vec![vec![phi.clone()]]);
    let fd = (gv_number(&v.scene_at(scene, h)?, spec)?.value - gv_number(&v.scene_at(scene, -h)?, spec)?.value) / (2.0 * h);
    let formula = integrate(&scene.chart, spec, |p| {
        let geo = Geo::new(scene, p, 3)?;
        let Some(fr) = geo.normal_frame(U_TOL)? else { return Ok(0.0) };
        let deta = d(&geo.local.eta()?)?;
        let a = eval_on(&deta, &[&fr.n, &fr.b[0]])?;
        let x: Vec<Jet> = geo.t()[0].iter().map(|tk| tk.mul(&a).scale(-1.0)).collect();
        let f = phi.eval(geo.env())?.value();
        Ok(-2.0 * f * geo.div(&x)?.value() * geo.sqrt_det.value())
    })?
    .value;
    Ok((fd, formula))
}

/// Family of an admissible variation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationCase {
    Gauge,
    Tangential,
    Form,
}

impl VariationCase {
    pub const ALL: [VariationCase; 3] = [VariationCase::Gauge, VariationCase::Tangential, VariationCase::Form];
}

/// `v − Σ_i ω(T_1, …, v, …, T_q) T_i`, which lies in D.
fn project_to_d(loc: &Local, v: &[Jet]) -> Result<Vec<Jet>> {
    let q = loc.q;
    let mut out = v.to_vec();
    for i in 0..q {
        let mut args = loc.t.clone();
        args[i] = v.to_vec();
        let c = loc.omega.eval(&args)?;
        for (o, ti) in out.iter_mut().zip(&loc.t[i]) {
            o.add_product(&c, ti, -1.0);
        }
    }
    Ok(out)
}

/// Seeded bump-supported variations of one case.
///
/// Form variations replace `ω_1` by `ω_1 + tφ(dx_k − dx_k(…)ω_1)` so the family
/// stays decomposable; for q ≥ 2 they need the scene's coframe.
pub fn seeded_variations(scene: &FramedScene, case: VariationCase, count: usize, seed: u64) -> Result<Vec<Variation>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let chart = &scene.chart;
    let (n, q) = (scene.dim(), scene.q());
    if case == VariationCase::Form && q > 1 && scene.coframe.is_none() {
        return Err(Error::Hypothesis("form variations with q > 1 need a coframe".into()));
    }
    let bump = |rng: &mut rand_chacha::ChaCha8Rng| crate::catalog::seeded_bump(chart, rng.gen());
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v = match case {
            VariationCase::Gauge => Variation::Gauge(
                (0..q)
                    .map(|i| {
                        (0..q)
                            .map(|j| {
                                let b = bump(&mut rng);
                                if i == j {
                                    b
                                } else {
                                    ScalarField::native(move |env| Ok(b.eval(env)?.scale(0.5)))
                                }
                            })
                            .collect()
                    })
                    .collect(),
            ),
            VariationCase::Tangential => Variation::Tangential(
                (0..q)
                    .map(|_| {
                        let (b, k) = (bump(&mut rng), rng.gen_range(0..n));
                        let sc = scene.clone();
                        VectorField::native(n, move |env| {
                            let loc = sc.local_at(env.clone())?;
                            let e: Vec<Jet> = (0..n).map(|j| env.constant(if j == k { 1.0 } else { 0.0 })).collect();
                            let bv = b.eval(env)?;
                            Ok(project_to_d(&loc, &e)?.iter().map(|x| x.mul(&bv)).collect())
                        })
                    })
                    .collect(),
            ),
            VariationCase::Form => {
                let (b, k) = (bump(&mut rng), rng.gen_range(0..n));
                let sc = scene.clone();
                Variation::Form(FormField::native(n, q, move |env| {
                    let loc = sc.local_at(env.clone())?;
                    let mut dx = vec![env.constant(0.0); n];
                    dx[k] = env.constant(1.0);
                    let mut beta = AltTensor::covector(dx);
                    if let Some(cf) = &sc.coframe {
                        for w in &cf[1..] {
                            beta = beta.wedge(&w.eval(env)?)?;
                        }
                    }
                    let c = contract(&loc.tm, &beta)?.comps()[0].clone();
                    Ok(beta.sub(&loc.omega.scale_by(&c))?.scale_by(&b.eval(env)?))
                }))
            }
        };
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::fields::Bump;
    use std::f64::consts::PI;

    fn spec(s: &FramedScene, r: usize) -> QuadratureSpec {
        QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&s.chart).with_resolution(r) }
    }

    #[test]
    fn tilted_torus_gv() {
        let s = catalog::t3_tilted();
        let v = gv_number(&s, &spec(&s, 16)).unwrap().value;
        assert!((v + (2.0 * PI).powi(3)).abs() < 1e-9 * (2.0 * PI).powi(3));
        let c = catalog::t3_contact();
        assert_eq!(gv_number(&c, &spec(&c, 8)).unwrap().value, 0.0);
    }

    #[test]
    fn gv_s_with_s0_equal_q_is_gv() {
        let s = catalog::random_scene(1, 4, 0.2, false);
        let sp = spec(&s, 12);
        let a = gv_s_number(&s, &[1, 0], &sp).unwrap().value;
        let b = gv_number(&s, &sp).unwrap().value;
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        assert!(gv_s_number(&s, &[1, 1], &sp).is_err());
    }

    #[test]
    fn gauge_invariance_of_gv() {
        let s = catalog::t3_tilted();
        let c = ScalarField::parse("2 + sin(x - sin(z)) + 0.5*cos(y + cos(z))", &s.chart, &[]).unwrap();
        let g = s.gauge_transform(vec![vec![c]]).unwrap();
        let sp = spec(&s, 32);
        let (a, b) = (gv_number(&s, &sp).unwrap().value, gv_number(&g, &sp).unwrap().value);
        assert!((a - b).abs() < 1e-8 * a.abs(), "{a} {b}");
    }

    fn bump(s: &FramedScene, c: [f64; 3]) -> ScalarField {
        Bump::new(&s.chart, &c, &[0.8, 0.9, 0.7]).field()
    }

    #[test]
    fn zero_variation_vanishes() {
        let s = catalog::t3_tilted();
        let r = first_variation(&s, &Variation::zero(&s), &spec(&s, 8), &[1e-3]).unwrap();
        assert_eq!(r.formula, 0.0);
        assert!(r.finite_differences[0].1.abs() < 1e-9);
    }

    #[test]
    fn first_variation_matches_differences_each_case() {
        let s = catalog::t3_tilted();
        let sp = spec(&s, 24);
        let b = bump(&s, [1.0, 2.0, 3.0]);
        let x = VectorField::from_components(vec![ScalarField::Const(0.0); 3]).plus(&s.d_frame.as_ref().unwrap()[0].scaled_by(b.clone()), 1.0);
        let w = {
            // ω̇ = φ (dz − dz(T) ω) has ι_T ω̇ = 0
            let b = b.clone();
            let sc = s.clone();
            FormField::native(3, 1, move |env| {
                let loc = sc.local_at(env.clone())?;
                let dz = AltTensor::covector(vec![env.constant(0.0), env.constant(0.0), env.constant(1.0)]);
                let a = dz.combine(&loc.omega, -loc.t[0][2].value())?;
                Ok(a.scale_by(&b.eval(env)?))
            })
        };
        for v in [Variation::Gauge(vec![vec![b.clone()]]), Variation::Tangential(vec![x]), Variation::Form(w)] {
            let n = variation_normalization(&s, &v, &Sampling { count: 32, ..Default::default() }).unwrap();
            assert!(n.pass, "{n:?}");
            let r = first_variation(&s, &v, &sp, &[1e-3, 5e-4]).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn gauge_first_variation_on_random_frame() {
        let s = catalog::random_scene(1, 9, 0.25, false);
        let b = bump(&s, [1.0, 2.0, 3.0]);
        let r = first_variation(&s, &Variation::Gauge(vec![vec![b]]), &spec(&s, 24), &[1e-3, 5e-4]).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.formula.abs() > 1e-4, "{r:?}");
    }

    #[test]
    fn second_variation_matches_differences() {
        let s = catalog::t3_tilted();
        let b = bump(&s, [0.5, 1.0, 4.0]);
        let r = second_variation(&s, &Variation::Gauge(vec![vec![b]]), &spec(&s, 24), &[1e-2, 5e-3]).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn torus_criticality_pieces() {
        // harmonic D⊥ ((dη)^q = 0): everything vanishes
        let c = catalog::t3_contact();
        let r = criticality_residual(&c, &Sampling { count: 16, ..Default::default() }, 1e-9).unwrap();
        assert!(r.residual.pass && r.omega.pass && r.reduction_holds);
        let s = catalog::random_scene(1, 3, 0.2, false);
        let r = criticality_residual(&s, &Sampling { count: 16, ..Default::default() }, 1e-9).unwrap();
        assert!(r.lt_cubed_agreement.unwrap().pass);
    }

    #[test]
    fn lagrange_with_zero_multiplier_is_criticality() {
        let s = catalog::random_scene(1, 6, 0.2, false);
        let sm = Sampling { count: 8, ..Default::default() };
        let a = lagrange_residual(&s, &[0.0], &sm, 1.0).unwrap();
        let b = criticality_residual(&s, &sm, 1.0).unwrap();
        assert!((a.residual.sup - b.lt_cubed.unwrap().sup).abs() < 1e-12);
    }

    #[test]
    fn integrable_frame_has_zero_average_integrability() {
        let s = catalog::random_scene(2, 3, 0.2, false);
        let mut t = s.clone();
        // coordinate coframe dx1, dx2 is integrable
        t.coframe = Some(vec![
            FormField::from_terms(5, 1, vec![(vec![0], ScalarField::Const(1.0))]).unwrap(),
            FormField::from_terms(5, 1, vec![(vec![1], ScalarField::Const(1.0))]).unwrap(),
        ]);
        for j in average_integrability(&t, &spec(&t, 4)).unwrap() {
            assert_eq!(j.value, 0.0);
        }
    }

    #[test]
    fn index_form_is_symmetric_and_matches_jacobi() {
        let s = catalog::t3_tilted();
        let sp = spec(&s, 24);
        let a = catalog::random_form(3, 1, 1).scaled_by(bump(&s, [1.0, 1.0, 1.0]));
        let b = catalog::random_form(3, 1, 2).scaled_by(bump(&s, [2.0, 4.0, 5.0]));
        let jab = index_form(&s, &a, &b, &sp).unwrap();
        let jba = index_form(&s, &b, &a, &sp).unwrap();
        assert!((jab - jba).abs() <= 1e-6 * jab.abs().max(1.0), "{jab} {jba}");
        let via = index_form_via_jacobi(&s, &a, &b, &sp).unwrap();
        assert!((via - jab).abs() <= 1e-6 * jab.abs().max(1.0), "{via} {jab}");
        assert_eq!(index_form(&s, &FormField::zero(3, 1), &b, &spec(&s, 4)).unwrap(), 0.0);
    }

    #[test]
    fn metric_el_trivial_cases() {
        let c = catalog::t3_contact();
        let sm = Sampling { count: 16, ..Default::default() };
        let r = metric_el_residuals(&c, &sm, &spec(&c, 8), 1e-8).unwrap();
        assert!(r.residuals.iter().all(|x| x.pass && x.note.is_some()));
        assert_eq!(r.gv_d, 0.0);
    }

    #[test]
    fn seeded_variations_are_admissible() {
        let sm = Sampling { count: 16, ..Default::default() };
        for s in [catalog::t3_tilted(), catalog::random_scene(2, 5, 0.2, false)] {
            for case in VariationCase::ALL {
                for v in seeded_variations(&s, case, 2, 3).unwrap() {
                    let n = variation_normalization(&s, &v, &sm).unwrap();
                    assert!(n.pass, "{} {case:?}: {n:?}", s.name);
                }
            }
        }
    }

    #[test]
    fn metric_family_derivative() {
        let s = catalog::random_scene(1, 9, 0.25, false);
        let phi = bump(&s, [1.0, 2.0, 2.5]);
        let (fd, formula) = metric_family_check(&s, phi, &spec(&s, 24), 1e-3).unwrap();
        assert!((fd - formula).abs() <= 1e-3 * fd.abs().max(1e-3), "{fd} {formula}");
    }
}
