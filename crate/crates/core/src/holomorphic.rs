//! Complex-valued forms for transversely holomorphic flows, stored as pairs
//! of real forms.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{contract, multivector, AltTensor, Variance};
use crate::fields::{d, Chart, Env, FormField, FramedScene};
use crate::invariants::{ResidualReport, Sampling};
use crate::jets::Jet;
use crate::quadrature::{integrate, QuadResult, QuadratureSpec};

/// `re + i·im` for real forms or multivectors.
#[derive(Clone, Debug)]
pub struct Complex<T> {
    pub re: T,
    pub im: T,
}

pub type CForm = Complex<AltTensor<Jet>>;

impl CForm {
    pub fn real(a: AltTensor<Jet>) -> CForm {
        let im = a.scale(0.0);
        Complex { re: a, im }
    }

    pub fn d(&self) -> Result<CForm> {
        Ok(Complex { re: d(&self.re)?, im: d(&self.im)? })
    }

    pub fn wedge(&self, o: &CForm) -> Result<CForm> {
        Ok(Complex {
            re: self.re.wedge(&o.re)?.sub(&self.im.wedge(&o.im)?)?,
            im: self.re.wedge(&o.im)?.add(&self.im.wedge(&o.re)?)?,
        })
    }

    pub fn power(&self, k: usize) -> Result<CForm> {
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// `ι_{T_1 + iT_2}(α + iβ)`, complex bilinear.
    pub fn contract(&self, t: &CForm) -> Result<CForm> {
        Ok(Complex {
            re: contract(&t.re, &self.re)?.sub(&contract(&t.im, &self.im)?)?,
            im: contract(&t.re, &self.im)?.add(&contract(&t.im, &self.re)?)?,
        })
    }

    pub fn sub(&self, o: &CForm) -> Result<CForm> {
        Ok(Complex { re: self.re.sub(&o.re)?, im: self.im.sub(&o.im)? })
    }

    /// Sup over components of `(|re|² + |im|²)^{1/2}`.
    pub fn sup_norm(&self) -> f64 {
        let (a, b) = (self.re.values(), self.im.values());
        a.comps().iter().zip(b.comps()).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max)
    }

    pub fn top(&self) -> Complex64 {
        Complex64::new(self.re.comps()[0].value(), self.im.comps()[0].value())
    }
}

pub type MultivectorFn = Arc<dyn Fn(&Env) -> Result<AltTensor<Jet>> + Send + Sync>;

/// `(ω_c, T_c)` on a chart of dimension `2q + 1`.
#[derive(Clone)]
pub struct ComplexScene {
    pub name: String,
    pub chart: Chart,
    pub params: Vec<(String, f64)>,
    pub q: usize,
    pub omega: Complex<FormField>,
    /// Real and imaginary q-vectors.
    pub t: Complex<MultivectorFn>,
}

pub struct CLocal {
    pub omega: CForm,
    pub t: CForm,
    pub env: Env,
}

impl CLocal {
    pub fn d_omega(&self) -> Result<CForm> {
        self.omega.d()
    }

    /// `η_c = ι_{T_c} dω_c`.
    pub fn eta(&self) -> Result<CForm> {
        self.omega.d()?.contract(&self.t)
    }
}

impl ComplexScene {
    pub fn new(name: &str, chart: Chart, q: usize, omega: Complex<FormField>, t: Complex<MultivectorFn>) -> Result<ComplexScene> {
        let n = chart.dim();
        if n != 2 * q + 1 || omega.re.dim() != n || omega.re.degree() != q || omega.im.degree() != q {
            return Err(Error::Dimension(format!("complex scene needs q-forms on a {}-manifold", 2 * q + 1)));
        }
        Ok(ComplexScene { name: name.into(), chart, params: Vec::new(), q, omega, t })
    }

    /// The real pair `(ω, T)` with vanishing imaginary parts.
    pub fn from_real(s: &FramedScene) -> ComplexScene {
        let n = s.dim();
        let q = s.q();
        let ts = s.t.clone();
        let re: MultivectorFn = Arc::new(move |env: &Env| crate::fields::eval_multivector(&ts, env));
        let im: MultivectorFn =
            Arc::new(move |env: &Env| Ok(AltTensor::zeros(n, q, Variance::Contravariant, &env.constant(0.0))));
        ComplexScene {
            name: s.name.clone(),
            chart: s.chart.clone(),
            params: s.params.clone(),
            q,
            omega: Complex { re: s.omega.clone(), im: FormField::zero(n, q) },
            t: Complex { re, im },
        }
    }

    pub fn local(&self, p: &[f64], order: usize) -> Result<CLocal> {
        let env = Env::new(&self.chart, &self.params, p, order)?;
        let omega = Complex { re: self.omega.re.eval(&env)?, im: self.omega.im.eval(&env)? };
        let t = Complex { re: (self.t.re)(&env)?, im: (self.t.im)(&env)? };
        Ok(CLocal { omega, t, env })
    }
}

fn sampled<F>(scene: &ComplexScene, sampling: &Sampling, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let pts = crate::fields::sample_points_with(&scene.chart, sampling.count, sampling.seed, sampling.eps);
    let rows: Vec<Result<Vec<f64>>> = pts.par_iter().map(|p| f(p)).collect();
    rows.into_iter().collect()
}

/// `|ι_{T_c} ω_c − 1|` sampled.
pub fn normalization_residual(scene: &ComplexScene, sampling: &Sampling, tol: f64) -> Result<ResidualReport> {
    let rows = sampled(scene, sampling, |p| {
        let l = scene.local(p, 0)?;
        let v = l.omega.contract(&l.t)?.top();
        Ok(vec![(v - 1.0).norm()])
    })?;
    let v: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    Ok(ResidualReport::from_values("ι_{T_c} ω_c − 1", &v, tol, sampling.seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct FormalIntegrabilityReport {
    pub normalization: ResidualReport,
    /// `ω₁∧dω₁ − ω₂∧dω₂`.
    pub real_part: ResidualReport,
    /// `ω₁∧dω₂ + ω₂∧dω₁`.
    pub imaginary_part: ResidualReport,
    /// `dω_c − ω_c∧η_c` with `η_c = ι_{T_c} dω_c`.
    pub structure: ResidualReport,
    pub pass: bool,
}

pub fn formal_integrability_residual(scene: &ComplexScene, sampling: &Sampling, tol: f64) -> Result<FormalIntegrabilityReport> {
    let normalization = normalization_residual(scene, sampling, 1e-9)?;
    if !normalization.pass {
        return Err(Error::Hypothesis(format!("complex normalization fails: sup |ι_T ω − 1| = {:e}", normalization.sup)));
    }
    let rows = sampled(scene, sampling, |p| {
        let l = scene.local(p, 1)?;
        let dw = l.d_omega()?;
        let cc = l.omega.wedge(&dw)?;
        let s = dw.sub(&l.omega.wedge(&l.eta()?)?)?;
        Ok(vec![cc.re.sup_norm(), cc.im.sup_norm(), s.sup_norm()])
    })?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let real_part = ResidualReport::from_values("ω₁∧dω₁ − ω₂∧dω₂", &col(0), tol, sampling.seed);
    let imaginary_part = ResidualReport::from_values("ω₁∧dω₂ + ω₂∧dω₁", &col(1), tol, sampling.seed);
    let structure = ResidualReport::from_values("dω_c − ω_c∧η_c", &col(2), tol, sampling.seed);
    let pass = real_part.pass && imaginary_part.pass && structure.pass;
    Ok(FormalIntegrabilityReport { normalization, real_part, imaginary_part, structure, pass })
}

/// `∫ η_c∧(dη_c)^q`, real and imaginary parts integrated separately.
pub fn gv_complex(scene: &ComplexScene, spec: &QuadratureSpec) -> Result<(QuadResult, QuadResult)> {
    let density = |p: &[f64]| -> Result<Complex64> {
        let l = scene.local(p, 2)?;
        let eta = l.eta()?;
        Ok(eta.wedge(&eta.d()?.power(scene.q)?)?.top())
    };
    let re = integrate(&scene.chart, spec, |p| density(p).map(|z| z.re))?;
    let im = integrate(&scene.chart, spec, |p| density(p).map(|z| z.im))?;
    Ok((re, im))
}

/// Whether the convex hull of the points contains the origin.
pub fn hull_contains_origin(points: &[Complex64]) -> bool {
    if points.iter().any(|z| *z == Complex64::new(0.0, 0.0)) {
        return true;
    }
    let mut angles: Vec<f64> = points.iter().map(|z| z.arg()).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    // all points lie in an open half-plane iff some angular gap exceeds π
    gap <= PI
}

/// `(Σ λ_j)^{q+1} / Π λ_j` for `q + 1` weights.
pub fn bott_invariant_formula(lambda: &[Complex64]) -> Result<Complex64> {
    if lambda.len() < 2 {
        return Err(Error::Invalid("at least two weights required".into()));
    }
    if hull_contains_origin(lambda) {
        return Err(Error::HullContainsOrigin);
    }
    let sum: Complex64 = lambda.iter().sum();
    let prod: Complex64 = lambda.iter().product();
    Ok(sum.powu(lambda.len() as u32) / prod)
}

type CJet = (Jet, Jet);

fn cmul(a: &CJet, b: &CJet) -> CJet {
    let mut re = a.0.mul(&b.0);
    re.add_product(&a.1, &b.1, -1.0);
    let mut im = a.0.mul(&b.1);
    im.add_product(&a.1, &b.0, 1.0);
    (re, im)
}

fn cconst(env: &Env, z: Complex64) -> CJet {
    (env.constant(z.re), env.constant(z.im))
}

fn cexp_i(x: &Jet) -> CJet {
    (x.cos(), x.sin())
}

fn crecip(a: &CJet) -> Result<CJet> {
    let mut n = a.0.mul(&a.0);
    n.add_product(&a.1, &a.1, 1.0);
    let inv = n.recip()?;
    Ok((a.0.mul(&inv), a.1.mul(&inv).scale(-1.0)))
}

/// Chart `z₀ = cos χ e^{iφ₁}`, `z₁ = sin χ e^{iφ₂}` on `S³` with the two Hopf
/// circles `χ ∈ {0, π/2}` excluded.
pub fn sphere_chart() -> Chart {
    Chart::new(&["chi", "phi1", "phi2"], &[0.0, 0.0, 0.0], &[PI / 2.0, 2.0 * PI, 2.0 * PI], &[false, true, true])
        .unwrap()
        .with_sigma(0, 0.0, 2)
        .unwrap()
        .with_sigma(0, PI / 2.0, 2)
        .unwrap()
}

/// Flow on `S³` of `X_λ = λ₀ z₀ ∂_{z₀} + λ₁ z₁ ∂_{z₁}`: `ω_c` is the restriction
/// of `λ₀ z₀ dz₁ − λ₁ z₁ dz₀`,
/// `e^{iψ}[u dχ + i sin χ cos χ (λ₀ dφ₂ − λ₁ dφ₁)]` with `ψ = φ₁ + φ₂` and
/// `u = λ₀ cos²χ + λ₁ sin²χ`, and `T_c = e^{−iψ} u⁻¹ ∂_χ`.
pub fn bott_sphere_model(l0: Complex64, l1: Complex64) -> Result<ComplexScene> {
    if hull_contains_origin(&[l0, l1]) {
        return Err(Error::HullContainsOrigin);
    }
    let parts = move |env: &Env| -> Result<(CJet, CJet, CJet, CJet)> {
        let chi = env.coord(0);
        let psi = {
            let mut s = env.coord(1).clone();
            s.add_scaled(env.coord(2), 1.0);
            s
        };
        let (c, s) = (chi.cos(), chi.sin());
        let (c2, s2) = (c.mul(&c), s.mul(&s));
        let u = {
            let a = cconst(env, l0);
            let b = cconst(env, l1);
            let mut re = c2.mul(&a.0);
            re.add_product(&s2, &b.0, 1.0);
            let mut im = c2.mul(&a.1);
            im.add_product(&s2, &b.1, 1.0);
            (re, im)
        };
        let e = cexp_i(&psi);
        let cs = c.mul(&s);
        // i·cs·e^{iψ}
        let ie = (e.1.mul(&cs).scale(-1.0), e.0.mul(&cs));
        Ok((e, u, ie, (cs.clone(), cs)))
    };
    let omega_re;
    let omega_im;
    {
        let comps = move |env: &Env, part: usize| -> Result<AltTensor<Jet>> {
            let (e, u, ie, _) = parts(env)?;
            let dchi = cmul(&e, &u);
            let dphi1 = cmul(&ie, &cconst(env, -l1));
            let dphi2 = cmul(&ie, &cconst(env, l0));
            let pick = |z: CJet| if part == 0 { z.0 } else { z.1 };
            AltTensor::form(3, 1, vec![pick(dchi), pick(dphi1), pick(dphi2)])
        };
        let c2 = comps.clone();
        omega_re = FormField::native(3, 1, move |env| comps(env, 0));
        omega_im = FormField::native(3, 1, move |env| c2(env, 1));
    }
    let t_part = move |env: &Env, part: usize| -> Result<AltTensor<Jet>> {
        let (e, u, _, _) = parts(env)?;
        let coef = cmul(&(e.0.clone(), e.1.scale(-1.0)), &crecip(&u)?);
        let z = env.constant(0.0);
        let v = if part == 0 { coef.0 } else { coef.1 };
        AltTensor::new(3, 1, Variance::Contravariant, vec![v, z.clone(), z])
    };
    let t2 = t_part.clone();
    let t = Complex::<MultivectorFn> { re: Arc::new(move |env: &Env| t_part(env, 0)), im: Arc::new(move |env: &Env| t2(env, 1)) };
    ComplexScene::new("bott_s3", sphere_chart(), 1, Complex { re: omega_re, im: omega_im }, t)
}

/// Ratio of the chart-model integral to the closed form; the model gives
/// `(2π)^{q+1}` times the closed form.
#[derive(Clone, Debug, Serialize)]
pub struct BottComparison {
    pub lambda: Vec<[f64; 2]>,
    pub formula: [f64; 2],
    pub integral: [f64; 2],
    pub error_estimate: Option<f64>,
    pub normalized: [f64; 2],
    pub relative_difference: f64,
}

pub fn bott_comparison(l0: Complex64, l1: Complex64, spec: &QuadratureSpec) -> Result<BottComparison> {
    let formula = bott_invariant_formula(&[l0, l1])?;
    let s = bott_sphere_model(l0, l1)?;
    let (re, im) = gv_complex(&s, spec)?;
    // the excised tubes lose O(ε²); use the ε-schedule limit
    let integral = Complex64::new(re.extrapolated, im.extrapolated);
    let normalized = integral / (2.0 * PI).powi(2);
    Ok(BottComparison {
        lambda: vec![[l0.re, l0.im], [l1.re, l1.im]],
        formula: [formula.re, formula.im],
        integral: [integral.re, integral.im],
        error_estimate: re.error_estimate.zip(im.error_estimate).map(|(a, b)| a.hypot(b)),
        normalized: [normalized.re, normalized.im],
        relative_difference: (normalized - formula).norm() / formula.norm(),
    })
}

/// Wraps real vector fields as the multivector of a complex scene.
pub fn multivector_fn(vs: Vec<crate::fields::VectorField>) -> MultivectorFn {
    Arc::new(move |env: &Env| {
        let vals = vs.iter().map(|v| v.eval(env)).collect::<Result<Vec<_>>>()?;
        multivector(&vals, env.dim(), &env.constant(0.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::invariants::gv_number;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bott_closed_form() {
        assert_eq!(bott_invariant_formula(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(), c(4.0, 0.0));
        assert_eq!(bott_invariant_formula(&[c(1.0, 0.0); 3]).unwrap(), c(27.0, 0.0));
        assert_eq!(bott_invariant_formula(&[c(1.0, 0.0), c(-1.0, 0.0)]), Err(Error::HullContainsOrigin));
        assert!(hull_contains_origin(&[c(1.0, 0.0), c(-0.5, 1.0), c(-0.5, -1.0)]));
        assert!(!hull_contains_origin(&[c(1.0, 0.0), c(0.1, 1.0), c(0.1, -1.0)]));
    }

    #[test]
    fn sphere_model_is_formally_integrable() {
        let sm = Sampling { count: 64, ..Default::default() };
        for (a, b) in [(c(1.0, 0.0), c(1.0, 0.0)), (c(1.0, 0.5), c(2.0, -0.3))] {
            let s = bott_sphere_model(a, b).unwrap();
            let r = formal_integrability_residual(&s, &sm, 1e-9).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(bott_sphere_model(c(1.0, 0.0), c(-2.0, 0.0)).is_err());
    }

    #[test]
    fn perturbed_pair_is_detected() {
        let mut s = bott_sphere_model(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        let extra = FormField::from_terms(3, 1, vec![(vec![2], crate::fields::ScalarField::parse("0.3*sin(phi1)", &s.chart, &[]).unwrap())]).unwrap();
        s.omega.im = s.omega.im.plus(&extra, 1.0);
        let r = formal_integrability_residual(&s, &Sampling { count: 32, ..Default::default() }, 1e-9).unwrap();
        assert!(!r.pass && r.real_part.sup > 1e-3);
    }

    #[test]
    fn real_case_reduces() {
        let s = catalog::t3_tilted();
        let cs = ComplexScene::from_real(&s);
        let spec = QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&s.chart).with_resolution(12) };
        let (re, im) = gv_complex(&cs, &spec).unwrap();
        assert_eq!(re.value, gv_number(&s, &spec).unwrap().value);
        assert_eq!(im.value, 0.0);
        let (re, _) = gv_complex(&ComplexScene::from_real(&catalog::t3_contact()), &spec).unwrap();
        assert_eq!(re.value, 0.0);
        let r = formal_integrability_residual(&ComplexScene::from_real(&catalog::t3_contact()), &Sampling { count: 16, ..Default::default() }, 1e-9).unwrap();
        assert!(!r.real_part.pass, "contact form is not integrable");
    }

    #[test]
    fn complex_linearity() {
        let s = bott_sphere_model(c(1.0, 0.2), c(0.7, -0.4)).unwrap();
        let l = s.local(&[0.4, 1.0, 2.0], 2).unwrap();
        let dw = l.d_omega().unwrap();
        assert!(dw.re.sub(&d(&l.omega.re).unwrap()).unwrap().sup_norm() == 0.0);
        // ι_{X₁+iX₂} α = ι_{X₁}α + i ι_{X₂}α for real α
        let alpha = CForm::real(l.omega.re.clone());
        let v = alpha.contract(&l.t).unwrap();
        let want_im = contract(&l.t.im, &l.omega.re).unwrap();
        assert!(v.im.sub(&want_im).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn sphere_model_integral_matches_closed_form() {
        let spec = QuadratureSpec::for_chart(&sphere_chart()).with_resolution(32);
        for (a, b) in [(c(1.0, 0.0), c(1.0, 0.0)), (c(1.0, 0.5), c(2.0, -0.3))] {
            let r = bott_comparison(a, b, &spec).unwrap();
            assert!(r.relative_difference < 1e-6, "{r:?}");
        }
    }
}
