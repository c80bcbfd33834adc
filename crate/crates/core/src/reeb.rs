//! Reeb-type foliations of the solid torus built from a radial profile `f`,
//! with `μ = arctan f′`, `ω = cos μ dt − sin μ dr`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{AltTensor, Scalar};
use crate::fields::{Chart, Env, FormField, FramedScene, MetricField, VectorField};
use crate::jets::Jet;

/// Ordinary differential equation for the slope `p = f′`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(tag = "equation", rename_all = "snake_case")]
pub enum Equation {
    /// `(μ′ sin²μ)′ sin μ = A₀`, solved for `f‴`.
    Cond2 { a0: f64 },
    /// `μ′ sin²μ = Ã₀`, i.e. `f″ = Ã₀ ((1 + f′²)/f′)²`.
    Reduced { a0_tilde: f64 },
    /// `((μ′ sin²μ)′ sin μ)′ = λ μ′ sin μ`, solved for `f⁽⁴⁾`.
    Cond3 { lambda: f64 },
}

fn poly<S: Scalar>(x: &S, c: &[f64]) -> S {
    let mut acc = x.from_f64(c[c.len() - 1]);
    for &ci in c[..c.len() - 1].iter().rev() {
        acc = acc.mul(x);
        acc.add_scaled(&x.from_f64(1.0), ci);
    }
    acc
}

impl Equation {
    /// Number of slope derivatives in the state (`p, p′, …`).
    pub fn order(&self) -> usize {
        match self {
            Equation::Reduced { .. } => 1,
            Equation::Cond2 { .. } => 2,
            Equation::Cond3 { .. } => 3,
        }
    }

    /// Highest slope derivative from the lower ones.
    pub fn rhs<S: Scalar>(&self, y: &[S]) -> Result<S> {
        let p = &y[0];
        let p2 = p.mul(p);
        let s = poly(&p2, &[1.0, 1.0]);
        let pinv = p.recip()?;
        let sinv = s.recip()?;
        match *self {
            Equation::Reduced { a0_tilde } => {
                let a = s.mul(&pinv);
                Ok(a.mul(&a).scaled(a0_tilde))
            }
            Equation::Cond2 { a0 } => {
                let q = &y[1];
                let t1 = poly(&p2, &[-1.0, 1.0]).mul(&sinv).mul(&pinv).mul(q).mul(q).scaled(2.0);
                let pinv3 = pinv.mul(&pinv).mul(&pinv);
                let t2 = s.mul(&s).mul(&s.sqrt()?).mul(&pinv3).scaled(a0);
                let mut r = t1;
                r.add_scaled(&t2, 1.0);
                Ok(r)
            }
            Equation::Cond3 { lambda } => {
                let (q, w) = (&y[1], &y[2]);
                let pinv2 = pinv.mul(&pinv);
                let t1 = poly(&p2, &[-7.0, 6.0]).mul(&pinv).mul(&sinv).mul(w).mul(q);
                let t2 = poly(&p2, &[2.0, -9.0, 3.0]).mul(&sinv).mul(&sinv).mul(&pinv2).mul(q).mul(q).mul(q).scaled(-2.0);
                let t3 = s.mul(&pinv2).mul(q).scaled(lambda);
                let mut r = t1;
                r.add_scaled(&t2, 1.0);
                r.add_scaled(&t3, 1.0);
                Ok(r)
            }
        }
    }

    /// Quantity whose change from `r = 0` is known in closed or integrated form.
    fn monitor(&self, y: &[f64]) -> f64 {
        let p = y[0];
        let s = 1.0 + p * p;
        let mu = p.atan();
        match *self {
            // 2μ − sin 2μ − 4Ã₀ r is handled with r in `residual`
            Equation::Reduced { .. } => 2.0 * mu - (2.0 * mu).sin(),
            // μ′ sin²μ
            Equation::Cond2 { .. } => y[1] * p * p / (s * s),
            // (μ′ sin²μ)′ sin μ + λ cos μ
            Equation::Cond3 { lambda } => {
                let (q, w) = (y[1], y[2]);
                (w * p * p / (s * s) + 2.0 * p * (1.0 - p * p) * q * q / (s * s * s)) * p / s.sqrt() + lambda * mu.cos()
            }
        }
    }

    /// Integrand of the auxiliary quadrature carried with the state.
    fn aux_rate(&self, y: &[f64]) -> f64 {
        match *self {
            Equation::Cond2 { a0 } => a0 * (1.0 + y[0] * y[0]).sqrt() / y[0],
            Equation::Reduced { a0_tilde } => 4.0 * a0_tilde,
            Equation::Cond3 { .. } => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_min: f64,
    /// Blow-up threshold on `|f′|`.
    pub cap: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rtol: 1e-11, atol: 1e-13, h0: 1e-4, h_min: 1e-15, cap: 1e6, max_steps: 500_000 }
    }
}

impl StepControl {
    pub fn halved(self) -> StepControl {
        StepControl { rtol: self.rtol / 2.0, atol: self.atol / 2.0, ..self }
    }
}

/// State layout: `[f, p, p′, …, aux]`.
fn field(eq: &Equation, y: &[f64]) -> Result<Vec<f64>> {
    let m = eq.order();
    let mut dy = Vec::with_capacity(y.len());
    dy.push(y[1]);
    dy.extend_from_slice(&y[2..1 + m]);
    dy.push(eq.rhs(&y[1..1 + m])?);
    dy.push(eq.aux_rate(&y[1..]));
    Ok(dy)
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand-Prince step: fifth-order solution and error estimate.
fn dopri_step(eq: &Equation, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                ys[i] += h * A[s][j] * kj[i];
            }
        }
        k.push(field(eq, &ys)?);
    }
    let mut y5 = y.to_vec();
    let mut err = vec![0.0; n];
    for i in 0..n {
        for s in 0..7 {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    Ok((y5, err))
}

fn err_norm(ctl: &StepControl, y: &[f64], y1: &[f64], err: &[f64]) -> f64 {
    y.iter()
        .zip(y1)
        .zip(err)
        .map(|((a, b), e)| e.abs() / (ctl.atol + ctl.rtol * a.abs().max(b.abs())))
        .fold(0.0, f64::max)
}

/// Initial data at `r = 0` for `f, f′, f″, …`.
#[derive(Clone, Debug, Serialize)]
pub struct CauchyData {
    pub a1: f64,
    pub a2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a3: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReebProfile {
    #[serde(flatten)]
    pub equation: Equation,
    #[serde(flatten)]
    pub data: CauchyData,
    pub control: StepControl,
    /// Radius where `|f′|` reaches the cap.
    pub r0: f64,
    pub r0_bracket: f64,
    pub residual_max: f64,
    pub steps: usize,
    #[serde(skip)]
    pub r: Vec<f64>,
    /// `[f, p, p′, …, aux]` at each accepted node.
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
    #[serde(skip)]
    pub residual: Vec<f64>,
}

fn initial_state(eq: &Equation, data: &CauchyData) -> Result<Vec<f64>> {
    if data.a1 == 0.0 {
        return Err(Error::SlopeZero { r: 0.0 });
    }
    let mut y = vec![0.0, data.a1];
    if eq.order() >= 2 {
        y.push(data.a2);
    }
    if eq.order() >= 3 {
        y.push(data.a3.ok_or_else(|| Error::Invalid("f‴(0) required".into()))?);
    }
    y.push(0.0);
    Ok(y)
}

fn residual_at(eq: &Equation, r: f64, y: &[f64], y0: &[f64]) -> f64 {
    let m = eq.order();
    let aux = y[1 + m];
    let (a, b) = (eq.monitor(&y[1..]), eq.monitor(&y0[1..]));
    match eq {
        Equation::Reduced { a0_tilde } => a - b - 4.0 * a0_tilde * r,
        Equation::Cond2 { .. } => a - b - aux,
        Equation::Cond3 { .. } => a - b,
    }
}

/// Integrates from `r = 0` until `|f′|` exceeds the cap.
pub fn solve(eq: Equation, data: CauchyData, ctl: StepControl) -> Result<ReebProfile> {
    let y0 = initial_state(&eq, &data)?;
    let sign = data.a1.signum();
    let mut r = 0.0f64;
    let mut y = y0.clone();
    let mut h = ctl.h0;
    let mut rs = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut res = vec![0.0f64];
    let mut steps = 0;
    loop {
        if steps >= ctl.max_steps {
            return Err(Error::Invalid(format!("no blow-up within {} steps (r = {r})", ctl.max_steps)));
        }
        if h < ctl.h_min * r.max(1.0) {
            return Err(Error::StepUnderflow { r });
        }
        let (y1, err) = match dopri_step(&eq, &y, h) {
            Ok(v) => v,
            Err(_) => {
                h *= 0.25;
                continue;
            }
        };
        let e = err_norm(&ctl, &y, &y1, &err);
        if !e.is_finite() || e > 1.0 {
            h *= (0.9 * e.powf(-0.2)).clamp(0.1, 0.5);
            if !e.is_finite() {
                h = h.min(0.25 * h);
            }
            continue;
        }
        steps += 1;
        if y1[1].signum() != sign {
            return Err(Error::SlopeZero { r: r + h });
        }
        if y1[1].abs() > ctl.cap {
            let (lo, hi) = bisect_event(&eq, &y, h, ctl.cap)?;
            return Ok(ReebProfile {
                equation: eq,
                data,
                control: ctl,
                r0: r + 0.5 * (lo + hi),
                r0_bracket: hi - lo,
                residual_max: res.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                steps,
                r: rs,
                states,
                residual: res,
            });
        }
        r += h;
        y = y1;
        rs.push(r);
        res.push(residual_at(&eq, r, &y, &y0));
        states.push(y.clone());
        h *= (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
}

/// Step lengths bracketing `|f′| = cap` within one step.
fn bisect_event(eq: &Equation, y: &[f64], h: f64, cap: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = match dopri_step(eq, y, mid) {
            Ok((y1, _)) => !y1[1].is_finite() || y1[1].abs() > cap,
            Err(_) => true,
        };
        if above {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

pub fn solve_cond2(a0: f64, a1: f64, a2: f64, ctl: StepControl) -> Result<ReebProfile> {
    solve(Equation::Cond2 { a0 }, CauchyData { a1, a2, a3: None }, ctl)
}

/// The branch `A₀ = 0` with `Ã₀ = μ′ sin²μ` fixed by the Cauchy data.
pub fn solve_reduced(a1: f64, a2: f64, ctl: StepControl) -> Result<ReebProfile> {
    let s = 1.0 + a1 * a1;
    let a0_tilde = a2 * a1 * a1 / (s * s);
    if a0_tilde == 0.0 {
        return Err(Error::Hypothesis("μ is constant: f = (tan μ) r has no asymptote and is not critical".into()));
    }
    solve(Equation::Reduced { a0_tilde }, CauchyData { a1, a2, a3: None }, ctl)
}

pub fn solve_cond3(lambda: f64, a1: f64, a2: f64, a3: f64, ctl: StepControl) -> Result<ReebProfile> {
    solve(Equation::Cond3 { lambda }, CauchyData { a1, a2, a3: Some(a3) }, ctl)
}

/// `f‴(0)` making the A₀ condition hold at `r = 0`.
pub fn cond2_third_derivative(a0: f64, a1: f64, a2: f64) -> f64 {
    Equation::Cond2 { a0 }.rhs(&[a1, a2]).expect("a1 ≠ 0")
}

impl ReebProfile {
    pub fn slope_order(&self) -> usize {
        self.equation.order()
    }

    /// State `[f, p, …]` at radius `r` by stepping from the nearest node.
    pub fn state_at(&self, r: f64) -> Result<Vec<f64>> {
        if !(0.0..self.r0).contains(&r) {
            return Err(Error::Invalid(format!("r = {r} outside the profile domain [0, {})", self.r0)));
        }
        let i = match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => return Ok(self.states[i].clone()),
            Err(i) => i - 1,
        };
        let mut y = self.states[i].clone();
        let h = (r - self.r[i]) / 4.0;
        for _ in 0..4 {
            y = dopri_step(&self.equation, &y, h)?.0;
        }
        Ok(y)
    }

    /// Taylor coefficients of `f′(r + s)` through `s^k`.
    pub fn slope_series(&self, r: f64, k: usize) -> Result<Vec<f64>> {
        let y = self.state_at(r)?;
        slope_series(&self.equation, &y[1..1 + self.slope_order()], k)
    }

    pub fn mu(&self, i: usize) -> f64 {
        self.states[i][1].atan()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("r,f,fprime,mu,residual\n");
        for (i, r) in self.r.iter().enumerate() {
            let y = &self.states[i];
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", r, y[0], y[1], y[1].atan(), self.residual[i]));
        }
        out
    }
}

/// Taylor coefficients of the slope from `[p, p′, …]` by Picard iteration on
/// truncated series.
pub fn slope_series(eq: &Equation, y: &[f64], k: usize) -> Result<Vec<f64>> {
    let m = eq.order();
    let mut c = vec![0.0; k + 1];
    let mut fact = 1.0;
    for j in 0..m.min(k + 1) {
        if j > 0 {
            fact *= j as f64;
        }
        c[j] = y[j] / fact;
    }
    for _ in 0..=k {
        let mut ders = Vec::with_capacity(m);
        let mut cur = c.clone();
        for _ in 0..m {
            ders.push(Jet::from_coeffs(1, k, &cur)?);
            cur = (0..=k).map(|j| if j < k { (j + 1) as f64 * cur[j + 1] } else { 0.0 }).collect();
        }
        let f = eq.rhs(&ders)?;
        for j in 0..=k {
            if j + m > k {
                break;
            }
            let mut ratio = 1.0;
            for t in j + 1..=j + m {
                ratio /= t as f64;
            }
            c[j + m] = f.coeffs()[j] * ratio;
        }
    }
    Ok(c)
}

/// `μ(r)` as a chart jet from the profile.
fn mu_jet(profile: &ReebProfile, env: &Env) -> Result<Jet> {
    let r = env.coord(0);
    let series = profile.slope_series(r.value(), env.coord(0).order())?;
    Ok(r.compose(&series).atan())
}

/// Solid torus `(r, θ, t)` with the axis `r = 0` as singular set.
pub fn reeb_chart(r_max: f64) -> Chart {
    Chart::new(&["r", "theta", "t"], &[0.0, 0.0, 0.0], &[r_max, 2.0 * PI, 2.0 * PI], &[false, true, true])
        .unwrap()
        .with_sigma(0, 0.0, 2)
        .unwrap()
}

pub fn reeb_scene(profile: &ReebProfile) -> Result<FramedScene> {
    reeb_scene_on(profile, profile.r0)
}

/// Reeb scene restricted to `r < r_max ≤ r₀`.
pub fn reeb_scene_on(profile: &ReebProfile, r_max: f64) -> Result<FramedScene> {
    if !(r_max > 0.0 && r_max <= profile.r0) {
        return Err(Error::Invalid(format!("radius {r_max} outside (0, {}]", profile.r0)));
    }
    let p = Arc::new(profile.clone());
    let chart = reeb_chart(r_max);
    let omega = {
        let p = p.clone();
        FormField::native(3, 1, move |env| {
            let mu = mu_jet(&p, env)?;
            AltTensor::form(3, 1, vec![mu.sin().scale(-1.0), env.constant(0.0), mu.cos()])
        })
    };
    let t = {
        let p = p.clone();
        VectorField::native(3, move |env| {
            let mu = mu_jet(&p, env)?;
            Ok(vec![mu.sin().scale(-1.0), env.constant(0.0), mu.cos()])
        })
    };
    let mut s = FramedScene::new("reeb", chart, omega, vec![t])?;
    s.integrable = true;
    let radial = {
        let p = p.clone();
        VectorField::native(3, move |env| {
            let mu = mu_jet(&p, env)?;
            Ok(vec![mu.cos(), env.constant(0.0), mu.sin()])
        })
    };
    let angular = VectorField::native(3, |env| Ok(vec![env.constant(0.0), env.coord(0).recip()?, env.constant(0.0)]));
    s.d_frame = Some(vec![radial, angular]);
    s.metric = Some(MetricField::Native(Arc::new(|env: &Env| {
        let r = env.coord(0);
        let z = env.constant(0.0);
        Ok(vec![vec![env.constant(1.0), z.clone(), z.clone()], vec![z.clone(), r.mul(r), z.clone()], vec![z.clone(), z, env.constant(1.0)]])
    })));
    Ok(s)
}

/// `(μ, μ′, μ″, μ‴)` at `r` from the profile's Taylor data.
pub fn mu_derivatives(profile: &ReebProfile, r: f64) -> Result<[f64; 4]> {
    let series = profile.slope_series(r, 3)?;
    let mu = Jet::from_coeffs(1, 3, &series)?.atan();
    let c = mu.coeffs();
    Ok([c[0], c[1], 2.0 * c[2], 6.0 * c[3]])
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyManifest {
    pub a0: f64,
    pub a2: f64,
    pub control: StepControl,
    pub profiles: Vec<FamilyEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyEntry {
    pub a1: f64,
    pub r0: f64,
    pub r0_bracket: f64,
    pub residual_max: f64,
    pub steps: usize,
    pub csv: String,
}

/// Profiles of the A₀ condition for several slopes, solved in parallel.
pub fn cond2_family(a0: f64, a2: f64, a1s: &[f64], ctl: StepControl) -> Result<Vec<ReebProfile>> {
    a1s.par_iter().map(|&a1| solve_cond2(a0, a1, a2, ctl)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::d;

    fn ctl() -> StepControl {
        StepControl::default()
    }

    #[test]
    fn cond2_family_blows_up_with_small_residual() {
        let a1s: Vec<f64> = (1..=5).map(|i| i as f64 / 8.0).collect();
        let fam = cond2_family(1.0, 0.0, &a1s, ctl()).unwrap();
        for p in &fam {
            assert!(p.r0.is_finite() && p.r0 > 0.0);
            assert!(p.residual_max <= 1e-6, "{}", p.residual_max);
        }
    }

    #[test]
    fn blow_up_radius_converges() {
        let a = solve_cond2(1.0, 0.25, 0.0, ctl()).unwrap();
        let b = solve_cond2(1.0, 0.25, 0.0, ctl().halved()).unwrap();
        assert!((a.r0 - b.r0).abs() < 1e-4 * a.r0);
    }

    #[test]
    fn reduced_branch_first_integral() {
        let p = solve_reduced(0.5, 0.3, ctl()).unwrap();
        assert!(p.residual_max < 1e-8, "{}", p.residual_max);
        assert!(matches!(solve_reduced(0.5, 0.0, ctl()), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn reduced_branch_blow_up_matches_first_integral() {
        // μ reaches π/2 where 2μ − sin 2μ = π
        let (a1, a2) = (0.5f64, 0.3);
        let p = solve_reduced(a1, a2, ctl()).unwrap();
        let s = 1.0 + a1 * a1;
        let at = a2 * a1 * a1 / (s * s);
        let mu0 = a1.atan();
        let r_star = (PI - (2.0 * mu0 - (2.0 * mu0).sin())) / (4.0 * at);
        assert!((p.r0 - r_star).abs() < 1e-5 * r_star, "{} {}", p.r0, r_star);
    }

    #[test]
    fn linear_profile_is_equilibrium_of_cond3() {
        let y = [0.7, 0.0, 0.0];
        assert_eq!(Equation::Cond3 { lambda: 1.3 }.rhs(&y).unwrap(), 0.0);
        let s = slope_series(&Equation::Cond3 { lambda: 1.3 }, &y, 5).unwrap();
        assert!(s[1..].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn cond3_with_zero_lambda_reproduces_cond2() {
        let (a0, a1, a2) = (1.0, 0.375, 0.1);
        let a3 = cond2_third_derivative(a0, a1, a2);
        let p2 = solve_cond2(a0, a1, a2, ctl()).unwrap();
        let p3 = solve_cond3(0.0, a1, a2, a3, ctl()).unwrap();
        let rmax = p2.r0.min(p3.r0);
        for (i, r) in p2.r.iter().enumerate() {
            if *r < rmax {
                let m3 = p3.state_at(*r).unwrap()[1].atan();
                assert!((p2.mu(i) - m3).abs() < 1e-6, "{r}");
            }
        }
        assert!((p2.r0 - p3.r0).abs() < 1e-6 * p2.r0);
    }

    #[test]
    fn cond3_residual() {
        let p = solve_cond3(1.0, 0.25, 0.1, 0.0, ctl()).unwrap();
        assert!(p.r0.is_finite());
        assert!(p.residual_max <= 1e-5, "{}", p.residual_max);
    }

    #[test]
    fn slope_series_satisfies_equation() {
        let eq = Equation::Cond2 { a0: 1.0 };
        let c = slope_series(&eq, &[0.3, 0.2], 6).unwrap();
        // compare with a tiny integration step
        let mut y = vec![0.0, 0.3, 0.2, 0.0];
        let h = 1e-3;
        y = dopri_step(&eq, &y, h).unwrap().0;
        let series: f64 = c.iter().enumerate().map(|(j, cj)| cj * h.powi(j as i32)).sum();
        assert!((y[1] - series).abs() < 1e-15 * 1e3, "{} {}", y[1], series);
    }

    #[test]
    fn closed_forms_on_reeb_scene() {
        let prof = solve_cond2(1.0, 0.25, 0.0, ctl()).unwrap();
        let s = reeb_scene(&prof).unwrap();
        for &r in &[0.05, 0.3, 0.6, 0.9 * prof.r0] {
            let p = [r, 1.0, 2.0];
            let loc = s.local(&p, 3).unwrap();
            assert!((loc.normalization() - 1.0).abs() < 1e-14);
            let [mu, m1, m2, m3] = mu_derivatives(&prof, r).unwrap();
            let (sm, cm) = mu.sin_cos();
            let eta = loc.eta().unwrap().values();
            let want = [m1 * sm * cm, 0.0, m1 * sm * sm];
            for k in 0..3 {
                assert!((eta.comps()[k] - want[k]).abs() < 1e-10 * (1.0 + want[k].abs()), "{r} {k}");
            }
            let deta = d(&loc.eta().unwrap()).unwrap();
            assert!(loc.eta().unwrap().wedge(&deta).unwrap().sup_norm() < 1e-10);
            // (μ′ sin²μ)′ = μ″ sin²μ + 2μ′² sin μ cos μ
            let g = m2 * sm * sm + 2.0 * m1 * m1 * sm * cm;
            let l2 = {
                let a = loc.lie(&loc.omega).unwrap();
                loc.lie(&a).unwrap().values()
            };
            assert!((l2.comps()[0] + g * cm).abs() < 1e-9 * (1.0 + g.abs()));
            assert!((l2.comps()[2] + g * sm).abs() < 1e-9 * (1.0 + g.abs()));
            let l3 = {
                let a = loc.lie(&loc.omega).unwrap();
                let b = loc.lie(&a).unwrap();
                loc.lie(&b).unwrap().values()
            };
            let scale = 1.0 + (m3 * sm * sm).abs() + g.abs();
            assert!(l3.sup_norm() < 1e-8 * scale, "{r}: {:?}", l3.comps());
        }
    }

    #[test]
    fn critical_profiles_through_generic_pipeline() {
        use crate::invariants::{criticality_residual, gv_number, lagrange_residual, Sampling};
        use crate::quadrature::QuadratureSpec;
        let sm = Sampling { count: 64, ..Default::default() };
        let prof = solve_cond2(1.0, 0.5, 0.0, ctl()).unwrap();
        let s = reeb_scene(&prof).unwrap();
        let c = criticality_residual(&s, &sm, 1e-5).unwrap();
        assert!(c.lt_cubed.as_ref().unwrap().pass, "{:?}", c.lt_cubed);
        assert!(c.integrability.pass);
        let spec = QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&s.chart).with_resolution(8) };
        assert_eq!(gv_number(&s, &spec).unwrap().value, 0.0);

        let lambda = 1.0;
        let prof = solve_cond3(lambda, 0.25, 0.1, 0.0, ctl()).unwrap();
        let s = reeb_scene(&prof).unwrap();
        let l = lagrange_residual(&s, &[lambda], &sm, 1e-5).unwrap();
        assert!(l.residual.pass, "{:?}", l.residual);
        let wrong = lagrange_residual(&s, &[lambda + 0.5], &sm, 1e-5).unwrap();
        assert!(!wrong.residual.pass);
    }
}
