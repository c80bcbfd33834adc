//! Tensor-product quadrature over the chart box with Σ-excision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::PointMetric;
use crate::fields::{Chart, FormField, FramedScene};

/// Points per Gauss-Legendre panel.
pub const PANEL: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Nodes per coordinate.
    pub resolution: Vec<usize>,
    /// Initial Σ-tube half-width as a fraction of the box width.
    pub eps: f64,
    /// Number of ε values in the halving schedule.
    pub schedule: usize,
    /// Relative drift below which the schedule is declared converged.
    pub drift_tol: f64,
    /// Also integrate at half resolution for an error estimate.
    pub estimate: bool,
}

impl QuadratureSpec {
    pub fn for_chart(chart: &Chart) -> QuadratureSpec {
        let n = chart.dim();
        let r = if n <= 3 { 64 } else { 24 };
        QuadratureSpec { resolution: vec![r; n], eps: 1e-2, schedule: 3, drift_tol: 1e-3, estimate: true }
    }

    pub fn with_resolution(mut self, r: usize) -> QuadratureSpec {
        self.resolution.iter_mut().for_each(|x| *x = r);
        self
    }

    pub fn validate(&self, chart: &Chart) -> Result<()> {
        if self.resolution.len() != chart.dim() || self.resolution.iter().any(|&r| r < 2) {
            return Err(Error::Invalid("resolution must be at least 2 per coordinate".into()));
        }
        if !chart.sigma.is_empty() && !(self.eps > 0.0) {
            return Err(Error::Invalid("Σ-tube radius must be positive".into()));
        }
        if self.schedule == 0 {
            return Err(Error::Invalid("empty ε schedule".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// `|I(N) − I(N/2)|` at the finest ε.
    pub error_estimate: Option<f64>,
    /// `(ε, I(ε))` over the schedule; a single entry when Σ is empty.
    pub schedule: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub drift: f64,
    pub converged: bool,
    pub nodes: usize,
}

/// Gauss-Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// One-dimensional rule as `(nodes, weights)`.
#[derive(Clone, Debug)]
pub struct Rule1 {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1 {
    pub fn trapezoid(lo: f64, hi: f64, n: usize) -> Rule1 {
        let h = (hi - lo) / n as f64;
        Rule1 { nodes: (0..n).map(|k| lo + k as f64 * h).collect(), weights: vec![h; n] }
    }

    pub fn composite_gl(intervals: &[(f64, f64)], n: usize) -> Rule1 {
        let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
        let (gx, gw) = gauss_legendre(PANEL.min(n));
        let m = gx.len();
        let panels_total = (n / m).max(intervals.len());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(a, b) in intervals {
            let p = (((b - a) / total) * panels_total as f64).round().max(1.0) as usize;
            let h = (b - a) / p as f64;
            for k in 0..p {
                let c = a + (k as f64 + 0.5) * h;
                for j in 0..m {
                    nodes.push(c + 0.5 * h * gx[j]);
                    weights.push(0.5 * h * gw[j]);
                }
            }
        }
        Rule1 { nodes, weights }
    }
}

/// Per-coordinate rules for the box with Σ-tubes of half-width `eps`·width
/// removed.
pub fn rules(chart: &Chart, resolution: &[usize], eps: f64) -> Vec<Rule1> {
    (0..chart.dim())
        .map(|c| {
            let (lo, hi) = (chart.lo[c], chart.hi[c]);
            let cuts: Vec<f64> = chart.sigma.iter().filter(|s| s.coord == c).map(|s| s.value).collect();
            if cuts.is_empty() {
                return if chart.periodic[c] {
                    Rule1::trapezoid(lo, hi, resolution[c])
                } else {
                    Rule1::composite_gl(&[(lo, hi)], resolution[c])
                };
            }
            let r = eps * (hi - lo);
            let mut removed: Vec<(f64, f64)> = Vec::new();
            for v in cuts {
                removed.push((v - r, v + r));
                if chart.periodic[c] {
                    removed.push((v - r + (hi - lo), v + r + (hi - lo)));
                    removed.push((v - r - (hi - lo), v + r - (hi - lo)));
                }
            }
            removed.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut kept = Vec::new();
            let mut start = lo;
            for (a, b) in removed {
                if a > start {
                    kept.push((start, a.min(hi)));
                }
                start = start.max(b);
                if start >= hi {
                    break;
                }
            }
            if start < hi {
                kept.push((start, hi));
            }
            kept.retain(|(a, b)| b - a > 1e-14 * (hi - lo));
            Rule1::composite_gl(&kept, resolution[c])
        })
        .collect()
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let m = xs.len() / 2;
    pairwise_sum(&xs[..m]) + pairwise_sum(&xs[m..])
}

/// Tensor-product sum `Σ w f(x)`; rows over the first coordinate run in
/// parallel and are combined in index order.
pub fn tensor_sum<F>(rules: &[Rule1], f: &F) -> Result<(f64, usize)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = rules.len();
    let inner: usize = rules[1..].iter().map(|r| r.nodes.len()).product();
    let rows: Vec<Result<f64>> = (0..rules[0].nodes.len())
        .into_par_iter()
        .map(|i0| {
            let mut p = vec![0.0; n];
            p[0] = rules[0].nodes[i0];
            let mut terms = Vec::with_capacity(inner);
            let mut idx = vec![0usize; n];
            for _ in 0..inner {
                let mut w = rules[0].weights[i0];
                for d in 1..n {
                    p[d] = rules[d].nodes[idx[d]];
                    w *= rules[d].weights[idx[d]];
                }
                terms.push(w * f(&p)?);
                for d in (1..n).rev() {
                    idx[d] += 1;
                    if idx[d] < rules[d].nodes.len() {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            Ok(pairwise_sum(&terms))
        })
        .collect();
    let mut sums = Vec::with_capacity(rows.len());
    for r in rows {
        sums.push(r?);
    }
    Ok((pairwise_sum(&sums), rules[0].nodes.len() * inner))
}

/// Integral of a coordinate density over the box, with Σ-excision over the
/// ε schedule when Σ is non-empty.
pub fn integrate<F>(chart: &Chart, spec: &QuadratureSpec, f: F) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    spec.validate(chart)?;
    let steps = if chart.sigma.is_empty() { 1 } else { spec.schedule };
    let mut schedule = Vec::new();
    let mut nodes = 0;
    let mut eps = spec.eps;
    for _ in 0..steps {
        let (v, k) = tensor_sum(&rules(chart, &spec.resolution, eps), &f)?;
        schedule.push((eps, v));
        nodes += k;
        eps *= 0.5;
    }
    let value = schedule.last().unwrap().1;
    let error_estimate = if spec.estimate {
        let half: Vec<usize> = spec.resolution.iter().map(|&r| (r / 2).max(2)).collect();
        let (v, k) = tensor_sum(&rules(chart, &half, schedule.last().unwrap().0), &f)?;
        nodes += k;
        Some((value - v).abs())
    } else {
        None
    };
    let (extrapolated, drift) = extrapolate(&schedule);
    let converged = drift <= spec.drift_tol;
    Ok(QuadResult { value, error_estimate, schedule, extrapolated, drift, converged, nodes })
}

/// Limit of the ε schedule (Aitken when the increments contract
/// geometrically, otherwise linear Richardson) and the relative drift of the
/// last step.
pub fn extrapolate(schedule: &[(f64, f64)]) -> (f64, f64) {
    let k = schedule.len();
    let last = schedule[k - 1].1;
    if k == 1 {
        return (last, 0.0);
    }
    let prev = schedule[k - 2].1;
    let scale = last.abs().max(prev.abs()).max(1e-300);
    let drift = if last == prev { 0.0 } else { (last - prev).abs() / scale };
    if k >= 3 {
        let (a, b, c) = (schedule[k - 3].1, prev, last);
        let (d1, d2) = (b - a, c - b);
        if d1 != 0.0 && (d2 / d1) > 0.0 && (d2 / d1) < 0.9 {
            return (c - d2 * d2 / (d2 - d1), drift);
        }
    }
    (2.0 * last - prev, drift)
}

/// Integral of the top-degree form `a` over the chart.
pub fn integrate_form(scene: &FramedScene, a: &FormField, spec: &QuadratureSpec) -> Result<QuadResult> {
    if a.degree() != scene.dim() {
        return Err(Error::Dimension(format!("integrating a degree {} form in dimension {}", a.degree(), scene.dim())));
    }
    integrate(&scene.chart, spec, |p| Ok(a.eval(&scene.env(p, 0)?)?.comps()[0].value()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpReport {
    pub p: f64,
    pub codim: usize,
    pub exponent_ok: bool,
    pub schedule: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// `∫ ‖b‖^p dV_g` over the ε schedule with a finiteness verdict.
pub fn lp_norm_check(scene: &FramedScene, b: &FormField, p: f64, spec: &QuadratureSpec) -> Result<LpReport> {
    if !(p >= 1.0) {
        return Err(Error::Invalid("p must be at least 1".into()));
    }
    let codim = scene.chart.sigma.iter().map(|s| s.codim).min().unwrap_or(0);
    let exponent_ok = scene.chart.sigma.is_empty() || (codim as f64 - 1.0) * (p - 1.0) >= 1.0;
    let q = integrate(&scene.chart, &QuadratureSpec { estimate: false, ..spec.clone() }, |x| {
        let env = scene.env(x, 0)?;
        let g: Vec<Vec<f64>> = match scene.metric_at(&env)? {
            Some(g) => g.iter().map(|r| r.iter().map(|v| v.value()).collect()).collect(),
            None => (0..x.len()).map(|i| (0..x.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        };
        let pm = PointMetric::new(g)?;
        let bv = b.eval(&env)?.values();
        let nn = pm.inner(&bv, &bv)?.max(0.0);
        Ok(nn.powf(0.5 * p) * pm.sqrt_det)
    })?;
    Ok(LpReport { p, codim, exponent_ok, verdict: classify(&q.schedule, spec.drift_tol), schedule: q.schedule })
}

pub fn classify(schedule: &[(f64, f64)], tol: f64) -> Verdict {
    let v: Vec<f64> = schedule.iter().map(|s| s.1).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Verdict::Divergent;
    }
    let k = v.len();
    if k == 1 {
        return Verdict::Finite;
    }
    let last = v[k - 1];
    let d2 = v[k - 1] - v[k - 2];
    if d2.abs() <= tol * last.abs().max(1e-300) || d2 == 0.0 {
        return Verdict::Finite;
    }
    if k >= 3 {
        let d1 = v[k - 2] - v[k - 3];
        if d1 > 0.0 && d2 >= 0.75 * d1 {
            return Verdict::Divergent;
        }
    }
    Verdict::Inconclusive
}

/// Sets the global pool size from `FOLIA_THREADS` when present.
pub fn init_threads() {
    if let Some(n) = std::env::var("FOLIA_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::exterior::AltTensor;
    use crate::fields::{Bump, ScalarField};
    use std::f64::consts::PI;

    #[test]
    fn legendre_rule_is_exact_on_polynomials() {
        for m in 1..=10 {
            let (x, w) = gauss_legendre(m);
            for deg in 0..2 * m {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((s - exact).abs() < 1e-14, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn torus_volume() {
        let s = catalog::t3_tilted();
        let vol = FormField::from_terms(3, 3, vec![(vec![0, 1, 2], ScalarField::Const(1.0))]).unwrap();
        let r = integrate_form(&s, &vol, &QuadratureSpec::for_chart(&s.chart).with_resolution(8)).unwrap();
        assert!((r.value - (2.0 * PI).powi(3)).abs() < 1e-10);
    }

    #[test]
    fn periodic_trapezoid_is_spectral() {
        let c = Chart::new(&["x"], &[0.0], &[2.0 * PI], &[true]).unwrap();
        let f = |p: &[f64]| Ok((p[0].sin() + 0.3 * (2.0 * p[0]).cos()).exp());
        let exact = integrate(&c, &QuadratureSpec { resolution: vec![64], eps: 0.0, schedule: 1, drift_tol: 1e-3, estimate: false }, f).unwrap().value;
        let err = |n| {
            let spec = QuadratureSpec { resolution: vec![n], eps: 0.0, schedule: 1, drift_tol: 1e-3, estimate: false };
            (integrate(&c, &spec, f).unwrap().value - exact).abs()
        };
        let (e4, e8) = (err(4), err(8));
        assert!(e8 * 4.0 <= e4 && e8 < 1e-3);
    }

    #[test]
    fn excision_removes_the_tube() {
        let c = Chart::new(&["x", "y"], &[-1.0, 0.0], &[1.0, 1.0], &[false, false]).unwrap().with_sigma(0, 0.0, 1).unwrap();
        let spec = QuadratureSpec { resolution: vec![16, 8], eps: 0.05, schedule: 3, drift_tol: 1e-3, estimate: false };
        let r = integrate(&c, &spec, |_| Ok(1.0)).unwrap();
        assert!((r.schedule[0].1 - 1.8).abs() < 1e-13);
        assert!((r.schedule[2].1 - 1.95).abs() < 1e-13);
        assert!((r.extrapolated - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_under_parallelism() {
        let s = catalog::random_scene(1, 3, 0.2, false);
        let spec = QuadratureSpec::for_chart(&s.chart).with_resolution(12);
        let f = |p: &[f64]| Ok(s.local(p, 1)?.eta()?.values().comps()[0]);
        let a = integrate(&s.chart, &spec, f).unwrap().value;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| integrate(&s.chart, &spec, f).unwrap().value);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn stokes_for_compactly_supported_forms() {
        let s = catalog::random_scene(1, 5, 0.2, false);
        let chart = crate::fields::Chart::new(&["x1", "x2", "x3"], &[-1.0; 3], &[1.0; 3], &[false; 3]).unwrap();
        let bump = Bump::new(&chart, &[0.1, -0.2, 0.05], &[0.8, 0.7, 0.75]);
        let a = catalog::random_form(3, 2, 4);
        let b = FormField::native(3, 2, move |env| Ok(a.eval(env)?.scale_by(&bump.eval(env)?)));
        let db = b.exterior_derivative();
        let mut scene = s.clone();
        scene.chart = chart;
        // the compact bump has steep flanks; the rule resolves them at 128 nodes
        let spec = QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&scene.chart).with_resolution(128) };
        let r = integrate(&scene.chart, &spec, |p| Ok(db.eval(&scene.env(p, 1)?)?.comps()[0].value())).unwrap();
        let coarse = QuadratureSpec { resolution: vec![32; 3], ..spec.clone() };
        let scale = integrate(&scene.chart, &coarse, |p| Ok(db.eval(&scene.env(p, 1)?)?.comps()[0].value().abs())).unwrap().value;
        assert!(r.value.abs() <= 1e-7 * scale.max(1.0), "{} vs {}", r.value, scale);
    }

    #[test]
    fn lp_checks() {
        let s = catalog::t3_tilted();
        let spec = QuadratureSpec::for_chart(&s.chart).with_resolution(8);
        let zero = FormField::zero(3, 2);
        let r = lp_norm_check(&s, &zero, 2.0, &spec).unwrap();
        assert_eq!(r.verdict, Verdict::Finite);
        assert_eq!(r.schedule[0].1, 0.0);
        let b = FormField::from_terms(3, 2, vec![(vec![0, 1], ScalarField::parse("sin(z)", &s.chart, &[]).unwrap())]).unwrap();
        let r = lp_norm_check(&s, &b, 2.0, &spec).unwrap();
        assert_eq!(r.verdict, Verdict::Finite);
        assert!(r.schedule[0].1 > 0.0);
        let _ = AltTensor::<f64>::basis_form(3, &[0]);
    }

    #[test]
    fn lp_divergence_is_reported() {
        // ‖b‖² = 1/x² near Σ = {x = 0}: the excised integral grows like 1/ε.
        let chart = Chart::new(&["x", "y", "z"], &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[false; 3]).unwrap().with_sigma(0, 0.0, 1).unwrap();
        let mut s = catalog::t3_tilted();
        s.chart = chart.clone();
        s.metric = None;
        let b = FormField::from_terms(3, 2, vec![(vec![1, 2], ScalarField::parse("1/x", &chart, &[]).unwrap())]).unwrap();
        let spec = QuadratureSpec { resolution: vec![64, 4, 4], eps: 1e-2, schedule: 3, drift_tol: 1e-3, estimate: false };
        let r = lp_norm_check(&s, &b, 2.0, &spec).unwrap();
        assert!(!r.exponent_ok);
        assert_eq!(r.verdict, Verdict::Divergent);
    }
}
