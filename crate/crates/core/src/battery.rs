//! Sampled checks of the exterior calculus on a framed scene: `d∘d = 0`, the
//! Lie derivative against a coordinate formula, `d L_T = (−1)^{q−1} L_T d`,
//! the contraction lemma for high-degree products, and `ι_T` as iterated
//! contractions.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::random_form;
use crate::error::Result;
use crate::exterior::{basis, contract, indices, multivector, AltTensor};
use crate::fields::{d, lie, FormField, FramedScene};
use crate::geometry::eta_metric;
use crate::invariants::{ResidualReport, Sampling};
use crate::jets::Jet;

const CHECKS: [&str; 5] = ["d_squared", "lie_coordinates", "lie_commutes_with_d", "iota_ab", "iterated_contraction"];

#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    pub scene: String,
    pub q: usize,
    pub dim: usize,
    pub checks: Vec<ResidualReport>,
    pub pass: bool,
}

/// `L_X a` for a single vector field from `(L_X a)_I = X^j ∂_j a_I + Σ_k ∂_{i_k}X^j a_{…j…}`.
fn lie_vector(x: &[Jet], a: &AltTensor<Jet>) -> AltTensor<f64> {
    let n = a.dim();
    let av = a.values();
    let mut out = AltTensor::zeros(n, a.degree(), crate::exterior::Variance::Covariant, &0.0);
    for (pos, &m) in basis(n, a.degree()).iter().enumerate() {
        let idx = indices(m);
        let mut v: f64 = (0..n).map(|j| x[j].value() * a.get(m).d(j)).sum();
        for k in 0..idx.len() {
            for (j, xj) in x.iter().enumerate() {
                let mut sw = idx.clone();
                sw[k] = j;
                v += xj.d(idx[k]) * av.component(&sw);
            }
        }
        out.comps_mut()[pos] = v;
    }
    out
}

/// `L_{A∧Y} a = L_Y ι_A a − ι_Y L_A a`, recursing down to single vectors.
pub fn lie_coordinates(t: &[Vec<Jet>], a: &AltTensor<Jet>) -> Result<AltTensor<f64>> {
    let q = t.len();
    let y = &t[q - 1];
    if q == 1 {
        return Ok(lie_vector(y, a));
    }
    let n = a.dim();
    let proto = a.comps()[0].zero_like();
    let am = multivector(&t[..q - 1], n, &proto)?;
    let first = lie_vector(y, &contract(&am, a)?);
    let la = lie_coordinates(&t[..q - 1], a)?;
    let yv: Vec<f64> = y.iter().map(Jet::value).collect();
    first.sub(&la.contract_vector(&yv)?)
}

fn point_residuals(scene: &FramedScene, forms: &[FormField], p: &[f64]) -> Result<[f64; 5]> {
    let loc = scene.local(p, 2)?;
    let (q, n) = (loc.q, loc.dim());
    let a: Vec<AltTensor<Jet>> = forms.iter().map(|f| f.eval(&loc.env)).collect::<Result<_>>()?;
    let mut r = [0.0f64; 5];
    for ak in a.iter().take(n - 1) {
        r[0] = r[0].max(d(&d(ak)?)?.sup_norm());
    }
    let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
    for ak in &a[q - 1..] {
        let direct = lie(&loc.tm, ak)?.values();
        r[1] = r[1].max(direct.sub(&lie_coordinates(&loc.t, ak)?)?.sup_norm());
    }
    for ak in &a[q - 1..n] {
        let lhs = d(&lie(&loc.tm, ak)?)?;
        let rhs = lie(&loc.tm, &d(ak)?)?.scale(sign);
        r[2] = r[2].max(lhs.sub(&rhs)?.sup_norm());
    }
    let av: Vec<AltTensor<f64>> = a.iter().map(|x| x.values()).collect();
    let tv = loc.t_values();
    let tm = multivector(&tv, n, &0.0)?;
    for da in q..=n {
        for db in 0..=n {
            if da + db <= n + q - 1 || da + db - q > n {
                continue;
            }
            let lhs = contract(&tm, &av[da])?.wedge(&av[db])?;
            let res = if db < q {
                lhs.sup_norm()
            } else {
                let s = if (q * (da - 1)) % 2 == 0 { 1.0 } else { -1.0 };
                lhs.sub(&av[da].wedge(&contract(&tm, &av[db])?)?.scale(s))?.sup_norm()
            };
            r[3] = r[3].max(res);
        }
    }
    for ak in &av[q..] {
        let mut it = ak.clone();
        for v in &tv {
            it = it.contract_vector(v)?;
        }
        r[4] = r[4].max(contract(&tm, ak)?.sub(&it)?.sup_norm());
    }
    Ok(r)
}

/// Runs every check on the sampled points, with random smooth forms of each
/// degree seeded from the sampling seed.
pub fn identity_battery(scene: &FramedScene, sampling: &Sampling, tol: f64) -> Result<BatteryReport> {
    let n = scene.dim();
    let forms: Vec<FormField> = (0..=n).map(|k| random_form(n, k, sampling.seed.wrapping_add(k as u64))).collect();
    let pts = sampling.points(scene);
    let rows: Vec<[f64; 5]> = pts.par_iter().map(|p| point_residuals(scene, &forms, p)).collect::<Result<_>>()?;
    let checks: Vec<ResidualReport> = CHECKS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let vals: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            ResidualReport::from_values(name, &vals, tol, sampling.seed)
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(BatteryReport { scene: scene.name.clone(), q: scene.q(), dim: n, checks, pass })
}

/// `ι_T dω` against `(−1)^{q−1} L_T ω`, and against `(−1)^{q−1}(H⊥)♭` when
/// the scene carries a metric.
pub fn eta_equivalences(scene: &FramedScene, sampling: &Sampling, tol: f64) -> Result<Vec<ResidualReport>> {
    let pts = sampling.points(scene);
    let with_metric = scene.metric.is_some();
    let rows: Vec<(f64, Option<(f64, f64)>)> = pts
        .par_iter()
        .map(|p| {
            let loc = scene.local(p, 1)?;
            let e = loc.eta()?.values();
            let el = loc.eta_lie()?.values();
            let m = if with_metric {
                let em = eta_metric(scene, p)?;
                Some((e.sub(&em)?.sup_norm(), el.sub(&em)?.sup_norm()))
            } else {
                None
            };
            Ok((e.sub(&el)?.sup_norm(), m))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![ResidualReport::from_values("contraction_vs_lie", &rows.iter().map(|r| r.0).collect::<Vec<_>>(), tol, sampling.seed)];
    if with_metric {
        let a: Vec<f64> = rows.iter().map(|r| r.1.unwrap().0).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.1.unwrap().1).collect();
        out.push(ResidualReport::from_values("contraction_vs_mean_curvature", &a, tol, sampling.seed));
        out.push(ResidualReport::from_values("lie_vs_mean_curvature", &b, tol, sampling.seed));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn battery_passes_on_catalog_scenes() {
        let sampling = Sampling { count: 32, ..Sampling::default() };
        for s in [catalog::t3_tilted(), catalog::random_scene(1, 7, 0.2, false), catalog::random_scene(2, 11, 0.15, false)] {
            let r = identity_battery(&s, &sampling, 1e-9).unwrap();
            assert!(r.pass, "{}: {:?}", s.name, r.checks);
        }
    }

    #[test]
    fn coordinate_lie_detects_a_wrong_sign() {
        let s = catalog::random_scene(2, 3, 0.2, false);
        let a = random_form(5, 3, 1);
        let loc = s.local(&[0.3, 1.1, 2.0, 0.4, 5.0], 2).unwrap();
        let at = a.eval(&loc.env).unwrap();
        let good = lie(&loc.tm, &at).unwrap().values();
        let coord = lie_coordinates(&loc.t, &at).unwrap();
        assert!(good.sub(&coord).unwrap().sup_norm() < 1e-10);
        let wrong = d(&contract(&loc.tm, &at).unwrap()).unwrap().add(&contract(&loc.tm, &d(&at).unwrap()).unwrap()).unwrap();
        assert!(wrong.values().sub(&coord).unwrap().sup_norm() > 1e-3);
    }

    #[test]
    fn eta_pipelines_on_metric_scenes() {
        let sampling = Sampling { count: 32, ..Sampling::default() };
        for s in [catalog::t3_tilted(), catalog::random_scene(2, 5, 0.2, false)] {
            let r = eta_equivalences(&s, &sampling, 1e-8).unwrap();
            assert!(r.iter().all(|c| c.pass), "{}: {r:?}", s.name);
        }
    }
}
