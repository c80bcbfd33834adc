//! Built-in scenes.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::{AltTensor, Variance};
use crate::fields::{Chart, Env, FormField, FramedScene, MetricField, ScalarField, VectorField};
use crate::jets::Jet;
use crate::linalg;

type Frame = Arc<dyn Fn(&Env) -> Result<Vec<Vec<Jet>>> + Send + Sync>;

pub fn exprs(chart: &Chart, params: &[(String, f64)], srcs: &[&str]) -> Result<Vec<ScalarField>> {
    srcs.iter().map(|s| ScalarField::parse(s, chart, params)).collect()
}

pub fn vector(chart: &Chart, srcs: &[&str]) -> Result<VectorField> {
    Ok(VectorField::from_components(exprs(chart, &[], srcs)?))
}

fn torus3() -> Chart {
    Chart::new(&["x", "y", "z"], &[0.0; 3], &[2.0 * PI; 3], &[true; 3]).unwrap()
}

/// `ω = cos z dx + sin z dy` with its Reeb field: η = 0.
pub fn t3_contact() -> FramedScene {
    let c = torus3();
    let omega = FormField::from_components(3, 1, exprs(&c, &[], &["cos(z)", "sin(z)", "0"]).unwrap()).unwrap();
    let t = vector(&c, &["cos(z)", "sin(z)", "0"]).unwrap();
    let mut s = FramedScene::new("t3_contact", c.clone(), omega, vec![t]).unwrap();
    s.d_frame = Some(vec![vector(&c, &["-sin(z)", "cos(z)", "0"]).unwrap(), vector(&c, &["0", "0", "1"]).unwrap()]);
    s.metric = Some(MetricField::FromDFrame);
    s
}

/// `ω = cos z dx + sin z dy`, `T = cos z ∂x + sin z ∂y + ∂z`; η∧dη = −dx∧dy∧dz.
pub fn t3_tilted() -> FramedScene {
    let c = torus3();
    let omega = FormField::from_components(3, 1, exprs(&c, &[], &["cos(z)", "sin(z)", "0"]).unwrap()).unwrap();
    let t = vector(&c, &["cos(z)", "sin(z)", "1"]).unwrap();
    let mut s = FramedScene::new("t3_tilted", c.clone(), omega, vec![t]).unwrap();
    s.d_frame = Some(vec![vector(&c, &["-sin(z)", "cos(z)", "0"]).unwrap(), vector(&c, &["0", "0", "1"]).unwrap()]);
    s.metric = Some(MetricField::FromDFrame);
    s
}

/// Scene whose frame `F = (T_1..T_q, E_1..E_{q+1})` is given pointwise:
/// ω is the wedge of the first q rows of F⁻¹ and F is declared orthonormal.
pub fn adapted_frame_scene(name: &str, chart: Chart, q: usize, frame: Frame) -> Result<FramedScene> {
    let n = chart.dim();
    if n != 2 * q + 1 {
        return Err(Error::Scene(format!("dimension {n} does not match codimension {q}")));
    }
    let coframe = |a: usize| {
        let frame = frame.clone();
        FormField::native(n, 1, move |env| {
            let inv = linalg::inverse(&transpose(&frame(env)?))?;
            AltTensor::form(n, 1, inv[a].clone())
        })
    };
    let theta: Vec<FormField> = (0..q).map(coframe).collect();
    let omega = {
        let frame = frame.clone();
        FormField::native(n, q, move |env| {
            let inv = linalg::inverse(&transpose(&frame(env)?))?;
            let mut acc = AltTensor::form(n, 1, inv[0].clone())?;
            for row in &inv[1..q] {
                acc = acc.wedge(&AltTensor::form(n, 1, row.clone())?)?;
            }
            Ok(acc)
        })
    };
    let column = |a: usize| {
        let frame = frame.clone();
        VectorField::native(n, move |env| Ok(frame(env)?.swap_remove(a)))
    };
    let t = (0..q).map(column).collect();
    let mut s = FramedScene::new(name, chart, omega, t)?;
    s.coframe = Some(theta);
    s.d_frame = Some((q..n).map(column).collect());
    let f = frame.clone();
    s.metric = Some(MetricField::Native(Arc::new(move |env| {
        let inv = linalg::inverse(&transpose(&f(env)?))?;
        let mut g = vec![vec![env.constant(0.0); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut v = env.constant(0.0);
                for row in &inv {
                    v.add_product(&row[i], &row[j], 1.0);
                }
                g[i][j] = v.clone();
                g[j][i] = v;
            }
        }
        Ok(g)
    })));
    Ok(s)
}

fn transpose(cols: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let n = cols.len();
    (0..n).map(|i| (0..n).map(|a| cols[a][i].clone()).collect()).collect()
}

/// Frame `E_a = e_a + ε Σ_b c_ab sin(k_ab·x + φ_ab) e_b` on the flat torus.
/// With `fixed_t`, the first q columns stay coordinate fields, making D⊥
/// integrable.
pub fn random_scene(q: usize, seed: u64, eps: f64, fixed_t: bool) -> FramedScene {
    let n = 2 * q + 1;
    let names = ["x1", "x2", "x3", "x4", "x5", "x6", "x7"];
    let chart = Chart::new(&names[..n], &vec![0.0; n], &vec![2.0 * PI; n], &vec![true; n]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for a in 0..n {
        if fixed_t && a < q {
            continue;
        }
        for b in 0..n {
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-1i32..=1) as f64).collect();
            let coef = rng.gen_range(-1.0..1.0) * eps;
            let phase = rng.gen_range(0.0..2.0 * PI);
            terms.push((a, b, coef, k, phase));
        }
    }
    let terms = Arc::new(terms);
    let frame: Frame = Arc::new(move |env: &Env| {
        let mut cols: Vec<Vec<Jet>> =
            (0..n).map(|a| (0..n).map(|b| env.constant(if a == b { 1.0 } else { 0.0 })).collect()).collect();
        for (a, b, coef, k, phase) in terms.iter() {
            let mut arg = env.constant(*phase);
            for (i, ki) in k.iter().enumerate() {
                if *ki != 0.0 {
                    arg.add_scaled(env.coord(i), *ki);
                }
            }
            cols[*a][*b].add_scaled(&arg.sin(), *coef);
        }
        Ok(cols)
    });
    let name = format!("random_q{q}_{seed}");
    adapted_frame_scene(&name, chart, q, frame).unwrap()
}

/// Random smooth q-form with compact-free periodic coefficients, used as a
/// test argument for the calculus identities.
pub fn random_form(n: usize, degree: usize, seed: u64) -> FormField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = crate::exterior::basis(n, degree).len();
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..len)
        .map(|_| {
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            (rng.gen_range(-1.0..1.0), k, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    FormField::native(n, degree, move |env| {
        let comps = terms
            .iter()
            .map(|(c, k, p)| {
                let mut arg = env.constant(*p);
                for (i, ki) in k.iter().enumerate() {
                    arg.add_scaled(env.coord(i), *ki);
                }
                arg.cos().scale(*c)
            })
            .collect();
        AltTensor::new(n, degree, Variance::Covariant, comps)
    })
}

/// Bump of radius `0.3·width` per coordinate at a seeded centre in the box.
pub fn seeded_bump(chart: &Chart, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chart.dim();
    let c: Vec<f64> = (0..n).map(|i| rng.gen_range(chart.lo[i]..chart.hi[i])).collect();
    let r: Vec<f64> = (0..n).map(|i| 0.3 * chart.width(i)).collect();
    crate::fields::Bump::new(chart, &c, &r).field()
}

pub fn by_name(name: &str) -> Option<FramedScene> {
    match name {
        "t3_contact" => Some(t3_contact()),
        "t3_tilted" => Some(t3_tilted()),
        "random_q1" => Some(random_scene(1, 7, 0.2, false)),
        "random_q2" => Some(random_scene(2, 11, 0.15, false)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sample_points;

    #[test]
    fn catalog_scenes_validate() {
        for s in [t3_contact(), t3_tilted(), random_scene(1, 3, 0.2, false), random_scene(2, 5, 0.15, true)] {
            let pts = sample_points(&s.chart, 32, 1);
            s.validate(&pts).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }
}
