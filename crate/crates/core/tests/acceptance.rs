//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use folia_core::battery::{eta_equivalences, identity_battery};
use folia_core::catalog;
use folia_core::fields::{d, Chart, FramedScene, ScalarField};
use folia_core::geometry::{gv_density_metric, helix_scene, sigma_invariants, twisted_product};
use folia_core::holomorphic::{bott_comparison, bott_invariant_formula, bott_sphere_model, formal_integrability_residual};
use folia_core::invariants::{
    criticality_residual, first_variation, gv_d, gv_number, index_form, lagrange_residual, metric_el_residuals, second_variation,
    seeded_variations, variation_normalization, Sampling, VariationCase,
};
use folia_core::linalg;
use folia_core::quadrature::{init_threads, QuadratureSpec};
use folia_core::reeb::{self, mu_derivatives, reeb_scene, StepControl};
use folia_core::scenefile::load_scene;
use folia_core::{Error, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn spec(s: &FramedScene, r: usize) -> QuadratureSpec {
    QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&s.chart).with_resolution(r) }
}

fn scene_file(name: &str) -> FramedScene {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name);
    load_scene(&p).expect("scene file loads").1
}

fn cond2_family() -> Vec<f64> {
    (1..=5).map(|i| i as f64 / 8.0).collect()
}

fn identities() -> Result<Outcome> {
    let start = Instant::now();
    let sm = Sampling::default();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let scenes = [catalog::t3_tilted(), catalog::random_scene(1, 7, 0.2, false), catalog::random_scene(2, 11, 0.15, false), scene_file("warped_q2.scene")];
    for s in &scenes {
        let r = identity_battery(s, &sm, 1e-9)?;
        pass &= r.pass;
        worst = r.checks.iter().fold(worst, |m, c| m.max(c.sup));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(pass && secs < 10.0, format!("worst sup residual {worst:.1e} over {} scenes (q = 1, 2) x {} points, {secs:.1} s (limit 10 s)", scenes.len(), sm.count))
}

fn eta_pipelines() -> Result<Outcome> {
    let sm = Sampling::default();
    let prof = reeb::solve_cond2(1.0, 0.25, 0.0, StepControl::default())?;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut n = 0;
    for s in [catalog::t3_tilted(), catalog::random_scene(1, 7, 0.2, false), catalog::random_scene(2, 11, 0.15, false), reeb_scene(&prof)?] {
        for c in eta_equivalences(&s, &sm, 1e-8)? {
            pass &= c.pass;
            worst = worst.max(c.sup);
            n += 1;
        }
    }
    outcome(pass, format!("{n} pairwise comparisons, worst sup {worst:.1e} (tolerance 1e-8)"))
}

fn reeb_closed_form() -> Result<Outcome> {
    let prof = reeb::solve_cond2(1.0, 0.25, 0.0, StepControl::default())?;
    let s = reeb_scene(&prof)?;
    let (mut eta_err, mut gv_sup): (f64, f64) = (0.0, 0.0);
    for p in Sampling::default().points(&s) {
        let loc = s.local(&p, 2)?;
        let [mu, m1, _, _] = mu_derivatives(&prof, p[0])?;
        let (sm, cm) = mu.sin_cos();
        let want = [m1 * sm * cm, 0.0, m1 * sm * sm];
        let eta = loc.eta()?;
        for (k, w) in want.iter().enumerate() {
            eta_err = eta_err.max((eta.values().comps()[k] - w).abs());
        }
        gv_sup = gv_sup.max(eta.wedge(&d(&eta)?)?.sup_norm());
    }
    outcome(eta_err <= 1e-10 && gv_sup == 0.0, format!("max |η − closed form| {eta_err:.1e} (tolerance 1e-10), max |η∧dη| = {gv_sup:e}"))
}

fn tilted_gv() -> Result<Outcome> {
    let s = catalog::t3_tilted();
    let start = Instant::now();
    let sp = spec(&s, 64);
    let v = gv_number(&s, &sp)?.value;
    let secs = start.elapsed().as_secs_f64();
    let want = -(2.0 * PI).powi(3);
    let rel = (v - want).abs() / want.abs();
    outcome(rel <= 1e-6 && secs < 30.0, format!("gv = {v:.12} vs −(2π)³ = {want:.12}, relative {rel:.1e} at 64³ in {secs:.1} s"))
}

fn variations() -> Result<Outcome> {
    let s = catalog::random_scene(1, 9, 0.25, false);
    let sp = spec(&s, 16);
    let sm = Sampling { count: 32, ..Default::default() };
    let (mut first_worst, mut second_worst): (f64, f64) = (0.0, 0.0);
    let mut pass = true;
    let mut counts = Vec::new();
    for (i, case) in VariationCase::ALL.into_iter().enumerate() {
        let vs = seeded_variations(&s, case, 3, 100 + i as u64)?;
        for v in &vs {
            pass &= variation_normalization(&s, v, &sm)?.pass;
            let f = first_variation(&s, v, &sp, &[1e-3, 5e-4])?;
            let g = second_variation(&s, v, &sp, &[1e-2, 5e-3])?;
            pass &= f.pass && g.pass && f.formula != 0.0;
            first_worst = first_worst.max(f.extrapolated_error);
            second_worst = second_worst.max(g.extrapolated_error);
        }
        counts.push(format!("{case:?} {}", vs.len()));
    }
    outcome(
        pass,
        format!("{}; worst relative error first {first_worst:.1e} (tol 1e-3), second {second_worst:.1e} (tol 1e-2)", counts.join(", ")),
    )
}

fn index_symmetry() -> Result<Outcome> {
    let s = catalog::t3_tilted();
    let sp = spec(&s, 24);
    let mut worst: f64 = 0.0;
    for k in 0..10u64 {
        let a = catalog::random_form(3, 1, 10 * k).scaled_by(catalog::seeded_bump(&s.chart, 10 * k + 1));
        let b = catalog::random_form(3, 1, 10 * k + 2).scaled_by(catalog::seeded_bump(&s.chart, 10 * k + 3));
        let (jab, jba) = (index_form(&s, &a, &b, &sp)?, index_form(&s, &b, &a, &sp)?);
        worst = worst.max((jab - jba).abs() / jab.abs().max(jba.abs()).max(1.0));
    }
    outcome(worst <= 1e-6, format!("10 bump pairs, worst |J(α,β) − J(β,α)|/max(|J|,1) = {worst:.1e} (tolerance 1e-6)"))
}

fn cond2_profiles() -> Result<Outcome> {
    let ctl = StepControl::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for a1 in cond2_family() {
        let start = Instant::now();
        let p = reeb::solve_cond2(1.0, a1, 0.0, ctl)?;
        let secs = start.elapsed().as_secs_f64();
        let h = reeb::solve_cond2(1.0, a1, 0.0, ctl.halved())?;
        let shift = (p.r0 - h.r0).abs() / p.r0;
        pass &= p.r0.is_finite() && p.residual_max <= 1e-6 && shift < 1e-4 && secs < 5.0;
        parts.push(format!("A1={a1}: r0={:.6} res {:.0e} shift {shift:.0e} {secs:.2}s", p.r0, p.residual_max));
    }
    outcome(pass, parts.join("; "))
}

fn reduced_branch() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (a1, a2) in [(0.5, 0.3), (0.25, 0.1), (1.0, 0.5), (0.125, 0.05), (2.0, 1.0)] {
        worst = worst.max(reeb::solve_reduced(a1, a2, StepControl::default())?.residual_max);
    }
    outcome(worst < 1e-8, format!("5 trajectories, max drift of 2μ − sin 2μ − 4Ã₀r = {worst:.1e} (limit 1e-8)"))
}

fn criticality() -> Result<Outcome> {
    let sm = Sampling { count: 128, ..Default::default() };
    let ctl = StepControl::default();
    let (mut w2, mut w3): (f64, f64) = (0.0, 0.0);
    let mut pass = true;
    for a1 in cond2_family() {
        let s = reeb_scene(&reeb::solve_cond2(1.0, a1, 0.0, ctl)?)?;
        let c = criticality_residual(&s, &sm, 1e-5)?;
        let l = c.lt_cubed.ok_or_else(|| Error::Invalid("q = 1 report lacks (L_T)^3 ω".into()))?;
        pass &= l.pass;
        w2 = w2.max(l.sup);
    }
    for (lambda, a1, a2, a3) in [(1.0, 0.25, 0.1, 0.0), (0.5, 0.3, 0.0, 0.2), (2.0, 0.2, 0.05, -0.1)] {
        let s = reeb_scene(&reeb::solve_cond3(lambda, a1, a2, a3, ctl)?)?;
        let l = lagrange_residual(&s, &[lambda], &sm, 1e-5)?;
        pass &= l.residual.pass;
        w3 = w3.max(l.residual.sup);
    }
    outcome(pass, format!("(L_T)³ω on 5 A₀ profiles max {w2:.1e}; (L_T)³ω − λL_Tω on 3 λ profiles max {w3:.1e} (tolerance 1e-5)"))
}

fn metric_el() -> Result<Outcome> {
    let sm = Sampling { count: 64, ..Default::default() };
    let ctl = StepControl::default();
    let chart = Chart::new(&["b0", "b1", "f1"], &[-1.0, -1.0, 0.0], &[1.0, 1.0, 1.0], &[false, false, false])?;
    let phi = ScalarField::parse("1 + b0^2/4 + b0*b1/8", &chart, &[])?;
    let mut scenes = vec![reeb_scene(&reeb::solve_cond2(1.0, 0.25, 0.0, ctl)?)?, twisted_product(1, phi, chart)?, scene_file("warped_q2.scene")];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut in_u = Vec::new();
    for s in scenes.iter_mut() {
        let r = if s.dim() <= 3 { 12 } else { 4 };
        let rep = metric_el_residuals(s, &sm, &spec(s, r), 1e-8)?;
        for x in &rep.residuals {
            pass &= x.pass;
            worst = worst.max(x.sup);
        }
        in_u.push(format!("{} {:.0}%", s.name, 100.0 * rep.u_fraction));
    }
    let c = catalog::t3_contact();
    let g = gv_d(&c, &spec(&c, 16))?;
    pass &= g == 0.0;
    outcome(pass, format!("integrable scenes ({}) worst residual {worst:.1e} (tolerance 1e-8); harmonic gv_D = {g:e}", in_u.join(", ")))
}

fn sigma_and_density() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_130_501);
    let mut sig: f64 = 0.0;
    for k in 0..100 {
        let q = 1 + k % 3;
        let mut m = || (0..q).map(|_| (0..q).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>()).collect::<Vec<_>>();
        let (a1, a2) = (m(), m());
        let sum: Vec<Vec<f64>> = (0..q).map(|i| (0..q).map(|j| a1[i][j] + a2[i][j]).collect()).collect();
        let total = (0..=q).map(|k| sigma_invariants(&[a1.clone(), a2.clone()], &[k, q - k])).sum::<Result<f64>>()?;
        sig = sig.max((total - linalg::det(&sum)?).abs());
    }
    let mut dens: f64 = 0.0;
    let mut used = 0;
    let scenes = [catalog::t3_tilted(), helix_scene(0.4)?, catalog::random_scene(1, 9, 0.25, false), catalog::random_scene(2, 5, 0.2, true)];
    for s in &scenes {
        for p in (Sampling { count: 64, ..Default::default() }).points(s) {
            match gv_density_metric(s, &p) {
                Ok(r) => {
                    dens = dens.max((r.formula - r.direct).abs());
                    used += 1;
                }
                Err(Error::OutsideU { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    outcome(
        sig <= 1e-10 && dens <= 1e-7 && used > 0,
        format!("σ sum vs det on 100 pairs max {sig:.1e} (tol 1e-10); determinant density vs direct max {dens:.1e} on {used} points of U (tol 1e-7)"),
    )
}

fn bott() -> Result<Outcome> {
    let one = Complex64::new(1.0, 0.0);
    let b1 = bott_invariant_formula(&[one, one])?;
    let b2 = bott_invariant_formula(&[one, one, one])?;
    let rejected = [vec![one, -one], vec![one, Complex64::new(-0.5, 0.8), Complex64::new(-0.5, -0.8)]]
        .iter()
        .all(|l| matches!(bott_invariant_formula(l), Err(Error::HullContainsOrigin)));
    let sm = Sampling { count: 128, ..Default::default() };
    let mut fi = true;
    let mut worst: f64 = 0.0;
    for (a, b) in [(one, Complex64::new(2.0, 0.0)), (Complex64::new(1.0, 0.2), Complex64::new(0.7, -0.4))] {
        let r = formal_integrability_residual(&bott_sphere_model(a, b)?, &sm, 1e-9)?;
        fi &= r.pass;
        worst = worst.max(r.real_part.sup).max(r.imaginary_part.sup).max(r.structure.sup);
    }
    let cmp = {
        let s = bott_sphere_model(one, Complex64::new(2.0, 0.0))?;
        let sp = QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&s.chart).with_resolution(24) };
        bott_comparison(one, Complex64::new(2.0, 0.0), &sp)?
    };
    outcome(
        b1 == Complex64::new(4.0, 0.0) && b2 == Complex64::new(27.0, 0.0) && rejected && fi,
        format!(
            "(1,1) → {b1}, (1,1,1) → {b2}, hull inputs rejected: {rejected}; chart model residuals max {worst:.1e} (tol 1e-9); informative: λ=(1,2) integral/(2π)² = {:.8} vs {:.8}",
            cmp.normalized[0], cmp.formula[0]
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() {
    init_threads();
    let criteria: [Criterion; 12] = [
        ("identity battery", identities),
        ("η pipelines agree", eta_pipelines),
        ("Reeb η closed form, η∧dη = 0", reeb_closed_form),
        ("tilted torus gv = −(2π)³", tilted_gv),
        ("first and second variation vs differences", variations),
        ("index form symmetry", index_symmetry),
        ("A₀ profile family", cond2_profiles),
        ("Ã₀ branch first integral", reduced_branch),
        ("criticality along profiles", criticality),
        ("metric Euler-Lagrange", metric_el),
        ("σ-invariants and density formula", sigma_and_density),
        ("Bott invariant and chart model", bott),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(o)) => (o.pass, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {title}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
