use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use folia_core::battery::{eta_equivalences, identity_battery};
use folia_core::catalog;
use folia_core::fields::FramedScene;
use folia_core::geometry::{eta_metric, gv_density_metric};
use folia_core::holomorphic::{bott_comparison, bott_invariant_formula, bott_sphere_model, formal_integrability_residual, ComplexScene};
use folia_core::invariants::{
    criticality_residual, first_variation, gv_d, gv_number, gv_s_number, index_form, index_form_via_jacobi, lagrange_residual,
    metric_el_residuals, second_variation, seeded_variations, variation_normalization, ResidualReport, Sampling, VariationCase,
};
use folia_core::quadrature::{init_threads, QuadratureSpec};
use folia_core::reeb::{self, Equation, FamilyEntry, FamilyManifest, ReebProfile, StepControl};
use folia_core::scenefile::{load_scene, Overrides};
use folia_core::Error;

#[derive(Parser)]
#[command(name = "folia", version, about = "Godbillon-Vey type invariants of framed distributions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Directory for report and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sample points for residual checks.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Quadrature nodes per coordinate.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Replaces the command's main tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Gauge,
    Tangential,
    Form,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    First,
    Second,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EquationArg {
    Cond2,
    Reduced,
    Cond3,
}

/// A scene is a `.scene` file, a catalog name, or `reeb:A0=…,A1=…,A2=…`
/// (`reeb:lambda=…,A1=…,A2=…,A3=…` for the λ condition).
#[derive(Subcommand)]
enum Command {
    /// Identity battery, η pipelines and gv.
    Check { scene: String },
    /// Agreement of the three expressions for η.
    Eta {
        scene: String,
        /// Also print η at this point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
    },
    /// gv and, with a metric, the determinant formula for its density.
    Gv {
        scene: String,
        /// Expected value; the run fails unless gv matches it.
        #[arg(long, allow_hyphen_values = true)]
        expect: Option<f64>,
        /// Relative tolerance for `--expect`.
        #[arg(long, default_value_t = 1e-6)]
        expect_rel: f64,
    },
    /// gv_s for the exponent vector `s`.
    Gvs {
        scene: String,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<usize>,
    },
    /// First and second variation against finite differences.
    Vary {
        scene: String,
        #[arg(long, value_enum, default_value = "all")]
        case: CaseArg,
        /// Variations per case.
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, value_enum, default_value = "both")]
        order: OrderArg,
    },
    /// Criticality residuals, or the Lagrange condition with `--lambda`.
    Critical {
        scene: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Option<Vec<f64>>,
    },
    /// Euler-Lagrange residuals of the metric functional and gv_D.
    MetricEl { scene: String },
    /// Symmetry of the index form on seeded bump pairs.
    Index {
        scene: String,
        #[arg(long, default_value_t = 10)]
        pairs: usize,
    },
    /// One Reeb profile to blow-up.
    ReebSolve {
        #[arg(long, value_enum, default_value = "cond2")]
        equation: EquationArg,
        #[arg(long = "A0", default_value_t = 1.0, allow_hyphen_values = true)]
        a0: f64,
        #[arg(long = "A1", allow_hyphen_values = true)]
        a1: f64,
        #[arg(long = "A2", default_value_t = 0.0, allow_hyphen_values = true)]
        a2: f64,
        #[arg(long = "A3", allow_hyphen_values = true)]
        a3: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// A family of A₀-condition profiles, one CSV each plus a manifest.
    ReebFamily {
        #[arg(long = "A0", allow_hyphen_values = true)]
        a0: f64,
        #[arg(long = "A2", allow_hyphen_values = true)]
        a2: f64,
        #[arg(long = "A1", value_delimiter = ',', required = true, allow_hyphen_values = true)]
        a1: Vec<f64>,
    },
    /// Closed-form Bott invariant for weights given as `re,im`.
    Bott {
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, num_args = 1.., required = true, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Vec<Complex64>,
    },
    /// Formal integrability of a complex pair: the sphere model, or a real scene.
    HoloCheck {
        scene: Option<String>,
        #[arg(long, num_args = 2, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Option<Vec<Complex64>>,
        /// Also integrate the model and compare with the closed form.
        #[arg(long)]
        compare: bool,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    scene: Option<String>,
    seed: u64,
    samples: usize,
    tolerances: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<QuadratureSpec>,
    pass: bool,
    result: Value,
    #[serde(skip)]
    files: Vec<(String, String)>,
}

/// Flags merged over scene-file overrides over defaults.
struct Settings {
    seed: u64,
    samples: usize,
    eps: f64,
    resolution: Option<usize>,
    tolerance: Option<f64>,
}

impl Settings {
    fn new(c: &Common, o: &Overrides) -> Settings {
        let d = Sampling::default();
        Settings {
            seed: c.seed.or(o.seed).unwrap_or(d.seed),
            samples: c.samples.or(o.samples).unwrap_or(d.count),
            eps: o.eps.unwrap_or(d.eps),
            resolution: c.resolution.or(o.resolution),
            tolerance: c.tolerance.or(o.tolerance),
        }
    }

    fn sampling(&self) -> Sampling {
        Sampling { count: self.samples, seed: self.seed, eps: self.eps }
    }

    fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    /// Quadrature at the requested resolution; `default` replaces the
    /// chart default when given.
    fn spec(&self, scene: &FramedScene, default: Option<usize>) -> QuadratureSpec {
        let base = QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&scene.chart) };
        match self.resolution.or(default) {
            Some(r) => base.with_resolution(r),
            None => base,
        }
    }

    fn report(&self, command: &'static str, scene: Option<&FramedScene>) -> Report {
        Report {
            command,
            scene: scene.map(|s| s.name.clone()),
            seed: self.seed,
            samples: self.samples,
            tolerances: BTreeMap::new(),
            quadrature: None,
            pass: false,
            result: Value::Null,
            files: Vec::new(),
        }
    }
}

fn field(rest: &str) -> Result<BTreeMap<String, f64>, Error> {
    rest.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Scene(format!("expected key=value, got `{kv}`")))?;
            let v = v.trim().parse::<f64>().map_err(|e| Error::Scene(format!("`{kv}`: {e}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn reeb_from_spec(rest: &str) -> Result<FramedScene, Error> {
    let kv = field(rest)?;
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Scene(format!("reeb scene needs {k}")));
    let ctl = StepControl::default();
    let profile = if let Some(&lambda) = kv.get("lambda") {
        reeb::solve_cond3(lambda, get("A1")?, get("A2")?, get("A3")?, ctl)?
    } else {
        reeb::solve_cond2(get("A0")?, get("A1")?, get("A2")?, ctl)?
    };
    reeb::reeb_scene(&profile)
}

fn load(spec: &str) -> Result<(FramedScene, Overrides), Error> {
    let path = Path::new(spec);
    if path.exists() || spec.ends_with(".scene") {
        let (f, s) = load_scene(path)?;
        return Ok((s, f.overrides));
    }
    if let Some(rest) = spec.strip_prefix("reeb:") {
        return Ok((reeb_from_spec(rest)?, Overrides::default()));
    }
    catalog::by_name(spec)
        .map(|s| (s, Overrides::default()))
        .ok_or_else(|| Error::Scene(format!("`{spec}` is neither a scene file nor a catalog scene")))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn check(common: &Common, spec: &str) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let sm = st.sampling();
    let tol = st.tol(1e-9);
    let battery = identity_battery(&scene, &sm, tol)?;
    let eta = eta_equivalences(&scene, &sm, 1e-8)?;
    let q = st.spec(&scene, None);
    let gv = gv_number(&scene, &q)?;
    let mut r = st.report("check", Some(&scene));
    r.tolerances.insert("identities", tol);
    r.tolerances.insert("eta", 1e-8);
    r.pass = battery.pass && eta.iter().all(|c| c.pass) && gv.value.is_finite();
    r.result = json!({ "identities": battery, "eta": eta, "gv": gv });
    r.quadrature = Some(q);
    Ok(r)
}

fn eta(common: &Common, spec: &str, point: Option<&[f64]>) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let tol = st.tol(1e-8);
    let checks = eta_equivalences(&scene, &st.sampling(), tol)?;
    let mut r = st.report("eta", Some(&scene));
    r.tolerances.insert("eta", tol);
    r.pass = checks.iter().all(|c| c.pass);
    let mut result = json!({ "checks": checks });
    if let Some(p) = point {
        let loc = scene.local(p, 1)?;
        result["point"] = json!(p);
        result["contraction"] = json!(loc.eta()?.values().comps());
        result["lie"] = json!(loc.eta_lie()?.values().comps());
        if scene.metric.is_some() {
            result["mean_curvature"] = json!(eta_metric(&scene, p)?.comps());
        }
    }
    r.result = result;
    Ok(r)
}

fn gv(common: &Common, spec: &str, expect: Option<f64>, expect_rel: f64) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let tol = st.tol(1e-7);
    let q = st.spec(&scene, None);
    let value = gv_number(&scene, &q)?;
    let mut r = st.report("gv", Some(&scene));
    let mut pass = value.value.is_finite();
    let mut result = json!({ "gv": value });
    if let Some(e) = expect {
        let rel = (value.value - e).abs() / e.abs().max(f64::MIN_POSITIVE);
        pass &= rel <= expect_rel;
        r.tolerances.insert("expect_relative", expect_rel);
        result["expected"] = json!({ "value": e, "relative_error": rel });
    }
    if scene.metric.is_some() {
        let mut defects = Vec::new();
        let mut skipped = 0usize;
        for p in st.sampling().points(&scene) {
            match gv_density_metric(&scene, &p) {
                Ok(d) => defects.push((d.formula - d.direct).abs().max((d.sigma_form - d.formula).abs())),
                Err(Error::OutsideU { .. } | Error::Hypothesis(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        let rep = ResidualReport::from_values("determinant formula vs direct density", &defects, tol, st.seed);
        pass &= rep.pass;
        r.tolerances.insert("density", tol);
        result["density"] = json!({ "check": rep, "skipped_outside_hypotheses": skipped });
    }
    r.pass = pass;
    r.result = result;
    r.quadrature = Some(q);
    Ok(r)
}

fn gvs(common: &Common, spec: &str, s: &[usize]) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let q = st.spec(&scene, None);
    let value = gv_s_number(&scene, s, &q)?;
    let mut r = st.report("gvs", Some(&scene));
    r.pass = value.value.is_finite();
    r.result = json!({ "s": s, "gv_s": value });
    r.quadrature = Some(q);
    Ok(r)
}

fn vary(common: &Common, spec: &str, case: CaseArg, count: usize, order: OrderArg) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let q = st.spec(&scene, Some(if scene.dim() <= 3 { 24 } else { 12 }));
    let cases: Vec<VariationCase> = match case {
        CaseArg::Gauge => vec![VariationCase::Gauge],
        CaseArg::Tangential => vec![VariationCase::Tangential],
        CaseArg::Form => vec![VariationCase::Form],
        CaseArg::All => VariationCase::ALL.to_vec(),
    };
    let sm = Sampling { count: st.samples.min(64), ..st.sampling() };
    let mut pass = true;
    let mut out = Vec::new();
    for (ci, c) in cases.into_iter().enumerate() {
        let vs = match seeded_variations(&scene, c, count, st.seed.wrapping_add(ci as u64)) {
            Ok(vs) => vs,
            Err(e) => {
                pass = false;
                out.push(json!({ "case": c, "error": e.to_string() }));
                continue;
            }
        };
        for (k, v) in vs.iter().enumerate() {
            let norm = variation_normalization(&scene, v, &sm)?;
            let mut entry = json!({ "case": c, "index": k, "normalization": norm });
            pass &= norm.pass;
            if matches!(order, OrderArg::First | OrderArg::Both) {
                let f = first_variation(&scene, v, &q, &[1e-3, 5e-4])?;
                pass &= f.pass;
                entry["first"] = to_value(&f);
            }
            if matches!(order, OrderArg::Second | OrderArg::Both) {
                let s = second_variation(&scene, v, &q, &[1e-2, 5e-3])?;
                pass &= s.pass;
                entry["second"] = to_value(&s);
            }
            out.push(entry);
        }
    }
    let mut r = st.report("vary", Some(&scene));
    r.tolerances.insert("first_relative", 1e-3);
    r.tolerances.insert("second_relative", 1e-2);
    r.tolerances.insert("normalization", 1e-9);
    r.pass = pass;
    r.result = json!({ "variations": out });
    r.quadrature = Some(q);
    Ok(r)
}

fn critical(common: &Common, spec: &str, lambda: Option<&[f64]>) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let tol = st.tol(1e-5);
    let sm = st.sampling();
    let mut r = st.report("critical", Some(&scene));
    r.tolerances.insert("residual", tol);
    match lambda {
        Some(l) => {
            let rep = lagrange_residual(&scene, l, &sm, tol)?;
            r.pass = rep.residual.pass;
            r.result = json!({ "lagrange": rep });
        }
        None => {
            let rep = criticality_residual(&scene, &sm, tol)?;
            r.pass = rep.residual.pass && rep.omega.pass && rep.reduction_holds && rep.lt_cubed.as_ref().map_or(true, |x| x.pass);
            r.result = json!({ "criticality": rep });
        }
    }
    Ok(r)
}

fn metric_el(common: &Common, spec: &str) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let tol = st.tol(1e-8);
    let q = st.spec(&scene, Some(if scene.dim() <= 3 { 24 } else { 8 }));
    let rep = metric_el_residuals(&scene, &st.sampling(), &q, tol)?;
    let mut r = st.report("metric-el", Some(&scene));
    r.tolerances.insert("residual", tol);
    r.pass = rep.residuals.iter().all(|x| x.pass);
    r.result = json!({ "metric_el": rep, "gv_d": gv_d(&scene, &q)? });
    r.quadrature = Some(q);
    Ok(r)
}

fn index(common: &Common, spec: &str, pairs: usize) -> Result<Report, Error> {
    let (scene, o) = load(spec)?;
    let st = Settings::new(common, &o);
    let tol = st.tol(1e-6);
    let q = st.spec(&scene, Some(if scene.dim() <= 3 { 24 } else { 10 }));
    let (n, deg) = (scene.dim(), scene.q());
    let mut rows = Vec::new();
    let mut pass = true;
    for k in 0..pairs as u64 {
        let s = st.seed.wrapping_add(4 * k);
        let a = catalog::random_form(n, deg, s).scaled_by(catalog::seeded_bump(&scene.chart, s + 1));
        let b = catalog::random_form(n, deg, s + 2).scaled_by(catalog::seeded_bump(&scene.chart, s + 3));
        let jab = index_form(&scene, &a, &b, &q)?;
        let jba = index_form(&scene, &b, &a, &q)?;
        let scale = jab.abs().max(jba.abs()).max(1.0);
        let asym = (jab - jba).abs() / scale;
        let mut row = json!({ "pair": k, "j_ab": jab, "j_ba": jba, "asymmetry": asym });
        pass &= asym <= tol;
        if k == 0 {
            let via = index_form_via_jacobi(&scene, &a, &b, &q)?;
            let d = (via - jab).abs() / scale;
            pass &= d <= tol;
            row["via_jacobi"] = json!({ "value": via, "relative_difference": d });
        }
        rows.push(row);
    }
    let mut r = st.report("index", Some(&scene));
    r.tolerances.insert("symmetry_relative", tol);
    r.pass = pass;
    r.result = json!({ "pairs": rows });
    r.quadrature = Some(q);
    Ok(r)
}

fn profile_tolerance(eq: &Equation) -> f64 {
    match eq {
        Equation::Cond2 { .. } => 1e-6,
        Equation::Reduced { .. } => 1e-8,
        Equation::Cond3 { .. } => 1e-5,
    }
}

/// Residual and tolerance-halving checks of one profile.
fn profile_checks(p: &ReebProfile, tol: f64) -> Result<(bool, Value), Error> {
    let halved = reeb::solve(p.equation, p.data.clone(), p.control.halved())?;
    let shift = (halved.r0 - p.r0).abs() / p.r0;
    let pass = p.r0.is_finite() && p.residual_max <= tol && shift < 1e-4;
    Ok((pass, json!({ "r0_halved_tolerance": halved.r0, "r0_relative_shift": shift })))
}

fn reeb_solve(common: &Common, eq: EquationArg, a0: f64, a1: f64, a2: f64, a3: Option<f64>, lambda: f64) -> Result<Report, Error> {
    let st = Settings::new(common, &Overrides::default());
    let ctl = StepControl::default();
    let p = match eq {
        EquationArg::Cond2 => reeb::solve_cond2(a0, a1, a2, ctl)?,
        EquationArg::Reduced => reeb::solve_reduced(a1, a2, ctl)?,
        EquationArg::Cond3 => {
            let a3 = a3.ok_or_else(|| Error::Invalid("--A3 is required for cond3".into()))?;
            reeb::solve_cond3(lambda, a1, a2, a3, ctl)?
        }
    };
    let tol = st.tol(profile_tolerance(&p.equation));
    let (pass, checks) = profile_checks(&p, tol)?;
    let mut r = st.report("reeb-solve", None);
    r.tolerances.insert("residual", tol);
    r.tolerances.insert("r0_shift", 1e-4);
    r.pass = pass;
    r.result = json!({ "profile": p, "checks": checks, "csv": "profile.csv" });
    r.files.push(("profile.csv".into(), p.csv()));
    Ok(r)
}

fn reeb_family(common: &Common, a0: f64, a2: f64, a1s: &[f64]) -> Result<Report, Error> {
    let st = Settings::new(common, &Overrides::default());
    let ctl = StepControl::default();
    let tol = st.tol(1e-6);
    let fam = reeb::cond2_family(a0, a2, a1s, ctl)?;
    let mut r = st.report("reeb-family", None);
    let mut entries = Vec::new();
    let mut checks = Vec::new();
    let mut pass = true;
    for p in &fam {
        let name = format!("profile_A1_{}.csv", p.data.a1);
        let (ok, c) = profile_checks(p, tol)?;
        pass &= ok;
        checks.push(c);
        entries.push(FamilyEntry { a1: p.data.a1, r0: p.r0, r0_bracket: p.r0_bracket, residual_max: p.residual_max, steps: p.steps, csv: name.clone() });
        r.files.push((name, p.csv()));
    }
    let manifest = FamilyManifest { a0, a2, control: ctl, profiles: entries };
    r.files.push(("manifest.json".into(), serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"));
    r.tolerances.insert("residual", tol);
    r.tolerances.insert("r0_shift", 1e-4);
    r.pass = pass;
    r.result = json!({ "manifest": manifest, "checks": checks });
    Ok(r)
}

fn show(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn bott(common: &Common, q: Option<usize>, lambda: &[Complex64]) -> Result<Report, Error> {
    if let Some(q) = q {
        if lambda.len() != q + 1 {
            return Err(Error::Invalid(format!("--q {q} needs {} weights, got {}", q + 1, lambda.len())));
        }
    }
    let st = Settings::new(common, &Overrides::default());
    let v = bott_invariant_formula(lambda)?;
    let mut r = st.report("bott", None);
    r.pass = v.re.is_finite() && v.im.is_finite();
    r.result = json!({
        "q": lambda.len() - 1,
        "lambda": lambda.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "value": [v.re, v.im],
        "display": show(v),
    });
    Ok(r)
}

const MODEL_WEIGHTS: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];

fn holo_check(common: &Common, scene: Option<&str>, lambda: Option<&[Complex64]>, compare: bool) -> Result<Report, Error> {
    let (cs, o): (ComplexScene, Overrides) = match scene {
        Some(spec) => {
            let (s, o) = load(spec)?;
            (ComplexScene::from_real(&s), o)
        }
        None => {
            let l = lambda.unwrap_or(&MODEL_WEIGHTS);
            (bott_sphere_model(l[0], l[1])?, Overrides::default())
        }
    };
    let st = Settings::new(common, &o);
    let tol = st.tol(1e-9);
    let rep = formal_integrability_residual(&cs, &st.sampling(), tol)?;
    let mut r = st.report("holo-check", None);
    r.scene = Some(cs.name.clone());
    r.tolerances.insert("residual", tol);
    r.pass = rep.pass;
    let mut result = json!({ "formal_integrability": rep });
    if compare && scene.is_none() {
        let l = lambda.unwrap_or(&MODEL_WEIGHTS);
        let q = QuadratureSpec { estimate: true, ..QuadratureSpec::for_chart(&cs.chart).with_resolution(st.resolution.unwrap_or(32)) };
        result["comparison"] = to_value(&bott_comparison(l[0], l[1], &q)?);
        result["comparison_note"] = json!("informative; not part of the pass decision");
        r.quadrature = Some(q);
    }
    r.result = result;
    Ok(r)
}

fn run(cli: &Cli) -> Result<Report, Error> {
    let c = &cli.common;
    match &cli.command {
        Command::Check { scene } => check(c, scene),
        Command::Eta { scene, point } => eta(c, scene, point.as_deref()),
        Command::Gv { scene, expect, expect_rel } => gv(c, scene, *expect, *expect_rel),
        Command::Gvs { scene, s } => gvs(c, scene, s),
        Command::Vary { scene, case, count, order } => vary(c, scene, *case, *count, *order),
        Command::Critical { scene, lambda } => critical(c, scene, lambda.as_deref()),
        Command::MetricEl { scene } => metric_el(c, scene),
        Command::Index { scene, pairs } => index(c, scene, *pairs),
        Command::ReebSolve { equation, a0, a1, a2, a3, lambda } => reeb_solve(c, *equation, *a0, *a1, *a2, *a3, *lambda),
        Command::ReebFamily { a0, a2, a1 } => reeb_family(c, *a0, *a2, a1),
        Command::Bott { q, lambda } => bott(c, *q, lambda),
        Command::HoloCheck { scene, lambda, compare } => holo_check(c, scene.as_deref(), lambda.as_deref(), *compare),
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Check { .. } => "check",
        Command::Eta { .. } => "eta",
        Command::Gv { .. } => "gv",
        Command::Gvs { .. } => "gvs",
        Command::Vary { .. } => "vary",
        Command::Critical { .. } => "critical",
        Command::MetricEl { .. } => "metric-el",
        Command::Index { .. } => "index",
        Command::ReebSolve { .. } => "reeb-solve",
        Command::ReebFamily { .. } => "reeb-family",
        Command::Bott { .. } => "bott",
        Command::HoloCheck { .. } => "holo-check",
    }
}

fn write_files(dir: &Path, command: &str, json: &str, files: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{command}.json")), json)?;
    for (f, body) in files {
        std::fs::write(dir.join(f), body)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let command = name(&cli.command);
    let (json, files, code) = match run(&cli) {
        Ok(r) => {
            let code = if r.pass { ExitCode::SUCCESS } else { ExitCode::from(1) };
            (serde_json::to_string_pretty(&r).expect("report serializes") + "\n", r.files, code)
        }
        Err(e @ (Error::Scene(_) | Error::Invalid(_))) => {
            eprintln!("folia {command}: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            let body = json!({ "command": command, "pass": false, "error": e.to_string() });
            (serde_json::to_string_pretty(&body).expect("error serializes") + "\n", Vec::new(), ExitCode::from(1))
        }
    };
    print!("{json}");
    if let Some(dir) = &cli.common.out {
        if let Err(e) = write_files(dir, command, &json, &files) {
            eprintln!("folia {command}: writing {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    code
}
