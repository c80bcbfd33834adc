//! Chart-wide fields and the framed scene `(ω, T)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exprlang::{self, Ast};
use crate::exterior::{basis, contract, merge_sign, multivector, position, AltTensor, Variance};
use crate::jets::Jet;
use crate::linalg;

/// Singular locus `{coord = value}` of codimension `codim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaLocus {
    pub coord: usize,
    pub value: f64,
    pub codim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub coords: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periodic: Vec<bool>,
    pub sigma: Vec<SigmaLocus>,
}

impl Chart {
    pub fn new(coords: &[&str], lo: &[f64], hi: &[f64], periodic: &[bool]) -> Result<Chart> {
        let n = coords.len();
        if lo.len() != n || hi.len() != n || periodic.len() != n {
            return Err(Error::Scene("chart arrays differ in length".into()));
        }
        for i in 0..n {
            if !(lo[i] < hi[i]) {
                return Err(Error::Scene(format!("empty interval for `{}`", coords[i])));
            }
        }
        Ok(Chart {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            periodic: periodic.to_vec(),
            sigma: Vec::new(),
        })
    }

    pub fn with_sigma(mut self, coord: usize, value: f64, codim: usize) -> Result<Chart> {
        if coord >= self.dim() || value < self.lo[coord] || value > self.hi[coord] {
            return Err(Error::Scene("singular locus outside the box".into()));
        }
        self.sigma.push(SigmaLocus { coord, value, codim });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// True when `p` lies within `frac` of a box width from a singular locus.
    pub fn in_tube(&self, p: &[f64], frac: f64) -> bool {
        self.sigma.iter().any(|s| (p[s.coord] - s.value).abs() < frac * self.width(s.coord))
    }

    pub fn on_sigma(&self, p: &[f64]) -> bool {
        self.in_tube(p, 1e-12)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }
}

/// Evaluation environment at a point: seeded coordinates followed by
/// parameter constants.
#[derive(Clone, Debug)]
pub struct Env {
    pub point: Vec<f64>,
    pub vars: Vec<Jet>,
    pub order: usize,
}

impl Env {
    pub fn new(chart: &Chart, params: &[(String, f64)], point: &[f64], order: usize) -> Result<Env> {
        if point.len() != chart.dim() {
            return Err(Error::Dimension("point outside chart dimension".into()));
        }
        if chart.on_sigma(point) {
            return Err(Error::Excluded(point.to_vec()));
        }
        let n = point.len();
        let mut vars = Jet::seed(point, order);
        vars.extend(params.iter().map(|(_, v)| Jet::constant(*v, n, order)));
        Ok(Env { point: point.to_vec(), vars, order })
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn coord(&self, i: usize) -> &Jet {
        &self.vars[i]
    }

    pub fn constant(&self, v: f64) -> Jet {
        Jet::constant(v, self.dim(), self.order)
    }
}

type NativeScalar = Arc<dyn Fn(&Env) -> Result<Jet> + Send + Sync>;
type NativeForm = Arc<dyn Fn(&Env) -> Result<AltTensor<Jet>> + Send + Sync>;
type NativeVector = Arc<dyn Fn(&Env) -> Result<Vec<Jet>> + Send + Sync>;
pub type NativeMetric = Arc<dyn Fn(&Env) -> Result<Vec<Vec<Jet>>> + Send + Sync>;

#[derive(Clone)]
pub enum ScalarField {
    Const(f64),
    Expr(Arc<Ast>),
    Native(NativeScalar),
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarField::Const(v) => write!(f, "{v}"),
            ScalarField::Expr(a) => write!(f, "{a}"),
            ScalarField::Native(_) => write!(f, "<native>"),
        }
    }
}

impl ScalarField {
    /// Parses an expression over the chart coordinates and parameter names.
    pub fn parse(src: &str, chart: &Chart, params: &[(String, f64)]) -> Result<ScalarField> {
        let names: Vec<&str> = chart.coords.iter().map(String::as_str).chain(params.iter().map(|p| p.0.as_str())).collect();
        Ok(ScalarField::Expr(Arc::new(exprlang::parse(src, &names)?)))
    }

    pub fn native(f: impl Fn(&Env) -> Result<Jet> + Send + Sync + 'static) -> ScalarField {
        ScalarField::Native(Arc::new(f))
    }

    pub fn eval(&self, env: &Env) -> Result<Jet> {
        match self {
            ScalarField::Const(v) => Ok(env.constant(*v)),
            ScalarField::Expr(a) => a.eval(&env.vars, env.dim(), env.order).map_err(|e| e.at(&env.point)),
            ScalarField::Native(f) => f(env),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Const(v) if *v == 0.0)
    }
}

/// Smooth cutoff: compactly supported on non-periodic coordinates, a
/// periodic von Mises bump on periodic ones.
#[derive(Clone, Debug)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl Bump {
    pub fn new(chart: &Chart, center: &[f64], radius: &[f64]) -> Bump {
        Bump { center: center.to_vec(), radius: radius.to_vec(), periodic: chart.periodic.clone() }
    }

    pub fn eval(&self, env: &Env) -> Result<Jet> {
        let mut acc = env.constant(1.0);
        for i in 0..self.center.len() {
            let x = env.coord(i);
            let f = if self.periodic[i] {
                // exp(κ (cos(x − c) − 1)) with κ = 1/ρ²
                let kappa = 1.0 / (self.radius[i] * self.radius[i]);
                x.add_const(-self.center[i]).cos().add_const(-1.0).scale(kappa).exp()
            } else {
                let s = x.add_const(-self.center[i]).scale(1.0 / self.radius[i]);
                if s.value().abs() >= 1.0 {
                    return Ok(env.constant(0.0));
                }
                let w = s.mul(&s).scale(-1.0).add_const(1.0);
                w.recip()?.scale(-1.0).add_const(1.0).exp()
            };
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    pub fn field(&self) -> ScalarField {
        let b = self.clone();
        ScalarField::native(move |env| b.eval(env))
    }
}

#[derive(Clone)]
enum FormRepr {
    Components(Vec<ScalarField>),
    Native(NativeForm),
}

#[derive(Clone)]
pub struct FormField {
    dim: usize,
    degree: usize,
    repr: FormRepr,
}

impl FormField {
    pub fn from_components(dim: usize, degree: usize, comps: Vec<ScalarField>) -> Result<FormField> {
        if comps.len() != basis(dim, degree).len() {
            return Err(Error::Dimension(format!("{} components for a {degree}-form in dimension {dim}", comps.len())));
        }
        Ok(FormField { dim, degree, repr: FormRepr::Components(comps) })
    }

    /// A form given by `(multi-index, coefficient)` terms; unsorted indices
    /// pick up the permutation sign.
    pub fn from_terms(dim: usize, degree: usize, terms: Vec<(Vec<usize>, ScalarField)>) -> Result<FormField> {
        let mut comps = vec![ScalarField::Const(0.0); basis(dim, degree).len()];
        let mut seen = vec![false; comps.len()];
        for (idx, f) in terms {
            if idx.len() != degree {
                return Err(Error::Dimension("multi-index of the wrong length".into()));
            }
            let mut mask = 0u32;
            let mut sign = 1.0;
            for &i in &idx {
                if i >= dim || mask & (1 << i) != 0 {
                    return Err(Error::Scene(format!("invalid multi-index {idx:?}")));
                }
                sign *= merge_sign(mask, 1 << i);
                mask |= 1 << i;
            }
            let p = position(dim, mask);
            if seen[p] {
                return Err(Error::Scene(format!("duplicate component {idx:?}")));
            }
            seen[p] = true;
            comps[p] = if sign > 0.0 { f } else { ScalarField::native(move |env| Ok(f.eval(env)?.scale(-1.0))) };
        }
        FormField::from_components(dim, degree, comps)
    }

    pub fn native(dim: usize, degree: usize, f: impl Fn(&Env) -> Result<AltTensor<Jet>> + Send + Sync + 'static) -> FormField {
        FormField { dim, degree, repr: FormRepr::Native(Arc::new(f)) }
    }

    pub fn zero(dim: usize, degree: usize) -> FormField {
        FormField::from_components(dim, degree, vec![ScalarField::Const(0.0); basis(dim, degree).len()]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, env: &Env) -> Result<AltTensor<Jet>> {
        match &self.repr {
            FormRepr::Components(c) => {
                let comps = c.iter().map(|f| f.eval(env)).collect::<Result<Vec<_>>>()?;
                AltTensor::form(self.dim, self.degree, comps)
            }
            FormRepr::Native(f) => {
                let t = f(env)?;
                if t.degree() != self.degree || t.dim() != self.dim {
                    return Err(Error::Dimension("native form returned the wrong shape".into()));
                }
                Ok(t)
            }
        }
    }

    pub fn exterior_derivative(&self) -> FormField {
        let a = self.clone();
        FormField::native(self.dim, self.degree + 1, move |env| d(&a.eval(env)?))
    }

    pub fn lie_derivative(&self, t: &[VectorField]) -> FormField {
        let a = self.clone();
        let t = t.to_vec();
        let deg = self.degree + 1 - t.len().min(self.degree + 1);
        FormField::native(self.dim, deg, move |env| {
            let tm = eval_multivector(&t, env)?;
            lie(&tm, &a.eval(env)?)
        })
    }

    pub fn scaled_by(&self, s: ScalarField) -> FormField {
        let a = self.clone();
        FormField::native(self.dim, self.degree, move |env| Ok(a.eval(env)?.scale_by(&s.eval(env)?)))
    }

    pub fn plus(&self, other: &FormField, s: f64) -> FormField {
        let (a, b) = (self.clone(), other.clone());
        FormField::native(self.dim, self.degree, move |env| a.eval(env)?.combine(&b.eval(env)?, s))
    }

    pub fn wedge(&self, other: &FormField) -> FormField {
        let (a, b) = (self.clone(), other.clone());
        FormField::native(self.dim, self.degree + other.degree, move |env| a.eval(env)?.wedge(&b.eval(env)?))
    }
}

#[derive(Clone)]
enum VectorRepr {
    Components(Vec<ScalarField>),
    Native(NativeVector),
}

#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    repr: VectorRepr,
}

impl VectorField {
    pub fn from_components(comps: Vec<ScalarField>) -> VectorField {
        VectorField { dim: comps.len(), repr: VectorRepr::Components(comps) }
    }

    pub fn native(dim: usize, f: impl Fn(&Env) -> Result<Vec<Jet>> + Send + Sync + 'static) -> VectorField {
        VectorField { dim, repr: VectorRepr::Native(Arc::new(f)) }
    }

    pub fn coordinate(dim: usize, i: usize) -> VectorField {
        VectorField::from_components((0..dim).map(|j| ScalarField::Const(if i == j { 1.0 } else { 0.0 })).collect())
    }

    pub fn zero(dim: usize) -> VectorField {
        VectorField::from_components(vec![ScalarField::Const(0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, env: &Env) -> Result<Vec<Jet>> {
        match &self.repr {
            VectorRepr::Components(c) => c.iter().map(|f| f.eval(env)).collect(),
            VectorRepr::Native(f) => f(env),
        }
    }

    pub fn scaled_by(&self, s: ScalarField) -> VectorField {
        let v = self.clone();
        VectorField::native(self.dim, move |env| {
            let c = s.eval(env)?;
            Ok(v.eval(env)?.iter().map(|x| x.mul(&c)).collect())
        })
    }

    pub fn plus(&self, other: &VectorField, s: f64) -> VectorField {
        let (a, b) = (self.clone(), other.clone());
        VectorField::native(self.dim, move |env| {
            let (x, y) = (a.eval(env)?, b.eval(env)?);
            Ok(x.iter().zip(&y).map(|(p, q)| p + &q.scale(s)).collect())
        })
    }
}

/// `T_1∧…∧T_q` at the environment point.
pub fn eval_multivector(t: &[VectorField], env: &Env) -> Result<AltTensor<Jet>> {
    let vs = t.iter().map(|v| v.eval(env)).collect::<Result<Vec<_>>>()?;
    multivector(&vs, env.dim(), &env.constant(0.0))
}

/// Exterior derivative of a jet-valued form; the result is one order lower.
pub fn d(a: &AltTensor<Jet>) -> Result<AltTensor<Jet>> {
    let n = a.dim();
    let k = a.degree();
    if k >= n {
        return Err(Error::Dimension(format!("d of a degree {k} form in dimension {n}")));
    }
    let parts: Vec<Vec<Jet>> = (0..n)
        .map(|i| a.comps().iter().map(|c| c.derivative(i)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let proto = parts[0][0].zero_like();
    let mut out = AltTensor::zeros(n, k + 1, Variance::Covariant, &proto);
    for (kpos, &km) in basis(n, k + 1).iter().enumerate() {
        let mut rest = km;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let sub = km & !(1 << i);
            let s = merge_sign(1 << i, sub);
            out.comps_mut()[kpos].add_scaled(&parts[i][position(n, sub)], s);
        }
    }
    Ok(out)
}

/// `L_T a = d ι_T a − (−1)^q ι_T d a`.
pub fn lie(t: &AltTensor<Jet>, a: &AltTensor<Jet>) -> Result<AltTensor<Jet>> {
    let (q, r, n) = (t.degree(), a.degree(), a.dim());
    let first = if r >= q { Some(d(&contract(t, a)?)?) } else { None };
    let second = if r < n && r + 1 >= q { Some(contract(t, &d(a)?)?) } else { None };
    let sign = if q % 2 == 0 { -1.0 } else { 1.0 };
    match (first, second) {
        (Some(f), Some(s)) => f.combine(&s, sign),
        (Some(f), None) => Ok(f),
        (None, Some(s)) => Ok(s.scale(sign)),
        (None, None) => Err(Error::DegreeUnderflow { q, r }),
    }
}

/// Metric source of a scene.
#[derive(Clone)]
pub enum MetricField {
    Explicit(Vec<Vec<ScalarField>>),
    /// Declares `{T_i}` and the Gram-Schmidt-orthonormalized frame of D
    /// orthonormal.
    FromDFrame,
    Native(NativeMetric),
}

/// A chart with a normalized pair `(ω, T)` and optional extras.
#[derive(Clone)]
pub struct FramedScene {
    pub name: String,
    pub chart: Chart,
    pub params: Vec<(String, f64)>,
    pub omega: FormField,
    pub t: Vec<VectorField>,
    pub coframe: Option<Vec<FormField>>,
    pub metric: Option<MetricField>,
    pub d_frame: Option<Vec<VectorField>>,
    pub integrable: bool,
}

impl FramedScene {
    pub fn new(name: &str, chart: Chart, omega: FormField, t: Vec<VectorField>) -> Result<FramedScene> {
        let q = t.len();
        let n = chart.dim();
        if q == 0 || n != 2 * q + 1 {
            return Err(Error::Scene(format!("dimension {n} does not match codimension {q}")));
        }
        if omega.dim() != n || omega.degree() != q {
            return Err(Error::Scene("ω must be a q-form on the chart".into()));
        }
        if t.iter().any(|v| v.dim() != n) {
            return Err(Error::Scene("transverse field of the wrong dimension".into()));
        }
        Ok(FramedScene {
            name: name.to_string(),
            chart,
            params: Vec::new(),
            omega,
            t,
            coframe: None,
            metric: None,
            d_frame: None,
            integrable: false,
        })
    }

    pub fn q(&self) -> usize {
        self.t.len()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn env(&self, point: &[f64], order: usize) -> Result<Env> {
        Env::new(&self.chart, &self.params, point, order)
    }

    pub fn local(&self, point: &[f64], order: usize) -> Result<Local> {
        let env = self.env(point, order)?;
        self.local_at(env)
    }

    pub fn local_at(&self, env: Env) -> Result<Local> {
        let omega = self.omega.eval(&env)?;
        let t = self.t.iter().map(|v| v.eval(&env)).collect::<Result<Vec<_>>>()?;
        let tm = multivector(&t, env.dim(), &env.constant(0.0))?;
        Ok(Local { q: self.q(), omega, t, tm, env })
    }

    /// Metric jets at a point, if the scene carries a metric.
    pub fn metric_at(&self, env: &Env) -> Result<Option<Vec<Vec<Jet>>>> {
        match &self.metric {
            None => Ok(None),
            Some(MetricField::Explicit(m)) => {
                Ok(Some(m.iter().map(|row| row.iter().map(|f| f.eval(env)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?))
            }
            Some(MetricField::Native(f)) => f(env).map(Some),
            Some(MetricField::FromDFrame) => {
                let frame = self.d_frame.as_ref().ok_or_else(|| Error::Scene("metric synthesis needs a frame of D".into()))?;
                let t = self.t.iter().map(|v| v.eval(env)).collect::<Result<Vec<_>>>()?;
                let dv = frame.iter().map(|v| v.eval(env)).collect::<Result<Vec<_>>>()?;
                synthesize_metric(&t, &dv).map(Some)
            }
        }
    }

    /// Checks normalization, and compatibility when a metric is present, on
    /// the sample set.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<()> {
        for p in points {
            let loc = self.local(p, 0)?;
            let r = (loc.normalization() - 1.0).abs();
            if !(r <= 1e-9) {
                return Err(Error::Normalization { residual: r, point: p.clone() });
            }
            if loc.tm.sup_norm() == 0.0 {
                return Err(Error::Scene(format!("transverse fields are dependent at {p:?}")));
            }
            if let Some(frame) = &self.d_frame {
                for v in frame {
                    let x = v.eval(&loc.env)?;
                    let r = loc.omega.contract_vector(&x)?.sup_norm();
                    if r > 1e-9 {
                        return Err(Error::Scene(format!("frame of D not annihilated by ω at {p:?}: {r:e}")));
                    }
                }
            }
            if let Some(g) = self.metric_at(&loc.env)? {
                let g: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| x.value()).collect()).collect();
                let tv: Vec<Vec<f64>> = loc.t.iter().map(|v| v.iter().map(|x| x.value()).collect()).collect();
                let dot = |x: &[f64], y: &[f64]| -> f64 {
                    (0..x.len()).map(|i| (0..y.len()).map(|j| g[i][j] * x[i] * y[j]).sum::<f64>()).sum()
                };
                for i in 0..tv.len() {
                    for j in 0..tv.len() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        if (dot(&tv[i], &tv[j]) - want).abs() > 1e-8 {
                            return Err(Error::Scene(format!("T is not orthonormal at {p:?}")));
                        }
                    }
                }
                for x in kernel_basis(&loc.omega.values())? {
                    for ti in &tv {
                        if dot(ti, &x).abs() > 1e-8 {
                            return Err(Error::Scene(format!("metric is not compatible at {p:?}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `T̃_i = C_i^j T_j`, `ω̃ = det C⁻¹ ω`.
    pub fn gauge_transform(&self, c: Vec<Vec<ScalarField>>) -> Result<FramedScene> {
        let q = self.q();
        if c.len() != q || c.iter().any(|r| r.len() != q) {
            return Err(Error::Dimension("gauge matrix must be q×q".into()));
        }
        let c = Arc::new(c);
        let eval_c = {
            let c = c.clone();
            move |env: &Env| -> Result<Vec<Vec<Jet>>> {
                c.iter().map(|r| r.iter().map(|f| f.eval(env)).collect()).collect()
            }
        };
        let det_c = {
            let eval_c = eval_c.clone();
            move |env: &Env| -> Result<Jet> {
                let m = eval_c(env)?;
                let d = linalg::det(&m)?;
                if d.value() == 0.0 {
                    return Err(Error::Singular(format!("gauge matrix at {:?}", env.point)));
                }
                Ok(d)
            }
        };
        let mut out = self.clone();
        let omega = self.omega.clone();
        let dc = det_c.clone();
        out.omega = FormField::native(self.dim(), q, move |env| Ok(omega.eval(env)?.scale_by(&dc(env)?.recip()?)));
        let n = self.dim();
        out.t = (0..q)
            .map(|i| {
                let t = self.t.clone();
                let eval_c = eval_c.clone();
                VectorField::native(n, move |env| {
                    let m = eval_c(env)?;
                    let mut acc = vec![env.constant(0.0); n];
                    for (j, tj) in t.iter().enumerate() {
                        let v = tj.eval(env)?;
                        for k in 0..n {
                            acc[k].add_product(&m[i][j], &v[k], 1.0);
                        }
                    }
                    Ok(acc)
                })
            })
            .collect();
        if let Some(cf) = &self.coframe {
            out.coframe = Some(
                (0..q)
                    .map(|i| {
                        let cf = cf.clone();
                        let eval_c = eval_c.clone();
                        FormField::native(n, 1, move |env| {
                            let inv = linalg::inverse(&eval_c(env)?)?;
                            let mut acc = AltTensor::zeros(n, 1, Variance::Covariant, &env.constant(0.0));
                            for (j, w) in cf.iter().enumerate() {
                                acc = acc.add(&w.eval(env)?.scale_by(&inv[j][i]))?;
                            }
                            Ok(acc)
                        })
                    })
                    .collect(),
            );
        }
        if matches!(self.metric, Some(MetricField::Explicit(_)) | Some(MetricField::Native(_))) {
            out.metric = None;
        }
        out.name = format!("{} (gauged)", self.name);
        Ok(out)
    }
}

/// Jets of a scene at one point.
pub struct Local {
    pub q: usize,
    pub omega: AltTensor<Jet>,
    pub t: Vec<Vec<Jet>>,
    pub tm: AltTensor<Jet>,
    pub env: Env,
}

impl Local {
    pub fn dim(&self) -> usize {
        self.env.dim()
    }

    pub fn point(&self) -> &[f64] {
        &self.env.point
    }

    pub fn normalization(&self) -> f64 {
        contract(&self.tm, &self.omega).map(|s| s.comps()[0].value()).unwrap_or(f64::NAN)
    }

    pub fn d_omega(&self) -> Result<AltTensor<Jet>> {
        d(&self.omega)
    }

    /// `η = ι_T dω`.
    pub fn eta(&self) -> Result<AltTensor<Jet>> {
        contract(&self.tm, &d(&self.omega)?)
    }

    pub fn lie(&self, a: &AltTensor<Jet>) -> Result<AltTensor<Jet>> {
        lie(&self.tm, a)
    }

    /// `(−1)^{q−1} L_T ω`.
    pub fn eta_lie(&self) -> Result<AltTensor<Jet>> {
        let s = if self.q % 2 == 1 { 1.0 } else { -1.0 };
        Ok(self.lie(&self.omega)?.scale(s))
    }

    pub fn t_values(&self) -> Vec<Vec<f64>> {
        self.t.iter().map(|v| v.iter().map(|x| x.value()).collect()).collect()
    }
}

/// Metric declaring `t` and the Euclidean-orthonormalized `d_frame`
/// orthonormal.
pub fn synthesize_metric(t: &[Vec<Jet>], d_frame: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = t.len() + d_frame.len();
    let mut cols: Vec<Vec<Jet>> = t.to_vec();
    let mut es: Vec<Vec<Jet>> = Vec::new();
    for v in d_frame {
        let mut w = v.clone();
        for e in &es {
            let mut dot = w[0].zero_like();
            for k in 0..n {
                dot.add_product(&w[k], &e[k], 1.0);
            }
            for k in 0..n {
                w[k].add_product(&dot, &e[k], -1.0);
            }
        }
        let mut nn = w[0].zero_like();
        for x in &w {
            nn.add_product(x, x, 1.0);
        }
        if nn.value() <= 1e-24 {
            return Err(Error::Singular("frame of D is degenerate".into()));
        }
        let inv = nn.sqrt()?.recip()?;
        es.push(w.iter().map(|x| x.mul(&inv)).collect());
    }
    cols.extend(es);
    if cols.len() != n || cols.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("frame of D must have q+1 vectors".into()));
    }
    // F has the frame as columns; g = F^{-T} F^{-1}.
    let f: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
    let finv = linalg::inverse(&f)?;
    let mut g = vec![vec![finv[0][0].zero_like(); n]; n];
    for a in 0..n {
        for b in 0..=a {
            let mut s = finv[0][0].zero_like();
            for c in 0..n {
                s.add_product(&finv[c][a], &finv[c][b], 1.0);
            }
            g[a][b] = s.clone();
            g[b][a] = s;
        }
    }
    Ok(g)
}

/// Null space of `v ↦ ι_v a` by elimination over columns in index order.
pub fn kernel_basis(a: &AltTensor<f64>) -> Result<Vec<Vec<f64>>> {
    let n = a.dim();
    if a.degree() == 0 {
        return Err(Error::Dimension("kernel of a function".into()));
    }
    let rows = basis(n, a.degree() - 1);
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|&j| {
            (0..n)
                .map(|i| if j & (1 << i) != 0 { 0.0 } else { merge_sign(1 << i, j) * a.get(j | (1 << i)) })
                .collect()
        })
        .collect();
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
    let tol = 1e-10 * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m.len() {
            break;
        }
        let p = (r..m.len()).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c].abs() <= tol {
            continue;
        }
        m.swap(r, p);
        let piv = m[r][c];
        for x in m[r].iter_mut() {
            *x /= piv;
        }
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c];
                if f != 0.0 {
                    for k in 0..n {
                        m[i][k] -= f * m[r][k];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    Ok(free
        .iter()
        .map(|&fc| {
            let mut v = vec![0.0; n];
            v[fc] = 1.0;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][fc];
            }
            v
        })
        .collect())
}

/// Deterministic low-discrepancy points in the box, outside the ε-tube of Σ.
pub fn sample_points(chart: &Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_points_with(chart, count, seed, 1e-3)
}

pub fn sample_points_with(chart: &Chart, count: usize, seed: u64, eps_frac: f64) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let n = chart.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..n)
            .map(|d| {
                let u = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
                chart.lo[d] + u * chart.width(d)
            })
            .collect();
        i += 1;
        if !chart.in_tube(&p, eps_frac) {
            out.push(p);
        }
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut r = 0.0;
    let mut f = 1.0 / base as f64;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    r
}
