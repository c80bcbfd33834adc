//! Scene files: a versioned TOML description of a chart, `(ω, T)` and the
//! optional frame, metric and numerical overrides.
//!
//! ```toml
//! scene_version = 1
//! name = "t3_tilted"
//!
//! [chart]
//! coords = ["x", "y", "z"]
//! lo = [0, 0, 0]
//! hi = ["2*pi", "2*pi", "2*pi"]
//! periodic = [true, true, true]
//!
//! [forms]
//! omega = [["dx", "cos(z)"], ["dy", "sin(z)"]]
//!
//! [frame]
//! T = [["cos(z)", "sin(z)", "1"]]
//! D = [["-sin(z)", "cos(z)", "0"], ["0", "0", "1"]]
//!
//! [metric]
//! kind = "from_d_frame"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprlang;
use crate::fields::{Chart, FormField, FramedScene, MetricField, ScalarField, VectorField};

pub const SCENE_VERSION: i64 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Expr(String),
}

impl Number {
    fn eval(&self, what: &str) -> Result<f64> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Expr(s) => exprlang::parse(s, &[])
                .and_then(|a| a.eval_f64(&[]))
                .map_err(|e| Error::Scene(format!("{what}: {e}"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    pub coord: String,
    pub value: Number,
    pub codim: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    pub lo: Vec<Number>,
    pub hi: Vec<Number>,
    #[serde(default)]
    pub periodic: Vec<bool>,
    #[serde(default)]
    pub sigma: Vec<SigmaSpec>,
}

/// A form as `[basis, expression]` pairs, the basis written `dx^dy`.
pub type Terms = Vec<[String; 2]>;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FormsSpec {
    pub omega: Terms,
    #[serde(default)]
    pub coframe: Option<Vec<Terms>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    #[serde(rename = "T")]
    pub t: Vec<Vec<String>>,
    #[serde(rename = "D", default)]
    pub d: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean,
    FromDFrame,
    Explicit { g: Vec<Vec<String>> },
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub resolution: Option<usize>,
    pub eps: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub scene_version: i64,
    pub name: String,
    #[serde(default)]
    pub integrable: bool,
    pub chart: ChartSpec,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub forms: FormsSpec,
    pub frame: FrameSpec,
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    #[serde(default)]
    pub overrides: Overrides,
}

fn located(e: Error, what: &str) -> Error {
    Error::Scene(format!("{what}: {e}"))
}

/// Parses `dx^dy` (also `dx∧dy`, `dx*dy`) into coordinate indices.
fn basis(src: &str, chart: &Chart) -> Result<Vec<usize>> {
    src.split(['^', '∧', '*'])
        .map(|t| {
            let t = t.trim();
            let name = t.strip_prefix('d').ok_or_else(|| Error::Scene(format!("basis element `{t}` must start with `d`")))?;
            chart.index_of(name).ok_or_else(|| Error::Scene(format!("unknown coordinate `{name}` in `{src}`")))
        })
        .collect()
}

impl SceneFile {
    pub fn parse(src: &str) -> Result<SceneFile> {
        let f: SceneFile = toml::from_str(src).map_err(|e| {
            let span = e.span().map(|s| {
                let line = src[..s.start].matches('\n').count() + 1;
                format!(" (line {line})")
            });
            Error::Scene(format!("{}{}", e.message(), span.unwrap_or_default()))
        })?;
        if f.scene_version != SCENE_VERSION {
            return Err(Error::Scene(format!("unsupported scene_version {} (expected {SCENE_VERSION})", f.scene_version)));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<SceneFile> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Scene(format!("{}: {e}", path.display())))?;
        SceneFile::parse(&src).map_err(|e| Error::Scene(format!("{}: {e}", path.display())))
    }

    pub fn chart(&self) -> Result<Chart> {
        let c = &self.chart;
        let n = c.coords.len();
        let lo = c.lo.iter().enumerate().map(|(i, v)| v.eval(&format!("chart.lo[{i}]"))).collect::<Result<Vec<_>>>()?;
        let hi = c.hi.iter().enumerate().map(|(i, v)| v.eval(&format!("chart.hi[{i}]"))).collect::<Result<Vec<_>>>()?;
        let periodic = if c.periodic.is_empty() { vec![false; n] } else { c.periodic.clone() };
        let names: Vec<&str> = c.coords.iter().map(String::as_str).collect();
        let mut chart = Chart::new(&names, &lo, &hi, &periodic).map_err(|e| located(e, "chart"))?;
        for (k, s) in c.sigma.iter().enumerate() {
            let what = format!("chart.sigma[{k}]");
            let i = chart.index_of(&s.coord).ok_or_else(|| Error::Scene(format!("{what}: unknown coordinate `{}`", s.coord)))?;
            chart = chart.with_sigma(i, s.value.eval(&what)?, s.codim).map_err(|e| located(e, &what))?;
        }
        Ok(chart)
    }

    fn params(&self) -> Vec<(String, f64)> {
        self.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    fn form(&self, terms: &Terms, chart: &Chart, what: &str) -> Result<FormField> {
        let params = self.params();
        let mut degree = None;
        let mut parsed = Vec::new();
        for (k, [b, e]) in terms.iter().enumerate() {
            let w = format!("{what}[{k}]");
            let idx = basis(b, chart).map_err(|e| located(e, &w))?;
            if *degree.get_or_insert(idx.len()) != idx.len() {
                return Err(Error::Scene(format!("{w}: mixed degrees")));
            }
            parsed.push((idx, ScalarField::parse(e, chart, &params).map_err(|e| located(e, &w))?));
        }
        let degree = degree.ok_or_else(|| Error::Scene(format!("{what}: empty form")))?;
        FormField::from_terms(chart.dim(), degree, parsed).map_err(|e| located(e, what))
    }

    fn vectors(&self, rows: &[Vec<String>], chart: &Chart, what: &str) -> Result<Vec<VectorField>> {
        let params = self.params();
        rows.iter()
            .enumerate()
            .map(|(k, row)| {
                let w = format!("{what}[{k}]");
                if row.len() != chart.dim() {
                    return Err(Error::Scene(format!("{w}: expected {} components", chart.dim())));
                }
                let comps = row
                    .iter()
                    .enumerate()
                    .map(|(j, s)| ScalarField::parse(s, chart, &params).map_err(|e| located(e, &format!("{w}[{j}]"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(VectorField::from_components(comps))
            })
            .collect()
    }

    pub fn scene(&self) -> Result<FramedScene> {
        let chart = self.chart()?;
        let omega = self.form(&self.forms.omega, &chart, "forms.omega")?;
        let t = self.vectors(&self.frame.t, &chart, "frame.T")?;
        let mut s = FramedScene::new(&self.name, chart.clone(), omega, t).map_err(|e| located(e, "scene"))?;
        s.params = self.params();
        s.integrable = self.integrable;
        if let Some(cf) = &self.forms.coframe {
            s.coframe =
                Some(cf.iter().enumerate().map(|(i, t)| self.form(t, &chart, &format!("forms.coframe[{i}]"))).collect::<Result<_>>()?);
        }
        if let Some(d) = &self.frame.d {
            s.d_frame = Some(self.vectors(d, &chart, "frame.D")?);
        }
        s.metric = match &self.metric {
            None => None,
            Some(MetricSpec::FromDFrame) => {
                if s.d_frame.is_none() {
                    return Err(Error::Scene("metric.kind = from_d_frame needs frame.D".into()));
                }
                Some(MetricField::FromDFrame)
            }
            Some(MetricSpec::Euclidean) => Some(crate::geometry::euclidean_metric(chart.dim())),
            Some(MetricSpec::Explicit { g }) => {
                let params = self.params();
                let rows = g
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, e)| ScalarField::parse(e, &chart, &params).map_err(|er| located(er, &format!("metric.g[{i}][{j}]"))))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                if rows.len() != chart.dim() || rows.iter().any(|r| r.len() != chart.dim()) {
                    return Err(Error::Scene("metric.g must be a square matrix of the chart dimension".into()));
                }
                Some(MetricField::Explicit(rows))
            }
        };
        Ok(s)
    }
}

pub fn load_scene(path: &Path) -> Result<(SceneFile, FramedScene)> {
    let f = SceneFile::load(path)?;
    let s = f.scene().map_err(|e| Error::Scene(format!("{}: {e}", path.display())))?;
    Ok((f, s))
}
