//! JSON spec files and reports.
//!
//! Chart files carry expressions as strings over the chart's coordinate and
//! parameter names; the domain is an object keyed by coordinate name. All
//! floating-point numbers are written in scientific notation with 17
//! significant digits so that reports and emitted charts are byte-stable
//! across runs and round-trip exactly.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::chart::{GeometryError, MetricSpec, SparseFormEntry};
use crate::expr;

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("spec file: {0}")]
    Content(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn content(msg: impl Into<String>) -> JsonError {
    JsonError::Content(msg.into())
}

// ---------------------------------------------------------------------------
// number formatting

/// Pretty JSON with every float in scientific notation at 17 significant
/// digits; numbers round-trip bit-exactly through parse.
struct SigFigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl SigFigFormatter<'_> {
    fn new() -> Self {
        SigFigFormatter { inner: PrettyFormatter::new() }
    }
}

impl Formatter for SigFigFormatter<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// Serializes any value as pretty JSON with 17-digit floats and a trailing
/// newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, JsonError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter::new());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonError> {
    Ok(std::fs::write(path, to_json(value)?)?)
}

// ---------------------------------------------------------------------------
// chart files

#[derive(Serialize, Deserialize)]
struct MetricEntryFile {
    i: usize,
    j: usize,
    expr: String,
}

#[derive(Serialize, Deserialize)]
struct FormEntryFile {
    i: usize,
    j: usize,
    k: usize,
    expr: String,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    name: String,
    dim: usize,
    coords: Vec<String>,
    params: BTreeMap<String, f64>,
    metric: Vec<MetricEntryFile>,
    xi: Option<Vec<String>>,
    #[serde(rename = "S")]
    s: Option<Vec<FormEntryFile>>,
    domain: BTreeMap<String, [f64; 2]>,
    manifest: Option<Vec<String>>,
}

/// Renders a chart to its JSON file form.
pub fn spec_to_json(spec: &MetricSpec) -> Result<String, JsonError> {
    let params: BTreeMap<String, f64> = spec
        .param_names
        .iter()
        .cloned()
        .zip(spec.param_values.iter().copied())
        .collect();
    let metric = spec
        .metric_entries()
        .into_iter()
        .map(|(i, j, e)| MetricEntryFile {
            i,
            j,
            expr: e.render(&spec.coords, &spec.param_names),
        })
        .collect();
    let xi = spec
        .xi
        .as_ref()
        .map(|v| v.iter().map(|e| e.render(&spec.coords, &spec.param_names)).collect());
    let s = spec.s_entries.as_ref().map(|entries| {
        entries
            .iter()
            .map(|e| FormEntryFile {
                i: e.idx[0],
                j: e.idx[1],
                k: e.idx[2],
                expr: e.expr.render(&spec.coords, &spec.param_names),
            })
            .collect()
    });
    let domain: BTreeMap<String, [f64; 2]> = spec
        .coords
        .iter()
        .cloned()
        .zip(spec.domain.iter().map(|(lo, hi)| [*lo, *hi]))
        .collect();
    let file = SpecFile {
        name: spec.name.clone(),
        dim: spec.dim,
        coords: spec.coords.clone(),
        params,
        metric,
        xi,
        s,
        domain,
        manifest: spec.manifest.clone(),
    };
    to_json(&file)
}

/// Parses a chart from its JSON file form, revalidating everything.
pub fn spec_from_json(text: &str) -> Result<MetricSpec, JsonError> {
    let file: SpecFile = serde_json::from_str(text)?;
    if file.dim != file.coords.len() {
        return Err(content(format!(
            "dim is {} but {} coordinates are listed",
            file.dim,
            file.coords.len()
        )));
    }
    for (k, c) in file.coords.iter().enumerate() {
        if file.coords[..k].contains(c) {
            return Err(content(format!("coordinate '{c}' appears twice")));
        }
    }
    let param_names: Vec<String> = file.params.keys().cloned().collect();
    let param_values: Vec<f64> = file.params.values().copied().collect();
    let parse = |text: &str| -> Result<expr::Expr, JsonError> {
        expr::parse(text, &file.coords, &param_names)
            .map_err(|e| content(format!("bad expression '{text}': {e}")))
    };

    let mut metric = Vec::with_capacity(file.metric.len());
    for m in &file.metric {
        metric.push((m.i, m.j, parse(&m.expr)?));
    }
    let xi = match &file.xi {
        None => None,
        Some(components) => {
            let mut out = Vec::with_capacity(components.len());
            for c in components {
                out.push(parse(c)?);
            }
            Some(out)
        }
    };
    let s_entries = match &file.s {
        None => None,
        Some(entries) => {
            let mut out = Vec::with_capacity(entries.len());
            for e in entries {
                out.push(SparseFormEntry { idx: [e.i, e.j, e.k], expr: parse(&e.expr)? });
            }
            Some(out)
        }
    };
    if file.domain.len() != file.coords.len() {
        return Err(content("domain must list every coordinate exactly once"));
    }
    let mut domain = Vec::with_capacity(file.coords.len());
    for c in &file.coords {
        let lohi = file
            .domain
            .get(c)
            .ok_or_else(|| content(format!("domain is missing coordinate '{c}'")))?;
        domain.push((lohi[0], lohi[1]));
    }

    Ok(MetricSpec::new(
        file.name,
        file.coords,
        param_names,
        param_values,
        metric,
        xi,
        s_entries,
        domain,
        file.manifest,
    )?)
}

pub fn read_spec(path: &Path) -> Result<MetricSpec, JsonError> {
    let text = std::fs::read_to_string(path)?;
    spec_from_json(&text)
}

pub fn write_spec(path: &Path, spec: &MetricSpec) -> Result<(), JsonError> {
    Ok(std::fs::write(path, spec_to_json(spec)?)?)
}

// ---------------------------------------------------------------------------
// geodesic reports

#[derive(Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: f64,
}

#[derive(Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub slope: f64,
    pub intercept: f64,
    pub t_singular: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// A geodesic run: the request, the halt status, the optional law fit, and
/// the sampled rows.
#[derive(Serialize, Deserialize)]
pub struct GeodesicReport {
    pub tool_version: String,
    pub spec_name: String,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t_max: f64,
    pub step: f64,
    pub track: String,
    pub status: String,
    pub blow_up_time: Option<f64>,
    pub fit: Option<FitSummary>,
    pub rows: Vec<TraceRow>,
}
