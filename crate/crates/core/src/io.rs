//! Problem files and result serialization.
//!
//! Problem files are JSON documents:
//!
//! ```json
//! {
//!   "version": 1,
//!   "b0": {"type": "constant", "value": -1.0},
//!   "b1": {"type": "piecewise", "breakpoints": [0, 0.5, 1], "polys": [[0.0], [1.0, 2.0]]},
//!   "nu0": {"atoms": [{"x": 0.5, "w": 1.0}]},
//!   "nu1": {"atoms": [], "density": {"breakpoints": [0, 1], "values": [1.0]}}
//! }
//! ```
//!
//! Syntax errors, missing keys and wrongly typed values are parse errors.
//! Unknown keys and an unsupported `version` are reported as validation
//! violations together with the problem's own invariants.
//!
//! Every floating-point number written by this module carries 17 significant
//! digits, so outputs round-trip through `f64` and are byte-stable.

use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64 as C;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::characteristic::GridSample;
use crate::error::{Error, Result};
use crate::problem::{Atom, BoundaryMeasure, Coefficient, Density, Problem, ValidationReport, Violation};
use crate::region::ContourRegion;
use crate::resolvent::SampledFunction;
use crate::rootfinder::{Eigenvalue, SpectrumResult};

pub const FILE_VERSION: u64 = 1;

/// A parsed problem file: the problem plus violations found in the document itself.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub problem: Problem,
    pub document_violations: Vec<Violation>,
}

impl ProblemFile {
    /// Document violations followed by the problem's own validation report.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = self.document_violations.clone();
        violations.extend(self.problem.validate().violations);
        ValidationReport { violations }
    }

    /// The problem, or [`Error::InvalidProblem`] when any violation is present.
    pub fn into_valid(self) -> Result<Problem> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self.problem)
        } else {
            Err(Error::InvalidProblem(report))
        }
    }
}

/// Parses a problem document without validating it.
pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("malformed document: {e}")))?;
    let mut violations = Vec::new();
    let top = object(&doc, "document")?;
    unknown_keys(top, &["version", "b0", "b1", "nu0", "nu1"], "", &mut violations);

    let version = field(top, "version", "")?
        .as_u64()
        .ok_or_else(|| Error::Parse("version: expected a non-negative integer".into()))?;
    if version != FILE_VERSION {
        violations.push(Violation::new(
            "version",
            format!("unsupported version {version}, expected {FILE_VERSION}"),
        ));
    }
    let b0 = coefficient(field(top, "b0", "")?, "b0", &mut violations)?;
    let b1 = coefficient(field(top, "b1", "")?, "b1", &mut violations)?;
    let nu0 = measure(field(top, "nu0", "")?, "nu0", &mut violations)?;
    let nu1 = measure(field(top, "nu1", "")?, "nu1", &mut violations)?;
    Ok(ProblemFile {
        problem: Problem::new(b0, b1, nu0, nu1),
        document_violations: violations,
    })
}

/// Reads and parses a problem file without validating it.
pub fn read_problem_file(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads, parses and validates a problem file.
pub fn load_problem(path: &Path) -> Result<Problem> {
    read_problem_file(path)?.into_valid()
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::Parse(format!("{path}: expected an object")))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("{}: missing key", join(path, key))))
}

fn unknown_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str, out: &mut Vec<Violation>) {
    for key in obj.keys().filter(|k| !allowed.contains(&k.as_str())) {
        out.push(Violation::new(join(path, key), "unknown key"));
    }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Parse(format!("{path}: expected a number")))
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("{path}: expected an array of numbers")))?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn coefficient(v: &Value, path: &str, violations: &mut Vec<Violation>) -> Result<Coefficient> {
    let obj = object(v, path)?;
    let kind = field(obj, "type", path)?
        .as_str()
        .ok_or_else(|| Error::Parse(format!("{path}.type: expected a string")))?;
    match kind {
        "constant" => {
            unknown_keys(obj, &["type", "value"], path, violations);
            Ok(Coefficient::constant(number(
                field(obj, "value", path)?,
                &join(path, "value"),
            )?))
        }
        "piecewise" => {
            unknown_keys(obj, &["type", "breakpoints", "polys"], path, violations);
            let breakpoints = numbers(field(obj, "breakpoints", path)?, &join(path, "breakpoints"))?;
            let polys_path = join(path, "polys");
            let polys = field(obj, "polys", path)?
                .as_array()
                .ok_or_else(|| Error::Parse(format!("{polys_path}: expected an array of arrays")))?
                .iter()
                .enumerate()
                .map(|(i, p)| numbers(p, &format!("{polys_path}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Coefficient::piecewise(breakpoints, polys))
        }
        other => Err(Error::Parse(format!(
            "{path}.type: unknown coefficient type {other:?}, expected \"constant\" or \"piecewise\""
        ))),
    }
}

fn measure(v: &Value, path: &str, violations: &mut Vec<Violation>) -> Result<BoundaryMeasure> {
    let obj = object(v, path)?;
    unknown_keys(obj, &["atoms", "density"], path, violations);
    let mut atoms = Vec::new();
    if let Some(list) = obj.get("atoms") {
        let atoms_path = join(path, "atoms");
        let list = list
            .as_array()
            .ok_or_else(|| Error::Parse(format!("{atoms_path}: expected an array")))?;
        for (i, a) in list.iter().enumerate() {
            let p = format!("{atoms_path}[{i}]");
            let o = object(a, &p)?;
            unknown_keys(o, &["x", "w"], &p, violations);
            atoms.push(Atom {
                x: number(field(o, "x", &p)?, &join(&p, "x"))?,
                w: number(field(o, "w", &p)?, &join(&p, "w"))?,
            });
        }
    }
    let density = match obj.get("density") {
        None | Some(Value::Null) => None,
        Some(d) => {
            let p = join(path, "density");
            let o = object(d, &p)?;
            unknown_keys(o, &["breakpoints", "values"], &p, violations);
            Some(Density {
                breakpoints: numbers(field(o, "breakpoints", &p)?, &join(&p, "breakpoints"))?,
                values: numbers(field(o, "values", &p)?, &join(&p, "values"))?,
            })
        }
    };
    Ok(BoundaryMeasure { atoms, density })
}

/// The problem as a version-1 document.
pub fn problem_to_value(problem: &Problem) -> Value {
    fn coeff(c: &Coefficient) -> Value {
        match c {
            Coefficient::Constant(v) => json!({"type": "constant", "value": v}),
            Coefficient::Piecewise { breakpoints, polys } => {
                json!({"type": "piecewise", "breakpoints": breakpoints, "polys": polys})
            }
        }
    }
    fn meas(m: &BoundaryMeasure) -> Value {
        let atoms: Vec<Value> = m.atoms.iter().map(|a| json!({"x": a.x, "w": a.w})).collect();
        let mut out = json!({ "atoms": atoms });
        if let Some(d) = &m.density {
            out["density"] = json!({"breakpoints": d.breakpoints, "values": d.values});
        }
        out
    }
    json!({
        "version": FILE_VERSION,
        "b0": coeff(problem.b0()),
        "b1": coeff(problem.b1()),
        "nu0": meas(problem.nu0()),
        "nu1": meas(problem.nu1()),
    })
}

/// Writes `problem` to `path` as a version-1 document.
pub fn write_problem_file(problem: &Problem, path: &Path) -> Result<()> {
    std::fs::write(path, to_json_string(&problem_to_value(problem))?)?;
    Ok(())
}

/// Pretty JSON whose floats are printed with 17 significant digits.
struct PreciseFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", sig17(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// `value` with 17 significant digits in scientific notation.
pub fn sig17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes `value` as pretty JSON with 17-digit floats and a trailing newline.
///
/// Non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = PreciseFormatter {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).map_err(|e| Error::Io(io::Error::other(e)))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionRecord {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl From<ContourRegion> for RegionRecord {
    fn from(r: ContourRegion) -> Self {
        RegionRecord {
            re_min: r.re_min,
            re_max: r.re_max,
            im_min: r.im_min,
            im_max: r.im_max,
        }
    }
}

/// One eigenvalue as written to output files.
///
/// The search-only fields are absent for closed-form spectra.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRecord {
    pub re: f64,
    pub im: f64,
    pub multiplicity: u32,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding_residual: Option<f64>,
}

impl EigenRecord {
    /// A closed-form eigenvalue with its determinant residual.
    pub fn exact(location: C, multiplicity: u32, residual: f64) -> Self {
        EigenRecord {
            re: location.re,
            im: location.im,
            multiplicity,
            residual,
            separation: None,
            iterations: None,
            winding_radius: None,
            winding_residual: None,
        }
    }
}

impl From<&Eigenvalue> for EigenRecord {
    fn from(e: &Eigenvalue) -> Self {
        EigenRecord {
            re: e.location.re,
            im: e.location.im,
            multiplicity: e.multiplicity,
            residual: e.residual,
            separation: Some(e.separation),
            iterations: Some(e.iterations),
            winding_radius: Some(e.winding_radius),
            winding_residual: Some(e.winding_residual),
        }
    }
}

/// Search diagnostics that do not depend on thread scheduling.
///
/// The evaluation counter of [`SpectrumDiagnostics`](crate::rootfinder::SpectrumDiagnostics)
/// is left out: concurrent workers may both evaluate an edge before either caches it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub perturbations: usize,
    pub max_winding_residual: f64,
    pub notes: Vec<String>,
}

/// A spectrum document: eigenvalues in a region and how they were obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub region: RegionRecord,
    pub eigenvalues: Vec<EigenRecord>,
    pub total_count: usize,
    /// `"search"` or the name of the closed form used.
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsRecord>,
}

impl From<&SpectrumResult> for SpectrumReport {
    fn from(r: &SpectrumResult) -> Self {
        SpectrumReport {
            region: r.region.into(),
            eigenvalues: r.eigenvalues.iter().map(EigenRecord::from).collect(),
            total_count: r.total_count,
            method: "search".into(),
            diagnostics: Some(DiagnosticsRecord {
                perturbations: r.diagnostics.perturbations,
                max_winding_residual: r.diagnostics.winding_residuals.iter().copied().fold(0.0, f64::max),
                notes: r.diagnostics.notes.clone(),
            }),
        }
    }
}

/// A spectral-gap document.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub gap: f64,
    /// `"closed-form"` or `"search"`.
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<EigenRecord>,
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.into())
}

/// Writes eigenvalues as CSV with columns `re,im,multiplicity,residual`.
pub fn write_spectrum_csv<W: Write>(out: W, eigenvalues: &[EigenRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["re", "im", "multiplicity", "residual"])
        .map_err(csv_err)?;
    for e in eigenvalues {
        w.write_record([sig17(e.re), sig17(e.im), e.multiplicity.to_string(), sig17(e.residual)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a grid as CSV with columns `re_lambda,im_lambda,re_delta,im_delta`, row-major.
pub fn write_grid_csv<W: Write>(out: W, grid: &GridSample) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["re_lambda", "im_lambda", "re_delta", "im_delta"])
        .map_err(csv_err)?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (z, d) = (grid.point(i, j), grid.value(i, j));
            w.write_record([sig17(z.re), sig17(z.im), sig17(d.re), sig17(d.im)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a gap as CSV with columns `gap,method`.
pub fn write_gap_csv<W: Write>(out: W, gap: &GapReport) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["gap", "method"]).map_err(csv_err)?;
    w.write_record([sig17(gap.gap), gap.method.clone()]).map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GridSampleRecord {
    re_lambda: f64,
    im_lambda: f64,
    re_delta: f64,
    im_delta: f64,
}

#[derive(Serialize)]
struct GridRecord {
    region: RegionRecord,
    nx: usize,
    ny: usize,
    samples: Vec<GridSampleRecord>,
}

/// A grid as a JSON document with row-major samples.
pub fn grid_to_json(grid: &GridSample) -> Result<String> {
    let samples = (0..grid.ny)
        .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let (z, d) = (grid.point(i, j), grid.value(i, j));
            GridSampleRecord {
                re_lambda: z.re,
                im_lambda: z.im,
                re_delta: d.re,
                im_delta: d.im,
            }
        })
        .collect();
    to_json_string(&GridRecord {
        region: grid.region.into(),
        nx: grid.nx,
        ny: grid.ny,
        samples,
    })
}

#[derive(Serialize)]
struct SampledRecord<'a> {
    lambda: [f64; 2],
    x: &'a [f64],
    re_f: Vec<f64>,
    im_f: Vec<f64>,
}

/// A resolvent output as a JSON document with parallel `x`, `re_f`, `im_f` arrays.
pub fn sampled_to_json(lambda: C, u: &SampledFunction) -> Result<String> {
    to_json_string(&SampledRecord {
        lambda: [lambda.re, lambda.im],
        x: u.nodes(),
        re_f: u.values().iter().map(|v| v.re).collect(),
        im_f: u.values().iter().map(|v| v.im).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEXIN: &str = r#"{
        "version": 1,
        "b0": {"type": "constant", "value": -1.0},
        "b1": {"type": "constant", "value": 0.0},
        "nu0": {"atoms": [{"x": 0.5, "w": 1.0}]},
        "nu1": {"atoms": [{"x": 0.5, "w": 1.0}]}
    }"#;

    #[test]
    fn parses_dirac_file() {
        let pf = parse_problem(DEXIN).unwrap();
        assert!(pf.validate().is_valid());
        assert_eq!(pf.problem, Problem::constant_with_dirac(-1.0, 0.0, 0.5));
    }

    #[test]
    fn unknown_keys_are_violations() {
        let text = DEXIN.replace("\"version\": 1,", "\"version\": 1, \"colour\": 3,");
        let report = parse_problem(&text).unwrap().validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "colour");
    }

    #[test]
    fn wrong_version_is_a_violation() {
        let text = DEXIN.replace("\"version\": 1", "\"version\": 2");
        assert!(!parse_problem(&text).unwrap().validate().is_valid());
    }

    #[test]
    fn malformed_documents_are_parse_errors() {
        for text in [
            "{",
            "[]",
            r#"{"version": 1}"#,
            &DEXIN.replace("-1.0", "\"minus one\""),
            &DEXIN.replace("constant\", \"value\": -1.0", "spline\", \"value\": -1.0"),
        ] {
            assert!(matches!(parse_problem(text), Err(Error::Parse(_))), "{text}");
        }
    }

    #[test]
    fn round_trips_piecewise_problem() {
        let p = Problem::new(
            Coefficient::piecewise(vec![0.0, 0.3, 1.0], vec![vec![-1.0, 0.1], vec![-2.0, 0.0, 0.5, 0.1]]),
            Coefficient::constant(1.0 / 3.0),
            BoundaryMeasure::uniform(),
            BoundaryMeasure {
                atoms: vec![Atom { x: 0.25, w: 0.5 }],
                density: Some(Density {
                    breakpoints: vec![0.0, 0.5],
                    values: vec![1.0],
                }),
            },
        );
        let text = to_json_string(&problem_to_value(&p)).unwrap();
        assert_eq!(parse_problem(&text).unwrap().problem, p);
    }

    #[test]
    fn floats_have_17_digits() {
        let s = to_json_string(&json!({"v": 0.1, "n": f64::NAN})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("null"));
        assert_eq!(
            sig17(std::f64::consts::PI).parse::<f64>().unwrap(),
            std::f64::consts::PI
        );
    }

    #[test]
    fn spectrum_csv_layout() {
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[EigenRecord::exact(C::new(1.0, -2.0), 3, 0.0)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "re,im,multiplicity,residual\n1.0000000000000000e0,-2.0000000000000000e0,3,0.0000000000000000e0\n"
        );
    }
}
