//! JSON file formats: matrices, preserver specs and semilinear operators.
//!
//! Exact entries are written as `"p/q"` strings in lowest terms and float
//! entries as shortest round-trip decimals, so writing a parsed exact file
//! reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use psdcone::linalg::{format_rational, parse_rational, Rational};
use psdcone::preserver::{make_wild_map, Flavor, MapKind, PreserverSpec, SemilinearOperator, ZFamily};
use psdcone::{Backend, Complex64, GaussianRational, Matrix};
use serde_json::{json, Map, Value};

type Q = GaussianRational;

/// A malformed input file. The message names the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError(pub String);

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FormatError {}

fn err<T>(msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError(msg.into()))
}

/// A matrix on whichever backend its file declared.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyMatrix {
    Exact(Matrix<Q>),
    Float(Matrix<Complex64>),
}

impl AnyMatrix {
    pub fn backend(&self) -> Backend {
        match self {
            AnyMatrix::Exact(_) => Backend::Exact,
            AnyMatrix::Float(_) => Backend::Float,
        }
    }

    pub fn to_float(&self) -> Matrix<Complex64> {
        match self {
            AnyMatrix::Exact(m) => m.to_float(),
            AnyMatrix::Float(m) => m.clone(),
        }
    }

    /// The exact matrix, converting float entries to the rationals they
    /// denote exactly.
    pub fn to_exact(&self) -> Matrix<Q> {
        match self {
            AnyMatrix::Exact(m) => m.clone(),
            AnyMatrix::Float(m) => m.map(|z| {
                Q::new(
                    Rational::from_float(z.re).expect("finite"),
                    Rational::from_float(z.im).expect("finite"),
                )
            }),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError(format!("{}: {e}", path.display())))
}

fn parse_json(text: &str) -> Result<Value, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError(format!("invalid JSON: {e}")))
}

pub fn parse_matrix_file(path: &Path) -> Result<AnyMatrix, FormatError> {
    parse_matrix_str(&read_file(path)?).map_err(|e| FormatError(format!("{}: {e}", path.display())))
}

pub fn parse_matrix_str(text: &str) -> Result<AnyMatrix, FormatError> {
    matrix_from_value(&parse_json(text)?)
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, FormatError> {
    obj.get(name)
        .ok_or_else(|| FormatError(format!("missing field \"{name}\"")))
}

fn as_usize(v: &Value, name: &str) -> Result<usize, FormatError> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| FormatError(format!("field \"{name}\" must be a non-negative integer")))
}

pub fn matrix_from_value(v: &Value) -> Result<AnyMatrix, FormatError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FormatError("matrix must be a JSON object".into()))?;
    let backend = match field(obj, "backend")?.as_str() {
        Some("exact") => Backend::Exact,
        Some("float") => Backend::Float,
        _ => return err("field \"backend\" must be \"exact\" or \"float\""),
    };
    let rows = as_usize(field(obj, "rows")?, "rows")?;
    let cols = as_usize(field(obj, "cols")?, "cols")?;
    let data = field(obj, "data")?
        .as_array()
        .ok_or_else(|| FormatError("field \"data\" must be an array of rows".into()))?;
    if data.len() != rows {
        return err(format!("field \"data\" has {} rows, \"rows\" says {rows}", data.len()));
    }
    let mut exact = Vec::new();
    let mut float = Vec::new();
    for (i, row) in data.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| FormatError(format!("data row {i} is not an array")))?;
        if row.len() != cols {
            return err(format!("data row {i} has {} entries, \"cols\" says {cols}", row.len()));
        }
        for (j, entry) in row.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| FormatError(format!("entry ({i}, {j}) must be a [re, im] pair")))?;
            match backend {
                Backend::Exact => {
                    let parse = |x: &Value| {
                        x.as_str()
                            .and_then(parse_rational)
                            .ok_or_else(|| FormatError(format!("entry ({i}, {j}): malformed rational {x}")))
                    };
                    exact.push(Q::new(parse(&pair[0])?, parse(&pair[1])?));
                }
                Backend::Float => {
                    let parse = |x: &Value| {
                        x.as_f64()
                            .filter(|f| f.is_finite())
                            .ok_or_else(|| FormatError(format!("entry ({i}, {j}): {x} is not a finite number")))
                    };
                    float.push(Complex64::new(parse(&pair[0])?, parse(&pair[1])?));
                }
            }
        }
    }
    Ok(match backend {
        Backend::Exact => AnyMatrix::Exact(Matrix::new(rows, cols, exact).expect("shape checked")),
        Backend::Float => AnyMatrix::Float(Matrix::new(rows, cols, float).expect("shape checked")),
    })
}

fn float_literal(x: f64) -> String {
    // Normalize -0 so equal matrices print identically.
    let x = if x == 0.0 { 0.0 } else { x };
    serde_json::to_string(&x).expect("finite float")
}

fn exact_literal(q: &Rational) -> String {
    serde_json::to_string(&format_rational(q)).expect("string")
}

/// Canonical text of a matrix file, one matrix row per line.
pub fn write_matrix(m: &AnyMatrix) -> String {
    let (backend, rows, cols, entries): (_, _, _, Vec<String>) = match m {
        AnyMatrix::Exact(m) => (
            "exact",
            m.rows(),
            m.cols(),
            m.data()
                .iter()
                .map(|z| format!("[{}, {}]", exact_literal(&z.re), exact_literal(&z.im)))
                .collect(),
        ),
        AnyMatrix::Float(m) => (
            "float",
            m.rows(),
            m.cols(),
            m.data()
                .iter()
                .map(|z| format!("[{}, {}]", float_literal(z.re), float_literal(z.im)))
                .collect(),
        ),
    };
    let mut out = String::new();
    writeln!(out, "{{").unwrap();
    writeln!(out, "  \"backend\": \"{backend}\",").unwrap();
    writeln!(out, "  \"rows\": {rows},").unwrap();
    writeln!(out, "  \"cols\": {cols},").unwrap();
    if rows == 0 {
        writeln!(out, "  \"data\": []").unwrap();
    } else {
        writeln!(out, "  \"data\": [").unwrap();
        for i in 0..rows {
            let sep = if i + 1 == rows { "" } else { "," };
            writeln!(out, "    [{}]{sep}", entries[i * cols..(i + 1) * cols].join(", ")).unwrap();
        }
        writeln!(out, "  ]").unwrap();
    }
    out.push('}');
    out.push('\n');
    out
}

/// The matrix file as a JSON value, for embedding in reports.
pub fn matrix_value(m: &AnyMatrix) -> Value {
    serde_json::from_str(&write_matrix(m)).expect("writer emits valid JSON")
}

pub fn exact_value(m: &Matrix<Q>) -> Value {
    matrix_value(&AnyMatrix::Exact(m.clone()))
}

fn flavor_from_value(obj: &Map<String, Value>) -> Result<Flavor, FormatError> {
    match obj.get("flavor") {
        None => Ok(Flavor::Linear),
        Some(v) => v
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError("field \"flavor\" must be \"linear\" or \"conjugate\"".into())),
    }
}

fn operator_from_obj(obj: &Map<String, Value>) -> Result<SemilinearOperator, FormatError> {
    let t = matrix_from_value(field(obj, "T")?).map_err(|e| FormatError(format!("field \"T\": {e}")))?;
    SemilinearOperator::new(t.to_exact(), flavor_from_value(obj)?).map_err(|e| FormatError(format!("field \"T\": {e}")))
}

/// `{"T": matrix, "flavor": "linear" | "conjugate"}`.
pub fn operator_from_value(v: &Value) -> Result<SemilinearOperator, FormatError> {
    operator_from_obj(
        v.as_object()
            .ok_or_else(|| FormatError("operator must be a JSON object".into()))?,
    )
}

pub fn operator_value(op: &SemilinearOperator) -> Value {
    json!({ "T": exact_value(op.matrix()), "flavor": op.flavor().as_str() })
}

fn u64_field(obj: &Map<String, Value>, name: &str) -> Result<u64, FormatError> {
    field(obj, name)?
        .as_u64()
        .ok_or_else(|| FormatError(format!("field \"{name}\" must be a non-negative integer")))
}

/// Preserver spec JSON:
/// `{"kind": "congruence" | "form_iv" | "wild" | "composite", "T", "flavor",
/// "z_seed", "parts"}`. Seeded wild maps carry `"seed"` and `"dim"`; wild
/// maps with an explicit operator carry `"V"` and `"invert"` instead.
pub fn spec_from_value(v: &Value) -> Result<PreserverSpec, FormatError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FormatError("map spec must be a JSON object".into()))?;
    let kind = field(obj, "kind")?
        .as_str()
        .ok_or_else(|| FormatError("field \"kind\" must be a string".into()))?;
    match kind {
        "congruence" => Ok(PreserverSpec::congruence(operator_from_obj(obj)?)),
        "form_iv" => Ok(PreserverSpec::form_iv(
            operator_from_obj(obj)?,
            ZFamily::new(u64_field(obj, "z_seed")?),
        )),
        "wild" => {
            if let Some(v) = obj.get("V") {
                let v = matrix_from_value(v).map_err(|e| FormatError(format!("field \"V\": {e}")))?;
                let invert = obj.get("invert").and_then(Value::as_bool).unwrap_or(false);
                PreserverSpec::wild_with(v.to_exact(), invert).map_err(|e| FormatError(format!("field \"V\": {e}")))
            } else {
                let dim = as_usize(field(obj, "dim")?, "dim")?;
                make_wild_map(u64_field(obj, "seed")?, dim).map_err(|e| FormatError(e.to_string()))
            }
        }
        "composite" => {
            let parts = field(obj, "parts")?
                .as_array()
                .ok_or_else(|| FormatError("field \"parts\" must be an array".into()))?;
            let parts = parts
                .iter()
                .enumerate()
                .map(|(k, p)| spec_from_value(p).map_err(|e| FormatError(format!("parts[{k}]: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            PreserverSpec::composite(parts).map_err(|e| FormatError(format!("field \"parts\": {e}")))
        }
        other => err(format!("field \"kind\": unknown map kind {other:?}")),
    }
}

pub fn spec_value(spec: &PreserverSpec) -> Value {
    match spec.kind() {
        MapKind::Congruence(t) => json!({
            "kind": "congruence",
            "T": exact_value(t.matrix()),
            "flavor": t.flavor().as_str(),
        }),
        MapKind::FormIv { t, z } => json!({
            "kind": "form_iv",
            "T": exact_value(t.matrix()),
            "flavor": t.flavor().as_str(),
            "z_seed": z.seed,
        }),
        MapKind::Wild(w) => match w.seed {
            Some(seed) => json!({ "kind": "wild", "seed": seed, "dim": spec.dimension() }),
            None => json!({ "kind": "wild", "V": exact_value(&w.v), "invert": w.invert }),
        },
        MapKind::Composite(parts) => json!({
            "kind": "composite",
            "parts": parts.iter().map(spec_value).collect::<Vec<_>>(),
        }),
    }
}

pub fn parse_spec_file(path: &Path) -> Result<PreserverSpec, FormatError> {
    spec_from_value(&parse_json(&read_file(path)?)?).map_err(|e| FormatError(format!("{}: {e}", path.display())))
}

/// Maps accepted by `reconstruct`: a preserver spec, or the line swap
/// `{"kind": "line_swap", "dim": n, "i": i, "j": j}` (zero-based indices).
pub enum LineMapFile {
    Spec(PreserverSpec),
    Swap { dim: usize, i: usize, j: usize },
}

pub fn parse_line_map_file(path: &Path) -> Result<LineMapFile, FormatError> {
    let v = parse_json(&read_file(path)?)?;
    let with_path = |e: FormatError| FormatError(format!("{}: {e}", path.display()));
    if v.get("kind").and_then(Value::as_str) == Some("line_swap") {
        let obj = v.as_object().expect("has a field");
        let dim = as_usize(field(obj, "dim").map_err(with_path)?, "dim").map_err(with_path)?;
        let i = as_usize(field(obj, "i").map_err(with_path)?, "i").map_err(with_path)?;
        let j = as_usize(field(obj, "j").map_err(with_path)?, "j").map_err(with_path)?;
        if i >= dim || j >= dim || i == j {
            return Err(with_path(FormatError(
                "line_swap needs distinct indices below \"dim\"".into(),
            )));
        }
        return Ok(LineMapFile::Swap { dim, i, j });
    }
    spec_from_value(&v).map(LineMapFile::Spec).map_err(with_path)
}
