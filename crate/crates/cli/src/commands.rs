//! Subcommands of the `psdcone` binary.
//!
//! Exit codes: 0 on success, 1 when a checked property fails, 2 on usage,
//! parse or dimension errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use psdcone::lebesgue::{decompose, verify_decomposition};
use psdcone::preserver::{dim2_conditions, verify_range_form, verify_relation_preservation, PreserverSpec};
use psdcone::preserver::{Flavor, SemilinearOperator};
use psdcone::projective::{
    count_disagreements, reconstruct_semilinear, verify_projectivity, InducedLineMap, LineMap, ProjectivityReport,
    SwapLineMap,
};
use psdcone::relations::{analyze_pair, RelationReport};
use psdcone::{Complex64, Error, GaussianRational, PsdOperator, Scalar, Tol};
use serde_json::{json, Value};

use crate::format::{
    exact_value, operator_value, parse_line_map_file, parse_matrix_file, parse_spec_file, spec_value, write_matrix,
    AnyMatrix, FormatError, LineMapFile,
};
use crate::suite::{run_suite, SuiteConfig};

type Q = GaussianRational;
type C = Complex64;

#[derive(Parser, Debug)]
#[command(
    name = "psdcone",
    version,
    about = "Range relations, Lebesgue decomposition and preserver maps on the PSD cone"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Linear,
    Conjugate,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Linear => Flavor::Linear,
            FlavorArg::Conjugate => Flavor::Conjugate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide every relation between two positive matrices.
    Analyze {
        a: PathBuf,
        b: PathBuf,
        /// Defaults to exact when both files are exact.
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Relative rank threshold and principal-angle threshold (float only).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "both")]
        format: OutputFormat,
    },
    /// Lebesgue decomposition of A with respect to B (float backend).
    Decompose {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
        /// Contractions sampled by the maximality check.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Apply or verify a preserver map.
    #[command(subcommand)]
    Map(MapCommand),
    /// Recover the semilinear operator behind a line map.
    Reconstruct {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        dim: usize,
        /// Random triples of each kind for the coplanarity check.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the property suite.
    Suite {
        /// Inclusive range such as `2..4`.
        #[arg(long, value_parser = parse_dims)]
        dims: Dims,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        skip_float: bool,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MapCommand {
    /// Write φ(A).
    Apply {
        #[arg(long)]
        spec: PathBuf,
        a: PathBuf,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample relation preservation and, given T, the range form.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "T")]
        t: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "linear")]
        flavor: FlavorArg,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// An inclusive list of dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

/// Parses `a..b`, `a..=b` (both inclusive) or a single dimension.
pub fn parse_dims(s: &str) -> Result<Dims, String> {
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad dimension {x:?}: {e}"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (parse(lo)?, parse(hi.strip_prefix('=').unwrap_or(hi))?),
        None => {
            let d = parse(s)?;
            (d, d)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("dimension range {s:?} must satisfy 1 ≤ low ≤ high"));
    }
    Ok(Dims((lo..=hi).collect()))
}

/// A failure that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<FormatError> for UsageError {
    fn from(e: FormatError) -> Self {
        UsageError(e.0)
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> Self {
        UsageError(e.to_string())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

fn core<T>(what: &str, r: psdcone::Result<T>) -> Result<T, UsageError> {
    r.map_err(|e| UsageError(format!("{what}: {e}")))
}

fn tol_for(tol: Option<f64>) -> Tol {
    tol.map(Tol::uniform).unwrap_or_default()
}

/// Rounds to 12 significant digits so reported constants do not depend on
/// the last bits of an eigensolver.
fn round_sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn psd<S: Scalar>(name: &str, m: psdcone::Matrix<S>, tol: &Tol) -> Result<PsdOperator<S>, UsageError> {
    core(name, PsdOperator::new(m, tol))
}

fn relation_table(r: &RelationReport) -> String {
    let c = match r.min_domination_constant {
        Some(c) => format!("{c}"),
        None => "none".to_string(),
    };
    let rows: [(&str, String); 11] = [
        ("A ≤ B", r.leq_ab.to_string()),
        ("B ≤ A", r.leq_ba.to_string()),
        ("A ≪ B", r.abs_cont_ab.to_string()),
        ("B ≪ A", r.abs_cont_ba.to_string()),
        ("A ⊥ B", r.singular.to_string()),
        ("ran A = ran B", r.same_range_class.to_string()),
        ("least c with A ≤ c·B", c),
        ("rank A", r.rank_a.to_string()),
        ("rank B", r.rank_b.to_string()),
        ("dim(ran A + ran B)", r.dim_range_sum.to_string()),
        ("dim(ran A ∩ ran B)", r.dim_range_intersection.to_string()),
    ];
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<22} {v}\n"));
    }
    out
}

fn analyze<S: Scalar>(a: psdcone::Matrix<S>, b: psdcone::Matrix<S>, tol: &Tol) -> Result<RelationReport, UsageError> {
    let a = psd("A", a, tol)?;
    let b = psd("B", b, tol)?;
    core("analyze", analyze_pair(&a, &b, tol))
}

fn cmd_analyze(
    a: &Path,
    b: &Path,
    backend: Option<BackendArg>,
    tol: Option<f64>,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<bool, UsageError> {
    let (ma, mb) = (parse_matrix_file(a)?, parse_matrix_file(b)?);
    let both_exact = matches!((&ma, &mb), (AnyMatrix::Exact(_), AnyMatrix::Exact(_)));
    let backend = backend.unwrap_or(if both_exact {
        BackendArg::Exact
    } else {
        BackendArg::Float
    });
    let t = tol_for(tol);
    let mut report = match backend {
        BackendArg::Exact => analyze::<Q>(ma.to_exact(), mb.to_exact(), &t)?,
        BackendArg::Float => analyze::<C>(ma.to_float(), mb.to_float(), &t)?,
    };
    report.min_domination_constant = report.min_domination_constant.map(round_sig);
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        )?;
    }
    if format == OutputFormat::Both {
        writeln!(out)?;
    }
    if matches!(format, OutputFormat::Table | OutputFormat::Both) {
        write!(out, "{}", relation_table(&report))?;
    }
    Ok(true)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_decompose(
    a: &Path,
    b: &Path,
    prefix: &Path,
    samples: usize,
    seed: u64,
    tol: Option<f64>,
    out: &mut dyn Write,
) -> Result<bool, UsageError> {
    let t = tol_for(tol);
    let a = psd("A", parse_matrix_file(a)?.to_float(), &t)?;
    let b = psd("B", parse_matrix_file(b)?.to_float(), &t)?;
    let d = core("decompose", decompose(&a, &b, &t))?;
    let slack = tol.unwrap_or(1e-8);
    let r = core("verify", verify_decomposition(&a, &b, &d, samples, seed, slack, &t))?;
    let ac_path = with_suffix(prefix, ".ac.json");
    let sing_path = with_suffix(prefix, ".sing.json");
    std::fs::write(&ac_path, write_matrix(&AnyMatrix::Float(d.ac.matrix().clone())))?;
    std::fs::write(&sing_path, write_matrix(&AnyMatrix::Float(d.singular.matrix().clone())))?;
    let passed = r.passed(slack);
    let report = json!({
        "ac_path": ac_path.display().to_string(),
        "singular_path": sing_path.display().to_string(),
        "rank_ac": d.ac.rank(),
        "rank_singular": d.singular.rank(),
        "sum_residual": r.sum_residual,
        "ac_is_abs_continuous": r.ac_is_abs_continuous,
        "singular_is_singular": r.singular_is_singular,
        "maximality_samples": r.samples,
        "maximality_violations": r.maximality_violations,
        "worst_margin": r.worst_margin,
        "passed": passed,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json"))?;
    Ok(passed)
}

fn pick_backend(
    backend: Option<BackendArg>,
    spec: &PreserverSpec,
    input_exact: bool,
) -> Result<BackendArg, UsageError> {
    match backend {
        Some(BackendArg::Exact) if !spec.supports_exact() => usage("this map needs the float backend"),
        Some(b) => Ok(b),
        None if input_exact && spec.supports_exact() => Ok(BackendArg::Exact),
        None => Ok(BackendArg::Float),
    }
}

fn cmd_map_apply(
    spec: &Path,
    a: &Path,
    backend: Option<BackendArg>,
    tol: Option<f64>,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> Result<bool, UsageError> {
    let spec = parse_spec_file(spec)?;
    let m = parse_matrix_file(a)?;
    let t = tol_for(tol);
    let image = match pick_backend(backend, &spec, m.backend() == psdcone::Backend::Exact)? {
        BackendArg::Exact => {
            let a = psd("A", m.to_exact(), &t)?;
            AnyMatrix::Exact(core("apply", psdcone::preserver::apply_map(&spec, &a, &t))?.into_matrix())
        }
        BackendArg::Float => {
            let a = psd("A", m.to_float(), &t)?;
            AnyMatrix::Float(core("apply", psdcone::preserver::apply_map(&spec, &a, &t))?.into_matrix())
        }
    };
    match target {
        Some(p) => std::fs::write(p, write_matrix(&image))?,
        None => write!(out, "{}", write_matrix(&image))?,
    }
    Ok(true)
}

fn preservation_value(r: &psdcone::preserver::PreservationReport) -> Value {
    json!({
        "pairs_checked": r.pairs_checked,
        "ambiguous": r.ambiguous,
        "violations": r.violations.iter().map(|v| json!({
            "relation": v.relation.as_str(),
            "before": v.before,
            "after": v.after,
            "A": exact_value(v.a.matrix()),
            "B": exact_value(v.b.matrix()),
        })).collect::<Vec<_>>(),
        "map_errors": r.map_errors,
        "passed": r.passed(),
    })
}

fn range_value(r: &psdcone::preserver::RangeFormReport) -> Value {
    json!({
        "checked": r.checked,
        "per_rank": r.per_rank,
        "ambiguous": r.ambiguous,
        "violations": r.violations.iter().map(|v| json!({
            "A": exact_value(v.a.matrix()),
            "image_rank": v.image_rank,
        })).collect::<Vec<_>>(),
        "map_errors": r.map_errors,
        "passed": r.passed(),
    })
}

fn verify_on<S: Scalar>(
    spec: &PreserverSpec,
    t: Option<&SemilinearOperator>,
    trials: usize,
    seed: u64,
    tol: &Tol,
) -> Result<(Value, Value, Value, bool), UsageError> {
    let rel = core("verify", verify_relation_preservation::<S, _>(spec, trials, seed, tol))?;
    let mut passed = rel.passed();
    let range = match t {
        Some(t) => {
            let r = core("range form", verify_range_form::<S, _>(spec, t, trials, seed ^ 1, tol))?;
            passed &= r.passed();
            range_value(&r)
        }
        None => Value::Null,
    };
    let dim2 = if spec.dimension() == 2 {
        let r = core("dim 2", dim2_conditions::<S, _>(spec, trials, seed ^ 2, tol))?;
        passed &= r.passed();
        json!({
            "zero_fixed": r.zero_fixed,
            "invertibles_preserved": r.invertibles_preserved,
            "rank_one_consistent": r.rank_one_consistent,
            "first_failure": r.first_failure.map(|c| c.as_str()),
            "samples": r.samples,
        })
    } else {
        Value::Null
    };
    Ok((preservation_value(&rel), range, dim2, passed))
}

#[allow(clippy::too_many_arguments)]
fn cmd_map_verify(
    spec_path: &Path,
    t_path: Option<&Path>,
    flavor: FlavorArg,
    dim: usize,
    trials: usize,
    seed: u64,
    backend: Option<BackendArg>,
    tol: Option<f64>,
    out: &mut dyn Write,
) -> Result<bool, UsageError> {
    let spec = parse_spec_file(spec_path)?;
    if spec.dimension() != dim {
        return usage(format!(
            "--dim {dim} does not match the map's dimension {}",
            spec.dimension()
        ));
    }
    let t = match t_path {
        Some(p) => {
            let m = parse_matrix_file(p)?.to_exact();
            Some(core("T", SemilinearOperator::new(m, flavor.into()))?)
        }
        None => None,
    };
    if let Some(t) = &t {
        if t.dim() != dim {
            return usage(format!("T has dimension {}, expected {dim}", t.dim()));
        }
    }
    let backend = pick_backend(backend, &spec, true)?;
    let (rel, range, dim2, passed) = match backend {
        BackendArg::Exact => verify_on::<Q>(&spec, t.as_ref(), trials, seed, &tol_for(tol))?,
        BackendArg::Float => verify_on::<C>(&spec, t.as_ref(), trials, seed, &Tol::uniform(tol.unwrap_or(1e-8)))?,
    };
    let report = json!({
        "map": spec_value(&spec),
        "backend": match backend { BackendArg::Exact => "exact", BackendArg::Float => "float" },
        "dim": dim,
        "trials": trials,
        "seed": seed,
        "relation_preservation": rel,
        "range_form": range,
        "dim2_conditions": dim2,
        "note": "sampled necessary conditions; a pass does not prove the map preserves the relations everywhere",
        "passed": passed,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json"))?;
    Ok(passed)
}

fn projectivity_value(r: &ProjectivityReport) -> Value {
    json!({
        "coplanar_checked": r.coplanar_checked,
        "noncoplanar_checked": r.noncoplanar_checked,
        "failures": r.failures.iter().take(3).map(|f| json!({
            "lines": f.lines.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "images": f.images.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "coplanar": f.coplanar,
        })).collect::<Vec<_>>(),
        "failure_count": r.failures.len(),
        "collisions": r.collisions,
        "map_errors": r.map_errors,
        "passed": r.passed(),
    })
}

fn reconstruct_with<M: LineMap>(m: &M, dim: usize, trials: usize, seed: u64) -> Result<(Value, bool), UsageError> {
    if m.dim() != dim {
        return usage(format!("--dim {dim} does not match the map's dimension {}", m.dim()));
    }
    let projectivity = if dim >= 3 {
        Some(core("projectivity", verify_projectivity(m, trials, seed))?)
    } else {
        None
    };
    let proj_value = projectivity.as_ref().map(projectivity_value).unwrap_or(Value::Null);
    let proj_ok = projectivity.as_ref().is_none_or(ProjectivityReport::passed);
    match reconstruct_semilinear(m, dim) {
        Ok(rec) => {
            let misses = core(
                "held-out lines",
                count_disagreements(m, &rec.operator, trials, seed ^ 1),
            )?;
            let passed = proj_ok && misses == 0;
            let mut v = operator_value(&rec.operator);
            let obj = v.as_object_mut().expect("operator is an object");
            obj.insert("semilinear".into(), json!(true));
            obj.insert("certifiable".into(), json!(rec.certifiable));
            obj.insert("held_out_disagreements".into(), json!(misses));
            obj.insert("projectivity".into(), proj_value);
            obj.insert("passed".into(), json!(passed));
            Ok((v, passed))
        }
        Err(e @ (Error::DimensionMismatch { .. } | Error::Unsupported(_))) => usage(e.to_string()),
        Err(e) => Ok((
            json!({
                "semilinear": false,
                "diagnostic": e.to_string(),
                "projectivity": proj_value,
                "passed": false,
            }),
            false,
        )),
    }
}

fn cmd_reconstruct(map: &Path, dim: usize, trials: usize, seed: u64, out: &mut dyn Write) -> Result<bool, UsageError> {
    let (v, passed) = match parse_line_map_file(map)? {
        LineMapFile::Spec(spec) => reconstruct_with(&InducedLineMap::new(spec, Tol::default()), dim, trials, seed)?,
        LineMapFile::Swap { dim: n, i, j } => reconstruct_with(&SwapLineMap { dim: n, i, j }, dim, trials, seed)?,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
    Ok(passed)
}

fn cmd_suite(
    dims: Vec<usize>,
    trials: usize,
    seed: u64,
    skip_float: bool,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> Result<bool, UsageError> {
    if dims.is_empty() {
        return usage("--dims is required");
    }
    let start = Instant::now();
    let report = run_suite(&SuiteConfig {
        dims,
        trials,
        seed,
        skip_float,
    });
    let text = report.to_json();
    if let Some(p) = target {
        std::fs::write(p, &text)?;
    }
    write!(out, "{text}")?;
    eprintln!(
        "suite: {} checks, {} failures, {:.2}s",
        report.total_checks,
        report.total_failures,
        start.elapsed().as_secs_f64()
    );
    Ok(report.passed())
}

/// Runs a parsed command. `Ok(false)` means a checked property failed.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<bool, UsageError> {
    match cli.command {
        Command::Analyze {
            a,
            b,
            backend,
            tol,
            format,
        } => cmd_analyze(&a, &b, backend, tol, format, out),
        Command::Decompose {
            a,
            b,
            out_prefix,
            samples,
            seed,
            tol,
        } => cmd_decompose(&a, &b, &out_prefix, samples, seed, tol, out),
        Command::Map(MapCommand::Apply {
            spec,
            a,
            backend,
            tol,
            out: target,
        }) => cmd_map_apply(&spec, &a, backend, tol, target.as_deref(), out),
        Command::Map(MapCommand::Verify {
            spec,
            t,
            flavor,
            dim,
            trials,
            seed,
            backend,
            tol,
        }) => cmd_map_verify(&spec, t.as_deref(), flavor, dim, trials, seed, backend, tol, out),
        Command::Reconstruct { map, dim, trials, seed } => cmd_reconstruct(&map, dim, trials, seed, out),
        Command::Suite {
            dims,
            trials,
            seed,
            skip_float,
            out: target,
        } => cmd_suite(dims.0, trials, seed, skip_float, target.as_deref(), out),
    }
}

/// Parses `args`, runs the command against stdout and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
