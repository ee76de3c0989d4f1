//! Batch front end: JSON specs in, JSON results and CSV grids out.
//!
//! Exit codes: 0 success, 1 user error (arguments, I/O, malformed or invalid
//! specs), 2 numerical failure. Failures print one JSON object on stderr.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::actions::{action_residual_seeded, ACTION_SEED};
use crate::discretize::{convergence_probe, mat_star, sample, Grid};
use crate::error::StarError;
use crate::inverse::{invert_finite_order, RESIDUAL_TRIALS};
use crate::kernels::{Interval, SeparableFn, UnivariateFn};
use crate::seminorms::{metric, CompactFamily, SupTable};
use crate::solvers::{solve_volterra2, time_ordered_exp, VolterraProblem};
use crate::star::{Orientation, StarElement};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "starcalc", version, about = "Star-product calculus of causal distributions")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Domain `lo,hi`, used when a spec omits it.
    #[arg(long, global = true, value_parser = parse_domain)]
    pub domain: Option<Interval>,
    /// Points per axis of CSV grids.
    #[arg(long, global = true, default_value_t = 33)]
    pub grid: usize,
    /// Tolerance for solver and multiply-back residuals.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Truncation depth of the metric series.
    #[arg(long, global = true, default_value_t = crate::seminorms::DEFAULT_KMAX)]
    pub kmax: i32,
    /// Seed of the random test functions behind action residuals.
    #[arg(long, global = true, default_value_t = ACTION_SEED)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Star product of two kernel specs.
    Mul { left: PathBuf, right: PathBuf },
    /// Inverse of a finite-order kernel spec.
    Inv { spec: PathBuf },
    /// Volterra equation of the second kind.
    SolveVolterra { spec: PathBuf },
    /// Time-ordered exponential of a matrix of functions.
    Toe { spec: PathBuf },
    /// Truncated metric between two kernel specs.
    Metric { left: PathBuf, right: PathBuf },
    /// Triangular-matrix discretization against the exact product.
    DiscretizeCheck {
        left: PathBuf,
        right: PathBuf,
        /// Grid sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256, 512])]
        sizes: Vec<usize>,
        /// Also write the matrix product on the largest grid in binary form.
        #[arg(long)]
        dump: bool,
    },
}

fn parse_domain(s: &str) -> std::result::Result<Interval, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected lo,hi".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("hi: {e}"))?;
    Interval::new(lo, hi).map_err(|e| e.to_string())
}

/// A complex number written as a plain number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(self) -> C64 {
        match self {
            ComplexSpec::Real(re) => C64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => C64::new(re, im),
        }
    }

    pub fn from_value(z: C64) -> Self {
        if z.im == 0.0 {
            ComplexSpec::Real(z.re)
        } else {
            ComplexSpec::Pair([z.re, z.im])
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    One,
    Exp,
    Expneg,
    Sin,
    Cos,
}

/// Univariate function: monomial or Chebyshev coefficients, or a builtin of
/// the affine argument `αx + β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FnSpec {
    Poly {
        poly: Vec<ComplexSpec>,
    },
    Cheb {
        cheb: Vec<ComplexSpec>,
    },
    Builtin {
        builtin: Builtin,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        affine: Option<[f64; 2]>,
    },
}

impl FnSpec {
    pub fn build(&self, domain: Interval) -> crate::Result<UnivariateFn> {
        let values = |c: &[ComplexSpec]| -> crate::Result<Vec<C64>> {
            let v: Vec<C64> = c.iter().map(|z| z.value()).collect();
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(StarError::InvalidArgument("non-finite coefficient".into()));
            }
            if v.is_empty() {
                return Err(StarError::InvalidArgument("empty coefficient list".into()));
            }
            Ok(v)
        };
        match self {
            FnSpec::Poly { poly } => Ok(UnivariateFn::from_monomials(domain, &values(poly)?)),
            FnSpec::Cheb { cheb } => UnivariateFn::from_cheb(domain, values(cheb)?),
            FnSpec::Builtin { builtin, affine } => {
                let [alpha, beta] = affine.unwrap_or([1.0, 0.0]);
                let f: fn(f64) -> f64 = match builtin {
                    Builtin::One => return Ok(UnivariateFn::constant(domain, 1.0)),
                    Builtin::Exp => f64::exp,
                    Builtin::Expneg => |t: f64| (-t).exp(),
                    Builtin::Sin => f64::sin,
                    Builtin::Cos => f64::cos,
                };
                UnivariateFn::approximate(|x| C64::new(f(alpha * x + beta), 0.0), domain)
            }
        }
    }

    pub fn from_fn(f: &UnivariateFn) -> Self {
        FnSpec::Cheb { cheb: f.coeffs().iter().map(|&z| ComplexSpec::from_value(z)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub a: FnSpec,
    pub b: FnSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub separable: Vec<PairSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub order: i32,
    pub coeff: CoeffSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolterraSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    pub kernel: Vec<PairSpec>,
    pub forcing: FnSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    pub matrix: Vec<Vec<FnSpec>>,
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub enum CliError {
    Parse { file: PathBuf, path: String, message: String },
    Invalid { path: String, message: String },
    Io { file: PathBuf, message: String },
    Star(StarError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Star(e) if is_numerical(e) => EXIT_NUMERICAL,
            _ => EXIT_USER,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Parse { file, path, message } => {
                json!({"error": "parse", "file": file.display().to_string(), "path": path, "message": message})
            }
            CliError::Invalid { path, message } => json!({"error": "invalid", "path": path, "message": message}),
            CliError::Io { file, message } => {
                json!({"error": "io", "file": file.display().to_string(), "message": message})
            }
            CliError::Star(e) => {
                let kind = if is_numerical(e) { "numerical" } else { "invalid" };
                json!({"error": kind, "reason": reason(e), "message": e.to_string()})
            }
        }
    }
}

impl From<StarError> for CliError {
    fn from(e: StarError) -> Self {
        CliError::Star(e)
    }
}

fn is_numerical(e: &StarError) -> bool {
    matches!(
        e,
        StarError::VanishingDiagonal { .. }
            | StarError::DiracResidue { .. }
            | StarError::SingularFundamental { .. }
            | StarError::StepControl { .. }
            | StarError::ResidualTooLarge { .. }
            | StarError::NonFiniteSample { .. }
    )
}

fn reason(e: &StarError) -> &'static str {
    match e {
        StarError::InvalidInterval { .. } => "invalid_interval",
        StarError::NonFiniteSample { .. } => "non_finite_sample",
        StarError::DomainMismatch => "domain_mismatch",
        StarError::OrientationMismatch => "orientation_mismatch",
        StarError::AnticausalOperand => "anticausal_operand",
        StarError::InvalidArgument(_) => "invalid_argument",
        StarError::NegativePower => "negative_power",
        StarError::VanishingDiagonal { .. } => "vanishing_diagonal",
        StarError::DiracResidue { .. } => "dirac_residue",
        StarError::SingularFundamental { .. } => "singular_fundamental",
        StarError::StepControl { .. } => "step_control",
        StarError::ResidualTooLarge { .. } => "residual_too_large",
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_spec<T: serde::de::DeserializeOwned>(file: &Path) -> CliResult<T> {
    let text = fs::read_to_string(file)
        .map_err(|e| CliError::Io { file: file.to_path_buf(), message: e.to_string() })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
        file: file.to_path_buf(),
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn resolve_domain(spec: Option<[f64; 2]>, flag: Option<Interval>) -> CliResult<Interval> {
    match (spec, flag) {
        (Some([lo, hi]), flag) => {
            let d = Interval::new(lo, hi)
                .map_err(|e| CliError::Invalid { path: "domain".into(), message: e.to_string() })?;
            match flag {
                Some(f) if f != d => Err(CliError::Invalid {
                    path: "domain".into(),
                    message: format!("spec domain [{lo}, {hi}] differs from --domain [{}, {}]", f.lo(), f.hi()),
                }),
                _ => Ok(d),
            }
        }
        (None, Some(f)) => Ok(f),
        (None, None) => Err(CliError::Invalid {
            path: "domain".into(),
            message: "no domain in spec and no --domain flag".into(),
        }),
    }
}

fn at<T>(path: impl Into<String>, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        StarError::InvalidArgument(message) => CliError::Invalid { path: path.into(), message },
        other => CliError::Star(other),
    })
}

fn build_separable(pairs: &[PairSpec], domain: Interval, path: &str) -> CliResult<SeparableFn> {
    let mut terms = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let a = at(format!("{path}[{i}].a"), p.a.build(domain))?;
        let b = at(format!("{path}[{i}].b"), p.b.build(domain))?;
        terms.push((a, b));
    }
    at(path, SeparableFn::new(domain, terms))
}

impl KernelSpec {
    pub fn build(&self, flag: Option<Interval>) -> CliResult<StarElement> {
        let domain = resolve_domain(self.domain, flag)?;
        let mut parts = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            if t.order < -1 {
                return Err(CliError::Invalid {
                    path: format!("terms[{i}].order"),
                    message: format!("order {} is below -1", t.order),
                });
            }
            let c = build_separable(&t.coeff.separable, domain, &format!("terms[{i}].coeff.separable"))?;
            parts.push((t.order, c));
        }
        at("terms", StarElement::from_parts(domain, parts))
    }

    /// Exact serialization through Chebyshev coefficients.
    pub fn from_element(d: &StarElement) -> Self {
        let domain = d.domain();
        let terms = d
            .parts()
            .iter()
            .map(|(&order, c)| TermSpec {
                order,
                coeff: CoeffSpec {
                    separable: c
                        .terms()
                        .iter()
                        .map(|(a, b)| PairSpec { a: FnSpec::from_fn(a), b: FnSpec::from_fn(b) })
                        .collect(),
                },
            })
            .collect();
        KernelSpec { domain: Some([domain.lo(), domain.hi()]), terms }
    }
}

/// Formats a float losslessly: shortest round-trip digits, with an exponent
/// outside `[1e-5, 1e17)`.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e17).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Io { file: path.to_path_buf(), message: e.to_string() })
}

fn write_json(path: &Path, v: &impl Serialize) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    write_file(path, &s)
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Θ-part values on the `n × n` grid, zero above the diagonal.
fn theta_csv(d: &StarElement, n: usize) -> CliResult<String> {
    let pts = Grid::new(d.domain(), n)?.points();
    let mut s = String::from("x,y,re,im\n");
    let vals = d.part(-1).map(|c| c.eval_grid(&pts, &pts));
    for (i, &x) in pts.iter().enumerate() {
        for (j, &y) in pts.iter().enumerate() {
            let z = match &vals {
                Some(m) if i >= j => m[(i, j)],
                _ => C64::new(0.0, 0.0),
            };
            writeln!(s, "{},{},{},{}", fmt_float(x), fmt_float(y), fmt_float(z.re), fmt_float(z.im)).unwrap();
        }
    }
    Ok(s)
}

/// Diagonal traces `c_k(x, x)` of the Dirac parts.
fn dirac_csv(d: &StarElement, n: usize) -> CliResult<String> {
    let pts = Grid::new(d.domain(), n)?.points();
    let mut s = String::from("order,x,re,im\n");
    for (&k, c) in d.parts().range(0..) {
        let diag = c.diag();
        for &x in &pts {
            let z = diag.eval(x);
            writeln!(s, "{k},{},{},{}", fmt_float(x), fmt_float(z.re), fmt_float(z.im)).unwrap();
        }
    }
    Ok(s)
}

fn function_csv(f: &UnivariateFn, n: usize) -> CliResult<String> {
    let pts = Grid::new(f.domain(), n)?.points();
    let mut s = String::from("x,re,im\n");
    for &x in &pts {
        let z = f.eval(x);
        writeln!(s, "{},{},{}", fmt_float(x), fmt_float(z.re), fmt_float(z.im)).unwrap();
    }
    Ok(s)
}

fn orders(d: &StarElement) -> Vec<i32> {
    d.parts().keys().copied().collect()
}

fn causal(d: StarElement, path: &str) -> CliResult<StarElement> {
    if d.orientation() != Orientation::Causal {
        return Err(CliError::Invalid { path: path.into(), message: "expected a causal element".into() });
    }
    Ok(d)
}

/// Runs one parsed invocation and returns the result document, which is
/// also written to `<out>/result.json`.
pub fn execute(cli: &Cli) -> CliResult<Value> {
    let o = &cli.opts;
    if o.grid < 2 {
        return Err(CliError::Invalid { path: "--grid".into(), message: "grid needs at least 2 points".into() });
    }
    if !(o.tol > 0.0) {
        return Err(CliError::Invalid { path: "--tol".into(), message: "tolerance must be positive".into() });
    }
    fs::create_dir_all(&o.out).map_err(|e| CliError::Io { file: o.out.clone(), message: e.to_string() })?;
    let load = |p: &Path| -> CliResult<StarElement> {
        let spec: KernelSpec = read_spec(p)?;
        causal(spec.build(o.domain)?, &p.display().to_string())
    };
    let result = match &cli.command {
        Command::Mul { left, right } => {
            let (d, e) = (load(left)?, load(right)?);
            let p = d.star(&e)?;
            write_json(&o.out.join("product.json"), &KernelSpec::from_element(&p))?;
            write_file(&o.out.join("theta.csv"), &theta_csv(&p, o.grid)?)?;
            write_file(&o.out.join("diracs.csv"), &dirac_csv(&p, o.grid)?)?;
            json!({
                "command": "mul",
                "residuals": {},
                "diagnostics": {"orders": orders(&p), "ranks": p.parts().values().map(|c| c.rank()).collect::<Vec<_>>()},
                "outputs": {"product": "product.json", "theta": "theta.csv", "diracs": "diracs.csv"},
            })
        }
        Command::Inv { spec } => {
            let d = load(spec)?;
            let inv = invert_finite_order(&d, o.tol)?;
            let id = StarElement::identity(d.domain());
            let left = action_residual_seeded(&d.star(&inv.inverse)?, &id, RESIDUAL_TRIALS, o.seed)?;
            let right = action_residual_seeded(&inv.inverse.star(&d)?, &id, RESIDUAL_TRIALS, o.seed)?;
            write_json(&o.out.join("inverse.json"), &KernelSpec::from_element(&inv.inverse))?;
            write_file(&o.out.join("theta.csv"), &theta_csv(&inv.inverse, o.grid)?)?;
            write_file(&o.out.join("diracs.csv"), &dirac_csv(&inv.inverse, o.grid)?)?;
            json!({
                "command": "inv",
                "residuals": {"left": left, "right": right},
                "diagnostics": {"input_order": d.order(), "orders": orders(&inv.inverse)},
                "outputs": {"inverse": "inverse.json", "theta": "theta.csv", "diracs": "diracs.csv"},
            })
        }
        Command::SolveVolterra { spec } => {
            let s: VolterraSpec = read_spec(spec)?;
            let domain = resolve_domain(s.domain, o.domain)?;
            let k = build_separable(&s.kernel, domain, "kernel")?;
            let g = at("forcing", s.forcing.build(domain))?;
            let sol = solve_volterra2(&VolterraProblem::new(k, g)?, o.tol)?;
            write_file(&o.out.join("u.csv"), &function_csv(&sol.u, o.grid)?)?;
            json!({
                "command": "solve-volterra",
                "residuals": {"equation": sol.residual},
                "diagnostics": {"degree": sol.u.degree()},
                "outputs": {
                    "u": "u.csv",
                    "u_lo": complex_json(sol.u.eval(domain.lo())),
                    "u_hi": complex_json(sol.u.eval(domain.hi())),
                },
            })
        }
        Command::Toe { spec } => {
            let s: ToeSpec = read_spec(spec)?;
            let domain = resolve_domain(s.domain, o.domain)?;
            let r = s.matrix.len();
            if r == 0 || s.matrix.iter().any(|row| row.len() != r) {
                return Err(CliError::Invalid { path: "matrix".into(), message: "expected a non-empty square matrix".into() });
            }
            let mut a = Vec::with_capacity(r);
            for (i, row) in s.matrix.iter().enumerate() {
                let built: CliResult<Vec<_>> =
                    row.iter().enumerate().map(|(j, f)| at(format!("matrix[{i}][{j}]"), f.build(domain))).collect();
                a.push(built?);
            }
            let t = time_ordered_exp(&a, o.tol)?;
            let pts = Grid::new(domain, o.grid)?.points();
            let mut csv = String::from("x,y,i,j,re,im\n");
            for (xi, &x) in pts.iter().enumerate() {
                for &y in &pts[..=xi] {
                    let u = t.eval(x, y);
                    for i in 0..r {
                        for j in 0..r {
                            let z = u[(i, j)];
                            writeln!(csv, "{},{},{i},{j},{},{}", fmt_float(x), fmt_float(y), fmt_float(z.re), fmt_float(z.im))
                                .unwrap();
                        }
                    }
                }
            }
            write_file(&o.out.join("u.csv"), &csv)?;
            let full = t.eval(domain.hi(), domain.lo());
            let full: Vec<Vec<Value>> = (0..r).map(|i| (0..r).map(|j| complex_json(full[(i, j)])).collect()).collect();
            json!({
                "command": "toe",
                "residuals": {"resolvent_identity": t.resolvent_residual},
                "diagnostics": {"steps": t.steps, "condition": t.condition},
                "outputs": {"u": "u.csv", "u_hi_lo": full},
            })
        }
        Command::Metric { left, right } => {
            let (d, e) = (load(left)?, load(right)?);
            let fam = CompactFamily::constant(d.domain());
            let m = metric(&d, &e, &fam, o.kmax)?;
            let diff = d.sub(&e)?;
            let mut table = SupTable::new(&diff)?;
            let p: Vec<f64> = (-1..=o.kmax).map(|k| table.seminorm(k, &fam)).collect();
            json!({
                "command": "metric",
                "residuals": {},
                "diagnostics": {"kmax": o.kmax, "seminorms_of_difference": p},
                "outputs": {"value": m.value, "tail_bound": m.tail_bound},
            })
        }
        Command::DiscretizeCheck { left, right, sizes, dump } => {
            let (d, e) = (load(left)?, load(right)?);
            if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
                return Err(CliError::Invalid { path: "--sizes".into(), message: "sizes must be at least 2".into() });
            }
            let report = convergence_probe(&d, &e, sizes)?;
            let mut outputs = json!({"rate": report.rate, "errors": report.errors});
            if *dump {
                let n = *sizes.iter().max().expect("non-empty");
                let grid = Grid::new(d.domain(), n)?;
                let prod = mat_star(&sample(&d, grid)?, &sample(&e, grid)?)?;
                let name = format!("product_{n}.bin");
                let path = o.out.join(&name);
                let file = fs::File::create(&path).map_err(|e| CliError::Io { file: path.clone(), message: e.to_string() })?;
                prod.write_binary(&mut BufWriter::new(file))
                    .map_err(|e| CliError::Io { file: path.clone(), message: e.to_string() })?;
                outputs["dump"] = json!(name);
            }
            json!({
                "command": "discretize-check",
                "residuals": {},
                "diagnostics": {"sizes": report.sizes, "dx": report.dx},
                "outputs": outputs,
            })
        }
    };
    write_json(&o.out.join("result.json"), &result)?;
    Ok(result)
}

/// Caps the global thread pool from `STARCALC_THREADS`.
pub fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("STARCALC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Invalid {
        path: "STARCALC_THREADS".into(),
        message: format!("expected a positive integer, got {v:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid { path: "STARCALC_THREADS".into(), message: e.to_string() })
}

/// Full entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = configure_threads().and_then(|_| execute(&cli));
    match outcome {
        Ok(v) => {
            println!("{}", serde_json::to_string(&v).expect("serializable"));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fn_spec_variants() {
        let d = Interval::unit();
        let poly: FnSpec = serde_json::from_str(r#"{"poly": [1, [0, 2]]}"#).unwrap();
        let f = poly.build(d).unwrap();
        assert!((f.eval(0.5) - C64::new(1.0, 1.0)).norm() < 1e-15);
        let e: FnSpec = serde_json::from_str(r#"{"builtin": "exp", "affine": [2, -1]}"#).unwrap();
        let f = e.build(d).unwrap();
        for &x in &[0.0, 0.3, 1.0] {
            assert!((f.eval(x).re - (2.0 * x - 1.0f64).exp()).abs() < 1e-14);
        }
        let s: FnSpec = serde_json::from_str(r#"{"builtin": "sin"}"#).unwrap();
        assert!((s.build(d).unwrap().eval(0.7).re - 0.7f64.sin()).abs() < 1e-15);
        assert!(serde_json::from_str::<FnSpec>(r#"{"builtin": "tan"}"#).is_err());
    }

    #[test]
    fn kernel_spec_round_trip_is_exact() {
        let text = r#"{"domain": [0, 2], "terms": [
            {"order": -1, "coeff": {"separable": [{"a": {"poly": [1, 1]}, "b": {"builtin": "cos"}}]}},
            {"order": 1, "coeff": {"separable": [{"a": {"cheb": [[0, 1]]}, "b": {"builtin": "one"}}]}}
        ]}"#;
        let spec: KernelSpec = serde_json::from_str(text).unwrap();
        let d = spec.build(None).unwrap();
        let again = KernelSpec::from_element(&d);
        let json = serde_json::to_string(&again).unwrap();
        let back: KernelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build(None).unwrap(), d);
    }

    #[test]
    fn parse_error_reports_field_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, r#"{"domain": [0, 1], "terms": [{"order": "x", "coeff": {"separable": []}}]}"#).unwrap();
        match read_spec::<KernelSpec>(&p) {
            Err(CliError::Parse { path, .. }) => assert_eq!(path, "terms[0].order"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_resolution() {
        let u = Interval::unit();
        assert_eq!(resolve_domain(None, Some(u)).unwrap(), u);
        assert!(resolve_domain(None, None).is_err());
        assert!(resolve_domain(Some([0.0, 2.0]), Some(u)).is_err());
        assert!(resolve_domain(Some([1.0, 0.0]), None).is_err());
    }

    #[test]
    fn float_format_is_lossless() {
        for &v in &[0.0, 1.0, -0.1, 1e-300, 123456789.123, 2.5e20, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(1e-300), "1e-300");
    }
}
