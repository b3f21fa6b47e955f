//! Command-line front end: JSON problem files in, CSV/JSON results out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficient::{validate_hypotheses, EquationParams, FamilyKind, Generator, OmegaSpec, SequenceFamily, ValidationReport};
use crate::error::FdeError;
use crate::factorization::{factorize, find_zeros, to_omega, SParams, TrigCoefficientSpec, ZeroTable};
use crate::homogeneous::{appendix_bounds, HomogeneousSolution, PeriodicPlugin};
use crate::particular::{assemble_general, validate_kernel, ContourSpec, ForcingSpec, KernelSpec, ParticularProblem};
use crate::transmission::{
    admissible_weight, derive_angles, factorize_transmission, g_agreement, QuadConfig, TransmissionProblem, TransmissionSolver,
};
use crate::C64;

#[derive(Debug, Parser)]
#[command(name = "fde", version, about = "Explicit solutions of functional difference equations")]
pub struct Cli {
    /// Write results and a run manifest into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the hypotheses of a coefficient, solve or transmission problem file.
    Validate { spec: PathBuf },
    /// Evaluate Y = Y_h + Y_p at the points of a CSV file (columns re, im).
    Solve {
        problem: PathBuf,
        points: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        d0: f64,
        #[arg(long, default_value_t = 10_000)]
        truncation: usize,
        /// Half height of the integration contour.
        #[arg(long = "T", default_value_t = 40.0)]
        half_height: f64,
        /// Quadrature nodes per unit length.
        #[arg(long, default_value_t = 40)]
        nodes: usize,
    },
    /// Zero table of S± = sin(z − θ₁) ± q₂ sin(p z/(2q) − θ₂) over one period.
    Zeros {
        #[arg(long, default_value = "plus")]
        sign: String,
        #[arg(long, allow_hyphen_values = true)]
        theta1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta2: f64,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        q2: f64,
    },
    /// Product form of a trigonometric coefficient (JSON spec) and its Ω-form.
    Factorize {
        spec: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        truncation: usize,
        /// Step β of the target equation.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Transmission problem: admissibility, residual report and fields on a grid (columns x1, x2, t).
    Transmission {
        problem: PathBuf,
        grid: PathBuf,
        /// JSON quadrature settings for the inverse transforms.
        #[arg(long)]
        quad: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        truncation: usize,
    },
    /// Envelope diagnostics for the four tail sums with b(n) = n^exponent along Im z.
    Bounds {
        #[arg(long, default_value_t = 2.0)]
        exponent: f64,
        #[arg(long, default_value_t = 1.0)]
        c_star: f64,
        #[arg(long, default_value_t = 50.0)]
        reference: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![100.0, 200.0, 400.0])]
        probes: Vec<f64>,
    },
}

/// Problem file for `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveProblem {
    pub omega: OmegaSpec,
    pub params: EquationParams,
    #[serde(default = "unit_sigma")]
    pub sigma: C64,
    #[serde(default)]
    pub plugin: PluginChoice,
    #[serde(default)]
    pub forcing: ForcingChoice,
    #[serde(default)]
    pub kernel: KernelChoice,
}

fn unit_sigma() -> C64 {
    C64::new(1.0, 0.0)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PluginChoice {
    #[default]
    Unit,
    SineExponential,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcingChoice {
    #[default]
    Zero,
    /// exp(c z²).
    Gaussian { c: f64 },
    /// σ sin πz.
    SigmaSine,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Unit,
    /// sin^k πd / sin^k π(ξ + d); d defaults to the contour's default shift.
    SinePower { d: Option<f64>, k: u32 },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_digest: String,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

/// Exit status for an error: 2 for rejected input, 3 for numerical failure.
pub fn exit_code(e: &FdeError) -> i32 {
    use FdeError::*;
    match e {
        InvalidHypotheses(_) | RegionViolation(_) | BadContour(_) | KernelInvalid(_) | InvalidSpec(_) | ExcludedAngle(_)
        | UnknownClass(_) | DegenerateCoefficients(_) | InvalidWeight(_) | InsufficientZeros(_) | WindowViolation(_)
        | IncompatibleParams(_) | Parse(_) | OutOfRange(_) | SummabilityFailure(_) => 2,
        _ => 3,
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Output {
    files: Vec<(String, Vec<u8>)>,
    tolerances: BTreeMap<String, f64>,
    timings: BTreeMap<String, f64>,
    inputs: Vec<Vec<u8>>,
    /// Exit code when the run completes but a check failed.
    status: i32,
}

impl Output {
    fn new() -> Self {
        Output {
            files: vec![],
            tolerances: BTreeMap::new(),
            timings: BTreeMap::new(),
            inputs: vec![],
            status: 0,
        }
    }

    fn file(&mut self, name: &str, body: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), body.into()));
    }

    fn json(&mut self, name: &str, v: &impl Serialize) {
        let mut s = serde_json::to_string_pretty(v).expect("serializable");
        s.push('\n');
        self.file(name, s);
    }
}

#[derive(Debug)]
pub enum CliError {
    Fde(FdeError),
    Io(String),
}

impl From<FdeError> for CliError {
    fn from(e: FdeError) -> Self {
        CliError::Fde(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Fde(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Fde(e) => exit_code(e),
            CliError::Io(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path, out: &mut Output) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    out.inputs.push(bytes.clone());
    String::from_utf8(bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Numeric CSV rows; blank lines, '#' comments and a non-numeric header are skipped.
fn read_rows(text: &str, width: usize) -> CliResult<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == width => rows.push(v),
            None if k == 0 => continue,
            _ => return Err(FdeError::Parse(format!("line {}: expected {width} numbers", k + 1)).into()),
        }
    }
    Ok(rows)
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Ok(n) = std::env::var("FDE_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let name = command_name(&cli.command);
    let mut out = Output::new();
    let start = Instant::now();
    let result = dispatch(&cli.command, &mut out);
    out.timings.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    if let Err(e) = result {
        eprintln!("error: {e}");
        // partial outputs (such as a failing admissibility report) are still emitted
        if out.files.is_empty() {
            return e.code();
        }
        out.status = e.code();
    }
    match emit(&cli.out_dir, name, &out) {
        Ok(()) => out.status,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Solve { .. } => "solve",
        Command::Zeros { .. } => "zeros",
        Command::Factorize { .. } => "factorize",
        Command::Transmission { .. } => "transmission",
        Command::Bounds { .. } => "bounds",
    }
}

fn emit(dir: &Option<PathBuf>, name: &str, out: &Output) -> std::io::Result<()> {
    let Some(dir) = dir else {
        use std::io::Write;
        let mut stdout = std::io::stdout().lock();
        for (k, (file, body)) in out.files.iter().enumerate() {
            if out.files.len() > 1 {
                writeln!(stdout, "{}== {file} ==", if k > 0 { "\n" } else { "" })?;
            }
            stdout.write_all(body)?;
        }
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    for (file, body) in &out.files {
        std::fs::write(dir.join(file), body)?;
    }
    let mut h = Sha256::new();
    for i in &out.inputs {
        h.update((i.len() as u64).to_le_bytes());
        h.update(i);
    }
    let digest: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let manifest = RunManifest {
        command: name.into(),
        input_digest: digest,
        tolerances: out.tolerances.clone(),
        outputs: out.files.iter().map(|(f, _)| f.clone()).collect(),
        timings: out.timings.clone(),
    };
    let mut s = serde_json::to_string_pretty(&manifest).expect("serializable");
    s.push('\n');
    std::fs::write(dir.join("manifest.json"), s)
}

fn dispatch(c: &Command, out: &mut Output) -> CliResult<()> {
    match c {
        Command::Validate { spec } => cmd_validate(spec, out),
        Command::Solve {
            problem,
            points,
            d0,
            truncation,
            half_height,
            nodes,
        } => {
            let contour = ContourSpec {
                d0: *d0,
                half_height: *half_height,
                nodes_per_unit: *nodes,
                ..ContourSpec::line(*d0)
            };
            cmd_solve(problem, points, contour, *truncation, out)
        }
        Command::Zeros {
            sign,
            theta1,
            theta2,
            p,
            q,
            q2,
        } => cmd_zeros(sign, SParams { theta1: *theta1, theta2: *theta2, p: *p, q: *q, q2: *q2 }, out),
        Command::Factorize { spec, truncation, beta } => cmd_factorize(spec, *truncation, *beta, out),
        Command::Transmission {
            problem,
            grid,
            quad,
            truncation,
        } => cmd_transmission(problem, grid, quad.as_deref(), *truncation, out),
        Command::Bounds {
            exponent,
            c_star,
            reference,
            probes,
        } => cmd_bounds(*exponent, *c_star, *reference, probes, out),
    }
}

#[derive(Serialize)]
struct ValidateOut<'a> {
    kind: &'a str,
    passed: bool,
    reports: BTreeMap<String, ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval: Option<(f64, f64)>,
}

fn cmd_validate(path: &Path, out: &mut Output) -> CliResult<()> {
    let text = read(path, out)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| FdeError::Parse(e.to_string()))?;
    let mut reports = BTreeMap::new();
    let mut interval = None;
    let kind = if value.get("omega0").is_some() {
        let p = TransmissionProblem::from_json(&text)?;
        p.validate()?;
        let fact = factorize_transmission(&p)?;
        let w = admissible_weight(&p, &fact);
        interval = Some(w.interval);
        let mut angles = ValidationReport::default();
        angles.push(crate::coefficient::Clause::new(
            "angles.identity",
            fact.angles.identity_defect < 1e-12,
            format!("defect {:e}", fact.angles.identity_defect),
        ));
        reports.insert("angles".into(), angles);
        reports.insert("weight".into(), w.report);
        reports.insert("hypotheses".into(), validate_hypotheses(&fact.omega, &p.params(), 1000));
        "transmission"
    } else if value.get("omega").is_some() {
        let sp: SolveProblem = serde_json::from_value(value).map_err(|e| FdeError::Parse(e.to_string()))?;
        reports.insert("hypotheses".into(), validate_hypotheses(&sp.omega, &sp.params, 1000));
        let k = kernel_for(&sp.kernel, 0.5);
        reports.insert("kernel".into(), validate_kernel(&k).report);
        "solve"
    } else if value.get("form").is_some() {
        let spec = TrigCoefficientSpec::from_json(&text)?;
        let conv = to_omega(&factorize(&spec, 1000)?, 1.0)?;
        reports.insert("hypotheses".into(), validate_hypotheses(&conv.omega, &EquationParams::unit(1.0, 0.0, 0.5), 1000));
        "trig"
    } else {
        let spec = OmegaSpec::from_json(&text)?;
        reports.insert("hypotheses".into(), validate_hypotheses(&spec, &EquationParams::unit(1.0, 0.0, 0.5), 1000));
        "omega"
    };
    let passed = reports.values().all(ValidationReport::passed);
    out.json("report.json", &ValidateOut { kind, passed, reports, interval });
    if !passed {
        out.status = 2;
    }
    Ok(())
}

fn kernel_for(k: &KernelChoice, d0: f64) -> KernelSpec {
    match *k {
        KernelChoice::Unit => KernelSpec::unit(),
        KernelChoice::SinePower { d, k } => KernelSpec::sine_power(d.unwrap_or(KernelSpec::default_shift(d0)), k),
    }
}

fn cmd_solve(problem: &Path, points: &Path, contour: ContourSpec, truncation: usize, out: &mut Output) -> CliResult<()> {
    let sp: SolveProblem = serde_json::from_str(&read(problem, out)?).map_err(|e| FdeError::Parse(e.to_string()))?;
    let pts = read_rows(&read(points, out)?, 2)?;
    let plugin = match sp.plugin {
        PluginChoice::Unit => PeriodicPlugin::unit(),
        PluginChoice::SineExponential => PeriodicPlugin::sine_exponential(),
    };
    let t0 = Instant::now();
    let hom = HomogeneousSolution::build(&sp.omega, &sp.params, plugin, truncation)?;
    let forcing = match sp.forcing {
        ForcingChoice::Zero => ForcingSpec::zero(),
        ForcingChoice::Gaussian { c } => ForcingSpec::gaussian(c),
        ForcingChoice::SigmaSine => ForcingSpec::sigma_sine(),
    };
    let kernel = kernel_for(&sp.kernel, contour.d0);
    let part = ParticularProblem::new(hom.clone(), forcing, kernel, contour)?;
    let general = assemble_general(Some(hom.clone()), part.clone());
    let sigma = sp.sigma;
    let mut csv = String::from("re_z,im_z,re_y,im_y,residual,tail_est,status\n");
    let mut worst: f64 = 0.0;
    for row in &pts {
        let z = C64::new(row[0], row[1]);
        let eval = || -> crate::Result<(C64, f64, f64)> {
            let y = general.evaluate(z, sigma)?;
            let r = general.residual(z, sigma)?;
            let tail = hom.product_tail_bound(z) + if part.forcing.is_zero() { 0.0 } else { part.solve(z, sigma)?.tail_estimate };
            Ok((y, r, tail))
        };
        match eval() {
            Ok((y, r, tail)) => {
                worst = worst.max(r);
                csv += &format!("{},{},{},{},{},{},ok\n", fmt17(z.re), fmt17(z.im), fmt17(y.re), fmt17(y.im), fmt17(r), fmt17(tail));
            }
            Err(e) => {
                let tag = format!("{e:?}").split('(').next().unwrap_or("error").to_string();
                csv += &format!("{},{},NaN,NaN,NaN,NaN,{tag}\n", fmt17(z.re), fmt17(z.im));
            }
        }
    }
    out.timings.insert("solve_seconds".into(), t0.elapsed().as_secs_f64());
    out.tolerances.insert("max_residual".into(), worst);
    out.tolerances.insert("truncation".into(), truncation as f64);
    out.file("solution.csv", csv);
    Ok(())
}

/// Sign-change bracket of a real zero, widened until the sign flips.
fn bracket(spec: &TrigCoefficientSpec, x: f64, h: f64) -> (f64, f64) {
    let f = |t: f64| spec.eval(C64::new(t, 0.0)).re;
    let mut w = h;
    for _ in 0..40 {
        if f(x - w) * f(x + w) <= 0.0 {
            return (x - w, x + w);
        }
        w *= 2.0;
    }
    (f64::NAN, f64::NAN)
}

pub fn zero_table_csv(spec: &TrigCoefficientSpec, table: &ZeroTable) -> String {
    let mut csv = String::from("index,location,multiplicity,residual,bracket_lo,bracket_hi\n");
    for (i, e) in table.entries.iter().enumerate() {
        let r = spec.eval(C64::new(e.location, 0.0)).norm();
        let (lo, hi) = bracket(spec, e.location, 1e-9 * table.period);
        csv += &format!("{i},{},{},{},{},{}\n", fmt17(e.location), e.multiplicity, fmt17(r), fmt17(lo), fmt17(hi));
    }
    csv
}

fn cmd_zeros(sign: &str, s: SParams, out: &mut Output) -> CliResult<()> {
    let spec = match sign {
        "plus" | "+" => TrigCoefficientSpec::SPlus(s),
        "minus" | "-" => TrigCoefficientSpec::SMinus(s),
        other => return Err(FdeError::InvalidSpec(format!("sign {other:?}: use plus or minus")).into()),
    };
    let table = find_zeros(&spec)?;
    out.file("zeros.csv", zero_table_csv(&spec, &table));
    if !table.complex.is_empty() {
        let mut c = String::from("re,im\n");
        for z in &table.complex {
            c += &format!("{},{}\n", fmt17(z.re), fmt17(z.im));
        }
        out.file("complex_zeros.csv", c);
    }
    Ok(())
}

#[derive(Serialize)]
struct FactorizeOut {
    product: crate::factorization::ProductForm,
    conversion: crate::factorization::ConversionResult,
    /// max |product/direct − 1| over a grid in |z| ≤ 5 avoiding singular points.
    grid_max_relative_error: f64,
}

fn cmd_factorize(path: &Path, truncation: usize, beta: f64, out: &mut Output) -> CliResult<()> {
    let spec = TrigCoefficientSpec::from_json(&read(path, out)?)?;
    let product = factorize(&spec, truncation)?;
    let conversion = to_omega(&product, beta)?;
    let mut worst: f64 = 0.0;
    for i in -10..=10 {
        for j in -4..=4 {
            let z = C64::new(0.47 * i as f64 + 0.013, 0.53 * j as f64 + 0.011);
            if z.norm() > 5.0 {
                continue;
            }
            let d = spec.eval(z);
            if let Ok(v) = product.evaluate(z) {
                if d.norm() > 1e-6 && d.norm() < 1e6 {
                    worst = worst.max((v / d - 1.0).norm());
                }
            }
        }
    }
    out.tolerances.insert("grid_max_relative_error".into(), worst);
    out.json(
        "factorization.json",
        &FactorizeOut {
            product,
            conversion,
            grid_max_relative_error: worst,
        },
    );
    Ok(())
}

#[derive(Serialize)]
struct TransmissionReport {
    angles: crate::transmission::AngleData,
    windows: crate::transmission::RhoWindows,
    sample_rho: Vec<C64>,
    residual_homogeneous: Vec<f64>,
    residual_full: Vec<f64>,
    flux_residual: Vec<f64>,
    jump_residual: Vec<f64>,
    g_composition_rel: Vec<f64>,
    g_product_rel: Vec<f64>,
}

fn cmd_transmission(problem: &Path, grid: &Path, quad: Option<&Path>, truncation: usize, out: &mut Output) -> CliResult<()> {
    let p = TransmissionProblem::from_json(&read(problem, out)?)?;
    let pts = read_rows(&read(grid, out)?, 3)?;
    let quad: QuadConfig = match quad {
        Some(q) => serde_json::from_str(&read(q, out)?).map_err(|e| FdeError::Parse(e.to_string()))?,
        None => QuadConfig::default(),
    };
    p.validate()?;
    derive_angles(&p)?;
    let fact = factorize_transmission(&p)?;
    let w = admissible_weight(&p, &fact);
    out.json("admissibility.json", &w);
    if !w.report.passed() {
        out.status = 2;
        return Ok(());
    }
    let t0 = Instant::now();
    let solver = TransmissionSolver::new(p, truncation, ContourSpec::line(p.d0))?;
    let sigma = C64::new(1.0, 0.0);
    let (lo, hi) = solver.windows.particular;
    let mid = 0.5 * (lo.max(-2.0) + hi.min(2.0));
    let sample_rho = vec![C64::new(mid, 0.0), C64::new(mid, 1.0)];
    let mut rep = TransmissionReport {
        angles: fact.angles,
        windows: solver.windows,
        sample_rho: sample_rho.clone(),
        residual_homogeneous: vec![],
        residual_full: vec![],
        flux_residual: vec![],
        jump_residual: vec![],
        g_composition_rel: vec![],
        g_product_rel: vec![],
    };
    for &rho in &sample_rho {
        let lam = C64::i() * fact.s_star * rho;
        rep.residual_homogeneous.push(solver.residual_homogeneous(rho, sigma)?);
        rep.residual_full.push(solver.residual_full(rho, sigma)?);
        rep.flux_residual.push(solver.flux_residual(lam, sigma)?);
        rep.jump_residual.push(solver.jump_residual(lam, sigma)?);
        let (a, b) = g_agreement(&p, &fact, lam, truncation)?;
        rep.g_composition_rel.push(a);
        rep.g_product_rel.push(b);
    }
    out.timings.insert("setup_seconds".into(), t0.elapsed().as_secs_f64());
    let t1 = Instant::now();
    let mut csv = String::from("x1,x2,t,re_u1,im_u1,re_u2,im_u2,err_est\n");
    for row in &pts {
        let v = solver.inverse_transforms(row[0], row[1], row[2], &quad)?;
        csv += &format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt17(row[0]),
            fmt17(row[1]),
            fmt17(row[2]),
            fmt17(v.u1.re),
            fmt17(v.u1.im),
            fmt17(v.u2.re),
            fmt17(v.u2.im),
            fmt17(v.error_estimate)
        );
    }
    out.timings.insert("field_seconds".into(), t1.elapsed().as_secs_f64());
    let worst = rep.residual_full.iter().chain(&rep.residual_homogeneous).fold(0.0f64, |a, &b| a.max(b));
    out.tolerances.insert("max_shift_equation_residual".into(), worst);
    out.tolerances.insert("truncation".into(), truncation as f64);
    out.json("residuals.json", &rep);
    out.file("field.csv", csv);
    Ok(())
}

fn cmd_bounds(exponent: f64, c_star: f64, reference: f64, probes: &[f64], out: &mut Output) -> CliResult<()> {
    let seq = SequenceFamily::new(FamilyKind::Gamma, 1, Generator::affine_power(exponent, 1.0, 0.0, 0.0, 0.0));
    let zs: Vec<C64> = probes.iter().map(|&y| C64::new(0.0, y)).collect();
    let rep = appendix_bounds(&seq, c_star, C64::new(0.0, reference), &zs)?;
    let mut csv = String::from("im_z,sum1,sum2,sum3,sum4,ratio1,ratio2,ratio3,ratio4,breach\n");
    let row = |z: C64, s: [f64; 4], r: [f64; 4], b: bool| {
        format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt17(z.im),
            fmt17(s[0]),
            fmt17(s[1]),
            fmt17(s[2]),
            fmt17(s[3]),
            fmt17(r[0]),
            fmt17(r[1]),
            fmt17(r[2]),
            fmt17(r[3]),
            b as u8
        )
    };
    csv += &row(rep.reference.z, rep.reference.sums, [1.0; 4], false);
    for (j, (p, r)) in rep.probes.iter().zip(&rep.envelope_ratios).enumerate() {
        csv += &row(p.z, p.sums, *r, rep.breaches.iter().any(|b| b.0 == j));
    }
    out.file("bounds.csv", csv);
    if !rep.breaches.is_empty() {
        out.status = 2;
    }
    Ok(())
}
