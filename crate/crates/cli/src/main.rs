use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csk_core::error::Error;
use csk_core::grid::hybrid_grid;
use csk_core::halfline::{sab_threshold_probe, SabSpec, DEFAULT_SAB_KAPPA};
use csk_core::kernels::{envelope, heat_kernel, heat_kernel_dy, KernelKind, KernelSpec, DEFAULT_KAPPA};
use csk_core::params::{classify_realization, rellich_constants, OperatorParams, SpaceParams};
use csk_core::report::{CheckRecord, ProbeReport};
use csk_core::suites::{run_suite, suite_names, SuiteConfig};
use csk_core::tensor::{
    closedness_probe, concentration_check, elliptic_residual, elliptic_solve_batch, parabolic_step, rademacher_probe,
    ClosednessConfig, FamilyMode, HalfSpaceField, RademacherConfig, XBox,
};
use serde_json::json;

/// Failure modes mapped onto the exit-code contract.
enum Failure {
    /// Domain or configuration problem: exit 2.
    Input(String),
    /// A suite or check ran and failed: exit 3.
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

#[derive(Parser)]
#[command(
    name = "csk",
    version,
    about = "Kernels, solvers and checks for y-degenerate elliptic and parabolic operators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Indicial roots, generation window and realization flags as JSON.
    Classify(ClassifyArgs),
    /// CSV table of heat kernel values, y-derivatives and envelope bounds.
    KernelEval(KernelEvalArgs),
    /// Solve on a periodic x-box times the half-line and report the residual.
    Solve(SolveArgs),
    /// Run a registered verification suite.
    Verify(VerifyArgs),
    /// Run a single probe at one parameter point.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    dim: u32,
    /// Report the Rellich parameters instead.
    #[arg(long)]
    rellich: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Neumann,
    Dirichlet,
    Standard,
    Alternate,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value_t = Kind::Neumann)]
    kind: Kind,
    /// Ignored for the pure Bessel kinds.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec, Error> {
        match self.kind {
            Kind::Neumann => KernelSpec::neumann(self.c),
            Kind::Dirichlet => KernelSpec::dirichlet(self.c),
            Kind::Standard => KernelSpec::standard(OperatorParams::new(self.b, self.c)),
            Kind::Alternate => KernelSpec::alternate(OperatorParams::new(self.b, self.c)),
        }
    }
}

#[derive(Args)]
struct KernelEvalArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Comma list or `lo:hi:n` (log-spaced).
    #[arg(long, default_value = "1")]
    t: String,
    #[arg(long, default_value = "1")]
    y: String,
    #[arg(long, default_value = "1")]
    rho: String,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveKind {
    Elliptic,
    Parabolic,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(value_enum)]
    problem: SolveKind,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1)]
    x_dims: usize,
    #[arg(long, default_value_t = 16.0)]
    x_length: f64,
    #[arg(long, default_value_t = 64)]
    x_count: usize,
    #[arg(long, default_value_t = 1e-6)]
    y_min: f64,
    #[arg(long, default_value_t = 1.0)]
    y_split: f64,
    #[arg(long, default_value_t = 50.0)]
    y_max: f64,
    #[arg(long, default_value_t = 512)]
    n_geo: usize,
    #[arg(long, default_value_t = 1024)]
    n_uni: usize,
    /// Data field (`.csv` or binary). Defaults to `exp(-|x|^2 - (y-3)^2)`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Solution field; `.csv` selects the text format.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Residual report (JSON); stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name; `list` prints the registry.
    suite: String,
    /// JSON file with suite overrides; flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    x_dims: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeKind {
    Closedness,
    Concentration,
    Rademacher,
    Sab,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(value_enum)]
    probe: ProbeKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    x_dims: usize,
    /// Rademacher family: resolvent or semigroup.
    #[arg(long, default_value = "resolvent")]
    mode: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    /// Ambient dimension for the S^{alpha,beta} probe.
    #[arg(long, default_value_t = 2)]
    dim: u32,
    #[arg(long, default_value_t = DEFAULT_SAB_KAPPA)]
    kappa: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let res = match cli.cmd {
        Command::Classify(a) => classify(a),
        Command::KernelEval(a) => kernel_eval(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Probe(a) => probe(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check) => ExitCode::from(3),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CSK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("CSK_THREADS = '{v}' is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(value: &impl serde::Serialize, path: Option<&Path>) -> CliResult {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Input(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit_report(rep: &ProbeReport, path: Option<&Path>) -> CliResult {
    match path {
        Some(p) => rep.write(p)?,
        None => emit_json(rep, None)?,
    }
    for f in rep.failures() {
        eprintln!("failed: {} measured {}", f.name, f.measured.0);
    }
    if rep.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn classify(a: ClassifyArgs) -> CliResult {
    let op = OperatorParams::new(a.b, a.c);
    let sp = SpaceParams::new(a.dim, a.m, a.p)?;
    if a.rellich {
        let r = rellich_constants(op, sp);
        return emit_json(&json!({ "b": a.b, "c": a.c, "p": a.p, "D": op.discriminant(), "rellich": r }), None);
    }
    let roots = op.indicial_roots()?;
    let win = op.generation_interval()?;
    let realization = match classify_realization(op, sp) {
        Ok(r) => Some(r),
        Err(Error::OutsideGenerationWindow { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let q = sp.homogeneity();
    emit_json(
        &json!({
            "b": a.b, "c": a.c, "m": a.m, "p": a.p, "dim": a.dim,
            "D": roots.d, "s1": roots.s1, "s2": roots.s2,
            "window": [win.lo, win.hi],
            "q": q,
            "inside_window": win.contains(q),
            "realization": realization,
        }),
        None,
    )
}

/// `a,b,c` or `lo:hi:n` with log spacing.
fn parse_values(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Input(format!("cannot parse {what} values '{s}'"));
    if let Some((lo, rest)) = s.split_once(':') {
        let (hi, n) = rest.split_once(':').ok_or_else(bad)?;
        let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        let n: usize = n.parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && n >= 1) {
            return Err(Failure::Input(format!("range {s} needs 0 < lo <= hi and n >= 1")));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let r = (hi / lo).ln() / (n - 1) as f64;
        return Ok((0..n).map(|i| lo * (r * i as f64).exp()).collect());
    }
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn kernel_eval(a: KernelEvalArgs) -> CliResult {
    let spec = a.kernel.spec()?;
    let ts = parse_values(&a.t, "t")?;
    let ys = parse_values(&a.y, "y")?;
    let rhos = parse_values(&a.rho, "rho")?;
    let mut rows = Vec::with_capacity(ts.len() * ys.len() * rhos.len());
    for &t in &ts {
        for &y in &ys {
            for &rho in &rhos {
                rows.push([t, y, rho, heat_kernel(&spec, t, y, rho)?, heat_kernel_dy(&spec, t, y, rho)?]);
            }
        }
    }
    let mut env = envelope(&spec, a.kappa, false, 61)?;
    // the fit is a sup over a grid; raise it to cover the requested rows too
    let excess = rows.iter().map(|r| r[3] / env.value(r[0], r[1], r[2])).fold(1.0f64, f64::max);
    env.c *= excess;
    let mut w = sink(a.output.as_deref())?;
    writeln!(w, "t,y,rho,p,dp_dy,envelope")?;
    for r in &rows {
        let e = env.value(r[0], r[1], r[2]);
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r[0], r[1], r[2], r[3], r[4], e)?;
    }
    w.flush()?;
    Ok(())
}

fn read_field(path: &Path, x_box: XBox, m: f64) -> Result<HalfSpaceField, Failure> {
    let file = BufReader::new(File::open(path)?);
    let f = if is_csv(path) { HalfSpaceField::read_csv(file, x_box, m)? } else { HalfSpaceField::read_binary(file)? };
    Ok(f)
}

fn write_field(path: &Path, f: &HalfSpaceField) -> CliResult {
    let mut w = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        f.write_csv(&mut w)?;
    } else {
        f.write_binary(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Weighted mass `∫ u y^c dx dy`, conserved by the Neumann semigroup.
fn mass(f: &HalfSpaceField, c: f64) -> f64 {
    let ny = f.ny();
    let vol = if f.x_box.is_empty() { 1.0 } else { f.x_box.cell_volume() };
    let nx = f.x_box.len().max(1);
    let mut total = 0.0;
    for i in 0..nx {
        let s = &f.values[i * ny..(i + 1) * ny];
        for j in 1..ny {
            let (y0, y1) = (f.y_grid[j - 1], f.y_grid[j]);
            total += 0.5 * (y1 - y0) * (s[j - 1] * y0.powf(c) + s[j] * y1.powf(c));
        }
    }
    total * vol
}

fn solve(a: SolveArgs) -> CliResult {
    let spec = a.kernel.spec()?;
    let c = spec.op.c;
    let x_box = if a.x_dims == 0 { XBox::none() } else { XBox::cube(a.x_dims, a.x_length, a.x_count)? };
    let f = match &a.input {
        Some(p) => read_field(p, x_box.clone(), c)?,
        None => {
            let y = hybrid_grid(a.y_min, a.y_split, a.y_max, a.n_geo, a.n_uni)?;
            HalfSpaceField::from_fn(x_box.clone(), y, c, |x, y| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-r2 - (y - 3.0).powi(2)).exp()
            })?
        }
    };
    let mut rep = ProbeReport::new("solve");
    let u = match a.problem {
        SolveKind::Elliptic => {
            let sol = elliptic_solve_batch(&spec, a.lambda, std::slice::from_ref(&f))?.pop().expect("one field");
            let y_top = f.y_grid[f.ny() - 1];
            let window = (1e-2, y_top - 0.1 * y_top);
            let res = elliptic_residual(&spec, a.lambda, &f, &sol, window)?;
            rep.push(
                CheckRecord::at_most("residual", res, 1e-3)
                    .param("lambda", a.lambda)
                    .param("y_lo", window.0)
                    .param("y_hi", window.1)
                    .note("relative to max |f|"),
            );
            sol.u
        }
        SolveKind::Parabolic => {
            let u = parabolic_step(&spec, a.t, &f)?;
            let (m0, m1) = (mass(&f, c), mass(&u, c));
            let drift = (m1 - m0).abs() / m0.abs();
            let rec = match spec.kind {
                KernelKind::Bessel(csk_core::kernels::BoundaryCondition::Neumann) => {
                    CheckRecord::at_most("mass-drift", drift, 1e-3)
                }
                _ => CheckRecord::new("mass-drift", drift, true).note("not conserved for this realization"),
            };
            rep.push(rec.param("t", a.t));
            u
        }
    };
    if let Some(p) = &a.output {
        write_field(p, &u)?;
    }
    let rep = rep.with_config(json!({
        "problem": match a.problem { SolveKind::Elliptic => "elliptic", SolveKind::Parabolic => "parabolic" },
        "kernel": spec,
        "lambda": a.lambda,
        "t": a.t,
        "x_dims": f.x_box.dims(),
        "ny": f.ny(),
    }));
    emit_report(&rep, a.report.as_deref())
}

fn verify(a: VerifyArgs) -> CliResult {
    if a.suite == "list" {
        let mut w = sink(None)?;
        for name in suite_names() {
            writeln!(w, "{name}")?;
        }
        w.flush()?;
        return Ok(());
    }
    if !suite_names().contains(&a.suite.as_str()) {
        return Err(Failure::Input(format!("unknown suite '{}'; try `csk verify list`", a.suite)));
    }
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<SuiteConfig>(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?
        }
        None => SuiteConfig::default(),
    };
    cfg.b = a.b.or(cfg.b);
    cfg.c = a.c.or(cfg.c);
    cfg.m = a.m.or(cfg.m);
    cfg.p = a.p.or(cfg.p);
    cfg.x_dims = a.x_dims.or(cfg.x_dims);
    cfg.seed = a.seed.or(cfg.seed);
    cfg.samples = a.samples.or(cfg.samples);
    cfg.kappa = a.kappa.or(cfg.kappa);
    let rep = run_suite(&a.suite, &cfg)?;
    emit_report(&rep, a.output.as_deref())
}

fn probe(a: ProbeArgs) -> CliResult {
    let op = OperatorParams::new(a.b, a.c);
    let rep = match a.probe {
        ProbeKind::Closedness => {
            let spec = KernelSpec::standard(op)?;
            let sp = SpaceParams::new(2, a.m, a.p)?;
            let cfg = ClosednessConfig { x_dims: a.x_dims, seed: a.seed, ..Default::default() };
            closedness_probe(&spec, sp, &cfg)?
        }
        ProbeKind::Concentration => {
            let spec = KernelSpec::standard(op)?;
            let sp = SpaceParams::half_line(a.m, a.p)?;
            let s2 = op.indicial_roots()?.s2;
            concentration_check(&spec, sp, &[0, 4, 8, 12, 16], sp.homogeneity() > s2 + 2.0)?
        }
        ProbeKind::Rademacher => {
            let spec = KernelSpec::standard(op)?;
            let sp = SpaceParams::half_line(a.m, a.p)?;
            let mode = match a.mode.as_str() {
                "resolvent" => FamilyMode::Resolvent,
                "semigroup" => FamilyMode::Semigroup,
                other => return Err(Failure::Input(format!("unknown family mode '{other}'"))),
            };
            rademacher_probe(&spec, sp, &RademacherConfig { mode, seed: a.seed, ..Default::default() })?
        }
        ProbeKind::Sab => {
            let spec = SabSpec::new(a.alpha, a.beta, a.dim, a.m)?.with_kappa(a.kappa);
            sab_threshold_probe(&spec, a.p, 1e40)?
        }
    };
    emit_report(&rep, a.output.as_deref())
}
