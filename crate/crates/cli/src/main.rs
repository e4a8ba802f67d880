use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use green_ops::config::RunConfig;
use green_ops::expr::{parse_complex_literal, parse_expression};
use green_ops::kernels::KernelQuery;
use green_ops::operators::{GridField, GridGeometry, Operator, ScalarField};
use green_ops::solver::{
    solve_biharmonic, solve_pde, HolomorphicPolynomial, Solution, SolutionSpec,
};
use green_ops::suites::{run_suite, Suite};
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "pmp",
    version,
    about = "High-order Green operators on the disk"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Disk radius
    #[arg(long = "R", global = true)]
    radius: Option<f64>,
    /// Radial quadrature nodes
    #[arg(long, global = true)]
    nr: Option<usize>,
    /// Angular quadrature nodes
    #[arg(long, global = true)]
    ntheta: Option<usize>,
    /// Boundary contour nodes
    #[arg(long = "contour-n", global = true)]
    contour_n: Option<usize>,
    /// Grid output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write grid output here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate kernels
    #[command(subcommand)]
    Kernel(KernelCommand),
    /// Apply operators
    #[command(subcommand)]
    Op(OpCommand),
    /// Solve the mixed equation, or the biharmonic equation
    Solve(SolveArgs),
    /// Run seeded self-checks
    Verify(VerifyArgs),
    /// Sample a field, or an operator applied to it, on a grid
    Export(ExportArgs),
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Evaluate the mixed kernel C3(a, b; mu, nu) on the origin-centred disk
    Eval {
        #[arg(long)]
        mu: u32,
        #[arg(long)]
        nu: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
}

#[derive(Subcommand)]
enum OpCommand {
    /// Evaluate an operator applied to a field at one point
    Apply {
        /// T, Tbar, S, Sbar, 2T, 2Tbar, T^k, Tbar^k or T^muTbar^nu
        #[arg(long)]
        op: String,
        /// Field expression in z, zbar
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
}

#[derive(Args)]
struct GridArgs {
    /// Grid layout
    #[arg(long, value_enum, default_value_t = GridKind::Cartesian)]
    grid: GridKind,
    /// Points per side (cartesian) or number of rings (polar)
    #[arg(long, default_value_t = 21)]
    n: usize,
    /// Points per ring (polar)
    #[arg(long = "n-angles", default_value_t = 32)]
    n_angles: usize,
    /// Fraction of the radius covered by the grid
    #[arg(long, default_value_t = 0.9)]
    fill: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridKind {
    Cartesian,
    Polar,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 1)]
    mu: u32,
    #[arg(long, default_value_t = 1)]
    nu: u32,
    /// Right-hand side A as an expression in z, zbar
    #[arg(long, allow_hyphen_values = true)]
    rhs: String,
    /// Holomorphic free data g_j as comma-separated coefficients, one flag per j (missing ones are zero)
    #[arg(long = "g", allow_hyphen_values = true)]
    g: Vec<String>,
    /// Holomorphic free data f_i as comma-separated coefficients, one flag per i
    #[arg(long = "f", allow_hyphen_values = true)]
    f: Vec<String>,
    /// Solve the real equation Δ²u = A instead
    #[arg(long)]
    biharmonic: bool,
    /// Coefficients of h1 in u = particular + |z|² Re h1 + Re h2
    #[arg(long, allow_hyphen_values = true)]
    h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h2: Option<String>,
    /// Evaluate at one point; without it a grid is written
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// kernels, operators, pde, norms or all
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExportArgs {
    /// Field expression in z, zbar
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// Operator to apply first; omit to sample the field itself
    #[arg(long)]
    op: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn numeric(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

type CmdResult<T> = Result<T, Failure>;

/// `re±imi` with 15 digits after the point and trailing zeros removed.
fn format_complex(z: Complex64) -> String {
    let re = format_part(z.re);
    let im = format_part(z.im);
    if im.starts_with('-') {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

fn format_part(x: f64) -> String {
    let mut s = format!("{x:.15}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn configure_threads() -> CmdResult<()> {
    let Ok(raw) = std::env::var("PMP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        usage(anyhow!(
            "PMP_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(numeric)
}

fn build_config(common: &Common) -> CmdResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(r) = common.radius {
        cfg.radius = r;
    }
    if let Some(n) = common.nr {
        cfg.n_radial = n;
    }
    if let Some(n) = common.ntheta {
        cfg.n_angular = n;
    }
    if let Some(n) = common.contour_n {
        cfg.contour_count = n;
    }
    if common.output.is_some() {
        cfg.output = common.output.clone();
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn point(text: &str, what: &str) -> CmdResult<Complex64> {
    parse_complex_literal(text)
        .with_context(|| format!("invalid {what} {text:?}"))
        .map_err(usage)
}

fn coefficients(text: &str) -> CmdResult<HolomorphicPolynomial> {
    let coeffs = text
        .split(',')
        .map(|c| point(c.trim(), "coefficient"))
        .collect::<CmdResult<Vec<_>>>()?;
    HolomorphicPolynomial::new(coeffs).map_err(usage)
}

fn free_data(list: &[String], len: u32, what: &str) -> CmdResult<Vec<HolomorphicPolynomial>> {
    if list.len() > len as usize {
        return Err(usage(anyhow!(
            "{} --{what} values given but the equation has only {len}",
            list.len()
        )));
    }
    let mut out = list
        .iter()
        .map(|s| coefficients(s))
        .collect::<CmdResult<Vec<_>>>()?;
    out.resize(len as usize, HolomorphicPolynomial::zero());
    Ok(out)
}

fn field(text: &str, cfg: &RunConfig) -> CmdResult<ScalarField> {
    let domain = cfg.domain().map_err(usage)?;
    parse_expression(text, 1)
        .and_then(|e| e.to_scalar_field(domain, text))
        .with_context(|| format!("invalid field {text:?}"))
        .map_err(usage)
}

fn geometry(args: &GridArgs, cfg: &RunConfig) -> CmdResult<GridGeometry> {
    if args.n == 0 || args.n_angles == 0 {
        return Err(usage(anyhow!("grid sizes must be positive")));
    }
    if !(args.fill > 0.0 && args.fill <= 1.0) {
        return Err(usage(anyhow!(
            "--fill must lie in (0, 1], got {}",
            args.fill
        )));
    }
    let domain = cfg.domain().map_err(usage)?;
    Ok(match args.grid {
        GridKind::Cartesian => GridGeometry::cartesian_in_disk(&domain, args.n, args.fill),
        GridKind::Polar => GridGeometry::polar_in_disk(&domain, args.n, args.n_angles, args.fill),
    })
}

fn write_grid(
    grid: &GridField,
    common: &Common,
    cfg: &RunConfig,
    echo: serde_json::Value,
) -> CmdResult<()> {
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(numeric)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match common.format {
        Format::Csv => grid.write_csv(&mut out).map_err(numeric)?,
        Format::Json => {
            let doc = grid.to_json(&serde_json::json!({ "run": cfg, "command": echo }));
            serde_json::to_writer_pretty(&mut out, &doc).map_err(numeric)?;
            writeln!(out).map_err(numeric)?;
        }
    }
    out.flush().map_err(numeric)
}

fn kernel_eval(cfg: &RunConfig, mu: u32, nu: u32, a: &str, b: &str) -> CmdResult<()> {
    let (a, b) = (point(a, "point a")?, point(b, "point b")?);
    let value = KernelQuery::new(a, b, mu, nu, cfg.radius)
        .and_then(|q| q.evaluate())
        .map_err(numeric)?;
    println!("{}", format_complex(value));
    Ok(())
}

fn op_apply(cfg: &RunConfig, op: &str, f: &str, z: &str) -> CmdResult<()> {
    let op: Operator = op.parse().map_err(usage)?;
    let f = field(f, cfg)?;
    let z = point(z, "point z")?;
    let ops = cfg.operators().map_err(usage)?;
    let value = ops.apply(op, &f, z).map_err(numeric)?;
    println!("{}", format_complex(value));
    Ok(())
}

fn export(common: &Common, cfg: &RunConfig, args: &ExportArgs) -> CmdResult<()> {
    let f = field(&args.f, cfg)?;
    let geom = geometry(&args.grid, cfg)?;
    let grid = match &args.op {
        Some(op) => {
            let op: Operator = op.parse().map_err(usage)?;
            let ops = cfg.operators().map_err(usage)?;
            ops.evaluate_grid(op, &f, &geom).map_err(numeric)?
        }
        None => {
            let values = geom.points().iter().map(|&z| f.eval(z)).collect();
            GridField::new(geom, values).map_err(numeric)?
        }
    };
    let echo = serde_json::json!({ "command": "export", "f": args.f, "op": args.op });
    write_grid(&grid, common, cfg, echo)
}

fn solve(common: &Common, cfg: &RunConfig, args: &SolveArgs) -> CmdResult<()> {
    let rhs = field(&args.rhs, cfg)?;
    let ops = cfg.operators().map_err(usage)?;
    let u: Solution = if args.biharmonic {
        if !args.g.is_empty() || !args.f.is_empty() {
            return Err(usage(anyhow!(
                "--g/--f do not apply to --biharmonic; use --h1/--h2"
            )));
        }
        let h1 = args
            .h1
            .as_deref()
            .map(coefficients)
            .transpose()?
            .unwrap_or_default();
        let h2 = args
            .h2
            .as_deref()
            .map(coefficients)
            .transpose()?
            .unwrap_or_default();
        solve_biharmonic(ops, rhs, h1, h2).map_err(numeric)?
    } else {
        if args.h1.is_some() || args.h2.is_some() {
            return Err(usage(anyhow!("--h1/--h2 require --biharmonic")));
        }
        let g = free_data(&args.g, args.nu, "g")?;
        let f = free_data(&args.f, args.mu, "f")?;
        let spec = SolutionSpec::new(args.mu, args.nu, rhs, g, f).map_err(usage)?;
        solve_pde(ops, spec).map_err(numeric)?
    };
    if let Some(z) = &args.z {
        let value = u(point(z, "point z")?).map_err(numeric)?;
        println!("{}", format_complex(value));
        return Ok(());
    }
    let geom = geometry(&args.grid, cfg)?;
    let values = geom
        .points()
        .par_iter()
        .map(|&z| u(z))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numeric)?;
    let grid = GridField::new(geom, values).map_err(numeric)?;
    let echo = serde_json::json!({
        "command": "solve",
        "mu": args.mu,
        "nu": args.nu,
        "rhs": args.rhs,
        "g": args.g,
        "f": args.f,
        "biharmonic": args.biharmonic,
        "h1": args.h1,
        "h2": args.h2,
    });
    write_grid(&grid, common, cfg, echo)
}

fn verify(common: &Common, cfg: &mut RunConfig, args: &VerifyArgs) -> CmdResult<bool> {
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let suites = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse::<Suite>().map_err(usage)?]
    };
    let mut reports = Vec::new();
    for s in suites {
        reports.push(run_suite(s, cfg).map_err(numeric)?);
    }
    let ok = reports.iter().all(|r| r.passed());
    match common.format {
        Format::Json => {
            let doc = serde_json::json!({ "run": cfg, "reports": reports, "passed": ok });
            println!("{}", serde_json::to_string_pretty(&doc).map_err(numeric)?);
        }
        Format::Csv => {
            for r in &reports {
                for c in &r.checks {
                    let status = if c.passed { "PASS" } else { "FAIL" };
                    println!(
                        "{status} {}: {} (error {:.3e}, tolerance {:.1e})",
                        r.suite, c.name, c.error, c.tolerance
                    );
                }
            }
            println!(
                "seed {}: {}",
                cfg.seed,
                if ok {
                    "all checks passed"
                } else {
                    "some checks failed"
                }
            );
        }
    }
    Ok(ok)
}

fn run(cli: Cli) -> CmdResult<bool> {
    configure_threads()?;
    let mut cfg = build_config(&cli.common)?;
    match &cli.command {
        Command::Kernel(KernelCommand::Eval { mu, nu, a, b }) => kernel_eval(&cfg, *mu, *nu, a, b)?,
        Command::Op(OpCommand::Apply { op, f, z }) => op_apply(&cfg, op, f, z)?,
        Command::Solve(args) => solve(&cli.common, &cfg, args)?,
        Command::Export(args) => export(&cli.common, &cfg, args)?,
        Command::Verify(args) => return verify(&cli.common, &mut cfg, args),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
