//! `qcmap`: command-line front end for the quasiconformal mapping toolkit.
//!
//! Every command prints a JSON run report on stdout. Exit codes: 0 ok or
//! certified, 1 certification failed, 2 bad input, 3 no convergence.

mod report;
mod source;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qcmap::closed_maps::{allowable_locus, sector_invariants, ScaledDiskMap};
use qcmap::field::FieldSpec;
use qcmap::grid::Rect;
use qcmap::lehto::{lehto_check, lehto_integral, LehtoCheckConfig};
use qcmap::modulus::{certify_bilipschitz, CertifyConfig, Verdict, DEFAULT_CIRCLE_SAMPLES};
use qcmap::render::{render, RenderConfig, SectorEdges};
use qcmap::solver::solve_principal;
use qcmap::{AnnulusSpec, Complex, DilatationField, Error, PlanarMap, SolverConfig};

use report::{write_atomic, RunReport};
use source::{parse_centers, parse_complex, parse_reals, parse_real, MapSource};

#[derive(Parser)]
#[command(name = "qcmap", version, about = "Quasiconformal maps: solve, certify, render")]
struct Cli {
    /// Seed for every randomised diagnostic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate λ and decide allowability of a constant dilatation.
    Allowable(AllowableArgs),
    /// Write the allowable locus of a sector as CSV.
    Locus(LocusArgs),
    /// Solve for the principal solution of a field and save the grid map.
    Solve(SolveArgs),
    /// Certify the modulus-gap bound of a map over annuli around centers.
    Certify(CertifyArgs),
    /// Compute the Lehto integral, optionally checked against a map.
    Lehto(LehtoArgs),
    /// Render reference curves pushed through a map as a PPM image.
    Render(RenderArgs),
}

#[derive(Args, Serialize)]
struct AllowableArgs {
    /// Sector opening in radians.
    #[arg(long, conflicts_with = "alpha")]
    theta0: Option<f64>,
    /// Dilatation as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    c: String,
    /// Corner opening as a multiple of π; use with --beta.
    #[arg(long, requires = "beta")]
    alpha: Option<f64>,
    /// Direction of the first arc leaving the corner.
    #[arg(long, requires = "alpha", allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LocusArgs {
    #[arg(long)]
    theta0: f64,
    /// Number of rays.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long, default_value_t = 512)]
    grid_n: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 4.0)]
    pad_factor: f64,
    #[arg(long, default_value_t = 4)]
    supersample: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    /// `builtin:identity`, `builtin:fc:<re>,<im>`,
    /// `builtin:fangle:<re>,<im>:<theta0>` or a `.qcmap` file.
    #[arg(long)]
    map: String,
    /// Field file with the dilatation of a `.qcmap` map.
    #[arg(long)]
    field: Option<PathBuf>,
    /// `grid:<n>:<half-width>` or `re,im;re,im;...`.
    #[arg(long, allow_hyphen_values = true)]
    centers: String,
    #[arg(long, default_value_t = 20)]
    annuli: usize,
    /// Bound N on the modulus gap.
    #[arg(long)]
    bound: f64,
    #[arg(long, default_value_t = 1e-4)]
    r_min_factor: f64,
    #[arg(long, default_value_t = 4.0)]
    r_max_factor: f64,
    #[arg(long, default_value_t = DEFAULT_CIRCLE_SAMPLES)]
    circle_samples: usize,
    #[arg(long, default_value_t = 2000)]
    lipschitz_pairs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct LehtoArgs {
    /// Map to check against; also supplies the field for builtins.
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    field: Option<PathBuf>,
    /// `cx,cy,r1,r2`.
    #[arg(long, allow_hyphen_values = true)]
    annulus: String,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Constant multiplying the integral in the check.
    #[arg(long, default_value_t = 1.0)]
    ck: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long)]
    map: String,
    /// `xmin,ymin,xmax,ymax`.
    #[arg(long, allow_hyphen_values = true, default_value = "-2.5,-2.5,2.5,2.5")]
    window: String,
    /// `<width>x<height>`.
    #[arg(long, default_value = "800x800")]
    px: String,
    /// Sector edges to draw as `theta0[,beta]`; defaults to the sector of a
    /// `fangle` map.
    #[arg(long)]
    sector: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

/// A command failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotConverged { .. } => 3,
            Error::NothingCertified | Error::NotSeparated { .. } => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

#[derive(Serialize)]
struct Config<'a, A: Serialize> {
    seed: u64,
    #[serde(flatten)]
    args: &'a A,
}

fn emit<A: Serialize, R: Serialize>(command: &str, seed: u64, args: &A, result: R, start: Instant) -> String {
    RunReport {
        command: command.to_string(),
        config: Config { seed, args },
        result,
        wall_time_ms: start.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION"),
    }
    .to_json()
}

fn finish(json: &str, out: Option<&Path>) -> std::result::Result<(), Failure> {
    if let Some(p) = out {
        write_atomic(p, json.as_bytes())?;
    }
    println!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct AllowableResult {
    /// `c` actually tested; rotated by `e^{−2iβ}` in corner mode.
    c_effective: [f64; 2],
    theta0: f64,
    lambda: [f64; 2],
    #[serde(rename = "R")]
    r: f64,
    theta1: f64,
    re_lambda_minus_one: f64,
    allowable: bool,
}

fn cmd_allowable(args: &AllowableArgs, seed: u64) -> CmdResult {
    let start = Instant::now();
    let c = parse_complex(&args.c)?;
    let (c_eff, theta0) = match (args.theta0, args.alpha, args.beta) {
        (Some(t), None, None) => (c, t),
        (None, Some(alpha), Some(beta)) => {
            if !(alpha > 0.0 && alpha < 2.0) {
                return Err(Error::InvalidInput(format!("corner opening {alpha} not in (0, 2)")).into());
            }
            (c * Complex::from_polar(1.0, -2.0 * beta), alpha * std::f64::consts::PI)
        }
        _ => return Err(Error::invalid("give either --theta0 or both --alpha and --beta").into()),
    };
    let sm = sector_invariants(c_eff, theta0)?;
    let result = AllowableResult {
        c_effective: [c_eff.re, c_eff.im],
        theta0,
        lambda: [sm.lambda.re, sm.lambda.im],
        r: sm.r,
        theta1: sm.theta1,
        re_lambda_minus_one: sm.lambda.re - 1.0,
        allowable: sm.is_allowable(args.tol),
    };
    finish(&emit("allowable", seed, args, result, start), args.out.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct LocusResult {
    whole_disk: bool,
    points: usize,
    csv: PathBuf,
}

fn cmd_locus(args: &LocusArgs, seed: u64) -> CmdResult {
    let start = Instant::now();
    let locus = allowable_locus(args.theta0, args.samples)?;
    let mut csv = String::from("re,im\n");
    for [re, im] in &locus.points {
        csv.push_str(&format!("{re:.17e},{im:.17e}\n"));
    }
    write_atomic(&args.out, csv.as_bytes())?;
    let result = LocusResult { whole_disk: locus.whole_disk, points: locus.points.len(), csv: args.out.clone() };
    finish(&emit("locus", seed, args, result, start), None)?;
    Ok(0)
}

#[derive(Serialize)]
struct SolveResult {
    field: FieldSpec,
    stats: qcmap::solver::SolveStats,
    bbox: [f64; 4],
    nodes: [usize; 2],
    injective_spot_check: bool,
    /// Sup error against the closed form on the doubled disk, for a single
    /// constant disk field.
    oracle_sup_error: Option<f64>,
}

fn disk_oracle_error(field: &DilatationField, map: &qcmap::GridMap) -> qcmap::Result<Option<f64>> {
    let DilatationField::DiskConstant { c, center, radius } = *field else {
        return Ok(None);
    };
    let exact = ScaledDiskMap::new(c, center, radius)?;
    let g = &map.values;
    let mut err = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            if (z - center).norm() <= 2.0 * radius {
                err = err.max((g.at(i, j) - exact.eval(z)).norm());
            }
        }
    }
    Ok(Some(err))
}

fn cmd_solve(args: &SolveArgs, seed: u64) -> CmdResult {
    let start = Instant::now();
    let (spec, field) = FieldSpec::load(&args.field)?;
    let cfg = SolverConfig {
        grid_n: args.grid_n,
        pad_factor: args.pad_factor,
        tol: args.tol,
        max_iter: args.max_iter,
        supersample: args.supersample,
    };
    let sol = solve_principal(&field, &cfg)?;
    let mut bytes = Vec::new();
    sol.map.write(&mut bytes)?;
    write_atomic(&args.out, &bytes)?;
    let result = SolveResult {
        field: spec,
        bbox: sol.map.bbox().to_array(),
        nodes: [sol.map.values.nx, sol.map.values.ny],
        injective_spot_check: sol.map.spot_check_injective(2000, seed),
        oracle_sup_error: disk_oracle_error(&field, &sol.map)?,
        stats: sol.stats,
    };
    finish(&emit("solve", seed, args, result, start), args.report.as_deref())?;
    Ok(0)
}

fn cmd_certify(args: &CertifyArgs, seed: u64) -> CmdResult {
    let start = Instant::now();
    let map = MapSource::parse(&args.map)?;
    let field = map.field(args.field.as_deref())?;
    let centers = parse_centers(&args.centers)?;
    let cfg = CertifyConfig {
        circle_samples: args.circle_samples,
        r_min_factor: args.r_min_factor,
        r_max_factor: args.r_max_factor,
        lipschitz_pairs: args.lipschitz_pairs,
        seed,
    };
    let rep = certify_bilipschitz(&map, &field, &centers, args.annuli, args.bound, &cfg)?;
    let code = if rep.verdict == Verdict::Pass { 0 } else { 1 };
    let json = emit("certify", seed, args, &rep, start);
    finish(&json, Some(&args.out))?;
    if code != 0 {
        eprintln!("certification failed: sup gap {:.6} exceeds N = {}", rep.sup_gap, rep.bound);
    }
    Ok(code)
}

#[derive(Serialize)]
#[serde(untagged)]
enum LehtoResult {
    Integral(qcmap::lehto::LehtoEstimate),
    Check(qcmap::lehto::LehtoReport),
}

fn cmd_lehto(args: &LehtoArgs, seed: u64) -> CmdResult {
    let start = Instant::now();
    let [cx, cy, r1, r2] = parse_reals::<4>(&args.annulus, "annulus")?;
    let a = AnnulusSpec::new(Complex::new(cx, cy), r1, r2)?;
    let map = args.map.as_deref().map(MapSource::parse).transpose()?;
    let field = match (&map, &args.field) {
        (Some(m), f) => m.field(f.as_deref())?,
        (None, Some(f)) => FieldSpec::load(f)?.1,
        (None, None) => return Err(Error::invalid("give --field, --map or both").into()),
    };
    let result = match map {
        Some(m) => {
            let cfg = LehtoCheckConfig { tol: args.tol, seed, ..Default::default() };
            LehtoResult::Check(lehto_check(&m, &field, &a, args.ck, &cfg)?)
        }
        None => LehtoResult::Integral(lehto_integral(&field, &a, args.tol)?),
    };
    finish(&emit("lehto", seed, args, result, start), args.out.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct RenderResult {
    image: PathBuf,
    width: usize,
    height: usize,
    bytes: usize,
}

fn cmd_render(args: &RenderArgs, seed: u64) -> CmdResult {
    let start = Instant::now();
    let map = MapSource::parse(&args.map)?;
    let window = Rect::from_array(parse_reals::<4>(&args.window, "window")?)?;
    let (w, h) = args
        .px
        .split_once('x')
        .and_then(|(w, h)| Some((w.parse::<usize>().ok()?, h.parse::<usize>().ok()?)))
        .ok_or_else(|| Error::InvalidInput(format!("pixel size `{}`: expected <width>x<height>", args.px)))?;
    let mut cfg = RenderConfig::new(window, w, h);
    cfg.sector = match (&args.sector, &map) {
        (Some(s), _) => {
            let (t, b) = s.split_once(',').unwrap_or((s, "0"));
            Some(SectorEdges { theta0: parse_real(t, "sector opening")?, beta: parse_real(b, "sector direction")? })
        }
        (None, MapSource::Sector(m)) => Some(SectorEdges { theta0: m.theta0, beta: 0.0 }),
        _ => None,
    };
    let ppm = render(&map, &cfg)?.to_ppm();
    write_atomic(&args.out, &ppm)?;
    let result = RenderResult { image: args.out.clone(), width: w, height: h, bytes: ppm.len() };
    finish(&emit("render", seed, args, result, start), None)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let outcome = match &cli.command {
        Command::Allowable(a) => cmd_allowable(a, seed),
        Command::Locus(a) => cmd_locus(a, seed),
        Command::Solve(a) => cmd_solve(a, seed),
        Command::Certify(a) => cmd_certify(a, seed),
        Command::Lehto(a) => cmd_lehto(a, seed),
        Command::Render(a) => cmd_render(a, seed),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
