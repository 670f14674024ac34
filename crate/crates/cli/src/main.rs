use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use projgeo::geodesic::{geodesic_report, GeodesicError, GeodesicSegment};
use projgeo::numkernel::random::seeded_rng;
use projgeo::projection::{
    halmos_decompose, pair_with_dims_rng, random_angles, random_pair, random_projection_with, HalmosDims, PairFile,
};
use projgeo::report::write_json;
use projgeo::verify::{run_suite, Suite};
use projgeo::Tolerance;

/// Environment variable overriding the rank threshold.
const TOL_RANK_VAR: &str = "PROJGEO_TOL_RANK";

/// Exit status for an unknown verification suite.
const EXIT_USAGE: u8 = 64;
/// Exit status when the pair admits no geodesic.
const EXIT_NO_GEODESIC: u8 = 2;

#[derive(Parser)]
#[command(name = "projgeo", version, about = "Geodesics between orthogonal projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pair of projections and write it as JSON.
    Gen(GenArgs),
    /// Compute the minimal geodesic for a pair file.
    Geodesic(GeodesicArgs),
    /// Run a seeded verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Ambient dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Five-space dimensions dim11,dim00,dim10,dim01,dimgen.
    #[arg(long, value_delimiter = ',', conflicts_with = "ranks")]
    dims: Option<Vec<usize>>,
    /// Independent random ranks of P and Q (needs --dim).
    #[arg(long, value_delimiter = ',', requires = "dim")]
    ranks: Option<Vec<usize>>,
    /// Principal angles of the generic part, in radians.
    #[arg(long, value_delimiter = ',', conflicts_with = "ranks")]
    angles: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeodesicArgs {
    /// Pair file written by `gen`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Grid points for the chordal length and the CSV samples.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Write `t` and the entries of the geodesic at each sample.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Seed of the conjugation used by the uniqueness check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold on each trial residual (suite default if absent).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = tolerance().and_then(|tol| match cli.command {
        Command::Gen(args) => cmd_gen(args, &tol),
        Command::Geodesic(args) => cmd_geodesic(args, &tol),
        Command::Verify(args) => cmd_verify(args, &tol),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn tolerance() -> Result<Tolerance> {
    let tol = Tolerance::default();
    match std::env::var(TOL_RANK_VAR) {
        Ok(v) => {
            let r: f64 = v.trim().parse().with_context(|| format!("{TOL_RANK_VAR}={v} is not a number"))?;
            Ok(tol.with_rank_rtol(r)?)
        }
        Err(_) => Ok(tol),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = output(path)?;
    write_json(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_gen(args: GenArgs, tol: &Tolerance) -> Result<ExitCode> {
    let mut rng = seeded_rng(args.seed);
    let (p, q) = match (&args.dims, &args.ranks) {
        (Some(d), _) => {
            if d.len() != 5 {
                bail!("--dims takes 5 values, got {}", d.len());
            }
            let dims = HalmosDims::new(d[0], d[1], d[2], d[3], d[4]);
            if let Some(n) = args.dim {
                if n != dims.total() {
                    bail!("--dim {n} disagrees with --dims summing to {}", dims.total());
                }
            }
            let angles = match &args.angles {
                Some(a) => a.clone(),
                None => random_angles(dims.dimgen / 2, &mut rng),
            };
            pair_with_dims_rng(dims, &angles, &mut rng)?
        }
        (None, Some(r)) => {
            let n = args.dim.expect("clap enforces --dim with --ranks");
            if r.len() != 2 {
                bail!("--ranks takes 2 values, got {}", r.len());
            }
            if r[0] > n || r[1] > n {
                bail!("ranks {},{} exceed dimension {n}", r[0], r[1]);
            }
            (random_projection_with(n, r[0], &mut rng)?, random_projection_with(n, r[1], &mut rng)?)
        }
        (None, None) => {
            let Some(n) = args.dim else { bail!("give --dim, --dims or --dim with --ranks") };
            if args.angles.is_some() {
                bail!("--angles needs --dims");
            }
            random_pair(n, true, &mut rng)
        }
    };
    let fs = halmos_decompose(&p, &q, tol)?;
    let d = fs.dims().as_array();
    let index = fs.index();
    eprintln!(
        "dims {},{},{},{},{} index ({},{})",
        d[0], d[1], d[2], d[3], d[4], index.d_plus, index.d_minus
    );
    if !index.is_balanced() {
        eprintln!("warning: index mismatch ({}, {}); no geodesic joins this pair", index.d_plus, index.d_minus);
    }
    emit(args.out.as_deref(), &PairFile { p, q })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_geodesic(args: GeodesicArgs, tol: &Tolerance) -> Result<ExitCode> {
    let file = File::open(&args.input).with_context(|| format!("cannot open {}", args.input.display()))?;
    let pair: PairFile = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{} is not a valid pair file", args.input.display()))?;
    let (seg, report) = match geodesic_report(&pair.p, &pair.q, args.samples, tol, args.seed) {
        Ok(x) => x,
        Err(e @ GeodesicError::NoGeodesic(_)) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(EXIT_NO_GEODESIC));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.csv {
        write_samples(path, &seg, args.samples)?;
    }
    emit(None, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn write_samples(path: &Path, seg: &GeodesicSegment, samples: usize) -> Result<()> {
    let n = seg.base().dim();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut header = vec!["t".to_owned()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re{i}_{j}"));
            header.push(format!("im{i}_{j}"));
        }
    }
    w.write_record(&header)?;
    for k in 0..samples {
        let t = if samples > 1 { k as f64 / (samples - 1) as f64 } else { 0.0 };
        let m = seg.evaluate(t)?.into_matrix();
        let mut row = vec![format!("{t:.16e}")];
        for z in m.as_slice() {
            row.push(format!("{:.16e}", z.re));
            row.push(format!("{:.16e}", z.im));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_verify(args: VerifyArgs, tol: &Tolerance) -> Result<ExitCode> {
    let suite: Suite = match args.suite.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    if let Some(t) = args.tol {
        if !(t >= 0.0 && t.is_finite()) {
            bail!("--tol must be a non-negative number");
        }
    }
    let report = run_suite(suite, args.trials, args.seed, args.tol, tol);
    eprintln!(
        "{}: {} trials, {} failures, worst residual {:e}",
        suite, report.trials, report.failures, report.worst_residual
    );
    emit(args.out.as_deref(), &report)?;
    Ok(if report.failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
