use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use vorpoly::experiments::{self, ExperimentConfig, RunReport};
use vorpoly::geometry::svg;
use vorpoly::polyomino::{min_boxes_at_size, SearchOptions};
use vorpoly::{Error, Tessellation};

/// Monte Carlo checks of box-count bounds for Voronoi polyominoes.
#[derive(Parser, Debug)]
#[command(name = "vorpoly", version)]
struct Cli {
    /// Base seed; every replicate derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicates: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a point configuration and write it as text.
    Sample {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Half side of the square window.
        #[arg(long, default_value_t = 10.0)]
        half: f64,
        /// Build the modified process N(n) with this n (needs --delta).
        #[arg(long, requires = "delta")]
        n: Option<u64>,
        #[arg(long, requires = "n")]
        delta: Option<f64>,
        /// Also render the tessellation.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        /// confinement, cluster-product, full-box or modified-invariants
        suite: String,
    },
    /// Estimate tail probabilities over the grid of a config and write CSV.
    Tail {
        /// Write JSON lines instead of CSV.
        #[arg(long)]
        jsonl: bool,
    },
    /// Fit log p_hat against r for each series in a CSV written by `tail`.
    Fit {
        input: PathBuf,
        /// Treat rows differing only in s as one series (runs with s_per_r).
        #[arg(long)]
        pair_s: bool,
    },
    /// Render a sampled tessellation, highlighting a polyomino of size r
    /// with the fewest boxes.
    Svg {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10.0)]
        half: f64,
        #[arg(long, default_value_t = 6)]
        r: usize,
        #[arg(long, default_value_t = 800.0)]
        width: f64,
    },
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidModel(_) | Error::InvalidWindow(_) | Error::Parse(_) | Error::Json(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Failed(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Failed(e.to_string())
    }
}

extern "C" fn on_sigint(_: libc::c_int) {
    experiments::request_stop();
}

fn install_sigint() {
    let handler = on_sigint as extern "C" fn(libc::c_int);
    // SAFETY: the handler only stores to an atomic
    unsafe {
        libc::signal(libc::SIGINT, handler as libc::sighandler_t);
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("VORPOLY_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    warn!("could not size the worker pool: {e}");
                }
            }
            _ => warn!("ignoring VORPOLY_THREADS={v:?}"),
        }
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("tail needs --config <json>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut c: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(r) = cli.replicates {
        c.replicates = r;
    }
    c.validate()?;
    Ok(c)
}

fn summarize(report: &RunReport) {
    for e in &report.estimates {
        if !e.pass {
            eprintln!(
                "bound violated: {} r={:?} s={:?} p_hat={:.4e} bound={:?}",
                e.experiment, e.params.r, e.params.s, e.p_hat, e.bound
            );
        }
    }
    let inv = &report.invariants;
    if inv.sandwich_failures > 0 {
        eprintln!("sandwich failed on {}/{} witnesses", inv.sandwich_failures, inv.polyominoes);
    }
    for (l, f) in &inv.scaling_failures {
        if *f > 0 {
            eprintln!("scaling with L={l} failed on {f}/{} witnesses", inv.polyominoes);
        }
    }
    if report.censored_fraction() > experiments::MAX_CENSORED_FRACTION {
        eprintln!("censored {}/{} replicates", report.censored, report.attempted);
    }
    if report.heuristic_values > 0 {
        eprintln!("{} extremal values came from the beam search", report.heuristic_values);
    }
    if report.interrupted {
        eprintln!("interrupted: results cover {} replicates", report.attempted);
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Sample { lambda, half, n, delta, svg: svg_path } => {
            let modified = n.zip(*delta);
            let points = experiments::sample_points(*lambda, *half, modified, seed)?;
            info!("sampled {} points", points.len());
            if let Some(p) = svg_path {
                let tess = Tessellation::new(points.clone())?;
                std::fs::write(p, svg::render(&tess, &[], 800.0))?;
            }
            let mut out = output(&cli.out)?;
            points.write_text(&mut out)?;
            out.flush()?;
            Ok(true)
        }
        Command::Verify { suite } => {
            let reps = cli.replicates.unwrap_or(1000);
            let report = experiments::verify_suite(suite, reps, seed)?;
            let mut out = output(&cli.out)?;
            writeln!(out, "suite {}", report.suite)?;
            for line in &report.lines {
                writeln!(out, "{line}")?;
            }
            out.flush()?;
            Ok(report.passed)
        }
        Command::Tail { jsonl } => {
            let config = load_config(&cli)?;
            install_sigint();
            let report = experiments::run(&config)?;
            let mut out = output(&cli.out)?;
            if *jsonl {
                report.write_jsonl(&mut out)?;
            } else {
                report.write_csv(&mut out)?;
            }
            out.flush()?;
            summarize(&report);
            Ok(report.passed() && !report.interrupted)
        }
        Command::Fit { input, pair_s } => {
            let text = read(input)?;
            let estimates = experiments::read_csv(&text)?;
            let mut out = output(&cli.out)?;
            writeln!(out, "series,points,slope,intercept,r_squared")?;
            for (key, rows) in experiments::series(&estimates, *pair_s) {
                match experiments::fit_decay(&rows) {
                    Ok(f) => writeln!(out, "{key},{},{:.6},{:.6},{:.6}", f.points, f.slope, f.intercept, f.r_squared)?,
                    Err(e) => writeln!(out, "{key},0,,,  # {e}")?,
                }
            }
            out.flush()?;
            Ok(true)
        }
        Command::Svg { lambda, half, r, width } => {
            let points = experiments::sample_points(*lambda, *half, None, seed)?;
            let tess = Tessellation::new(points)?;
            let best = min_boxes_at_size(&tess, *r, &SearchOptions::default())?;
            let doc = svg::render(&tess, best.witness.generators(), *width);
            let mut out = output(&cli.out)?;
            out.write_all(doc.as_bytes())?;
            out.flush()?;
            info!("highlighted {} tiles meeting {} boxes", r, best.value);
            Ok(true)
        }
    }
}

fn read(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
