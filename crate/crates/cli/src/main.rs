//! `quasieq` command-line tool.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical
//! breakdown, 3 grid oracle unavailable.

mod config;
mod plot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use quasieq::io::{write_trace_csv, Summary};
use quasieq::problems::random_fractional;
use quasieq::verify::{self, ProbeReport, ResidualReport};
use quasieq::{Error, Point, Status};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "quasieq", version, about = "Linesearch extragradient solver for quasiconvex equilibrium problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.trace`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Overrides `output.summary`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Solve `count` random instances of size `n`.
    Bench {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        /// Instance i uses seed `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Aggregate CSV.
        #[arg(long)]
        out: PathBuf,
        /// Per-instance CSV; defaults to `<out stem>_instances.csv`.
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Grid residuals and a quasiconvexity probe at a point.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG chart of the two error series of a trace.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the plotted series as CSV.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::GridTooLarge { .. } | Error::OracleUnavailable(_) => 3,
            Error::Domain(_) | Error::ZeroSubgradient { .. } | Error::LinesearchExhausted { .. } => 2,
            Error::InvalidArgument(_) | Error::InvalidSchedule(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::config(format!("{}: {e}", path.display()))
}

fn check_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Failure::config(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_run(config: &Path, trace: Option<PathBuf>, summary: Option<PathBuf>) -> Result<u8, Failure> {
    let cfg = RunConfig::load(config).map_err(Failure::config)?;
    let inst = cfg.instance().map_err(Failure::config)?;
    let trace = trace.or(cfg.output.trace.clone());
    let summary = summary.or(cfg.output.summary.clone());
    for p in trace.iter().chain(&summary) {
        check_parent(p)?;
    }

    let start = Instant::now();
    let result = quasieq::solve(inst.bifunction(), &inst.set, &inst.x0, &inst.config)?;
    let wall = start.elapsed().as_secs_f64();

    if let Some(path) = &trace {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        write_trace_csv(&mut w, inst.dim(), &result.trace).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    let report = Summary::new(&inst.name, &result, wall);
    let json = to_json(&report);
    if let Some(path) = &summary {
        write_file(path, &json)?;
    }
    print!("{json}");
    if result.start_projected {
        eprintln!("warning: x0 was outside the feasible set and was projected");
    }
    if result.status.is_breakdown() {
        eprintln!("{}: {}", result.status, result.status.note());
        return Ok(2);
    }
    Ok(0)
}

struct BenchRow {
    index: usize,
    seed: u64,
    status: Result<Status, String>,
    iterations: usize,
    wall: f64,
    error: f64,
}

fn cmd_bench(
    n: usize,
    count: usize,
    seed: u64,
    out: &Path,
    instances: Option<PathBuf>,
    max_iters: Option<usize>,
) -> Result<u8, Failure> {
    if n == 0 || count == 0 {
        return Err(Failure::config("n and count must be >= 1"));
    }
    if max_iters == Some(0) {
        return Err(Failure::config("max-iters must be >= 1"));
    }
    let instances = instances.unwrap_or_else(|| {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{stem}_instances.csv"))
    });
    check_parent(out)?;
    check_parent(&instances)?;

    let rows: Vec<BenchRow> = (0..count)
        .into_par_iter()
        .map(|index| {
            let seed = seed.wrapping_add(index as u64);
            let start = Instant::now();
            let outcome = random_fractional(n, seed).and_then(|mut inst| {
                inst.config.record_trace = false;
                if let Some(m) = max_iters {
                    inst.config.max_iters = m;
                }
                quasieq::solve(inst.bifunction(), &inst.set, &inst.x0, &inst.config)
            });
            let wall = start.elapsed().as_secs_f64();
            match outcome {
                Ok(r) => BenchRow {
                    index,
                    seed,
                    status: Ok(r.status),
                    iterations: r.iterations,
                    wall,
                    error: r.final_error(),
                },
                Err(e) => BenchRow {
                    index,
                    seed,
                    status: Err(e.to_string()),
                    iterations: 0,
                    wall,
                    error: f64::NAN,
                },
            }
        })
        .collect();

    let ok: Vec<&BenchRow> = rows
        .iter()
        .filter(|r| matches!(r.status, Ok(s) if !s.is_breakdown()))
        .collect();
    let failures = rows.len() - ok.len();
    let mean = |v: Vec<f64>| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let mut errors: Vec<f64> = ok.iter().map(|r| r.error).collect();
    errors.sort_by(f64::total_cmp);
    let median = match errors.len() {
        0 => f64::NAN,
        m if m % 2 == 1 => errors[m / 2],
        m => 0.5 * (errors[m / 2 - 1] + errors[m / 2]),
    };
    let e = |v: f64| format!("{v:.16e}");

    let mut agg = csv::Writer::from_path(out).map_err(|e| Failure::config(e.to_string()))?;
    let csv_err = |e: csv::Error| Failure::config(e.to_string());
    agg.write_record(["n", "count", "failures", "mean_wall_time_s", "mean_error", "median_error"])
        .map_err(csv_err)?;
    agg.write_record([
        n.to_string(),
        count.to_string(),
        failures.to_string(),
        e(mean(ok.iter().map(|r| r.wall).collect())),
        e(mean(errors.clone())),
        e(median),
    ])
    .map_err(csv_err)?;
    agg.flush().map_err(io_err(out))?;

    let mut per = csv::Writer::from_path(&instances).map_err(|e| Failure::config(e.to_string()))?;
    per.write_record(["index", "seed", "status", "iterations", "wall_time_s", "error"])
        .map_err(csv_err)?;
    for r in &rows {
        let status = match &r.status {
            Ok(s) => s.as_str().to_string(),
            Err(msg) => format!("error: {msg}"),
        };
        per.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            status,
            r.iterations.to_string(),
            e(r.wall),
            if r.error.is_finite() { e(r.error) } else { String::new() },
        ])
        .map_err(csv_err)?;
    }
    per.flush().map_err(io_err(&instances))?;
    println!(
        "n={n} count={count} failures={failures} mean_error={:e} median_error={median:e}",
        mean(errors)
    );
    Ok(0)
}

#[derive(Serialize)]
struct VerifyReport {
    problem: String,
    point: Point,
    rho: f64,
    resolution: f64,
    gap: ResidualReport,
    quasi_residual: ResidualReport,
    dual_residual: ResidualReport,
    probe: ProbeReport,
}

fn parse_point(s: &str) -> Result<Point, Failure> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::config(format!("cannot parse point `{s}`")))?;
    Point::new(coords).map_err(Failure::from)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    config: &Path,
    point: &str,
    rho: f64,
    resolution: f64,
    samples: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, Failure> {
    let cfg = RunConfig::load(config).map_err(Failure::config)?;
    let inst = cfg.instance().map_err(Failure::config)?;
    let x = parse_point(point)?;
    x.check_dim(inst.dim())?;
    if !inst.set.contains(&x, 1e-9)? {
        return Err(Failure::config(format!("point {x} is outside the feasible set")));
    }
    if let Some(p) = &out {
        check_parent(p)?;
    }
    let f = inst.bifunction();
    let report = VerifyReport {
        problem: inst.name.clone(),
        gap: verify::gap(f, &inst.set, &x, resolution)?,
        quasi_residual: verify::quasi_residual(f, &inst.set, &x, rho, resolution)?,
        dual_residual: verify::dual_residual(f, &inst.set, &x, resolution)?,
        probe: verify::quasiconvexity_probe(f, &inst.set, &x, samples, seed)?,
        point: x,
        rho,
        resolution,
    };
    let json = to_json(&report);
    match &out {
        Some(p) => write_file(p, &json)?,
        None => print!("{json}"),
    }
    Ok(0)
}

fn cmd_plot(trace: &Path, out: &Path, data: Option<PathBuf>) -> Result<u8, Failure> {
    let file = File::open(trace).map_err(io_err(trace))?;
    let rows = plot::read_trace(file).map_err(|e| Failure::config(format!("{}: {e}", trace.display())))?;
    check_parent(out)?;
    let title = trace
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_file(out, &plot::render_svg(&rows, &title))?;
    if let Some(p) = &data {
        write_file(p, &plot::plot_data_csv(&rows))?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            trace,
            summary,
        } => cmd_run(&config, trace, summary),
        Command::Bench {
            n,
            count,
            seed,
            out,
            instances,
            max_iters,
        } => cmd_bench(n, count, seed, &out, instances, max_iters),
        Command::Verify {
            config,
            point,
            rho,
            resolution,
            samples,
            seed,
            out,
        } => cmd_verify(&config, &point, rho, resolution, samples, seed, out),
        Command::Plot { trace, out, data } => cmd_plot(&trace, &out, data),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
