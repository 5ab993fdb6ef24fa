//! `tiltcert`: reproducible batch runs of the certification toolkit.
//!
//! Every command writes its outputs plus a `manifest.json` into an
//! append-only directory (`out/<command>/<timestamp>/` unless overridden),
//! and re-running with the manifest's parameters reproduces the outputs
//! bit-exactly. Exit codes: 0 success, 1 usage error, 2 check failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tiltcert_core::bell::TiltParameter;
use tiltcert_core::bounds::{emit_comparison, read_comparison_points, BoundFunction};
use tiltcert_core::certifier::{grid_scan, GridSpec};
use tiltcert_core::counterexample::{
    build_state, check_lemma_cq_channel, check_lemma_spectrum, check_lemma_triangle, chsh_value,
    chsh_value_closed, phi_plus, CheckReport,
};
use tiltcert_core::report::{
    fmt_float, write_checks_csv, write_checks_jsonl, write_comparison_csv, write_grid_cells_csv,
    write_grid_csv, write_points_csv,
};
use tiltcert_core::search::{extractability_lower_bound, SearchConfig};

#[derive(Parser)]
#[command(
    name = "tiltcert",
    version,
    about = "Self-testing certificates for tilted-CHSH violations"
)]
struct Cli {
    /// Worker threads for parallel scans (default: TILTCERT_THREADS or all
    /// cores). Never changes numeric output, only wall-clock time.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (default: out/<command>/<timestamp>)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the certificate operator over a measurement-angle grid
    Certify(CertifyArgs),
    /// Solve the bound constants for one tilt and emit comparison tables
    Bounds(BoundsArgs),
    /// Build the threshold counterexample and verify its claims
    Counterexample(CounterexampleArgs),
    /// Run the three auxiliary lemma property suites
    Lemmas(LemmasArgs),
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    /// The published evidence grid: alpha 0..1.999 step 0.001, 100 x 200
    /// angle nodes
    #[arg(long, conflicts_with_all = ["alpha", "alpha_min", "alpha_max", "alpha_step"])]
    paper_grid: bool,

    /// Scan a single tilt value
    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,

    #[arg(long, default_value_t = 1.999)]
    alpha_max: f64,

    #[arg(long, default_value_t = 0.001)]
    alpha_step: f64,

    /// Alice angle nodes spanning [0, pi/4]
    #[arg(long, default_value_t = 100)]
    a_points: usize,

    /// Bob angle nodes spanning [0, pi/2]
    #[arg(long, default_value_t = 200)]
    b_points: usize,

    /// Certificate passes iff the global minimum eigenvalue stays above
    /// this
    #[arg(long, default_value_t = -5e-9, allow_hyphen_values = true)]
    threshold: f64,

    /// Also write every grid cell (large)
    #[arg(long)]
    full_dump: bool,
}

#[derive(Args, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,

    /// Also write the comparison table to this exact path
    #[arg(long)]
    emit_csv: Option<PathBuf>,

    /// Rows in the comparison table
    #[arg(long, default_value_t = 200)]
    resolution: usize,

    /// External comparison points (`beta value` lines, `#` comments)
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CounterexampleArgs {
    /// Centre weight
    #[arg(long, default_value_t = 1.0 / 597.0)]
    v: f64,

    /// Channel-search restarts
    #[arg(long, default_value_t = 200)]
    restarts: u64,

    #[arg(long, default_value_t = 2024)]
    seed: u64,

    /// The search must not clear 1/2 by more than this
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,

    /// Triangle-inequality suite samples
    #[arg(long, default_value_t = 20_000)]
    samples_triangle: u64,

    /// Classical-quantum reduction suite samples
    #[arg(long, default_value_t = 500)]
    samples_cq: u64,

    /// Contraction-spectrum suite samples
    #[arg(long, default_value_t = 2_000)]
    samples_spectrum: u64,
}

#[derive(Args, Serialize)]
struct LemmasArgs {
    /// Samples per suite
    #[arg(long)]
    samples: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    parameters: serde_json::Value,
    seed: u64,
    version: String,
    threads: Option<usize>,
    duration_secs: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version are not usage errors
            use clap::error::ErrorKind::*;
            let _ = e.print();
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }

    let started = Instant::now();
    let result = match &cli.command {
        Command::Certify(args) => cmd_certify(&cli, args, started),
        Command::Bounds(args) => cmd_bounds(&cli, args, started),
        Command::Counterexample(args) => cmd_counterexample(&cli, args, started),
        Command::Lemmas(args) => cmd_lemmas(&cli, args, started),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("TILTCERT_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| anyhow!("TILTCERT_THREADS must be an integer, got `{v}`"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the thread pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: Option<usize>) -> anyhow::Result<()> {
    Ok(())
}

fn make_out_dir(cli: &Cli, command: &str) -> anyhow::Result<PathBuf> {
    let dir = match &cli.out_dir {
        Some(d) => d.clone(),
        None => {
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .expect("clock after epoch")
                .as_secs();
            let base = PathBuf::from("out").join(command);
            let mut candidate = base.join(stamp.to_string());
            let mut k = 1u32;
            while candidate.exists() {
                candidate = base.join(format!("{stamp}-{k}"));
                k += 1;
            }
            candidate
        }
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_manifest(
    dir: &Path,
    command: &str,
    parameters: serde_json::Value,
    seed: u64,
    threads: Option<usize>,
    started: Instant,
) -> anyhow::Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    let file = File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(())
}

fn cmd_certify(cli: &Cli, args: &CertifyArgs, started: Instant) -> anyhow::Result<u8> {
    let spec = if args.paper_grid {
        GridSpec::paper()
    } else if let Some(alpha) = args.alpha {
        GridSpec::single_alpha(alpha, args.a_points, args.b_points).map_err(|e| anyhow!("{e}"))?
    } else {
        GridSpec::new(
            args.alpha_min,
            args.alpha_max,
            args.alpha_step,
            args.a_points,
            args.b_points,
        )
        .map_err(|e| anyhow!("{e}"))?
    };

    let dir = make_out_dir(cli, "certify")?;
    let report = grid_scan(&spec).map_err(|e| anyhow!("{e}"))?;

    let grid_file = File::create(dir.join("grid.csv"))?;
    write_grid_csv(&report, BufWriter::new(grid_file))?;
    if args.full_dump {
        let cells_file = File::create(dir.join("cells.csv"))?;
        write_grid_cells_csv(&spec, BufWriter::new(cells_file)).map_err(|e| anyhow!("{e}"))?;
    }
    write_manifest(
        &dir,
        "certify",
        serde_json::to_value(args)?,
        0,
        cli.threads,
        started,
    )?;

    println!("cells {}", report.cells_evaluated);
    println!("global_min {}", fmt_float(report.global_min));
    println!(
        "argmin alpha {} a_index {} b_index {} a {} b {}",
        fmt_float(report.argmin.alpha),
        report.argmin.a_index,
        report.argmin.b_index,
        fmt_float(report.argmin.a),
        fmt_float(report.argmin.b)
    );
    println!("wrote {}", dir.display());

    if report.global_min >= args.threshold {
        println!("certificate PASS (threshold {})", fmt_float(args.threshold));
        Ok(0)
    } else {
        println!("certificate FAIL (threshold {})", fmt_float(args.threshold));
        Ok(2)
    }
}

fn cmd_bounds(cli: &Cli, args: &BoundsArgs, started: Instant) -> anyhow::Result<u8> {
    let alpha = TiltParameter::new(args.alpha).map_err(|e| anyhow!("{e}"))?;
    let bound = BoundFunction::for_alpha(alpha).map_err(|e| anyhow!("{e}"))?;
    let table = emit_comparison(&bound, args.resolution).map_err(|e| anyhow!("{e}"))?;

    let points = match &args.points {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Some(read_comparison_points(BufReader::new(file)).map_err(|e| anyhow!("{e}"))?)
        }
        None => None,
    };

    let dir = make_out_dir(cli, "bounds")?;
    let file = File::create(dir.join("comparison.csv"))?;
    write_comparison_csv(&table, BufWriter::new(file))?;
    if let Some(path) = &args.emit_csv {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_comparison_csv(&table, BufWriter::new(file))?;
    }
    if let Some(points) = &points {
        let file = File::create(dir.join("points.csv"))?;
        write_points_csv(points, BufWriter::new(file))?;
    }
    write_manifest(
        &dir,
        "bounds",
        serde_json::to_value(args)?,
        0,
        cli.threads,
        started,
    )?;

    println!("alpha {}", fmt_float(args.alpha));
    println!("s {}", fmt_float(bound.constants().s()));
    println!("mu {}", fmt_float(bound.constants().mu()));
    println!("beta_c {}", fmt_float(bound.beta_c()));
    println!("beta_q {}", fmt_float(bound.beta_q()));
    println!("beta_star {}", fmt_float(bound.threshold()));
    println!("lambda0_sq {}", fmt_float(bound.lambda0_sq()));
    if let Some(points) = &points {
        println!("external_points {}", points.len());
    }
    println!("wrote {}", dir.display());
    Ok(0)
}

fn print_check(report: &CheckReport) {
    println!(
        "{} samples {} worst_slack {} violations {}",
        report.name,
        report.samples,
        fmt_float(report.worst_slack),
        report.violations
    );
    if !report.passed() {
        println!(
            "{} offending sample: stream index {} (rerun with the manifest seed to reproduce)",
            report.name, report.worst_index
        );
    }
}

fn cmd_counterexample(
    cli: &Cli,
    args: &CounterexampleArgs,
    started: Instant,
) -> anyhow::Result<u8> {
    if args.restarts == 0 {
        return Err(anyhow!("--restarts must be at least 1"));
    }
    let state = build_state(args.v).map_err(|e| anyhow!("{e}"))?;
    let beta_direct = chsh_value(&state);
    let beta_closed = chsh_value_closed(args.v);
    println!("v {}", fmt_float(args.v));
    println!("beta_closed {}", fmt_float(beta_closed));
    println!("beta_direct {}", fmt_float(beta_direct));
    let beta_ok = (beta_direct - beta_closed).abs() <= 1e-12;

    let checks = vec![
        check_lemma_triangle(args.samples_triangle, args.seed),
        check_lemma_cq_channel(args.samples_cq, args.seed),
        check_lemma_spectrum(args.samples_spectrum, args.seed),
    ];
    for report in &checks {
        print_check(report);
    }
    let lemmas_ok = checks.iter().all(CheckReport::passed);

    let cfg = SearchConfig {
        restarts: args.restarts,
        seed: args.seed,
        ..SearchConfig::default()
    };
    let outcome = extractability_lower_bound(state.rho(), &phi_plus(), (3, 3), &cfg)
        .map_err(|e| anyhow!("{e}"))?;
    println!(
        "search_best {} restart {} of {}",
        fmt_float(outcome.best_value),
        outcome.best_restart,
        args.restarts
    );
    let search_ok = outcome.best_value <= 0.5 + args.tolerance;

    let dir = make_out_dir(cli, "counterexample")?;
    let file = File::create(dir.join("checks.csv"))?;
    write_checks_csv(&checks, BufWriter::new(file))?;
    let file = File::create(dir.join("checks.jsonl"))?;
    write_checks_jsonl(&checks, BufWriter::new(file))?;
    let mut summary = BufWriter::new(File::create(dir.join("summary.csv"))?);
    writeln!(summary, "quantity,value")?;
    writeln!(summary, "beta_closed,{}", fmt_float(beta_closed))?;
    writeln!(summary, "beta_direct,{}", fmt_float(beta_direct))?;
    writeln!(summary, "search_best,{}", fmt_float(outcome.best_value))?;
    drop(summary);
    write_manifest(
        &dir,
        "counterexample",
        serde_json::to_value(args)?,
        args.seed,
        cli.threads,
        started,
    )?;
    println!("wrote {}", dir.display());

    let ok = beta_ok && lemmas_ok && search_ok;
    println!(
        "counterexample {} (beta {}, lemmas {}, search {})",
        if ok { "PASS" } else { "FAIL" },
        if beta_ok { "ok" } else { "mismatch" },
        if lemmas_ok { "ok" } else { "violated" },
        if search_ok { "ok" } else { "exceeded 1/2" },
    );
    Ok(if ok { 0 } else { 2 })
}

fn cmd_lemmas(cli: &Cli, args: &LemmasArgs, started: Instant) -> anyhow::Result<u8> {
    if args.samples == 0 {
        return Err(anyhow!("--samples must be at least 1"));
    }
    let checks = vec![
        check_lemma_triangle(args.samples, args.seed),
        check_lemma_cq_channel(args.samples, args.seed),
        check_lemma_spectrum(args.samples, args.seed),
    ];
    for report in &checks {
        print_check(report);
    }
    let dir = make_out_dir(cli, "lemmas")?;
    let file = File::create(dir.join("checks.csv"))?;
    write_checks_csv(&checks, BufWriter::new(file))?;
    let file = File::create(dir.join("checks.jsonl"))?;
    write_checks_jsonl(&checks, BufWriter::new(file))?;
    write_manifest(
        &dir,
        "lemmas",
        serde_json::to_value(args)?,
        args.seed,
        cli.threads,
        started,
    )?;
    println!("wrote {}", dir.display());

    if checks.iter().all(CheckReport::passed) {
        println!("lemmas PASS");
        Ok(0)
    } else {
        println!("lemmas FAIL");
        Ok(2)
    }
}
