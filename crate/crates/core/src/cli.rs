//! The `cantor-lp` command-line tool.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::fourier::{envelope, mu_hat};
use crate::measure::{construct, CubeMeasure, MeasureDocument};
use crate::output::{csv_bytes, sweep_csv, sweep_svg, write_atomic, write_json};
use crate::rng::Substream;
use crate::verify::{run_suite, Status, SuiteReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "cantor-lp",
    version,
    about = "Random Cantor measures with L_p Fourier transforms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; missing fields take reference values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the tree and one realization of mu_K.
    Build,
    /// Evaluate the transform of a measure file on a frequency grid.
    Spectrum {
        measure: PathBuf,
        /// `lo:hi:n` on every axis.
        #[arg(long, conflicts_with = "random", allow_hyphen_values = true)]
        grid: Option<String>,
        /// Number of uniformly random frequencies in `[-max, max]^d`.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 50.0)]
        max: f64,
    },
    /// Run the verification suite.
    Verify,
    /// Summarize a previously written report.
    Report {
        /// Report file (default: `<out>/report.json`).
        report: Option<PathBuf>,
    },
}

fn exit_code_of(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return EXIT_CONFIG;
        }
        // Fails only when a pool already exists, e.g. under a test harness.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
    let result = match &cli.command {
        Command::Build => load(&cli).and_then(|c| cmd_build(&c).map(|_| EXIT_PASS)),
        Command::Spectrum {
            measure,
            grid,
            random,
            max,
        } => cmd_spectrum(&cli, measure, grid.as_deref(), *random, *max).map(|_| EXIT_PASS),
        Command::Verify => load(&cli).and_then(|c| cmd_verify(&c, cli.format)),
        Command::Report { report } => cmd_report(&cli, report.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_of(&e)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    RunConfig::load(
        cli.config.as_deref(),
        &Overrides {
            seed: cli.seed,
            output_dir: cli.out.clone(),
        },
    )
}

/// Writes `tree.json`, `measure.json`, `shifts.json` and the resolved
/// `config.json` into the output directory.
pub fn cmd_build(cfg: &RunConfig) -> Result<()> {
    let seq = cfg.sequence()?;
    let r = construct(&seq, cfg.seed, &cfg.omega_choice())?;
    let dir = &cfg.output_dir;
    write_json(&dir.join("tree.json"), &r.tree.to_document())?;
    write_json(&dir.join("measure.json"), &r.measure.to_document())?;
    write_json(&dir.join("shifts.json"), &r.shifts)?;
    write_json(&dir.join("config.json"), &cfg.to_report_value())?;
    println!(
        "built K = {} with {} atoms into {}",
        seq.steps,
        r.measure.atoms().len(),
        dir.display()
    );
    Ok(())
}

fn read_measure(path: &Path) -> Result<CubeMeasure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let doc: MeasureDocument = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    CubeMeasure::from_document(&doc)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("grid must be lo:hi:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !(lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

#[derive(Serialize)]
struct SpectrumRow {
    xi: Vec<f64>,
    re: f64,
    im: f64,
    abs: f64,
    envelope: f64,
}

fn cmd_spectrum(
    cli: &Cli,
    path: &Path,
    grid: Option<&str>,
    random: Option<usize>,
    max: f64,
) -> Result<()> {
    let mu = read_measure(path)?;
    let d = mu.dim();
    let points: Vec<Vec<f64>> = match random {
        Some(n) => {
            if !(max > 0.0 && max.is_finite()) {
                return Err(Error::Config("--max must be positive".into()));
            }
            let mut rng = Substream::root(cli.seed.unwrap_or(1))
                .named("spectrum")
                .rng();
            (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-max..=max)).collect())
                .collect()
        }
        None => {
            let axis = parse_grid(grid.unwrap_or("-8:8:33"))?;
            let mut pts = vec![Vec::new()];
            for _ in 0..d {
                pts = pts
                    .into_iter()
                    .flat_map(|p| {
                        axis.iter().map(move |&t| {
                            let mut q = p.clone();
                            q.push(t);
                            q
                        })
                    })
                    .collect();
            }
            pts
        }
    };
    let rows: Vec<SpectrumRow> = points
        .into_iter()
        .map(|xi| {
            let z = mu_hat(&mu, &xi);
            let envelope = envelope(&mu, &xi);
            SpectrumRow {
                xi,
                re: z.re,
                im: z.im,
                abs: z.norm(),
                envelope,
            }
        })
        .collect();
    let bytes = match cli.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&rows)?;
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut header: Vec<String> = (1..=d).map(|j| format!("xi_{j}")).collect();
            header.extend(["re", "im", "abs", "envelope"].map(String::from));
            let table: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let mut v = r.xi.clone();
                    v.extend([r.re, r.im, r.abs, r.envelope]);
                    v
                })
                .collect();
            csv_bytes(&header, &table)?
        }
    };
    match &cli.out {
        Some(dir) => {
            let ext = if cli.format == Format::Json {
                "json"
            } else {
                "csv"
            };
            write_atomic(&dir.join(format!("spectrum.{ext}")), &bytes)?;
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

/// Report, sweep tables and plots for one report into `dir`.
pub fn write_report_files(report: &SuiteReport, dir: &Path) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    for c in &report.checks {
        for s in &c.sweeps {
            let stem = format!("{}__{}", c.name, s.name);
            write_atomic(
                &dir.join("tables").join(format!("{stem}.csv")),
                &sweep_csv(s)?,
            )?;
            if let Some(svg) = sweep_svg(s, &stem) {
                write_atomic(
                    &dir.join("plots").join(format!("{stem}.svg")),
                    svg.as_bytes(),
                )?;
            }
        }
    }
    Ok(())
}

fn status_label(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Inconclusive => "INCONCLUSIVE",
        Status::Skipped => "SKIPPED",
        Status::Error => "ERROR",
    }
}

fn print_summary(report: &SuiteReport, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            let rows: Vec<_> = report
                .checks
                .iter()
                .map(|c| serde_json::json!({"name": c.name, "status": c.status, "pass": c.pass}))
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
        Format::Csv => {
            for c in &report.checks {
                let first = c.details.first().map(String::as_str).unwrap_or("");
                println!("{:<28} {:<12} {first}", c.name, status_label(c.status));
            }
        }
    }
    Ok(())
}

/// Runs the configured checks and writes the report. The exit code follows
/// the report; `timings.json` holds the wall-clock times.
pub fn cmd_verify(cfg: &RunConfig, format: Format) -> Result<i32> {
    let ctx = cfg.context()?;
    let run = run_suite(&cfg.suite, &ctx, cfg.to_report_value());
    write_report_files(&run.report, &cfg.output_dir)?;
    write_json(&cfg.output_dir.join("timings.json"), &run.timings)?;
    print_summary(&run.report, format)?;
    Ok(run.report.exit_code())
}

fn cmd_report(cli: &Cli, path: Option<&Path>) -> Result<i32> {
    let default = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
        .join("report.json");
    let path = path.unwrap_or(&default);
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let report: SuiteReport = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(dir) = &cli.out {
        write_report_files(&report, dir)?;
    }
    print_summary(&report, cli.format)?;
    Ok(report.exit_code())
}
