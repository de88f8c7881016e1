use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use minmax_tori::beltrami::{uniformize, MetricField};
use minmax_tori::harmonic::{energy_gap_defect, harmonic_replace, Ball, BallCollection, MapSlice, ReplaceOptions, TargetManifold};
use minmax_tori::periodic::PGrid;
use minmax_tori::pipeline::{
    analyze_sweepout, history_csv, load_sweepout, run_pipeline, save_sweepout, scenario_library, Config,
};
use minmax_tori::sweepout::minmax_drive;
use minmax_tori::{Error, Result};

#[derive(Parser)]
#[command(name = "minmax-tori", version, about = "Min-max sweepouts of tori: uniformization, tightening, bubbling")]
struct Cli {
    /// TOML configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, or a `.json` file for single-report commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uniformize a metric given as a 3-component PGRID1 file (g11, g12, g22).
    Uniformize {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also write `h.pgrid` and `w.pgrid` into the output directory.
        #[arg(long)]
        dump: bool,
    },
    /// Harmonic replacement of a map on a ball collection.
    Replace {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        target: String,
        /// JSON list such as `[{"center": [0.5, 0.5], "radius": 0.2}]`.
        #[arg(long)]
        balls: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Where to write the replaced map as PGRID1.
        #[arg(long)]
        output_map: Option<PathBuf>,
    },
    /// Drive a stored sweepout for a number of rounds.
    Tighten {
        #[arg(long)]
        sweepout: PathBuf,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Bubble and degeneration analysis of a stored sweepout.
    AnalyzeBubbles {
        #[arg(long, alias = "sweepout")]
        slices: PathBuf,
        #[arg(long)]
        eps1: Option<f64>,
    },
    /// Run the whole pipeline on a scenario.
    Run {
        #[arg(long)]
        scenario: Option<String>,
    },
    /// List the scenario library.
    Scenarios,
}

#[derive(Serialize)]
struct UniformizeReport {
    tau_re: f64,
    tau_im: f64,
    residual: f64,
    conformal_defect: Option<f64>,
    iterations: usize,
}

#[derive(Serialize)]
struct ReplaceReport {
    energy_before: f64,
    energy_after: f64,
    gap: f64,
    defect: f64,
    converged: bool,
    sweeps: usize,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

/// Writes to stdout; a closed pipe is not an error.
fn say(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Prints a report and writes it under `--out` when given.
fn emit(report: &impl Serialize, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    say(&format!("{text}\n"))?;
    if let Some(out) = out {
        let file = if out.extension().is_some_and(|e| e == "json") {
            out.to_path_buf()
        } else {
            fs::create_dir_all(out)?;
            out.join(name)
        };
        if let Some(parent) = file.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(file, text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Uniformize { metric, delta, tol, dump } => {
            let grid = PGrid::read(&metric)?;
            if grid.components != 3 {
                return Err(Error::Size(format!("a metric needs 3 components, got {}", grid.components)));
            }
            let g = MetricField::new(grid.rows, grid.cols, grid.component(0), grid.component(1), grid.component(2))?;
            let result = uniformize(&g, delta, tol)?;
            let tau = result.tau();
            let report = UniformizeReport {
                tau_re: tau.re,
                tau_im: tau.im,
                residual: result.residual,
                conformal_defect: result.conformal_defect,
                iterations: result.iterations,
            };
            if dump {
                let dir = out.filter(|p| p.extension().is_none()).unwrap_or(Path::new("."));
                fs::create_dir_all(dir)?;
                let complex = |values: &[num_complex::Complex64]| {
                    let data = values.iter().flat_map(|z| [z.re, z.im]).collect();
                    PGrid::new(grid.rows, grid.cols, 2, tau, data)
                };
                complex(&result.w_grid)?.write(&dir.join("w.pgrid"))?;
                if let Some(h) = &result.h_grid {
                    complex(h)?.write(&dir.join("h.pgrid"))?;
                }
            }
            emit(&report, out, "uniformize.json")
        }
        Command::Replace { map, target, balls, tol, output_map } => {
            let u = MapSlice::from_pgrid(&PGrid::read(&map)?)?;
            let target = TargetManifold::by_name(&target)?;
            let balls: Vec<Ball> = serde_json::from_str(&balls)?;
            let balls = BallCollection::new(balls);
            let opts = ReplaceOptions { tol, ..ReplaceOptions::default() };
            let replaced = harmonic_replace(&u, &target, &balls, &opts)?;
            if let Some(path) = output_map {
                replaced.slice.to_pgrid().write(&path)?;
            }
            let report = ReplaceReport {
                energy_before: replaced.energy_before,
                energy_after: replaced.energy_after,
                gap: replaced.energy_before - replaced.energy_after,
                defect: energy_gap_defect(&u, &replaced.slice),
                converged: replaced.converged,
                sweeps: replaced.sweeps,
            };
            emit(&report, out, "replace.json")
        }
        Command::Tighten { sweepout, rounds } => {
            if let Some(r) = rounds {
                config.rounds = r;
            }
            let (s, target) = load_sweepout(&sweepout)?;
            let history = minmax_drive(&s, &target, &config.drive_options())?;
            fs::create_dir_all(&config.out)?;
            save_sweepout(&history.last, &target, &config.out.join("sweepout"))?;
            let csv = history_csv(&history.rounds);
            fs::write(config.out.join("history.csv"), &csv)?;
            fs::write(config.out.join("rounds.json"), serde_json::to_string_pretty(&history.rounds)?)?;
            say(&csv)?;
            Ok(())
        }
        Command::AnalyzeBubbles { slices, eps1 } => {
            if let Some(e) = eps1 {
                config.eps1 = e;
            }
            config.validate()?;
            let (s, target) = load_sweepout(&slices)?;
            let report = analyze_sweepout(&s, &target, &config)?;
            emit(&report, out, "bubbles.json")
        }
        Command::Run { scenario } => {
            if let Some(name) = scenario {
                config.scenario = name;
            }
            let summary = run_pipeline(&config)?;
            let verdict = serde_json::to_string(&summary.bubbles.verdict)?;
            say(&format!(
                "{}verdict: {verdict}\nartifacts in {}\n",
                history_csv(&summary.history.rounds),
                summary.out.display()
            ))
        }
        Command::Scenarios => {
            let list: String = scenario_library()
                .iter()
                .map(|spec| format!("{:<16}{:<4}{}\n", spec.name, spec.target, spec.description))
                .collect();
            say(&list)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
