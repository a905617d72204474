use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gapstress::experiments::{
    constants, fit_rate, gap_integral_point, run_sweep, solve_point, Config, ExperimentKind, FitModel, SweepPlan,
};
use gapstress::{Error, Result};

/// Exit status when a run completes but an invariant check fails.
const INVARIANT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "gapstress", version, about = "Gradient blow-up between closely spaced inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// JSON record of the closed-form constants.
    Constants {
        #[command(flatten)]
        common: Common,
    },
    /// Gap integrals over a list of separations, as CSV.
    Gapint {
        #[command(flatten)]
        common: Common,
        /// Weight `1`, `r2` or `xk^2`; overrides the config.
        #[arg(long)]
        weight: Option<String>,
        /// Comma-separated separations; overrides the config.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// One finite element solve with the factor system and field export.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Separation; overrides the config.
        #[arg(long)]
        eps: Option<f64>,
        /// Also estimate the energy constants on this solve.
        #[arg(long)]
        m_star: bool,
    },
    /// Separation sweep of the configured kind.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; sweep points run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Rate fit of one column of a sweep CSV.
    Fit {
        /// Sweep table with an `epsilon` column.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, value_enum, default_value = "power")]
        model: ModelArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Power,
    Log,
}

fn load(common: &Common) -> Result<Config> {
    match &common.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, value).map_err(|e| Error::Io(e.into()))
}

fn print_json<T: Serialize>(value: &T) {
    // a closed pipe on stdout is not an error of the run
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(value).expect("serialisable report"));
}

/// `true` when every invariant held.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Constants { common } => {
            let cfg = load(&common)?;
            let out = constants(&cfg)?;
            write_json(&out_dir(&common.out)?.join("constants.json"), &out)?;
            print_json(&out);
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            Ok(out.m_star.iter().all(|m| !m.flagged))
        }
        Command::Gapint { common, weight, eps } => {
            let mut cfg = load(&common)?;
            if let Some(w) = weight {
                cfg.weight = w;
            }
            let eps = eps.unwrap_or_else(|| cfg.epsilons());
            let path = out_dir(&common.out)?.join("gapint.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.into()))?;
            w.write_record(["epsilon", "value", "error"]).map_err(|e| Error::Io(e.into()))?;
            for e in eps {
                let (value, error) = gap_integral_point(&cfg, e)?;
                println!("{e:e}\t{value:.15e}\t{error:.3e}");
                w.write_record([format!("{e:e}"), format!("{value:.17e}"), format!("{error:e}")])
                    .map_err(|e| Error::Io(e.into()))?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Solve { common, eps, m_star } => {
            let cfg = load(&common)?;
            let eps = eps.unwrap_or(cfg.epsilon);
            let solved = solve_point(&cfg, eps, m_star)?;
            let dir = out_dir(&common.out)?;
            write_json(&dir.join("solve.json"), &solved.report)?;
            solved.u.write_csv(&solved.mesh, BufWriter::new(File::create(dir.join("field.csv"))?))?;
            solved.mesh.write_text(BufWriter::new(File::create(dir.join("mesh.txt"))?))?;
            print_json(&solved.report);
            for v in &solved.report.violations {
                eprintln!("invariant failed: {v}");
            }
            for w in &solved.report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(solved.report.violations.is_empty())
        }
        Command::Sweep { common, jobs } => {
            let cfg = load(&common)?;
            let plan = SweepPlan::from_config(&cfg)?;
            let table = run_sweep(&plan, jobs)?;
            let observable = match plan.kind {
                ExperimentKind::ConductivityBlowup | ExperimentKind::LameBlowup => Some("grad_center"),
                ExperimentKind::FactorConvergence => Some("factor_error"),
                _ => None,
            };
            let fit = observable.map(|c| fit_rate(&table.column(c), FitModel::Power));
            let dir = out_dir(&common.out)?;
            table.write_csv(BufWriter::new(File::create(dir.join("sweep.csv"))?))?;
            #[derive(Serialize)]
            struct SweepOutput<'a> {
                plan: &'a SweepPlan,
                table: &'a gapstress::experiments::SweepTable,
                fit_column: Option<&'a str>,
                fit: Option<gapstress::experiments::RateFit>,
                fit_error: Option<String>,
            }
            let (fit, fit_error) = match fit {
                Some(Ok(f)) => (Some(f), None),
                Some(Err(e)) => (None, Some(e.to_string())),
                None => (None, None),
            };
            let output = SweepOutput { plan: &plan, table: &table, fit_column: observable, fit, fit_error };
            write_json(&dir.join("sweep.json"), &output)?;
            table.write_csv(std::io::stdout())?;
            if let (Some(c), Some(f)) = (observable, &output.fit) {
                println!("fit {c}: slope {:.4}, intercept {:.4}, rms {:.2e}", f.slope, f.intercept, f.rms);
            }
            let failures = table.failures();
            for f in &failures {
                eprintln!("invariant failed: {f}");
            }
            if let Some(e) = &output.fit_error {
                eprintln!("fit failed: {e}");
            }
            Ok(failures.is_empty() && output.fit_error.is_none())
        }
        Command::Fit { input, column, model, out } => {
            let model = match model {
                ModelArg::Power => FitModel::Power,
                ModelArg::Log => FitModel::Log,
            };
            let table = read_column(&input, &column)?;
            let fit = fit_rate(&table, model)?;
            if let Some(dir) = out {
                write_json(&out_dir(&dir)?.join("fit.json"), &fit)?;
            }
            print_json(&fit);
            Ok(true)
        }
    }
}

fn read_column(path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let headers = r.headers().map_err(|e| Error::Io(e.into()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{} has no column {name:?}", path.display())))
    };
    let (ie, iv) = (find("epsilon")?, find(column)?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Io(e.into()))?;
        let (e, v) = (rec.get(ie).unwrap_or(""), rec.get(iv).unwrap_or(""));
        if v.is_empty() {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in {column}")));
        out.push((parse(e)?, parse(v)?));
    }
    Ok(out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(INVARIANT_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
