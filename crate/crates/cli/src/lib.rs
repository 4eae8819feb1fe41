//! Command-line front end: argument parsing, solver dispatch, output and exit codes.
//!
//! Exit codes: 0 success, 1 infeasible demand or budget too small, 2 bad input,
//! 3 oracle refusal, 4 internal invariant failure (including a result file that
//! fails verification).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use speedscale::dichotomy::{maximize_throughput, Status};
use speedscale::dp_agreeable::solve_agreeable;
use speedscale::dp_equal::solve_equal;
use speedscale::io::{generate, parse_items, read_instance, CsvRow, GenKind, GenParams, InstanceFile, ResultFile};
use speedscale::primal_dual::solve;
use speedscale::scalar::{self, Rat, Scalar};
use speedscale::{Error, Instance};
use speedscale_oracle::{opt_nonpreemptive, opt_preemptive, phi_grid, theta_grid, OracleBudget, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_ORACLE_REFUSED: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "speedscale",
    version,
    about = "Throughput/energy scheduling on speed-scalable machines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance files, or directories whose `*.json` files are all run.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the result here (a directory when several instances are run).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print one CSV summary row per run instead of the JSON result.
    #[arg(long)]
    pub csv: bool,
    /// Allow a non-integer alpha, computing powers in floating point.
    #[arg(long)]
    pub float: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridChoice {
    /// Equal-volume grid when all volumes agree, otherwise the agreeable grid.
    Auto,
    Theta,
    Phi,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum energy for a throughput demand (primal-dual).
    PdEnergy {
        /// Throughput demand; defaults to the instance's `demand`.
        #[arg(long, value_parser = parse_scalar)]
        demand: Option<Scalar>,
        #[command(flatten)]
        common: Common,
    },
    /// Maximum throughput within an energy budget (bisection over the demand).
    PdThroughput {
        /// Energy budget; defaults to the instance's `budget`.
        #[arg(long, value_parser = parse_scalar)]
        budget: Option<Scalar>,
        /// Relative slack allowed on the budget.
        #[arg(long, value_parser = parse_scalar, default_value = "1/100")]
        eps: Scalar,
        #[command(flatten)]
        common: Common,
    },
    /// Exact maximum throughput for equal-volume jobs on identical machines.
    DpEqual {
        #[arg(long, value_parser = parse_scalar)]
        budget: Option<Scalar>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact maximum throughput for agreeable jobs on identical machines.
    DpAgreeable {
        #[arg(long, value_parser = parse_scalar)]
        budget: Option<Scalar>,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive reference: preemptive optimum energy for `--demand`, or the
    /// non-preemptive optimum throughput for `--budget` on a time grid.
    Oracle {
        #[arg(long, value_parser = parse_scalar, conflicts_with = "budget")]
        demand: Option<Scalar>,
        #[arg(long, value_parser = parse_scalar)]
        budget: Option<Scalar>,
        #[arg(long, value_enum, default_value = "auto")]
        grid: GridChoice,
        #[command(flatten)]
        common: Common,
    },
    /// Generate an instance.
    Gen {
        /// agreeable, equal-volume, knapsack or unrelated.
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        jobs: usize,
        #[arg(long, default_value_t = 1)]
        machines: usize,
        #[arg(long, default_value_t = 3)]
        alpha: u32,
        #[arg(long, default_value_t = 10)]
        horizon: u64,
        #[arg(long, default_value_t = 3)]
        max_volume: u64,
        #[arg(long, default_value_t = 3)]
        max_weight: u64,
        /// Common volume of equal-volume instances.
        #[arg(long, value_parser = parse_scalar, default_value = "1")]
        volume: Scalar,
        /// Knapsack items, `value:size,value:size,...`.
        #[arg(long)]
        items: Option<String>,
        /// Knapsack capacity, used as the energy budget.
        #[arg(long, value_parser = parse_scalar)]
        capacity: Option<Scalar>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a result file: plan, energy, throughput and dual certificate.
    Verify { result: PathBuf },
}

fn parse_scalar(text: &str) -> Result<Scalar, String> {
    scalar::parse(text).map_err(|e| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DemandInfeasible { .. } => EXIT_INFEASIBLE,
            Error::Invariant(_) | Error::InvalidPlan(_) | Error::NegativeProfile => EXIT_INVARIANT,
            _ => EXIT_BAD_INPUT,
        };
        Self::new(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Refused(_) => Self::new(EXIT_ORACLE_REFUSED, e.to_string()),
            OracleError::Core(inner) => inner.into(),
        }
    }
}

/// What a solver run produced.
struct Run {
    /// JSON document to emit.
    json: String,
    row: CsvRow,
    /// Non-zero when the run succeeded but the target was out of reach.
    code: i32,
}

#[derive(Serialize)]
struct OracleReport {
    solver: String,
    instance_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    demand: Option<Rat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<Rat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_points: Option<usize>,
    /// Minimum energy (demand mode), `null` when no subset reaches the demand.
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<Option<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    throughput: Option<u64>,
    wall_ms: f64,
}

fn alpha_text(file: &InstanceFile) -> String {
    match file.alpha {
        speedscale::io::Alpha::Integer(a) => a.to_string(),
        speedscale::io::Alpha::Real(a) => a.to_string(),
    }
}

fn row(name: &Path, solver: &str, file: &InstanceFile, instance: &Instance, target: &Scalar) -> CsvRow {
    CsvRow {
        instance: name.display().to_string(),
        solver: solver.into(),
        n: instance.len(),
        m: instance.machines(),
        alpha: alpha_text(file),
        demand_or_budget: scalar::format(target),
        throughput: 0,
        energy: String::new(),
        iterations: String::new(),
        ms: String::new(),
    }
}

fn required(value: &Option<Scalar>, fallback: &Option<Rat>, what: &str) -> Result<Scalar, Failure> {
    value
        .clone()
        .or_else(|| fallback.as_ref().map(|r| r.0.clone()))
        .ok_or_else(|| {
            Failure::new(
                EXIT_BAD_INPUT,
                format!("no {what}: pass --{what} or set `{what}` in the instance"),
            )
        })
}

fn finish_result(mut result: ResultFile, mut csv: CsvRow, started: Instant, code: i32) -> Run {
    let ms = started.elapsed().as_secs_f64() * 1e3;
    result.wall_ms = ms;
    csv.throughput = result.throughput;
    csv.energy = result.energy.clone();
    csv.iterations = result.iterations.map(|i| i.to_string()).unwrap_or_default();
    csv.ms = format!("{ms:.3}");
    Run {
        json: result.write(),
        row: csv,
        code,
    }
}

fn run_one(command: &Command, path: &Path, float: bool) -> Result<Run, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new(EXIT_BAD_INPUT, format!("{}: {e}", path.display())))?;
    let (file, instance) = read_instance(&text, float)?;
    let started = Instant::now();
    match command {
        Command::PdEnergy { demand, .. } => {
            let demand = required(demand, &file.demand, "demand")?;
            let solution = solve(&instance, &demand)?;
            let mut result = ResultFile::new("pd-energy", &file, &instance, &solution.plan, &solution.energy)
                .with_certificate(&instance, &solution);
            result.demand = Some(Rat(demand.clone()));
            let csv = row(path, "pd-energy", &file, &instance, &demand);
            Ok(finish_result(result, csv, started, EXIT_OK))
        }
        Command::PdThroughput { budget, eps, .. } => {
            let budget = required(budget, &file.budget, "budget")?;
            let out = maximize_throughput(&instance, &budget, eps)?;
            let solution = &out.solution;
            let mut result = ResultFile::new("pd-throughput", &file, &instance, &solution.plan, &solution.energy)
                .with_certificate(&instance, solution);
            result.budget = Some(Rat(budget.clone()));
            result.eps = Some(Rat(eps.clone()));
            result.demand = Some(Rat(out.demand.clone()));
            result.iterations = Some(out.iterations);
            result.status = Some(out.status.as_str().into());
            let code = if out.status == Status::BudgetTooSmall {
                EXIT_INFEASIBLE
            } else {
                EXIT_OK
            };
            let csv = row(path, "pd-throughput", &file, &instance, &budget);
            Ok(finish_result(result, csv, started, code))
        }
        Command::DpEqual { budget, .. } | Command::DpAgreeable { budget, .. } => {
            let budget = required(budget, &file.budget, "budget")?;
            let (name, out) = match command {
                Command::DpEqual { .. } => ("dp-equal", solve_equal(&instance, &budget)?),
                _ => ("dp-agreeable", solve_agreeable(&instance, &budget)?),
            };
            let mut result = ResultFile::new(name, &file, &instance, &out.plan, &out.energy);
            result.budget = Some(Rat(budget.clone()));
            let csv = row(path, name, &file, &instance, &budget);
            Ok(finish_result(result, csv, started, EXIT_OK))
        }
        Command::Oracle {
            demand, budget, grid, ..
        } => run_oracle(path, &file, &instance, demand, budget, *grid, started),
        Command::Gen { .. } | Command::Verify { .. } => unreachable!("not an instance command"),
    }
}

fn run_oracle(
    path: &Path,
    file: &InstanceFile,
    instance: &Instance,
    demand: &Option<Scalar>,
    budget: &Option<Scalar>,
    grid: GridChoice,
    started: Instant,
) -> Result<Run, Failure> {
    let limits = OracleBudget::default();
    let mut report = OracleReport {
        solver: String::new(),
        instance_digest: file.digest(),
        demand: None,
        budget: None,
        grid_points: None,
        energy: None,
        throughput: None,
        wall_ms: 0.0,
    };
    let use_demand = demand.is_some() || (budget.is_none() && file.budget.is_none() && file.demand.is_some());
    let (mut csv, code) = if use_demand {
        let demand = required(demand, &file.demand, "demand")?;
        let energy = opt_preemptive(instance, &demand, &limits)?;
        report.solver = "oracle-preemptive".into();
        report.demand = Some(Rat(demand.clone()));
        report.energy = Some(energy.as_ref().map(scalar::format));
        let code = if energy.is_some() { EXIT_OK } else { EXIT_INFEASIBLE };
        let mut csv = row(path, "oracle-preemptive", file, instance, &demand);
        csv.energy = energy.as_ref().map(scalar::format).unwrap_or_else(|| "inf".into());
        (csv, code)
    } else {
        let budget = required(budget, &file.budget, "budget")?;
        let use_theta = match grid {
            GridChoice::Theta => true,
            GridChoice::Phi => false,
            GridChoice::Auto => instance.is_equal_volume(),
        };
        let points = if use_theta {
            theta_grid(instance)
        } else {
            phi_grid(instance)
        };
        let weight = opt_nonpreemptive(instance, &budget, &points, &limits)?;
        report.solver = "oracle-nonpreemptive".into();
        report.budget = Some(Rat(budget.clone()));
        report.grid_points = Some(points.len());
        report.throughput = Some(weight);
        let mut csv = row(path, "oracle-nonpreemptive", file, instance, &budget);
        csv.throughput = weight;
        (csv, EXIT_OK)
    };
    let ms = started.elapsed().as_secs_f64() * 1e3;
    report.wall_ms = ms;
    csv.ms = format!("{ms:.3}");
    Ok(Run {
        json: serde_json::to_string_pretty(&report).expect("reports always serialize"),
        row: csv,
        code,
    })
}

/// Input files, expanding directories to their `*.json` entries in name order.
fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| Failure::new(EXIT_BAD_INPUT, format!("{}: {e}", input.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_BAD_INPUT, format!("{}: {e}", path.display())))
}

fn run_instances(command: &Command, common: &Common, stdout: &mut String, stderr: &mut String) -> i32 {
    let paths = match expand(&common.inputs) {
        Ok(p) => p,
        Err(f) => {
            stderr.push_str(&format!("error: {}\n", f.message));
            return f.code;
        }
    };
    let batch = paths.len() > 1;
    // independent runs, in parallel; output stays in input order
    let runs: Vec<Result<Run, Failure>> = paths.par_iter().map(|p| run_one(command, p, common.float)).collect();
    let mut code = EXIT_OK;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (path, run) in paths.iter().zip(runs) {
        let run = match run {
            Ok(run) => run,
            Err(f) => {
                stderr.push_str(&format!("error: {}: {}\n", path.display(), f.message));
                code = code.max(f.code);
                continue;
            }
        };
        code = code.max(run.code);
        let target = match (&common.out, batch) {
            (Some(dir), true) => {
                if let Err(e) = fs::create_dir_all(dir) {
                    stderr.push_str(&format!("error: {}: {e}\n", dir.display()));
                    return EXIT_BAD_INPUT;
                }
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Some(dir.join(format!("{stem}.result.json")))
            }
            (out, _) => out.clone(),
        };
        match target {
            Some(file) => {
                if let Err(f) = write_file(&file, &(run.json.clone() + "\n")) {
                    stderr.push_str(&format!("error: {}\n", f.message));
                    return f.code;
                }
            }
            None if !common.csv => {
                stdout.push_str(&run.json);
                stdout.push('\n');
            }
            None => {}
        }
        if common.csv {
            writer.serialize(&run.row).expect("CSV rows always serialize");
        }
    }
    if common.csv {
        let bytes = writer.into_inner().expect("in-memory writer");
        stdout.push_str(&String::from_utf8(bytes).expect("CSV of UTF-8 fields"));
    }
    code
}

fn run_gen(command: &Command, stdout: &mut String) -> Result<i32, Failure> {
    let Command::Gen {
        kind,
        seed,
        jobs,
        machines,
        alpha,
        horizon,
        max_volume,
        max_weight,
        volume,
        items,
        capacity,
        out,
    } = command
    else {
        unreachable!()
    };
    let kind: GenKind = kind.parse()?;
    let params = GenParams {
        jobs: *jobs,
        machines: *machines,
        alpha: *alpha,
        horizon: *horizon,
        max_volume: *max_volume,
        max_weight: *max_weight,
        volume: volume.clone(),
        items: match items {
            Some(text) => parse_items(text)?,
            None if kind == GenKind::Knapsack => {
                return Err(Failure::new(EXIT_BAD_INPUT, "knapsack instances need --items"))
            }
            None => Vec::new(),
        },
        capacity: capacity.clone().unwrap_or_else(scalar::zero),
    };
    let text = generate(kind, *seed, &params)?.write() + "\n";
    match out {
        Some(path) => write_file(path, &text)?,
        None => stdout.push_str(&text),
    }
    Ok(EXIT_OK)
}

fn run_verify(path: &Path, stdout: &mut String) -> Result<i32, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new(EXIT_BAD_INPUT, format!("{}: {e}", path.display())))?;
    let result = ResultFile::parse(&text)?;
    let report = result.verify()?;
    if report.is_ok() {
        stdout.push_str(&format!("ok: {} result verified\n", result.solver));
        Ok(EXIT_OK)
    } else {
        Err(Failure::new(EXIT_INVARIANT, report.problems.join("; ")))
    }
}

/// Runs the command line and returns `(exit code, stdout, stderr)`.
pub fn run<I, T>(argv: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                (code, text, String::new())
            } else {
                (code, String::new(), text)
            };
        }
    };
    let (mut stdout, mut stderr) = (String::new(), String::new());
    let code = match &cli.command {
        Command::PdEnergy { common, .. }
        | Command::PdThroughput { common, .. }
        | Command::DpEqual { common, .. }
        | Command::DpAgreeable { common, .. }
        | Command::Oracle { common, .. } => run_instances(&cli.command, common, &mut stdout, &mut stderr),
        Command::Gen { .. } => run_gen(&cli.command, &mut stdout).unwrap_or_else(|f| {
            stderr.push_str(&format!("error: {}\n", f.message));
            f.code
        }),
        Command::Verify { result } => run_verify(result, &mut stdout).unwrap_or_else(|f| {
            stderr.push_str(&format!("error: {}\n", f.message));
            f.code
        }),
    };
    (code, stdout, stderr)
}
