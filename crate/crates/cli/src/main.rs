use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rasc_core::ilp::write_lp;
use rasc_core::{
    build_link_table, build_p1, build_p2, generate_manhattan, place_hotspots_seeded, plan_fsc, run_sweep,
    solve, validate_solution, Error, ExperimentConfig, IlpModel, Scenario, Solution, SolveStatus,
};

/// Exit codes. clap reports usage errors with 2 as well.
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_INVALID: u8 = 5;

#[derive(Parser)]
#[command(name = "rasc", version, about = "Plan mmWave backhaul with robotic aerial small cells")]
struct Cli {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    P1,
    P2,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario with random hotspots as JSON.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        flows: usize,
        /// Demand of every hotspot, bps/Hz.
        #[arg(long, default_value_t = 3.0)]
        gamma: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance exactly.
    Solve {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        flows: usize,
        #[arg(long, default_value_t = 3.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = ProblemArg::P1)]
        problem: ProblemArg,
        /// Solve this scenario file instead of drawing hotspots.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Directory for scenario.json, model.json, model.lp, solution.json
        /// and solution.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Plan the fixed-small-cell layout for one demand level, or print the
    /// count table over the configured levels.
    Baseline {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the Monte Carlo sweep.
    Sweep {
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory (default `results`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Format of the summary printed to stdout.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check a solution against a model written by `solve --out`.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::Numerical(_) | Error::EnumerationBudget(_) => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", p.display()))),
        None => Ok(ExperimentConfig::default()),
    }
}

fn draw(cfg: &ExperimentConfig, seed: u64, flows: usize, gamma: f64) -> Result<Scenario, Failure> {
    let grid = generate_manhattan(&cfg.scenario)?;
    Ok(place_hotspots_seeded(&grid, flows, gamma, &cfg.hotspots, seed)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Generate { seed, flows, gamma, out } => {
            let scenario = draw(&cfg, seed, flows, gamma)?;
            match out {
                Some(path) => scenario.save(&path)?,
                None => writeln!(stdout, "{}", scenario.to_json()?)?,
            }
        }
        Command::Solve { seed, flows, gamma, problem, scenario, out, format } => {
            let scenario = match scenario {
                Some(p) => Scenario::load(&p)?,
                None => draw(&cfg, seed, flows, gamma)?,
            };
            let links = build_link_table(&scenario, &cfg.channel)?;
            let demands: Vec<f64> = scenario.hotspots.iter().map(|h| h.demand).collect();
            let n_rascs = match cfg.sweep.n_rascs {
                0 => scenario.lampposts().count(),
                n => n,
            };
            let model = match problem {
                ProblemArg::P1 => build_p1(&scenario, &links, &demands, n_rascs)?,
                ProblemArg::P2 => {
                    build_p2(&scenario, &links, &demands, n_rascs, &cfg.energy, cfg.sweep.energy_weight)?
                }
            };
            let solution = solve(&model, &cfg.solver)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                scenario.save(&dir.join("scenario.json"))?;
                fs::write(dir.join("model.json"), serde_json::to_string(&model)?)?;
                write_lp(&model, fs::File::create(dir.join("model.lp"))?)?;
                fs::write(dir.join("solution.json"), serde_json::to_string_pretty(&solution)?)?;
                solution.write_csv(fs::File::create(dir.join("solution.csv"))?)?;
            }
            match format {
                Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&solution)?)?,
                Format::Csv => solution.write_csv(&mut stdout)?,
            }
            match solution.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => return Err(fail(EXIT_INFEASIBLE, "instance is infeasible")),
                SolveStatus::NodeLimit => {
                    return Err(fail(EXIT_SOLVER, "node limit reached before optimality was proven"))
                }
            }
        }
        Command::Baseline { gamma, format } => {
            let grid = generate_manhattan(&cfg.scenario)?;
            let links = build_link_table(&grid, &cfg.channel)?;
            match gamma {
                Some(g) => {
                    let plan = plan_fsc(&grid, &links, &cfg.channel, g, &cfg.fsc)?;
                    match format {
                        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&plan)?)?,
                        Format::Csv => rasc_core::baseline::write_count_csv(&plan.counts, &mut stdout)?,
                    }
                }
                None => {
                    let table =
                        rasc_core::fsc_count_table(&grid, &links, &cfg.channel, &cfg.sweep.gammas, &cfg.fsc)?;
                    match format {
                        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&table)?)?,
                        Format::Csv => rasc_core::baseline::write_count_csv(&table, &mut stdout)?,
                    }
                }
            }
        }
        Command::Sweep { seed, out, format } => {
            let mut cfg = cfg;
            if let Some(s) = seed {
                cfg.sweep.master_seed = s;
            }
            let dir = out.or_else(|| cfg.sweep.out_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let result = run_sweep(&cfg)?;
            result.write_outputs(&dir)?;
            match format {
                Format::Csv => result.write_summary_csv(&mut stdout)?,
                Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&result.cells)?)?,
            }
        }
        Command::Validate { model, solution } => {
            let model = IlpModel::from_json(&fs::read_to_string(&model)?)?;
            let solution: Solution = serde_json::from_str(&fs::read_to_string(&solution)?)?;
            if solution.assignment.len() != model.num_vars() {
                return Err(fail(
                    EXIT_INVALID,
                    format!(
                        "solution has {} values but the model has {} columns",
                        solution.assignment.len(),
                        model.num_vars()
                    ),
                ));
            }
            let report = validate_solution(&model, &solution.assignment);
            if !report.passed() {
                for v in &report.violations {
                    writeln!(stdout, "{v}")?;
                }
                let first = &report.violations[0];
                return Err(fail(
                    EXIT_INVALID,
                    format!("{} violation(s), first: {first}", report.violations.len()),
                ));
            }
            writeln!(stdout, "valid, objective {}", report.objective)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
