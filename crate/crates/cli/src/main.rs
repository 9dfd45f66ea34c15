use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rbppm::bench::{self, BenchPlan, SolverSpec};
use rbppm::diagnostics::{self, DiagMode};
use rbppm::{OracleMode, Point, ProblemSpec, SolverConfig, Trace};

#[derive(Parser)]
#[command(name = "rbppm", version, about = "Ball-proximal point benchmarks, diagnostics and trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a benchmark plan as JSON.
    Plan {
        /// Start from the full quadratic grid (n = 100..1000, 13 solvers).
        #[arg(long)]
        standard: bool,
        /// Restrict to these dimensions (comma separated).
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value = "results")]
        output_dir: PathBuf,
    },
    /// Run every cell of a plan and print the table.
    Run {
        #[arg(long)]
        plan: PathBuf,
        /// Override the plan's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render the table for a results directory.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Solve one problem and write its trace as JSON.
    Solve {
        /// Generated quadratic dimension (ignored with --diag).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        eig_lo: f64,
        #[arg(long, default_value_t = 1000.0)]
        eig_hi: f64,
        /// Diagonal quadratic with these eigenvalues instead of a generated one.
        #[arg(long, value_delimiter = ',')]
        diag: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting point; drawn from the seed when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Vec<f64>,
        /// broximal-f, broximal-a, broximal-p, proximal or gradient.
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        param: Option<f64>,
        #[arg(long, value_enum, default_value_t = Oracle::Inexact)]
        oracle: Oracle,
        #[arg(long, default_value_t = 1e-6)]
        eps_opt: f64,
        /// Keep inner iterates for `traj`.
        #[arg(long)]
        inner: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-iteration CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Emit the outer/inner trajectory CSV of a 2-D trace.
    Traj {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a trace against the convergence theory.
    Diag {
        #[arg(long)]
        trace: PathBuf,
        /// Defaults to the oracle mode recorded in the trace.
        #[arg(long, value_enum)]
        mode: Option<Oracle>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Exact,
    Inexact,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn read_trace(path: &PathBuf) -> AnyResult<Trace> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Trace::from_json(&text)?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> AnyResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn print_ratios(rows: &[bench::BenchRow]) {
    for (n, r) in bench::best_broximal_ratio(rows) {
        println!("n={n}: best ball-proximal #f / gradient #f = {r:.3}");
    }
}

fn run(cli: Cli) -> AnyResult<ExitCode> {
    match cli.command {
        Command::Plan {
            standard,
            dims,
            output_dir,
        } => {
            if !standard {
                return Err("only --standard plans can be generated; write custom plans by hand".into());
            }
            let mut plan = BenchPlan::standard(output_dir);
            if !dims.is_empty() {
                plan.dims = dims;
            }
            println!("{}", plan.to_json()?);
        }
        Command::Run {
            plan,
            output_dir,
            workers,
        } => {
            let text = fs::read_to_string(&plan).map_err(|e| format!("{}: {e}", plan.display()))?;
            let mut plan = BenchPlan::from_json(&text)?;
            if let Some(dir) = output_dir {
                plan.output_dir = dir;
            }
            if workers.is_some() {
                plan.workers = workers;
            }
            let rows = bench::run_plan(&plan)?;
            print!("{}", bench::emit_table(&rows)?);
            print_ratios(&rows);
            let errors: Vec<_> = rows.iter().filter_map(|r| r.error.as_ref()).collect();
            for e in &errors {
                eprintln!("run failed: {e}");
            }
            println!("wrote {}", plan.output_dir.display());
            if !errors.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Table { input } => {
            let rows = bench::read_rows(&input)?;
            print!("{}", bench::emit_table(&rows)?);
            print_ratios(&rows);
        }
        Command::Solve {
            dim,
            eig_lo,
            eig_hi,
            diag,
            seed,
            start,
            algorithm,
            param,
            oracle,
            eps_opt,
            inner,
            out,
            csv,
        } => {
            let spec = if diag.is_empty() {
                ProblemSpec::Quadratic {
                    dim,
                    eig_lo,
                    eig_hi,
                    seed,
                }
            } else {
                ProblemSpec::DiagonalQuadratic { eigenvalues: diag }
            };
            let problem = spec.build()?;
            let solver = SolverSpec::new(&algorithm, param);
            solver.validate()?;
            let cfg = SolverConfig {
                eps_opt,
                oracle: match oracle {
                    Oracle::Exact => OracleMode::Exact,
                    Oracle::Inexact => OracleMode::Inexact,
                },
                record_inner_points: inner,
                start: (!start.is_empty()).then(|| Point::new(start)),
                ..Default::default()
            };
            let trace = solver.run(&problem, &cfg, seed)?;
            fs::write(&out, trace.to_json()?)?;
            if let Some(csv) = csv {
                fs::write(csv, trace.to_csv())?;
            }
            let last = trace.last().expect("nonempty trace");
            println!(
                "{}: {:?} after {} outer iterations, {} evaluations, f = {:e}, |grad| = {:e}",
                trace.method.label(),
                trace.status,
                trace.outer_iterations(),
                trace.f_evals(),
                last.f,
                last.grad_norm
            );
        }
        Command::Traj { trace, out } => {
            let trace = read_trace(&trace)?;
            emit(out.as_ref(), &bench::emit_trajectory(&trace)?)?;
        }
        Command::Diag { trace, mode, json } => {
            let trace = read_trace(&trace)?;
            let problem = trace
                .problem_spec
                .as_ref()
                .ok_or("trace carries no problem spec; cannot rebuild the problem")?
                .build()?;
            let mode = match mode {
                Some(Oracle::Exact) => DiagMode::Exact,
                Some(Oracle::Inexact) => DiagMode::Inexact,
                None => match trace.meta.oracle_mode {
                    OracleMode::Exact => DiagMode::Exact,
                    OracleMode::Inexact => DiagMode::Inexact,
                },
            };
            let report = diagnostics::evaluate(&trace, &problem, mode)?;
            if json {
                println!("{}", report.to_json()?);
            } else {
                print!("{}", report.render_table());
            }
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
