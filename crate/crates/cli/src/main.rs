//! `lms`: generate adjustment networks, solve them with the splitted
//! Levenberg-Marquardt method and benchmark it against classical LM.

mod bench;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lms_core::model::{generate_problem, read_problem, write_problem, GeneratorConfig, Problem, MIN_POINTS};
use lms_core::partition::{build_variable_graph, partition_problem, partition_stats};
use lms_core::solver::{assemble_blocks, solve_problem, BlockLayout, MuRule, SolveStatus, SolverConfig};
use lms_core::sparse::FactorStrategy;

#[derive(Parser)]
#[command(name = "lms", version, about = "Splitted Levenberg-Marquardt solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic 2-D adjustment network.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition and solve a problem file.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the per-iteration CSV log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Sweep sizes, K and seeds over generated problems.
    Bench(bench::BenchArgs),
    /// Partition quality and coupling strength at the initial guess.
    PartitionStats {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Partitioner seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FactorArg {
    Auto,
    Dense,
    Sparse,
    Cg,
}

/// Overrides of the solver defaults.
#[derive(Args, Clone)]
pub(crate) struct SolverArgs {
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    ell0: Option<f64>,
    #[arg(long)]
    ell_min: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Force the right-hand-side correction to zero.
    #[arg(long)]
    beta_zero: bool,
    /// Record the linear-system residual of every direction.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long, value_parser = parse_mu_rule)]
    mu_rule: Option<MuRule>,
    #[arg(long, value_enum)]
    factor: Option<FactorArg>,
    /// Partitioner and ordering seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_mu_rule(s: &str) -> Result<MuRule, String> {
    s.parse()
}

impl SolverArgs {
    pub(crate) fn config(&self, k: usize) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            k,
            b: self.b.unwrap_or(d.b),
            c: self.c.unwrap_or(d.c),
            eta: self.eta.unwrap_or(d.eta),
            ell0: self.ell0.unwrap_or(d.ell0),
            ell_min: self.ell_min.unwrap_or(d.ell_min),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            seed: self.seed,
            mu_rule: self.mu_rule.unwrap_or(d.mu_rule),
            beta_zero: self.beta_zero,
            diagnostics: self.diagnostics,
            factor: match self.factor {
                None => d.factor,
                Some(FactorArg::Auto) => FactorStrategy::Auto,
                Some(FactorArg::Dense) => FactorStrategy::Dense,
                Some(FactorArg::Sparse) => FactorStrategy::SparseCholesky,
                Some(FactorArg::Cg) => FactorStrategy::ConjugateGradient,
            },
            check_assembly: false,
            ..d
        }
    }
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Io(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 4,
        }
    }
}

pub(crate) fn io_err(e: impl fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

fn load(path: &PathBuf) -> Result<Problem, Failure> {
    read_problem(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn check_k(k: usize, problem: &Problem) -> Result<(), Failure> {
    if k == 0 || k > problem.n_points() {
        return Err(Failure::Usage(format!("--k must be in 1..={}", problem.n_points())));
    }
    Ok(())
}

fn generate(n: usize, seed: u64, out: &PathBuf) -> Result<u8, Failure> {
    if n < MIN_POINTS {
        return Err(Failure::Usage(format!("--n must be at least {MIN_POINTS}")));
    }
    let problem = generate_problem(n, seed, &GeneratorConfig::default()).map_err(io_err)?;
    write_problem(&problem, out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    println!("n: {}", problem.n_points());
    println!("m: {}", problem.n_residuals());
    println!("average degree: {:.4}", build_variable_graph(&problem).average_degree());
    Ok(0)
}

/// Value below which a fraction `q` of the sorted values lie.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let i = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[i - 1]
}

fn run_solve(path: &PathBuf, k: usize, args: &SolverArgs, log: Option<&PathBuf>) -> Result<u8, Failure> {
    let problem = load(path)?;
    check_k(k, &problem)?;
    let cfg = args.config(k);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let (partition, partition_ms, rep) = solve_problem(&problem, &cfg).map_err(io_err)?;
    if let Some(log) = log {
        std::fs::write(log, rep.log_csv()).map_err(|e| Failure::Io(format!("{}: {e}", log.display())))?;
    }
    println!("status: {}", rep.status);
    println!("iterations: {}", rep.iterations());
    println!("final F: {:e}", rep.final_f);
    let [f1, f2, f3] = rep.residual_fractions;
    println!("within 1/2/3 sigma: {f1:.4} {f2:.4} {f3:.4}");
    if let Ok(r) = problem.residuals(&rep.final_x) {
        let mut abs: Vec<f64> = r.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        println!(
            "|r| percentiles 68/95/99.5: {:.4} {:.4} {:.4}",
            percentile(&abs, 0.68),
            percentile(&abs, 0.95),
            percentile(&abs, 0.995)
        );
    }
    if let Ok(stats) = partition_stats(&partition, &problem, &rep.final_x) {
        println!("coupling objective: {:e}", stats.phi);
    }
    println!("partition time ms: {partition_ms:.1}");
    println!("solve time ms: {:.1}", rep.elapsed_ms);
    if let Some(m) = &rep.message {
        eprintln!("{m}");
    }
    Ok(match rep.status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIters | SolveStatus::LineSearchFailure => 3,
        SolveStatus::NumericalError => 4,
    })
}

fn run_partition_stats(path: &PathBuf, k: usize, seed: u64) -> Result<u8, Failure> {
    let problem = load(path)?;
    check_k(k, &problem)?;
    let partition = partition_problem(&problem, k, seed).map_err(io_err)?;
    let x = problem.initial_guess();
    let stats = partition_stats(&partition, &problem, x).map_err(io_err)?;
    let (r, j) = problem.evaluate(x).map_err(io_err)?;
    let layout = BlockLayout::new(&problem, &partition, seed);
    let bs = assemble_blocks(&j, &r, &layout).map_err(io_err)?;
    let b = bs.b().frobenius_norm();
    let full = (bs.h_frobenius().powi(2) + b * b).sqrt();
    let ratio = if full > 0.0 { b / full } else { 0.0 };
    println!("subset,points,internal_residuals");
    for s in 0..stats.k {
        println!("{s},{},{}", stats.subset_sizes[s], stats.internal_counts[s]);
    }
    println!("coupling residuals: {}", stats.coupling_count);
    println!("cut fraction: {:.6}", stats.cut_fraction);
    println!("max subset size over ideal: {:.4}", stats.max_balance);
    println!("coupling ratio |B|_F/|JtJ|_F: {ratio:.6e}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { n, seed, out } => generate(*n, *seed, out),
        Command::Solve { problem, k, solver, log } => run_solve(problem, *k, solver, log.as_ref()),
        Command::Bench(args) => bench::run(args),
        Command::PartitionStats { problem, k, seed } => run_partition_stats(problem, *k, *seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
