use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::Args;
use lms_core::model::{generate_problem, GeneratorConfig, MIN_POINTS};
use lms_core::solver::{solve_problem, SolveStatus};

use crate::{io_err, Failure, SolverArgs};

pub const BENCH_HEADER: &str = "n,N,m,K,seed,status,iters,time_ms,final_F,cut_fraction,beta_zero";

#[derive(Args)]
pub(crate) struct BenchArgs {
    /// Point counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Subset counts, comma separated and ascending; 1 is classical LM.
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    /// Generator seeds, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// Write the run table here instead of standard output.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

struct Row {
    n: usize,
    k: usize,
    time_ms: f64,
    converged: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of ln y against ln x.
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn validate(args: &BenchArgs) -> Result<(), Failure> {
    if args.ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--ks must be strictly ascending".into()));
    }
    if args.ks.contains(&0) {
        return Err(Failure::Usage("--ks entries must be at least 1".into()));
    }
    if let Some(&n) = args.sizes.iter().find(|&&n| n < MIN_POINTS) {
        return Err(Failure::Usage(format!("size {n} is below the minimum of {MIN_POINTS}")));
    }
    args.solver
        .config(args.ks[0])
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))
}

pub(crate) fn run(args: &BenchArgs) -> Result<u8, Failure> {
    validate(args)?;
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    let mut rows = Vec::new();
    let beta_zero = args.solver.beta_zero;
    for &n in &args.sizes {
        for &seed in &args.seeds {
            let problem = match generate_problem(n, seed, &GeneratorConfig::default()) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("n={n} seed={seed}: {e}");
                    for &k in &args.ks {
                        let _ = writeln!(csv, "{n},{},,{k},{seed},generate_error,0,NaN,NaN,NaN,{beta_zero}", 2 * n);
                    }
                    continue;
                }
            };
            let m = problem.n_residuals();
            for &k in &args.ks {
                let cfg = args.solver.config(k);
                match solve_problem(&problem, &cfg) {
                    Ok((partition, _, rep)) => {
                        let _ = writeln!(
                            csv,
                            "{n},{},{m},{k},{seed},{},{},{:.3},{:e},{:.6},{beta_zero}",
                            2 * n,
                            rep.status,
                            rep.iterations(),
                            rep.elapsed_ms,
                            rep.final_f,
                            partition.cut_fraction()
                        );
                        rows.push(Row {
                            n,
                            k,
                            time_ms: rep.elapsed_ms,
                            converged: rep.status == SolveStatus::Converged,
                        });
                    }
                    Err(e) => {
                        eprintln!("n={n} K={k} seed={seed}: {e}");
                        let _ = writeln!(csv, "{n},{},{m},{k},{seed},error,0,NaN,NaN,NaN,{beta_zero}", 2 * n);
                    }
                }
            }
        }
    }
    match &args.out_csv {
        Some(path) => std::fs::write(path, &csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(io_err)?,
    }
    let summary = summarize(&args.sizes, &args.ks, &rows);
    if args.out_csv.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(0)
}

/// Best K per size by median time over converged runs, the speedup over
/// K=1 when it was run, and the log-log slope of best time against N.
fn summarize(sizes: &[usize], ks: &[usize], rows: &[Row]) -> String {
    let mut out = String::from("n,N,best_K,median_time_ms,ratio_to_K1\n");
    let mut best_points = Vec::new();
    for &n in sizes {
        let medians: Vec<(usize, f64)> = ks
            .iter()
            .filter_map(|&k| {
                let times: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.n == n && r.k == k && r.converged)
                    .map(|r| r.time_ms)
                    .collect();
                (!times.is_empty()).then(|| (k, median(times)))
            })
            .collect();
        let Some(&(k, t)) = medians.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
            let _ = writeln!(out, "{n},{},,NaN,NaN", 2 * n);
            continue;
        };
        let ratio = medians.iter().find(|m| m.0 == 1).map_or(f64::NAN, |m| t / m.1);
        let _ = writeln!(out, "{n},{},{k},{t:.3},{ratio:.4}", 2 * n);
        best_points.push(((2 * n) as f64, t));
    }
    if best_points.len() >= 2 {
        let _ = writeln!(out, "log-log slope of best time against N: {:.3}", log_log_slope(&best_points));
    }
    out
}
